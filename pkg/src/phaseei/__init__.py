"""Self-supervised phase retrieval with translation equivariance."""

from .sensing import (
    ComplexImage,
    MeasurementBatch,
    SensingOperator,
    ShapeError,
    adjoint,
    forward,
    make_dataset,
    make_operator,
    synthesize_phase_image,
)
from .group_actions import ShiftTransform, apply, compose, inverse, sample_shifts
from .metrics import align_global_phase, cosine_similarity, recover_scale
from .losses import (
    LossValue,
    loss_ei,
    loss_mc_amplitude,
    loss_mc_intensity,
    loss_supervised,
    loss_total,
)
from .reconstructor import (
    PhaseReconstructor,
    ReconstructorConfig,
    backproject,
    load_checkpoint,
    reconstruct,
    save_checkpoint,
)
from .baseline_gd import GdConfig, solve
from .training import EvalReport, TrainConfig, evaluate, export, sweep_alpha, train

__version__ = "0.1.0"
