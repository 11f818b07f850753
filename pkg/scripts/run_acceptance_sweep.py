"""Run the desk-scale sweep behind the acceptance suite's criteria 1-4.

6000 training images, 1000 test images, alpha in {0.2, 0.3, 0.5, 0.8, 1.0},
all three regimes, 15 epochs.  Resumable: completed cells are skipped, so the
script can be interrupted and relaunched.  Expect several hours on one CPU
core (base_channels=12 keeps the single-core runtime tractable; the
architecture is identical across regimes, so the compared gaps are
like-for-like).
"""

import sys
from pathlib import Path

from phaseei.cli import main

OUT = Path(__file__).resolve().parent.parent / "results" / "acceptance_sweep"

if __name__ == "__main__":
    main([
        "sweep",
        "--seed", "0",
        "--alphas", "0.2,0.3,0.5,0.8,1.0",
        "--regimes", "ss_amplitude,ss_intensity,supervised",
        "--train-count", "6000",
        "--test-count", "1000",
        "--epochs", "15",
        "--base-channels", "12",
        "--out", str(OUT),
        *sys.argv[1:],
    ])
