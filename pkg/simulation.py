"""Simulation file to run the full workflow locally and display output.

Generates a synthetic rater panel, builds its label distributions, runs a
cross-validation and prints the fold table.
"""

import os
import sys
import tempfile
from pathlib import Path

# Auto-inject src/ into pythonpath
sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

# Set a readable console logging format for the simulation
os.environ["DUAL_LDL_LOG_FORMAT"] = "console"
os.environ["DUAL_LDL_LOG_LEVEL"] = "WARNING"

from dual_ldl.cli import main  # noqa: E402


def run_simulation() -> int:
    print("\n" + "=" * 50)
    print("DUAL-LDL - LOCAL WORKFLOW SIMULATION")
    print("=" * 50 + "\n")

    with tempfile.TemporaryDirectory(prefix="dual_ldl_sim_") as tmp:
        root = Path(tmp)
        data, labels, cv = root / "data", root / "labels", root / "cv"

        print("[1] Generating a synthetic rater panel...")
        if main(["synth", "--n", "200", "--feature-dim", "8", "--output-dir", str(data)]):
            return 1

        print("\n[2] Building label distributions...")
        ratings = str(data / "ratings.csv")
        if main(["build-dist", "--ratings", ratings, "--output-dir", str(labels)]):
            return 1

        print("\n[3] Five-fold cross-validation (short schedule)...\n")
        status = main(
            [
                "crossval",
                "--ratings",
                str(data / "ratings.csv"),
                "--features",
                str(data / "features.csv"),
                "--epochs",
                "40",
                "--batch-size",
                "32",
                "--hidden",
                "32,32",
                "--lr",
                "0.003",
                "--output-dir",
                str(cv),
            ]
        )
        if status:
            return status

    print("\n" + "=" * 50)
    print("SIMULATION COMPLETE")
    print("=" * 50 + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(run_simulation())
