"""Generate real data files through the simulation package's CLI.

The figure package only consumes documented file formats, so the fixtures
exercise the genuine producer: `python -m burstnet ...` as a subprocess.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest


def run_cli(*args: str) -> None:
    proc = subprocess.run([sys.executable, "-m", "burstnet", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("figdata")

    st_cfg = root / "st.json"
    st_cfg.write_text(json.dumps({
        "mode": "stochastic", "K": 2, "M": 2, "alpha": [0.4, 0.6],
        "rho": [1.0, 1.0], "beta": 3.0, "N": 400, "seed": 3, "T": 6.0,
        "p_grid": [0.004, 0.0075, 0.011], "init": "equilibrium"}))
    run_cli("simulate", "--config", str(st_cfg), "--out", str(root / "stoch"),
            "--min-burst", "1")

    mf_cfg = root / "mf.json"
    mf_cfg.write_text(json.dumps({
        "mode": "meanfield", "K": 2, "M": 3, "alpha": [0.2, 0.3, 0.5],
        "rho": [0.6, 1.1, 1.9], "beta": 2.5, "n_runs": 4, "seed": 9,
        "max_bursts": 8, "init": "random"}))
    run_cli("simulate", "--config", str(mf_cfg), "--out", str(root / "mf"))

    run_cli("phase-diagram", "--out", str(root / "phase"), "--m-list", "3",
            "--beta-min", "2.1", "--beta-max", "2.5", "--beta-steps", "4",
            "--n-ic", "60", "--seed", "5")
    return root
