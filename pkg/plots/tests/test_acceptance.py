"""Secondary acceptance: render the simulator's own artifacts.

The simulator is driven through its command line only (the documented
external interface); no core-package imports appear anywhere in this tool.
"""

import subprocess
import sys
from pathlib import Path

import pytest

from cfmm_plots.cli import main

REPO = Path(__file__).resolve().parents[2]
PRESET = REPO / "configs" / "cpmm_uniform_balanced.toml"


@pytest.fixture(scope="module")
def simulation_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("artifacts")
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "cfmmlab.cli",
            "simulate",
            "--config",
            str(PRESET),
            "--steps",
            "20000",
            "--out-dir",
            str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


def test_acceptance_11_renders_simulation_artifacts(simulation_artifacts, tmp_path):
    heatmap_png = tmp_path / "heatmap.png"
    series_png = tmp_path / "prices.png"
    code_h = main(
        [
            "reserve_heatmap",
            "--in",
            str(simulation_artifacts / "heatmap.csv"),
            "--out",
            str(heatmap_png),
        ]
    )
    code_p = main(
        [
            "price_series",
            "--in",
            str(simulation_artifacts / "trajectory.csv"),
            "--out",
            str(series_png),
        ]
    )
    ok = (
        code_h == 0
        and code_p == 0
        and heatmap_png.stat().st_size > 1024
        and series_png.stat().st_size > 1024
    )
    print(
        f"\n[ACCEPTANCE 11] {'PASS' if ok else 'FAIL'} "
        f"heatmap {heatmap_png.stat().st_size}B, series {series_png.stat().st_size}B"
    )
    assert ok


def test_acceptance_11_schema_violation_exits_nonzero(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,valid,header\n1,2,3,4\n")
    assert main(["reserve_heatmap", "--in", str(bad), "--out", str(tmp_path / "x.png")]) != 0
    assert main(["price_series", "--in", str(bad), "--out", str(tmp_path / "y.png")]) != 0
