"""Average spot price of a product pool under uniform endowment flow.

Runs the two shipped presets (balanced and skewed initial reserves) and
prints how far the time-averaged price lands from the clearing price
(1/2, 1/2). Artifacts (trajectory.csv, heatmap.csv, run.json) are written
under --out-dir for the plotting tool.
"""

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from cfmmlab.cli import main as cli_main  # noqa: E402

PRESETS = ["cpmm_uniform_balanced.toml", "cpmm_uniform_skewed.toml", "cpmm_uniform_mild_skew.toml"]


def run(out_root: Path, steps: int | None) -> int:
    for preset in PRESETS:
        out = out_root / preset.replace(".toml", "")
        argv = ["simulate", "--config", str(ROOT / "configs" / preset), "--out-dir", str(out)]
        if steps is not None:
            argv += ["--steps", str(steps)]
        code = cli_main(argv)
        if code != 0:
            return code
        payload = json.loads((out / "run.json").read_text())
        error = max(abs(v - 0.5) for v in payload["avg_price"])
        print(
            f"{preset:32s} steps={payload['steps']:>8d} "
            f"avg_price=({payload['avg_price'][0]:.5f},{payload['avg_price'][1]:.5f}) "
            f"|p_a - 1/2| = {error:.5f}"
        )
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/price_convergence")
    parser.add_argument("--steps", type=int, default=None, help="override preset horizons")
    args = parser.parse_args()
    sys.exit(run(Path(args.out_dir), args.steps))
