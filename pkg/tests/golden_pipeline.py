"""Command sequence behind the golden files; also runnable to regenerate them.

    python3 tests/golden_pipeline.py
"""

from __future__ import annotations

import sys
from pathlib import Path

from masonry_sched.cli import main

HERE = Path(__file__).resolve().parent
CONFIGS = HERE.parent / "configs"
GOLDEN = HERE / "golden"
FIXTURES = {"one_brick": CONFIGS / "one_brick.toml", "five_brick": CONFIGS / "five_brick.toml"}
FILES = (
    "plan.json",
    "wall.svg",
    "model.mps",
    "schedule.json",
    "gantt.svg",
    "validation.json",
    "min_distance.csv",
    "events.log",
    "dmin.svg",
    "report.txt",
)


def run_pipeline(config: Path, out: Path) -> list[int]:
    out = Path(out)
    common = ["--config", str(config), "--out", str(out)]
    codes = [
        main(["plan", *common]),
        main(["export-mps", *common]),
        main(["schedule", *common]),
    ]
    sched = str(out / "schedule.json")
    codes += [
        main(["validate", sched, *common]),
        main(["simulate", sched, *common]),
        main(["report", sched, *common, "--trace", str(out / "min_distance.csv")]),
    ]
    (out / "positions.csv").unlink()  # large; determinism is checked separately
    return codes


if __name__ == "__main__":
    for name, cfg in FIXTURES.items():
        dest = GOLDEN / name
        dest.mkdir(parents=True, exist_ok=True)
        codes = run_pipeline(cfg, dest)
        if any(codes):
            sys.exit(f"{name}: exit codes {codes}")
        print(f"{name}: {', '.join(sorted(p.name for p in dest.iterdir()))}")
