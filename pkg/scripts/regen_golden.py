"""Rewrite the checked-in two-arm reference golden report.

Run only when a change to the numerics is intended:

    python scripts/regen_golden.py
"""

from pathlib import Path

from piqfc.config import load_config
from piqfc.pipeline import run_pipeline
from piqfc.report import dumps_report

ROOT = Path(__file__).resolve().parents[1]
CONFIG = ROOT / "configs" / "two_arm_reference.ini"
GOLDEN = ROOT / "tests" / "golden" / "two_arm_reference_report.json"


def main() -> None:
    text = dumps_report(run_pipeline(load_config(CONFIG)))
    GOLDEN.write_text(text, encoding="utf-8")
    print(f"wrote {GOLDEN.relative_to(ROOT)} ({len(text)} bytes)")


if __name__ == "__main__":
    main()
