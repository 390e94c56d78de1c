#!/usr/bin/env python3
from __future__ import annotations

"""Run one experiment config through a CLI command.

Usage:
    python scripts/run_experiment.py asf --config configs/two_spin_reference.json
    python scripts/run_experiment.py memory-scan --config configs/finite_memory_scan.json --out results/scan
    python scripts/run_experiment.py simulate --config configs/two_spin_reference.json --threads 4
"""

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from nonmarkov_rb.cli.main import run


if __name__ == "__main__":
    sys.exit(run())
