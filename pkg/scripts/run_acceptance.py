#!/usr/bin/env python3
"""Run the acceptance suite and print one PASS/FAIL line per criterion."""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
args = [sys.executable, "-m", "pytest", "-q", "-rN", str(root / "tests" / "test_acceptance.py")] + sys.argv[1:]
sys.exit(subprocess.call(args, cwd=root))
