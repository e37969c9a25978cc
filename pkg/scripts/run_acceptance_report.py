"""Run the acceptance module and print its PASS/FAIL lines.

    python scripts/run_acceptance_report.py
"""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", str(ROOT / "tests" / "test_acceptance.py"), "-q",
         "-p", "no:cacheprovider"],
        cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("PASS  ", "FAIL  "))]
    print("\n".join(lines))
    print(f"{sum(ln.startswith('PASS') for ln in lines)}/{len(lines)} criteria pass")
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
