"""Run the acceptance suite and print one line per criterion."""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"],
        cwd=ROOT, capture_output=True, text=True,
    )
    lines = proc.stdout.splitlines()
    start = next((i for i, line in enumerate(lines) if "acceptance criteria" in line), None)
    if start is None:
        print(proc.stdout + proc.stderr)
        return proc.returncode
    for line in lines[start + 1:]:
        if line.startswith("="):
            break
        print(line)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
