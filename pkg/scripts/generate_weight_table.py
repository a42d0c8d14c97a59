#!/usr/bin/env python3
"""
Print the GEOMETRIC nice-to-weight table as a Python tuple literal.

Usage: python scripts/generate_weight_table.py > /tmp/table.txt
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from scheduler.models import NICE_MAX, NICE_MIN  # noqa: E402
from scheduler.weights import geometric_weight  # noqa: E402


def main() -> None:
    print("GEOMETRIC_WEIGHTS = (")
    for start in range(NICE_MIN, NICE_MAX + 1, 5):
        row = [str(int(geometric_weight(n))) for n in range(start, start + 5)]
        print(f"    {', '.join(row)},  # {start} .. {start + 4}")
    print(")")


if __name__ == "__main__":
    main()
