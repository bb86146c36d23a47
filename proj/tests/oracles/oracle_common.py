"""Helpers shared by the oracle scripts: frozen-file writing and checking."""

import argparse
import json
import math
import sys
from pathlib import Path

FROZEN = Path(__file__).resolve().parent / "frozen"


def close(a, b, tol=1e-12):
    if isinstance(a, float) or isinstance(b, float):
        return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k], tol) for k in a)
    return a == b


def parser(doc=None):
    ap = argparse.ArgumentParser(description=doc)
    ap.add_argument("--check", action="store_true", help="compare with the frozen file instead")
    return ap


def emit(name, data, args=None):
    """Writes frozen/<name>.json, or with --check compares against it."""
    if args is None:
        args = parser().parse_args()
    path = FROZEN / f"{name}.json"
    data = json.loads(json.dumps(data))
    if args.check:
        frozen = json.loads(path.read_text())
        if not close(frozen, data):
            print(f"{path.name}: recomputed values differ from the frozen file")
            sys.exit(1)
        print(f"{path.name}: ok")
        return
    FROZEN.mkdir(exist_ok=True)
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path}")
