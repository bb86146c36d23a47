#!/usr/bin/env python3
"""Validates interchange JSONL files against schemas/interchange.schema.json,
including the index-range checks the schema cannot express.

    validate_interchange.py SCHEMA FILE...
"""

import json
import sys

import jsonschema


def range_errors(story):
    for k, s in enumerate(story["sentences"]):
        n = len(s["tokens"])
        for h, c, _ in s.get("dep_edges", []):
            if h >= n or c >= n:
                yield f"sentence {k}: edge ({h}, {c}) outside {n} tokens"
        for a, b, _ in (s.get("ner_spans") or []) + (s.get("constituency") or []):
            if a >= b or b > n:
                yield f"sentence {k}: span [{a}, {b}) outside {n} tokens"


def main():
    schema = json.load(open(sys.argv[1]))
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in sys.argv[2:]:
        with open(path) as f:
            for line_no, line in enumerate(f, 1):
                if not line.strip():
                    continue
                story = json.loads(line)
                errors = [e.message for e in validator.iter_errors(story)] + list(range_errors(story))
                for e in errors:
                    print(f"{path}:{line_no}: {e}")
                bad += len(errors)
    print("ok" if bad == 0 else f"{bad} errors")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
