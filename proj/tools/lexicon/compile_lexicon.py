#!/usr/bin/env python3
"""Compile a lexicon snapshot (JSON) from WordNet 3.0 database files, a verb
class table and a name,gender,count CSV.

Only the noun neighborhood the corpus needs is kept: for every listed lemma its
first sense, the full hypernym chain to the root, and every synset one or two
hyponym edges below the synset the lemma generalizes to (two hops up). Each
synset keeps a single hypernym, its first listed one.

    compile_lexicon.py --wordnet DIR --verbs verb_classes.json \
        --nouns nouns.txt --gender gender.csv --out lexicon.json
"""

import argparse
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

GENDER_THRESHOLD = 0.8


class NounDB:
    def __init__(self, root: Path):
        self.words = {}
        self.hyper = {}
        self.children = defaultdict(list)
        self.index = {}
        with open(root / "index.noun", encoding="latin-1") as f:
            for line in f:
                if line.startswith("  "):
                    continue
                p = line.split()
                n_ptr = int(p[3])
                self.index[p[0]] = p[6 + n_ptr:]
        with open(root / "data.noun", encoding="latin-1") as f:
            for line in f:
                if line.startswith("  "):
                    continue
                p = line.split()
                off = p[0]
                n_words = int(p[3], 16)
                self.words[off] = [p[4 + 2 * i] for i in range(n_words)]
                i = 4 + 2 * n_words
                n_ptr = int(p[i])
                i += 1
                for _ in range(n_ptr):
                    sym, target, pos = p[i], p[i + 1], p[i + 2]
                    i += 4
                    if sym in ("@", "@i") and pos == "n" and off not in self.hyper:
                        self.hyper[off] = target
        for child, parent in self.hyper.items():
            self.children[parent].append(child)

    def name(self, off):
        lemma = self.words[off][0].lower()
        return f"{lemma}.n.{self.index[lemma].index(off) + 1:02d}"

    def chain(self, off):
        out = [off]
        while out[-1] in self.hyper:
            out.append(self.hyper[out[-1]])
        return out


def read_lines(path: Path):
    return [l.strip() for l in path.read_text().splitlines() if l.strip() and not l.startswith("#")]


def gender_table(path: Path):
    counts = defaultdict(lambda: [0.0, 0.0, 0.0])
    with open(path, newline="") as f:
        for row in csv.reader(f):
            if not row or row[0].strip().lower() == "name":
                continue
            name, g, n = row[0].strip().lower(), row[1].strip().lower(), float(row[2])
            c = counts[name]
            c[0] += n if g in ("m", "male", "masc") else 0
            c[1] += n if g in ("f", "female", "fem") else 0
            c[2] += n
    out = {}
    for name, (m, f, t) in sorted(counts.items()):
        out[name] = "masc" if t and m / t >= GENDER_THRESHOLD else "fem" if t and f / t >= GENDER_THRESHOLD else "unknown"
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wordnet", type=Path, required=True)
    ap.add_argument("--verbs", type=Path, required=True)
    ap.add_argument("--nouns", type=Path, required=True)
    ap.add_argument("--gender", type=Path)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()

    db = NounDB(args.wordnet)
    keep = set()
    lemma_index = {}
    for lemma in read_lines(args.nouns):
        if lemma not in db.index:
            sys.exit(f"lemma '{lemma}' has no noun sense")
        first = db.index[lemma][0]
        chain = db.chain(first)
        keep.update(chain)
        general = chain[min(2, len(chain) - 1)]
        for child in db.children[general]:
            keep.add(child)
            keep.update(db.children[child])
        lemma_index[lemma] = db.name(first)
    for off in list(keep):
        keep.update(db.chain(off))

    hypernyms = {db.name(o): db.name(db.hyper[o]) for o in sorted(keep) if o in db.hyper}
    for off in sorted(keep):
        lemma = db.words[off][0].lower()
        if db.index[lemma][0] == off:
            lemma_index.setdefault(lemma, db.name(off))

    verbs = json.loads(args.verbs.read_text())["classes"]
    verb_index = defaultdict(list)
    for cls, spec in verbs.items():
        for m in spec["members"]:
            verb_index[m].append(cls)

    snapshot = {
        "format": "e2s-lexicon",
        "version": 1,
        "source": "WordNet 3.0 noun subset; verb classes from tools/lexicon/verb_classes.json",
        "hypernyms": dict(sorted(hypernyms.items())),
        "hyponyms": {},
        "lemma_index": {"n": dict(sorted(lemma_index.items()))},
        "verb_classes": {k: sorted(v) for k, v in sorted(verb_index.items())},
        "frames": {cls: spec["frames"] for cls, spec in sorted(verbs.items())},
        "class_members": {cls: spec["members"] for cls, spec in sorted(verbs.items())},
        "gender_table": gender_table(args.gender) if args.gender else {},
    }
    args.out.write_text(json.dumps(snapshot, indent=1, sort_keys=False) + "\n")
    print(f"{args.out}: {len(keep)} synsets, {len(lemma_index)} lemmas, {len(verbs)} verb classes")


if __name__ == "__main__":
    main()
