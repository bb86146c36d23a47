#!/usr/bin/env python3
"""Exhaustive re-evaluation of the threshold grid on a 20-pair fixture with
scripted member outputs. For every (retedit, templates, mc) threshold tuple
the cascade is replayed (gated members need confidence >= threshold, fsm
needs an output, beam takes anything) and corpus BLEU-4 is computed against
the references. The best tuple wins; ties go to the greater tuple."""

import itertools
import random

from metrics_oracle import corpus_bleu
from oracle_common import emit

MEMBERS = ["retedit", "templates", "mc", "fsm", "beam"]
GATED = ["retedit", "templates", "mc"]
VALUES = [0.3, 0.5, 0.7]
SUBJECTS = ["<PRP>", "<PERSON>0", "<ORG>0", "craft.n.02", "organization.n.01"]
VERBS = ["send-11.1", "escape-51.1", "chase-51.6", "assessment-34.1", "meet-36.3"]
OBJECTS = ["message.n.01", "vessel.n.02", "principal.n.05", None]
PREPS = [("to", "natural_object.n.01"), ("at", "artifact.n.01"), (None, None)]
FILLER = ["the", "quickly", "again", "old", "strange"]


def mutate(rng, tokens, k):
    out = list(tokens)
    for _ in range(k):
        op = rng.randrange(3)
        i = rng.randrange(len(out))
        if op == 0 and len(out) > 2:
            del out[i]
        elif op == 1:
            out.insert(i, rng.choice(FILLER))
        else:
            out[i] = rng.choice(FILLER)
    return out


def cascade(outputs, thresholds):
    last = None
    for m in MEMBERS:
        sent, conf = outputs[m]
        if sent is None:
            continue
        last = sent
        if m in thresholds and conf >= thresholds[m]:
            return sent, m
        if m in ("fsm", "beam"):
            return sent, m
    return last or [], "beam"


def main():
    rng = random.Random(11)
    pairs = []
    for _ in range(20):
        s, v, o = rng.choice(SUBJECTS), rng.choice(VERBS), rng.choice(OBJECTS)
        p, m = rng.choice(PREPS)
        event = [s, v, o, p, m]
        ref = [s, v] + (["the", o] if o else []) + ([p, "the", m] if p else []) + ["."]
        outputs = {}
        for name, noise in zip(MEMBERS, [1, 2, 2, 1, 3]):
            sent = mutate(rng, ref, rng.randrange(noise + 1))
            conf = rng.choice([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
            if name == "fsm" and rng.random() < 0.3:
                sent = None
            outputs[name] = [sent, conf if name != "beam" else 0.0]
        pairs.append({"event": event, "reference": ref, "outputs": outputs})

    evaluated = []
    for t in itertools.product(VALUES, repeat=3):
        th = dict(zip(GATED, t))
        cands = [cascade(p["outputs"], th)[0] for p in pairs]
        score = corpus_bleu(cands, [[p["reference"]] for p in pairs])
        evaluated.append({"thresholds": list(t), "bleu4": score})
    best = max(evaluated, key=lambda e: (e["bleu4"], e["thresholds"]))
    emit("tune", {"values": VALUES, "pairs": pairs, "evaluated": evaluated,
                  "best": best["thresholds"], "best_bleu4": best["bleu4"],
                  "distinct_scores": len({round(e["bleu4"], 12) for e in evaluated})})


if __name__ == "__main__":
    main()
