#!/usr/bin/env python3
"""Recomputes expected.json for the eval10 fixture from first principles.

Run from this directory: python3 oracle.py > expected.json
"""
import json
import math
from fractions import Fraction

RATIOS = [("1/3", Fraction(1, 3)), ("1/2", Fraction(1, 2)), ("1", Fraction(1))]
STRATEGIES = ["prm", "pam", "em", "fuzzy-1"]
K = 1000
THRESHOLD = 1


def read_tsv(name):
    rows = []
    with open(name, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                a, b = line.split("\t", 1)
                rows.append((a.strip(), b))
    return rows


def norm(s):
    return s.strip().lower()


def levenshtein(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


entries = {}
for fid, latex in read_tsv("corpus.tsv"):
    entries.setdefault(norm(latex), []).append(fid)

qrels = {}
with open("qrels.txt") as f:
    for line in f:
        parts = line.split()
        if parts:
            qrels.setdefault(parts[0], {})[parts[2]] = int(parts[3])


def ranked(strategy, p):
    hits = []
    for key, ids in entries.items():
        if strategy == "prm":
            ok, dist = key.startswith(p), 0
        elif strategy == "pam":
            ok, dist = p in key, 0
        elif strategy == "em":
            ok, dist = key == p, 0
        else:
            dist = levenshtein(p, key)
            ok = dist <= 1
        if ok:
            hits.append((dist, -len(ids), key, ids))
    hits.sort()
    return hits[:K]


def metrics(rel, total, literal):
    rr = 0.0
    for i, r in enumerate(rel):
        if r:
            rr = 1.0 / (i + 1)
            break
    found, acc = 0, 0.0
    for i, r in enumerate(rel):
        if r:
            found += 1
            acc += found / (i + 1)
    denom = found if literal else total
    return rr, (acc / denom if denom else 0.0), found


def mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


out = {}
for mode in ("trec", "literal"):
    rows = []
    for tid, latex in read_tsv("topics.tsv"):
        q = norm(latex)
        grades = qrels.get(tid, {})
        total = sum(1 for g in grades.values() if g >= THRESHOLD)
        for label, ratio in RATIOS:
            n = min(max(math.ceil(ratio * len(q)), 1), len(q))
            prefix = q[:n]
            for s in STRATEGIES:
                hits = ranked(s, prefix)
                rel = [any(grades.get(i, 0) >= THRESHOLD for i in ids) for _, _, _, ids in hits]
                rr, ap, found = metrics(rel, total, mode == "literal")
                rows.append({"topic_id": tid, "ratio": label, "strategy": s, "prefix": prefix,
                             "rr": rr, "ap": ap, "retrieved": len(hits), "relevant_retrieved": found})
    aggs = {}
    for s in STRATEGIES:
        mine = [r for r in rows if r["strategy"] == s]
        answered = [r for r in mine if r["retrieved"] > 0]
        aggs[s] = {
            "all": {"mrr": mean([r["rr"] for r in mine]), "map": mean([r["ap"] for r in mine]), "rows": len(mine)},
            "answered": {"mrr": mean([r["rr"] for r in answered]), "map": mean([r["ap"] for r in answered]),
                         "rows": len(answered)},
            "per_ratio": {label: {"mrr": mean([r["rr"] for r in mine if r["ratio"] == label]),
                                  "map": mean([r["ap"] for r in mine if r["ratio"] == label]),
                                  "rows": sum(1 for r in mine if r["ratio"] == label)}
                          for label, _ in RATIOS},
        }
    out[mode] = {"rows": rows, "aggregates": aggs}

print(json.dumps(out, indent=1))
