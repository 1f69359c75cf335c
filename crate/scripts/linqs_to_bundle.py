#!/usr/bin/env python3
"""Convert a LINQS citation dataset (`<name>.content` + `<name>.cites`) into a bundle.

    python3 scripts/linqs_to_bundle.py cora.content cora.cites data/cora

Nodes keep the order of the content file and classes are numbered in sorted
name order. Citations are made undirected, deduplicated and stripped of
self-loops and of endpoints missing from the content file; the raw citation
line count is kept as `num_edges` in meta.json.

The split has the usual transductive sizes: `--per-class` labeled nodes per
class, then `--val` and `--test` nodes drawn from the rest, all from a
seeded shuffle.
"""

import argparse
import json
import random
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("content")
    ap.add_argument("cites")
    ap.add_argument("out_dir")
    ap.add_argument("--per-class", type=int, default=20)
    ap.add_argument("--val", type=int, default=500)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ids, features, names = [], [], []
    for line in Path(args.content).read_text().splitlines():
        if not line.strip():
            continue
        fields = line.split()
        ids.append(fields[0])
        features.append(fields[1:-1])
        names.append(fields[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = sorted(set(names))
    labels = [classes.index(n) for n in names]
    dim = len(features[0])
    if any(len(f) != dim for f in features):
        raise SystemExit("feature rows differ in length")

    raw, edges = 0, set()
    for line in Path(args.cites).read_text().splitlines():
        if not line.strip():
            continue
        raw += 1
        a, b = line.split()
        if a in index and b in index and a != b:
            u, v = sorted((index[a], index[b]))
            edges.add((u, v))

    rng = random.Random(args.seed)
    order = list(range(len(ids)))
    rng.shuffle(order)
    train, rest = [], []
    taken = {c: 0 for c in range(len(classes))}
    for u in order:
        if taken[labels[u]] < args.per_class:
            taken[labels[u]] += 1
            train.append(u)
        else:
            rest.append(u)
    val = rest[: args.val]
    test = rest[args.val : args.val + args.test]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"num_nodes": len(ids), "num_classes": len(classes), "feature_dim": dim, "num_edges": raw}
    (out / "meta.json").write_text(json.dumps(meta) + "\n")
    (out / "edges.csv").write_text("".join(f"{u},{v}\n" for u, v in sorted(edges)))
    (out / "features.csv").write_text("".join(",".join(f) + "\n" for f in features))
    (out / "labels.csv").write_text("".join(f"{l}\n" for l in labels))
    split = {"train": sorted(train), "val": sorted(val), "test": sorted(test)}
    (out / "splits.json").write_text(json.dumps(split) + "\n")
    print(f"nodes={len(ids)} edges={len(edges)} (raw {raw}) features={dim} classes={len(classes)}")


if __name__ == "__main__":
    main()
