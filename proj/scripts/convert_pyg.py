#!/usr/bin/env python3
"""Convert PyTorch Geometric datasets to GraphText bundles.

Usage:
    python scripts/convert_pyg.py --out data [cora citeseer wiki coauthor-cs]

Requires torch and torch_geometric (network access on first run). The output
directories can then be consumed by the CLI and the acceptance suite:

    imgbk analyze data/cora
    IMGBK_DATA_ROOT=data ctest --test-dir build -R acceptance
"""

import argparse
import json
from pathlib import Path


def fetch(name: str, root: str):
    from torch_geometric.datasets import AttributedGraphDataset, Coauthor, Planetoid

    if name in ("cora", "citeseer"):
        return Planetoid(root=root, name=name.capitalize())[0]
    if name == "wiki":
        return AttributedGraphDataset(root=root, name="Wiki")[0]
    if name == "coauthor-cs":
        return Coauthor(root=root, name="CS")[0]
    raise SystemExit(f"unknown dataset: {name}")


def write_bundle(data, name: str, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    x = data.x.numpy()
    y = data.y.numpy().tolist()
    edge_index = data.edge_index.numpy()

    edges = set()
    for u, v in zip(edge_index[0].tolist(), edge_index[1].tolist()):
        if u == v:
            continue
        edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)

    meta = {
        "name": name,
        "n_nodes": int(x.shape[0]),
        "n_edges": len(edges),
        "n_features": int(x.shape[1]),
        "n_classes": int(max(y)) + 1,
        "provenance": f"converted from torch_geometric {name}",
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    with (out_dir / "edges.tsv").open("w", newline="\n") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
    with (out_dir / "features.tsv").open("w", newline="\n") as f:
        for row in x:
            f.write("\t".join(repr(float(v)) for v in row) + "\n")
    with (out_dir / "labels.tsv").open("w", newline="\n") as f:
        for label in y:
            f.write(f"{label}\n")
    print(f"{name}: {meta['n_nodes']} nodes, {len(edges)} undirected edges -> {out_dir}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("datasets", nargs="*",
                        default=["cora", "citeseer", "wiki", "coauthor-cs"])
    parser.add_argument("--out", default="data")
    parser.add_argument("--cache", default=".pyg-cache")
    args = parser.parse_args()

    for name in args.datasets:
        data = fetch(name, args.cache)
        write_bundle(data, name, Path(args.out) / name)


if __name__ == "__main__":
    main()
