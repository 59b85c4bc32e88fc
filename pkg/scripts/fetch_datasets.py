#!/usr/bin/env python3
"""Download the benchmark datasets and convert them to the on-disk layouts
the loaders consume. Needs ordinary internet access; run it once on a
machine that has it, then point $GRAPHIT_DATA (or ./data) at the result.

    python3 scripts/fetch_datasets.py --out data                # everything
    python3 scripts/fetch_datasets.py --out data --only MUTAG

Classification sets (MUTAG, PROTEINS, PTC_MR, NCI1, Mutagenicity) come from
the TU graph-benchmark collection as zip archives already in the TU text
layout; they are unpacked as-is. PTC_MR is stored under the name PTC.

ZINC comes from the 12k benchmark subset (10k/1k/1k fixed splits). The
converter accepts the `molecules.pickle`/index layout of the
benchmarking-gnns distribution (needs torch to unpickle) and writes the
plain-text container documented in graphit.data:
ZINC_graphs.jsonl + ZINC_{train,val,test}.index. Edge bond types are
dropped at conversion time.
"""
import argparse
import io
import json
import os
import pickle
import sys
import urllib.request
import zipfile

TU_BASE = "https://www.chrsmrrs.com/graphkerneldatasets"
TU_SETS = {"MUTAG": "MUTAG", "PROTEINS": "PROTEINS", "PTC": "PTC_MR",
           "NCI1": "NCI1", "Mutagenicity": "Mutagenicity"}
ZINC_URL = ("https://data.dgl.ai/dataset/benchmarking-gnns/ZINC.pkl")


def fetch(url: str) -> bytes:
    print(f"  downloading {url}")
    with urllib.request.urlopen(url) as resp:
        return resp.read()


def fetch_tu(name: str, remote: str, out_root: str) -> None:
    out_dir = os.path.join(out_root, name)
    marker = os.path.join(out_dir, f"{name}_A.txt")
    if os.path.exists(marker):
        print(f"{name}: already present")
        return
    blob = fetch(f"{TU_BASE}/{remote}.zip")
    os.makedirs(out_dir, exist_ok=True)
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        for member in zf.namelist():
            base = os.path.basename(member)
            if not base or not base.endswith(".txt"):
                continue
            # normalize PTC_MR_* -> PTC_*
            target = base.replace(f"{remote}_", f"{name}_")
            with zf.open(member) as src, open(os.path.join(out_dir, target), "wb") as dst:
                dst.write(src.read())
    print(f"{name}: unpacked into {out_dir}")


def convert_zinc_record(mol) -> dict:
    # benchmarking-gnns layout: atom_type tensor, edge_list from adjacency,
    # logP_SA_cycle_normalized scalar target
    nodes = [int(x) for x in mol["atom_type"].tolist()]
    edges = set()
    num_atom = len(nodes)
    bonds = mol["bond_type"]
    for u in range(num_atom):
        for v in range(u + 1, num_atom):
            if int(bonds[u][v]) != 0:
                edges.add((u, v))
    y = float(mol["logP_SA_cycle_normalized"])
    return {"nodes": nodes, "edges": sorted(edges), "y": y}


def fetch_zinc(out_root: str) -> None:
    out_dir = os.path.join(out_root, "ZINC")
    if os.path.exists(os.path.join(out_dir, "ZINC_graphs.jsonl")):
        print("ZINC: already present")
        return
    blob = fetch(ZINC_URL)
    data = pickle.loads(blob)  # needs torch importable for tensor unpickling
    os.makedirs(out_dir, exist_ok=True)
    offset = 0
    with open(os.path.join(out_dir, "ZINC_graphs.jsonl"), "w") as fp:
        for part in ("train", "val", "test"):
            mols = data[part]
            with open(os.path.join(out_dir, f"ZINC_{part}.index"), "w") as idx:
                for i, mol in enumerate(mols):
                    fp.write(json.dumps(convert_zinc_record(mol)) + "\n")
                    idx.write(f"{offset + i}\n")
            offset += len(mols)
    print(f"ZINC: converted into {out_dir}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data")
    parser.add_argument("--only", choices=list(TU_SETS) + ["ZINC"])
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    try:
        for name, remote in TU_SETS.items():
            if args.only in (None, name):
                fetch_tu(name, remote, args.out)
        if args.only in (None, "ZINC"):
            fetch_zinc(args.out)
    except Exception as e:  # downloads are environment-dependent
        print(f"fetch failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
