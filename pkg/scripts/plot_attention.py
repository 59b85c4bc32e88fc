#!/usr/bin/env python3
"""Render attention export files as heatmap grids (convenience helper; the
CLI contract ends at the text export).

    graphit export-attention --checkpoint results/.../checkpoint.bin \
        --data_dir data/Mutagenicity --indices 5 --out attn/
    python3 scripts/plot_attention.py attn/attention_5.txt --out attn_5.png
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from graphit.model import read_attention_dump


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dump", help="attention export file")
    parser.add_argument("--out", default=None, help="output image path")
    args = parser.parse_args()
    with open(args.dump) as fp:
        graph_id, mats = read_attention_dump(fp)
    fig, axes = plt.subplots(1, len(mats), figsize=(4 * len(mats), 4))
    if len(mats) == 1:
        axes = [axes]
    for layer, (ax, mat) in enumerate(zip(axes, mats), start=1):
        im = ax.imshow(mat, cmap="viridis", vmin=0.0)
        ax.set_title(f"graph {graph_id}, layer {layer}")
        fig.colorbar(im, ax=ax, fraction=0.046)
    out = args.out or args.dump.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
