"""Experiment command line: kernel dumps, training runs, sweeps, attention export.

Commands:

    graphit kernel           write one graph's kernel matrix as a text dump
    graphit train            train a single config, write records + checkpoint
    graphit sweep            run a grid, apply the selection protocol, emit a table
    graphit export-attention head-averaged per-layer attention for chosen graphs
    graphit prepare-splits   write the audit file of split index lists

Every command accepts `--config FILE` (flat `key = value` lines, `#`
comments) plus `--key value` overrides for any known key; unknown keys are
rejected. Results land under $GRAPHIT_RESULTS (or --results, default
`results/`) as results/<dataset>/<config-hash>/{records.txt, checkpoint.bin,
summary.txt}.

The config hash is a sha256 prefix of the canonical key-value text: sorted
keys, one `key = value` line each, with keys that are irrelevant to the
chosen kernel/structure omitted and environment keys (data_dir, splits)
excluded. It is therefore stable across platforms and processes.

Errors print a single line `error: <slug>: <detail>` to stderr and exit
nonzero.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (DataError, load_tu, load_zinc, make_splits, one_hot,
                   write_split_plan)
from .graphs import degree_vector
from .kernels import KernelSpec, build_kernel, laplacian_pe, write_kernel_dump
from .model import (GraphiT, ModelConfig, build_input_features,
                    write_attention_dump)
from .paths import NystromEmbedding, embed_nodes
from .spectral import symmetric_eig
from .train import (RunRecord, TrainSettings, aggregate_estimates,
                    read_run_record, select_and_report, train_one,
                    write_run_record)


class CliError(RuntimeError):
    def __init__(self, slug: str, detail: str):
        super().__init__(detail)
        self.slug = slug


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# key -> (parser, default); None default means required when used
KEYS: dict = {
    "dataset": (str, None),
    "data_dir": (str, None),
    "layers": (int, 2),
    "heads": (int, 4),
    "d_model": (int, 64),
    "pooling": (str, "mean"),
    "kernel": (str, "none"),
    "beta": (float, 1.0),
    "gamma": (float, 0.5),
    "p": (int, 2),
    "zero_diagonal": (_bool, False),
    "structure": (str, "none"),
    "lappe_dim": (int, 2),
    "gckn_path_size": (int, 5),
    "gckn_filters": (int, 32),
    "gckn_sigma": (float, 0.6),
    "degree_scaling": (str, "auto"),
    "dropout": (float, 0.0),
    "negative_kernel": (str, "clamp"),
    "lr": (float, 1e-3),
    "weight_decay": (float, 1e-4),
    "batch_size": (int, 32),
    "epochs": (int, 300),
    "schedule": (str, "halving"),
    "warmup_steps": (int, 2000),
    "seed": (int, 0),
    "split": (int, 0),
    "splits_seed": (int, 0),
    "subsample_train": (int, 0),
    "retrain_on_val": (_bool, False),
    "graph_index": (int, 0),
    "splits": (str, "0"),  # sweep-level list of split indices
}

# environment, not experiment identity: excluded from the canonical text
HASH_EXCLUDED = {"data_dir", "splits", "graph_index"}

KERNEL_CHOICES = ("none", "diffusion", "p_step_rw", "adjacency", "all_ones")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat `key = value` lines with # comments; unknown keys rejected."""
    out: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("config", f"{source}:{ln}: expected 'key = value'")
        key, value = [part.strip() for part in line.split("=", 1)]
        if key not in KEYS:
            raise CliError("config", f"{source}:{ln}: unknown key {key!r}")
        parser = KEYS[key][0]
        try:
            out[key] = parser(value)
        except ValueError as e:
            raise CliError("config", f"{source}:{ln}: bad value for {key}: {e}")
    return out


def effective_config(overrides: dict) -> dict:
    cfg = {k: default for k, (_, default) in KEYS.items() if default is not None}
    cfg.update(overrides)
    return cfg


def _relevant_keys(cfg: dict) -> list[str]:
    keys = set(cfg) - HASH_EXCLUDED
    kernel = cfg.get("kernel", "none")
    if kernel != "diffusion":
        keys.discard("beta")
    if kernel != "p_step_rw":
        keys.discard("gamma")
        keys.discard("p")
    if kernel in ("none", "all_ones"):
        keys.discard("zero_diagonal")
    structure = cfg.get("structure", "none")
    if structure != "lappe":
        keys.discard("lappe_dim")
    if structure != "gckn":
        keys.discard("gckn_path_size")
        keys.discard("gckn_filters")
        keys.discard("gckn_sigma")
    if cfg.get("schedule", "halving") != "warmup":
        keys.discard("warmup_steps")
    return sorted(keys)


def canonical_text(cfg: dict) -> str:
    lines = []
    for key in _relevant_keys(cfg):
        value = cfg[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = f"{value:.17g}"
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()[:12]


def kernel_spec_from(cfg: dict) -> KernelSpec | None:
    kernel = cfg["kernel"]
    if kernel not in KERNEL_CHOICES:
        raise CliError("config", f"kernel must be one of {KERNEL_CHOICES}")
    if kernel == "none":
        return None
    try:
        if kernel == "diffusion":
            return KernelSpec.diffusion(cfg["beta"], cfg["zero_diagonal"])
        if kernel == "p_step_rw":
            return KernelSpec.p_step(cfg["p"], cfg["gamma"], cfg["zero_diagonal"])
        if kernel == "adjacency":
            return KernelSpec.adjacency(cfg["zero_diagonal"])
        return KernelSpec.all_ones()
    except ValueError as e:
        raise CliError("config", str(e))


def model_config_from(cfg: dict, task: str, n_classes: int | None) -> ModelConfig:
    ds = cfg["degree_scaling"]
    if ds not in ("auto", "true", "false"):
        raise CliError("config", "degree_scaling must be auto, true, or false")
    try:
        return ModelConfig(
            layers=cfg["layers"],
            heads=cfg["heads"],
            d_model=cfg["d_model"],
            pooling=cfg["pooling"],
            kernel=kernel_spec_from(cfg),
            structure=cfg["structure"],
            lappe_dim=cfg["lappe_dim"],
            gckn_path_size=cfg["gckn_path_size"],
            gckn_filters=cfg["gckn_filters"],
            gckn_sigma=cfg["gckn_sigma"],
            degree_scaling=None if ds == "auto" else (ds == "true"),
            task=task,
            n_classes=n_classes if n_classes is not None else 2,
            dropout=cfg["dropout"],
            negative_kernel=cfg["negative_kernel"],
        )
    except ValueError as e:
        raise CliError("config", str(e))


def settings_from(cfg: dict) -> TrainSettings:
    try:
        return TrainSettings(
            lr=cfg["lr"],
            weight_decay=cfg["weight_decay"],
            batch_size=cfg["batch_size"],
            epochs=cfg["epochs"],
            schedule=cfg["schedule"],
            warmup_steps=cfg["warmup_steps"],
            seed=cfg["seed"],
        )
    except ValueError as e:
        raise CliError("config", str(e))


def load_dataset(cfg: dict):
    """Returns (bundle, fixed_splits_or_None)."""
    if "dataset" not in cfg:
        raise CliError("config", "missing required key 'dataset'")
    if "data_dir" not in cfg:
        raise CliError("config", "missing required key 'data_dir'")
    try:
        if cfg["dataset"] == "ZINC":
            return load_zinc(cfg["data_dir"])
        return load_tu(cfg["data_dir"], cfg["dataset"]), None
    except DataError as e:
        raise CliError("data", str(e))


def resolve_split(cfg: dict, bundle, fixed_splits):
    """The (train, val, test) triple this run uses, after subsampling and the
    optional retrain-on-train+val fold merge."""
    if fixed_splits is not None:
        train, val, test = (list(fixed_splits["train"]), list(fixed_splits["val"]),
                            list(fixed_splits["test"]))
    else:
        plan = make_splits(bundle, cfg["splits_seed"])
        if not (0 <= cfg["split"] < len(plan.triples)):
            raise CliError("config", f"split index {cfg['split']} out of range")
        train, val, test = [list(part) for part in plan.triples[cfg["split"]]]
    sub = cfg["subsample_train"]
    if sub:
        if sub > len(train):
            raise CliError("config", f"subsample_train={sub} exceeds train fold size")
        rng = np.random.default_rng(cfg["seed"])
        train = [train[i] for i in rng.choice(len(train), size=sub, replace=False)]
    if cfg["retrain_on_val"]:
        train = train + val
        val = []
    return train, val, test


def results_root(args) -> str:
    if getattr(args, "results", None):
        return args.results
    return os.environ.get("GRAPHIT_RESULTS", "results")


def run_dir(root: str, dataset: str, h: str) -> str:
    return os.path.join(root, dataset, h)


def summary_line(dataset: str, h: str, record: RunRecord) -> str:
    return (f"dataset={dataset} config={h} "
            f"selection_score={record.selection_score:.10g} "
            f"test_metric={record.test_estimate:.10g}")


def parse_summary(path: str) -> dict:
    with open(path) as fp:
        return dict(item.split("=", 1) for item in fp.read().split())


def run_or_resume(cfg: dict, root: str, quiet: bool = False):
    """Train one effective config unless its summary already exists."""
    h = config_hash(cfg)
    bundle, fixed = load_dataset(cfg)
    out = run_dir(root, cfg["dataset"], h)
    summary_path = os.path.join(out, "summary.txt")
    if os.path.exists(summary_path):
        with open(os.path.join(out, "records.txt")) as fp:
            record = read_run_record(fp, h, bundle.task)
        return h, record, out
    split = resolve_split(cfg, bundle, fixed)
    mcfg = model_config_from(cfg, bundle.task, bundle.n_classes)
    settings = settings_from(cfg)
    record, model, prep = train_one(bundle, split, mcfg, settings, config_hash=h)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "records.txt"), "w") as fp:
        write_run_record(record, fp)
    save_checkpoint(os.path.join(out, "checkpoint.bin"),
                    model.parameter_arrays(), None, canonical_text(cfg))
    if prep.gckn_embedding is not None:
        prep.gckn_embedding.save(os.path.join(out, "gckn.npz"))
    with open(summary_path, "w") as fp:
        fp.write(summary_line(cfg["dataset"], h, record) + "\n")
    if not quiet:
        print(summary_line(cfg["dataset"], h, record))
    return h, record, out


def cmd_train(args) -> int:
    cfg = gather_config(args)
    h, record, _ = run_or_resume(cfg, results_root(args), quiet=True)
    print(summary_line(cfg["dataset"], h, record))
    return 0


def cmd_kernel(args) -> int:
    cfg = gather_config(args)
    bundle, _ = load_dataset(cfg)
    index = cfg["graph_index"]
    if not (0 <= index < len(bundle.graphs)):
        raise CliError("config", f"graph index {index} out of range")
    spec = kernel_spec_from(cfg)
    if spec is None:
        raise CliError("config", "the kernel command needs kernel != none")
    kernel = build_kernel(bundle.graphs[index], spec)
    out = args.out
    if out is None:
        root = results_root(args)
        os.makedirs(os.path.join(root, "kernels"), exist_ok=True)
        out = os.path.join(root, "kernels",
                           f"{cfg['dataset']}_{index}_{spec.family}.txt")
    with open(out, "w") as fp:
        write_kernel_dump(kernel, fp)
    eig = symmetric_eig(kernel.values)
    print(f"kernel={spec.label()} graph={index} n={kernel.values.shape[0]} "
          f"min_eigenvalue={eig.eigenvalues[0]:.10g} "
          f"max_eigenvalue={eig.eigenvalues[-1]:.10g} file={out}")
    return 0


def cmd_prepare_splits(args) -> int:
    cfg = gather_config(args)
    bundle, fixed = load_dataset(cfg)
    if fixed is not None:
        raise CliError("config", f"{cfg['dataset']} ships fixed splits; nothing to prepare")
    plan = make_splits(bundle, cfg["splits_seed"])
    out = args.out
    if out is None:
        root = results_root(args)
        os.makedirs(root, exist_ok=True)
        out = os.path.join(root, f"{cfg['dataset']}_splits_seed{cfg['splits_seed']}.txt")
    with open(out, "w") as fp:
        write_split_plan(plan, fp)
    print(f"dataset={cfg['dataset']} splits={len(plan.triples)} file={out}")
    return 0


def cmd_export_attention(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise CliError("checkpoint", f"no checkpoint at {args.checkpoint}")
    params, _, config_text = load_checkpoint(args.checkpoint)
    stored = parse_config_text(config_text, source=args.checkpoint)
    overrides = gather_config(args, required_dataset=False)
    for key, value in overrides.items():
        if key in HASH_EXCLUDED or key not in stored:
            continue
        if stored[key] != value:
            raise CliError(
                "checkpoint",
                f"config mismatch for {key}: checkpoint has {stored[key]}, "
                f"request says {value}",
            )
    cfg = effective_config(stored)
    cfg["data_dir"] = overrides.get("data_dir", cfg.get("data_dir"))
    if cfg.get("data_dir") is None:
        raise CliError("config", "missing required key 'data_dir'")
    bundle, _ = load_dataset(cfg)
    mcfg = model_config_from(cfg, bundle.task, bundle.n_classes)
    model = GraphiT(mcfg, mcfg.input_dim(bundle.vocab_size))
    try:
        model.load_parameter_arrays(params)
    except ValueError as e:
        raise CliError("checkpoint", f"checkpoint does not fit the config: {e}")

    indices = [int(tok) for tok in args.indices.split(",") if tok]
    for index in indices:
        if not (0 <= index < len(bundle.graphs)):
            raise CliError("config", f"graph index {index} out of range")

    gckn_emb = None
    if mcfg.structure == "gckn":
        emb_path = os.path.join(os.path.dirname(args.checkpoint), "gckn.npz")
        if not os.path.exists(emb_path):
            raise CliError("checkpoint", f"missing fitted path embedding {emb_path}")
        gckn_emb = NystromEmbedding.load(emb_path)

    feats = one_hot(bundle)
    kspec = mcfg.kernel if mcfg.kernel is not None else KernelSpec.all_ones()
    out_dir = args.out or os.path.join(results_root(args), "attention")
    os.makedirs(out_dir, exist_ok=True)
    for index in indices:
        g = bundle.graphs[index]
        lappe = laplacian_pe(g, mcfg.lappe_dim) if mcfg.structure == "lappe" else None
        gckn_rows = embed_nodes(g, gckn_emb) if gckn_emb is not None else None
        features = build_input_features(feats[index], mcfg, lappe, None, gckn_rows)
        mats = model.export_attention(features, build_kernel(g, kspec).values,
                                      degree_vector(g))
        path = os.path.join(out_dir, f"attention_{index}.txt")
        with open(path, "w") as fp:
            write_attention_dump(fp, index, mats)
        print(f"graph={index} layers={len(mats)} n={g.n} file={path}")
    return 0


def parse_grid_text(text: str, source: str) -> dict[str, list]:
    """Like a config file but comma-separated values fan out into a grid."""
    grid: dict[str, list] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("config", f"{source}:{ln}: expected 'key = value'")
        key, value = [part.strip() for part in line.split("=", 1)]
        if key not in KEYS:
            raise CliError("config", f"{source}:{ln}: unknown key {key!r}")
        parser = KEYS[key][0]
        try:
            grid[key] = [parser(tok.strip()) for tok in value.split(",") if tok.strip()]
        except ValueError as e:
            raise CliError("config", f"{source}:{ln}: bad value for {key}: {e}")
        if not grid[key]:
            raise CliError("config", f"{source}:{ln}: empty value list for {key}")
    return grid


def _sweep_cells(kernels: list[str], p_values: list[int]):
    """Table columns: one per kernel, with p-step walks split per p."""
    cells = []
    for kernel in kernels:
        if kernel == "p_step_rw":
            for p in p_values:
                cells.append((f"{p}-step", {"kernel": kernel, "p": p}))
        else:
            cells.append((kernel if kernel != "none" else "vanilla",
                          {"kernel": kernel}))
    return cells


def cmd_sweep(args) -> int:
    with open(args.config) as fp:
        grid = parse_grid_text(fp.read(), args.config)
    if "dataset" not in grid or "data_dir" not in grid:
        raise CliError("config", "sweep grid needs dataset and data_dir")
    splits = [int(tok) for tok in grid.pop("splits", ["0"])]
    structures = [str(s) for s in grid.pop("structure", ["none"])]
    kernels = [str(k) for k in grid.pop("kernel", ["none"])]
    cells = _sweep_cells(kernels, [int(p) for p in grid.pop("p", [2])])
    root = results_root(args)

    fixed_keys = sorted(grid)
    combos = list(itertools.product(*(grid[k] for k in fixed_keys)))

    table: dict[tuple[str, str], tuple[float, float]] = {}
    for structure in structures:
        for cell_label, cell_keys in cells:
            estimates = []
            for split in splits:
                runs: dict[str, RunRecord] = {}
                cfgs: dict[str, dict] = {}
                for combo in combos:
                    cfg = effective_config(dict(zip(fixed_keys, combo)))
                    cfg["structure"] = structure
                    cfg["split"] = split
                    cfg.update(cell_keys)
                    h = config_hash(cfg)
                    if h in runs:
                        continue
                    _, record, _ = run_or_resume(cfg, root)
                    runs[h] = record
                    cfgs[h] = cfg
                winner = select_and_report(runs)
                retrain_cfg = dict(cfgs[winner])
                retrain_cfg["retrain_on_val"] = True
                _, retrain_record, _ = run_or_resume(retrain_cfg, root)
                estimates.append(retrain_record.test_estimate)
            table[(structure, cell_label)] = aggregate_estimates(estimates)

    dataset = str(grid["dataset"][0])
    text = _format_sweep_table(structures, [c[0] for c in cells], table)
    os.makedirs(os.path.join(root, dataset), exist_ok=True)
    table_path = os.path.join(root, dataset, "sweep_table.txt")
    with open(table_path, "w") as fp:
        fp.write(text + "\n")
    print(text)
    print(f"table={table_path}")
    return 0


def _format_sweep_table(structures, kernels, table) -> str:
    width = 22
    header = "structure \\ kernel".ljust(width) + "".join(k.ljust(width) for k in kernels)
    rows = [header]
    for s in structures:
        cells = []
        for k in kernels:
            mean, std = table[(s, k)]
            cells.append(f"{mean:.4f} +- {std:.4f}".ljust(width))
        rows.append(s.ljust(width) + "".join(cells))
    return "\n".join(rows)


def gather_config(args, required_dataset: bool = True) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise CliError("config", f"no config file at {args.config}")
        with open(args.config) as fp:
            cfg.update(parse_config_text(fp.read(), args.config))
    for key, value in (args.overrides or []):
        if key not in KEYS:
            raise CliError("config", f"unknown key {key!r}")
        parser = KEYS[key][0]
        try:
            cfg[key] = parser(value)
        except ValueError as e:
            raise CliError("config", f"bad value for {key}: {e}")
    if required_dataset and "dataset" not in cfg:
        raise CliError("config", "missing required key 'dataset'")
    return effective_config(cfg) if required_dataset else cfg


class _OverrideAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        items = getattr(namespace, "overrides", None) or []
        items.append((option_string.lstrip("-").replace("-", "_"), values))
        namespace.overrides = items


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--results", help="results root (default $GRAPHIT_RESULTS or results/)")
    for key in KEYS:
        sub.add_argument(f"--{key}", dest="overrides", action=_OverrideAction,
                         metavar="VALUE")
    sub.set_defaults(overrides=[])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphit")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("kernel", help="dump one graph's kernel matrix")
    _add_common(p)
    p.add_argument("--out", help="output path for the text dump")
    p.set_defaults(func=cmd_kernel)

    p = subs.add_parser("train", help="train one configuration")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("sweep", help="run a config grid with model selection")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("export-attention", help="write per-layer attention dumps")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--indices", default="0", help="comma-separated graph indices")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_export_attention)

    p = subs.add_parser("prepare-splits", help="write the split-plan audit file")
    _add_common(p)
    p.add_argument("--out", help="output path")
    p.set_defaults(func=cmd_prepare_splits)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e.slug}: {e}", file=sys.stderr)
        return 2
    except (DataError, ValueError, RuntimeError, OSError) as e:
        print(f"error: runtime: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
