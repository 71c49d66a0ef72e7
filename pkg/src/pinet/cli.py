"""Command-line entry point: dataset generation, training, cross-
validation, the isomorphism and matrix-sweep experiments, and the
consistency checker.

Exit codes: 0 on success, 1 for invalid input or arguments, 2 for
runtime failures (generation, training, or a failed consistency suite).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import datagen, dataio, model, selfcheck, stats, train
from .errors import (
    DataFormatError,
    DomainError,
    GenerationError,
    ShapeError,
    TapeError,
    TrainingError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this artifact reserves
    2 for runtime failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _open_prob(text: str) -> float:
    x = float(text)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"{x} is not inside (0, 1)")
    return x


def _pos_int(text: str) -> int:
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"{x} is not a positive integer")
    return x


def _pos_float(text: str) -> float:
    x = float(text)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"{x} is not positive")
    return x


def _pq_spec(text: str):
    """'learned' or 'P,Q' with both values in [0, 1]."""
    if text == "learned":
        return "learned"
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'learned' or 'P,Q', got {text!r}")
    p, q = float(parts[0]), float(parts[1])
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise argparse.ArgumentTypeError(f"p={p}, q={q} must lie in [0, 1]")
    return (p, q)


def _sizes_list(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def _add_data_flags(p: _Parser):
    p.add_argument("--data", help="dataset file in the internal line-JSON format")
    p.add_argument("--tu-dir", help="directory holding a benchmark in the public text format")
    p.add_argument("--tu-name", help="benchmark name, e.g. MUTAG (with --tu-dir)")


def _add_hyper_flags(p: _Parser, pq_default="learned"):
    p.add_argument("--epochs", type=_pos_int, default=200)
    p.add_argument("--batch-size", type=_pos_int, default=50)
    p.add_argument("--lr", type=_pos_float, default=1e-3)
    p.add_argument("--f0", type=_pos_int, default=100, help="first layer width")
    p.add_argument("--f1", type=_pos_int, default=64, help="second layer width")
    p.add_argument("--attention-axis", choices=("nodes", "features"), default="nodes")
    p.add_argument("--pq", type=_pq_spec, default=_pq_spec(pq_default),
                   help="'learned' or fixed 'P,Q' used by all message-passing layers "
                        f"(default: {pq_default})")
    p.add_argument("--seed", type=int, default=0)


def _echo_config(args, extra=None):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg.update(extra or {})
    print("config:", json.dumps(cfg, sort_keys=True, default=str))


def _load(args) -> dataio.Dataset:
    if args.data and (args.tu_dir or args.tu_name):
        raise DomainError("give either --data or --tu-dir/--tu-name, not both")
    if args.data:
        return dataio.load_dataset(args.data)
    if args.tu_dir and args.tu_name:
        return dataio.load_tu(args.tu_dir, args.tu_name)
    raise DomainError("a dataset is required: --data PATH or --tu-dir DIR --tu-name NAME")


def _model_config(args, ds: dataio.Dataset) -> model.PiNetConfig:
    pq = args.pq
    fixed = pq != "learned"
    return model.PiNetConfig(
        d=ds.d, C=ds.class_count, F0=args.f0, F1=args.f1,
        attention_axis=args.attention_axis,
        pq_mode="fixed" if fixed else "learned",
        fixed_p=pq[0] if fixed else 1.0,
        fixed_q=pq[1] if fixed else 0.0,
        seed=args.seed,
    )


def _train_config(args) -> train.TrainConfig:
    return train.TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed,
    )


def cmd_gen_iso(args) -> int:
    prov_out = args.provenance_out or f"{args.out}.prov.json"
    _echo_config(args, {"provenance_out": prov_out})
    params = datagen.GenParams(
        n_nodes=args.nodes, classes=args.classes, copies=args.copies,
        edge_prob=args.edge_prob, seed=args.seed,
    )
    ds, prov = datagen.generate_iso_dataset(params)
    dataio.save_dataset(ds, args.out)
    datagen.save_provenance(prov, prov_out)
    print(f"wrote {len(ds)} graphs ({params.classes} classes x {params.copies} copies, "
          f"{params.n_nodes} nodes) to {args.out}")
    print(f"wrote provenance to {prov_out}")
    return 0


def cmd_train(args) -> int:
    ds = _load(args)
    _echo_config(args, {"dataset": ds.name, "graphs": len(ds), "d": ds.d, "C": ds.class_count})
    result = train.fit(ds.graphs, _train_config(args), _model_config(args, ds))
    acc = train.evaluate(result.params, ds.graphs)
    print(f"epochs: {len(result.epoch_losses)}  steps: {result.steps}")
    print(f"loss: first epoch {result.epoch_losses[0]:.6f}, last epoch {result.epoch_losses[-1]:.6f}")
    print(f"train accuracy: {acc:.4f}")
    print("pq:", json.dumps(result.params.pq_pairs(), sort_keys=True))
    if args.params_out:
        model.save_params(result.params, args.params_out)
        print(f"wrote parameters to {args.params_out}")
    return 0


def cmd_cv(args) -> int:
    ds = _load(args)
    _echo_config(args, {"dataset": ds.name, "graphs": len(ds), "d": ds.d, "C": ds.class_count})
    report = train.cross_validate(ds.graphs, args.k, _train_config(args), _model_config(args, ds))
    for f, acc in enumerate(report.fold_accuracies):
        print(f"fold {f}: accuracy {acc:.4f} (seed {report.fold_seeds[f]})")
    print(f"mean accuracy: {report.mean:.4f} +- {report.std:.4f} ({args.k} folds)")
    if args.out:
        rows = [
            {"dataset": ds.name, "fold": f, "accuracy": acc}
            for f, acc in enumerate(report.fold_accuracies)
        ]
        stats.write_results_csv(rows, args.out, columns=["dataset", "fold", "accuracy"])
        print(f"wrote per-fold results to {args.out}")
    return 0


def cmd_iso_exp(args) -> int:
    if not args.data:
        raise DomainError("iso-exp requires --data (a generated dataset)")
    prov_path = args.provenance or f"{args.data}.prov.json"
    ds = dataio.load_dataset(args.data)
    try:
        prov = datagen.load_provenance(prov_path)
    except FileNotFoundError:
        raise DataFormatError(
            "provenance file is required (generated alongside the dataset)",
            path=prov_path,
        ) from None
    _echo_config(args, {"provenance": prov_path, "dataset": ds.name, "graphs": len(ds)})
    if len(prov.permutations) != len(ds):
        raise DataFormatError(
            f"provenance lists {len(prov.permutations)} copies, dataset has {len(ds)}",
            path=prov_path,
        )
    per_class: dict[int, list[int]] = {}
    for i, g in enumerate(ds.graphs):
        per_class.setdefault(g.label, []).append(i)
    smallest = min(len(v) for v in per_class.values())
    for size in args.sizes:
        if size > smallest:
            raise DomainError(
                f"train size {size} exceeds the smallest class size {smallest}"
            )
    rows = []
    mc = _model_config(args, ds)
    tc = _train_config(args)
    for size in args.sizes:
        for trial in range(args.trials):
            rng = np.random.default_rng(args.seed + 7919 * size + trial)
            train_idx: list[int] = []
            for cls in sorted(per_class):
                members = np.asarray(per_class[cls])
                picked = rng.choice(len(members), size=size, replace=False)
                train_idx.extend(int(members[i]) for i in picked)
            train_set = set(train_idx)
            fold_seed = args.seed + 7919 * size + trial
            result = train.fit(
                [ds.graphs[i] for i in train_idx],
                replace(tc, seed=fold_seed),
                replace(mc, seed=fold_seed),
            )
            test = [g for i, g in enumerate(ds.graphs) if i not in train_set]
            acc = train.evaluate(result.params, test)
            rows.append({"train_size": size, "trial": trial, "accuracy": acc})
            print(f"size {size} trial {trial}: accuracy {acc:.4f}")
    stats.write_results_csv(rows, args.out, columns=["train_size", "trial", "accuracy"])
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


SWEEP_MODES = (
    ("fixed-0-0", 0.0, 0.0),
    ("fixed-0-1", 0.0, 1.0),
    ("fixed-1-0", 1.0, 0.0),
    ("fixed-1-1", 1.0, 1.0),
    ("learned", None, None),
)


def cmd_sweep(args) -> int:
    ds = _load(args)
    _echo_config(args, {"dataset": ds.name, "graphs": len(ds), "d": ds.d, "C": ds.class_count})
    tc = _train_config(args)
    rows = []
    means = {}
    for mode, p, q in SWEEP_MODES:
        mc = model.PiNetConfig(
            d=ds.d, C=ds.class_count, F0=args.f0, F1=args.f1,
            attention_axis=args.attention_axis,
            pq_mode="learned" if p is None else "fixed",
            fixed_p=p if p is not None else 1.0,
            fixed_q=q if q is not None else 0.0,
            seed=args.seed,
        )
        report = train.cross_validate(ds.graphs, args.k, tc, mc)
        means[mode] = report.mean
        print(f"{mode}: mean {report.mean:.4f} +- {report.std:.4f}")
        for f, acc in enumerate(report.fold_accuracies):
            rows.append({
                "dataset": ds.name,
                "p": p if p is not None else None,
                "q": q if q is not None else None,
                "mode": mode, "fold": f, "accuracy": acc,
            })
    fixed_means = [means[m] for m, p, _ in SWEEP_MODES if p is not None]
    avg_fixed = sum(fixed_means) / len(fixed_means)
    print(f"fixed-mode average: {avg_fixed:.4f}; learned: {means['learned']:.4f}")
    stats.write_results_csv(
        rows, args.out, columns=["dataset", "p", "q", "mode", "fold", "accuracy"]
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_selfcheck(args) -> int:
    _echo_config(args)
    if args.unsafe_no_mask:
        model._set_unsafe_no_mask(True)
    try:
        results = selfcheck.run_all(seed=args.seed, quick=args.quick)
    finally:
        model._set_unsafe_no_mask(False)
    for r in results:
        print(r.one_line())
        for failure in r.failures[:5]:
            print(f"  {failure}")
    bad = [r for r in results if not r.ok]
    print(f"{len(results) - len(bad)}/{len(results)} suites passed")
    return 2 if bad else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="pinet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-iso", help="generate the isomorphism-classification dataset")
    p.add_argument("--nodes", type=_pos_int, default=50)
    p.add_argument("--classes", type=_pos_int, default=5)
    p.add_argument("--copies", type=_pos_int, default=100, help="graphs per class")
    p.add_argument("--edge-prob", type=_open_prob, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--provenance-out", default=None)
    p.set_defaults(func=cmd_gen_iso)

    p = sub.add_parser("train", help="train on a full dataset and report training accuracy")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--params-out", default=None, help="write a parameter checkpoint here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--k", type=_pos_int, default=10)
    p.add_argument("--out", default=None, help="per-fold CSV")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("iso-exp", help="accuracy vs training-set size on a generated dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--provenance", default=None,
                   help="provenance file (default: <data>.prov.json)")
    p.add_argument("--sizes", type=_sizes_list, default=[1, 2, 5, 10],
                   help="comma-separated training examples per class")
    p.add_argument("--trials", type=_pos_int, default=10)
    # The unnormalized adjacency corner separates the structure-only classes;
    # the 0.5 starting point of learned mode sits in a flat region here.
    _add_hyper_flags(p, pq_default="1,0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iso_exp)

    p = sub.add_parser("sweep", help="cross-validate the four fixed (p,q) corners and learned mode")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--k", type=_pos_int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selfcheck", help="run the randomized consistency suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="smaller case counts")
    p.add_argument("--unsafe-no-mask", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ShapeError, DataFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1
    except (GenerationError, TrainingError, TapeError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
