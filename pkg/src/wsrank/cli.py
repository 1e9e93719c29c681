"""Command-line front end.

Exit status is 0 on success, 2 when inputs fail validation and 1 for any
other runtime error. The resolved configuration of every run is logged to
stderr. Output paths default to ``$WSRANK_OUTPUT_DIR`` (or ``./wsrank-out``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from .barcode import Bar, Barcode, barcode_to_csv, parse_exponent, read_barcode
from .contours import STANDARD, load_contour, transform_barcode
from .distances import MetricChoice, pairwise_matrix, wasserstein_pp
from .homology import h0_sublevel_graph, h0_superlevel, read_graph
from .knn import knn_loocv_from_matrix, metric_matrix
from .learning import MetricParams, TrainConfig, load_train_config, params_from_config, train
from .reduction import (bar_to_bar, build_copresentation, build_presentation, cokernel_of,
                        epi_bar_to_bar_kernel, epi_dual_reduce, example_presentation, perm_leq_oracle,
                        reduce_columns)
from .stable_rank import interleaving_fast, stable_rank
from .synthetic import generate, load_manifest, read_pgm, write_dataset

log = logging.getLogger("wsrank")

OUTPUT_ENV = "WSRANK_OUTPUT_DIR"
DEFAULT_OUTPUT = "wsrank-out"
# "paper" is kept as an alias for scripts written against the original command line
DEMO_NAMES = ("worked-example", "paper")


class InputError(Exception):
    """Raised for invalid user input; maps to exit status 2."""


def output_dir(explicit: str | None) -> Path:
    return Path(explicit or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def _json_num(x: float):
    return "inf" if math.isinf(x) else float(x)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _metric(args) -> MetricChoice:
    return MetricChoice(p=args.p, q=args.q, contour=load_contour(args.contour))


def _add_metric_flags(sp: argparse.ArgumentParser, q: bool = True) -> None:
    sp.add_argument("--p", type=parse_exponent, default=1.0, help="bar exponent, a real >= 1 or 'inf'")
    if q:
        sp.add_argument("--q", type=parse_exponent, default=1.0, help="noise exponent, a real >= 1 or 'inf'")
    sp.add_argument("--contour", default="standard",
                    help="'standard', an inline JSON object, or a path to contour JSON")


# --- subcommands -----------------------------------------------------------


def cmd_stable_rank(args) -> None:
    f = stable_rank(read_barcode(args.barcode), _metric(args))
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("value,inverse\n")
        for v, t in f.inverse_pairs():
            buf.write(f"{v},{_fmt(t)}\n")
        _emit(buf.getvalue(), args.out)
    else:
        _emit(json.dumps(f.to_dict()) + "\n", args.out)


def _emit_scalar(name: str, value: float, args) -> None:
    if args.format == "csv":
        _emit(f"{name}\n{_fmt(value)}\n", args.out)
    else:
        _emit(json.dumps({name: _json_num(value)}) + "\n", args.out)


def cmd_interleave(args) -> None:
    d = interleaving_fast(read_barcode(args.x), read_barcode(args.y), _metric(args))
    _emit_scalar("distance", d, args)


def cmd_wasserstein(args) -> None:
    C = load_contour(args.contour)
    X = transform_barcode(C, read_barcode(args.x))
    Y = transform_barcode(C, read_barcode(args.y))
    _emit_scalar("distance", wasserstein_pp(X, Y, args.p), args)


def cmd_distance_matrix(args) -> None:
    if args.manifest:
        data = load_manifest(args.manifest, jobs=args.jobs)
        ids, barcodes = list(data.ids), list(data.barcodes)
    elif args.barcodes:
        ids = [Path(p).stem for p in args.barcodes]
        barcodes = [read_barcode(p) for p in args.barcodes]
    else:
        raise InputError("distance-matrix needs --manifest or --barcodes")
    m = _metric(args)
    if args.distance == "interleave":
        D = pairwise_matrix(barcodes, lambda X, Y: interleaving_fast(X, Y, m), jobs=args.jobs)
    else:
        if m.p != m.q:
            raise InputError("the matching distance is exact only for p = q")
        moved = [transform_barcode(m.contour, X) for X in barcodes]
        D = pairwise_matrix(moved, lambda X, Y: wasserstein_pp(X, Y, m.p), jobs=args.jobs)
    if args.format == "json":
        _emit(json.dumps({"ids": ids, "matrix": [[_json_num(v) for v in row] for row in D]}) + "\n", args.out)
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + ids)
    for sid, row in zip(ids, D):
        w.writerow([sid] + ["inf" if math.isinf(v) else f"{v:.17g}" for v in row])
    _emit(buf.getvalue(), args.out)


def cmd_persistence(args) -> None:
    if args.image:
        X = h0_superlevel(read_pgm(args.image))
    elif args.edges and args.vertices:
        X = h0_sublevel_graph(read_graph(args.edges, args.vertices))
    else:
        raise InputError("persistence needs --image, or --edges with --vertices")
    if args.format == "json":
        _emit(json.dumps([[_json_num(b.birth), _json_num(b.death)] for b in X]) + "\n", args.out)
    else:
        _emit(barcode_to_csv(X), args.out)


def cmd_gen_synthetic(args) -> None:
    if args.n < 1:
        raise InputError("--n must be >= 1")
    out = output_dir(args.out)
    images = generate(args.dataset, args.n, args.seed)
    path = write_dataset(images, out, dataset=args.dataset, seed=args.seed, jobs=args.jobs)
    print(str(path))


def _default_manifest(args) -> Path:
    return Path(args.manifest) if args.manifest else output_dir(None) / "manifest.json"


def cmd_classify(args) -> None:
    data = load_manifest(_default_manifest(args), jobs=args.jobs)
    if args.theta:
        d = json.loads(Path(args.theta).read_text(encoding="utf-8"))
        metric = MetricParams(tuple(d["mu"]), tuple(d["sigma"]), tuple(d["lam"]), d["p"],
                              d.get("floor", 1e-4)).metric()
    else:
        metric = _metric(args)
    D = metric_matrix(data, metric, jobs=args.jobs)
    err = knn_loocv_from_matrix(D, data.labels, data.ids, args.k)
    if args.format == "csv":
        _emit(f"error\n{err!r}\n", args.out)
    else:
        _emit(json.dumps({"error": err, "k": args.k, "n": len(data)}) + "\n", args.out)


def cmd_learn_metric(args) -> None:
    data = load_manifest(_default_manifest(args), jobs=args.jobs)
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    if args.iters is not None:
        cfg.iters = args.iters
    if args.seed is not None:
        cfg.seed = args.seed
    log.info("training config %s", json.dumps(cfg.__dict__))
    theta0 = params_from_config(cfg, data.filtration_range())
    res = train(data, theta0, cfg.iters, cfg.step, cfg.momentum, cfg.sigma_min, cfg.lam_min)
    out = output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "theta.json").write_text(json.dumps(res.theta.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / "trace.csv").write_text(res.trace_csv(), encoding="utf-8")
    print(json.dumps({"initial_loss": res.losses[0], "best_loss": res.best_loss,
                      "theta": res.theta.to_dict()}))


def _parse_morphism(path: str):
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        z = [Bar(float(a), float(b)) for a, b in d["z_bars"]]
        x = [Bar(float(a), float(b)) for a, b in d["x_bars"]]
        supports = [list(s) for s in d["supports"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: expected z_bars, x_bars and supports ({exc})") from None
    return d.get("kind", "mono"), z, x, supports


def cmd_reduce(args) -> None:
    if args.demo in DEMO_NAMES:
        M = example_presentation()
        kind = "mono"
    elif args.input:
        kind, z, x, supports = _parse_morphism(args.input)
        if kind == "epi":
            cop = build_copresentation(z, x, supports)
            red, sigma, ker = epi_dual_reduce(cop)
            _, Mb, _ = bar_to_bar(cop.matrix)
            _, sigma_b = reduce_columns(Mb)
            lines = ["copresentation (reflected):", cop.matrix.dump(), "", "reduced:", red.dump(), "",
                     f"sigma_f = {_perm(sigma)}", f"sigma_b = {_perm(sigma_b)}",
                     f"ker f = {ker!r}", f"ker f_b = {epi_bar_to_bar_kernel(cop)!r}"]
            print("\n".join(lines))
            return
        M = build_presentation(z, x, supports)
    else:
        raise InputError("reduce needs --demo worked-example or --input FILE")
    red, sigma = reduce_columns(M)
    star, Mb, r_max = bar_to_bar(M)
    red_b, sigma_b = reduce_columns(Mb)
    labels = M.col_labels()
    arrows = ", ".join(f"{labels[z]}->{labels[r]}" for z, r in sorted(r_max.items()))
    coker, _ = cokernel_of(M)
    coker_b, _ = cokernel_of(Mb)
    lines = [
        "M_f:", M.dump(), "",
        "reduced M_f:", red.dump(), "",
        "M_f* (after the bar-to-bar pass):", star.dump(), "",
        "M_b:", Mb.dump(), "",
        "reduced M_b:", red_b.dump(), "",
        f"r_max: {arrows}",
        f"sigma_f = {_perm(sigma)}",
        f"sigma_b = {_perm(sigma_b)}",
        f"sigma_b <= sigma_f: {perm_leq_oracle(sigma_b, sigma) if len(sigma) <= 7 else 'n/a'}",
        f"coker f = {coker!r}",
        f"coker f_b = {coker_b!r}",
    ]
    print("\n".join(lines))


def _perm(sigma: Sequence[int]) -> str:
    sep = "" if all(v < 10 for v in sigma) else ","
    return "[" + sep.join(str(v) for v in sigma) + "]"


# --- wiring ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wsrank", description="Wasserstein stable ranks and related distances.")
    ap.add_argument("--jobs", type=int, default=1, help="maximum parallel workers")
    ap.add_argument("--format", choices=("json", "csv"), default="json", help="machine-readable output format")
    ap.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stable-rank", help="stable rank of a barcode")
    sp.add_argument("--barcode", required=True)
    _add_metric_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_stable_rank)

    sp = sub.add_parser("interleave", help="interleaving distance between stable ranks of two barcodes")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    _add_metric_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_interleave)

    sp = sub.add_parser("wasserstein", help="exact p-Wasserstein matching distance after the contour transform")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    _add_metric_flags(sp, q=False)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_wasserstein)

    sp = sub.add_parser("distance-matrix", help="pairwise distances as a square CSV")
    sp.add_argument("--manifest")
    sp.add_argument("--barcodes", nargs="+")
    sp.add_argument("--distance", choices=("interleave", "wasserstein"), default="interleave")
    _add_metric_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_distance_matrix)

    sp = sub.add_parser("persistence", help="degree-0 barcode of a PGM image or a vertex-filtered graph")
    sp.add_argument("--image")
    sp.add_argument("--edges")
    sp.add_argument("--vertices")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_persistence, format_default="csv")

    sp = sub.add_parser("gen-synthetic", help="generate a synthetic two-class image dataset")
    sp.add_argument("--dataset", type=int, choices=(1, 2), required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=50, help="images per class")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_gen_synthetic)

    sp = sub.add_parser("learn-metric", help="learn contour and exponent by projected gradient descent")
    sp.add_argument("--manifest")
    sp.add_argument("--config", help="training config JSON")
    sp.add_argument("--iters", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_learn_metric)

    sp = sub.add_parser("classify", help="leave-one-out k-NN error under the interleaving distance")
    sp.add_argument("--manifest")
    _add_metric_flags(sp)
    sp.add_argument("--theta", help="learned parameters JSON (overrides --p/--contour; q = 1)")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("reduce", help="presentation-matrix reduction and the bar-to-bar algorithm")
    sp.add_argument("--demo", choices=DEMO_NAMES, help="print the built-in worked example")
    sp.add_argument("--input", help="morphism JSON with z_bars, x_bars, supports and kind mono|epi")
    sp.set_defaults(func=cmd_reduce)
    return ap


def _configure_logging(quiet: bool) -> None:
    # a dedicated handler, so embedding callers with their own root config still see the run config
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if quiet else logging.INFO)
    log.propagate = False


def run(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    # global flags may also appear after the subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    hoisted, rest, i = [], [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--jobs", "--format") and i + 1 < len(argv):
            hoisted += [a, argv[i + 1]]
            i += 2
            continue
        if a.startswith(("--jobs=", "--format=")) or a in ("-q", "--quiet"):
            hoisted.append(a)
        else:
            rest.append(a)
        i += 1
    try:
        args = ap.parse_args(hoisted + rest)
    except SystemExit as exc:
        return int(exc.code or 0)
    if "--format" not in " ".join(hoisted) and getattr(args, "format_default", None):
        args.format = args.format_default
    _configure_logging(args.quiet)
    resolved = {k: (str(v) if not isinstance(v, (int, float, str, type(None), list)) else v)
                for k, v in vars(args).items() if k not in ("func", "format_default")}
    log.info("config %s", json.dumps(resolved, default=str))
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (InputError, ValueError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
