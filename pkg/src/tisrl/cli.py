"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 solver stopped at max_iters
(results are still written).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dataset_io, metrics
from .dataset_io import SynthSpec
from .solver import CONVERGED, TisrlConfig, intrinsic_affinity, run, write_trace
from .spectral import SpectralConfig, cluster

log = logging.getLogger("tisrl")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
METRIC_KEYS = ("nmi", "acc", "fscore", "precision")


class InputError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _json_metrics(values: dict) -> str:
    """Flat JSON object with every float rendered to exactly six decimals."""
    lines = []
    for key, val in values.items():
        if isinstance(val, dict):
            inner = ", ".join(f'"{k}": {_fmt(v)}' for k, v in val.items())
            lines.append(f'  "{key}": {{{inner}}}')
        elif isinstance(val, float):
            lines.append(f'  "{key}": {_fmt(val)}')
        elif isinstance(val, str):
            lines.append(f'  "{key}": "{val}"')
        else:
            lines.append(f'  "{key}": {val}')
    return "{\n" + ",\n".join(lines) + "\n}\n"


def _load(args) -> dataset_io.MultiViewDataset:
    ds = dataset_io.load(args.data)
    if args.normalize:
        ds = dataset_io.normalize(ds)
    return ds


def _num_clusters(args, ds) -> int:
    k = args.k if args.k is not None else ds.k
    if k is None:
        raise InputError("number of clusters unknown: pass --k or set num_clusters in the manifest")
    if not 1 <= k <= ds.n:
        raise InputError(f"--k {k} outside 1..{ds.n}")
    return k


def _cluster_once(ds, lam, k, seed, repeats, max_iters):
    """Solve once, then run spectral clustering ``repeats`` times with seeds seed..seed+repeats-1."""
    result = run(ds, TisrlConfig(lam=lam, max_iters=max_iters))
    A = intrinsic_affinity(result.state)
    runs = [cluster(A, SpectralConfig(k=k, seed=seed + r)) for r in range(repeats)]
    return result, A, runs


def _average_metrics(truth, runs):
    scores = [metrics.evaluate(truth, labels) for labels in runs]
    mean = {key: float(np.mean([s[key] for s in scores])) for key in METRIC_KEYS}
    std = {key: float(np.std([s[key] for s in scores])) for key in METRIC_KEYS}
    return mean, std


def cmd_cluster(args) -> int:
    if args.repeats < 1:
        raise InputError("--repeats must be at least 1")
    if not args.lam > 0:
        raise InputError(f"--lambda must be positive, got {args.lam}")
    ds = _load(args)
    k = _num_clusters(args, ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    result, A, runs = _cluster_once(ds, args.lam, k, args.seed, args.repeats, args.max_iters)
    dataset_io.write_labels(runs[0], out / "labels.csv")
    np.savetxt(out / "affinity.csv", A, fmt="%.6e", delimiter=",")
    if not args.no_trace:
        write_trace(result.trace, out / "trace.csv")
    mpath = out / "metrics.json"
    if ds.labels is not None:
        mean, std = _average_metrics(ds.labels, runs)
        payload = dict(mean)
        payload.update(repeats=args.repeats, std=std, iterations=result.iterations, status=result.status)
        mpath.write_text(_json_metrics(payload), encoding="utf-8")
    elif mpath.exists():
        mpath.unlink()
    log.info("%s after %d iterations", result.status, result.iterations)
    return EXIT_OK if result.status == CONVERGED else EXIT_NOT_CONVERGED


def cmd_synth(args) -> int:
    dims = None
    if args.dims:
        try:
            dims = tuple(int(d) for d in args.dims.split(","))
        except ValueError:
            raise InputError(f"--dims must be a comma-separated list of integers, got {args.dims!r}") from None
    spec = SynthSpec(v=args.views, n=args.n, k=args.k, r=args.r, sigma=args.sigma, seed=args.seed, dims=dims)
    dataset_io.save(dataset_io.synth(spec), args.out)
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"--lambdas must be a comma-separated list of numbers, got {text!r}") from None
    if not grid or any(not lam > 0 for lam in grid):
        raise InputError("--lambdas must be a nonempty list of positive values")
    return grid


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.lambdas)
    ds = _load(args)
    k = _num_clusters(args, ds)
    if ds.labels is None:
        raise InputError("sweep needs ground-truth labels")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "nmi", "acc", "fscore", "precision", "iters", "status"])
        for lam in grid:
            try:
                result, _, runs = _cluster_once(ds, lam, k, args.seed, args.repeats, args.max_iters)
                mean, _ = _average_metrics(ds.labels, runs)
                w.writerow([repr(lam)] + [_fmt(mean[key]) for key in METRIC_KEYS]
                           + [result.iterations, result.status])
            except (ValueError, np.linalg.LinAlgError) as exc:
                log.warning("lambda=%g failed: %s", lam, exc)
                w.writerow([repr(lam), "", "", "", "", 0, f"error: {exc}"])
    return EXIT_OK


def cmd_eval(args) -> int:
    truth = dataset_io.read_labels(args.truth)
    pred = dataset_io.read_labels(args.pred)
    if truth.shape != pred.shape:
        raise InputError(f"{args.truth} has {truth.size} labels, {args.pred} has {pred.size}")
    text = _json_metrics(metrics.evaluate(truth, pred))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory (manifest.json + CSVs)")
    p.add_argument("--k", type=int, default=None, help="number of clusters (default: manifest value)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true", help="scale every sample to unit norm per view")
    p.add_argument("--repeats", type=int, default=1, help="spectral clustering repeats to average")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out", required=True, help="output directory")


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default status 2 means non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tisrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="learn the intrinsic affinity and cluster a dataset")
    _solver_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--no-trace", action="store_true", help="skip writing trace.csv")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="write a synthetic union-of-subspaces dataset")
    p.add_argument("--views", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default=None, help="comma-separated ambient dims (default 2*k*r each)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="cluster once per lambda and tabulate metrics")
    _solver_flags(p)
    p.add_argument("--lambdas", required=True, help="comma-separated lambda grid")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", default=None, help="also write metrics.json here")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
