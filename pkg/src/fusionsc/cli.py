"""Command-line front end.

Subcommands: synth (generate a union-of-subspaces instance), fit (one
fused fit at a fixed weight), path (weight sweep with model selection),
complete (fill missing entries), eval (score labels and completions).
Every run that writes artifacts also writes a manifest recording the
command line, resolved parameters, and library versions; re-running the
recorded command line reproduces the label and table files byte for
byte.

Exit codes: 0 success, 1 user or data error, 2 numerical failure.
"""

import argparse
import dataclasses
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .completion import cluster_basis, complete_matrix, refit_clusters
from .errors import InputError, NumericalError
from .matrixio import (
    read_labels,
    read_matrix,
    write_labels,
    write_manifest,
    write_mask,
    write_matrix,
    write_table,
)
from .metrics import clustering_error, completion_rmse
from .optimizer import FscConfig, fit, lambda_scale
from .selection import fused_components, lambda_path, select_model
from .spectral import cluster
from .synthetic import gen_mask, gen_uos

__all__ = ["RunConfig", "build_parser", "main"]

PROG = "fsc"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one invocation, as stored in manifests."""

    command: str
    params: dict

    def to_payload(self) -> dict:
        return {"command": self.command, "params": dict(self.params)}

    @classmethod
    def from_payload(cls, payload: dict) -> "RunConfig":
        return cls(str(payload["command"]), dict(payload["params"]))


def _versions() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "fusionsc": __version__,
    }


class _Parser(argparse.ArgumentParser):
    """Argument errors exit 1; exit 2 is reserved for numerical failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_fit_flags(sub, with_lambda=True):
    sub.add_argument("input", help="matrix CSV, rows = dimensions")
    sub.add_argument("--mask", help="0/1 CSV overriding inline missing markers")
    sub.add_argument("--rank", type=int, required=True,
                     help="subspace dimension per column")
    if with_lambda:
        sub.add_argument("--lambda", dest="lam", type=float, default=0.0,
                         help="fusion weight (default 0)")
    sub.add_argument("--k", type=int, default=None,
                     help="cluster count; omit to infer")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--max-iters", type=int, default=2000)
    sub.add_argument("--tol", type=float, default=1e-8,
                     help="relative objective-decrease stopping tolerance")
    sub.add_argument("--init", choices=("column", "gaussian"), default="column",
                     help="basis initialization")
    sub.add_argument("--tol-fuse", type=float, default=0.5,
                     help="projector distance under which bases count as merged")


def _add_common(sub):
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--threads", type=int, default=None,
                     help="cap BLAS worker threads")


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"{PROG} {__version__}")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)

    p = subs.add_parser("synth",
                        help="generate a union-of-subspaces instance")
    p.add_argument("--d", type=int, default=100, help="ambient dimension")
    p.add_argument("--k", type=int, default=4, help="number of subspaces")
    p.add_argument("--rank", type=int, default=5, help="subspace dimension")
    p.add_argument("--per-cluster", type=int, default=20,
                   help="points per subspace")
    p.add_argument("--sigma", type=float, default=0.0, help="noise level")
    p.add_argument("--p", type=float, default=1.0,
                   help="observation probability; < 1 writes a mask file")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("fit",
                        help="one fused fit at a fixed weight")
    _add_fit_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("path",
                        help="fusion-weight sweep with model selection")
    _add_fit_flags(p, with_lambda=False)
    p.add_argument("--grid", default=None,
                   help="comma-separated fusion weights; default is a "
                        "data-scaled grid starting at 0")
    _add_common(p)
    p.set_defaults(func=cmd_path)

    p = subs.add_parser("complete",
                        help="fill missing entries from the fitted clusters")
    _add_fit_flags(p)
    p.add_argument("--labels", dest="labels_path", default=None,
                   help="use these labels instead of clustering")
    p.add_argument("--smooth", action="store_true",
                   help="replace observed entries by the model too")
    _add_common(p)
    p.set_defaults(func=cmd_complete)

    p = subs.add_parser("eval",
                        help="score predicted labels and completed matrices")
    p.add_argument("--pred", help="predicted labels file")
    p.add_argument("--truth", help="true labels file")
    p.add_argument("--completed", help="completed matrix CSV")
    p.add_argument("--reference", help="reference matrix CSV")
    p.add_argument("--mask", help="0/1 CSV; scores completion on unobserved "
                                  "entries only")
    p.set_defaults(func=cmd_eval)
    return parser


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _manifest(args, params: dict) -> None:
    payload = RunConfig(args.command, params).to_payload()
    payload["argv"] = list(args.run_argv)
    payload["versions"] = _versions()
    write_manifest(os.path.join(args.out, "manifest.json"), payload)


def _load_input(args):
    x = read_matrix(args.input, args.mask)
    cfg = FscConfig(rank=args.rank, lam=getattr(args, "lam", 0.0),
                    max_iters=args.max_iters, tol_rel=args.tol,
                    init=args.init, seed=args.seed)
    return x, cfg


def _config_params(args, cfg: FscConfig) -> dict:
    params = {
        "input": args.input,
        "mask": args.mask,
        "k": args.k,
        "out": args.out,
        "tol_fuse": args.tol_fuse,
    }
    params.update({
        "rank": cfg.rank, "lam": cfg.lam, "max_iters": cfg.max_iters,
        "tol": cfg.tol_rel, "init": cfg.init, "seed": cfg.seed,
    })
    return params


def _write_cluster_bases(out, bases, labels):
    for label in np.unique(labels):
        basis = cluster_basis(bases, labels, label)
        write_matrix(os.path.join(out, f"basis_{int(label):03d}.csv"), basis)


def cmd_synth(args) -> int:
    out = _outdir(args)
    inst = gen_uos(args.d, args.k, args.rank, args.per_cluster,
                   sigma=args.sigma, seed=args.seed)
    params = dict(inst.params)
    params.update({"p": args.p, "out": args.out})
    write_matrix(os.path.join(out, "values.csv"), inst.values)
    if args.p < 1.0:
        mask, resampled = gen_mask(inst.d, inst.n, args.p, seed=args.seed)
        write_mask(os.path.join(out, "mask.csv"), mask)
        params["resampled_columns"] = [int(c) for c in resampled]
    write_labels(os.path.join(out, "labels.csv"), inst.true_labels)
    _manifest(args, params)
    return 0


def cmd_fit(args) -> int:
    out = _outdir(args)
    x, cfg = _load_input(args)
    bases, trace = fit(x, cfg)
    count, fused_labels = fused_components(bases, tol_fuse=args.tol_fuse)
    if args.k is None:
        labels = fused_labels
    else:
        labels = cluster(bases, n_clusters=args.k, seed=args.seed)
    write_labels(os.path.join(out, "labels.csv"), labels)
    _write_cluster_bases(out, bases, labels)
    write_table(os.path.join(out, "trace.tsv"), ["iteration", "objective"],
                list(enumerate(trace.objectives)))
    write_table(os.path.join(out, "summary.tsv"),
                ["objective", "iterations", "converged", "fused_count",
                 "n_clusters"],
                [[trace.objectives[-1], trace.iterations, trace.converged,
                  count, int(np.unique(labels).size)]])
    _manifest(args, _config_params(args, cfg))
    return 0


def _parse_grid(text):
    if text is None:
        return None
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"--grid must be comma-separated numbers, got {text!r}"
                         ) from None
    if not values:
        raise InputError("--grid is empty")
    return sorted(values)


def cmd_path(args) -> int:
    out = _outdir(args)
    x, cfg = _load_input(args)
    grid = _parse_grid(args.grid)
    k_values = None if args.k is None else [args.k]
    report = lambda_path(x, grid, cfg, tol_fuse=args.tol_fuse,
                         k_values=k_values)
    rows = [[e.lam, e.cluster_count, e.n_clusters, e.objective, e.fit_score,
             e.converged] for e in report.entries]
    write_table(os.path.join(out, "path.tsv"),
                ["lambda", "cluster_count", "n_clusters", "objective",
                 "fit_score", "converged"], rows)
    lam, model = select_model(report, x)
    write_labels(os.path.join(out, "labels.csv"), model.labels)
    write_table(os.path.join(out, "summary.tsv"),
                ["selected_lambda", "n_clusters", "failures"],
                [[lam, model.n_clusters, len(report.failures)]])
    params = _config_params(args, cfg)
    del params["lam"]
    params["grid"] = grid
    _manifest(args, params)
    return 0


def cmd_complete(args) -> int:
    out = _outdir(args)
    x, cfg = _load_input(args)
    if args.labels_path is not None:
        labels = read_labels(args.labels_path)
        if labels.size != x.n:
            raise InputError(
                f"{args.labels_path}: {labels.size} labels for {x.n} columns")
    else:
        bases, _ = fit(x, cfg)
        if args.k is not None:
            labels = cluster(bases, n_clusters=args.k, seed=args.seed)
        else:
            labels = fused_components(bases, tol_fuse=args.tol_fuse)[1]
    # each group refit alone under strong fusion: its consensus basis
    # interpolates the group's observed entries far better than pooled
    # independent column fits
    bases = refit_clusters(x, labels, cfg)
    predicted, model = complete_matrix(x, bases, labels)
    completed = predicted if args.smooth else np.where(x.mask, x.values,
                                                       predicted)
    write_matrix(os.path.join(out, "completed.csv"), completed)
    write_labels(os.path.join(out, "labels.csv"), model.labels)
    params = _config_params(args, cfg)
    params.update({"labels": args.labels_path, "smooth": bool(args.smooth)})
    _manifest(args, params)
    return 0


def cmd_eval(args) -> int:
    did = False
    if (args.pred is None) != (args.truth is None):
        raise InputError("--pred and --truth must be given together")
    if args.pred is not None:
        err = clustering_error(read_labels(args.pred), read_labels(args.truth))
        print(f"clustering_error\t{format(err, '.17g')}")
        did = True
    if (args.completed is None) != (args.reference is None):
        raise InputError("--completed and --reference must be given together")
    if args.completed is not None:
        xhat = read_matrix(args.completed)
        ref = read_matrix(args.reference)
        if args.mask is not None:
            from .matrixio import read_mask
            rmse = completion_rmse(xhat.values, ref.values,
                                   mask=read_mask(args.mask),
                                   scope="unobserved")
            print(f"completion_rmse_unobserved\t{format(rmse, '.17g')}")
        else:
            rmse = completion_rmse(xhat.values, ref.values, scope="all")
            print(f"completion_rmse_all\t{format(rmse, '.17g')}")
        did = True
    if not did:
        raise InputError("nothing to evaluate; pass --pred/--truth or "
                         "--completed/--reference")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    parser = build_parser()
    args = parser.parse_args(argv)
    args.run_argv = argv
    try:
        threads = getattr(args, "threads", None)
        if threads is not None:
            if threads < 1:
                raise InputError(f"--threads must be >= 1, got {threads}")
            import threadpoolctl

            with threadpoolctl.threadpool_limits(limits=threads):
                return args.func(args)
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"{PROG}: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
