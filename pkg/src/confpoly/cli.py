"""Command-line interface.

Exit status: 0 on success, 1 on domain errors, 2 on usage errors. Errors are
written to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .credibility import ratio_scan
from .dataset import dataset_dict, ingest_dataset, matrix_from_json
from .errors import ConfpolyError
from .fom import FomSpec, fom_interval, mle_estimate
from .geometry import SamplerOptions, bounding_box, chebyshev_center, hit_and_run_sample
from .mesh import mesh_qubit_polytope
from .polytope import build_polytope, grouping_scheme
from .simulation import RNG_ALGORITHM, coverage, make_state, sample_counts, standard_povm


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(payload, path):
    _emit(json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n", path)


def _envelope(args, ds=None, seeds=None, options=None):
    out = {"tool": {"name": "confpoly", "version": __version__}, "command": args.command}
    if ds is not None:
        out["input_sha256"] = ds.sha256
    out["seeds"] = seeds or {}
    out["options"] = options or {}
    return out


def _sampler_opts(args):
    return SamplerOptions(burn_in=args.burn_in, thinning=args.thinning, chains=args.chains,
                          psd_method=args.psd_method)


def _polytope(ds):
    return build_polytope(ds.povm, ds.counts, ds.epsilon, ds.epsilon_split, ds.groups or None)


def _reference(spec, ds):
    if spec is None:
        return None
    if spec == "mle":
        return mle_estimate(ds.povm, ds.counts).state
    if spec.endswith(".json"):
        with open(spec, encoding="utf-8") as fh:
            return matrix_from_json(json.load(fh), ds.dim, "/")
    return make_state(spec)


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_build(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    out = _envelope(args, ds, options={"epsilon": ds.epsilon, "epsilon_split": ds.epsilon_split.to_dict(),
                                       "groups": [list(g) for g in ds.groups]})
    out["polytope"] = poly.to_dict()
    _emit_json(out, args.output)


def cmd_bbox(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    out = _envelope(args, ds)
    out["bounding_box"] = bounding_box(poly).to_dict()
    center, radius = chebyshev_center(poly)
    out["chebyshev"] = {"center": center, "radius": radius}
    _emit_json(out, args.output)


def cmd_sample(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    opts = _sampler_opts(args)
    samples = hit_and_run_sample(poly, args.count, args.seed, opts)
    out = _envelope(args, ds, {"sampler": args.seed, "rng": RNG_ALGORITHM},
                    {"count": args.count, **opts.to_dict()})
    out["samples"] = samples.to_dict()
    _emit_json(out, args.output)


def _fom_specs(args, ds):
    ref = _reference(args.reference, ds)
    specs = []
    for name in args.fom:
        if name == "negativity":
            dims = _int_list(args.dims) if args.dims else [2] * int(round(np.log2(ds.dim)))
            specs.append(FomSpec(name, dims=tuple(dims), cut=args.cut))
        else:
            specs.append(FomSpec(name, reference=ref))
    return specs


def cmd_fom(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    opts = _sampler_opts(args)
    specs = _fom_specs(args, ds)
    samples = hit_and_run_sample(poly, args.samples, args.seed, opts)
    out = _envelope(args, ds, {"sampler": args.seed, "rng": RNG_ALGORITHM},
                    {"samples": args.samples, "reference": args.reference, **opts.to_dict()})
    out["intervals"] = [fom_interval(poly, s, samples=samples).to_dict() for s in specs]
    _emit_json(out, args.output)


def cmd_report(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    opts = _sampler_opts(args)
    out = _envelope(args, ds, {"sampler": args.seed, "rng": RNG_ALGORITHM},
                    {"samples": args.samples, "reference": args.reference, **opts.to_dict()})
    out["facets"] = [f.to_dict() for f in poly.facets]
    out["epsilon_total"] = poly.epsilon_total
    out["bounding_box"] = bounding_box(poly).to_dict()
    center, radius = chebyshev_center(poly)
    out["chebyshev"] = {"center": center, "radius": radius}
    mle = mle_estimate(ds.povm, ds.counts)
    out["mle"] = {**mle.to_dict(), "state": [[[z.real, z.imag] for z in row] for row in mle.state]}
    if args.fom:
        samples = hit_and_run_sample(poly, args.samples, args.seed, opts)
        out["intervals"] = [fom_interval(poly, s, samples=samples).to_dict()
                            for s in _fom_specs(args, ds)]
    _emit_json(out, args.output)


def cmd_mesh(args):
    ds = ingest_dataset(args.dataset)
    poly = _polytope(ds)
    out = _envelope(args, ds, options={"angle_step_deg": 5})
    out.update(mesh_qubit_polytope(poly))
    _emit_json(out, args.output)


def _groups_from_scheme(text, k):
    if not text:
        return None
    return grouping_scheme(k, _int_list(text))


def cmd_simulate(args):
    povm = standard_povm(args.povm)
    rho = make_state(args.state)
    counts = sample_counts(rho, povm, args.n, args.seed)
    groups = _groups_from_scheme(args.scheme, len(povm)) or ()
    meta = {"state": args.state, "povm": args.povm, "n": args.n, "seed": args.seed,
            "rng": RNG_ALGORITHM, "tool_version": __version__}
    _emit_json(dataset_dict(povm.elements, counts, args.epsilon, None, groups, meta), args.output)


def cmd_coverage(args):
    povm = standard_povm(args.povm)
    rho = make_state(args.state)
    groups = _groups_from_scheme(args.scheme, len(povm))
    res = coverage(rho, povm, args.n, args.epsilon, args.reps, args.seed, groups, threads=args.threads)
    out = _envelope(args, None, {"coverage": args.seed, "rng": RNG_ALGORITHM},
                    {"state": args.state, "povm": args.povm, "n": args.n,
                     "epsilon": args.epsilon, "reps": args.reps, "scheme": args.scheme})
    out["coverage"] = res.to_dict()
    _emit_json(out, args.output)


CSV_FIELDS = ["d", "n", "rep", "eps", "eps_b_hat", "stderr", "ess", "ratio"]


def cmd_credibility(args):
    rows = ratio_scan(_int_list(args.dims), _int_list(args.ns), args.reps, args.epsilon,
                      args.seed, args.mc, args.method, args.threads)
    buf = io.StringIO()
    buf.write(f"# confpoly {__version__} seed={args.seed} mc={args.mc} method={args.method} "
              f"rng={RNG_ALGORITHM}\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    _emit(buf.getvalue(), args.output)


def _add_sampler_flags(p, samples_flag="--samples", default=10_000):
    p.add_argument(samples_flag, type=int, default=default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--psd-method", choices=["analytic", "bisect"], default="analytic")


def _add_fom_flags(p, required):
    p.add_argument("--fom", action="append", choices=["fidelity", "trace_distance", "negativity"],
                   required=required, help="repeatable")
    p.add_argument("--reference", help="bell, ghz:S, noisy_bell:P, mixed:D, mle, or a .json matrix")
    p.add_argument("--dims", help="subsystem dimensions for negativity, e.g. 2,2")
    p.add_argument("--cut", type=int, default=1)


def build_parser():
    parser = _Parser(prog="confpoly", description="Confidence polytopes for quantum state tomography")
    parser.add_argument("--version", action="version", version=f"confpoly {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_dataset(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("dataset")
        p.add_argument("-o", "--output")
        p.set_defaults(func=func)
        return p

    with_dataset("build", cmd_build, "write the facet list")
    with_dataset("bbox", cmd_bbox, "bounding box and Chebyshev ball")
    p = with_dataset("sample", cmd_sample, "hit-and-run samples from the region")
    _add_sampler_flags(p, "--count", 1000)
    p = with_dataset("fom", cmd_fom, "figure-of-merit confidence intervals")
    _add_fom_flags(p, required=True)
    _add_sampler_flags(p)
    p = with_dataset("report", cmd_report, "facets, box, Chebyshev ball, MLE and intervals")
    _add_fom_flags(p, required=False)
    _add_sampler_flags(p)
    with_dataset("mesh", cmd_mesh, "triangle mesh of a qubit region")

    p = sub.add_parser("simulate", help="write a simulated dataset")
    p.add_argument("--state", required=True)
    p.add_argument("--povm", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--scheme", help="grouping scheme such as 2,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="empirical coverage over repeated simulations")
    p.add_argument("--state", required=True)
    p.add_argument("--povm", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--scheme")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("credibility", help="confidence/credibility ratio scan (CSV)")
    p.add_argument("--dims", default="2")
    p.add_argument("--ns", default="1000")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--mc", type=int, default=200_000)
    p.add_argument("--method", choices=["auto", "prior", "laplace"], default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_credibility)
    return parser


def _error(payload):
    sys.stderr.write(json.dumps(payload) + "\n")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _error({"error": "UsageError", "message": str(exc)})
        return 2
    try:
        args.func(args)
    except ConfpolyError as exc:
        _error(exc.to_dict())
        return 1
    except (OSError, ValueError) as exc:
        _error({"error": type(exc).__name__, "message": str(exc)})
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
