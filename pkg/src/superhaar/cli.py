"""Command-line front end.

Four verbs: ``integrate`` a monomial, emit the U(1|1) ``table``,
``verify`` identity suites for a spec, and ``sample`` classical Haar
points.  Machine output is JSON only; the exit code is the verdict
(0 pass, 1 verification failure, 2 usage error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .charts import (
    antipode,
    check_defining_relations,
    decompose,
    embed,
    generator_point,
    random_point,
)
from .grassmann import GaussianRational
from .groups import osp, rational_point, sample_classical_batch, u, uosp
from .integration import (
    ExactIntegrationError,
    HaarStrategy,
    density_equation_nullity,
    integrate,
    u11_table,
    verify_density_pde,
    verify_invariance_mc,
    verify_odd_annihilation_exact,
    verify_translation_exact,
    verify_translation_mc,
)
from .supermatrix import SuperMatrix, symplectic_int
from .symbols import parse_monomial

_TOL = 1e-10


def parse_spec(text):
    """Parse ``osp:m=M,n=N``, ``u:p=P,q=Q`` or ``uosp:m=M,n=N``."""
    makers = {"osp": (osp, ("m", "n")), "u": (u, ("p", "q")), "uosp": (uosp, ("m", "n"))}
    family, sep, rest = text.partition(":")
    family = family.strip().lower()
    if not sep or family not in makers:
        raise argparse.ArgumentTypeError(
            f"cannot parse spec {text!r}: expected osp:m=M,n=N | u:p=P,q=Q | uosp:m=M,n=N"
        )
    make, keys = makers[family]
    fields = {}
    for part in rest.split(","):
        key, eq, val = part.partition("=")
        if not eq:
            raise argparse.ArgumentTypeError(f"malformed spec field {part!r}")
        fields[key.strip()] = val.strip()
    if set(fields) != set(keys):
        raise argparse.ArgumentTypeError(
            f"spec {text!r} needs exactly the fields {keys[0]} and {keys[1]}"
        )
    try:
        a, b = (int(fields[k]) for k in keys)
        return make(a, b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad spec {text!r}: {exc}")


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SUPERHAAR_SEED", "").strip()
    return int(env) if env else 0


def _emit(payload, out_path):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rational_str(gr: GaussianRational):
    return {"re": str(gr.re), "im": str(gr.im)}


# ---------------------------------------------------------------------------
# verbs


def _cmd_integrate(args):
    spec = args.spec
    try:
        f = parse_monomial(spec, args.monomial)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    strategy = HaarStrategy(
        mode=args.mode, samples=args.samples, seed=_resolve_seed(args)
    )
    try:
        res = integrate(spec, f, strategy)
    except ExactIntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = {"spec": str(spec), "monomial": args.monomial}
    payload.update(res.to_json_dict())
    _emit(payload, args.out)
    return 0


def _cmd_table(args):
    rows = u11_table(max_even=args.max_exp)
    cells = []
    matches = 0
    for r in rows:
        matches += bool(r["match"])
        cells.append(
            {
                "alpha": list(r["alpha"]),
                "beta": list(r["beta"]),
                "computed": _rational_str(r["computed"]),
                "predicted": _rational_str(r["predicted"]),
                "match": bool(r["match"]),
            }
        )
    payload = {
        "table": "u11",
        "max_exp": args.max_exp,
        "cells": cells,
        "cells_total": len(cells),
        "matches": matches,
        "mismatches": len(cells) - matches,
    }
    _emit(payload, args.out)
    return 0


def _charts_suite(spec, seed, trials):
    rng = np.random.default_rng(seed)
    ng = spec.n_grassmann
    worst_rel = worst_anti = worst_law = 0.0
    for _ in range(trials):
        p = random_point(spec, rng)
        xm = embed(p)
        resid = check_defining_relations(spec, xm, pairs=p.pairs)
        worst_rel = max(worst_rel, max(resid.values()))
        ident = SuperMatrix.identity(spec.even_size, spec.odd_size, xm.n)
        worst_anti = max(
            worst_anti, (antipode(spec, xm).group_product(xm) - ident).max_abs()
        )
    for _ in range(trials):
        p1 = random_point(spec, rng, n=2 * ng, offset=0)
        p2 = random_point(spec, rng, n=2 * ng, offset=ng)
        m = embed(p1).group_product(embed(p2))
        # p1.pairs already spans the doubled algebra (both windows pair
        # consecutively), so it serves the product too
        q = decompose(spec, m, pairs=p1.pairs)
        worst_law = max(worst_law, (embed(q) - m).max_abs())
    return [
        {
            "suite": "charts",
            "anchor": "defining-relations",
            "max_residual": worst_rel,
            "pass": worst_rel <= _TOL,
        },
        {
            "suite": "charts",
            "anchor": "antipode-inverse",
            "max_residual": worst_anti,
            "pass": worst_anti <= _TOL,
        },
        {
            "suite": "charts",
            "anchor": "group-law-roundtrip",
            "max_residual": worst_law,
            "pass": worst_law <= _TOL,
        },
    ]


def _algebra_suite(spec, seed):
    from . import superalgebra as sa

    rng = np.random.default_rng(seed)
    checks = []
    mism = sa.verify_bracket(spec)
    checks.append(
        {
            "suite": "algebra",
            "anchor": "structure-constants",
            "mismatches": mism,
            "pass": mism == 0,
        }
    )
    if spec.family == "osp":
        jac = sa.jacobi_mismatches_osp(spec)
        checks.append(
            {
                "suite": "algebra",
                "anchor": "super-jacobi",
                "mismatches": jac,
                "pass": jac == 0,
            }
        )
    if spec.family == "uosp":
        return checks
    point = generator_point(spec, rational_point(spec, rng))
    if spec.family == "osp":
        r = sa.compare_osp_realization(spec, point)
    else:
        p, q = spec.dims
        pmat = [[int(rng.integers(-2, 3)) for _ in range(p)] for _ in range(p)]
        qmat = [[int(rng.integers(-2, 3)) for _ in range(q)] for _ in range(q)]
        r = max(
            sa.compare_u_realization(spec, point),
            sa.compare_u_even_realization(spec, point, pmat, qmat),
        )
    checks.append(
        {
            "suite": "algebra",
            "anchor": "realized-derivations",
            "max_residual": r,
            "pass": r <= _TOL,
        }
    )
    return checks


def _density_suite(spec, corrupt):
    rep = verify_density_pde(spec, corrupt=corrupt)
    checks = [
        {
            "suite": "density",
            "anchor": "determinant-derivative",
            "pass": rep["det_derivative"],
        },
        {
            "suite": "density",
            "anchor": "inverse-root-equation",
            "pass": rep["inverse_equation"],
        },
    ]
    if rep["closed_form_n1"] is not None:
        checks.append(
            {
                "suite": "density",
                "anchor": "n1-closed-form",
                "pass": rep["closed_form_n1"],
            }
        )
    if spec.n_grassmann <= 4:
        nullity = density_equation_nullity(spec)
        checks.append(
            {
                "suite": "density",
                "anchor": "solution-space-dimension",
                "nullity": nullity,
                "pass": nullity == 1,
            }
        )
    return checks


def _invariance_suite(spec, seed, samples):
    checks = []
    if spec.family == "u" and spec.dims == (1, 1):
        rep = verify_odd_annihilation_exact(spec, max_degree=2)
        checks.append(
            {
                "suite": "invariance",
                "anchor": "odd-derivation-annihilation",
                "checked": rep["checked"],
                "pass": rep["pass"],
            }
        )
        rep = verify_translation_exact(spec, max_degree=2)
        checks.append(
            {
                "suite": "invariance",
                "anchor": "left-translation",
                "checked": rep["checked"],
                "pass": rep["pass"],
            }
        )
        return checks
    strategy = HaarStrategy(mode="mc", samples=samples, seed=seed)
    rep = verify_invariance_mc(spec, strategy, n_polys=5)
    worst = max(
        (c["estimate"] / c["stderr"] for c in rep["checks"] if c["stderr"]),
        default=0.0,
    )
    checks.append(
        {
            "suite": "invariance",
            "anchor": "odd-derivation-annihilation",
            "checks": len(rep["checks"]),
            "worst_sigma": worst,
            "pass": rep["pass"],
        }
    )
    rep = verify_translation_mc(spec, strategy, n_polys=3)
    checks.append(
        {
            "suite": "invariance",
            "anchor": "left-translation",
            "checks": len(rep["checks"]),
            "pass": rep["pass"],
        }
    )
    return checks


def _cmd_verify(args):
    spec = args.spec
    seed = _resolve_seed(args)
    which = args.suite
    checks = []
    if which in ("all", "charts"):
        checks += _charts_suite(spec, seed, args.trials)
    if which in ("all", "algebra"):
        checks += _algebra_suite(spec, seed)
    # the generator-derivative identities live on the osp chart, where the
    # odd entries are the generators themselves
    if which in ("all", "density") and spec.family == "osp":
        checks += _density_suite(spec, args.corrupt_density)
    if which in ("all", "invariance"):
        checks += _invariance_suite(spec, seed, args.samples)
    ok = all(c["pass"] for c in checks)
    payload = {
        "spec": str(spec),
        "seed": seed,
        "checks": checks,
        "pass": ok,
    }
    _emit(payload, args.out)
    return 0 if ok else 1


def _cmd_sample(args):
    spec = args.spec
    seed = _resolve_seed(args)
    x, y = sample_classical_batch(spec, seed, args.count)
    (fx, _), (fy, _) = spec.classical_factors()

    def factor_residual(kind, batch):
        size = batch.shape[-1]
        ident = np.eye(size)
        herm = np.abs(
            np.einsum("sji,sjk->sik", batch.conj(), batch) - ident
        ).max()
        if kind == "symplectic":
            jm = np.asarray(symplectic_int(size // 2), dtype=float)
            sp = np.abs(
                np.einsum("sji,jk,skl->sil", batch, jm, batch) - jm
            ).max()
            return max(herm, sp)
        return herm

    payload = {
        "spec": str(spec),
        "seed": seed,
        "count": args.count,
        "residuals": {
            "x_factor": factor_residual(fx, x),
            "y_factor": factor_residual(fy, y),
        },
        "first_x": [[[v.real, v.imag] for v in row] for row in np.atleast_2d(x[0]).astype(complex)],
        "first_y": [[[v.real, v.imag] for v in row] for row in np.atleast_2d(y[0]).astype(complex)],
    }
    _emit(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="superhaar",
        description="Invariant integration on the matrix supergroups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(g, spec_required=True):
        g.add_argument(
            "--spec",
            type=parse_spec,
            required=spec_required,
            help="osp:m=M,n=N | u:p=P,q=Q | uosp:m=M,n=N",
        )
        g.add_argument("--seed", type=int, default=None)
        g.add_argument("--out", default=None, help="write JSON here instead of stdout")

    g = sub.add_parser("integrate", help="integrate a monomial in the entry symbols")
    add_common(g)
    g.add_argument("--monomial", required=True, help='e.g. "X[1,1]*Xs[1,1]"')
    g.add_argument("--mode", choices=("exact", "mc"), default="exact")
    g.add_argument("--samples", type=int, default=100_000)
    g.set_defaults(func=_cmd_integrate)

    g = sub.add_parser("table", help="monomial integral table with closed-form check")
    g.add_argument("target", choices=("u11",))
    g.add_argument("--max-exp", dest="max_exp", type=int, default=2)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=_cmd_table)

    g = sub.add_parser("verify", help="run identity suites for a spec")
    g.add_argument(
        "suite",
        nargs="?",
        choices=("all", "charts", "algebra", "density", "invariance"),
        default="all",
    )
    add_common(g)
    g.add_argument("--trials", type=int, default=10)
    g.add_argument("--samples", type=int, default=20_000)
    g.add_argument("--corrupt-density", action="store_true", help=argparse.SUPPRESS)
    g.set_defaults(func=_cmd_verify)

    g = sub.add_parser("sample", help="draw classical Haar samples")
    add_common(g)
    g.add_argument("--count", type=int, default=4)
    g.set_defaults(func=_cmd_sample)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
