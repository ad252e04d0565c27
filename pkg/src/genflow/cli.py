"""Command-line interface.

Every tolerance has a flag and an environment variable (prefix ``GENFLOW_``);
flags win over the environment, which wins over built-in defaults.

Exit status: 0 when the requested check passed, 1 when it failed, 2 on
usage, parse or IO errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog as cat
from .courant import (
    ClosednessError,
    JacobiError,
    bismut_ricci,
    codifferential,
    dorfman_norm2,
    gen_scalar,
    h_squared,
    l_moment_map,
)
from .flow import FlowDriftError, FlowOptions, OutcomeKind, integrate
from .io import SpecError, emit_trajectory_csv, load_spec, spec_from_bracket
from .liealg import ricci
from .soliton import (
    CLASS_TOL,
    VERIFY_TOL,
    DegenerateBracketError,
    reproduce_classification,
    search_soliton,
    verify_soliton,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# (flag destination, environment suffix, type, default)
_SETTINGS = [
    ("tol", "TOL", float, VERIFY_TOL),
    ("class_tol", "CLASS_TOL", float, CLASS_TOL),
    ("rtol", "RTOL", float, 1e-9),
    ("atol", "ATOL", float, 1e-12),
    ("min_step", "MIN_STEP", float, 1e-14),
    ("max_steps", "MAX_STEPS", int, 1_000_000),
    ("monitor_every", "MONITOR_EVERY", int, 1),
    ("blowup_norm_cap", "BLOWUP_NORM_CAP", float, 1e8),
    ("convergence_tol", "CONVERGENCE_TOL", float, 1e-8),
    ("workers", "WORKERS", int, 1),
]


class UsageError(Exception):
    pass


def _resolve(args: argparse.Namespace, env=None) -> dict:
    env = os.environ if env is None else env
    out = {}
    for dest, suffix, typ, default in _SETTINGS:
        val = getattr(args, dest, None)
        if val is None:
            raw = env.get("GENFLOW_" + suffix)
            if raw is not None:
                try:
                    val = typ(raw)
                except ValueError:
                    raise UsageError(f"GENFLOW_{suffix}={raw!r} is not a valid {typ.__name__}") from None
            else:
                val = default
        out[dest] = val
    return out


def _load(spec: str):
    """A spec argument is a JSON file path or a catalog entry name."""
    if Path(spec).exists():
        return load_spec(spec)
    if spec in cat.catalog_names():
        return cat.get_entry(spec).bracket()
    raise UsageError(f"{spec!r} is neither a readable spec file nor a catalog name")


def _fmt_matrix(M) -> str:
    return np.array2string(np.asarray(M), precision=6, suppress_small=True)


def _cmd_curvature(args, cfg) -> int:
    mud = _load(args.spec)
    M = l_moment_map(mud)
    report = {
        "Ric_mu": ricci(mud.mu).tolist(),
        "Ric_B": bismut_ricci(mud.mu, mud.H).tolist(),
        "H2": h_squared(mud.H).tolist(),
        "dstarH": codifferential(mud.mu, mud.H).tensor.tolist(),
        "M_A": M.A.tolist(),
        "M_alpha": M.alpha.tensor.tolist(),
        "S": gen_scalar(mud),
        "norm2_mud": dorfman_norm2(mud),
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for key, val in report.items():
            if isinstance(val, float):
                print(f"{key} = {val!r}")
            else:
                print(f"{key} =\n{_fmt_matrix(val)}")
    return EXIT_OK


def _flow_options(args, cfg, **over) -> FlowOptions:
    kw = dict(
        rtol=cfg["rtol"],
        atol=cfg["atol"],
        min_step=cfg["min_step"],
        max_steps=cfg["max_steps"],
        monitor_every=cfg["monitor_every"],
        blowup_norm_cap=cfg["blowup_norm_cap"],
        convergence_tol=cfg["convergence_tol"],
    )
    kw.update(over)
    return FlowOptions(**kw)


def _cmd_flow(args, cfg) -> int:
    mud = _load(args.spec)
    opts = _flow_options(args, cfg, t_max=args.t_max, normalized=args.normalized)
    out = integrate(mud, opts)
    if args.out:
        emit_trajectory_csv(out.trajectory, args.out)
    summary = {
        "outcome": out.kind.value,
        "t_final": out.t_final,
        "steps": out.steps,
        "T_estimate": out.T_estimate,
        "norm2_mud": out.final.norm2_mud,
        "gen_scalar": out.final.gen_scalar,
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        for k, v in summary.items():
            print(f"{k}: {v}")
    return EXIT_FAIL if out.kind is OutcomeKind.STEP_UNDERFLOW else EXIT_OK


def _cert_dict(c) -> dict:
    return {
        "passed": c.passed,
        "lambda": c.lam,
        "D": c.D.tolist(),
        "residual_metric": c.residual_metric,
        "residual_torsion": c.residual_torsion,
        "residual_torsion_alt": c.residual_torsion_alt,
        "class": c.soliton_class.value,
        "harmonic_torsion": c.harmonic_torsion,
    }


def _cmd_verify(args, cfg) -> int:
    mud = _load(args.spec)
    c = verify_soliton(mud, tol=cfg["tol"], class_tol=cfg["class_tol"])
    d = _cert_dict(c)
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        print("PASS" if c.passed else "FAIL")
        for k, v in d.items():
            if k == "D":
                print(f"D =\n{_fmt_matrix(v)}")
            elif k != "passed":
                print(f"{k}: {v}")
    return EXIT_OK if c.passed else EXIT_FAIL


def _cmd_search(args, cfg) -> int:
    mud = _load(args.spec)
    opts = _flow_options(args, cfg, t_max=args.t_max, normalized=True)
    rep = search_soliton(mud, opts)
    ok = rep.converged and rep.certificate.passed
    d = {
        "converged": rep.converged,
        "t_final": rep.t_final,
        "steps": rep.steps,
        "functional_value": rep.functional_value,
        "mu_zero": rep.mu_zero,
        "certificate": _cert_dict(rep.certificate),
        "limit": spec_from_bracket(rep.limit, name="limit").to_json(),
    }
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        print("CONVERGED" if rep.converged else "NOT CONVERGED")
        for k in ("t_final", "steps", "functional_value", "mu_zero"):
            print(f"{k}: {d[k]}")
        print(f"lambda: {rep.certificate.lam!r}  passed: {rep.certificate.passed}")
        print(f"limit: {rep.limit!r}")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_catalog(args, cfg) -> int:
    if args.action == "list":
        for e in cat.catalog():
            tag = f"lambda={e.lam}" if e.lam is not None else ("control" if e.expect_soliton is False else "")
            print(f"{e.name:20s} dim={e.spec.dim} {tag}")
        return EXIT_OK
    if not args.name:
        raise UsageError(f"catalog {args.action} needs a NAME")
    try:
        entry = cat.get_entry(args.name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    data = entry.spec.to_json()
    if args.action == "show":
        data = {
            **data,
            "expected": {"lambda": entry.lam, "D_diag": entry.D_diag, "class": entry.soliton_class},
        }
    text = json.dumps(data, indent=2)
    if args.action == "export" and args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_classification(args, cfg) -> int:
    rep = reproduce_classification(tol=cfg["tol"], workers=cfg["workers"])
    if args.json:
        print(json.dumps(rep.as_dict(), indent=2))
    else:
        for r in rep.rows:
            c = r.certificate
            status = "ok " if r.ok else "BAD"
            kind = "soliton" if r.expect_soliton else "control"
            print(
                f"{status} {r.name:26s} {kind:8s} lambda={c.lam:+.10f} "
                f"res=({c.residual_metric:.2e}, {c.residual_torsion:.2e}) {r.note}"
            )
        print("all rows ok" if rep.ok else "some rows failed")
    return EXIT_OK if rep.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genflow", description="Generalized Ricci flow on Lie algebras.")
    sub = p.add_subparsers(dest="command", required=True)

    def tol_flags(sp, *names):
        for name in names:
            dest = name.replace("-", "_")
            typ = next(t for d, _, t, _ in _SETTINGS if d == dest)
            sp.add_argument(f"--{name}", dest=dest, type=typ, default=None)

    sp = sub.add_parser("curvature", help="print curvature and moment-map quantities")
    sp.add_argument("spec")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_curvature)

    sp = sub.add_parser("flow", help="integrate the bracket flow")
    sp.add_argument("spec")
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--normalized", action="store_true")
    sp.add_argument("--out", help="write the trajectory as CSV")
    sp.add_argument("--json", action="store_true")
    tol_flags(sp, "rtol", "atol", "min-step", "max-steps", "monitor-every", "blowup-norm-cap", "convergence-tol")
    sp.set_defaults(func=_cmd_flow)

    sp = sub.add_parser("verify", help="check the soliton equations")
    sp.add_argument("spec")
    sp.add_argument("--json", action="store_true")
    tol_flags(sp, "tol", "class-tol")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("search", help="look for a soliton with the normalized flow")
    sp.add_argument("spec")
    sp.add_argument("--t-max", type=float, default=1e4)
    sp.add_argument("--json", action="store_true")
    tol_flags(sp, "rtol", "atol", "min-step", "max-steps", "convergence-tol")
    sp.set_defaults(func=_cmd_search)

    sp = sub.add_parser("catalog", help="list, show or export built-in algebras")
    sp.add_argument("action", choices=["list", "show", "export"], nargs="?", default="list")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_catalog)

    sp = sub.add_parser("reproduce-classification", help="verify the low-dimensional soliton fixtures")
    sp.add_argument("--json", action="store_true")
    tol_flags(sp, "tol", "workers")
    sp.set_defaults(func=_cmd_classification)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _resolve(args)
        return args.func(args, cfg)
    except (UsageError, SpecError, JacobiError, ClosednessError, DegenerateBracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FlowDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
