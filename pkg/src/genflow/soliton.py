"""Algebraic generalized solitons: verification, search and the low-dimensional catalogue check."""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .courant import (
    DorfmanBracket,
    bismut_ricci,
    codifferential,
    ce_differential,
    l_inner,
    l_moment_map,
    laplacian,
)
from .flow import FlowOptions, OutcomeKind, _field_flat, _layout, integrate
from .liealg import structure_report
from .multilinear import least_squares_scalar, rho_action, theta_tensor

__all__ = [
    "ClassificationRow",
    "DegenerateBracketError",
    "SearchReport",
    "SolitonCertificate",
    "SolitonClass",
    "classify_type",
    "functional_F",
    "functional_F_gradient_check",
    "reproduce_classification",
    "search_soliton",
    "verify_soliton",
]

VERIFY_TOL = 1e-8
CLASS_TOL = 1e-9


class DegenerateBracketError(ValueError):
    """Raised for the zero bracket, where the soliton equations carry no information."""


class SolitonClass(enum.Enum):
    EXPANDING = "Expanding"
    STEADY = "Steady"
    SHRINKING = "Shrinking"


@dataclass(frozen=True)
class SolitonCertificate:
    """Outcome of checking Ric^B = lam Id + D with D a derivation, plus the torsion equation.

    ``passed`` is true iff both residuals are within the tolerance used.
    ``residual_torsion_alt`` scores ``rho(Ric^B)H + d d*H + lam H`` instead;
    it agrees with the main torsion residual whenever d*H = 0.
    """

    lam: float
    D: np.ndarray
    residual_metric: float
    residual_torsion: float
    residual_torsion_alt: float
    soliton_class: SolitonClass
    harmonic_torsion: bool
    passed: bool
    tol: float
    mu_zero: bool = False

    @property
    def ell(self) -> float:
        return -self.lam


def _class_of(lam: float, class_tol: float) -> SolitonClass:
    if lam < -class_tol:
        return SolitonClass.EXPANDING
    if lam > class_tol:
        return SolitonClass.SHRINKING
    return SolitonClass.STEADY


def verify_soliton(mud: DorfmanBracket, tol: float = VERIFY_TOL, class_tol: float = CLASS_TOL) -> SolitonCertificate:
    """Solve for lam by least squares and score both soliton equations.

    With mu = 0 the metric equation is vacuous and lam is fitted from the
    torsion equation instead.
    """
    mu, H = mud.mu, mud.H
    if mud.norm2() == 0:
        raise DegenerateBracketError("zero bracket: nothing to verify")
    n = mud.dim
    T = mu.tensor
    ricb = bismut_ricci(mu, H)
    rho_term = rho_action(ricb, H)
    lap = laplacian(mu, H)
    mu_norm = math.sqrt(mu.norm2())
    mu_zero = mu_norm == 0

    if not mu_zero:
        # theta(Ric^B - lam Id) mu = theta(Ric^B) mu + lam mu
        lam, res = least_squares_scalar(theta_tensor(ricb, T), T)
        residual_metric = res / mu_norm
    else:
        lam, _ = least_squares_scalar((lap - rho_term).tensor, -H.tensor)
        residual_metric = 0.0

    torsion = lap - lam * H - rho_term
    h_norm = H.norm("full")
    residual_torsion = torsion.norm("full") / max(h_norm, 1.0)

    dstar = codifferential(mu, H)
    alt = rho_term + ce_differential(mu, dstar) + lam * H
    residual_torsion_alt = alt.norm("full") / max(h_norm, 1.0)

    scale = math.sqrt(mud.norm2())
    harmonic = dstar.norm("increasing") <= 1e-10 * max(1.0, scale**3)
    passed = residual_metric <= tol and residual_torsion <= tol
    return SolitonCertificate(
        lam=float(lam),
        D=ricb - lam * np.eye(n),
        residual_metric=float(residual_metric),
        residual_torsion=float(residual_torsion),
        residual_torsion_alt=float(residual_torsion_alt),
        soliton_class=_class_of(lam, class_tol),
        harmonic_torsion=bool(harmonic),
        passed=bool(passed),
        tol=tol,
        mu_zero=mu_zero,
    )


def classify_type(cert: SolitonCertificate, class_tol: float = CLASS_TOL) -> SolitonClass:
    """Expanding, steady or shrinking according to the sign of lam (ell = -lam)."""
    return _class_of(cert.lam, class_tol)


# -- functional and search ---------------------------------------------------


def functional_F(mud: DorfmanBracket) -> float:
    """Scale-invariant |M|^2 / |mud|^4 with the l inner product."""
    r2 = mud.norm2()
    if r2 == 0:
        raise DegenerateBracketError("F is undefined at the zero bracket")
    M = l_moment_map(mud)
    return l_inner(M, M) / r2**2


def _F_flat(n: int, y: np.ndarray) -> float:
    return functional_F(DorfmanBracket.from_flat(n, y))


def functional_F_gradient_check(mud: DorfmanBracket, h: float = 1e-5) -> float:
    """Relative mismatch between the normalized field and -(1/4)|mud|^4 grad F.

    The gradient is taken in flat coordinates by central differences. For
    nilpotent brackets with harmonic torsion the normalized flow is the
    negative gradient flow of F, with the factor fixed by the flat-coordinate
    metric (Dorfman norm = 6|y|^2). Errors are measured against the larger
    of the two vectors, or against 1e-3 |mud|^3 when both are tiny.
    """
    n = mud.dim
    y = mud.flat()
    if not np.any(y):
        raise DegenerateBracketError("F is undefined at the zero bracket")
    field, _ = _field_flat(_layout(n), y, normalized=True)
    grad = np.empty_like(y)
    for a in range(y.size):
        e = np.zeros_like(y)
        e[a] = h
        grad[a] = (_F_flat(n, y + e) - _F_flat(n, y - e)) / (2 * h)
    predicted = -0.25 * mud.norm2() ** 2 * grad
    # near a critical point both sides vanish; fall back to the natural field scale |mud|^3
    ref = max(float(np.max(np.abs(field))), float(np.max(np.abs(predicted))), 1e-3 * mud.norm2() ** 1.5)
    return float(np.max(np.abs(field - predicted))) / ref


@dataclass
class SearchReport:
    start: DorfmanBracket
    limit: DorfmanBracket
    certificate: SolitonCertificate
    converged: bool
    t_final: float
    steps: int
    functional_value: float
    mu_zero: bool = False


def search_soliton(
    mud0: DorfmanBracket,
    opts: FlowOptions | None = None,
    tol: float = 1e-6,
) -> SearchReport:
    """Run the normalized flow from the unit-norm rescaling of ``mud0``.

    Convergence is guaranteed for nilpotent starts with harmonic torsion;
    other starts trigger a warning but still run.
    """
    if mud0.norm2() == 0:
        raise DegenerateBracketError("cannot search from the zero bracket")
    rep = structure_report(mud0.mu)
    if not rep.is_nilpotent:
        warnings.warn("start is not nilpotent; convergence is not guaranteed", stacklevel=2)
    if codifferential(mud0.mu, mud0.H).norm("increasing") > 1e-10 * max(1.0, mud0.norm2() ** 1.5):
        warnings.warn("start torsion is not harmonic; convergence is not guaranteed", stacklevel=2)

    opts = opts or FlowOptions(t_max=1e4)
    if not opts.normalized:
        opts = FlowOptions(**{**opts.__dict__, "normalized": True})
    start = mud0.normalized()
    out = integrate(start, opts)
    converged = out.kind is OutcomeKind.CONVERGED
    limit = out.limit if converged else out.final.mud
    limit = limit.normalized()
    cert = verify_soliton(limit, tol=tol)
    return SearchReport(
        start=start,
        limit=limit,
        certificate=cert,
        converged=converged,
        t_final=out.t_final,
        steps=out.steps,
        functional_value=functional_F(limit),
        mu_zero=cert.mu_zero or limit.mu.norm2() < 1e-20,
    )


# -- classification ------------------------------------------------------------


@dataclass
class ClassificationRow:
    name: str
    expect_soliton: bool
    lam_expected: float | None
    D_expected: tuple | None
    certificate: SolitonCertificate
    ok: bool
    note: str = ""

    def as_dict(self) -> dict:
        c = self.certificate
        return {
            "name": self.name,
            "expect_soliton": self.expect_soliton,
            "lambda_expected": self.lam_expected,
            "D_expected": list(self.D_expected) if self.D_expected is not None else None,
            "lambda": c.lam,
            "D": c.D.tolist(),
            "residual_metric": c.residual_metric,
            "residual_torsion": c.residual_torsion,
            "class": c.soliton_class.value,
            "passed_verification": c.passed,
            "ok": self.ok,
            "note": self.note,
        }


@dataclass
class ClassificationReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "rows": [r.as_dict() for r in self.rows]}


def _check_row(entry, tol: float) -> ClassificationRow:
    cert = verify_soliton(entry.bracket(), tol=tol)
    ok = cert.passed == entry.expect_soliton
    notes = []
    if entry.expect_soliton and entry.lam is not None:
        ok = ok and abs(cert.lam - entry.lam) <= 1e-9
    if entry.expect_soliton and entry.D_diag is not None:
        diag_ok = np.allclose(np.diag(cert.D), entry.D_diag, atol=1e-9)
        ok = ok and diag_ok
        off = cert.D - np.diag(np.diag(cert.D))
        if np.max(np.abs(off)) > 1e-12:
            notes.append(f"D has off-diagonal entries (max {np.max(np.abs(off)):.3g}); diagonal matches the table")
    if entry.note:
        notes.append(entry.note)
    return ClassificationRow(
        name=entry.name,
        expect_soliton=entry.expect_soliton,
        lam_expected=entry.lam,
        D_expected=tuple(entry.D_diag) if entry.D_diag is not None else None,
        certificate=cert,
        ok=bool(ok),
        note="; ".join(notes),
    )


def _row_job(args):
    entry, tol = args
    return _check_row(entry, tol)


def reproduce_classification(tol: float = VERIFY_TOL, circle_points: int = 8, workers: int = 1) -> ClassificationReport:
    """Verify every soliton fixture of dimension at most 4 and check the non-soliton controls fail."""
    from .catalog import classification_fixtures

    jobs = [(e, tol) for e in classification_fixtures(circle_points)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    return ClassificationReport(rows=rows)
