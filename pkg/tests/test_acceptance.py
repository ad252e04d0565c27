"""Acceptance suite: one test group per criterion, summarised at the end of the run."""

import itertools
import time

import numpy as np
import pytest

from brackets import random_dorfman
from genflow.catalog import get_entry
from genflow.courant import (
    DorfmanBracket,
    LElement,
    a_term,
    big_theta,
    block_lift,
    ce_differential,
    codifferential,
    dorfman_inner,
    gen_ricci,
    gen_scalar,
    l_inner,
    l_moment_map,
)
from genflow.flow import (
    FlowOptions,
    OutcomeKind,
    asymptotic_scalar_fit,
    integrate,
    normalized_vector_field,
)
from genflow.liealg import moment_map_mu, ricci, structure_report
from genflow.multilinear import KForm, increasing_tuples, permutation_sign, rho_action, theta_action
from genflow.soliton import SolitonClass, reproduce_classification, search_soliton, verify_soliton


def dorf(name, **kw) -> DorfmanBracket:
    return get_entry(name, **kw).bracket()


def family_invariants(mud: DorfmanBracket):
    """Scale-free soliton data: lam and the sorted D spectrum, both over |mud|^2."""
    c = verify_soliton(mud)
    n2 = mud.norm2()
    return c.lam / n2, np.sort(np.linalg.eigvals(c.D).real) / n2


# -- 1 -------------------------------------------------------------------------


def test_criterion_01_heisenberg_certificate():
    t0 = time.perf_counter()
    c = verify_soliton(dorf("n3-soliton"))
    elapsed = time.perf_counter() - t0
    assert c.passed
    assert abs(c.lam + 2) < 1e-9
    assert np.max(np.abs(c.D - np.diag([1.0, 1.0, 2.0]))) < 1e-9
    assert c.soliton_class is SolitonClass.EXPANDING
    assert elapsed < 1.0


# -- 2 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def classification():
    t0 = time.perf_counter()
    rep = reproduce_classification()
    return rep, time.perf_counter() - t0


def test_criterion_02_all_rows_ok(classification):
    rep, elapsed = classification
    assert rep.ok
    assert elapsed < 5.0


def test_criterion_02_fixture_values(classification):
    rows = {r.name: r for r in classification[0].rows}
    r = rows["n3xR-soliton"]
    assert abs(r.certificate.lam + 2) < 1e-9
    assert np.max(np.abs(r.certificate.D - np.diag([1.0, 1, 2, 2]))) < 1e-9
    circle = [r for name, r in rows.items() if name.startswith("n3xR-circle")]
    assert len(circle) == 8
    for r in circle + [rows["n4-soliton-1"], rows["n4-soliton-2"]]:
        c = r.certificate
        assert c.passed and abs(c.lam + 1.5) < 1e-9
        assert c.residual_metric < 1e-8 and c.residual_torsion < 1e-8


def test_criterion_02_controls_fail(classification):
    rows = {r.name: r for r in classification[0].rows}
    for name in ("n3-ratio-control", "n4-lambda3-control"):
        assert not rows[name].certificate.passed
        assert rows[name].ok


# -- 3 -------------------------------------------------------------------------


def test_criterion_03_scaling_law():
    out = integrate(dorf("n3-soliton"), FlowOptions(t_max=100.0, sample_times=(1.0, 10.0)))
    got = {s.t: s.norm2_mud for s in out.trajectory if s.t in (1.0, 10.0, 100.0)}
    assert sorted(got) == [1.0, 10.0, 100.0]
    for t, n2 in got.items():
        assert n2 == pytest.approx(12 / (1 + 4 * t), rel=1e-6)


# -- 4 -------------------------------------------------------------------------


def test_criterion_04_so3_blowup():
    out = integrate(dorf("so3"), FlowOptions(t_max=2.0))
    assert out.kind is OutcomeKind.BLOW_UP
    assert 0.99 <= out.T_estimate <= 1.01
    S = np.array([s.gen_scalar for s in out.trajectory])
    assert np.all(np.diff(S) > 0)
    assert S[-1] > 1e4 * abs(S[0])


# -- 5 -------------------------------------------------------------------------


def test_criterion_05_sol3_immortal():
    out = integrate(dorf("sol3"), FlowOptions(t_max=100.0))
    assert out.kind is OutcomeKind.REACHED_T_MAX
    assert out.t_final == 100.0
    assert all(s.gen_scalar < 0 for s in out.trajectory)


# -- 6 -------------------------------------------------------------------------


def random_valid(rng):
    n = int(rng.integers(3, 6))
    kind = "nilpotent" if rng.random() < 0.5 else "solvable"
    return random_dorfman(n, rng, kind).normalized()


def test_criterion_06_moment_map_decomposition():
    rng = np.random.default_rng(6)
    kinds = set()
    for _ in range(100):
        mud = random_valid(rng)
        kinds.add(structure_report(mud.mu).is_nilpotent)
        lhs = (gen_ricci(mud) - a_term(mud)).matrix
        rhs = (l_moment_map(mud).to_gen_endo() + block_lift(ricci(mud.mu) - moment_map_mu(mud.mu)).to_gen_endo()).matrix
        assert np.max(np.abs(lhs - rhs)) < 1e-10
    assert kinds == {True, False}


def test_criterion_06_nilpotent_collapse():
    rng = np.random.default_rng(66)
    for _ in range(100):
        mud = random_dorfman(int(rng.integers(3, 6)), rng, "nilpotent").normalized()
        diff = (gen_ricci(mud) - a_term(mud)).matrix - l_moment_map(mud).to_gen_endo().matrix
        assert np.max(np.abs(diff)) < 1e-10


# -- 7 -------------------------------------------------------------------------


def test_criterion_07_nilpotent_scalar():
    rng = np.random.default_rng(7)
    for _ in range(100):
        mud = random_dorfman(int(rng.integers(3, 6)), rng, "nilpotent").normalized()
        assert abs(gen_scalar(mud) + mud.norm2() / 12) < 1e-12


@pytest.mark.parametrize("name,kw", [("n3xR", dict(l1=1.0, l4=1.0)), ("sol3", {}), ("n4", dict(l3=0.5, l4=1.0))])
def test_criterion_07_scalar_rate(name, kw):
    mud = dorf(name, **kw)
    assert structure_report(mud.mu).is_unimodular
    times = tuple(np.round(np.arange(1, 300) * 1e-3, 12))
    out = integrate(mud, FlowOptions(t_max=0.3, sample_times=times, monitor_every=10**6))
    tr = out.trajectory
    assert len(tr) >= 300
    for a, b, c in zip(tr, tr[1:], tr[2:]):
        dS = (c.gen_scalar - a.gen_scalar) / (c.t - a.t)
        rc2 = gen_ricci(b.mud).frobenius2()
        assert abs(dS - rc2) <= 1e-4 * rc2


# -- 8 -------------------------------------------------------------------------


def test_criterion_08_residuals_along_harmonic_flow():
    mud = dorf("n3xR", l1=1.0, l4=1.0)
    assert codifferential(mud.mu, mud.H).norm() == 0
    out = integrate(mud, FlowOptions(t_max=10.0))
    assert out.t_final == 10.0
    for s in out.trajectory:
        assert s.jacobi_residual < 1e-7 and s.dH_residual < 1e-7 and s.dstarH_norm < 1e-7


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_criterion_08_normalized_norm(seed):
    rng = np.random.default_rng(seed)
    mud = random_dorfman(4, rng, "nilpotent", harmonic=True).normalized()
    out = integrate(mud, FlowOptions(t_max=10.0, normalized=True))
    for s in out.trajectory:
        assert abs(s.norm2_mud - 1) < 1e-9


# -- 9 -------------------------------------------------------------------------


def test_criterion_09_convergence_to_family():
    rep = search_soliton(dorf("n3xR", l1=1.0, l4=1.0))
    assert rep.converged
    (dmu, dH), _ = normalized_vector_field(rep.limit)
    assert np.sqrt(dmu.norm2() + dH.norm() ** 2) < 1e-8
    lam, spec = family_invariants(rep.limit)
    families = [dorf("n3xR-soliton")] + [dorf("n3xR-circle", theta=t) for t in np.linspace(0, 2 * np.pi, 8, endpoint=False)]
    matches = []
    for ref in families:
        rl, rs = family_invariants(ref)
        matches.append(abs(lam - rl) < 1e-6 and np.max(np.abs(spec - rs)) < 1e-6)
    assert any(matches)


# -- 10 ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,kw,limit",
    [
        ("n3-torsion", dict(a=1.0, b=2.0), -0.25),
        ("n3xR", dict(l3=1.0), -1 / 6),
        ("n4", dict(l1=1.0, l2=1.0), -0.5),
    ],
)
def test_criterion_10_inverse_time_decay(name, kw, limit):
    mud = dorf(name, **kw)
    assert structure_report(mud.mu).is_nilpotent
    assert not verify_soliton(mud).passed
    out = integrate(mud, FlowOptions(t_max=1e4))
    assert out.t_final == 1e4
    tail = [s for s in out.trajectory if s.t >= 1e3]
    tS = np.array([s.t * s.gen_scalar for s in tail])
    assert np.all(tS < 0)
    assert np.ptp(tS) / np.max(np.abs(tS)) < 0.01
    a, spread = asymptotic_scalar_fit(out.trajectory)
    assert spread < 0.01
    assert a == pytest.approx(limit, rel=1e-2)


# -- 11 ------------------------------------------------------------------------


def basis_brackets(n):
    rng = np.random.default_rng(11 + n)
    nil = random_dorfman(n, rng, "nilpotent").normalized() if n > 2 else None
    sol = random_dorfman(n, rng, "solvable").normalized() if n > 2 else dorf("aff1")
    return [m for m in (nil, sol) if m is not None]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_criterion_11_adjointness(n):
    for mud in basis_brackets(n):
        mu = mud.mu
        for k in range(n):
            for s, t in itertools.product(increasing_tuples(n, k), increasing_tuples(n, k + 1)):
                a, w = KForm.basis(n, s), KForm.basis(n, t)
                lhs = ce_differential(mu, a).components @ w.components
                rhs = a.components @ codifferential(mu, w).components
                assert abs(lhs - rhs) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_criterion_11_alternation(n):
    for k in range(1, n + 1):
        for t in increasing_tuples(n, k):
            w = KForm.basis(n, t)
            for perm in itertools.permutations(t):
                assert w[perm] == permutation_sign([t.index(p) for p in perm])
                assert w.tensor[perm] == w[perm]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_criterion_11_action_linearity(n):
    rng = np.random.default_rng(110 + n)
    A = rng.normal(size=(n, n))
    E = [(p, q) for p, q in itertools.product(range(n), repeat=2)]
    unit = {pq: np.eye(n)[:, [pq[0]]] @ np.eye(n)[[pq[1]], :] for pq in E}
    for k in range(1, n + 1):
        for t in increasing_tuples(n, k):
            w = KForm.basis(n, t)
            whole = rho_action(A, w).components
            parts = sum(A[pq] * rho_action(unit[pq], w).components for pq in E)
            assert np.max(np.abs(whole - parts)) < 1e-12
    for i, j in itertools.combinations(range(n), 2):
        for k in range(n):
            T = np.zeros((n, n, n))
            T[i, j, k], T[j, i, k] = 1.0, -1.0
            whole = theta_action(A, T)
            parts = sum(A[pq] * theta_action(unit[pq], T) for pq in E)
            assert np.max(np.abs(whole - parts)) < 1e-12


def l_basis(n):
    for p, q in itertools.product(range(n), repeat=2):
        A = np.zeros((n, n))
        A[p, q] = 1.0
        yield LElement(A, KForm(n, 2))
    for t in increasing_tuples(n, 2):
        yield LElement(np.zeros((n, n)), KForm.basis(n, t))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_criterion_11_moment_map_identity(n):
    for mud in basis_brackets(n):
        M = l_moment_map(mud)
        for L in l_basis(n):
            lhs = l_inner(M, L)
            rhs = dorfman_inner(big_theta(L, mud), (mud.mu, mud.H)) / 6.0
            assert abs(lhs - rhs) < 1e-12
