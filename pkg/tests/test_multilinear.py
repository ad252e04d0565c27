import itertools
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genflow.liealg import LieBracket
from genflow.multilinear import (
    KForm,
    alternate,
    form_inner,
    interior_product,
    least_squares_scalar,
    nullspace,
    permutation_sign,
    rho_action,
    theta_action,
)
from genflow.liealg import theta_matrix

N3 = LieBracket.from_entries(3, [(0, 1, 2, 1.0)])


def e(n, *idx):
    return KForm.basis(n, idx)


def brute_eval(omega: KForm, idx) -> float:
    """Evaluate through the component table, independent of the tensor cache."""
    s = permutation_sign(idx)
    if s == 0:
        return 0.0
    key = tuple(sorted(idx))
    for t, v in omega.items():
        if t == key:
            return s * v
    return 0.0


seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestKForm:
    def test_component_count(self):
        for n in range(1, 7):
            for k in range(n + 1):
                assert KForm(n, k).components.size == comb(n, k)

    def test_repeated_indices_vanish(self):
        H = e(4, 0, 1, 2) + 2 * e(4, 1, 2, 3)
        assert H[0, 0, 2] == 0.0
        assert H[1, 2, 1] == 0.0

    def test_from_dict_sign(self):
        w = KForm.from_dict(3, 2, {(1, 0): 2.0})
        assert w[0, 1] == -2.0

    def test_bad_index_rejected(self):
        with pytest.raises(IndexError):
            KForm.from_dict(3, 2, {(0, 3): 1.0})

    def test_degree_above_dimension_is_zero_space(self):
        w = KForm(2, 3)
        assert w.components.size == 0
        assert w.tensor.shape == (2, 2, 2)
        assert not w.tensor.any()

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 6), st.integers(1, 4))
    def test_alternation_under_transpositions(self, seed, n, k):
        k = min(k, n)
        rng = np.random.default_rng(seed)
        w = KForm(n, k, rng.normal(size=comb(n, k)))
        for idx in itertools.product(range(n), repeat=k):
            val = w[idx]
            assert val == brute_eval(w, idx)
            assert w.tensor[idx] == val
            for a, b in itertools.combinations(range(k), 2):
                sw = list(idx)
                sw[a], sw[b] = sw[b], sw[a]
                assert w[tuple(sw)] == -val

    def test_from_tensor_roundtrip(self, rng):
        w = KForm(5, 3, rng.normal(size=10))
        assert np.array_equal(KForm.from_tensor(w.tensor).components, w.components)

    def test_alternate_is_projection(self, rng):
        T = rng.normal(size=(4, 4, 4))
        A = alternate(T)
        assert np.allclose(alternate(A), A, atol=1e-15)

    def test_repr(self):
        assert "e^123" in repr(e(3, 0, 1, 2))


class TestInterior:
    def test_examples(self):
        H = e(3, 0, 1, 2)
        assert interior_product([1, 0, 0], H).allclose(e(3, 1, 2))
        assert interior_product([0, 1, 0], H).allclose(-e(3, 0, 2))
        assert interior_product([0, 0, 0, 1], e(4, 0, 1, 2)).allclose(KForm(4, 2))

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            interior_product([1.0], KForm(1, 0, [1.0]))

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_definition(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        w = KForm(n, 3, rng.normal(size=10))
        X = rng.normal(size=n)
        iw = interior_product(X, w)
        for i, j in itertools.combinations(range(n), 2):
            expected = sum(X[a] * brute_eval(w, (a, i, j)) for a in range(n))
            assert iw[i, j] == pytest.approx(expected, abs=1e-12)


class TestInner:
    def test_examples(self):
        H = e(3, 0, 1, 2)
        assert form_inner(H, H, "full") == 6
        assert form_inner(H, H, "increasing") == 1
        assert form_inner(e(4, 0, 1) + 2 * e(4, 2, 3), e(4, 2, 3), "full") == 4

    def test_full_is_k_factorial_times_increasing_exhaustive(self):
        for n in range(1, 7):
            for k in range(n + 1):
                for s in itertools.combinations(range(n), k):
                    for t in itertools.combinations(range(n), k):
                        a, b = KForm.basis(n, s), KForm.basis(n, t)
                        full = float(np.sum(a.tensor * b.tensor)) if k else float(a.tensor * b.tensor)
                        assert form_inner(a, b, "full") == full
                        assert full == factorial(k) * form_inner(a, b, "increasing")

    def test_mismatch(self):
        with pytest.raises(ValueError):
            form_inner(e(3, 0, 1), e(3, 0, 1, 2))
        with pytest.raises(ValueError):
            form_inner(e(3, 0, 1), e(3, 0, 1), "bogus")


def rho_oracle(A, w: KForm) -> KForm:
    """-sum over slots of w(.., A x, ..), evaluated entry by entry."""
    n, k = w.dim, w.degree
    out = {}
    for idx in itertools.combinations(range(n), k):
        total = 0.0
        for slot in range(k):
            for l in range(n):
                j = list(idx)
                j[slot] = l
                total -= A[l, idx[slot]] * brute_eval(w, j)
        out[idx] = total
    return KForm.from_dict(n, k, out)


class TestRho:
    def test_examples(self):
        H = e(3, 0, 1, 2)
        assert rho_action(np.eye(3), H).allclose(-3 * H)
        assert rho_action(np.diag([1.0, 2, 3]), H).allclose(-6 * H)
        assert rho_action(np.diag([-1.0, -1, 0]), H).allclose(2 * H)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(2, 5), st.integers(1, 4))
    def test_matches_slotwise_oracle(self, seed, n, k):
        k = min(k, n)
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(n, n))
        w = KForm(n, k, rng.normal(size=comb(n, k)))
        assert rho_action(A, w).allclose(rho_oracle(A, w), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_linearity_and_identity(self, seed):
        rng = np.random.default_rng(seed)
        n, k = 5, 3
        A, B = rng.normal(size=(2, n, n))
        w1, w2 = (KForm(n, k, rng.normal(size=10)) for _ in range(2))
        a, b = rng.normal(size=2)
        assert rho_action(a * A + b * B, w1).allclose(a * rho_action(A, w1) + b * rho_action(B, w1), atol=1e-12)
        assert rho_action(A, a * w1 + b * w2).allclose(a * rho_action(A, w1) + b * rho_action(A, w2), atol=1e-12)
        assert rho_action(np.eye(n), w1).allclose(-k * w1, atol=1e-12)


class TestTheta:
    def test_examples(self):
        T = N3.tensor
        assert np.allclose(theta_action(np.eye(3), T), -T)
        assert np.allclose(theta_action(np.diag([1.0, 1, 2]), T), 0)
        assert np.allclose(theta_action(np.diag([1.0, 0, 0]), T), -T)

    def test_returns_same_kind(self):
        assert isinstance(theta_action(np.eye(3), N3), LieBracket)
        assert isinstance(theta_action(np.eye(3), N3.tensor), np.ndarray)

    def test_brute_force(self, rng):
        n = 4
        A = rng.normal(size=(n, n))
        T = rng.normal(size=(n, n, n))
        T = T - np.swapaxes(T, 0, 1)
        got = theta_action(A, T)
        for i, j in itertools.product(range(n), repeat=2):
            X, Y = np.eye(n)[i], np.eye(n)[j]

            def br(u, v):
                return np.einsum("i,j,ijk->k", u, v, T)

            expected = A @ br(X, Y) - br(A @ X, Y) - br(X, A @ Y)
            assert np.allclose(got[i, j], expected, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_bilinear(self, seed):
        rng = np.random.default_rng(seed)
        A, B = rng.normal(size=(2, 4, 4))
        T1, T2 = rng.normal(size=(2, 4, 4, 4))
        a, b = rng.normal(size=2)
        assert np.allclose(theta_action(a * A + b * B, T1), a * theta_action(A, T1) + b * theta_action(B, T1))
        assert np.allclose(theta_action(A, a * T1 + b * T2), a * theta_action(A, T1) + b * theta_action(A, T2))


class TestLinearSolves:
    def test_nullspace_examples(self):
        assert len(nullspace(np.zeros((2, 2)))) == 2
        assert nullspace(np.eye(3), 1e-10) == []
        # Der(n3): D11, D22, D12, D21, D31, D32 free, D33 = D11 + D22, D13 = D23 = 0
        assert len(nullspace(theta_matrix(N3))) == 6

    def test_nullspace_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            nullspace(np.eye(2), 0.0)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 6), st.integers(1, 6))
    def test_nullspace_bound(self, seed, r, c):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(r, min(r, c))) @ rng.normal(size=(min(r, c), c))
        tol = 1e-10
        opn = np.linalg.norm(M, 2)
        vs = nullspace(M, tol)
        for v in vs:
            assert np.linalg.norm(M @ v) <= 10 * tol * opn * np.linalg.norm(v) + 1e-300
        if vs:
            V = np.array(vs)
            assert np.allclose(V @ V.T, np.eye(len(vs)), atol=1e-12)

    def test_least_squares_examples(self):
        assert least_squares_scalar([1, 0], [0, 1]) == (0.0, 1.0)
        v1 = np.array([0.3, -1.0, 2.0])
        lam, res = least_squares_scalar(-2 * v1, v1)
        assert lam == pytest.approx(2.0) and res == pytest.approx(0.0, abs=1e-15)
        assert least_squares_scalar([1, 1], [1, 0]) == (-1.0, 1.0)
        assert least_squares_scalar([3, 4], [0, 0]) == (0.0, 5.0)
