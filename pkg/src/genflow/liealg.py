"""Metric Lie algebras given by structure constants in an orthonormal basis."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .multilinear import MAX_DIM, NULLSPACE_TOL, nullspace, theta_tensor

__all__ = [
    "AlgebraReport",
    "LieBracket",
    "derivation_algebra",
    "is_lie",
    "jacobiator",
    "killing_endo",
    "mean_curvature",
    "moment_map_mu",
    "ricci",
    "scalar_curvature",
    "structure_report",
]


class LieBracket:
    """Skew bilinear map on R^n stored as ``tensor[i, j, k] = <mu(e_i, e_j), e_k>``.

    Jacobi is not enforced here; use :func:`jacobiator` to measure it.
    """

    __slots__ = ("dim", "_tensor")

    def __init__(self, tensor):
        T = np.array(tensor, dtype=float)
        if T.ndim != 3 or len(set(T.shape)) != 1:
            raise ValueError("bracket tensor must have shape (n, n, n)")
        if not 1 <= T.shape[0] <= MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}]")
        if not np.array_equal(T, -np.swapaxes(T, 0, 1)):
            raise ValueError("bracket tensor is not skew in its first two slots")
        T.setflags(write=False)
        self.dim = T.shape[0]
        self._tensor = T

    @classmethod
    def zero(cls, n: int) -> "LieBracket":
        return cls(np.zeros((n, n, n)))

    @classmethod
    def from_entries(cls, n: int, entries) -> "LieBracket":
        """Build from ``(i, j, k, v)`` meaning ``mu(e_i, e_j)`` has ``v`` along ``e_k`` (0-based)."""
        T = np.zeros((n, n, n))
        for i, j, k, v in entries:
            if i == j:
                raise ValueError(f"mu(e_{i}, e_{i}) must vanish")
            T[i, j, k] += v
            T[j, i, k] -= v
        return cls(T)

    @classmethod
    def from_components(cls, n: int, comps) -> "LieBracket":
        comps = np.asarray(comps, dtype=float).reshape(-1, n)
        T = np.zeros((n, n, n))
        for a, (i, j) in enumerate(combinations(range(n), 2)):
            T[i, j] = comps[a]
            T[j, i] = -comps[a]
        return cls(T)

    @property
    def tensor(self) -> np.ndarray:
        return self._tensor

    @property
    def components(self) -> np.ndarray:
        """Flat ``mu_ij^k`` for ``i < j`` (row-major over pairs, then k)."""
        iu, ju = np.triu_indices(self.dim, 1)
        return self._tensor[iu, ju].ravel()

    def __call__(self, X, Y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", X, Y, self._tensor)

    def __getitem__(self, idx) -> float:
        return float(self._tensor[idx])

    def __add__(self, other):
        return LieBracket(self._tensor + other.tensor)

    def __sub__(self, other):
        return LieBracket(self._tensor - other.tensor)

    def __neg__(self):
        return LieBracket(-self._tensor)

    def __mul__(self, c):
        return LieBracket(float(c) * self._tensor)

    __rmul__ = __mul__

    def norm2(self) -> float:
        """Full-sum squared norm, sum over all i, j, k."""
        return float(np.sum(self._tensor**2))

    def ad(self, X) -> np.ndarray:
        """Matrix of ad_X; entry (k, j) is the e_k coefficient of mu(X, e_j)."""
        return np.einsum("i,ijk->kj", X, self._tensor)

    def __repr__(self) -> str:
        terms = []
        for i, j in combinations(range(self.dim), 2):
            for k in range(self.dim):
                v = self._tensor[i, j, k]
                if v != 0:
                    terms.append(f"[e{i + 1},e{j + 1}]={v:+g}e{k + 1}")
        return f"LieBracket(dim={self.dim}: {', '.join(terms) or 'abelian'})"


def _raw(mu) -> np.ndarray:
    return mu.tensor if isinstance(mu, LieBracket) else np.asarray(mu, dtype=float)


@dataclass(frozen=True)
class AlgebraReport:
    is_lie: bool
    is_nilpotent: bool
    is_solvable: bool
    is_unimodular: bool
    jacobi_residual: float
    lower_central_length: int


def jacobiator_tensor(T: np.ndarray) -> np.ndarray:
    # J[a, b, c, :] = mu(mu(a, b), c) + mu(mu(b, c), a) + mu(mu(c, a), b)
    t = np.einsum("abs,scm->abcm", T, T)
    return t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))


def jacobiator(mu) -> np.ndarray:
    """Jacobiator as a vector-valued tensor ``J[a, b, c, m]``."""
    return jacobiator_tensor(_raw(mu))


def jacobi_residual(mu) -> float:
    J = jacobiator(mu)
    return float(np.max(np.abs(J))) if J.size else 0.0


def is_lie(mu, tol: float = 1e-9) -> bool:
    return jacobi_residual(mu) <= tol


def _rank(vectors: np.ndarray, tol: float) -> tuple[int, np.ndarray]:
    """Rank and an orthonormal basis (rows) of the span of the given rows."""
    if vectors.size == 0:
        return 0, vectors.reshape(0, vectors.shape[-1] if vectors.ndim > 1 else 0)
    u, s, vt = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return 0, vt[:0]
    r = int(np.sum(s > tol * s[0]))
    return r, vt[:r]


def _bracket_span(T: np.ndarray, A: np.ndarray, B: np.ndarray, tol: float):
    vecs = np.einsum("pi,qj,ijk->pqk", A, B, T).reshape(-1, T.shape[0])
    # absolute floor keeps rounding noise in mu from counting as a direction
    vecs = vecs[np.linalg.norm(vecs, axis=1) > tol * max(1.0, np.abs(T).max())]
    return _rank(vecs, tol)[1] if vecs.size else np.zeros((0, T.shape[0]))


def _terminates(T, start, step) -> tuple[bool, int]:
    """Iterate a descending series of subspaces; report whether it hits 0 and after how many steps."""
    cur = start
    for s in range(1, T.shape[0] + 2):
        nxt = step(cur)
        if nxt.shape[0] == 0:
            return True, s
        if nxt.shape[0] == cur.shape[0]:
            return False, s
        cur = nxt
    return False, -1


def structure_report(mu, tol: float = NULLSPACE_TOL) -> AlgebraReport:
    T = _raw(mu)
    n = T.shape[0]
    res = jacobi_residual(T)
    lie = res <= max(tol, 1e-9) * max(1.0, float(np.sum(T**2)))

    full = np.eye(n)
    nilpotent, length = _terminates(T, full, lambda cur: _bracket_span(T, full, cur, tol))
    solvable, _ = _terminates(T, full, lambda cur: _bracket_span(T, cur, cur, tol))

    U = mean_curvature(T)
    unimodular = float(np.linalg.norm(U)) <= tol * max(1.0, np.sqrt(np.sum(T**2)))
    return AlgebraReport(
        is_lie=bool(lie),
        is_nilpotent=nilpotent,
        is_solvable=solvable,
        is_unimodular=bool(unimodular),
        jacobi_residual=res,
        lower_central_length=length if nilpotent else -1,
    )


def killing_endo(mu) -> np.ndarray:
    """Symmetric endomorphism B with <BX, Y> = tr(ad_X ad_Y)."""
    T = _raw(mu)
    # ad_{e_i} has entries (k, j) = T[i, j, k]
    return np.einsum("ijk,lkj->il", T, T)


def mean_curvature(mu) -> np.ndarray:
    """Vector U with <U, X> = tr(ad_X)."""
    T = _raw(mu)
    return np.einsum("ijj->i", T)


def moment_map_mu(mu) -> np.ndarray:
    """GL(n) moment map: <m, A> = 1/4 <theta(A)mu, mu> with the full-sum pairing."""
    T = _raw(mu)
    return -0.5 * np.einsum("xij,yij->xy", T, T) + 0.25 * np.einsum("ijx,ijy->xy", T, T)


def ricci(mu) -> np.ndarray:
    """Ricci endomorphism of the left-invariant metric: m - B/2 - sym(ad_U)."""
    T = _raw(mu)
    U = mean_curvature(T)
    adU = np.einsum("i,ijk->kj", U, T)
    return moment_map_mu(T) - 0.5 * killing_endo(T) - 0.5 * (adU + adU.T)


def scalar_curvature(mu) -> float:
    return float(np.trace(ricci(mu)))


def theta_matrix(mu) -> np.ndarray:
    """Matrix of A -> theta(A)mu, columns indexed by the entries A[p, q] (row-major)."""
    T = _raw(mu)
    n = T.shape[0]
    cols = []
    for p in range(n):
        for q in range(n):
            E = np.zeros((n, n))
            E[p, q] = 1.0
            cols.append(theta_tensor(E, T).ravel())
    return np.array(cols).T


def derivation_algebra(mu, tol: float = NULLSPACE_TOL) -> list[np.ndarray]:
    """Basis of Der(mu) = ker(A -> theta(A)mu)."""
    T = _raw(mu)
    n = T.shape[0]
    return [v.reshape(n, n) for v in nullspace(theta_matrix(T), tol)]
