"""Dense exterior algebra and small linear algebra on R^n.

Forms are stored over strictly increasing multi-indices; a full alternating
tensor is materialised on demand. Everything here assumes an orthonormal
basis, so indices are never raised or lowered explicitly.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from math import comb, factorial

import numpy as np

__all__ = [
    "KForm",
    "alternate",
    "form_inner",
    "interior_product",
    "least_squares_scalar",
    "nullspace",
    "permutation_sign",
    "rho_action",
    "rho_tensor",
    "theta_action",
    "theta_tensor",
]

MAX_DIM = 8
NULLSPACE_TOL = 1e-10


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 if ``seq`` has repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def increasing_tuples(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def _tuple_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {t: a for a, t in enumerate(increasing_tuples(n, k))}


@lru_cache(maxsize=None)
def _signed_permutations(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    return tuple((p, permutation_sign(p)) for p in permutations(range(k)))


def alternate(T: np.ndarray, axes_from: int = 0) -> np.ndarray:
    """Average of ``sign(p) * T`` over permutations of the trailing axes.

    Axes before ``axes_from`` are left untouched.
    """
    k = T.ndim - axes_from
    if k <= 1:
        return T.copy()
    head = tuple(range(axes_from))
    out = np.zeros_like(T)
    for p, s in _signed_permutations(k):
        out += s * np.transpose(T, head + tuple(axes_from + q for q in p))
    return out / factorial(k)


@lru_cache(maxsize=None)
def _scatter(n: int, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat positions, component ids and signs of every permuted increasing tuple."""
    pos, ids, signs = [], [], []
    for a, t in enumerate(increasing_tuples(n, k)):
        for p, s in _signed_permutations(k):
            idx = tuple(t[q] for q in p)
            pos.append(np.ravel_multi_index(idx, (n,) * k) if k else 0)
            ids.append(a)
            signs.append(s)
    return np.array(pos, dtype=int), np.array(ids, dtype=int), np.array(signs, dtype=float)


def _is_alternating(T: np.ndarray) -> bool:
    # adjacent transpositions generate the symmetric group
    return all(np.array_equal(T, -np.swapaxes(T, a, a + 1)) for a in range(T.ndim - 1))


def _components_to_tensor(n: int, k: int, comps: np.ndarray) -> np.ndarray:
    if k == 0:
        return np.array(comps[0], dtype=float)
    pos, ids, signs = _scatter(n, k)
    flat = np.zeros(n**k)
    flat[pos] = signs * comps[ids]
    return flat.reshape((n,) * k)


def _tensor_to_components(T: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.array([float(T)])
    n = T.shape[0]
    return np.array([T[t] for t in increasing_tuples(n, k)], dtype=float)


class KForm:
    """Alternating k-form on R^n with components on increasing index tuples.

    Indices are 0-based. ``form[i, j, k]`` accepts any index tuple and returns
    the stored value times the permutation sign (0 on repeated indices).
    A degree above the dimension is allowed and gives the zero space, so
    3-forms exist (trivially) on R^1 and R^2.
    """

    __slots__ = ("dim", "degree", "_comps", "_tensor")

    def __init__(self, dim: int, degree: int, components=None):
        if not 1 <= dim <= MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {dim}")
        if degree < 0:
            raise ValueError(f"degree must be non-negative, got {degree}")
        self.dim = dim
        self.degree = degree
        size = comb(dim, degree)
        if components is None:
            comps = np.zeros(size)
        else:
            comps = np.array(components, dtype=float).reshape(-1)
            if comps.size != size:
                raise ValueError(f"expected {size} components, got {comps.size}")
        comps.setflags(write=False)
        self._comps = comps
        self._tensor = None

    @classmethod
    def from_dict(cls, dim: int, degree: int, entries: dict) -> "KForm":
        """Build from ``{index_tuple: value}``; tuples need not be increasing."""
        comps = np.zeros(comb(dim, degree))
        lookup = _tuple_index(dim, degree)
        for idx, v in entries.items():
            idx = tuple(idx)
            if len(idx) != degree or any(not 0 <= i < dim for i in idx):
                raise IndexError(f"bad index {idx} for a {degree}-form on R^{dim}")
            s = permutation_sign(idx)
            if s == 0:
                if v != 0:
                    raise ValueError(f"repeated index {idx} with nonzero value")
                continue
            comps[lookup[tuple(sorted(idx))]] += s * v
        return cls(dim, degree, comps)

    @classmethod
    def from_tensor(cls, T) -> "KForm":
        """Build from a full tensor, which is alternated first unless it already is exactly."""
        T = np.asarray(T, dtype=float)
        k = T.ndim
        n = T.shape[0] if k else 1
        A = T if _is_alternating(T) else alternate(T)
        return cls(n, k, _tensor_to_components(A, k))

    @classmethod
    def basis(cls, dim: int, idx) -> "KForm":
        """The basis form e^{i_1 ... i_k} (0-based indices)."""
        idx = tuple(idx)
        return cls.from_dict(dim, len(idx), {idx: 1.0})

    @property
    def components(self) -> np.ndarray:
        return self._comps

    @property
    def tensor(self) -> np.ndarray:
        if self._tensor is None:
            T = _components_to_tensor(self.dim, self.degree, self._comps)
            T.setflags(write=False)
            self._tensor = T
        return self._tensor

    def __getitem__(self, idx) -> float:
        if not isinstance(idx, tuple):
            idx = (idx,)
        if len(idx) != self.degree:
            raise IndexError(f"need {self.degree} indices, got {len(idx)}")
        s = permutation_sign(idx)
        if s == 0:
            return 0.0
        return s * self._comps[_tuple_index(self.dim, self.degree)[tuple(sorted(idx))]]

    def items(self):
        """Nonzero ``(index_tuple, value)`` pairs over increasing tuples."""
        for t, v in zip(increasing_tuples(self.dim, self.degree), self._comps):
            if v != 0:
                yield t, float(v)

    def _check(self, other: "KForm"):
        if not isinstance(other, KForm):
            return NotImplemented
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise ValueError("forms differ in dimension or degree")

    def __add__(self, other):
        self._check(other)
        return KForm(self.dim, self.degree, self._comps + other._comps)

    def __sub__(self, other):
        self._check(other)
        return KForm(self.dim, self.degree, self._comps - other._comps)

    def __neg__(self):
        return KForm(self.dim, self.degree, -self._comps)

    def __mul__(self, c):
        return KForm(self.dim, self.degree, float(c) * self._comps)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return KForm(self.dim, self.degree, self._comps / float(c))

    def norm(self, convention: str = "full") -> float:
        return float(np.sqrt(form_inner(self, self, convention)))

    def allclose(self, other: "KForm", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self._comps, other._comps, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = [f"{v:+g} e^{''.join(str(i + 1) for i in t)}" for t, v in self.items()]
        return f"KForm(dim={self.dim}, degree={self.degree}: {' '.join(terms) or '0'})"


def interior_product(X, omega: KForm) -> KForm:
    """Contraction of ``omega`` with the vector ``X`` in the first slot."""
    X = np.asarray(X, dtype=float)
    if omega.degree == 0:
        raise ValueError("cannot contract a 0-form")
    if X.shape != (omega.dim,):
        raise ValueError("vector and form dimensions differ")
    T = np.tensordot(X, omega.tensor, axes=(0, 0))
    return KForm(omega.dim, omega.degree - 1, _tensor_to_components(T, omega.degree - 1))


def form_inner(alpha: KForm, beta: KForm, convention: str = "full") -> float:
    """Inner product of two k-forms.

    ``"full"`` sums over all ordered index tuples, ``"increasing"`` over
    strictly increasing ones; they differ by a factor k!.
    """
    if (alpha.dim, alpha.degree) != (beta.dim, beta.degree):
        raise ValueError("forms differ in dimension or degree")
    s = float(alpha.components @ beta.components)
    if convention == "increasing":
        return s
    if convention == "full":
        return factorial(alpha.degree) * s
    raise ValueError(f"unknown convention {convention!r}")


def rho_tensor(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    """rho(A) on a full alternating tensor: minus A inserted into each slot."""
    k = W.ndim
    out = np.zeros_like(W)
    for slot in range(k):
        # (W(.., A x, ..))_{..i..} = sum_l A[l, i] W_{..l..}
        moved = np.tensordot(A, W, axes=(0, slot))  # new axis 0 is i
        out -= np.moveaxis(moved, 0, slot)
    return out


def rho_action(A, omega: KForm) -> KForm:
    """Derivation action rho(A) on a form of any degree."""
    A = np.asarray(A, dtype=float)
    if A.shape != (omega.dim, omega.dim):
        raise ValueError("endomorphism and form dimensions differ")
    if omega.degree == 0:
        return KForm(omega.dim, 0, [0.0])
    T = rho_tensor(A, omega.tensor)
    return KForm(omega.dim, omega.degree, _tensor_to_components(T, omega.degree))


def theta_tensor(A: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """theta(A)mu = A mu(.,.) - mu(A.,.) - mu(., A.) on a bracket tensor mu[i, j, k]."""
    return (
        np.einsum("kl,ijl->ijk", A, mu)
        - np.einsum("li,ljk->ijk", A, mu)
        - np.einsum("lj,ilk->ijk", A, mu)
    )


def theta_action(A, mu):
    """theta(A) applied to a bracket; accepts a LieBracket or a raw (n, n, n) tensor.

    The result is returned in the same kind as the input and need not be a
    Lie bracket.
    """
    A = np.asarray(A, dtype=float)
    T = getattr(mu, "tensor", None)
    raw = np.asarray(mu if T is None else T, dtype=float)
    if A.shape != raw.shape[:2]:
        raise ValueError("endomorphism and bracket dimensions differ")
    out = theta_tensor(A, raw)
    if T is None:
        return out
    return type(mu)(0.5 * (out - np.swapaxes(out, 0, 1)))


def nullspace(M, tol: float = NULLSPACE_TOL) -> list[np.ndarray]:
    """Orthonormal basis of right-singular directions with small singular value.

    A direction is kept when its singular value is at most ``tol`` times the
    largest singular value (or ``tol`` itself when ``M`` is zero).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    ncols = M.shape[1]
    if M.size == 0:
        return [e for e in np.eye(ncols)]
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    svals = np.zeros(ncols)
    svals[: s.size] = s
    return [vt[i].copy() for i in range(ncols) if svals[i] <= tol * scale]


def least_squares_scalar(v0, v1) -> tuple[float, float]:
    """Minimise |v0 + lam * v1| over lam; returns ``(lam, residual)``."""
    v0 = np.asarray(v0, dtype=float).ravel()
    v1 = np.asarray(v1, dtype=float).ravel()
    d = float(v1 @ v1)
    if d == 0.0:
        return 0.0, float(np.linalg.norm(v0))
    lam = -float(v0 @ v1) / d
    return lam, float(np.linalg.norm(v0 + lam * v1))
