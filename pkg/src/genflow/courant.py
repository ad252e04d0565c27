"""Generalized-geometry quantities of a Dorfman bracket (mu, H) on g + g*.

The background generalized metric is fixed to the identity in an orthonormal
basis, so every curvature quantity is a function of the pair (mu, H) alone.
Elements of the Lie algebra l = gl(g) + Lambda^2 g* are written (A, alpha)
and act on g + g* by the block matrix [[A, 0], [alpha, -A^T]].
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .liealg import (
    LieBracket,
    jacobiator_tensor,
    moment_map_mu,
    ricci,
    scalar_curvature,
)
from .multilinear import (
    KForm,
    alternate,
    increasing_tuples,
    rho_tensor,
    theta_tensor,
)

__all__ = [
    "ClosednessError",
    "DorfmanBracket",
    "GenEndo",
    "JacobiError",
    "LElement",
    "a_term",
    "big_theta",
    "big_theta_raw",
    "block_lift",
    "bismut_ricci",
    "ce_differential",
    "ce_differential_matrix",
    "codifferential",
    "dorfman_eval",
    "dorfman_inner",
    "dorfman_norm2",
    "dorfman_tensor",
    "gen_ricci",
    "gen_scalar",
    "h_squared",
    "l_inner",
    "l_moment_map",
    "laplacian",
    "rc_minus_a_element",
]

CONSTRUCTION_TOL = 1e-9


class JacobiError(ValueError):
    """The g-part of a Dorfman bracket violates the Jacobi identity."""


class ClosednessError(ValueError):
    """The 3-form of a Dorfman bracket is not closed."""


# -- array kernels ---------------------------------------------------------
#
# Brackets are full tensors T[i, j, k]; k-forms are full alternating arrays.


def d_tensor(T: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Chevalley-Eilenberg differential of a full alternating k-tensor."""
    k = W.ndim
    n = T.shape[0]
    if k == n:
        return np.zeros((n,) * (k + 1))
    if k == 0:
        return np.zeros(n)
    P = np.tensordot(T, W, axes=(2, 0))  # P[a, b, rest] = W(mu(a, b), rest)
    return -comb(k + 1, 2) * alternate(P)


def dstar_tensor(T: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Adjoint of d for the increasing-tuple inner product."""
    k = W.ndim
    if k <= 1:
        return np.zeros(W.shape[:-1]) if k == 1 else np.zeros(())
    G = np.tensordot(T, W, axes=([0, 1], [0, 1]))  # G[s, rest] = sum mu_ab^s W_ab,rest
    return -0.5 * (k - 1) * alternate(G)


def d2_tensor(T: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """d on 2-forms, written out to avoid the generic permutation sum."""
    P = np.tensordot(T, alpha, axes=(2, 0))  # P[a, b, c] = alpha(mu(a, b), c)
    # -(P_abc - P_acb + P_bca); the cyclic sum is already alternating
    return -(P - np.transpose(P, (0, 2, 1)) + np.transpose(P, (2, 0, 1)))


def dstar3_tensor(T: np.ndarray, W: np.ndarray) -> np.ndarray:
    G = np.tensordot(T, W, axes=([0, 1], [0, 1]))
    return -0.5 * (G - G.T)


def hsq_tensor(W: np.ndarray) -> np.ndarray:
    return np.einsum("ikl,jkl->ij", W, W)


def rc_minus_a(T: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The l-valued part (Ric^B, -d*H) of the generalized Ricci curvature."""
    ricb = ricci(T) - 0.25 * hsq_tensor(W)
    return ricb, -dstar3_tensor(T, W)


def theta_pair(A: np.ndarray, alpha: np.ndarray, T: np.ndarray, W: np.ndarray):
    """Projections of Theta((A, alpha)) applied to the bracket (T, W)."""
    return theta_tensor(A, T), rho_tensor(A, W) - d2_tensor(T, alpha)


# -- domain types ----------------------------------------------------------


class DorfmanBracket:
    """The pair (mu, H) determining a Dorfman bracket on g + g*.

    Jacobi for ``mu`` and closedness of ``H`` are checked at construction,
    with an absolute tolerance scaled by ``max(1, |mud|^2)``.
    """

    __slots__ = ("mu", "H")

    def __init__(self, mu: LieBracket, H: KForm, check: bool = True, tol: float = CONSTRUCTION_TOL):
        if H.degree != 3 or H.dim != mu.dim:
            raise ValueError("H must be a 3-form on the same space as mu")
        self.mu = mu
        self.H = H
        if check:
            scale = max(1.0, self.norm2())
            jac = float(np.max(np.abs(jacobiator_tensor(mu.tensor)), initial=0.0))
            if jac > tol * scale:
                raise JacobiError(f"Jacobi identity fails: residual {jac:.3e}")
            dH = float(np.max(np.abs(d_tensor(mu.tensor, H.tensor)), initial=0.0))
            if dH > tol * scale:
                raise ClosednessError(f"H is not closed: |dH| residual {dH:.3e}")

    @property
    def dim(self) -> int:
        return self.mu.dim

    @classmethod
    def from_arrays(cls, T, W, check: bool = False) -> "DorfmanBracket":
        return cls(LieBracket(T), KForm.from_tensor(W), check=check)

    @classmethod
    def from_flat(cls, n: int, y, check: bool = False) -> "DorfmanBracket":
        """Inverse of :meth:`flat`."""
        y = np.asarray(y, dtype=float)
        m = n * comb(n, 2)
        return cls(LieBracket.from_components(n, y[:m]), KForm(n, 3, y[m:]), check=check)

    def flat(self) -> np.ndarray:
        """Flat coordinates: mu_ij^k for i < j, then H_ijk for i < j < k."""
        return np.concatenate([self.mu.components, self.H.components])

    def norm2(self) -> float:
        return dorfman_norm2(self)

    def scaled(self, c: float) -> "DorfmanBracket":
        return DorfmanBracket(c * self.mu, c * self.H, check=False)

    def normalized(self) -> "DorfmanBracket":
        r = np.sqrt(self.norm2())
        if r == 0:
            raise ValueError("zero bracket cannot be normalized")
        return self.scaled(1.0 / r)

    def jacobi_residual(self) -> float:
        return float(np.max(np.abs(jacobiator_tensor(self.mu.tensor)), initial=0.0))

    def dH_residual(self) -> float:
        return float(np.max(np.abs(d_tensor(self.mu.tensor, self.H.tensor)), initial=0.0))

    def __repr__(self) -> str:
        return f"DorfmanBracket({self.mu!r}, {self.H!r})"


@dataclass(frozen=True)
class LElement:
    """Element (A, alpha) of gl(g) + Lambda^2 g*."""

    A: np.ndarray
    alpha: KForm

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (self.alpha.dim, self.alpha.dim) or self.alpha.degree != 2:
            raise ValueError("A must be n x n and alpha a 2-form on R^n")
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.alpha.dim

    def to_gen_endo(self) -> "GenEndo":
        n = self.dim
        # block g -> g*: X -> iota_X alpha, entry (i, j) = alpha(e_j, e_i)
        return GenEndo(self.A, np.zeros((n, n)), self.alpha.tensor.T.copy(), -self.A.T)

    def __add__(self, other: "LElement") -> "LElement":
        return LElement(self.A + other.A, self.alpha + other.alpha)

    def __sub__(self, other: "LElement") -> "LElement":
        return LElement(self.A - other.A, self.alpha - other.alpha)


@dataclass(frozen=True)
class GenEndo:
    """Endomorphism of g + g* in blocks; ``gdual_g`` maps g to g*, and so on."""

    g_g: np.ndarray
    g_gdual: np.ndarray
    gdual_g: np.ndarray
    gdual_gdual: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.g_g, self.g_gdual], [self.gdual_g, self.gdual_gdual]])

    def frobenius2(self) -> float:
        return float(np.sum(self.matrix**2))

    def __sub__(self, other: "GenEndo") -> "GenEndo":
        return GenEndo(*(a - b for a, b in zip(self._blocks(), other._blocks())))

    def __add__(self, other: "GenEndo") -> "GenEndo":
        return GenEndo(*(a + b for a, b in zip(self._blocks(), other._blocks())))

    def _blocks(self):
        return self.g_g, self.g_gdual, self.gdual_g, self.gdual_gdual

    def is_in_l(self, atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.g_gdual, 0, atol=atol)
            and np.allclose(self.gdual_gdual, -self.g_g.T, atol=atol)
            and np.allclose(self.gdual_g, -self.gdual_g.T, atol=atol)
        )

    def to_l_element(self, atol: float = 1e-12) -> LElement:
        if not self.is_in_l(atol):
            raise ValueError("endomorphism does not lie in l")
        n = self.g_g.shape[0]
        return LElement(self.g_g, KForm.from_tensor(self.gdual_g.T))


# -- operations ------------------------------------------------------------


def dorfman_tensor(mud: DorfmanBracket) -> np.ndarray:
    """Full structure constants of the Dorfman bracket on g + g* (size 2n).

    Index ``i < n`` is e_i, index ``n + i`` is the dual e^i.
    """
    n = mud.dim
    T = mud.mu.tensor
    W = mud.H.tensor
    D = np.zeros((2 * n,) * 3)
    D[:n, :n, :n] = T
    D[:n, :n, n:] = W
    # mud(e_i, e^j) = -e^j o mu_{e_i} = -sum_k mu_ik^j e^k
    D[:n, n:, n:] = -np.transpose(T, (0, 2, 1))
    D[n:, :n, n:] = -np.swapaxes(D[:n, n:, n:], 0, 1)
    return D


def dorfman_eval(mud: DorfmanBracket, a, b) -> np.ndarray:
    """Evaluate the Dorfman bracket on two elements of g + g* (length 2n vectors)."""
    return np.einsum("i,j,ijk->k", np.asarray(a, float), np.asarray(b, float), dorfman_tensor(mud))


def ce_differential(mu: LieBracket, omega: KForm) -> KForm:
    """Chevalley-Eilenberg differential; a top-degree form maps to 0."""
    if omega.dim != mu.dim:
        raise ValueError("dimension mismatch")
    n, k = omega.dim, omega.degree
    if k >= n:
        return KForm(n, k + 1)
    return KForm.from_tensor(d_tensor(mu.tensor, omega.tensor))


def ce_differential_matrix(mu: LieBracket, k: int) -> np.ndarray:
    """Matrix of d on k-forms in the increasing-tuple bases (shape C(n,k+1) x C(n,k))."""
    n = mu.dim
    cols = [ce_differential(mu, KForm.basis(n, t)).components for t in increasing_tuples(n, k)]
    return np.array(cols).T.reshape(comb(n, k + 1), comb(n, k))


def codifferential(mu: LieBracket, omega: KForm) -> KForm:
    if omega.degree == 0:
        raise ValueError("codifferential of a 0-form is undefined")
    if omega.dim != mu.dim:
        raise ValueError("dimension mismatch")
    out = dstar_tensor(mu.tensor, omega.tensor)
    return KForm.from_tensor(out) if omega.degree > 1 else KForm(omega.dim, 0)


def laplacian(mu: LieBracket, omega: KForm) -> KForm:
    """Delta = -(d d* + d* d), non-positive on the invariant complex."""
    n, k = omega.dim, omega.degree
    out = KForm(n, k)
    if k >= 1:
        out = out - ce_differential(mu, codifferential(mu, omega))
    if k < n:
        out = out - codifferential(mu, ce_differential(mu, omega))
    return out


def h_squared(H: KForm) -> np.ndarray:
    return hsq_tensor(H.tensor)


def bismut_ricci(mu: LieBracket, H: KForm) -> np.ndarray:
    return ricci(mu) - 0.25 * h_squared(H)


def gen_ricci(mud: DorfmanBracket) -> GenEndo:
    ricb = bismut_ricci(mud.mu, mud.H)
    B = dstar3_tensor(mud.mu.tensor, mud.H.tensor)
    return GenEndo(ricb, -0.5 * B, 0.5 * B, -ricb.T)


def a_term(mud: DorfmanBracket) -> GenEndo:
    n = mud.dim
    B = dstar3_tensor(mud.mu.tensor, mud.H.tensor)
    Z = np.zeros((n, n))
    return GenEndo(Z, -0.5 * B, -0.5 * B, Z)


def block_lift(F: np.ndarray) -> LElement:
    """F acting on g + g* as F + (-F^*)."""
    n = F.shape[0]
    return LElement(F, KForm(n, 2))


def rc_minus_a_element(mud: DorfmanBracket) -> LElement:
    ricb, alpha = rc_minus_a(mud.mu.tensor, mud.H.tensor)
    return LElement(ricb, KForm.from_tensor(alpha))


def l_moment_map(mud: DorfmanBracket) -> LElement:
    """Moment map for the action of L, in closed form (m_mu - H^2/4, -d*H)."""
    T, W = mud.mu.tensor, mud.H.tensor
    A = moment_map_mu(T) - 0.25 * hsq_tensor(W)
    return LElement(A, KForm.from_tensor(-dstar3_tensor(T, W)))


def big_theta(L: LElement, mud: DorfmanBracket) -> tuple[LieBracket, KForm]:
    """(theta(A)mu, rho(A)H - d alpha), the two projections of Theta(L)mud."""
    br, form = theta_pair(L.A, L.alpha.tensor, mud.mu.tensor, mud.H.tensor)
    # rounding can leave the two slots off by an ulp; restore exact skewness
    return LieBracket(0.5 * (br - np.swapaxes(br, 0, 1))), KForm.from_tensor(form)


def big_theta_raw(L: LElement, mud: DorfmanBracket) -> np.ndarray:
    """Theta(L) applied to the full 2n-dimensional Dorfman tensor."""
    return theta_tensor(L.to_gen_endo().matrix, dorfman_tensor(mud))


def dorfman_inner(x: tuple, y: tuple) -> float:
    """3 <mu, nu> + <H, H'> with full-sum conventions; arguments are (bracket, 3-form) pairs."""
    (m1, h1), (m2, h2) = x, y
    return 3.0 * float(np.sum(m1.tensor * m2.tensor)) + 6.0 * float(h1.components @ h2.components)


def dorfman_norm2(mud: DorfmanBracket) -> float:
    return 3.0 * mud.mu.norm2() + 6.0 * float(mud.H.components @ mud.H.components)


def gen_scalar(mud: DorfmanBracket) -> float:
    """Generalized scalar curvature scal - |H|^2 / 12 (full-sum norm)."""
    return scalar_curvature(mud.mu) - 0.5 * float(mud.H.components @ mud.H.components)


def l_inner(L1: LElement, L2: LElement) -> float:
    """Inner product on l: 2 tr(A B^T) + (1/2) sum_ij alpha_ij beta_ij."""
    return 2.0 * float(np.sum(L1.A * L2.A)) + float(L1.alpha.components @ L2.alpha.components)
