"""Built-in algebras and soliton fixtures.

Each entry is an :class:`AlgebraSpec` plus, for verified solitons, the
expected lambda, diagonal of D and soliton class. ``expect_soliton`` is
True or False where the entry makes a claim and None for plain algebras
whose soliton status depends on parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .courant import DorfmanBracket
from .io import AlgebraSpec

__all__ = [
    "CatalogEntry",
    "catalog",
    "catalog_names",
    "classification_fixtures",
    "get_entry",
]


@dataclass
class CatalogEntry:
    spec: AlgebraSpec
    lam: float | None = None
    D_diag: tuple | None = None
    soliton_class: str | None = None
    expect_soliton: bool | None = None
    note: str = ""
    params: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def has_expected(self) -> bool:
        return self.lam is not None

    def bracket(self) -> DorfmanBracket:
        return self.spec.to_bracket(check=True)


def _spec(name, n, mu=(), H=(), **meta) -> AlgebraSpec:
    return AlgebraSpec(name=name, dim=n, mu_entries=list(mu), H_entries=list(H), metadata=meta)


def abelian(n: int = 3) -> CatalogEntry:
    return CatalogEntry(_spec("abelian", n, family="abelian"), params={"n": n})


def n3(a: float = 1.0) -> CatalogEntry:
    return CatalogEntry(_spec("n3", 3, [(1, 2, 3, a)], family="heisenberg"), params={"a": a})


def n3_with_torsion(a: float = 1.0, b: float = 1.0) -> CatalogEntry:
    """Heisenberg bracket with H = b e^123; a soliton iff b = 0 or a^2 = b^2."""
    sol = abs(abs(a) - abs(b)) < 1e-15 and b != 0
    return CatalogEntry(
        _spec("n3-torsion", 3, [(1, 2, 3, a)], [(1, 2, 3, b)], family="heisenberg"),
        lam=-2.0 * a * a if sol else None,
        D_diag=(a * a, a * a, 2 * a * a) if sol else None,
        soliton_class="Expanding" if sol else None,
        expect_soliton=sol or b == 0,
        params={"a": a, "b": b},
    )


def n3_soliton() -> CatalogEntry:
    return CatalogEntry(
        _spec("n3-soliton", 3, [(1, 2, 3, 1.0)], [(1, 2, 3, 1.0)], family="heisenberg", nilpotent=True),
        lam=-2.0,
        D_diag=(1.0, 1.0, 2.0),
        soliton_class="Expanding",
        expect_soliton=True,
    )


def n3xR(l1: float = 0.0, l2: float = 0.0, l3: float = 0.0, l4: float = 0.0) -> CatalogEntry:
    """n3 + R with H = l4 e^123 + l3 e^124 + l2 e^134 + l1 e^234 (every such H is closed)."""
    H = [(t, v) for t, v in [((1, 2, 3), l4), ((1, 2, 4), l3), ((1, 3, 4), l2), ((2, 3, 4), l1)] if v != 0]
    return CatalogEntry(
        _spec("n3xR", 4, [(1, 2, 3, 1.0)], [(*t, v) for t, v in H], family="n3xR"),
        params={"l1": l1, "l2": l2, "l3": l3, "l4": l4},
    )


def n3xR_soliton() -> CatalogEntry:
    return CatalogEntry(
        _spec("n3xR-soliton", 4, [(1, 2, 3, 1.0)], [(1, 2, 3, 1.0)], family="n3xR", nilpotent=True),
        lam=-2.0,
        D_diag=(1.0, 1.0, 2.0, 2.0),
        soliton_class="Expanding",
        expect_soliton=True,
    )


def n3xR_circle(theta: float = 0.0) -> CatalogEntry:
    """H = cos(theta) e^234 + sin(theta) e^134, a one-parameter soliton family."""
    l1, l2 = math.cos(theta), math.sin(theta)
    H = [(t, v) for t, v in [((1, 3, 4), l2), ((2, 3, 4), l1)] if v != 0]
    return CatalogEntry(
        _spec("n3xR-circle", 4, [(1, 2, 3, 1.0)], [(*t, v) for t, v in H], family="n3xR", nilpotent=True),
        lam=-1.5,
        D_diag=(1 - l2 * l2 / 2, 1 - l1 * l1 / 2, 1.5, 1.0),
        soliton_class="Expanding",
        expect_soliton=True,
        params={"theta": theta},
    )


def n4(a: float = 1.0, b: float = 0.0, c: float = 1.0, l1=0.0, l2=0.0, l3=0.0, l4=0.0) -> CatalogEntry:
    """mu(e1,e2) = a e3 + b e4, mu(e1,e3) = c e4, H = l4 e^123 + l3 e^124 + l2 e^134 + l1 e^234."""
    mu = [(i, j, k, v) for i, j, k, v in [(1, 2, 3, a), (1, 2, 4, b), (1, 3, 4, c)] if v != 0]
    H = [(*t, v) for t, v in [((1, 2, 3), l4), ((1, 2, 4), l3), ((1, 3, 4), l2), ((2, 3, 4), l1)] if v != 0]
    return CatalogEntry(
        _spec("n4", 4, mu, H, family="n4"),
        params={"a": a, "b": b, "c": c, "l1": l1, "l2": l2, "l3": l3, "l4": l4},
    )


def n4_soliton_1() -> CatalogEntry:
    s = math.sqrt(3) / 2
    return CatalogEntry(
        _spec("n4-soliton-1", 4, [(1, 2, 3, 1.0), (1, 3, 4, s)], [(1, 3, 4, s)], family="n4", nilpotent=True),
        lam=-1.5,
        D_diag=(0.25, 1.0, 1.25, 1.5),
        soliton_class="Expanding",
        expect_soliton=True,
    )


def n4_soliton_2() -> CatalogEntry:
    return CatalogEntry(
        _spec("n4-soliton-2", 4, [(1, 2, 3, 1.0), (1, 3, 4, 1.0)], [(2, 3, 4, 1.0)], family="n4", nilpotent=True),
        lam=-1.5,
        D_diag=(0.5, 0.5, 1.0, 1.5),
        soliton_class="Expanding",
        expect_soliton=True,
    )


def n4_lambda3_control(a: float = 1.0, l3: float = 1.0) -> CatalogEntry:
    """n4 with H = l3 e^124 and c^2 = a^2 + (2/3) l3^2: D is a derivation but the torsion equation fails."""
    c = math.sqrt(a * a + 2.0 * l3 * l3 / 3.0)
    return CatalogEntry(
        _spec("n4-lambda3-control", 4, [(1, 2, 3, a), (1, 3, 4, c)], [(1, 2, 4, l3)], family="n4"),
        expect_soliton=False,
        note="non-soliton control",
        params={"a": a, "l3": l3},
    )


def n3_ratio_control(a: float = 1.0) -> CatalogEntry:
    e = n3_with_torsion(a, 2.0 * a)
    e.spec.name = "n3-ratio-control"
    e.note = "non-soliton control"
    return e


def heis3xRk(k: int = 1) -> CatalogEntry:
    n = 3 + k
    return CatalogEntry(
        _spec("heis3xRk", n, [(1, 2, 3, 1.0)], [(1, 2, 3, 1.0)], family="heis3xRk", nilpotent=True),
        lam=-2.0,
        D_diag=(1.0, 1.0) + (2.0,) * (k + 1),
        soliton_class="Expanding",
        expect_soliton=True,
        params={"k": k},
    )


def so3() -> CatalogEntry:
    return CatalogEntry(
        _spec("so3", 3, [(1, 2, 3, 1.0), (2, 3, 1, 1.0), (1, 3, 2, -1.0)], family="semisimple"),
        lam=0.5,
        D_diag=(0.0, 0.0, 0.0),
        soliton_class="Shrinking",
        expect_soliton=True,
    )


def sol3() -> CatalogEntry:
    # mu(e3, e1) = e1 and mu(e3, e2) = -e2, stored with i < j
    return CatalogEntry(
        _spec("sol3", 3, [(1, 3, 1, -1.0), (2, 3, 2, 1.0)], [(1, 2, 3, 1.0)], family="solvable")
    )


def aff1() -> CatalogEntry:
    # the hyperbolic plane: Einstein with Ric = -Id
    return CatalogEntry(
        _spec("aff1", 2, [(1, 2, 2, 1.0)], family="solvable"),
        lam=-1.0,
        D_diag=(0.0, 0.0),
        soliton_class="Expanding",
        expect_soliton=True,
    )


_BUILDERS = {
    "abelian": abelian,
    "n3": n3,
    "n3-torsion": n3_with_torsion,
    "n3-soliton": n3_soliton,
    "n3xR": n3xR,
    "n3xR-soliton": n3xR_soliton,
    "n3xR-circle": n3xR_circle,
    "n4": n4,
    "n4-soliton-1": n4_soliton_1,
    "n4-soliton-2": n4_soliton_2,
    "heis3xRk": heis3xRk,
    "so3": so3,
    "sol3": sol3,
    "aff1": aff1,
    "n3-ratio-control": n3_ratio_control,
    "n4-lambda3-control": n4_lambda3_control,
}


def catalog_names() -> list[str]:
    return list(_BUILDERS)


def get_entry(name: str, **params) -> CatalogEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(_BUILDERS)}") from None
    return builder(**params)


def catalog() -> list[CatalogEntry]:
    """Every entry at its default parameters."""
    return [b() for b in _BUILDERS.values()]


def classification_fixtures(circle_points: int = 8) -> list[CatalogEntry]:
    """Soliton fixtures up to dimension 4 followed by the non-soliton controls."""
    out = [n3_soliton(), n3xR_soliton()]
    for m in range(circle_points):
        e = n3xR_circle(2 * math.pi * m / circle_points)
        e.spec.name = f"n3xR-circle[{m}/{circle_points}]"
        out.append(e)
    out += [n4_soliton_1(), n4_soliton_2(), n3_ratio_control(), n4_lambda3_control()]
    return out
