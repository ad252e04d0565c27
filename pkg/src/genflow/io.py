"""JSON algebra specs and CSV trajectory output.

Files use 1-based indices; everything in memory is 0-based.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .courant import ClosednessError, DorfmanBracket, JacobiError
from .liealg import LieBracket
from .multilinear import MAX_DIM, KForm

__all__ = [
    "AlgebraSpec",
    "CSV_HEADER",
    "DuplicateEntryError",
    "SpecError",
    "SpecIndexError",
    "SpecParseError",
    "emit_trajectory_csv",
    "load_spec",
    "read_spec",
    "save_spec",
    "spec_from_bracket",
]

CSV_HEADER = (
    "t",
    "norm2_mud",
    "gen_scalar",
    "scal",
    "norm2_H",
    "jacobi_res",
    "dH_res",
    "dstarH_norm",
    "ell",
    "step_size",
)


class SpecError(ValueError):
    """Base class for problems with an algebra spec file."""


class SpecParseError(SpecError):
    pass


class SpecIndexError(SpecError):
    pass


class DuplicateEntryError(SpecError):
    pass


@dataclass
class AlgebraSpec:
    """Serializable description of a Dorfman bracket.

    ``mu_entries`` holds ``(i, j, k, v)`` with ``i < j`` meaning
    ``mu(e_i, e_j)`` has coefficient ``v`` along ``e_k``; ``H_entries`` holds
    ``(i, j, k, v)`` with ``i < j < k``. Indices are 1-based. An optional
    ``metric`` (Gram matrix of the basis) is reduced to the orthonormal case
    when the bracket is built.
    """

    name: str
    dim: int
    mu_entries: list = field(default_factory=list)
    H_entries: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    metric: list | None = None

    def validate(self) -> None:
        if not isinstance(self.dim, int) or not 1 <= self.dim <= MAX_DIM:
            raise SpecIndexError(f"dim must be an integer in [1, {MAX_DIM}], got {self.dim!r}")
        n = self.dim
        seen = set()
        for e in self.mu_entries:
            i, j, k, _ = e
            if not (1 <= i < j <= n and 1 <= k <= n):
                raise SpecIndexError(f"mu entry {tuple(e)}: need 1 <= i < j <= {n} and 1 <= k <= {n}")
            if (i, j, k) in seen:
                raise DuplicateEntryError(f"duplicate mu entry for (i, j, k) = {(i, j, k)}")
            seen.add((i, j, k))
        seen = set()
        for e in self.H_entries:
            i, j, k, _ = e
            if not 1 <= i < j < k <= n:
                raise SpecIndexError(f"H entry {tuple(e)}: need 1 <= i < j < k <= {n}")
            if (i, j, k) in seen:
                raise DuplicateEntryError(f"duplicate H entry for (i, j, k) = {(i, j, k)}")
            seen.add((i, j, k))
        if self.metric is not None:
            G = np.asarray(self.metric, dtype=float)
            if G.shape != (n, n) or not np.allclose(G, G.T):
                raise SpecParseError("metric must be a symmetric n x n matrix")

    def to_bracket(self, check: bool = True) -> DorfmanBracket:
        self.validate()
        n = self.dim
        T = np.zeros((n, n, n))
        for i, j, k, v in self.mu_entries:
            T[i - 1, j - 1, k - 1] = v
            T[j - 1, i - 1, k - 1] = -v
        H = KForm.from_dict(n, 3, {(i - 1, j - 1, k - 1): v for i, j, k, v in self.H_entries})
        if self.metric is not None:
            T, Hw = _to_orthonormal(T, H.tensor, np.asarray(self.metric, dtype=float))
            H = KForm.from_tensor(Hw)
        try:
            return DorfmanBracket(LieBracket(T), H, check=check)
        except JacobiError as exc:
            raise JacobiError(f"{self.name}: {exc}; mu entries {self.mu_entries}") from None
        except ClosednessError as exc:
            raise ClosednessError(f"{self.name}: {exc}; H entries {self.H_entries}") from None

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "dim": self.dim,
            "mu_entries": [{"i": i, "j": j, "k": k, "v": v} for i, j, k, v in self.mu_entries],
            "H_entries": [{"i": i, "j": j, "k": k, "v": v} for i, j, k, v in self.H_entries],
            "metadata": self.metadata,
        }
        if self.metric is not None:
            out["metric"] = [list(map(float, row)) for row in self.metric]
        return out

    @classmethod
    def from_json(cls, data) -> "AlgebraSpec":
        if not isinstance(data, dict):
            raise SpecParseError("spec must be a JSON object")
        try:
            mu = [_entry(e) for e in data.get("mu_entries", [])]
            H = [_entry(e) for e in data.get("H_entries", [])]
            spec = cls(
                name=str(data.get("name", "unnamed")),
                dim=data["dim"],
                mu_entries=mu,
                H_entries=H,
                metadata=dict(data.get("metadata", {})),
                metric=data.get("metric"),
            )
        except KeyError as exc:
            raise SpecParseError(f"missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise SpecParseError(f"malformed spec: {exc}") from None
        spec.validate()
        return spec


def _entry(e) -> tuple:
    if not isinstance(e, dict):
        raise SpecParseError(f"entry {e!r} must be an object with keys i, j, k, v")
    missing = {"i", "j", "k", "v"} - set(e)
    if missing:
        raise SpecParseError(f"entry {e!r} lacks {sorted(missing)}")
    idx = []
    for key in ("i", "j", "k"):
        x = e[key]
        if isinstance(x, bool) or not isinstance(x, int):
            raise SpecParseError(f"entry {e!r}: index {key} must be an integer")
        idx.append(x)
    v = e["v"]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SpecParseError(f"entry {e!r}: v must be a finite number")
    return (*idx, float(v))


def _to_orthonormal(T, W, G):
    """Rewrite structure constants in a G-orthonormal basis f_a = sum_i e_i P[i, a]."""
    L = np.linalg.cholesky(G)
    P = np.linalg.inv(L).T  # P^T G P = I
    Pinv = np.linalg.inv(P)
    T2 = np.einsum("ia,jb,ijk,ck->abc", P, P, T, Pinv)
    W2 = np.einsum("ia,jb,kc,ijk->abc", P, P, P, W)
    return T2, W2


def spec_from_bracket(mud: DorfmanBracket, name: str = "bracket", metadata: dict | None = None) -> AlgebraSpec:
    n = mud.dim
    T = mud.mu.tensor
    mu_entries = [
        (i + 1, j + 1, k + 1, float(T[i, j, k]))
        for i in range(n)
        for j in range(i + 1, n)
        for k in range(n)
        if T[i, j, k] != 0
    ]
    H_entries = [(i + 1, j + 1, k + 1, v) for (i, j, k), v in mud.H.items()]
    return AlgebraSpec(name=name, dim=n, mu_entries=mu_entries, H_entries=H_entries, metadata=dict(metadata or {}))


def load_spec(path, check: bool = True) -> DorfmanBracket:
    """Read a JSON spec and build the bracket, with construction checks."""
    return read_spec(path).to_bracket(check=check)


def read_spec(path) -> AlgebraSpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: invalid JSON: {exc}") from None
    return AlgebraSpec.from_json(data)


def save_spec(spec, path) -> None:
    """Write a spec (or a DorfmanBracket) as JSON; floats round-trip exactly."""
    if isinstance(spec, DorfmanBracket):
        spec = spec_from_bracket(spec)
    Path(path).write_text(json.dumps(spec.to_json(), indent=2) + "\n")


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def emit_trajectory_csv(trajectory, path) -> None:
    """One row per sample; ``ell`` is left empty on unnormalized runs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in trajectory:
            w.writerow(
                [
                    _fmt(s.t),
                    _fmt(s.norm2_mud),
                    _fmt(s.gen_scalar),
                    _fmt(s.scal),
                    _fmt(s.norm2_H),
                    _fmt(s.jacobi_residual),
                    _fmt(s.dH_residual),
                    _fmt(s.dstarH_norm),
                    _fmt(s.ell),
                    _fmt(s.step_size),
                ]
            )
