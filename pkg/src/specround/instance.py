"""The weighted vector instance that every rounding routine consumes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInstance

#: Operator-norm tolerance for declaring an instance isotropic.
ISOTROPY_TOL = 1e-8


def _as_rows(obj, name: str, m: int | None = None) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InvalidInstance(f"{name} must be a 2-d array, got shape {arr.shape}")
    if m is not None and arr.shape[1] != m:
        raise InvalidInstance(f"{name} must have {m} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInstance(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise InvalidInstance(f"{name} must be entrywise nonnegative")
    return arr


@dataclass(frozen=True)
class LinearRows:
    """Extra linear rows ``M z (<= or >=) rhs`` evaluated on rounded outputs."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_rows(self.matrix, "constraint matrix"))
        rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if rhs.shape[0] != self.matrix.shape[0]:
            raise InvalidInstance("row count of matrix and rhs differ")
        if not np.all(np.isfinite(rhs)):
            raise InvalidInstance("rhs has non-finite entries")
        object.__setattr__(self, "rhs", rhs)


@dataclass(frozen=True)
class VectorInstance:
    """``m`` vectors in ``R^n`` with fractional weights and nonnegative costs.

    ``vectors`` is stored row-major as an ``(m, n)`` array. ``packing`` and
    ``covering`` are optional nonnegative linear rows that rounding reports
    on but does not steer by.
    """

    vectors: np.ndarray
    x: np.ndarray
    c: np.ndarray
    packing: LinearRows | None = None
    covering: LinearRows | None = None
    _iso_error: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise InvalidInstance(f"vectors must be (m, n), got shape {v.shape}")
        m = v.shape[0]
        x = np.asarray(self.x, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if x.shape[0] != m or c.shape[0] != m:
            raise InvalidInstance(f"x and c must have length m={m}")
        for name, arr in (("vectors", v), ("x", x), ("c", c)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInstance(f"{name} has non-finite entries")
        if np.any(x < 0) or np.any(x > 1):
            raise InvalidInstance("weights x must lie in [0, 1]")
        if np.any(c < 0):
            raise InvalidInstance("costs c must be nonnegative")
        for name in ("packing", "covering"):
            rows = getattr(self, name)
            if rows is not None and rows.matrix.shape[1] != m:
                raise InvalidInstance(f"{name} rows must have {m} columns")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def c_inf(self) -> float:
        return float(self.c.max()) if self.m else 0.0

    def moment(self, weights=None) -> np.ndarray:
        """Weighted moment matrix ``sum_i w_i v_i v_i^T`` (default ``w = x``)."""
        w = self.x if weights is None else np.asarray(weights, dtype=float)
        return (self.vectors.T * w) @ self.vectors

    def cost(self, weights=None) -> float:
        w = self.x if weights is None else np.asarray(weights, dtype=float)
        return float(self.c @ w)

    def isotropy_error(self) -> float:
        """``||sum x v v^T - I||_op``, cached after the first call."""
        if not self._iso_error:
            dev = self.moment() - np.eye(self.n)
            dev = 0.5 * (dev + dev.T)
            err = float(np.max(np.abs(np.linalg.eigvalsh(dev)))) if self.n else 0.0
            self._iso_error.append(err)
        return self._iso_error[0]

    @property
    def is_isotropic(self) -> bool:
        return self.isotropy_error() <= ISOTROPY_TOL

    def with_fields(self, **changes) -> "VectorInstance":
        """Copy with some fields replaced (isotropy cache is dropped)."""
        data = {
            "vectors": self.vectors,
            "x": self.x,
            "c": self.c,
            "packing": self.packing,
            "covering": self.covering,
        }
        data.update(changes)
        return VectorInstance(**data)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "m": self.m,
            "vectors": self.vectors.tolist(),
            "x": self.x.tolist(),
            "c": self.c.tolist(),
        }
        if self.packing is not None:
            out["packing"] = {"A": self.packing.matrix.tolist(), "a": self.packing.rhs.tolist()}
        if self.covering is not None:
            out["covering"] = {"B": self.covering.matrix.tolist(), "b": self.covering.rhs.tolist()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "VectorInstance":
        try:
            m = int(data["m"])
            n = int(data["n"])
            vectors = np.asarray(data["vectors"], dtype=float)
            if m == 0:
                vectors = vectors.reshape(0, n)
            if vectors.shape != (m, n):
                raise InvalidInstance(f"vectors must be {m}x{n}, got {vectors.shape}")
            packing = covering = None
            if data.get("packing") is not None:
                p = data["packing"]
                packing = LinearRows(_as_rows(p["A"], "packing.A", m), p["a"])
            if data.get("covering") is not None:
                q = data["covering"]
                covering = LinearRows(_as_rows(q["B"], "covering.B", m), q["b"])
            return cls(vectors, data["x"], data["c"], packing, covering)
        except KeyError as exc:
            raise InvalidInstance(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInstance):
                raise
            raise InvalidInstance(str(exc)) from None

    @classmethod
    def load(cls, path) -> "VectorInstance":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInstance(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(data)
