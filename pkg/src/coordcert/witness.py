"""Closed-form witness matrices for the cut-inflation moment matrix.

Both families live on the cyclic band pattern: the diagonal, the first
super/sub-diagonal and the two corners ``(0, n-1)``, ``(n-1, 0)``.  These
are exactly the entries of the level-one moment matrix that the inflation
pins down (adjacent injectable pairs and the independent end pair), so
``Tr(Gamma W) >= 0`` becomes an inequality on observable correlators.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArityError, SupportViolationError, UnsupportedVariantError, ValidationError


class Variant(enum.Enum):
    TRIG = "trig"
    ALT = "alt"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown variant {value!r}; expected 'trig' or 'alt'") from None


def theta(n: int) -> float:
    return math.pi / (2 * (n - 1))


def band_support(n: int) -> frozenset:
    """Upper-triangle off-diagonal positions allowed in a witness (0-based)."""
    pos = {(i, i + 1) for i in range(n - 1)}
    pos.add((0, n - 1))
    return frozenset(pos)


@dataclass(frozen=True)
class WitnessMatrix:
    n: int
    variant: Variant
    entries: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        w = self.entries
        if w.shape != (self.n, self.n):
            raise ValidationError(f"witness shape {w.shape} does not match n={self.n}")
        if not np.allclose(w, w.T, atol=0, rtol=0):
            raise ValidationError("witness is not symmetric")
        allowed = band_support(self.n)
        for i, j in zip(*np.nonzero(np.triu(w, 1))):
            if (int(i), int(j)) not in allowed:
                raise ValidationError(f"witness entry ({i}, {j}) outside the band pattern")
        w.setflags(write=False)

    @property
    def support(self) -> frozenset:
        """Nonzero upper off-diagonal positions."""
        return frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(self.entries, 1))))

    def null_vector(self) -> np.ndarray:
        """Analytic kernel vector: ``cos((j-1) theta)`` for Trig, all ones for Alt."""
        if self.variant is Variant.TRIG:
            return np.cos(np.arange(self.n) * theta(self.n))
        return np.ones(self.n)

    def to_csv(self, digits: int = 12) -> str:
        return "".join(",".join(f"{x:.{digits}g}" for x in row) + "\n" for row in self.entries)


def build_witness(n: int, variant=Variant.TRIG) -> WitnessMatrix:
    """Construct ``W_n`` (Trig) or ``W'_n`` (Alt).

    Trig has diagonal ``(c/2, c, ..., c, c/2)`` with ``c = cos(theta)``,
    off-diagonal ``-1/2`` and corners ``sin(theta)/2``.  Alt has diagonal
    ``(n-2, 2(n-1), ..., 2(n-1), n-2)``, off-diagonal ``1-n`` and corners 1.
    """
    variant = Variant.parse(variant)
    if n < 3:
        raise InvalidArityError(f"need n >= 3, got {n}")
    w = np.zeros((n, n))
    if variant is Variant.TRIG:
        t = theta(n)
        diag, off, corner = math.cos(t), -0.5, 0.5 * math.sin(t)
        ends = 0.5 * math.cos(t)
    else:
        diag, off, corner = 2.0 * (n - 1), 1.0 - n, 1.0
        ends = n - 2.0
    np.fill_diagonal(w, diag)
    w[0, 0] = w[-1, -1] = ends
    idx = np.arange(n - 1)
    w[idx, idx + 1] = w[idx + 1, idx] = off
    w[0, -1] = w[-1, 0] = corner
    return WitnessMatrix(n, variant, w)


def psd_check(w: WitnessMatrix) -> tuple[float, float]:
    """Minimum eigenvalue and ``max |W v|`` for the analytic null vector."""
    min_eig = float(np.linalg.eigvalsh(w.entries)[0])
    residual = float(np.max(np.abs(w.entries @ w.null_vector())))
    return min_eig, residual


def chebyshev_minors(n: int) -> np.ndarray:
    """Closed form ``2^{-m} cos(m theta)`` for ``m = 1..n-1``."""
    m = np.arange(1, n)
    return np.cos(m * theta(n)) / 2.0 ** m


def minor_determinants(w: WitnessMatrix) -> np.ndarray:
    """Leading principal minors of size ``1..n-1`` via the three-term recurrence.

    Below full size the corners are outside the block, so each minor is the
    determinant of a tridiagonal matrix:
    ``f_m = cos(theta) f_{m-1} - f_{m-2} / 4`` with ``f_1 = cos(theta) / 2``.
    """
    if w.variant is not Variant.TRIG:
        raise UnsupportedVariantError("recurrence only applies to the Trig witness; use direct_minors")
    c = math.cos(theta(w.n))
    f = np.empty(w.n - 1)
    prev, cur = 1.0, 0.5 * c
    f[0] = cur
    for m in range(1, w.n - 1):
        prev, cur = cur, c * cur - 0.25 * prev
        f[m] = cur
    return f


def direct_minors(w: WitnessMatrix) -> np.ndarray:
    """Leading principal minors of size ``1..n`` by LU determinants."""
    return np.array([np.linalg.det(w.entries[:m, :m]) for m in range(1, w.n + 1)])


@dataclass(frozen=True)
class MomentMatrix:
    """Level-one moment matrix with partially known entries.

    ``known`` maps 0-based ``(i, j)`` with ``i < j`` to a correlator value;
    the diagonal is fixed to 1 and every other entry is a free variable.
    """

    n: int
    known: dict

    def __post_init__(self):
        norm = {}
        for (i, j), val in self.known.items():
            i, j = int(i), int(j)
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise ValidationError(f"bad moment-matrix key ({i}, {j})")
            if not -1 - 1e-12 <= val <= 1 + 1e-12:
                raise ValidationError(f"entry ({i}, {j}) = {val} outside [-1, 1]")
            norm[(min(i, j), max(i, j))] = float(val)
        object.__setattr__(self, "known", norm)

    def value(self, i: int, j: int) -> float:
        if i == j:
            return 1.0
        return self.known[(min(i, j), max(i, j))]

    def dense(self, fill: float = np.nan) -> np.ndarray:
        g = np.full((self.n, self.n), fill)
        np.fill_diagonal(g, 1.0)
        for (i, j), v in self.known.items():
            g[i, j] = g[j, i] = v
        return g

    @classmethod
    def from_correlators(cls, n: int, adjacent, end_product: float) -> "MomentMatrix":
        """Band-pattern matrix from ``<A_i A_{i+1}>`` values and ``<A_1><A_n>``."""
        adjacent = list(adjacent)
        if len(adjacent) != n - 1:
            raise ValidationError(f"need {n - 1} adjacent correlators, got {len(adjacent)}")
        known = {(i, i + 1): c for i, c in enumerate(adjacent)}
        known[(0, n - 1)] = end_product
        return cls(n, known)


def certificate(gamma: MomentMatrix, w: WitnessMatrix) -> float:
    """``Tr(Gamma W)``; nonnegative for every Gamma admitting a PSD completion."""
    if gamma.n != w.n:
        raise ValidationError(f"size mismatch: moment matrix {gamma.n}, witness {w.n}")
    missing = sorted(w.support - set(gamma.known))
    if missing:
        raise SupportViolationError(f"witness touches unknown entries {missing}")
    total = float(np.trace(w.entries))
    for i, j in w.support:
        total += 2.0 * w.entries[i, j] * gamma.value(i, j)
    return total


def certificate_report(gamma: MomentMatrix, w: WitnessMatrix, digits: int = 12) -> str:
    tr = certificate(gamma, w)
    min_eig, _ = psd_check(w)
    payload = {
        "n": w.n,
        "variant": w.variant.value,
        "trace": float(f"{tr:.{digits}g}"),
        "min_eig": float(f"{min_eig:.{digits}g}"),
    }
    return json.dumps(payload, indent=2) + "\n"
