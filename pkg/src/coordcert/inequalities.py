"""Scenario-level inequalities: the coordination inequality for classical
outcomes on the no-common-cause DAG and the GHZ inequality for quantum
parties sharing classical randomness.

All slacks are reported as ``RHS - LHS`` so that a negative value certifies
a (quantum) common cause.  Outcomes are bits encoded as ``0 -> +1`` and
``1 -> -1``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError, IncompleteBundleError, OutOfRegionError, ValidationError
from .quantum import GhzStats
from .witness import MomentMatrix, Variant, theta

PROB_TOL = 1e-12


class Distribution:
    """Joint distribution of ``n`` binary outcomes stored as a ``(2,)*n`` array."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.ndim < 1 or p.shape != (2,) * p.ndim:
            raise ValidationError(f"probability array must have shape (2,)*n, got {p.shape}")
        if np.any(p < -PROB_TOL):
            raise ValidationError("negative probability")
        if abs(p.sum() - 1) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {p.sum():.15g}, not 1")
        self.probs = np.clip(p, 0, None)
        self.probs.setflags(write=False)

    @property
    def n(self) -> int:
        return self.probs.ndim

    def __repr__(self):
        return f"Distribution(n={self.n})"

    def items(self):
        for idx in itertools.product((0, 1), repeat=self.n):
            yield idx, float(self.probs[idx])

    @classmethod
    def from_dict(cls, n: int, probs: dict) -> "Distribution":
        arr = np.zeros((2,) * n)
        for key, val in probs.items():
            bits = _parse_bits(key, n)
            arr[bits] += val
        return cls(arr)

    @classmethod
    def from_csv(cls, text: str) -> "Distribution":
        """Rows ``outcome_bits, probability``; a header row is optional."""
        entries = {}
        n = None
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ValidationError(f"row {lineno}: expected 2 fields, got {len(row)}: {row!r}")
            bits, prob = row[0].strip(), row[1].strip()
            if n is None and not entries and bits == "outcome_bits":
                continue
            if not bits or not set(bits) <= {"0", "1"}:
                raise ValidationError(f"row {lineno}: bad outcome string {bits!r}")
            if n is None:
                n = len(bits)
            elif len(bits) != n:
                raise ValidationError(f"row {lineno}: outcome {bits!r} has length {len(bits)}, expected {n}")
            try:
                val = float(prob)
            except ValueError:
                raise ValidationError(f"row {lineno}: bad probability {prob!r}") from None
            entries[bits] = entries.get(bits, 0.0) + val
        if n is None:
            raise ValidationError("no distribution rows found")
        try:
            return cls.from_dict(n, entries)
        except ValidationError as exc:
            raise ValidationError(f"distribution invalid: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        """``{"n": 4, "probs": {"0000": 0.5, ...}}`` or a bare outcome map."""
        data = json.loads(text)
        probs = data.get("probs", data) if isinstance(data, dict) else None
        if not isinstance(probs, dict) or not probs:
            raise ValidationError("JSON distribution must map outcome strings to probabilities")
        n = data.get("n") or len(next(iter(probs)))
        return cls.from_dict(int(n), probs)

    def to_csv(self, digits: int = 12) -> str:
        lines = ["outcome_bits,probability"]
        lines += ["".join(map(str, k)) + f",{p:.{digits}g}" for k, p in self.items()]
        return "\n".join(lines) + "\n"

    def marginal(self, parties: Iterable[int]) -> np.ndarray:
        """Marginal over 1-based ``parties`` (in the given order)."""
        parties = list(parties)
        drop = tuple(i for i in range(self.n) if i + 1 not in parties)
        m = self.probs.sum(axis=drop)
        kept = sorted(parties)
        return np.transpose(m, [kept.index(p) for p in parties])


def _parse_bits(key, n: int) -> tuple:
    if isinstance(key, str):
        bits = tuple(int(c) for c in key.strip())
    else:
        bits = tuple(int(b) for b in key)
    if len(bits) != n or not set(bits) <= {0, 1}:
        raise ValidationError(f"bad outcome {key!r} for n={n}")
    return bits


def perfect_coordination(n: int) -> Distribution:
    """Shared uniformly random bit: ``[0...0]/2 + [1...1]/2``."""
    p = np.zeros((2,) * n)
    p[(0,) * n] = p[(1,) * n] = 0.5
    return Distribution(p)


def white_noise(n: int) -> Distribution:
    return Distribution(np.full((2,) * n, 2.0 ** -n))


def mixture(a: Distribution, b: Distribution, v: float) -> Distribution:
    """``v a + (1 - v) b``."""
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"mixing weight {v} outside [0, 1]")
    return Distribution(v * a.probs + (1 - v) * b.probs)


def noisy_coordination(n: int, v: float) -> Distribution:
    return mixture(perfect_coordination(n), white_noise(n), v)


@dataclass(frozen=True)
class CorrelatorBundle:
    """``<A_i>`` and ``<A_i A_j>`` keyed by 1-based party index (``i < j`` for pairs)."""

    n: int
    singles: dict = field(default_factory=dict)
    pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        for val in list(self.singles.values()) + list(self.pairs.values()):
            if not -1 - 1e-12 <= val <= 1 + 1e-12:
                raise ValidationError(f"correlator {val} outside [-1, 1]")
        object.__setattr__(self, "pairs", {(min(i, j), max(i, j)): v for (i, j), v in self.pairs.items()})

    def single(self, i: int) -> float:
        try:
            return self.singles[i]
        except KeyError:
            raise IncompleteBundleError(f"bundle lacks <A{i}>") from None

    def pair(self, i: int, j: int) -> float:
        try:
            return self.pairs[(min(i, j), max(i, j))]
        except KeyError:
            raise IncompleteBundleError(f"bundle lacks <A{i}A{j}>") from None


def adjacent_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(1, n)]


def correlators(dist: Distribution, pairs: Optional[Iterable] = None) -> CorrelatorBundle:
    """Exact ``+-1`` correlators; all pairs when ``pairs`` is None."""
    n = dist.n
    pairs = list(itertools.combinations(range(1, n + 1), 2)) if pairs is None else list(pairs)
    sign = np.array([1.0, -1.0])
    singles = {i: float(sign @ dist.marginal([i])) for i in range(1, n + 1)}
    out = {}
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise ValidationError(f"pair ({i}, {j}) out of range for n={n}")
        out[(i, j)] = float(sign @ dist.marginal([i, j]) @ sign)
    return CorrelatorBundle(n, singles, out)


def coordination_slack(bundle: CorrelatorBundle, n: int, variant=Variant.TRIG) -> float:
    """Slack of the coordination inequality; negative means a common cause is needed.

    Trig: ``sin(theta) <A_1><A_n> + (n-1) cos(theta) - sum <A_i A_{i+1}>``.
    Alt: ``<A_1><A_n> - [1 - (n-1)^2 + (n-1) sum <A_i A_{i+1}>]``.
    """
    variant = Variant.parse(variant)
    if bundle.n != n:
        raise ValidationError(f"bundle has n={bundle.n}, expected {n}")
    chain = sum(bundle.pair(i, j) for i, j in adjacent_pairs(n))
    ends = bundle.single(1) * bundle.single(n)
    if variant is Variant.TRIG:
        t = theta(n)
        return math.sin(t) * ends + (n - 1) * math.cos(t) - chain
    return ends - (1 - (n - 1) ** 2 + (n - 1) * chain)


def moment_matrix(bundle: CorrelatorBundle, n: int) -> MomentMatrix:
    """Known part of the cut-inflation moment matrix.

    Adjacent inflated parties are injectable, so their correlators are the
    observed ones; the two end parties are independent, so theirs factorises.
    """
    adj = [bundle.pair(i, j) for i, j in adjacent_pairs(n)]
    return MomentMatrix.from_correlators(n, adj, bundle.single(1) * bundle.single(n))


def end_correlator_bound(i_same: float, n: int, variant=Variant.TRIG) -> float:
    """Lower bound on ``<A_1^0 A_N^0>`` implied by the ``same``-game value."""
    variant = Variant.parse(variant)
    if variant is Variant.TRIG:
        t = theta(n)
        return i_same / math.sin(t) - (n - 1) / math.tan(t)
    return 1 - (n - 1) ** 2 + (n - 1) * i_same


def ghz_slack(stats: GhzStats, n: int, variant=Variant.TRIG) -> float:
    """Slack of the GHZ inequality for quantum parties with shared randomness.

    ``8 (w-^2 + w+^2) - [w-^2 I-^2 + w+^2 I+^2 + 2 X^2]`` with
    ``w+- = (1 +- <A~>)/2`` and ``X`` the bound from
    :func:`end_correlator_bound`.  Squaring that bound is only valid while it
    is nonnegative, so a negative bound raises ``OutOfRegionError``.
    """
    variant = Variant.parse(variant)
    if stats.n != n:
        raise ValidationError(f"stats have n={stats.n}, expected {n}")
    x = end_correlator_bound(stats.i_same, n, variant)
    if x < 0:
        raise OutOfRegionError(
            f"same-game bound {x:.6g} is negative; the squared inequality does not apply"
        )
    wm, wp = stats.p_minus, stats.p_plus
    lhs = wm ** 2 * stats.i_chsh_minus ** 2 + wp ** 2 * stats.i_chsh_plus ** 2 + 2 * x ** 2
    rhs = 8 * (wm ** 2 + wp ** 2)
    return rhs - lhs


def ideal_ghz_lhs(n: int) -> float:
    """Left-hand side of the GHZ inequality on the noiseless optimal strategy."""
    t = theta(n)
    return 4 + 2 * (n - 1) ** 2 * (1 / math.sin(t) - 1 / math.tan(t)) ** 2
