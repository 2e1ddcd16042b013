"""White-noise thresholds for violating the GHZ inequality.

Substituting the noisy optimal-strategy values (``I_CHSH = 2 sqrt(2) v``,
``I_same = (n-1) v``, ``<A~> = 0``) into the GHZ inequality turns
``(LHS - RHS) / 4`` into the quadratic

    g(v) = v^2 + (a v - b)^2 / 2 - 1,

with ``(a, b) = ((n-1) cosec theta, (n-1) cot theta)`` for the Trig form and
``((n-1)^2, (n-1)^2 - 1)`` for the Alt form.  The inequality is only valid
where ``a v - b >= 0``, i.e. ``v >= b / a``, and the threshold is the root of
``g`` inside that region.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import optimize

from .errors import DomainError, OutOfRegionError
from .inequalities import ghz_slack
from .quantum import fidelity_from_visibility, optimal_strategy_stats
from .witness import Variant, theta

ROOT_TOL = 1e-12


def violation_polynomial(n: int, variant=Variant.TRIG) -> tuple[float, float]:
    """Coefficients ``(a, b)`` of ``g(v) = v^2 + (a v - b)^2 / 2 - 1``."""
    variant = Variant.parse(variant)
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    if variant is Variant.TRIG:
        t = theta(n)
        return (n - 1) / math.sin(t), (n - 1) / math.tan(t)
    m = (n - 1) ** 2
    return float(m), float(m - 1)


def region_bound(n: int, variant=Variant.TRIG) -> float:
    """Smallest visibility at which the squared bound is nonnegative."""
    a, b = violation_polynomial(n, variant)
    return b / a


def raw_violation(n: int, v: float, variant=Variant.TRIG) -> float:
    """``g(v)`` without the region check."""
    a, b = violation_polynomial(n, variant)
    return v * v + 0.5 * (a * v - b) ** 2 - 1


def violation_value(n: int, v: float, variant=Variant.TRIG) -> float:
    """``g(v)``; positive means the noisy GHZ statistics violate the inequality."""
    bound = region_bound(n, variant)
    if v < bound - 1e-15:
        raise OutOfRegionError(f"v={v} below the validity bound {bound:.12g} for n={n}")
    return raw_violation(n, v, variant)


@dataclass(frozen=True)
class ThresholdResult:
    n: int
    variant: Variant
    v_min: float
    f_min: float
    restriction_bound: float

    def as_dict(self, digits: int = 12) -> dict:
        r = lambda x: float(f"{x:.{digits}g}")
        return {
            "n": self.n,
            "variant": self.variant.value,
            "v_min": r(self.v_min),
            "f_min": r(self.f_min),
            "restriction_bound": r(self.restriction_bound),
        }


def solve_threshold(n: int, variant=Variant.TRIG) -> ThresholdResult:
    """Minimal visibility ``v_min`` (and GHZ fidelity ``f_min``) giving a violation.

    Closed-form quadratic roots filtered to ``[bound, 1]``; bisection on the
    same interval if that yields nothing usable.
    """
    variant = Variant.parse(variant)
    a, b = violation_polynomial(n, variant)
    lo = b / a
    qa, qb, qc = 1 + a * a / 2, -a * b, b * b / 2 - 1
    disc = qb * qb - 4 * qa * qc
    roots = []
    if disc >= 0:
        sq = math.sqrt(disc)
        roots = [(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)]
    inside = [r for r in roots if lo - 1e-12 <= r <= 1 + 1e-12]
    if len(inside) == 1:
        v = min(max(inside[0], lo), 1.0)
    else:
        glo, ghi = raw_violation(n, lo, variant), raw_violation(n, 1.0, variant)
        if glo * ghi > 0:
            raise DomainError(f"no violation threshold in [{lo:.6g}, 1] for n={n} ({variant.value})")
        v = optimize.bisect(lambda x: raw_violation(n, x, variant), lo, 1.0, xtol=ROOT_TOL)
    return ThresholdResult(n, variant, v, fidelity_from_visibility(n, v), lo)


def threshold_table(ns: Iterable[int], variant=Variant.TRIG) -> list[ThresholdResult]:
    return [solve_threshold(n, variant) for n in ns]


def threshold_table_json(results: list[ThresholdResult], digits: int = 12) -> str:
    return json.dumps([r.as_dict(digits) for r in results], indent=2) + "\n"


def violation_curve(n_list: Iterable[int], v_grid: Iterable[float], variant=Variant.TRIG) -> list[tuple]:
    """Rows ``(n, v, g(v), in_region)``.

    Points below the validity bound are kept but flagged, since ``g`` there
    is not the value of any valid inequality.
    """
    variant = Variant.parse(variant)
    v_grid = list(v_grid)
    rows = []
    for n in n_list:
        bound = region_bound(n, variant)
        for v in v_grid:
            rows.append((n, v, raw_violation(n, v, variant), v >= bound))
    return rows


def curve_intercept(rows: list[tuple], n: int) -> float:
    """Linearly interpolated zero crossing of the in-region part of a curve."""
    pts = [(v, g) for m, v, g, ok in rows if m == n and ok]
    pts.sort()
    for (v0, g0), (v1, g1) in zip(pts, pts[1:]):
        if g0 == 0:
            return v0
        if g0 < 0 < g1 or g1 < 0 < g0:
            return v0 + (v1 - v0) * (-g0) / (g1 - g0)
    raise DomainError(f"curve for n={n} has no sign change in region")


def simulated_slack(n: int, v: float, variant=Variant.TRIG) -> float:
    """GHZ-inequality slack evaluated on simulated noisy-GHZ statistics."""
    return ghz_slack(optimal_strategy_stats(n, v), n, variant)


def simulated_threshold(n: int, variant=Variant.TRIG, tol: float = ROOT_TOL) -> float:
    """Sign change of :func:`simulated_slack` located by Brent's method."""
    lo = region_bound(n, variant)
    lo = min(1.0, lo + 1e-13)
    return optimize.brentq(lambda v: simulated_slack(n, v, variant), lo, 1.0, xtol=tol)


def is_monotone(values) -> bool:
    return bool(np.all(np.diff(np.asarray(values)) > 0))
