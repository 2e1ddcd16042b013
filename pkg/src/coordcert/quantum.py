"""Dense simulation of GHZ states and the two-game strategy that violates the
quantum-common-cause inequality.

States are ``2^n x 2^n`` complex density matrices with qubit 1 as the most
significant tensor factor.  Expectations of product observables are taken by
contracting one qubit at a time, so no ``2^n x 2^n`` operator is ever built.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidArityError, InvariantError, ValidationError

MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SQ2 = math.sqrt(2.0)


def _check_qubits(n: int, low: int = 2, high: int = MAX_QUBITS) -> None:
    if not low <= n <= high:
        raise InvalidArityError(f"need {low} <= n <= {high} qubits, got {n}")


def _check_visibility(v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility {v} outside [0, 1]")


def ghz_vector(n: int) -> np.ndarray:
    _check_qubits(n)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = psi[-1] = 1 / SQ2
    return psi


def ghz_state(n: int) -> np.ndarray:
    """Projector onto ``(|0...0> + |1...1>) / sqrt(2)``."""
    psi = ghz_vector(n)
    return np.outer(psi, psi.conj())


def noisy_ghz(n: int, v: float) -> np.ndarray:
    """White-noise mixture ``v |GHZ><GHZ| + (1 - v) I / 2^n``."""
    _check_visibility(v)
    rho = v * ghz_state(n)
    rho[np.diag_indices(2 ** n)] += (1 - v) / 2 ** n
    return rho


def fidelity(rho: np.ndarray) -> float:
    """``<GHZ| rho |GHZ>``."""
    n = int(round(math.log2(rho.shape[0])))
    psi = ghz_vector(n)
    return float(np.real(psi.conj() @ rho @ psi))


def fidelity_from_visibility(n: int, v: float) -> float:
    return (1 + v * (2 ** n - 1)) / 2 ** n


def validate_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValidationError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValidationError("density matrix is not positive semidefinite")


def expectation(rho: np.ndarray, ops: Sequence[Optional[np.ndarray]]) -> float:
    """``Tr(rho O_1 x ... x O_n)``; ``None`` entries stand for the identity.

    Traces out the leading qubit at each step, contracting it against its
    operator, which keeps the cost at ``O(4^n)``.
    """
    n = len(ops)
    if rho.shape != (2 ** n, 2 ** n):
        raise ValidationError(f"state of shape {rho.shape} does not match {n} operators")
    t = rho
    for op in ops:
        d = t.shape[0] // 2
        t = t.reshape(2, d, 2, d)
        if op is None:
            t = t[0, :, 0, :] + t[1, :, 1, :]
        else:
            t = np.einsum("iajb,ji->ab", t, op)
    return float(np.real(t[0, 0]))


def product_expectation(rho: np.ndarray, n: int, ops: dict) -> float:
    """Expectation of a product of single-qubit operators keyed by 1-based qubit.

    Repeated keys are not possible in a dict; pass pre-multiplied operators.
    """
    return expectation(rho, [ops.get(k) for k in range(1, n + 1)])


def z_basis_distribution(rho: np.ndarray):
    """Outcome distribution of measuring every qubit in the Z basis."""
    from .inequalities import Distribution

    n = int(round(math.log2(rho.shape[0])))
    probs = np.clip(np.real(np.diag(rho)), 0, None)
    return Distribution(probs.reshape((2,) * n))


# ---------------------------------------------------------------------------
# optimal two-game strategy


def strategy_observables(n: int) -> dict:
    """Single-qubit observables ``{(party, setting): O}`` of the optimal strategy.

    ``A_1`` uses Z/X, ``A_2`` the CHSH-optimal ``(Z +- X)/sqrt 2`` at settings
    0 and 1 and Z at setting 2, every other party Z/X.
    """
    obs = {(1, 0): Z, (1, 1): X, (2, 0): (Z + X) / SQ2, (2, 1): (Z - X) / SQ2, (2, 2): Z}
    for j in range(3, n + 1):
        obs[(j, 0)] = Z
        obs[(j, 1)] = X
    return obs


@dataclass(frozen=True)
class GhzStats:
    """Correlators entering the GHZ inequality.

    ``i_chsh_plus`` and ``i_chsh_minus`` are the CHSH values of ``A_1 A_2``
    conditioned on the rest parity ``A~ = A_3^1 ... A_N^1`` being +1 and -1
    (with the sign pattern flipped on the ``A_1^1`` terms for -1).
    ``end_plus`` / ``end_minus`` are ``<A_1^0 A_N^0>`` in the same
    conditional states and ``triple = <A_1^0 A_N^0 A~>``.
    """

    n: int
    v: float
    i_chsh_plus: float
    i_chsh_minus: float
    i_same: float
    a_rest_mean: float
    triple: float
    end_plus: float = 0.0
    end_minus: float = 0.0
    end_mean: float = 0.0

    def __post_init__(self):
        tol = 1e-9
        if max(abs(self.i_chsh_plus), abs(self.i_chsh_minus)) > 2 * SQ2 + tol:
            raise InvariantError("conditional CHSH value exceeds the Tsirelson bound")
        if abs(self.i_same) > self.n - 1 + tol or abs(self.a_rest_mean) > 1 + tol:
            raise InvariantError("correlator bundle out of range")

    @property
    def p_plus(self) -> float:
        return (1 + self.a_rest_mean) / 2

    @property
    def p_minus(self) -> float:
        return (1 - self.a_rest_mean) / 2

    def monogamy_blocks(self) -> tuple[float, float]:
        """``I^2 + 4 <A_1^0 A_N^0>^2`` for the +1 and -1 conditional blocks."""
        return (
            self.i_chsh_plus ** 2 + 4 * self.end_plus ** 2,
            self.i_chsh_minus ** 2 + 4 * self.end_minus ** 2,
        )

    def to_json(self, digits: int = 12) -> str:
        keys = ("n", "v", "i_chsh_plus", "i_chsh_minus", "i_same", "a_rest_mean", "triple")
        d = asdict(self)
        payload = {k: d[k] if k == "n" else float(f"{d[k]:.{digits}g}") for k in keys}
        return json.dumps(payload, indent=2) + "\n"


CHSH_SIGNS = {
    +1: {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1},
    -1: {(0, 0): 1, (0, 1): 1, (1, 0): -1, (1, 1): 1},
}


def _rest_parity(n: int, obs: dict) -> dict:
    return {j: obs[(j, 1)] for j in range(3, n + 1)}


def conditional_correlator(rho: np.ndarray, n: int, ops: dict, parity: dict, s: int) -> tuple[float, float]:
    """Probability of ``parity = s`` and the correlator of ``ops`` after it.

    The parity is measured first; the state is updated by the projector
    ``(1 + s P) / 2`` and renormalised before ``ops`` is evaluated.
    Returns ``(p_s, <ops>_s)``.
    """
    e = lambda d: product_expectation(rho, n, d)
    p = 0.5 * (1 + s * e(parity))

    def merged(left: dict, right: dict) -> dict:
        out = dict(left)
        for k, op in right.items():
            out[k] = out[k] @ op if k in out else op
        return out

    # Tr(rho Pi O Pi) with Pi = (1 + sP)/2
    val = 0.25 * (
        e(ops)
        + s * e(merged(ops, parity))
        + s * e(merged(parity, ops))
        + e(merged(merged(parity, ops), parity))
    )
    if p < 1e-14:
        raise InvariantError(f"conditioning event has probability {p}")
    return p, val / p


def strategy_stats_from_state(rho: np.ndarray, n: int, v: float = float("nan")) -> GhzStats:
    """Evaluate the two-game strategy on an arbitrary ``n``-qubit state."""
    if n < 4:
        raise InvalidArityError(f"GHZ games need n >= 4, got {n}")
    obs = strategy_observables(n)
    parity = _rest_parity(n, obs)
    a_rest = product_expectation(rho, n, parity)

    chsh = {}
    ends = {}
    for s in (+1, -1):
        total = 0.0
        for (x, y), sign in CHSH_SIGNS[s].items():
            _, c = conditional_correlator(rho, n, {1: obs[(1, x)], 2: obs[(2, y)]}, parity, s)
            total += sign * c
        chsh[s] = total
        ends[s] = conditional_correlator(rho, n, {1: obs[(1, 0)], n: obs[(n, 0)]}, parity, s)

    chain = [{1: obs[(1, 0)], 2: obs[(2, 2)]}, {2: obs[(2, 2)], 3: obs[(3, 0)]}]
    chain += [{j: obs[(j, 0)], j + 1: obs[(j + 1, 0)]} for j in range(3, n)]
    i_same = sum(product_expectation(rho, n, d) for d in chain)

    (pp, cp), (pm, cm) = ends[+1], ends[-1]
    return GhzStats(
        n=n,
        v=v,
        i_chsh_plus=chsh[+1],
        i_chsh_minus=chsh[-1],
        i_same=i_same,
        a_rest_mean=a_rest,
        triple=pp * cp - pm * cm,
        end_plus=cp,
        end_minus=cm,
        end_mean=pp * cp + pm * cm,
    )


def optimal_strategy_stats(n: int, v: float) -> GhzStats:
    """Exact statistics of the optimal strategy on the white-noise GHZ state."""
    _check_qubits(n, 4, 10)
    _check_visibility(v)
    return strategy_stats_from_state(noisy_ghz(n, v), n, v)


# ---------------------------------------------------------------------------
# CHSH / coordination monogamy on three qubits


def chsh_monogamy_value(rho: np.ndarray, a: Sequence[np.ndarray], b: Sequence[np.ndarray], c: np.ndarray) -> float:
    """``CHSH(A, B)^2 + 4 <A_0 C>^2`` on a three-qubit state; at most 8 in quantum theory."""
    e = lambda ops: expectation(rho, ops)
    chsh = e([a[0], b[0], None]) + e([a[0], b[1], None]) + e([a[1], b[0], None]) - e([a[1], b[1], None])
    return chsh ** 2 + 4 * e([a[0], None, c]) ** 2


def bloch_observable(vec: Sequence[float]) -> np.ndarray:
    """``n . sigma`` for a unit vector ``n`` (normalised here)."""
    x, y, z = np.asarray(vec, dtype=float) / np.linalg.norm(vec)
    return x * X + y * Y + z * Z


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / SQ2
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------------------
# projector lemma probe


def projector_residual(p: np.ndarray, q: np.ndarray, psi: np.ndarray) -> float:
    """``|| (P - Q) psi ||``."""
    return float(np.linalg.norm((p - q) @ psi))


def projector_premise_gap(p: np.ndarray, q: np.ndarray, psi: np.ndarray) -> float:
    """Largest violation of the two premises: ``[P,Q] psi = 0`` and equal norms."""
    comm = np.linalg.norm((p @ q - q @ p) @ psi)
    n_pq = np.linalg.norm(p @ q @ psi) ** 2
    n_p = np.linalg.norm(p @ psi) ** 2
    n_q = np.linalg.norm(q @ psi) ** 2
    return float(max(comm, abs(n_pq - n_p), abs(n_pq - n_q)))


@dataclass(frozen=True)
class ProbeResult:
    max_residual: float
    max_premise_gap: float
    trials: int
    dim: int


def lemma2_probe(dim: int, trials: int, rng: Optional[np.random.Generator] = None, violation: float = 0.0) -> ProbeResult:
    """Sample projector pairs satisfying the premises and measure ``|| (P-Q) psi ||``.

    Each trial draws a random basis, random 0/1 spectra for ``P`` and ``Q``
    in that basis, and a state supported where the spectra agree.  With
    ``violation > 0`` a weight of that size is moved onto a direction where
    ``P`` is 1 and ``Q`` is 0, breaking the norm premise on purpose.
    """
    if not 1 <= dim <= 64:
        raise ValidationError(f"dim must lie in 1..64, got {dim}")
    if not 0.0 <= violation < 1.0 or (violation > 0 and dim < 2):
        raise ValidationError(f"violation must lie in [0, 1) and needs dim >= 2, got {violation}")
    rng = np.random.default_rng() if rng is None else rng
    worst, worst_gap = 0.0, 0.0
    for _ in range(trials):
        u = random_unitary(dim, rng)
        pd = rng.integers(0, 2, size=dim)
        qd = rng.integers(0, 2, size=dim)
        if violation > 0:
            pd[0], qd[0] = 1, 0
            qd[1] = pd[1]
        match = np.flatnonzero(pd == qd)
        if not match.size:
            qd = pd.copy()
            match = np.arange(dim)
        coeffs = np.zeros(dim, dtype=complex)
        coeffs[match] = random_pure_state(match.size, rng)
        if violation > 0:
            coeffs *= math.sqrt(1 - violation)
            coeffs[0] = math.sqrt(violation)
        psi = u @ coeffs
        p = (u * pd) @ u.conj().T
        q = (u * qd) @ u.conj().T
        worst = max(worst, projector_residual(p, q, psi))
        worst_gap = max(worst_gap, projector_premise_gap(p, q, psi))
    return ProbeResult(worst, worst_gap, trials, dim)
