"""Copy-index tables for quantum inflations and the pair structure they imply.

Sources are numbered by the party they skip: source ``j`` is the latent that
reaches every party except ``A_j``.  The classical broadcast source of the
quantum-party scenario is ``LAMBDA`` (0).  Every observed slot of an
inflation (a party, optionally at a fixed setting) lists the copy index of
each source in its causal past.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import InvalidArityError, ValidationError

LAMBDA = 0
MAX_COPIES = 2


@dataclass(frozen=True, order=True)
class Slot:
    """An inflated observed node: party ``A_party`` at an optional setting."""

    party: int
    setting: Optional[int] = None

    def __str__(self):
        return f"A{self.party}" if self.setting is None else f"A{self.party}^{self.setting}"


def source_name(source: int) -> str:
    return "lambda" if source == LAMBDA else f"not(A{source})"


@dataclass(frozen=True)
class InflationSpec:
    """Copy-index table.

    Parameters
    ----------
    n : int
        Number of parties in the original scenario.
    rows : tuple of (Slot, tuple of (source, copy))
        Sources absent from a row are not in that slot's causal past; in
        particular party ``i`` never lists source ``i``.
    """

    n: int
    rows: tuple

    def __post_init__(self):
        sources = set(self.sources)
        for slot, entries in self.rows:
            if not 1 <= slot.party <= self.n:
                raise ValidationError(f"slot {slot} outside 1..{self.n}")
            for src, copy in entries:
                if src == slot.party:
                    raise ValidationError(f"slot {slot} lists its own excluded source")
                if src not in sources:
                    raise ValidationError(f"unknown source {src}")
                if not 1 <= copy <= MAX_COPIES:
                    raise ValidationError(f"copy index {copy} outside 1..{MAX_COPIES}")

    @property
    def has_lambda(self) -> bool:
        return any(src == LAMBDA for _, entries in self.rows for src, _ in entries)

    @property
    def sources(self) -> tuple[int, ...]:
        quantum = tuple(range(1, self.n + 1))
        return quantum + ((LAMBDA,) if self.has_lambda else ())

    @property
    def slots(self) -> tuple[Slot, ...]:
        return tuple(slot for slot, _ in self.rows)

    def row(self, slot: Slot) -> dict[int, int]:
        for s, entries in self.rows:
            if s == slot:
                return dict(entries)
        raise KeyError(str(slot))

    def copy_index(self, slot: Slot, source: int) -> Optional[int]:
        return self.row(slot).get(source)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["slot"] + [source_name(s) for s in self.sources])
        for slot, entries in self.rows:
            d = dict(entries)
            writer.writerow([str(slot)] + [str(d[s]) if s in d else "-" for s in self.sources])
        return buf.getvalue()


def _row(n: int, party: int, twos: Iterable[int], with_lambda: bool = False):
    twos = set(twos)
    entries = [(j, 2 if j in twos else 1) for j in range(1, n + 1) if j != party]
    if with_lambda:
        entries.append((LAMBDA, 1))
    return tuple(entries)


def build_cut_inflation(n: int) -> InflationSpec:
    """Inflation used for the coordination inequality on the no-common-cause DAG.

    Party ``A_i`` takes copy 2 of source ``j`` for ``2 <= j < i`` and copy 1
    of every other source in its past.
    """
    if n < 3:
        raise InvalidArityError(f"need n >= 3, got {n}")
    rows = tuple((Slot(i), _row(n, i, range(2, i))) for i in range(1, n + 1))
    return InflationSpec(n, rows)


def build_ghz_inflation(n: int) -> InflationSpec:
    """Setting-resolved inflation used for the GHZ inequality.

    Settings 0 and 1 of the first two parties, and setting 1 of the rest,
    see copy 1 of everything.  ``A_2^2`` takes copy 2 of source 1, and
    ``A_j^0`` for ``j >= 3`` takes copy 2 of sources ``1..j-1``.  The
    classical source is shared by all slots at copy 1.
    """
    if n < 4:
        raise InvalidArityError(f"GHZ inflation needs n >= 4, got {n}")
    rows = []
    for party in (1, 2):
        for setting in (0, 1):
            rows.append((Slot(party, setting), _row(n, party, (), True)))
    rows.append((Slot(2, 2), _row(n, 2, (1,), True)))
    for j in range(3, n + 1):
        rows.append((Slot(j, 0), _row(n, j, range(1, j), True)))
        rows.append((Slot(j, 1), _row(n, j, (), True)))
    rows.sort(key=lambda r: r[0])
    return InflationSpec(n, tuple(rows))


@dataclass(frozen=True)
class DerivedStructure:
    injectable_pairs: frozenset
    commuting_pairs: frozenset
    independent_pairs: frozenset


def _shared(spec: InflationSpec, a: Slot, b: Slot):
    """Copy indices of the quantum sources common to both slots.

    The classical source never obstructs commutation or independence:
    copies of shared randomness can be conditioned on.
    """
    ra, rb = spec.row(a), spec.row(b)
    common = sorted((set(ra) & set(rb)) - {LAMBDA})
    return [(ra[s], rb[s]) for s in common]


def pair_relation(spec: InflationSpec, a: Slot, b: Slot) -> str:
    """One of ``"injectable"``, ``"independent"`` or ``"incompatible"``.

    Slots of the same party at different settings are always incompatible.
    """
    if a.party == b.party:
        return "incompatible"
    shared = _shared(spec, a, b)
    equal = [x == y for x, y in shared]
    if shared and all(equal):
        return "injectable"
    if not any(equal):
        return "independent"
    return "incompatible"


def derive_structure(spec: InflationSpec) -> DerivedStructure:
    """Classify every pair of slots.

    Two slots whose shared sources all carry the same copy replicate the
    original two-party marginal (injectable).  Two slots with no common
    source copy are causally independent.  Both kinds commute; pairs that
    match on some shared sources and differ on others do not.
    """
    inj, ind = set(), set()
    for a, b in itertools.combinations(spec.slots, 2):
        rel = pair_relation(spec, a, b)
        if rel == "injectable":
            inj.add((a, b))
        elif rel == "independent":
            ind.add((a, b))
    return DerivedStructure(frozenset(inj), frozenset(inj | ind), frozenset(ind))


def is_injectable_set(spec: InflationSpec, slots: Iterable[Slot]) -> bool:
    """Set-level check: distinct parties that are pairwise injectable."""
    slots = list(slots)
    if len({s.party for s in slots}) != len(slots):
        return False
    return all(pair_relation(spec, a, b) == "injectable" for a, b in itertools.combinations(slots, 2))


def copies_needed(spec: InflationSpec) -> dict[int, int]:
    """Largest copy index of each source across all slots."""
    need = {s: 0 for s in spec.sources}
    for _, entries in spec.rows:
        for src, copy in entries:
            need[src] = max(need[src], copy)
    return need
