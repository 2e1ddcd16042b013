import pytest

from coordcert.errors import InvalidArityError, ValidationError
from coordcert.inflation import (
    LAMBDA,
    InflationSpec,
    Slot,
    build_cut_inflation,
    build_ghz_inflation,
    copies_needed,
    derive_structure,
    is_injectable_set,
    pair_relation,
)


def row_tuple(spec, slot):
    r = spec.row(slot)
    return tuple(r.get(j, "-") for j in range(1, spec.n + 1))


def test_cut_table_n4():
    spec = build_cut_inflation(4)
    assert row_tuple(spec, Slot(1)) == ("-", 1, 1, 1)
    assert row_tuple(spec, Slot(2)) == (1, "-", 1, 1)
    assert row_tuple(spec, Slot(3)) == (1, 2, "-", 1)
    assert row_tuple(spec, Slot(4)) == (1, 2, 2, "-")


def test_cut_table_n3():
    spec = build_cut_inflation(3)
    assert [row_tuple(spec, Slot(i)) for i in (1, 2, 3)] == [("-", 1, 1), (1, "-", 1), (1, 2, "-")]


def test_cut_copies_needed():
    assert copies_needed(build_cut_inflation(4)) == {1: 1, 2: 2, 3: 2, 4: 1}


def test_cut_csv_layout():
    lines = build_cut_inflation(4).to_csv().splitlines()
    assert lines[0] == "slot,not(A1),not(A2),not(A3),not(A4)"
    assert lines[4] == "A4,1,2,2,-"


@pytest.mark.parametrize("n", range(3, 13))
def test_cut_structure(n):
    st = derive_structure(build_cut_inflation(n))
    assert {(a.party, b.party) for a, b in st.injectable_pairs} == {(i, i + 1) for i in range(1, n)}
    assert {(a.party, b.party) for a, b in st.independent_pairs} == {(1, n)}
    assert st.injectable_pairs <= st.commuting_pairs
    assert not st.injectable_pairs & st.independent_pairs


def test_cut_non_commuting_pair():
    spec = build_cut_inflation(4)
    assert pair_relation(spec, Slot(1), Slot(3)) == "incompatible"
    assert (Slot(1), Slot(3)) not in derive_structure(spec).commuting_pairs


def test_independent_pairs_share_no_copy():
    for spec in (build_cut_inflation(6), build_ghz_inflation(6)):
        for a, b in derive_structure(spec).independent_pairs:
            ra, rb = spec.row(a), spec.row(b)
            shared = (set(ra) & set(rb)) - {LAMBDA}
            assert all(ra[s] != rb[s] for s in shared)


def test_ghz_rows_n4():
    spec = build_ghz_inflation(4)
    assert row_tuple(spec, Slot(2, 2)) == (2, "-", 1, 1)
    assert row_tuple(spec, Slot(4, 0)) == (2, 2, 2, "-")
    assert row_tuple(spec, Slot(3, 0)) == (2, 2, "-", 1)
    for slot in (Slot(1, 0), Slot(1, 1), Slot(2, 0), Slot(2, 1), Slot(3, 1), Slot(4, 1)):
        assert set(spec.row(slot).values()) == {1}


@pytest.mark.parametrize("n", range(4, 11))
def test_ghz_lambda_column(n):
    spec = build_ghz_inflation(n)
    assert all(spec.copy_index(s, LAMBDA) == 1 for s in spec.slots)


@pytest.mark.parametrize("n", range(4, 11))
def test_ghz_same_game_pairs(n):
    spec = build_ghz_inflation(n)
    chain = [Slot(1, 0), Slot(2, 2)] + [Slot(j, 0) for j in range(3, n + 1)]
    for a, b in zip(chain, chain[1:]):
        assert pair_relation(spec, a, b) == "injectable"
    assert pair_relation(spec, Slot(1, 0), Slot(n, 0)) == "independent"


@pytest.mark.parametrize("n", range(4, 9))
def test_ghz_chsh_block_injectable(n):
    spec = build_ghz_inflation(n)
    for x in (0, 1):
        for y in (0, 1):
            block = [Slot(1, x), Slot(2, y)] + [Slot(j, 1) for j in range(3, n + 1)]
            assert is_injectable_set(spec, block)


def test_same_party_slots_never_injectable():
    spec = build_ghz_inflation(4)
    assert not is_injectable_set(spec, [Slot(1, 0), Slot(1, 1)])


def test_ghz_arity_guard():
    with pytest.raises(InvalidArityError):
        build_ghz_inflation(3)
    with pytest.raises(InvalidArityError):
        build_cut_inflation(2)


def test_spec_validation():
    with pytest.raises(ValidationError):
        InflationSpec(3, ((Slot(1), ((1, 1),)),))
    with pytest.raises(ValidationError):
        InflationSpec(3, ((Slot(1), ((2, 3),)),))
