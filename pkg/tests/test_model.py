import pytest
from hypothesis import given
from hypothesis import strategies as hs

from milpreorder.generators import gen_random_milp
from milpreorder.model import (
    Constraint,
    MilpInstance,
    Permutation,
    apply_constraint_permutation,
    instance_from_json,
    instance_to_json,
)


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))
    with pytest.raises(ValueError):
        Permutation((1, 2, 3))


def test_constraint_sorts_entries_and_rejects_duplicates():
    c = Constraint(entries=((2, 1.0), (0, -1.0)), sense="LE", rhs=0.0, original_index=0)
    assert c.entries == ((0, -1.0), (2, 1.0))
    with pytest.raises(ValueError):
        Constraint(entries=((0, 1.0), (0, 2.0)), sense="LE", rhs=0.0, original_index=0)
    with pytest.raises(ValueError):
        Constraint(entries=((0, 0.0),), sense="LE", rhs=0.0, original_index=0)


def test_instance_validates_columns_and_bounds():
    row = Constraint(entries=((3, 1.0),), sense="LE", rhs=1.0, original_index=0)
    with pytest.raises(ValueError):
        MilpInstance(name="bad", objective=(1.0,), rows=(row,), var_bounds=((0.0, 1.0),))
    with pytest.raises(ValueError):
        MilpInstance(name="bad", objective=(1.0,), rows=(), var_bounds=((2.0, 1.0),))


def test_apply_identity_is_noop(three_rows):
    out = apply_constraint_permutation(three_rows, Permutation.identity(3))
    assert out == three_rows


def test_apply_reverse_reverses_rows(three_rows):
    out = apply_constraint_permutation(three_rows, Permutation((2, 1, 0)))
    assert [r.rhs for r in out.rows] == [0.0, 5.0, 3.0]
    assert [r.original_index for r in out.rows] == [2, 1, 0]
    # contents untouched
    assert out.rows[2] == three_rows.rows[0]


def test_apply_length_mismatch(three_rows):
    with pytest.raises(ValueError):
        apply_constraint_permutation(three_rows, Permutation((0, 1)))


@given(hs.permutations(list(range(6))), hs.permutations(list(range(6))))
def test_composition_semantics(p_order, q_order):
    """apply(apply(inst,p),q) == apply(inst, p∘q)."""
    inst = gen_random_milp(4, 6, seed=3)
    p, q = Permutation(tuple(p_order)), Permutation(tuple(q_order))
    two_step = apply_constraint_permutation(apply_constraint_permutation(inst, p), q)
    one_step = apply_constraint_permutation(inst, p.compose(q))
    assert two_step == one_step


def test_compose_definition():
    p = Permutation((2, 0, 1))
    q = Permutation((1, 2, 0))
    assert p.compose(q).order == tuple(p.order[j] for j in q.order)
    assert p.compose(p.inverse()).is_identity()


@given(hs.permutations(list(range(8))))
def test_original_index_multiset_invariant(order):
    inst = gen_random_milp(5, 8, seed=11)
    out = apply_constraint_permutation(inst, Permutation(tuple(order)))
    assert sorted(r.original_index for r in out.rows) == sorted(
        r.original_index for r in inst.rows
    )


def test_json_roundtrip_exact(three_rows):
    assert instance_from_json(instance_to_json(three_rows)) == three_rows


def test_json_roundtrip_infinite_bounds():
    inst = MilpInstance(
        name="inf",
        objective=(1.0, 2.0),
        rows=(Constraint(entries=((0, 1.5),), sense="GE", rhs=-2.25, original_index=0),),
        var_bounds=((float("-inf"), 4.0), (0.0, float("inf"))),
        integrality=frozenset({1}),
    )
    data = instance_to_json(inst)
    assert data["bounds"] == [[None, 4.0], [0.0, None]]
    assert instance_from_json(data) == inst


def test_permutation_digest_is_stable():
    p = Permutation((1, 0, 2))
    assert p.digest() == Permutation((1, 0, 2)).digest()
    assert p.digest() != Permutation((0, 1, 2)).digest()
