import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_fitness, neighbours, random_general_instance, star_reference
from ascentlab.generators import gen_star
from ascentlab.vcsp import (
    Constraint,
    FitnessOverflowError,
    Instance,
    InstanceError,
    Move,
    VcspParseError,
    delta_fitness,
    fitness,
    improving_moves,
    parse_instance,
    write_instance,
)


@pytest.fixture
def star2():
    return gen_star(2)


def test_star_fitness_examples(star2):
    assert fitness(star2, star2.zeros()) == 0
    x = star2.zeros()
    x[3] = 1
    assert fitness(star2, x) == 5


def test_star_fitness_matches_matrices_everywhere(star2):
    for x in star2.assignments():
        assert fitness(star2, x) == star_reference(2, x) == brute_fitness(star2, x)


def test_constant_constraint():
    inst = Instance({}, (Constraint((), (), (7,)),))
    assert fitness(inst, {}) == 7


def test_delta_examples(star2):
    x = star2.zeros()
    assert delta_fitness(star2, x, 1, 0) == 0
    assert delta_fitness(star2, x, 5, 1) == 1
    # u = 2 has n - u = 0 even: unary 1 plus the 2n+2 = 6 entry at (1, 0)
    assert delta_fitness(star2, x, 2, 1) == 7
    for var, val in [(5, 1), (2, 1)]:
        y = dict(x)
        y[var] = val
        assert delta_fitness(star2, x, var, val) == fitness(star2, y) - fitness(star2, x)


def test_improving_moves_star(star2):
    moves = improving_moves(star2, star2.zeros())
    assert moves == [Move(1, 1, 1), Move(2, 1, 7), Move(3, 1, 5), Move(4, 1, 1), Move(5, 1, 1)]


@pytest.mark.parametrize("seed", range(30))
def test_delta_matches_full_difference_exhaustively(seed):
    rng = random.Random(seed)
    inst = random_general_instance(rng, rng.randint(1, 5))
    for x in inst.assignments():
        fx = brute_fitness(inst, x)
        assert fitness(inst, x) == fx
        for var, a, y in neighbours(inst, x):
            assert delta_fitness(inst, x, var, a) == brute_fitness(inst, y) - fx


@pytest.mark.parametrize("seed", range(20))
def test_improving_moves_agree_with_neighbour_scan(seed):
    rng = random.Random(seed)
    inst = random_general_instance(rng, rng.randint(1, 5))
    for x in inst.assignments():
        fx = fitness(inst, x)
        expected = [(v, a, fitness(inst, y) - fx) for v, a, y in neighbours(inst, x) if fitness(inst, y) > fx]
        assert [tuple(m) for m in improving_moves(inst, x)] == expected


def test_zero_constraint_changes_nothing():
    rng = random.Random(3)
    inst = random_general_instance(rng, 4, max_dom=2)
    zero = Constraint((1, 3), (inst.domains[1], inst.domains[3]),
                      (0,) * (inst.domains[1] * inst.domains[3]))
    padded = inst.with_constraints([zero])
    for x in inst.assignments():
        assert fitness(padded, x) == fitness(inst, x)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 6))
def test_round_trip_preserves_fitness(seed, n):
    inst = random_general_instance(random.Random(seed), n)
    back = parse_instance(write_instance(inst))
    assert back == inst
    for x in inst.assignments():
        assert fitness(back, x) == fitness(inst, x)


def test_round_trip_star_file(star2):
    back = parse_instance(write_instance(star2))
    for x in star2.assignments():
        assert fitness(back, x) == fitness(star2, x)


def test_parse_empty():
    inst = parse_instance("VCSP 0\n")
    assert inst.n == 0 and inst.constraints == ()


def test_parse_unsorted_scope_reorders_table():
    text = "VCSP 2\nVAR 1 2\nVAR 2 3\nCON 2 2 1\nVAL 2 1 9\n"
    inst = parse_instance(text)
    assert inst.constraints[0].scope == (1, 2)
    assert fitness(inst, {1: 1, 2: 2}) == 9
    assert fitness(inst, {1: 0, 2: 2}) == 0


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("VCSP 2\nVAR 1 2\nVAR 2 2\nCON 2 1 2\nVAL 1 5\n", "arity"),
        ("VCSP 1\nVAR 1 2\nCON 1 3\n", "unknown variable"),
        ("VCSP 1\nVAR 1 2\nCON 1 1\nVAL 1 4\nVAL 1 5\n", "duplicate VAL"),
        ("VCSP 1\nVAR 1 2\nCON 1 1\nVAL 2 4\n", "out of range"),
        ("VAR 1 2\n", "missing VCSP header"),
        ("VCSP 2\nVAR 1 2\n", "declares 2"),
        ("VCSP 1\nVAR 1 2\nFOO 1\n", "unknown record"),
        ("VCSP 1\nVAR 1 x\n", "non-integer"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(VcspParseError, match=fragment):
        parse_instance(text)


def test_parse_error_reports_line_number():
    with pytest.raises(VcspParseError) as info:
        parse_instance("# c\nVCSP 2\nVAR 1 2\nVAR 2 2\nCON 2 1 2\nVAL 1 5\n")
    assert info.value.lineno == 6


def test_overflow_is_an_error():
    big = 2**62
    inst = Instance({1: 2}, (Constraint((1,), (2,), (big, big)), Constraint((1,), (2,), (big, big))))
    with pytest.raises(FitnessOverflowError):
        fitness(inst, {1: 0})
    with pytest.raises(FitnessOverflowError):
        Constraint((1,), (2,), (2**63, 0))


def test_bad_assignments():
    inst = gen_star(1)
    with pytest.raises(InstanceError):
        fitness(inst, {1: 0})
    with pytest.raises(InstanceError):
        inst.check_assignment({1: 0, 2: 2, 3: 0})
    with pytest.raises(InstanceError):
        delta_fitness(inst, inst.zeros(), 9, 1)


def test_scope_must_reference_active_variables():
    with pytest.raises(InstanceError):
        Instance({1: 2}, (Constraint((1, 2), (2, 2), (0, 0, 0, 0)),))
