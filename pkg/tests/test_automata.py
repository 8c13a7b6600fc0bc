import random

import pytest
from hypothesis import given, settings, strategies as st

from hypersl.automata import (APA, EVEN, ODD, Alphabet, Limits, ParityGame, ResourceLimitError, Store,
                              accepts_lasso, apa_to_dpa, complement_apa, dump_apa, dump_dpa, empty_apa,
                              intersect, intersect_dpa_nonempty, is_empty, minimize_dpa, singleton_nonempty,
                              solve_parity_game, universal_apa)
from hypersl.cgs import CGS
from hypersl.formula import parse_path_formula
from hypersl.ltl2apa import ltl_to_apa
from hypersl.randgen import random_apa, random_lasso

from oracles import brute_force_regions, lasso_enumeration_nonempty, random_game

AB = Alphabet(("v",), 2)


def self_loop(color: int) -> APA:
    st = Store()
    return APA.from_table(AB, 0, [color], st, [[st.leaf(0), st.leaf(0)]])


def lassos(seed, k=30, n=2):
    rng = random.Random(seed)
    return [random_lasso(rng, n) for _ in range(k)]


def test_universal_and_empty():
    for s, c in lassos(0):
        assert accepts_lasso(self_loop(0), s, c)
        assert not accepts_lasso(self_loop(1), s, c)
        assert not accepts_lasso(complement_apa(self_loop(0)), s, c)
        assert accepts_lasso(complement_apa(self_loop(1)), s, c)
        assert accepts_lasso(universal_apa(AB), s, c)
        assert not accepts_lasso(empty_apa(AB), s, c)


def test_complement_involution():
    rng = random.Random(1)
    for _ in range(30):
        a = random_apa(rng, 4, 3, 2)
        cc = complement_apa(complement_apa(a))
        for s, c in lassos(rng.random(), 20):
            assert accepts_lasso(a, s, c) == accepts_lasso(cc, s, c)
            assert accepts_lasso(a, s, c) != accepts_lasso(complement_apa(a), s, c)


def test_intersection():
    rng = random.Random(2)
    for _ in range(20):
        a, b = random_apa(rng, 3, 3, 2), random_apa(rng, 3, 3, 2)
        ab = intersect(a, b)
        au = intersect(a, universal_apa(AB))
        for s, c in lassos(rng.random(), 20):
            assert accepts_lasso(ab, s, c) == (accepts_lasso(a, s, c) and accepts_lasso(b, s, c))
            assert accepts_lasso(au, s, c) == accepts_lasso(a, s, c)
        assert is_empty(intersect(a, complement_apa(a)))[0]


def test_intersect_alphabet_mismatch():
    with pytest.raises(ValueError):
        intersect(self_loop(0), universal_apa(Alphabet(("v",), 3)))


def test_is_empty_simple():
    empty, w = is_empty(universal_apa(AB))
    assert not empty and accepts_lasso(universal_apa(AB), *w)
    assert is_empty(self_loop(1))[0]


def test_is_empty_matches_lasso_enumeration():
    rng = random.Random(3)
    for _ in range(40):
        a = random_apa(rng, 4, 3, 2)
        empty, w = is_empty(a)
        assert empty == (not lasso_enumeration_nonempty(a, 4))
        if not empty:
            assert accepts_lasso(a, *w)


def test_singleton_alphabet_emptiness():
    one = Alphabet((), 1)
    st = Store()
    a = APA.from_table(one, 0, [1, 0], st, [[st.disj([st.leaf(0), st.leaf(1)])], [st.leaf(1)]])
    assert singleton_nonempty(a)[0]
    b = APA.from_table(one, 0, [1, 0], st, [[st.conj([st.leaf(0), st.leaf(1)])], [st.leaf(1)]])
    assert not singleton_nonempty(b)[0]
    assert is_empty(b) == (True, None)


def test_accepts_lasso_f_a():
    g = CGS(2, 0, ["p"], ["u"], [set(), {"a"}], [[1], [1]], aps=["a"])
    a = ltl_to_apa(g, parse_path_formula('F "a"_p'), ["p"])
    assert accepts_lasso(a, [0, 0, 1], [1])
    assert not accepts_lasso(a, [], [0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 3))
def test_lasso_rotation_and_duplication(seed, extra):
    rng = random.Random(seed)
    a = random_apa(rng, 4, 3, 2)
    s, c = random_lasso(rng, 2)
    base = accepts_lasso(a, s, c)
    assert accepts_lasso(a, s, c * 2) == base
    k = extra % len(c)
    assert accepts_lasso(a, s + c[:k], c[k:] + c[:k]) == base


def test_apa_to_dpa_deterministic_input():
    st = Store()
    # accepts words with infinitely many 1s
    a = APA.from_table(AB, 0, [1, 0], st, [[st.leaf(0), st.leaf(1)], [st.leaf(0), st.leaf(1)]])
    stats = {}
    d = apa_to_dpa(a, stats=stats)
    assert stats["route"] == "deterministic"
    assert intersect_dpa_nonempty(a, d.complement()) is None
    assert intersect_dpa_nonempty(complement_apa(a), d) is None


def test_apa_to_dpa_empty_language():
    d = apa_to_dpa(self_loop(1))
    d.explore()
    assert all(not d.accepts_lasso(s, c) for s, c in lassos(4))


@pytest.mark.parametrize("seed", range(12))
def test_apa_to_dpa_equivalence(seed):
    rng = random.Random(100 + seed)
    a = random_apa(rng, 3, 3, rng.choice([2, 3]))
    d = apa_to_dpa(a, Limits.with_timeout(60, 200_000))
    assert intersect_dpa_nonempty(a, d.complement()) is None
    assert intersect_dpa_nonempty(complement_apa(a), d) is None
    for s, c in lassos(seed, 30, a.alphabet.size):
        assert d.accepts_lasso(s, c) == accepts_lasso(a, s, c)


def test_minimize_preserves_language():
    rng = random.Random(9)
    for _ in range(10):
        a = random_apa(rng, 4, 3, 2)
        d = apa_to_dpa(a)
        m = minimize_dpa(d)
        assert m.n <= d.n
        for s, c in lassos(rng.random(), 20):
            assert m.accepts_lasso(s, c) == d.accepts_lasso(s, c)


def test_resource_limit():
    rng = random.Random(5)
    with pytest.raises(ResourceLimitError):
        for _ in range(50):
            a = random_apa(rng, 5, 3, 4)
            d = apa_to_dpa(a, Limits(max_states=2))
            d.explore(Limits(max_states=2))


def test_parity_trivial_games():
    gm = ParityGame()
    v = gm.add(EVEN, 0)
    gm.succ[v] = [v]
    w = gm.add(ODD, 1)
    gm.succ[w] = [w]
    sol = solve_parity_game(gm)
    assert sol.winner(v) == EVEN and sol.winner(w) == ODD


def test_parity_strategy_stays_winning():
    rng = random.Random(6)
    for _ in range(30):
        gm = random_game(rng)
        sol = solve_parity_game(gm)
        for v, w in sol.strategy.items():
            assert w in gm.succ[v] and w in sol.win[EVEN]


@pytest.mark.parametrize("seed", range(20))
def test_parity_matches_brute_force(seed):
    gm = random_game(random.Random(seed))
    assert solve_parity_game(gm).win[EVEN] == brute_force_regions(gm)


def test_dump_formats():
    a = self_loop(0)
    text = dump_apa(a, "loop")
    assert "States: 1" in text and "parity min even" in text
    assert "States:" in dump_dpa(apa_to_dpa(a))


def test_minimize_with_unreachable_state():
    # state 1 is unreachable and its only transition goes to the rejecting sink
    st = Store()
    a = APA.from_table(AB, 0, [0, 0], st, [[st.leaf(0), st.leaf(0)], [Store.FALSE, st.leaf(1)]])
    d = minimize_dpa(apa_to_dpa(a))
    assert d.n == 1 and d.accepts_lasso([], [0, 1])
