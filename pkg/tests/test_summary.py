import itertools
import random

import pytest

from hypersl.automata import AND, LEAF, OR, Alphabet, singleton_nonempty, universal_apa
from hypersl.cgs import CGS
from hypersl.formula import parse_formula, parse_path_formula, spe_decompose
from hypersl.ltl2apa import ltl_to_apa
from hypersl.randgen import random_cgs, random_spe_formula
from hypersl.summary import StageStats, SummaryError, check_summary_invariant, simulate

from conftest import one_state


def golden_cgs():
    """State 0 moves to 1 + 4*a0 + 2*a1 + a2 when agents 2 and 3 agree, else stays."""
    def step(s, prof):
        if s != 0:
            return s
        a0, a1, a2, a3 = prof
        return 1 + 4 * a0 + 2 * a1 + a2 if a2 == a3 else 0
    return CGS(9, 0, ["i0", "i1", "i2", "i3"], ["m0", "m1"], [set()] * 9, step, aps=["a"])


def shape(store, node, pairs):
    k = store.kind[node]
    if k == LEAF:
        return ("leaf", pairs[store.args[node]][1])
    tag = "or" if k == OR else "and" if k == AND else k
    return (tag, frozenset(shape(store, c, pairs) for c in store.args[node]))


def test_example_block_transition_shape():
    g = golden_cgs()
    a = universal_apa(Alphabet(("p2",), 9))
    block = (("exists", "z"), ("forall", "w"), ("exists", "v"))
    b = simulate(g, 0, "p2", ("w", "z", "v", "v"), block, a)
    got = shape(b.store, b.delta(0, 0), b.pairs)
    expected = ("or", frozenset(
        ("and", frozenset(
            ("or", frozenset(("leaf", 1 + 4 * aw + 2 * az + av) for av in (0, 1)))
            for aw in (0, 1)))
        for az in (0, 1)))
    assert got == expected


def test_universal_input_single_state():
    g = one_state()
    b = simulate(g, 0, "p", ("x",), (("exists", "x"),), universal_apa(Alphabet(("p",), 1)))
    assert b.alphabet.vars == ()
    assert singleton_nonempty(b)[0]


def test_globally_a_matches_positional_enumeration():
    rng = random.Random(0)
    for _ in range(20):
        g = random_cgs(rng, 2, 1, 2, aps=("a",))
        a = ltl_to_apa(g, parse_path_formula('G "a"_p'), ["p"])
        b = simulate(g, 0, "p", ("x",), (("exists", "x"),), a)
        expected = False
        for acts in itertools.product(range(2), repeat=2):
            s, seen = 0, []
            while s not in seen:
                seen.append(s)
                s = g.successors(s)[acts[s]]
            expected |= all("a" in g.labels[t] for t in seen)
        assert singleton_nonempty(b)[0] == expected


def test_colors_and_size_bounds():
    rng = random.Random(1)
    for _ in range(10):
        g = random_cgs(rng, 3, 2, 2)
        f = random_spe_formula(rng, 2, 2, ["a", "b"])
        dec = spe_decompose(f)
        a = ltl_to_apa(g, f.body, dec.paths)
        st = StageStats(dec.paths[1], a.n)
        b = simulate(g, 0, dec.paths[1], dec.profiles[1], dec.blocks[1], a, stats=st)
        assert b.alphabet.vars == (dec.paths[0],)
        assert set(b.colors) <= set(b.dpa.colors)
        assert b.n <= b.dpa.n * g.n_states
        assert st.output_states == b.n and st.dpa_states == b.dpa.n


def test_block_errors():
    g = one_state()
    a = universal_apa(Alphabet(("p",), 1))
    with pytest.raises(SummaryError):
        simulate(g, 0, "p", ("y",), (("exists", "x"),), a)
    with pytest.raises(SummaryError):
        simulate(g, 0, "q", ("x",), (("exists", "x"),), a)


def test_invariant_without_remaining_blocks():
    g = random_cgs(random.Random(2), 2, 1, 2)
    f = parse_formula('exists x. exists y. ("a"_p U "b"_q)[p : (x), q : (y)]')
    a = ltl_to_apa(g, f.body, f.paths)
    assert check_summary_invariant(g, 0, 3, a, f, 2)


def test_invariant_single_exists_block():
    g = one_state()
    f = parse_formula('exists x. (G "a"_p)[p : (x)]')
    b = simulate(g, 0, "p", ("x",), (("exists", "x"),), ltl_to_apa(g, f.body, f.paths))
    assert check_summary_invariant(g, 0, 1, b, f, 1)


@pytest.mark.parametrize("seed", range(30))
def test_invariant_random(seed):
    rng = random.Random(seed)
    g = random_cgs(rng, rng.randint(1, 2), 1, 2)
    f = random_spe_formula(rng, 1, 2, ["a", "b"], max_body=5, max_block=1)
    dec = spe_decompose(f)
    b = simulate(g, 0, dec.paths[1], dec.profiles[1], dec.blocks[1], ltl_to_apa(g, f.body, dec.paths))
    assert check_summary_invariant(g, 0, 2, b, f, 2, max_lasso=3)
