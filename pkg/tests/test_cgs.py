import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from hypersl.bench import gen_scheduler
from hypersl.cgs import (CGS, CGSError, ObservationFamily, act_ap, is_injectively_labeled, make_action_recording,
                         make_injectively_labeled, parse_cgs, parse_observations, play)
from hypersl.oracle import FiniteMemoryStrategy
from hypersl.randgen import random_cgs

from conftest import one_state, toggle

ONE = """
aps: a
agents: p
actions: u v
state 0 init {a}
  [u] -> 0
  [v] -> 0
"""


def positional(actions):
    return FiniteMemoryStrategy(1, (tuple(actions),), (tuple(0 for _ in actions),))


def test_parse_one_state():
    g = parse_cgs(ONE)
    assert g.n_states == 1
    assert g.labels[0] == {"a"}
    assert g.successors(0) == (0, 0)


def test_incomplete_transition():
    with pytest.raises(CGSError, match="incomplete transition"):
        parse_cgs(ONE.replace("  [v] -> 0\n", ""))


@pytest.mark.parametrize("bad, msg", [
    ("aps: a\nagents: p\nactions: u\nstate 0 init {c}\n  [u] -> 0\n", "undeclared AP"),
    ("aps: a\nagents: p\nactions: u\nstate 0 {a}\n  [u] -> 0\n", "init"),
    ("aps: a\nagents: p\nactions: u\nstate 0 init {a}\n  [w] -> 0\n", "undeclared action"),
    ("aps: a\nagents: p\nactions: u\nstate 0 init {a}\n  [u] -> 1\n", "undeclared state"),
    ("aps: @il0\nagents: p\nactions: u\nstate 0 init {}\n  [u] -> 0\n", "reserved"),
])
def test_parse_errors(bad, msg):
    with pytest.raises(CGSError, match=msg):
        parse_cgs(bad)


def test_error_carries_position():
    with pytest.raises(CGSError) as e:
        parse_cgs("aps: a\nagents: p\nactions: u\nstate 0 init {a}\n  [w] -> 0\n")
    assert e.value.line == 5


def test_scheduler_roundtrip():
    g, _ = gen_scheduler(2)
    h = parse_cgs(g.dumps())
    assert h.n_states == 72
    assert len(h.reachable_states()) == 9
    assert all(h.successors(s) == g.successors(s) for s in range(72))


def test_play_fixed_point():
    g = one_state()
    assert play(g, 0, [positional([1])], 4) == [0, 0, 0, 0, 0]


def test_play_toggle():
    assert play(toggle(), 0, [positional([0, 1])], 3) == [0, 1, 0, 1]


def test_play_matches_naive_interpreter():
    rng = random.Random(3)
    for _ in range(20):
        g = random_cgs(rng, 4, 2, 2)
        acts = [[rng.randrange(2) for _ in range(4)] for _ in range(2)]
        p = play(g, 0, [positional(a) for a in acts], 10)
        s, naive = 0, [0]
        for _ in range(10):
            idx = acts[0][s] * 2 + acts[1][s]       # first agent most significant
            s = g.successors(s)[idx]
            naive.append(s)
        assert p == naive


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 6), st.integers(0, 6))
def test_play_prefix_closed(seed, h1, h2):
    rng = random.Random(seed)
    g = random_cgs(rng, 3, 2, 2)
    prof = [FiniteMemoryStrategy(2, tuple(tuple(rng.randrange(2) for _ in range(3)) for _ in range(2)),
                                 tuple(tuple(rng.randrange(2) for _ in range(3)) for _ in range(2)))
            for _ in range(2)]
    lo, hi = sorted((h1, h2))
    assert play(g, 0, prof, hi)[:lo + 1] == play(g, 0, prof, lo)


def test_reachable_single():
    assert one_state().reachable_states() == {0}


def test_injective_labels_already_injective():
    g = toggle()
    h = make_injectively_labeled(g)
    assert [lab & set(g.aps) for lab in h.labels] == list(g.labels)


def test_injective_labels_four_blank_states():
    g = CGS(4, 0, ["p"], ["u"], [set() for _ in range(4)], [[1], [2], [3], [0]], aps=[])
    h = make_injectively_labeled(g)
    assert len(set(h.aps) - set(g.aps)) == 2
    assert is_injectively_labeled(h)


def test_injective_labels_random():
    rng = random.Random(5)
    for _ in range(10):
        g = random_cgs(rng, 10, 1, 2)
        h = make_injectively_labeled(g)
        assert is_injectively_labeled(h)
        assert [lab & set(g.aps) for lab in h.labels] == [set(lab) for lab in g.labels]


def test_action_recording_one_state():
    g = CGS(1, 0, ["p"], ["a", "b"], [set()], [[0, 0]], aps=[])
    h, _ = make_action_recording(g)
    reach = h.reachable_states()
    # the fresh initial copy plus one recorded state per action
    assert len(reach - {0}) == 2
    x = h.succ(0, [0])
    assert act_ap(0, "a") in h.labels[x] and act_ap(0, "b") not in h.labels[x]


def test_action_recording_size():
    g = random_cgs(random.Random(1), 3, 2, 2)
    h, _ = make_action_recording(g)
    assert h.n_states == 1 + 3 * 4


def test_action_recording_property_exhaustive():
    g = random_cgs(random.Random(2), 5, 2, 2)
    h, _ = make_action_recording(g)
    act = {ap for ap in h.aps if ap.startswith("@act_")}
    for x in h.reachable_states():
        for prof in itertools.product(range(2), repeat=2):
            y = h.succ(x, prof)
            assert h.labels[y] & act == {act_ap(i, g.actions[a]) for i, a in enumerate(prof)}


def test_observations_lifted():
    g = toggle()
    obs = ObservationFamily.from_partitions({"o": [[0, 1]]})
    h, lifted = make_action_recording(g, obs)
    assert all(lifted.related("o", x, y) for x in range(h.n_states) for y in range(h.n_states))


def test_parse_observations():
    obs = parse_observations("obs o: 0 1 | 2\nobs id: 0 | 1 | 2\n")
    assert obs.related("o", 0, 1) and not obs.related("o", 1, 2)
    assert not obs.related("id", 0, 1)


def test_observation_must_be_equivalence():
    with pytest.raises(ValueError):
        ObservationFamily({"o": frozenset({(0, 1), (1, 0), (0, 0)})})
