"""Block elimination by simulation, and the summary abstraction.

``simulate`` removes one path variable from an automaton: it determinizes the
input and then runs it in lock step with the game structure, letting the
quantifiers of one block pick actions inside each transition.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Sequence

from .automata import APA, DPA, Limits, Store, accepts_lasso, apa_to_dpa
from .cgs import CGS


class SummaryError(ValueError):
    pass


@dataclass
class StageStats:
    path: str
    input_states: int
    dpa_states: int = 0
    output_states: int = 0
    seconds: float = 0.0
    route: str = ""

    def as_dict(self) -> dict:
        return {"path": self.path, "in": self.input_states, "dpa": self.dpa_states,
                "out": self.output_states, "time_s": round(self.seconds, 4), "route": self.route}


@dataclass
class SummaryAutomaton:
    """An automaton over the first ``k - 1`` path variables plus bookkeeping."""

    apa: APA
    k: int
    source: str = ""
    stats: list = field(default_factory=list)


def _check_block(block, profile) -> None:
    names = [v for _, v in block]
    if len(set(names)) != len(names):
        raise SummaryError("a variable is quantified twice in the block")
    for v in profile:
        if v not in names:
            raise SummaryError(f"profile variable '{v}' is not quantified in the block")


def simulate(g: CGS, start: int, pi: str, profile: Sequence[str], block: Sequence[tuple[str, str]], a: APA,
             limits: Limits | None = None, stats: StageStats | None = None) -> APA:
    """Eliminate path ``pi`` (built from ``profile`` by the quantifiers of ``block``).

    The result reads the remaining variables.  Its states are the reachable
    pairs ``(q, s)`` of a DPA state and a game state; state 0 is
    ``(q0, start)``.  The transition of ``(q, s)`` on ``t`` quantifies the
    block's actions in order (disjunction for exists, conjunction for
    forall) over leaves ``(delta(q, t[pi -> s]), succ(s, profile actions))``.
    """
    t0 = time.perf_counter()
    limits = limits or Limits()
    profile = tuple(profile)
    block = tuple(block)
    if len(profile) != len(g.agents):
        raise SummaryError(f"profile has {len(profile)} entries but the structure has {len(g.agents)} agents")
    _check_block(block, profile)
    alpha = a.alphabet
    if pi not in alpha.vars:
        raise SummaryError(f"path '{pi}' is not in the automaton alphabet {alpha.vars}")
    if alpha.n_states != g.n_states:
        raise SummaryError("alphabet and structure disagree on the number of states")
    pi_idx = alpha.vars.index(pi)
    out_alpha = alpha.drop(pi)
    route: dict = {}
    det: DPA = apa_to_dpa(a, limits, route)

    # letter of the input alphabet for (outer letter, s)
    n = g.n_states
    tail = len(alpha.vars) - 1 - pi_idx
    low = n ** tail

    def ext_letter(t: int, s: int) -> int:
        hi, lo = divmod(t, low)
        return (hi * n + s) * low + lo

    store = Store()
    pair_id: dict = {}
    pairs: list = []
    colors: list = []

    def pid(q: int, s: int) -> int:
        key = (q, s)
        i = pair_id.get(key)
        if i is None:
            i = len(pairs)
            pair_id[key] = i
            pairs.append(key)
            colors.append(det.colors[q])
            limits.check(len(pairs), "simulation")
        return i

    n_act = len(g.actions)
    var_pos = {v: k for k, (_, v) in enumerate(block)}
    # agent -> position of its variable in the block
    agent_pos = [var_pos[v] for v in profile]
    quants = [q for q, _ in block]
    used = set(agent_pos)
    formula_memo: dict = {}

    def action_formula(q2: int, s: int) -> int:
        key = (q2, s)
        r = formula_memo.get(key)
        if r is not None:
            return r
        row = g.successors(s)
        radix = g._radix
        choice = [0] * len(block)

        def rec(k: int) -> int:
            if k == len(block):
                idx = sum(choice[agent_pos[i]] * radix[i] for i in range(len(profile)))
                return store.leaf(pid(q2, row[idx]))
            if k not in used:
                # an unused variable does not influence the play
                return rec(k + 1)
            kids = []
            for act in range(n_act):
                choice[k] = act
                kids.append(rec(k + 1))
            return store.disj(kids) if quants[k] == "exists" else store.conj(kids)

        r = rec(0)
        formula_memo[key] = r
        return r

    table: list = []
    pid(det.initial, start)
    letters = list(out_alpha.letters())
    i = 0
    while i < len(pairs):
        q, s = pairs[i]
        row = []
        for t in letters:
            q2 = det.succ(q, ext_letter(t, s))
            row.append(action_formula(q2, s))
        # colors of DPA states created by succ are final once created
        table.append(row)
        i += 1
    b = APA(out_alpha, len(pairs), 0, colors, store, lambda q, x: table[q][x], name=f"sim({pi})")
    b.pairs = pairs
    b.dpa = det
    if stats is not None:
        stats.input_states = a.n
        stats.dpa_states = det.n
        stats.output_states = b.n
        stats.seconds = time.perf_counter() - t0
        stats.route = route.get("route", "")
    return b


def check_summary_invariant(g: CGS, start: int, k: int, candidate: SummaryAutomaton | APA, formula,
                            memory_bound: int, max_lasso: int | None = None, budget: int = 200_000) -> bool:
    """Compare membership of ``candidate`` with the bounded-memory oracle.

    ``formula`` is an SPE state formula (nested formulas eliminated).  Every
    assignment of lassos to the first ``k - 1`` paths with stem plus cycle of
    length at most ``max_lasso`` (default ``memory_bound``) is tried.
    """
    from .formula import spe_decompose
    from .oracle import eval_blocks_from

    apa = candidate.apa if isinstance(candidate, SummaryAutomaton) else candidate
    dec = spe_decompose(formula)
    if not dec:
        raise SummaryError(f"formula is not SPE: {dec.reason}")
    if g.n_states > 3 or len(g.actions) > 2:
        raise SummaryError("instance too large for the exhaustive check")
    remaining = sum(len(b) for b in dec.blocks[k - 1:])
    if remaining > 3:
        raise SummaryError("too many remaining quantifiers for the exhaustive check")
    outer = dec.paths[:k - 1]
    if tuple(apa.alphabet.vars) != tuple(outer):
        raise SummaryError("candidate alphabet does not match the first k-1 paths")
    bound = max_lasso or memory_bound
    n = g.n_states
    for stem_len, cyc_len in _lasso_shapes(bound):
        for combo in itertools.product(range(n), repeat=(stem_len + cyc_len) * len(outer)):
            lassos = {}
            for j, p in enumerate(outer):
                seq = combo[j * (stem_len + cyc_len):(j + 1) * (stem_len + cyc_len)]
                lassos[p] = (list(seq[:stem_len]), list(seq[stem_len:]))
            expected = eval_blocks_from(g, start, formula, dec, k, lassos, memory_bound, budget)
            stem, cycle = _zip_word(apa.alphabet, [lassos[p] for p in outer])
            if accepts_lasso(apa, stem, cycle) != expected:
                return False
    return True


def _lasso_shapes(bound: int):
    if bound < 1:
        return
    for total in range(1, bound + 1):
        for cyc in range(1, total + 1):
            yield total - cyc, cyc


def _zip_word(alphabet, lassos):
    """Letters of the zipped assignment of several state lassos."""
    from math import lcm

    if not lassos:
        return [], [0]
    stem_len = max(len(s) for s, _ in lassos)
    cyc_len = lcm(*[len(c) for _, c in lassos])

    def at(lasso, j):
        s, c = lasso
        return s[j] if j < len(s) else c[(j - len(s)) % len(c)]

    word = [alphabet.encode([at(l, j) for l in lassos]) for j in range(stem_len + cyc_len)]
    return word[:stem_len], word[stem_len:]
