"""Brute-force reference semantics over finite-memory strategies.

Strategies are explored lazily: a play asks for the entries it needs, and a
missing entry is branched on at the quantifier that owns the variable, so the
search only ever looks at the part of a strategy the plays actually touch.
Memory states are allocated canonically (a fresh memory value is always the
next unused one), which removes renamings of the same strategy.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import lcm
from typing import Iterator, Sequence

from .automata import Alphabet, apa_to_dpa
from .cgs import CGS
from .formula import (FALSE, TRUE, And, Atom, BlockDecomposition, Const, Nested, Next, Not, StateFormula,
                      alpha_rename, size, spe_decompose, validate)
from .ltl2apa import eval_ltl_on_lasso, ltl_to_apa


class OracleBudgetError(RuntimeError):
    """The search visited more nodes than allowed."""


@dataclass(frozen=True)
class FiniteMemoryStrategy:
    """Transducer with memory ``0..n_memory-1``; memory starts at ``initial``.

    ``outputs[m][s]`` is the action, ``updates[m][s]`` the next memory after
    seeing state ``s`` with memory ``m``.
    """

    n_memory: int
    outputs: tuple
    updates: tuple
    initial: int = 0

    def action(self, m: int, s: int) -> int:
        return self.outputs[m][s]

    def update(self, m: int, s: int) -> int:
        return self.updates[m][s]


def enumerate_strategy_space(g: CGS, memory_bound: int) -> Iterator[FiniteMemoryStrategy]:
    """Every strategy table with 1..``memory_bound`` memory states.

    Order: memory count ascending, then output table, then update table, both
    lexicographic.  The count is ``sum_{k=1..n} (k * |A|)^(k * |S|)``:
    ``|A|^(k|S|)`` output tables times ``k^(k|S|)`` update tables, initial
    memory fixed to 0.
    """
    n_s = g.n_states
    n_a = len(g.actions)
    for k in range(1, memory_bound + 1):
        cells = k * n_s
        for outs in itertools.product(range(n_a), repeat=cells):
            out_t = tuple(tuple(outs[m * n_s:(m + 1) * n_s]) for m in range(k))
            for ups in itertools.product(range(k), repeat=cells):
                up_t = tuple(tuple(ups[m * n_s:(m + 1) * n_s]) for m in range(k))
                yield FiniteMemoryStrategy(k, out_t, up_t)


def strategy_space_size(n_states: int, n_actions: int, memory_bound: int) -> int:
    return sum((k * n_actions) ** (k * n_states) for k in range(1, memory_bound + 1))


# -- lazy search ---------------------------------------------------------------------------

class _Need(Exception):
    def __init__(self, var: str, entry: tuple):
        self.var = var
        self.entry = entry


class _Partial:
    """Partial strategy tables for a set of variables."""

    __slots__ = ("out", "upd", "mem_used")

    def __init__(self):
        self.out: dict = {}
        self.upd: dict = {}
        self.mem_used: dict = {}


@dataclass(frozen=True)
class _Decided:
    value: bool


class _Progression:
    """Syntactic LTL progression: the residual obligation after one letter.

    Used to stop a play as soon as its prefix settles the body.
    """

    MAX_SIZE = 400

    def __init__(self, g: CGS, paths: Sequence[str], nested):
        self.g = g
        self.idx = {p: i for i, p in enumerate(paths)}
        self.nested = nested
        self.memo: dict = {}

    @staticmethod
    def _not(a):
        if isinstance(a, Const):
            return FALSE if a.value else TRUE
        if isinstance(a, Not):
            return a.arg
        return Not(a)

    @staticmethod
    def _and(a, b):
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE or a == b:
            return a
        return And(a, b)

    def step(self, f, letter: tuple):
        key = (f, letter)
        r = self.memo.get(key)
        if r is not None:
            return r
        if isinstance(f, Const):
            r = f
        elif isinstance(f, Atom):
            r = TRUE if f.ap in self.g.labels[letter[self.idx[f.path]]] else FALSE
        elif isinstance(f, Nested):
            r = TRUE if self.nested(f.formula, letter[self.idx[f.path]]) else FALSE
        elif isinstance(f, Not):
            r = self._not(self.step(f.arg, letter))
        elif isinstance(f, And):
            left = self.step(f.left, letter)
            r = FALSE if left == FALSE else self._and(left, self.step(f.right, letter))
        elif isinstance(f, Next):
            r = f.arg
        else:
            right = self.step(f.right, letter)
            if right == TRUE:
                r = TRUE
            else:
                r = self._not(self._and(self._not(right), self._not(self._and(self.step(f.left, letter), f))))
        self.memo[key] = r
        return r

    def tracker(self, body, letter_at):
        """``progress(j, s)`` callback for :meth:`_Search.lasso`."""
        state = [body, True]

        def progress(j: int, s: int):
            if not state[1]:
                return None
            f = self.step(state[0], letter_at(j, s))
            if isinstance(f, Const):
                return f.value
            if size(f) > self.MAX_SIZE:
                state[1] = False
            state[0] = f
            return None

        return progress


class _Search:
    def __init__(self, g: CGS, start: int, memory_bound: int, budget: int):
        self.g = g
        self.start = start
        self.M = memory_bound
        self.budget = budget
        self.nodes = 0
        n = g.n_states
        self.rows = [g.successors(s) for s in range(n)]
        self.absorbing = [g.is_absorbing(s) for s in range(n)]
        self.sensitive = [g.sensitive_agents(s) for s in range(n)]
        self.radix = list(g._radix)

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise OracleBudgetError(f"oracle search exceeded {self.budget} nodes")

    def lasso(self, profile: Sequence[str], P: _Partial, progress=None):
        """State lasso of the play for ``profile``; raises ``_Need``.

        ``progress(j, s)`` may settle the outcome early from the prefix; its
        boolean is then returned wrapped in :class:`_Decided`.
        """
        vars_ = sorted(set(profile))
        slot = [vars_.index(v) for v in profile]
        s = self.start
        mems = (0,) * len(vars_)
        seen: dict = {}
        seq: list = []
        out, upd = P.out, P.upd
        rows, absorbing, sensitive, radix = self.rows, self.absorbing, self.sensitive, self.radix
        positional = self.M == 1
        while True:
            key = (s, mems)
            k = seen.get(key)
            if k is not None:
                return tuple(seq[:k]), tuple(seq[k:])
            if absorbing[s]:
                return tuple(seq), (s,)
            seen[key] = len(seq)
            seq.append(s)
            if progress is not None:
                d = progress(len(seq) - 1, s)
                if d is not None:
                    return _Decided(d)
            sens = sensitive[s]
            idx = 0
            for i, v in enumerate(profile):
                if not sens[i]:
                    continue
                m = mems[slot[i]]
                a = out.get((v, m, s))
                if a is None:
                    raise _Need(v, ("out", m, s))
                idx += a * radix[i]
            if not positional:
                nxt = []
                for v, m in zip(vars_, mems):
                    m2 = upd.get((v, m, s))
                    if m2 is None:
                        raise _Need(v, ("upd", m, s))
                    nxt.append(m2)
                mems = tuple(nxt)
            s = rows[s][idx]

    def options(self, var: str, entry: tuple, P: _Partial):
        kind, m, s = entry
        if kind == "out":
            return [("out", (var, m, s), a) for a in range(len(self.g.actions))]
        used = P.mem_used.get(var, 1)
        return [("upd", (var, m, s), m2) for m2 in range(min(self.M, used + 1))]

    def assign(self, P: _Partial, opt):
        kind, key, val = opt
        if kind == "out":
            P.out[key] = val
        else:
            P.upd[key] = val
            var = key[0]
            old = P.mem_used.get(var, 1)
            if val + 1 > old:
                P.mem_used[var] = val + 1
                return old
        return None

    def unassign(self, P: _Partial, opt, old):
        kind, key, _ = opt
        if kind == "out":
            del P.out[key]
        else:
            del P.upd[key]
            if old is not None:
                P.mem_used[key[0]] = old


def _eval_block(search: _Search, quants: Sequence[tuple[str, str]], leaf) -> bool:
    """Quantify ``quants`` over lazily built strategies; ``leaf(P)`` may raise ``_Need``."""
    P = _Partial()
    level = {v: i for i, (_, v) in enumerate(quants)}

    def explore(i: int) -> bool:
        # value of quantifiers i.. given the partial tables in P
        if i == len(quants):
            search.tick()
            return leaf(P)
        q, v = quants[i]
        try:
            return explore(i + 1)
        except _Need as need:
            if level.get(need.var, -1) != i:
                raise
            opts = search.options(need.var, need.entry, P)
        want = q == "exists"
        for opt in opts:
            old = search.assign(P, opt)
            try:
                r = explore(i)
            finally:
                search.unassign(P, opt, old)
            if r == want:
                return want
        return not want

    if not quants:
        return leaf(P)
    return explore(0)


def _at(lasso, j: int) -> int:
    stem, cycle = lasso
    return stem[j] if j < len(stem) else cycle[(j - len(stem)) % len(cycle)]


def _no_nested(phi, s):
    raise ValueError("nested state formula without an evaluator")


def _zip_lassos(alphabet: Alphabet, lassos: Sequence[tuple]) -> tuple[list, list]:
    stem_len = max(len(s) for s, _ in lassos)
    cyc_len = lcm(*[len(c) for _, c in lassos])

    def at(lasso, j):
        s, c = lasso
        return s[j] if j < len(s) else c[(j - len(s)) % len(c)]

    word = [alphabet.encode([at(l, j) for l in lassos]) for j in range(stem_len + cyc_len)]
    return word[:stem_len], word[stem_len:]


def _stages(f: StateFormula, dec: BlockDecomposition | None):
    """``(quantifiers, paths computed after them)`` per stage."""
    if dec:
        return [(list(b), [p]) for b, p in zip(dec.blocks, dec.paths)]
    return [(list(f.prefix), list(f.paths))]


def _evaluate(g: CGS, start: int, f: StateFormula, memory_bound: int, search: _Search, nested,
              first_stage: int = 0, fixed: dict | None = None) -> bool:
    dec = spe_decompose(f)
    stages = _stages(f, dec if dec else None)
    paths = list(f.paths)
    alphabet = Alphabet(tuple(paths), g.n_states)
    profiles = dict(f.bindings)
    memo: dict = {}
    prog = _Progression(g, paths, nested if nested else _no_nested)

    def run(k: int, lassos: dict) -> bool:
        key = (k, tuple(sorted(lassos.items())))
        if k == len(stages):
            r = memo.get(key)
            if r is None:
                stem, cycle = _zip_lassos(alphabet, [lassos[p] for p in paths])
                r = eval_ltl_on_lasso(f.body, g, alphabet, stem, cycle, nested)
                memo[key] = r
            return r
        r = memo.get(key)
        if r is not None:
            return r
        quants, made = stages[k]
        if k == len(stages) - 1 and len(made) == 1:
            # last stage: settle plays early by progressing the body
            p = made[0]
            pos = paths.index(p)
            fixed = [lassos.get(q) for q in paths]

            def letter_at(j, s):
                return tuple(s if i == pos else _at(fixed[i], j) for i in range(len(paths)))

            def leaf(P):
                res = search.lasso(profiles[p], P, prog.tracker(f.body, letter_at))
                if isinstance(res, _Decided):
                    return res.value
                return run(k + 1, {**lassos, p: res})
        else:
            def leaf(P):
                new = dict(lassos)
                for p in made:
                    new[p] = search.lasso(profiles[p], P)
                return run(k + 1, new)

        r = _eval_block(search, quants, leaf)
        memo[key] = r
        return r

    start_lassos = {p: (tuple(st), tuple(cy)) for p, (st, cy) in (fixed or {}).items()}
    return run(first_stage, start_lassos)


def eval_direct(g: CGS, start: int, f: StateFormula, memory_bound: int, budget: int = 2_000_000) -> bool:
    """Truth of ``f`` in ``start`` with every strategy variable ranging over
    strategies with at most ``memory_bound`` memory states.

    Nested state formulas are evaluated recursively with the same bound.
    Raises :class:`OracleBudgetError` when the search grows past ``budget``
    nodes.
    """
    f = alpha_rename(f)
    validate(f)
    for _, prof in f.bindings:
        if len(prof) != len(g.agents):
            raise ValueError(f"profile {prof} does not match {len(g.agents)} agents")
    search = _Search(g, start, memory_bound, budget)
    nested_memo: dict = {}

    def nested(phi, s):
        key = (phi, s)
        r = nested_memo.get(key)
        if r is None:
            r = eval_direct(g, s, phi, memory_bound, budget)
            nested_memo[key] = r
        return r

    return _evaluate(g, start, f, memory_bound, search, nested)


def eval_blocks_from(g: CGS, start: int, f: StateFormula, dec: BlockDecomposition, k: int, lassos: dict,
                     memory_bound: int, budget: int = 2_000_000) -> bool:
    """The right-hand side of the summary property: blocks ``k..m`` quantified
    with the first ``k - 1`` paths fixed to ``lassos``."""
    search = _Search(g, start, memory_bound, budget)
    return _evaluate(g, start, f, memory_bound, search, None, first_stage=k - 1, fixed=lassos)


def dpa_memory_bound(g: CGS, f: StateFormula) -> int:
    """Number of states of a DPA for the body of ``f``; the oracle's memory bound."""
    d = apa_to_dpa(ltl_to_apa(g, f.body, f.paths))
    d.explore()
    return max(1, d.n)
