"""Alternating and deterministic parity automata over assignment letters.

Parity acceptance is min-even throughout: a run-DAG path is accepting when the
least color seen infinitely often is even.

Transition formulas live in a :class:`Store`, a hash-consed DAG of positive
boolean formulas whose leaves are automaton states.
"""
from __future__ import annotations

import itertools
import os
import time
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

DEFAULT_MAX_STATES = int(os.environ.get("HYPERSL_MAX_STATES", 5_000_000))


class ResourceLimitError(RuntimeError):
    """Raised when a construction exceeds its state bound or deadline."""


@dataclass
class Limits:
    max_states: int = DEFAULT_MAX_STATES
    deadline: float | None = None      # absolute time.monotonic() value

    @classmethod
    def with_timeout(cls, seconds: float | None, max_states: int | None = None) -> "Limits":
        dl = None if seconds is None else time.monotonic() + seconds
        return cls(max_states or DEFAULT_MAX_STATES, dl)

    def check(self, n_states: int, what: str) -> None:
        if n_states > self.max_states:
            raise ResourceLimitError(f"{what}: more than {self.max_states} states")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimitError(f"{what}: time limit exceeded")


# -- formula DAG ----------------------------------------------------------------

LEAF, AND, OR, TT, FF = 0, 1, 2, 3, 4


class Store:
    """Hash-consed positive boolean formulas.  Node 0 is true, node 1 is false."""

    TRUE = 0
    FALSE = 1

    def __init__(self):
        self.kind: list[int] = [TT, FF]
        self.args: list = [(), ()]
        self._index: dict = {}

    def __len__(self):
        return len(self.kind)

    def _mk(self, kind, args):
        key = (kind, args)
        n = self._index.get(key)
        if n is None:
            n = len(self.kind)
            self.kind.append(kind)
            self.args.append(args)
            self._index[key] = n
        return n

    def leaf(self, q: int) -> int:
        return self._mk(LEAF, q)

    def conj(self, children: Iterable[int]) -> int:
        return self._junction(AND, children, self.TRUE, self.FALSE)

    def disj(self, children: Iterable[int]) -> int:
        return self._junction(OR, children, self.FALSE, self.TRUE)

    def _junction(self, kind, children, unit, zero):
        flat = set()
        for c in children:
            if c == zero:
                return zero
            if c == unit:
                continue
            if self.kind[c] == kind:
                flat.update(self.args[c])
            else:
                flat.add(c)
        if not flat:
            return unit
        if len(flat) == 1:
            return next(iter(flat))
        return self._mk(kind, tuple(sorted(flat)))

    def leaves(self, n: int) -> set[int]:
        out = set()
        seen = set()
        stack = [n]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            k = self.kind[x]
            if k == LEAF:
                out.add(self.args[x])
            elif k in (AND, OR):
                stack.extend(self.args[x])
        return out

    def nodes_below(self, n: int) -> list[int]:
        """All nodes reachable from ``n``, children before parents."""
        order = []
        seen = set()
        stack = [(n, False)]
        while stack:
            x, done = stack.pop()
            if done:
                order.append(x)
                continue
            if x in seen:
                continue
            seen.add(x)
            stack.append((x, True))
            if self.kind[x] in (AND, OR):
                for c in self.args[x]:
                    if c not in seen:
                        stack.append((c, False))
        return order

    def import_node(self, other: "Store", n: int, leaf_map: Callable[[int], int], memo: dict | None = None) -> int:
        """Copy node ``n`` of ``other`` into this store, renaming leaves."""
        memo = {} if memo is None else memo
        for x in other.nodes_below(n):
            if x in memo:
                continue
            k = other.kind[x]
            if k == TT:
                memo[x] = self.TRUE
            elif k == FF:
                memo[x] = self.FALSE
            elif k == LEAF:
                memo[x] = leaf_map(other.args[x])
            elif k == AND:
                memo[x] = self.conj(memo[c] for c in other.args[x])
            else:
                memo[x] = self.disj(memo[c] for c in other.args[x])
        return memo[n]

    def dual(self, n: int, memo: dict | None = None) -> int:
        """Swap and/or and true/false (in place, new nodes)."""
        memo = {} if memo is None else memo
        for x in self.nodes_below(n):
            if x in memo:
                continue
            k = self.kind[x]
            if k == TT:
                memo[x] = self.FALSE
            elif k == FF:
                memo[x] = self.TRUE
            elif k == LEAF:
                memo[x] = x
            elif k == AND:
                memo[x] = self.disj(memo[c] for c in self.args[x])
            else:
                memo[x] = self.conj(memo[c] for c in self.args[x])
        return memo[n]

    def evaluate(self, n: int, true_leaves) -> bool:
        memo = {}
        for x in self.nodes_below(n):
            k = self.kind[x]
            if k == TT:
                memo[x] = True
            elif k == FF:
                memo[x] = False
            elif k == LEAF:
                memo[x] = self.args[x] in true_leaves
            elif k == AND:
                memo[x] = all(memo[c] for c in self.args[x])
            else:
                memo[x] = any(memo[c] for c in self.args[x])
        return memo[n]

    def minimal_models(self, n: int, memo: dict | None = None) -> list[frozenset]:
        """Antichain of minimal sets of leaves satisfying node ``n``."""
        memo = {} if memo is None else memo
        for x in self.nodes_below(n):
            if x in memo:
                continue
            k = self.kind[x]
            if k == TT:
                memo[x] = [frozenset()]
            elif k == FF:
                memo[x] = []
            elif k == LEAF:
                memo[x] = [frozenset((self.args[x],))]
            elif k == OR:
                memo[x] = _antichain(m for c in self.args[x] for m in memo[c])
            else:
                acc = [frozenset()]
                for c in self.args[x]:
                    acc = _antichain(a | b for a in acc for b in memo[c])
                    if not acc:
                        break
                memo[x] = acc
        return memo[n]

    def prefix_str(self, n: int, name: Callable[[int], str] = str) -> str:
        k = self.kind[n]
        if k == TT:
            return "t"
        if k == FF:
            return "f"
        if k == LEAF:
            return name(self.args[n])
        op = "&" if k == AND else "|"
        args = [self.prefix_str(c, name) for c in self.args[n]]
        out = args[-1]
        for a in reversed(args[:-1]):
            out = f"{op} {a} {out}"
        return out


def _antichain(sets) -> list[frozenset]:
    uniq = sorted(set(sets), key=len)
    out: list[frozenset] = []
    for s in uniq:
        if not any(o <= s for o in out):
            out.append(s)
    return out


# -- alphabet ---------------------------------------------------------------------

@dataclass(frozen=True)
class Alphabet:
    """Total maps from ``vars`` to ``n_states`` states, encoded in radix n_states."""

    vars: tuple
    n_states: int

    @property
    def size(self) -> int:
        return self.n_states ** len(self.vars)

    def encode(self, states: Sequence[int]) -> int:
        x = 0
        for s in states:
            x = x * self.n_states + s
        return x

    def decode(self, letter: int) -> tuple[int, ...]:
        out = [0] * len(self.vars)
        for i in range(len(self.vars) - 1, -1, -1):
            letter, out[i] = divmod(letter, self.n_states)
        return tuple(out)

    def letters(self) -> range:
        return range(self.size)

    def index(self, var) -> int:
        return self.vars.index(var)

    def drop(self, var) -> "Alphabet":
        return Alphabet(tuple(v for v in self.vars if v != var), self.n_states)


# -- automata ---------------------------------------------------------------------

class APA:
    """Alternating parity automaton with states ``0..n-1``.

    ``delta_fn(q, letter)`` returns a node of ``store``; results are cached.
    """

    def __init__(self, alphabet: Alphabet, n: int, initial: int, colors: Sequence[int], store: Store,
                 delta_fn: Callable[[int, int], int], name: str = ""):
        self.alphabet = alphabet
        self.n = n
        self.initial = initial
        self.colors = list(colors)
        self.store = store
        self._fn = delta_fn
        self._cache: dict = {}
        self.name = name

    def delta(self, q: int, letter: int) -> int:
        key = (q, letter)
        r = self._cache.get(key)
        if r is None:
            r = self._fn(q, letter)
            self._cache[key] = r
        return r

    @classmethod
    def from_table(cls, alphabet: Alphabet, initial: int, colors: Sequence[int], store: Store, table) -> "APA":
        """``table[q][letter]`` gives the transition node."""
        return cls(alphabet, len(colors), initial, colors, store, lambda q, a: table[q][a])

    def table(self) -> list[list[int]]:
        return [[self.delta(q, a) for a in self.alphabet.letters()] for q in range(self.n)]

    def is_deterministic(self) -> bool:
        return self._all_kinds({LEAF, TT, FF})

    def is_universal_branching(self) -> bool:
        return self._all_kinds({LEAF, TT, FF, AND})

    def is_nondeterministic(self) -> bool:
        return self._all_kinds({LEAF, TT, FF, OR})

    def _all_kinds(self, ok) -> bool:
        st = self.store
        for q in range(self.n):
            for a in self.alphabet.letters():
                for x in st.nodes_below(self.delta(q, a)):
                    if st.kind[x] not in ok:
                        return False
        return True

    def color_set(self) -> set[int]:
        return set(self.colors)


class DPA:
    """Deterministic parity automaton, possibly built lazily.

    ``succ_fn(q, letter)`` returns a state id; new states may be created by the
    callback (it must append their colors via :meth:`add_state`).
    """

    def __init__(self, alphabet: Alphabet, initial: int = 0, colors: list[int] | None = None,
                 succ_fn: Callable[[int, int], int] | None = None, table=None):
        self.alphabet = alphabet
        self.initial = initial
        self.colors = list(colors or [])
        self._fn = succ_fn
        self._cache: dict = {}
        if table is not None:
            for q, row in enumerate(table):
                for a, t in enumerate(row):
                    self._cache[(q, a)] = t
        self.stats: dict = {}

    @property
    def n(self) -> int:
        return len(self.colors)

    def add_state(self, color: int) -> int:
        self.colors.append(color)
        return len(self.colors) - 1

    def succ(self, q: int, letter: int) -> int:
        key = (q, letter)
        r = self._cache.get(key)
        if r is None:
            r = self._fn(q, letter)
            self._cache[key] = r
        return r

    def explore(self, limits: Limits | None = None) -> "DPA":
        """Materialize every state reachable over the full alphabet."""
        seen = {self.initial}
        stack = [self.initial]
        while stack:
            q = stack.pop()
            for a in self.alphabet.letters():
                t = self.succ(q, a)
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
                    if limits:
                        limits.check(len(seen), "DPA exploration")
        return self

    def run(self, letters: Iterable[int], q: int | None = None) -> int:
        q = self.initial if q is None else q
        for a in letters:
            q = self.succ(q, a)
        return q

    def accepts_lasso(self, stem: Sequence[int], cycle: Sequence[int]) -> bool:
        if not cycle:
            raise ValueError("cycle must be nonempty")
        q = self.run(stem)
        seen = {}
        k = 0
        while q not in seen:
            seen[q] = k
            q = self.run(cycle, q)
            k += 1
        # states visited on the repeating block of cycles
        start = seen[q]
        cols = []
        p = q
        for _ in range(k - start):
            for a in cycle:
                cols.append(self.colors[p])
                p = self.succ(p, a)
        return min(cols) % 2 == 0

    def as_apa(self, store: Store | None = None) -> APA:
        """Embed as an APA (leaves are single states)."""
        self.explore()
        st = store or Store()
        return APA(self.alphabet, self.n, self.initial, self.colors, st,
                   lambda q, a: st.leaf(self.succ(q, a)))

    def complement(self) -> "DPA":
        """Same transitions, colors shifted by one."""
        other = DPA(self.alphabet, self.initial, [c + 1 for c in self.colors])
        base = self

        def fn(q, a):
            t = base.succ(q, a)
            while len(other.colors) < len(base.colors):
                other.colors.append(base.colors[len(other.colors)] + 1)
            return t

        other._fn = fn
        return other


# -- basic operations ------------------------------------------------------------------

def complement_apa(a: APA) -> APA:
    """Dualize every transition and shift colors by one."""
    st = a.store
    memo: dict = {}
    return APA(a.alphabet, a.n, a.initial, [c + 1 for c in a.colors], st,
               lambda q, x: st.dual(a.delta(q, x), memo), name=f"not({a.name})")


def intersect(a: APA, b: APA) -> APA:
    """Disjoint union with a fresh conjunctive initial state (state 0)."""
    if a.alphabet != b.alphabet:
        raise ValueError("alphabet mismatch")
    st = Store()
    off_a, off_b = 1, 1 + a.n
    ma: dict = {}
    mb: dict = {}

    def fn(q, x):
        if q == 0:
            return st.conj([fn(off_a + a.initial, x), fn(off_b + b.initial, x)])
        if q < off_b:
            return st.import_node(a.store, a.delta(q - off_a, x), lambda r: st.leaf(r + off_a), ma.setdefault(x, {}))
        return st.import_node(b.store, b.delta(q - off_b, x), lambda r: st.leaf(r + off_b), mb.setdefault(x, {}))

    colors = [max(a.colors + b.colors + [0])] + a.colors + b.colors
    return APA(a.alphabet, 1 + a.n + b.n, 0, colors, st, fn)


def universal_apa(alphabet: Alphabet) -> APA:
    st = Store()
    return APA(alphabet, 1, 0, [0], st, lambda q, a: st.leaf(0))


def empty_apa(alphabet: Alphabet) -> APA:
    st = Store()
    return APA(alphabet, 1, 0, [1], st, lambda q, a: st.leaf(0))


# -- parity games -------------------------------------------------------------------------

EVEN, ODD = 0, 1


class ParityGame:
    """Min-even parity game.  Vertices ``0..n-1`` with owner, color and successors."""

    def __init__(self):
        self.owner: list[int] = []
        self.color: list[int] = []
        self.succ: list[list[int]] = []

    def add(self, owner: int, color: int) -> int:
        self.owner.append(owner)
        self.color.append(color)
        self.succ.append([])
        return len(self.owner) - 1

    @property
    def n(self) -> int:
        return len(self.owner)


@dataclass
class ParitySolution:
    win: tuple          # (Even region, Odd region) as sets
    strategy: dict      # Even strategy: vertex -> successor, for Even-owned vertices in Even's region
    odd_strategy: dict

    def winner(self, v: int) -> int:
        return EVEN if v in self.win[EVEN] else ODD


def solve_parity_game(gm: ParityGame) -> ParitySolution:
    """Zielonka's recursive algorithm with positional strategies for both players."""
    n = gm.n
    for v in range(n):
        if not gm.succ[v]:
            raise ValueError(f"vertex {v} has no successor")
    pred: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in gm.succ[v]:
            pred[w].append(v)
    # compress colors: order-preserving, merge neighbours of equal parity
    distinct = sorted(set(gm.color))
    cmap = {}
    c = -1
    for x in distinct:
        if c < 0 or (c % 2) != (x % 2):
            c = x % 2 if c < 0 else c + 1
        cmap[x] = c
    color = [cmap[x] for x in gm.color]
    strat = [dict(), dict()]
    w0, w1 = _zielonka(set(range(n)), gm.owner, color, gm.succ, pred, strat)
    return ParitySolution((w0, w1), {v: strat[EVEN][v] for v in w0 if gm.owner[v] == EVEN},
                          {v: strat[ODD][v] for v in w1 if gm.owner[v] == ODD})


def _attractor(verts: set, target: set, player: int, owner, succ, pred, strat):
    """Attractor of ``target`` for ``player`` inside ``verts``; records attractor moves."""
    attr = set(target)
    count = {}
    queue = list(target)
    while queue:
        w = queue.pop()
        for v in pred[w]:
            if v not in verts or v in attr:
                continue
            if owner[v] == player:
                attr.add(v)
                strat[player][v] = w
                queue.append(v)
            else:
                k = count.get(v)
                if k is None:
                    k = sum(1 for x in succ[v] if x in verts)
                k -= 1
                count[v] = k
                if k == 0:
                    attr.add(v)
                    queue.append(v)
    return attr


def _zielonka(verts: set, owner, color, succ, pred, strat):
    if not verts:
        return set(), set()
    p = min(color[v] for v in verts)
    player = p % 2
    opp = 1 - player
    top = {v for v in verts if color[v] == p}
    a = _attractor(verts, top, player, owner, succ, pred, strat)
    sub = verts - a
    w = _zielonka(sub, owner, color, succ, pred, strat)
    if not w[opp]:
        for v in top:
            if owner[v] == player:
                for x in succ[v]:
                    if x in verts:
                        strat[player][v] = x
                        break
        res = [None, None]
        res[player] = set(verts)
        res[opp] = set()
        return res[0], res[1]
    b = _attractor(verts, w[opp], opp, owner, succ, pred, strat)
    w2 = _zielonka(verts - b, owner, color, succ, pred, strat)
    res = [None, None]
    res[opp] = w2[opp] | b
    res[player] = w2[player]
    return res[0], res[1]


# -- lasso membership -------------------------------------------------------------------------

def _acceptance_game(a: APA, letters: Sequence[int], nxt: Sequence[int], start_pos: int = 0):
    """Run-DAG acceptance game of ``a`` on positions with successor map ``nxt``.

    Returns the game and the vertex of ``(a.initial, start_pos)``.
    """
    gm = ParityGame()
    st = a.store
    # every cycle through helper vertices also visits a state vertex, so a
    # color above all state colors never decides a play
    helper = max(a.colors + [0]) + 2
    t_v = gm.add(EVEN, 0)
    gm.succ[t_v].append(t_v)
    f_v = gm.add(EVEN, 1)
    gm.succ[f_v].append(f_v)
    state_v: dict = {}
    node_v: dict = {}
    todo = []

    def sv(q, p):
        v = state_v.get((q, p))
        if v is None:
            v = gm.add(EVEN, a.colors[q])
            state_v[(q, p)] = v
            todo.append((v, q, p))
        return v

    def nv(x, p):
        k = st.kind[x]
        if k == TT:
            return t_v
        if k == FF:
            return f_v
        if k == LEAF:
            return sv(st.args[x], p)
        v = node_v.get((x, p))
        if v is None:
            v = gm.add(EVEN if k == OR else ODD, helper)
            node_v[(x, p)] = v
            gm.succ[v] = [nv(c, p) for c in st.args[x]]
        return v

    root = sv(a.initial, start_pos)
    while todo:
        v, q, p = todo.pop()
        x = a.delta(q, letters[p])
        gm.succ[v] = [nv(x, nxt[p])]
    return gm, root


def accepts_lasso(a: APA, stem: Sequence[int], cycle: Sequence[int]) -> bool:
    """Exact membership of ``stem . cycle^omega`` via the acceptance parity game."""
    if not cycle:
        raise ValueError("cycle must be nonempty")
    letters = list(stem) + list(cycle)
    L = len(letters)
    nxt = [p + 1 if p + 1 < L else len(stem) for p in range(L)]
    gm, root = _acceptance_game(a, letters, nxt)
    sol = solve_parity_game(gm)
    return root in sol.win[EVEN]


def singleton_nonempty(a: APA) -> tuple[bool, ParityGame, ParitySolution]:
    """Emptiness over a singleton alphabet as a parity game (no determinization)."""
    if a.alphabet.size != 1:
        raise ValueError("alphabet is not a singleton")
    gm, root = _acceptance_game(a, [0], [0])
    sol = solve_parity_game(gm)
    return root in sol.win[EVEN], gm, sol


# -- nondeterministic Büchi automata ----------------------------------------------------------

class NBA:
    """Lazily explored nondeterministic Büchi automaton on hashable states."""

    def __init__(self, alphabet: Alphabet, initial: Iterable[Hashable],
                 succ_fn: Callable[[Hashable, int], Iterable[Hashable]],
                 accepting_fn: Callable[[Hashable], bool]):
        self.alphabet = alphabet
        self.initial = tuple(initial)
        self._succ = succ_fn
        self._acc = accepting_fn
        self._cache: dict = {}
        self._acc_cache: dict = {}

    def succ(self, q, letter) -> frozenset:
        key = (q, letter)
        r = self._cache.get(key)
        if r is None:
            r = frozenset(self._succ(q, letter))
            self._cache[key] = r
        return r

    def accepting(self, q) -> bool:
        r = self._acc_cache.get(q)
        if r is None:
            r = bool(self._acc(q))
            self._acc_cache[q] = r
        return r

    def reachable(self, limits: Limits | None = None) -> set:
        seen = set(self.initial)
        stack = list(seen)
        while stack:
            q = stack.pop()
            for a in self.alphabet.letters():
                for t in self.succ(q, a):
                    if t not in seen:
                        seen.add(t)
                        stack.append(t)
                        if limits:
                            limits.check(len(seen), "NBA exploration")
        return seen

    def graph(self, limits: Limits | None = None) -> dict:
        """Explicit reachable graph: state -> list of ``(letter, successor)``."""
        adj: dict = {}
        stack = list(self.initial)
        for q in stack:
            adj.setdefault(q, None)
        while stack:
            q = stack.pop()
            if limits:
                limits.check(len(adj), "NBA exploration")
            out = []
            for a in self.alphabet.letters():
                for t in self.succ(q, a):
                    out.append((a, t))
                    if t not in adj:
                        adj[t] = None
                        stack.append(t)
                        if limits:
                            limits.check(len(adj), "NBA exploration")
            adj[q] = out
        return adj

    def find_lasso(self, limits: Limits | None = None):
        """Accepting lasso ``(stem, cycle)`` of letters, or ``None`` if empty."""
        adj = self.graph(limits)
        return fair_lasso(adj, self.initial, self.accepting, lambda q: 0, limits)


def _sccs(nodes: Iterable, adj: dict, keep: Callable[[Hashable], bool], limits: Limits | None = None) -> list[list]:
    """Tarjan, iteratively, on the subgraph induced by ``keep``."""
    index: dict = {}
    low: dict = {}
    on: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index or not keep(root):
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for _, w in it:
                if not keep(w):
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    if limits and counter % 4096 == 0:
                        limits.check(0, "cycle search")
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(adj[w])))
                    pushed = True
                    break
                if w in on and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _bfs_path(adj: dict, sources: Iterable, target: Callable[[Hashable], bool], inside=None):
    """Letters along a shortest path from a source to a node satisfying ``target``."""
    parent = {}
    queue = []
    for s in sources:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    i = 0
    hit = None
    while i < len(queue):
        q = queue[i]
        i += 1
        if target(q):
            hit = q
            break
        for a, t in adj[q]:
            if t not in parent and (inside is None or t in inside):
                parent[t] = (q, a)
                queue.append(t)
    if hit is None:
        return None
    word = []
    q = hit
    while parent[q] is not None:
        q, a = parent[q]
        word.append(a)
    word.reverse()
    return word, hit


def fair_lasso(adj: dict, initial: Sequence, accepting: Callable[[Hashable], bool],
               color: Callable[[Hashable], int], limits: Limits | None = None):
    """A lasso visiting ``accepting`` infinitely often whose least color is even.

    For each even ``c`` the subgraph of colors ``>= c`` is split into SCCs; a
    nontrivial one holding both a color-``c`` node and an accepting node yields
    the cycle.
    """
    evens = sorted({color(q) for q in adj if color(q) % 2 == 0})
    for c in evens:
        for comp in _sccs(adj.keys(), adj, lambda q: color(q) >= c, limits):
            cs = set(comp)
            if len(comp) == 1 and not any(t == comp[0] for _, t in adj[comp[0]]):
                continue
            f = next((q for q in comp if accepting(q)), None)
            if f is None or not any(color(q) == c for q in comp):
                continue
            stem, _ = _bfs_path(adj, initial, lambda q: q == f)
            # f -> some color-c node -> f, staying inside the component
            first = [(a, t) for a, t in adj[f] if t in cs]
            cyc = None
            for a, t in first:
                r = _bfs_path(adj, [t], lambda q: color(q) == c, cs)
                if r is None:
                    continue
                w1, mid = r
                if color(f) == c:
                    mid = t
                    w1 = []
                r2 = _bfs_path(adj, [mid], lambda q: q == f, cs)
                if r2 is None:
                    continue
                cyc = [a] + w1 + r2[0]
                break
            if cyc is None:
                continue
            return stem, cyc
    return None


def nba_dpa_product(nba: NBA, d: "DPA", limits: Limits | None = None) -> dict:
    """Explicit product graph of an NBA with a DPA, nodes ``(q, p)``."""
    adj: dict = {}
    init = [(q, d.initial) for q in nba.initial]
    stack = list(init)
    for v in stack:
        adj[v] = None
    while stack:
        v = stack.pop()
        if limits:
            limits.check(len(adj), "product exploration")
        q, p = v
        out = []
        for a in nba.alphabet.letters():
            p2 = d.succ(p, a)
            for t in nba.succ(q, a):
                w = (t, p2)
                out.append((a, w))
                if w not in adj:
                    adj[w] = None
                    stack.append(w)
                    if limits:
                        limits.check(len(adj), "product exploration")
        adj[v] = out
    return adj


def intersect_dpa_nonempty(a: APA, d: "DPA", limits: Limits | None = None):
    """A lasso in ``L(a) & L(d)`` or ``None``; ``d`` stays deterministic."""
    nba = reduce_nba(apa_to_nba(a, limits), limits)
    adj = nba_dpa_product(nba, d, limits)
    init = [(q, d.initial) for q in nba.initial]
    return fair_lasso(adj, init, lambda v: nba.accepting(v[0]), lambda v: d.colors[v[1]], limits)


SIMULATION_MAX_STATES = 2000


def reduce_nba(nba: NBA, limits: Limits | None = None) -> NBA:
    """Explicit, language-preserving reduction of a lazily built NBA.

    Drops states that cannot reach an accepting cycle, merges states that
    directly simulate each other and removes successors directly simulated by
    a sibling.  States of the result are small integers.
    """
    adj = nba.graph(limits)
    letters = list(nba.alphabet.letters())
    acc = {q: nba.accepting(q) for q in adj}
    good = set()
    for comp in _sccs(adj.keys(), adj, lambda q: True, limits):
        if any(acc[q] for q in comp) and (len(comp) > 1 or any(t == comp[0] for _, t in adj[comp[0]])):
            good.update(comp)
    pred: dict = {}
    for q, out in adj.items():
        for _, t in out:
            pred.setdefault(t, set()).add(q)
    live = set(good)
    stack = list(good)
    while stack:
        q = stack.pop()
        for p in pred.get(q, ()):
            if p not in live:
                live.add(p)
                stack.append(p)
    states = [q for q in adj if q in live]
    idx = {q: i for i, q in enumerate(states)}
    n = len(states)
    succ = [[[] for _ in letters] for _ in range(n)]
    for q in states:
        for x, t in adj[q]:
            if t in live:
                succ[idx[q]][x].append(idx[t])
    for i in range(n):
        for x in range(len(letters)):
            succ[i][x] = sorted(set(succ[i][x]))
    accl = [acc[q] for q in states]
    # cheap bisimulation quotient first
    block = [int(f) for f in accl]
    nblocks = len(set(block))
    while True:
        if limits:
            limits.check(0, "bisimulation quotient")
        sigs: dict = {}
        nb = [sigs.setdefault((block[i],) + tuple(frozenset(block[t] for t in succ[i][x]) for x in range(len(letters))),
                              len(sigs)) for i in range(n)]
        if len(sigs) == nblocks:
            break
        block, nblocks = nb, len(sigs)
    first: dict = {}
    for i in range(n):
        first.setdefault(block[i], i)
    reps = sorted(first.values())
    ridx = {r: k for k, r in enumerate(reps)}
    succ = [[sorted({ridx[first[block[t]]] for t in succ[r][x]}) for x in range(len(letters))] for r in reps]
    accl = [accl[r] for r in reps]
    live_map = {q: ridx[first[block[idx[q]]]] for q in states}
    n = len(reps)
    # direct simulation as a greatest fixpoint; sim[i] = states simulating i.
    # The relation is quadratic, so large automata keep only the quotient above.
    if n > SIMULATION_MAX_STATES:
        sim = [{i} for i in range(n)]
    else:
        sim = [{j for j in range(n) if accl[j] or not accl[i]} for i in range(n)]
    changed = n <= SIMULATION_MAX_STATES
    while changed:
        changed = False
        for i in range(n):
            if limits:
                limits.check(0, "simulation reduction")
            drop = []
            for j in sim[i]:
                if j == i:
                    continue
                for x in range(len(letters)):
                    sj = succ[j][x]
                    if not all(any(u in sim[t] for u in sj) for t in succ[i][x]):
                        drop.append(j)
                        break
            if drop:
                sim[i].difference_update(drop)
                changed = True
    # quotient by simulation equivalence
    rep = list(range(n))
    for i in range(n):
        for j in sim[i]:
            if j < rep[i] and i in sim[j]:
                rep[i] = j
    blocks = sorted(set(rep))
    bid = {b: k for k, b in enumerate(blocks)}
    out_succ: dict = {}
    for b in blocks:
        for x in range(len(letters)):
            ts = {rep[t] for t in succ[b][x]}
            # a successor simulated by a different sibling is redundant
            keep = [t for t in ts if not any(u != t and u in sim[t] and rep[u] == u and t not in sim[u] for u in ts)]
            out_succ[(bid[b], x)] = [bid[t] for t in keep]
    init = sorted({bid[rep[live_map[q]]] for q in nba.initial if q in live})
    racc = [accl[b] for b in blocks]
    red = NBA(nba.alphabet, init, lambda q, x: out_succ[(q, x)], lambda q: racc[q])
    red.size_hint = len(blocks)
    return red


# -- determinization pipeline -----------------------------------------------------------------

def parity_shape(colors: Sequence[int]) -> str:
    """``"buchi"`` when the only possible even color is the least one,
    ``"cobuchi"`` when the only possible odd color is the least one, else
    ``"parity"``.

    Only the first two admit a polynomial alternating-to-Büchi step: guessing
    a least even color per state copy is unsound once conjunctions can spawn
    branches that see smaller colors finitely often.
    """
    cs = set(colors)
    if not cs:
        return "buchi"
    low = min(cs)
    if all(c % 2 == 1 or c == low for c in cs):
        return "buchi"
    if all(c % 2 == 0 or c == low for c in cs):
        return "cobuchi"
    return "parity"


def buchi_flags(a: APA) -> list[bool]:
    """Accepting flags of a Büchi-shaped APA."""
    low = min(a.colors) if a.colors else 0
    return [c == low and c % 2 == 0 for c in a.colors]


def miyano_hayashi(b: APA, accepting: Sequence[bool], limits: Limits | None = None) -> NBA:
    """Breakpoint construction for an alternating Büchi automaton.

    States are pairs ``(S, O)`` of frozensets with ``O`` the states still owing
    a visit to an accepting state.
    """
    st = b.store
    model_memo: dict = {}
    set_memo: dict = {}
    count = [0]

    def models(states: frozenset, x: int) -> list[frozenset]:
        key = (states, x)
        r = set_memo.get(key)
        if r is None:
            node = st.conj(b.delta(q, x) for q in states)
            r = st.minimal_models(node, model_memo)
            set_memo[key] = r
        return r

    def succ(state, x):
        # the language of (S, O) is the intersection over S whatever O is, so
        # successors whose S contains another successor's S are dropped
        S, O = state
        cands = {}
        if not O:
            for X in models(S, x):
                cands.setdefault(X, frozenset(q for q in X if not accepting[q]))
        else:
            for X in models(S - O, x):
                for Y in models(O, x):
                    Z = X | Y
                    O2 = frozenset(q for q in Y if not accepting[q] and q in Z)
                    if Z not in cands or len(O2) < len(cands[Z]):
                        cands[Z] = O2
        keys = sorted(cands, key=len)
        out = []
        kept: list[frozenset] = []
        for Z in keys:
            if any(K <= Z for K in kept):
                continue
            kept.append(Z)
            out.append((Z, cands[Z]))
        count[0] += len(out)
        if limits:
            limits.check(0, "alternation removal")
        return out

    init = (frozenset([b.initial]), frozenset())
    return NBA(b.alphabet, [init], succ, lambda s: not s[1])


def nondet_parity_to_buchi(a: APA) -> NBA:
    """For an APA without conjunctions: guess the least even color."""
    evens = sorted({c for c in a.colors if c % 2 == 0})
    st = a.store
    TOP = ("top",)

    def targets(q, x):
        node = a.delta(q, x)
        k = st.kind[node]
        if k == TT:
            return None
        return st.leaves(node)

    def succ(state, x):
        if state == TOP:
            return [TOP]
        q, e = state
        ts = targets(q, x)
        if ts is None:
            return [TOP]
        out = []
        for r in ts:
            if e is None:
                out.append((r, None))
                out.extend((r, e2) for e2 in evens if a.colors[r] >= e2)
            elif a.colors[r] >= e:
                out.append((r, e))
        return out

    def acc(state):
        return state == TOP or (state[1] is not None and a.colors[state[0]] == state[1])

    return NBA(a.alphabet, [(a.initial, None)], succ, acc)


def safra_piterman(nba: NBA, limits: Limits | None = None, n_hint: int | None = None) -> DPA:
    """Determinize a Büchi automaton into a state-based min-even parity automaton.

    Trees are nested tuples ``(name, label, children)``; names are compact and
    reflect age (older nodes have smaller names).  A DPA state is the pair of a
    tree and the color of the step that produced it.
    """
    limits = limits or Limits()
    intern: dict = {}
    trees: list = []
    dpa = DPA(nba.alphabet)
    # bound on the number of NBA states; names never exceed 2N, so 4N + 1
    # is larger than every color produced by a marked or removed node
    N = n_hint

    def post(label, x):
        out = set()
        for q in label:
            out.update(nba.succ(q, x))
        return frozenset(out)

    def step(tree, x):
        # tree: None (empty) or (name, label, children)
        if tree is None:
            return None, 1
        names = []

        def collect(t):
            names.append(t[0])
            for c in t[2]:
                collect(c)

        collect(tree)
        fresh = [max(names) + 1]

        # 1. spawn accepting children, 2. powerset step
        def spawn(t):
            name, label, children = t
            kids = [spawn(c) for c in children]
            acc = frozenset(q for q in label if nba.accepting(q))
            node = [name, post(label, x), kids]
            if acc:
                node[2].append(None)      # placeholder, named in preorder below
                node.append(acc)
            return node

        mt = spawn(tree)

        def name_new(t):
            if len(t) == 4:
                acc = t.pop()
                t[2][-1] = [fresh[0], post(acc, x), []]
                fresh[0] += 1
            for c in t[2]:
                name_new(c)

        name_new(mt)
        # 3. horizontal merge: older (left) nodes keep states
        def horiz(t, taken):
            t[1] = t[1] - taken
            local = set()
            for c in t[2]:
                horiz(c, taken | local)
                local |= _all_states(c)
            return t

        def _all_states(t):
            return set(t[1])

        horiz(mt, frozenset())
        # 4. remove empty nodes
        removed = []

        def prune(t):
            if not t[1]:
                stack = [t]
                while stack:
                    u = stack.pop()
                    removed.append(u[0])
                    stack.extend(u[2])
                return None
            t[2] = [c for c in (prune(c) for c in t[2]) if c is not None]
            return t

        mt = prune(mt)
        # 5. vertical merge
        marked = []

        def vert(t):
            if t[2]:
                union = set()
                for c in t[2]:
                    union |= c[1]
                if union == set(t[1]):
                    marked.append(t[0])
                    t[2] = []
                    return t
            for c in t[2]:
                vert(c)
            return t

        if mt is not None:
            vert(mt)
        g = min(marked) if marked else None
        bad = min(removed) if removed else None
        if g is not None and (bad is None or g < bad):
            color = 2 * g
        elif bad is not None:
            color = 2 * bad - 1
        else:
            color = 4 * N + 1
        if mt is None:
            return None, color
        # compact names preserving order
        allnames = []

        def coll(t):
            allnames.append(t[0])
            for c in t[2]:
                coll(c)

        coll(mt)
        ren = {old: i + 1 for i, old in enumerate(sorted(allnames))}

        def freeze(t):
            return (ren[t[0]], frozenset(t[1]), tuple(freeze(c) for c in t[2]))

        return freeze(mt), color

    def state_id(key, color):
        sid = intern.get(key)
        if sid is None:
            sid = dpa.add_state(color)
            intern[key] = sid
            trees.append(key)
            limits.check(len(trees), "determinization")
        return sid

    if N is None:
        N = 1 << 40

    def fn(q, x):
        tree, _ = trees[q]
        t2, color = step(tree, x)
        return state_id((t2, color), color)

    init_tree = (1, frozenset(nba.initial), ())
    init_color = 4 * N + 1
    state_id((init_tree, init_color), init_color)
    dpa.initial = 0
    dpa._fn = fn
    dpa.trees = trees
    return dpa


def _count_bound(a: APA) -> int:
    return max(1, a.n * (1 + len({c for c in a.colors if c % 2 == 0})))


def compress_colors(colors: Sequence[int]) -> dict:
    """Order-preserving map onto ``0..k`` (or ``1..k``) that keeps parities and
    merges neighbours of equal parity."""
    out = {}
    cur = None
    for c in sorted(set(colors)):
        if cur is None:
            cur = c % 2
        elif c % 2 != cur % 2:
            cur += 1
        out[c] = cur
    return out


def guess_even_nba(alphabet: Alphabet, initial: Iterable[Hashable], succ: Callable, color: Callable[[Hashable], int],
                   evens: Sequence[int]) -> NBA:
    """Nondeterministic parity to Büchi: a copy ``(s, e)`` promises that colors
    below ``e`` never occur again and ``e`` recurs.  ``succ`` returns an
    iterable of states."""
    evens = sorted(evens)

    def step(state, x):
        s, e = state
        out = []
        for t in succ(s, x):
            c = color(t)
            if e is None:
                out.append((t, None))
                out.extend((t, e2) for e2 in evens if c >= e2)
            elif c >= e:
                out.append((t, e))
        return out

    return NBA(alphabet, [(s, None) for s in initial], step, lambda st: st[1] is not None and color(st[0]) == st[1])


class RunDagDPA:
    """Deterministic automaton over extended letters ``(x, choice)`` accepting
    iff every path of the run DAG fixed by the choices is accepting.

    ``choice`` is a tuple of ``(q, model)`` pairs, one minimal model of
    ``delta(q, x)`` for each state on the current level.  Positional runs
    suffice for alternating parity automata, so guessing a choice per level
    and letting this automaton judge the paths decides membership.
    """

    def __init__(self, a: APA, limits: Limits):
        self.a = a
        odd_shift = sorted({c + 1 for c in a.colors if c % 2 == 1})

        def succ(q, X):
            _, choice = X
            return choice_get(choice, q)

        def choice_get(choice, q):
            for r, m in choice:
                if r == q:
                    return m
            return ()

        # nondeterministic automaton for a bad path (colors shifted by one)
        self.bad = guess_even_nba(a.alphabet, [a.initial], succ, lambda q: a.colors[q] + 1, odd_shift)
        n_bad = a.n * (1 + len(odd_shift))
        self.det_bad = safra_piterman(self.bad, limits, n_hint=n_bad)
        self.good = self.det_bad.complement()
        self._levels: dict = {}
        self._model_memo: dict = {}
        self._models: dict = {}

    def level(self, d: int) -> frozenset:
        """APA states on the current DAG level (the unguessed copies)."""
        r = self._levels.get(d)
        if r is None:
            tree, _ = self.det_bad.trees[d]
            r = frozenset() if tree is None else frozenset(q for q, e in tree[1] if e is None)
            self._levels[d] = r
        return r

    def models(self, q: int, x: int) -> list:
        key = (q, x)
        r = self._models.get(key)
        if r is None:
            r = self.a.store.minimal_models(self.a.delta(q, x), self._model_memo)
            r = [tuple(sorted(m)) for m in r]
            self._models[key] = r
        return r

    def choices(self, d: int, x: int):
        S = sorted(self.level(d))
        opts = [self.models(q, x) for q in S]
        for combo in itertools.product(*opts):
            yield (x, tuple(zip(S, combo)))

    def post(self, d: int, x: int) -> set:
        return {self.good.succ(d, X) for X in self.choices(d, x)}


def alternating_parity_to_nba(a: APA, limits: Limits | None = None, stats: dict | None = None) -> NBA:
    """Alternation removal for arbitrary parity conditions.

    The run-DAG judge is determinized once; guessing a choice per level then
    gives a nondeterministic parity automaton over the original letters, whose
    colors are compressed and turned into a Büchi condition by guessing.
    """
    limits = limits or Limits()
    judge = RunDagDPA(a, limits)
    good = judge.good
    adj: dict = {good.initial: None}
    stack = [good.initial]
    while stack:
        d = stack.pop()
        out = {}
        for x in a.alphabet.letters():
            ts = judge.post(d, x)
            out[x] = ts
            for t in ts:
                if t not in adj:
                    adj[t] = None
                    stack.append(t)
                    limits.check(len(adj), "alternation removal")
        adj[d] = out
    cmap = compress_colors([good.colors[d] for d in adj])
    evens = sorted({c for c in cmap.values() if c % 2 == 0})
    if stats is not None:
        stats["judge_states"] = len(adj)
    nba = guess_even_nba(a.alphabet, [good.initial], lambda d, x: adj[d][x], lambda d: cmap[good.colors[d]], evens)
    nba.size_hint = len(adj) * (1 + len(evens))
    return nba


def apa_to_nba(a: APA, limits: Limits | None = None) -> NBA:
    """Language-equivalent NBA."""
    if a.is_nondeterministic() or a.is_deterministic():
        return nondet_parity_to_buchi(a)
    if parity_shape(a.colors) == "buchi":
        return miyano_hayashi(a, buchi_flags(a), limits)
    return alternating_parity_to_nba(a, limits)


def _determinize(nba: NBA, limits: Limits) -> DPA:
    red = reduce_nba(nba, limits)
    return safra_piterman(red, limits, n_hint=max(1, red.size_hint))


def apa_to_dpa(a: APA, limits: Limits | None = None, stats: dict | None = None) -> DPA:
    """Language-equivalent DPA, built on the fly.

    Deterministic inputs are copied.  Nondeterministic inputs go through a
    least-even-color guess and Safra-Piterman; inputs without disjunctions
    through their dual, complemented at the end.  Alternating inputs with a
    Büchi or co-Büchi shape use Miyano-Hayashi (on the dual for co-Büchi);
    general alternating parity inputs use the run-DAG judge.  Every NBA is
    reduced before Safra-Piterman.
    """
    limits = limits or Limits()
    stats = {} if stats is None else stats
    if a.is_deterministic():
        stats["route"] = "deterministic"
        return _copy_deterministic(a)
    if a.is_universal_branching():
        stats["route"] = "dual-nondeterministic"
        dual = complement_apa(a)
        nba = nondet_parity_to_buchi(dual)
        return _determinize(nba, limits).complement()
    if a.is_nondeterministic():
        stats["route"] = "nondeterministic"
        nba = nondet_parity_to_buchi(a)
        return _determinize(nba, limits)
    shape = parity_shape(a.colors)
    if shape == "buchi":
        stats["route"] = "alternating-buchi"
        nba = miyano_hayashi(a, buchi_flags(a), limits)
        return _determinize(nba, limits)
    if shape == "cobuchi":
        stats["route"] = "alternating-cobuchi"
        dual = complement_apa(a)
        nba = miyano_hayashi(dual, buchi_flags(dual), limits)
        return _determinize(nba, limits).complement()
    stats["route"] = "alternating-parity"
    nba = alternating_parity_to_nba(a, limits, stats)
    return _determinize(nba, limits)


def _copy_deterministic(a: APA) -> DPA:
    st = a.store
    dpa = DPA(a.alphabet, a.initial, list(a.colors))
    sinks = {}

    def sink(kind):
        s = sinks.get(kind)
        if s is None:
            s = dpa.add_state(0 if kind == TT else 1)
            sinks[kind] = s
        return s

    def fn(q, x):
        if q >= a.n:
            return q
        node = a.delta(q, x)
        k = st.kind[node]
        if k == LEAF:
            return st.args[node]
        return sink(k)

    dpa._fn = fn
    return dpa


def dpa_graph(d: DPA, limits: Limits | None = None) -> dict:
    d.explore(limits)
    letters = list(d.alphabet.letters())
    return {q: [(x, d.succ(q, x)) for x in letters] for q in range(d.n)}


def buchi_nonempty(a: APA, limits: Limits | None = None):
    """Emptiness check through the NBA stage; returns a witness lasso or ``None``."""
    limits = limits or Limits()
    return apa_to_nba(a, limits).find_lasso(limits)


def is_empty(a: APA, limits: Limits | None = None) -> tuple[bool, object]:
    """``(True, None)`` if the language is empty, else ``(False, witness)``.

    The witness is a ``(stem, cycle)`` lasso; over a singleton alphabet the
    parity game is solved directly and the witness is ``([], [0])``.
    Co-Büchi-shaped alternating automata are checked on their DPA, which is
    cheaper than the general alternation removal.
    """
    if a.alphabet.size == 1:
        ok, _, _ = singleton_nonempty(a)
        return (not ok), (([], [0]) if ok else None)
    limits = limits or Limits()
    if (not a.is_nondeterministic() and not a.is_deterministic()
            and parity_shape(a.colors) == "cobuchi"):
        d = apa_to_dpa(a, limits)
        w = fair_lasso(dpa_graph(d, limits), [d.initial], lambda q: True, lambda q: d.colors[q], limits)
    else:
        w = buchi_nonempty(a, limits)
    return (w is None), w


def minimize_dpa(d: DPA) -> DPA:
    """Quotient by the coarsest color- and successor-respecting partition."""
    d.explore()
    letters = list(d.alphabet.letters())
    # close under successors of every existing state, reachable or not; copied
    # automata may carry unreachable states whose successors are not built yet
    q = 0
    while q < d.n:
        for x in letters:
            d.succ(q, x)
        q += 1
    block = {q: d.colors[q] for q in range(d.n)}
    while True:
        sig = {q: (block[q],) + tuple(block[d.succ(q, a)] for a in letters) for q in range(d.n)}
        ids: dict = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in range(d.n)}
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    # renumber so that the initial state's block comes first in BFS order
    order = {}
    queue = [block[d.initial]]
    rep = {}
    for q in range(d.n):
        rep.setdefault(block[q], q)
    order[block[d.initial]] = 0
    i = 0
    while i < len(queue):
        b = queue[i]
        i += 1
        for a in letters:
            nb = block[d.succ(rep[b], a)]
            if nb not in order:
                order[nb] = len(order)
                queue.append(nb)
    table = [[order[block[d.succ(rep[b], a)]] for a in letters] for b in queue]
    colors = [d.colors[rep[b]] for b in queue]
    return DPA(d.alphabet, 0, colors, table=table)


# -- dump format ---------------------------------------------------------------------------------

def dump_apa(a: APA, name: str = "") -> str:
    lines = [f"# {name}" if name else "# automaton",
             f"States: {a.n}", f"Start: {a.initial}",
             f"Acceptance: parity min even {len(set(a.colors))}",
             f"Alphabet: vars={','.join(a.alphabet.vars)} |S|={a.alphabet.n_states}",
             "--BODY--"]
    for q in range(a.n):
        lines.append(f"State: {q} color={a.colors[q]}")
        for x in a.alphabet.letters():
            lines.append(f"  [{x}] {a.store.prefix_str(a.delta(q, x))}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"


def dump_dpa(d: DPA, name: str = "") -> str:
    d.explore()
    lines = [f"# {name}" if name else "# automaton",
             f"States: {d.n}", f"Start: {d.initial}",
             f"Acceptance: parity min even {len(set(d.colors))}",
             f"Alphabet: vars={','.join(d.alphabet.vars)} |S|={d.alphabet.n_states}",
             "--BODY--"]
    for q in range(d.n):
        lines.append(f"State: {q} color={d.colors[q]}")
        for x in d.alphabet.letters():
            lines.append(f"  [{x}] {d.succ(q, x)}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"
