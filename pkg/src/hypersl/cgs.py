"""Concurrent game structures (CGS).

States, agents and actions are indexed by integers.  An action profile is a
tuple with one action id per agent, in agent declaration order.  Profiles are
also encoded as integers in radix |actions|, first agent most significant.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

RESERVED_PREFIXES = ("@il", "@act_", "@sub_")


class CGSError(ValueError):
    """Syntax or semantic error in a CGS description."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + msg)


class CGS:
    """An immutable concurrent game structure.

    ``transition`` is either a table ``table[s][profile_index]`` or a callable
    ``f(s, profile_tuple) -> t``.  Callables are memoized per state on first use,
    so huge structures (most of whose states are unreachable) stay cheap.
    """

    def __init__(
        self,
        n_states: int,
        initial: int,
        agents: Sequence[str],
        actions: Sequence[str],
        labels: Sequence[Iterable[str]],
        transition,
        aps: Sequence[str] | None = None,
        state_names: Sequence[str] | None = None,
    ):
        if n_states < 1:
            raise CGSError("a game structure needs at least one state")
        if not agents:
            raise CGSError("a game structure needs at least one agent")
        if not actions:
            raise CGSError("a game structure needs at least one action")
        if not 0 <= initial < n_states:
            raise CGSError(f"initial state {initial} out of range")
        if len(labels) != n_states:
            raise CGSError("labeling must cover every state")
        self.n_states = n_states
        self.initial = initial
        self.agents = tuple(agents)
        self.actions = tuple(actions)
        self.labels = tuple(frozenset(l) for l in labels)
        if aps is None:
            aps = sorted(set().union(*self.labels))
        self.aps = tuple(aps)
        missing = set().union(*self.labels) - set(self.aps)
        if missing:
            raise CGSError(f"undeclared AP(s) in labeling: {sorted(missing)}")
        self.state_names = tuple(state_names) if state_names else tuple(str(i) for i in range(n_states))
        self.n_profiles = len(self.actions) ** len(self.agents)
        self._radix = [len(self.actions) ** (len(self.agents) - 1 - i) for i in range(len(self.agents))]
        if callable(transition):
            self._fn = transition
            self._table: list | None = [None] * n_states
        else:
            if len(transition) != n_states:
                raise CGSError("transition table must have one row per state")
            for s, row in enumerate(transition):
                if len(row) != self.n_profiles:
                    raise CGSError(f"incomplete transition for state {self.state_names[s]}")
                for t in row:
                    if not 0 <= t < n_states:
                        raise CGSError(f"transition target {t} out of range")
            self._fn = None
            self._table = [tuple(row) for row in transition]
        self._sensitive: dict[int, tuple[bool, ...]] = {}

    # -- profiles -----------------------------------------------------------
    def profile_index(self, profile: Sequence[int]) -> int:
        return sum(a * r for a, r in zip(profile, self._radix))

    def profile_tuple(self, index: int) -> tuple[int, ...]:
        out = []
        for r in self._radix:
            out.append(index // r)
            index %= r
        return tuple(out)

    def profiles(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(range(len(self.actions)), repeat=len(self.agents))

    # -- transitions --------------------------------------------------------
    def successors(self, s: int) -> tuple[int, ...]:
        """Successor of ``s`` for every profile index."""
        row = self._table[s]
        if row is None:
            row = tuple(self._fn(s, p) for p in self.profiles())
            for t in row:
                if not 0 <= t < self.n_states:
                    raise CGSError(f"transition target {t} out of range")
            self._table[s] = row
        return row

    def succ(self, s: int, profile: Sequence[int]) -> int:
        return self.successors(s)[self.profile_index(profile)]

    def is_absorbing(self, s: int) -> bool:
        return all(t == s for t in self.successors(s))

    def sensitive_agents(self, s: int) -> tuple[bool, ...]:
        """For each agent, whether its action can change the successor of ``s``."""
        res = self._sensitive.get(s)
        if res is None:
            row = self.successors(s)
            n_act = len(self.actions)
            flags = []
            for i, r in enumerate(self._radix):
                dep = False
                for idx in range(self.n_profiles):
                    a = (idx // r) % n_act
                    if a == 0:
                        base = row[idx]
                        if any(row[idx + b * r] != base for b in range(1, n_act)):
                            dep = True
                            break
                flags.append(dep)
            res = tuple(flags)
            self._sensitive[s] = res
        return res

    def label(self, s: int) -> frozenset[str]:
        return self.labels[s]

    def reachable_states(self, start: int | None = None) -> set[int]:
        start = self.initial if start is None else start
        seen = {start}
        stack = [start]
        while stack:
            s = stack.pop()
            for t in set(self.successors(s)):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def with_labels(self, extra: Mapping[str, Iterable[int]]) -> "CGS":
        """Copy with additional APs; ``extra`` maps each new AP to the states where it holds."""
        labels = [set(l) for l in self.labels]
        for ap, states in extra.items():
            for s in states:
                labels[s].add(ap)
        aps = list(self.aps) + [ap for ap in extra if ap not in self.aps]
        g = CGS.__new__(CGS)
        g.__dict__.update(self.__dict__)
        g.labels = tuple(frozenset(l) for l in labels)
        g.aps = tuple(aps)
        return g

    def with_initial(self, initial: int) -> "CGS":
        g = CGS.__new__(CGS)
        g.__dict__.update(self.__dict__)
        g.initial = initial
        return g

    def with_agents_permuted(self, perm: Sequence[int]) -> "CGS":
        """Reorder agents: new agent ``j`` is old agent ``perm[j]``."""
        old = self
        inv = [0] * len(perm)
        for j, i in enumerate(perm):
            inv[i] = j

        def fn(s, profile):
            return old.succ(s, [profile[inv[i]] for i in range(len(perm))])

        return CGS(self.n_states, self.initial, [self.agents[i] for i in perm], self.actions,
                   self.labels, fn, aps=self.aps, state_names=self.state_names)

    def dumps(self, states: Iterable[int] | None = None) -> str:
        """Serialize in the text format read by :func:`parse_cgs`.

        With ``states`` given, only that (successor-closed) subset is written.
        """
        keep = sorted(range(self.n_states) if states is None else states)
        internal = any(ap.startswith(RESERVED_PREFIXES) for ap in self.aps)
        lines = []
        if internal:
            lines.append("internal: yes")
        lines.append("aps: " + " ".join(self.aps))
        lines.append("agents: " + " ".join(self.agents))
        lines.append("actions: " + " ".join(self.actions))
        for s in keep:
            lab = " ".join(ap for ap in self.aps if ap in self.labels[s])
            init = " init" if s == self.initial else ""
            lines.append(f"state {self.state_names[s]}{init} {{ {lab} }}".replace("{  }", "{ }"))
            row = self.successors(s)
            for idx, p in enumerate(self.profiles()):
                acts = " ".join(self.actions[a] for a in p)
                lines.append(f"  [{acts}] -> {self.state_names[row[idx]]}")
        return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"\s*(->|\[|\]|\{|\}|:|[^\s\[\]{}:]+)")


def _tokens(line: str, lineno: int):
    pos = 0
    out = []
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            break
        if m.group(1) is None:
            break
        out.append((m.group(1), m.start(1) + 1))
        pos = m.end()
        if not line[pos:].strip():
            break
    return out


def parse_cgs(text: str) -> CGS:
    """Parse the line-oriented CGS format."""
    aps = agents = actions = None
    internal = False
    states: list[dict] = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = _tokens(line, lineno)
        head, col = toks[0]
        if head == "internal" and len(toks) >= 2 and toks[1][0] == ":":
            internal = [t for t, _ in toks[2:]] == ["yes"]
            continue
        if head in ("aps", "agents", "actions"):
            if len(toks) < 2 or toks[1][0] != ":":
                raise CGSError(f"expected ':' after '{head}'", lineno, col + len(head))
            names = [t for t, _ in toks[2:]]
            for t, c in toks[2:]:
                if t in ("[", "]", "{", "}", "->", ":"):
                    raise CGSError(f"unexpected '{t}'", lineno, c)
            if len(set(names)) != len(names):
                raise CGSError(f"duplicate name in '{head}'", lineno, col)
            if head == "aps":
                aps = names
            elif head == "agents":
                agents = names
            else:
                actions = names
            continue
        if head == "state":
            if len(toks) < 2:
                raise CGSError("expected state name", lineno, col + 5)
            name, ncol = toks[1]
            rest = toks[2:]
            init = False
            if rest and rest[0][0] == "init":
                init = True
                rest = rest[1:]
            if not rest or rest[0][0] != "{":
                raise CGSError("expected '{' starting the label set", lineno, rest[0][1] if rest else len(line) + 1)
            if rest[-1][0] != "}":
                raise CGSError("expected '}' closing the label set", lineno, len(line) + 1)
            lab = rest[1:-1]
            for t, c in lab:
                if t in ("[", "]", "{", "}", "->", ":"):
                    raise CGSError(f"unexpected '{t}' in label set", lineno, c)
            cur = {"name": name, "init": init, "labels": [(t, c) for t, c in lab], "line": lineno,
                   "col": ncol, "edges": []}
            states.append(cur)
            continue
        if head == "[":
            if cur is None:
                raise CGSError("transition outside of a state block", lineno, col)
            try:
                close = [t for t, _ in toks].index("]")
            except ValueError:
                raise CGSError("expected ']'", lineno, len(line) + 1) from None
            acts = toks[1:close]
            rest = toks[close + 1:]
            if len(rest) != 2 or rest[0][0] != "->":
                raise CGSError("expected '-> <state>'", lineno, rest[0][1] if rest else len(line) + 1)
            cur["edges"].append((acts, rest[1], lineno))
            continue
        raise CGSError(f"unexpected '{head}'", lineno, col)

    if aps is None or agents is None or actions is None:
        raise CGSError("missing 'aps:', 'agents:' or 'actions:' header")
    if not internal:
        for ap in aps:
            if ap.startswith(RESERVED_PREFIXES):
                raise CGSError(f"AP '{ap}' uses a reserved prefix")
    if not states:
        raise CGSError("no states declared")
    index = {}
    for i, st in enumerate(states):
        if st["name"] in index:
            raise CGSError(f"duplicate state '{st['name']}'", st["line"], st["col"])
        index[st["name"]] = i
    inits = [st for st in states if st["init"]]
    if len(inits) != 1:
        raise CGSError("exactly one state must be marked 'init'")
    ap_set = set(aps)
    act_index = {a: i for i, a in enumerate(actions)}
    n_prof = len(actions) ** len(agents)
    radix = [len(actions) ** (len(agents) - 1 - i) for i in range(len(agents))]
    table = []
    labels = []
    for st in states:
        for t, c in st["labels"]:
            if t not in ap_set:
                raise CGSError(f"undeclared AP '{t}'", st["line"], c)
        labels.append({t for t, _ in st["labels"]})
        row = [None] * n_prof
        for acts, (tgt, tcol), lineno in st["edges"]:
            if len(acts) != len(agents):
                raise CGSError(f"profile has {len(acts)} actions, expected {len(agents)}", lineno, acts[0][1] if acts else 1)
            idx = 0
            for (a, c), r in zip(acts, radix):
                if a not in act_index:
                    raise CGSError(f"undeclared action '{a}'", lineno, c)
                idx += act_index[a] * r
            if row[idx] is not None:
                raise CGSError("duplicate transition entry", lineno, acts[0][1])
            if tgt not in index:
                raise CGSError(f"undeclared state '{tgt}'", lineno, tcol)
            row[idx] = index[tgt]
        if any(t is None for t in row):
            raise CGSError(f"incomplete transition for state '{st['name']}'", st["line"], st["col"])
        table.append(row)
    return CGS(len(states), index[inits[0]["name"]], agents, actions, labels, table,
               aps=aps, state_names=[st["name"] for st in states])


# -- plays ---------------------------------------------------------------------

def play(g: CGS, start: int, profile: Sequence, horizon: int) -> list[int]:
    """The play of length ``horizon + 1`` under one finite-memory strategy per agent.

    A strategy is any object with ``initial``, ``action(mem, state)`` and
    ``update(mem, state)``.
    """
    if len(profile) != len(g.agents):
        raise ValueError("need exactly one strategy per agent")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    mems = [f.initial for f in profile]
    path = [start]
    s = start
    for _ in range(horizon):
        acts = [f.action(m, s) for f, m in zip(profile, mems)]
        mems = [f.update(m, s) for f, m in zip(profile, mems)]
        s = g.succ(s, acts)
        path.append(s)
    return path


# -- observations ----------------------------------------------------------------

@dataclass(frozen=True)
class ObservationFamily:
    """Named equivalence relations on states (pairs of state ids)."""

    relations: Mapping[str, frozenset]

    def __post_init__(self):
        rels = {}
        for name, rel in self.relations.items():
            rel = frozenset((int(a), int(b)) for a, b in rel)
            dom = {a for a, _ in rel} | {b for _, b in rel}
            for s in dom:
                if (s, s) not in rel:
                    raise ValueError(f"observation '{name}' is not reflexive on {s}")
            for a, b in rel:
                if (b, a) not in rel:
                    raise ValueError(f"observation '{name}' is not symmetric")
            succ: dict[int, set] = {}
            for a, b in rel:
                succ.setdefault(a, set()).add(b)
            for a, b in rel:
                if not succ[b] <= succ[a]:
                    raise ValueError(f"observation '{name}' is not transitive")
            rels[name] = rel
        object.__setattr__(self, "relations", rels)

    @classmethod
    def from_partitions(cls, parts: Mapping[str, Iterable[Iterable[int]]]) -> "ObservationFamily":
        rels = {}
        for name, blocks in parts.items():
            rels[name] = frozenset((a, b) for blk in blocks for a in blk for b in blk)
        return cls(rels)

    def related(self, name: str, s: int, t: int) -> bool:
        return (s, t) in self.relations[name]


def parse_observations(text: str) -> ObservationFamily:
    """Lines ``obs <name>: 0 1 | 2`` give each observation as a partition of states."""
    parts = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"obs\s+(\S+)\s*:\s*(.*)", line)
        if not m:
            raise CGSError("expected 'obs <name>: <blocks>'", lineno, 1)
        blocks = []
        for blk in m.group(2).split("|"):
            try:
                blocks.append([int(x) for x in blk.split()])
            except ValueError:
                raise CGSError("state ids must be integers", lineno, 1) from None
        parts[m.group(1)] = blocks
    return ObservationFamily.from_partitions(parts)


# -- transformations ------------------------------------------------------------

def is_injectively_labeled(g: CGS) -> bool:
    return len(set(g.labels)) == g.n_states


def make_injectively_labeled(g: CGS) -> CGS:
    """Add ``@il<k>`` bits so that no two states share a label."""
    groups: dict[frozenset, list[int]] = {}
    for s in range(g.n_states):
        groups.setdefault(g.labels[s], []).append(s)
    width = max(len(v) for v in groups.values())
    bits = math.ceil(math.log2(width)) if width > 1 else 0
    extra: dict[str, list[int]] = {f"@il{b}": [] for b in range(bits)}
    for members in groups.values():
        for k, s in enumerate(members):
            for b in range(bits):
                if (k >> b) & 1:
                    extra[f"@il{b}"].append(s)
    return g.with_labels(extra)


def act_ap(agent_index: int, action: str) -> str:
    return f"@act_{agent_index}_{action}"


def make_action_recording(g: CGS, obs: ObservationFamily | None = None):
    """Record the last action profile in the state.

    State 0 of the result is a fresh copy of the initial state with no
    ``@act`` labels; state ``1 + s * |profiles| + p`` is ``(s, p)``.
    """
    npf = g.n_profiles
    n = 1 + g.n_states * npf
    profiles = list(g.profiles())
    act_aps = [act_ap(i, a) for i in range(len(g.agents)) for a in g.actions]

    def orig(x: int) -> int:
        return g.initial if x == 0 else (x - 1) // npf

    labels = [set(g.labels[g.initial])]
    names = [f"{g.state_names[g.initial]}@init"]
    for s in range(g.n_states):
        for p, prof in enumerate(profiles):
            lab = set(g.labels[s])
            lab.update(act_ap(i, g.actions[a]) for i, a in enumerate(prof))
            labels.append(lab)
            names.append(f"{g.state_names[s]}@{p}")

    def fn(x, prof):
        s = orig(x)
        return 1 + g.succ(s, prof) * npf + g.profile_index(prof)

    h = CGS(n, 0, g.agents, g.actions, labels, fn, aps=list(g.aps) + act_aps, state_names=names)
    if obs is None:
        return h, None
    rels = {}
    for name, rel in obs.relations.items():
        rels[name] = frozenset((x, y) for x in range(n) for y in range(n) if (orig(x), orig(y)) in rel)
    return h, ObservationFamily(rels)


def original_state_of_recording(g: CGS, x: int) -> int:
    """Map a state of ``make_action_recording(g)`` back to the state of ``g``."""
    return g.initial if x == 0 else (x - 1) // g.n_profiles
