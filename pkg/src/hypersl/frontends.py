"""Translations from SL, HyperATL* (with strategy sharing) and SL with
imperfect information into HyperSL.

Boolean combinations of state formulas are moved into a multi-path body:
the quantifier prefixes of the operands are concatenated (after renaming
apart) and each goal gets its own path variable.  Goals with the same
strategy profile share one path.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .cgs import CGS, ObservationFamily, act_ap, make_action_recording, make_injectively_labeled
from .formula import (And, Atom, Const, FALSE, FormulaError, Nested, Next, Not, PathFormula, StateFormula, TRUE,
                      Until, conj, disj, eventually, globally, iff, implies, map_path, parse_path_formula, release,
                      subformulas, validate, weak_until)


# -- SL syntax ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SLQuant:
    quant: str          # "exists" | "forall"
    var: str
    body: object
    obs: str | None = None     # observation name for imperfect-information quantifiers


@dataclass(frozen=True)
class SLBind:
    agent: int          # 1-based
    var: str
    body: object


@dataclass(frozen=True)
class SLFormula:
    """An SL formula: quantifiers, bindings ``(i, x)``, boolean combinations and
    LTL goals whose atoms carry no path subscript (stored with path ``""``)."""

    root: object
    n_agents: int

    def __str__(self):
        return print_sl(self.root)


@dataclass(frozen=True)
class SLiiInstance:
    formula: SLFormula
    observations: ObservationFamily


_SL_TOK = re.compile(r"""
    (?P<ws>\s+)
  | (?P<str>"[^"]*")
  | (?P<num>\d+)
  | (?P<op><->|->|[!&|()\[\]{}.,^])
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<bad>.)
""", re.X)

_SL_KEYWORDS = {"exists", "forall", "true", "false", "X", "U", "W", "R", "F", "G"}


class _SLParser:
    def __init__(self, text: str):
        self.toks = []
        for m in _SL_TOK.finditer(text):
            if m.lastgroup == "ws":
                continue
            if m.lastgroup == "bad":
                raise FormulaError(f"unexpected character {m.group()!r}", m.start())
            self.toks.append((m.lastgroup, m.group(), m.start()))
        self.toks.append(("eof", "", len(text)))
        self.i = 0
        self.max_agent = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.next()
        if t[1] != val:
            raise FormulaError(f"expected '{val}', found '{t[1] or 'end of input'}'", t[2])

    def ident(self):
        t = self.next()
        if t[0] != "id" or t[1] in _SL_KEYWORDS:
            raise FormulaError(f"expected identifier, found '{t[1] or 'end of input'}'", t[2])
        return t[1]

    def formula(self):
        left = self.disjunction()
        t = self.peek()[1]
        if t == "->":
            self.next()
            return implies(left, self.formula())
        if t == "<->":
            self.next()
            return iff(left, self.formula())
        return left

    def disjunction(self):
        out = self.conjunction()
        while self.peek()[1] == "|":
            self.next()
            out = disj(out, self.conjunction())
        return out

    def conjunction(self):
        out = self.binary()
        while self.peek()[1] == "&":
            self.next()
            out = And(out, self.binary())
        return out

    def binary(self):
        left = self.unary()
        op = self.peek()[1]
        if op in ("U", "W", "R"):
            self.next()
            right = self.binary()
            return {"U": Until, "W": weak_until, "R": release}[op](left, right)
        return left

    def unary(self):
        kind, val, pos = self.peek()
        if val in ("exists", "forall"):
            self.next()
            vars_ = [self.annotated()]
            while self.peek()[1] == ",":
                self.next()
                vars_.append(self.annotated())
            self.expect(".")
            body = self.formula()
            for x, o in reversed(vars_):
                body = SLQuant(val, x, body, o)
            return body
        if val == "(" and self.peek(1)[0] == "num" and self.peek(2)[1] == ",":
            self.next()
            agent = int(self.next()[1])
            if agent < 1:
                raise FormulaError("agents are numbered from 1", pos)
            self.max_agent = max(self.max_agent, agent)
            self.expect(",")
            x = self.ident()
            self.expect(")")
            return SLBind(agent, x, self.unary_or_quant())
        if val == "!":
            self.next()
            return Not(self.unary())
        if val == "X":
            self.next()
            return Next(self.unary())
        if val == "F":
            self.next()
            return eventually(self.unary())
        if val == "G":
            self.next()
            return globally(self.unary())
        if val in ("true", "false"):
            self.next()
            return TRUE if val == "true" else FALSE
        if val == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "str":
            self.next()
            return Atom(val[1:-1], "")
        if val == "{":
            self.next()
            inner = self.formula()
            self.expect("}")
            return Nested(inner, "")
        raise FormulaError(f"unexpected '{val or 'end of input'}'", pos)

    def unary_or_quant(self):
        # a binding scopes over the whole remaining formula
        return self.formula()

    def annotated(self):
        x = self.ident()
        if self.peek()[1] == "^":
            self.next()
            return x, self.ident()
        return x, None


def parse_sl(text: str, n_agents: int | None = None) -> SLFormula:
    """Parse SL: ``exists x. forall y. (1, x) (2, y) G F "a"``.

    Quantified variables may carry an observation, ``exists x^o.``.  The
    number of agents defaults to the largest bound agent index.
    """
    p = _SLParser(text)
    root = p.formula()
    t = p.peek()
    if t[0] != "eof":
        raise FormulaError(f"trailing input '{t[1]}'", t[2])
    return SLFormula(root, n_agents or max(1, p.max_agent))


def print_sl(node) -> str:
    if isinstance(node, SLQuant):
        o = f"^{node.obs}" if node.obs else ""
        return f"{node.quant} {node.var}{o}. {print_sl(node.body)}"
    if isinstance(node, SLBind):
        return f"({node.agent}, {node.var}) {print_sl(node.body)}"
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Atom):
        return f'"{node.ap}"'
    if isinstance(node, Nested):
        return "{ " + print_sl(node.formula) + " }"
    if isinstance(node, Not):
        return f"!({print_sl(node.arg)})"
    if isinstance(node, Next):
        return f"X ({print_sl(node.arg)})"
    if isinstance(node, And):
        return f"({print_sl(node.left)}) & ({print_sl(node.right)})"
    return f"({print_sl(node.left)}) U ({print_sl(node.right)})"


def _has_state(node) -> bool:
    return any(isinstance(n, (SLQuant, SLBind)) for n in subformulas(node))


# -- shared prenexing machinery ----------------------------------------------------------------

_FLIP = {"exists": "forall", "forall": "exists"}


class _Translator:
    """Builds one prenex HyperSL formula; owns the name supply and the path table."""

    def __init__(self, n_agents: int, slii: "_SLiiContext | None" = None):
        self.n = n_agents
        self.used: set[str] = set()
        self.path_of: dict[tuple, str] = {}
        self.order: list[tuple] = []
        self.slii = slii

    def fresh(self, x: str) -> str:
        if x not in self.used:
            self.used.add(x)
            return x
        k = 1
        while f"{x}#{k}" in self.used:
            k += 1
        self.used.add(f"{x}#{k}")
        return f"{x}#{k}"

    def path(self, profile: tuple) -> str:
        p = self.path_of.get(profile)
        if p is None:
            p = f"@p{len(self.order)}"
            self.path_of[profile] = p
            self.order.append(profile)
        return p

    def goal(self, node, env: Mapping[int, str]) -> PathFormula:
        missing = [i for i in range(1, self.n + 1) if i not in env]
        if missing:
            raise FormulaError(f"agent {missing[0]} is unbound when a path formula is reached")
        p = self.path(tuple(env[i] for i in range(1, self.n + 1)))

        def fn(a):
            if isinstance(a, Atom):
                return Atom(a.ap, p)
            return Nested(self.closed(a.formula), p)

        return map_path(node, fn)

    def closed(self, node) -> StateFormula:
        sub = _Translator(self.n, self.slii)
        return sub.finish(*sub.tr(node, {}, {}))

    def tr(self, node, env: dict, scope: dict):
        if not _has_state(node):
            return [], self.goal(node, env)
        if isinstance(node, SLQuant):
            name = self.fresh(node.var)
            prefix, body = self.tr(node.body, env, {**scope, node.var: name})
            if node.obs is None:
                return [(node.quant, name)] + prefix, body
            if self.slii is None:
                raise FormulaError(f"observation annotation on '{node.var}' outside an SLii translation")
            gp, gbody = self.slii.guard(self, name, node.obs, _bound_agents(node.body, node.var))
            if node.quant == "exists":
                return [("exists", name)] + gp + prefix, And(gbody, body)
            return ([("forall", name)] + [(_FLIP[q], y) for q, y in gp] + prefix, disj(Not(gbody), body))
        if isinstance(node, SLBind):
            if node.var not in scope:
                raise FormulaError(f"strategy variable '{node.var}' is bound to agent {node.agent} but not quantified")
            if node.agent > self.n:
                raise FormulaError(f"agent {node.agent} does not exist (there are {self.n})")
            return self.tr(node.body, {**env, node.agent: scope[node.var]}, scope)
        if isinstance(node, Not):
            prefix, body = self.tr(node.arg, env, scope)
            return [(_FLIP[q], x) for q, x in prefix], Not(body)
        if isinstance(node, And):
            p1, b1 = self.tr(node.left, env, scope)
            p2, b2 = self.tr(node.right, env, scope)
            return p1 + p2, And(b1, b2)
        raise FormulaError("agent bindings or quantifiers under a temporal operator are not supported")

    def finish(self, prefix: list, body: PathFormula) -> StateFormula:
        pos = {x: k for k, (_, x) in enumerate(prefix)}
        # paths ordered by their earliest quantified variable
        order = sorted(range(len(self.order)), key=lambda j: (min(pos[x] for x in self.order[j]), j))
        names = {}
        for k, j in enumerate(order):
            names[self.path_of[self.order[j]]] = "pi" if len(order) == 1 else f"pi{k + 1}"
        owner = {}
        for k, j in enumerate(order):
            for x in self.order[j]:
                owner.setdefault(x, k)
        prefix = _sort_runs(prefix, owner)
        body = map_path(body, lambda a: (Atom(a.ap, names[a.path]) if isinstance(a, Atom)
                                         else Nested(a.formula, names[a.path])))
        bindings = tuple((names[self.path_of[self.order[j]]], self.order[j]) for j in order)
        f = StateFormula(tuple(prefix), body, bindings)
        validate(f)
        return f


def _bound_agents(node, var: str) -> set:
    """Agents that ``var`` is bound to inside ``node`` (up to rebinding of the name)."""
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, SLQuant):
            if n.var != var:
                stack.append(n.body)
        elif isinstance(n, SLBind):
            if n.var == var:
                out.add(n.agent)
            stack.append(n.body)
        elif isinstance(n, (Not, Next)):
            stack.append(n.arg)
        elif isinstance(n, (And, Until)):
            stack.extend((n.left, n.right))
    return out


def _sort_runs(prefix: list, owner: dict) -> list:
    """Reorder maximal runs of equal quantifiers by the path that uses each
    variable; same-polarity quantifiers commute."""
    out = []
    k = 0
    while k < len(prefix):
        j = k
        while j < len(prefix) and prefix[j][0] == prefix[k][0]:
            j += 1
        run = prefix[k:j]
        run.sort(key=lambda qx: owner.get(qx[1], -1))
        out.extend(run)
        k = j
    return out


def translate_sl(f: SLFormula | str, n_agents: int | None = None) -> StateFormula:
    """SL to HyperSL by tracking the strategy bound to each agent."""
    if isinstance(f, str):
        f = parse_sl(f, n_agents)
    t = _Translator(n_agents or f.n_agents)
    return t.finish(*t.tr(f.root, {}, {}))


def erase_observations(node):
    """The same SL formula with every observation annotation dropped."""
    if isinstance(node, SLFormula):
        return SLFormula(erase_observations(node.root), node.n_agents)
    if isinstance(node, SLQuant):
        return SLQuant(node.quant, node.var, erase_observations(node.body))
    if isinstance(node, SLBind):
        return SLBind(node.agent, node.var, erase_observations(node.body))
    if isinstance(node, Not):
        return Not(erase_observations(node.arg))
    if isinstance(node, Next):
        return Next(erase_observations(node.arg))
    if isinstance(node, And):
        return And(erase_observations(node.left), erase_observations(node.right))
    if isinstance(node, Until):
        return Until(erase_observations(node.left), erase_observations(node.right))
    if isinstance(node, Nested):
        return Nested(erase_observations(node.formula), node.path)
    return node


# -- HyperATL* -------------------------------------------------------------------------------

@dataclass(frozen=True)
class ATLQuant:
    strategic: bool             # True for <<A>>, False for [[A]]
    coalition: frozenset        # 1-based agent indices
    path: str
    share: tuple = ()           # groups of agents playing one strategy


@dataclass(frozen=True)
class HyperATLFormula:
    quants: tuple
    body: PathFormula
    n_agents: int

    def __str__(self):
        parts = []
        for q in self.quants:
            o, c = ("<<", ">>") if q.strategic else ("[[", "]]")
            share = "".join("; share {" + ",".join(map(str, sorted(g))) + "}" for g in q.share)
            parts.append(f"{o}{{{','.join(map(str, sorted(q.coalition)))}}}{share}{c} {q.path}. ")
        from .formula import print_path
        return "".join(parts) + print_path(self.body)


_ATL_Q = re.compile(r"\s*(<<|\[\[)\s*\{([^}]*)\}((?:\s*;\s*share\s*\{[^}]*\})*)\s*(>>|\]\])\s*"
                    r"([A-Za-z_][A-Za-z0-9_]*)\s*\.")
_SHARE = re.compile(r"share\s*\{([^}]*)\}")


def _agents(text: str, where: int) -> frozenset:
    out = set()
    for tok in text.replace(",", " ").split():
        if not tok.isdigit() or int(tok) < 1:
            raise FormulaError(f"bad agent index '{tok}'", where)
        out.add(int(tok))
    return frozenset(out)


def parse_hyperatl(text: str, n_agents: int | None = None) -> HyperATLFormula:
    """Parse ``<<{1,2}>> p1. [[{3}]] p2. ("a"_p1 U "b"_p2)``.

    A quantifier may list sharing groups: ``<<{1,2}; share {1,2}>> p.``.
    """
    pos = 0
    quants = []
    top = 0
    while True:
        m = _ATL_Q.match(text, pos)
        if not m:
            break
        open_, coal, shares, close, path = m.groups()
        if (open_ == "<<") != (close == ">>"):
            raise FormulaError("mismatched quantifier brackets", m.start())
        c = _agents(coal, m.start())
        groups = tuple(_agents(g, m.start()) for g in _SHARE.findall(shares))
        top = max([top, *c, *(a for g in groups for a in g)])
        quants.append(ATLQuant(open_ == "<<", c, path, groups))
        pos = m.end()
    if not quants:
        raise FormulaError("expected a quantifier '<<{...}>> p.' or '[[{...}]] p.'", 0)
    body = parse_path_formula(text[pos:])
    n = n_agents or max(1, top)
    f = HyperATLFormula(tuple(quants), body, n)
    _check_atl(f)
    return f


def _check_atl(f: HyperATLFormula) -> None:
    agents = set(range(1, f.n_agents + 1))
    paths = set()
    for q in f.quants:
        if not q.coalition <= agents:
            raise FormulaError(f"coalition {sorted(q.coalition)} mentions undeclared agents")
        if q.path in paths:
            raise FormulaError(f"path variable '{q.path}' quantified twice")
        paths.add(q.path)
        for g in q.share:
            if not g <= agents:
                raise FormulaError(f"sharing group {sorted(g)} mentions undeclared agents")
            if g & q.coalition and g - q.coalition:
                raise FormulaError(f"sharing group {sorted(g)} mixes coalition and opponents")
    from .formula import free_paths
    free = free_paths(f.body) - paths
    if free:
        raise FormulaError(f"unbound path variable '{sorted(free)[0]}'")


_BASES = "xyzwvutsrqponmlkjihgfedcba"


def _base(k: int) -> str:
    return _BASES[k] if k < len(_BASES) else f"x{k}_"


def translate_hyperatl(f: HyperATLFormula | str, sharing: Mapping[str, Iterable[Iterable[int]]] | None = None,
                       n_agents: int | None = None) -> StateFormula:
    """Each ``<<A>> p`` becomes exists over A then forall over the other
    agents, building ``p``; ``[[A]] p`` is the dual.  Agents in one sharing
    group use one variable (named after the smallest agent in the group).

    ``sharing`` adds groups per path on top of those written in the formula.
    """
    if isinstance(f, str):
        f = parse_hyperatl(f, n_agents)
    if sharing:
        qs = []
        for q in f.quants:
            extra = tuple(frozenset(g) for g in sharing.get(q.path, ()))
            qs.append(ATLQuant(q.strategic, q.coalition, q.path, q.share + extra))
        f = HyperATLFormula(tuple(qs), f.body, f.n_agents)
        _check_atl(f)
    n = f.n_agents
    prefix = []
    bindings = []
    for k, q in enumerate(f.quants):
        rep = {i: i for i in range(1, n + 1)}
        for g in q.share:
            r = min(g)
            for i in g:
                rep[i] = min(rep[i], r)
        # union of overlapping groups
        changed = True
        while changed:
            changed = False
            for g in q.share:
                r = min(rep[i] for i in g)
                for i in g:
                    if rep[i] != r:
                        rep[i] = r
                        changed = True
        b = _base(k)
        var = {i: f"{b}{rep[i]}" for i in range(1, n + 1)}
        mine = [i for i in range(1, n + 1) if i in q.coalition and rep[i] == i]
        theirs = [i for i in range(1, n + 1) if i not in q.coalition and rep[i] == i]
        first, second = ("exists", "forall") if q.strategic else ("forall", "exists")
        prefix += [(first, var[i]) for i in mine] + [(second, var[i]) for i in theirs]
        bindings.append((q.path, tuple(var[i] for i in range(1, n + 1))))
    out = StateFormula(tuple(prefix), f.body, tuple(bindings))
    validate(out)
    return out


# -- SL with imperfect information ---------------------------------------------------------------

class _SLiiContext:
    def __init__(self, g: CGS, obs: ObservationFamily, states=None):
        self.g = g
        self.obs = obs
        self.states = set(range(g.n_states)) if states is None else set(states)

    def state_literal(self, s: int, p: str) -> PathFormula:
        g = self.g
        lits = [Atom(a, p) if a in g.labels[s] else Not(Atom(a, p)) for a in g.aps]
        return conj(*lits)

    def ind(self, o: str, p1: str, p2: str) -> PathFormula:
        if o not in self.obs.relations:
            raise FormulaError(f"observation '{o}' is not declared")
        # one disjunct per equivalence class instead of one per related pair
        classes = {}
        for s, t in self.obs.relations[o]:
            if s in self.states and t in self.states:
                classes.setdefault(s, set()).add(t)
        blocks = sorted({tuple(sorted(c)) for c in classes.values()})
        return disj(*[And(disj(*[self.state_literal(s, p1) for s in b]), disj(*[self.state_literal(s, p2) for s in b]))
                      for b in blocks])

    def guard(self, tr: _Translator, x: str, o: str, agents):
        """``(prefix, body)`` of the o-strategy constraint on ``x``: forall over
        fresh ``y``/``y'`` per other agent and one pair of paths per agent in
        ``agents``.

        Only the agents ``x`` is bound to matter: the formula never looks at
        ``x`` on histories where it plays for anyone else.
        """
        n = tr.n
        agents = sorted(agents)
        others = [j for j in range(1, n + 1) if any(j != i for i in agents)]
        ys = {j: tr.fresh(f"{x}_y{j}") for j in others}
        zs = {j: tr.fresh(f"{x}_z{j}") for j in others}
        prefix = [("forall", ys[j]) for j in others] + [("forall", zs[j]) for j in others]
        parts = []
        for i in agents:
            p1 = tr.path(tuple(x if j == i else ys[j] for j in range(1, n + 1)))
            p2 = tr.path(tuple(x if j == i else zs[j] for j in range(1, n + 1)))
            same = conj(*[iff(Atom(act_ap(i - 1, a), p1), Atom(act_ap(i - 1, a), p2)) for a in self.g.actions])
            parts.append(weak_until(Next(same), Not(self.ind(o, p1, p2))))
        return prefix, conj(*parts)


def slii_model(g: CGS, obs: ObservationFamily) -> tuple[CGS, ObservationFamily]:
    """Action recording first, then injective labeling; observations lifted."""
    h, lifted = make_action_recording(g, obs)
    return make_injectively_labeled(h), lifted


def translate_slii(inst: SLiiInstance, g: CGS) -> tuple[CGS, StateFormula]:
    """Model and formula of an equivalent HyperSL instance.

    Every ``exists x^o`` / ``forall x^o`` is guarded by a formula saying that
    ``x`` plays the same action on o-indistinguishable reachable histories.
    The guard uses ``x`` on several paths, so the result is usually outside
    the SPE fragment.
    """
    names = _observations_used(inst.formula.root)
    for o in sorted(names):
        if o not in inst.observations.relations:
            raise FormulaError(f"observation '{o}' is not declared")
    g2, obs2 = slii_model(g, inst.observations)
    ctx = _SLiiContext(g2, obs2, g2.reachable_states())
    t = _Translator(inst.formula.n_agents, ctx)
    return g2, t.finish(*t.tr(inst.formula.root, {}, {}))


def _observations_used(node) -> set:
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, SLQuant):
            if n.obs:
                out.add(n.obs)
            stack.append(n.body)
        elif isinstance(n, SLBind):
            stack.append(n.body)
        elif isinstance(n, (Not, Next)):
            stack.append(n.arg)
        elif isinstance(n, (And, Until)):
            stack += [n.left, n.right]
        elif isinstance(n, Nested):
            stack.append(n.formula)
    return out


def ind_formula(g: CGS, obs: ObservationFamily, o: str, p1: str = "pi1", p2: str = "pi2") -> PathFormula:
    """``ind_o(p1, p2)``: the first states of the two paths are o-related
    (exact on injectively labeled structures)."""
    return _SLiiContext(g, obs).ind(o, p1, p2)
