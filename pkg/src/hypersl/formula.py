"""HyperSL syntax: AST, parser, printer and syntactic analyses.

Path formulas are stored over the primitive set {atom, nested, true, not, and,
X, U}.  Everything else is desugared by the parser and by the smart
constructors below.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Union


class FormulaError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        self.pos = pos
        super().__init__(msg if pos is None else f"at position {pos}: {msg}")


# -- path formulas --------------------------------------------------------------

def _cached_hash(self):
    # formulas are deep trees used as dict keys; hashing them anew each time is quadratic
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, k) for k in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
    return h


@dataclass(frozen=True)
class Atom:
    ap: str
    path: str

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Nested:
    formula: "StateFormula"
    path: str

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Const:
    value: bool

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Not:
    arg: "PathFormula"

    __hash__ = _cached_hash


@dataclass(frozen=True)
class And:
    left: "PathFormula"
    right: "PathFormula"

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Next:
    arg: "PathFormula"

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Until:
    left: "PathFormula"
    right: "PathFormula"

    __hash__ = _cached_hash


PathFormula = Union[Atom, Nested, Const, Not, And, Next, Until]
TRUE = Const(True)
FALSE = Const(False)


def neg(a):
    return Not(a)


def conj(*args):
    args = list(args)
    if not args:
        return TRUE
    out = args[-1]
    for a in reversed(args[:-1]):
        out = And(a, out)
    return out


def disj(*args):
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Not(conj(*[Not(a) for a in args]))


def implies(a, b):
    return disj(Not(a), b)


def iff(a, b):
    return conj(implies(a, b), implies(b, a))


def eventually(a):
    return Until(TRUE, a)


def globally(a):
    return Not(Until(TRUE, Not(a)))


def release(a, b):
    return Not(Until(Not(a), Not(b)))


def weak_until(a, b):
    return disj(Until(a, b), globally(a))


# -- state formulas ------------------------------------------------------------

@dataclass(frozen=True)
class StateFormula:
    """Quantifier prefix, path-formula body and binding list.

    ``prefix`` is a tuple of ``("forall"|"exists", var)``; ``bindings`` is a
    tuple of ``(path, (var per agent, ...))``.
    """

    prefix: tuple
    body: PathFormula
    bindings: tuple

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.bindings)

    def profile(self, path: str) -> tuple[str, ...]:
        for p, prof in self.bindings:
            if p == path:
                return prof
        raise KeyError(path)

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class NotSPE:
    """Classification result: the prefix cannot be split into path blocks."""

    witness: str
    reason: str = ""

    def __bool__(self):
        return False


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple          # tuple of tuples of (q, var)
    paths: tuple           # path variable constructed by each block
    profiles: tuple        # profile of each path

    @property
    def rank(self) -> int:
        return len(self.blocks)


# -- traversal helpers ---------------------------------------------------------

def subformulas(f: PathFormula):
    """Post-order iteration over the path formula (nested bodies not entered)."""
    stack = [(f, False)]
    while stack:
        node, done = stack.pop()
        if done:
            yield node
            continue
        stack.append((node, True))
        if isinstance(node, (Not, Next)):
            stack.append((node.arg, False))
        elif isinstance(node, (And, Until)):
            stack.append((node.right, False))
            stack.append((node.left, False))


def size(f: PathFormula) -> int:
    return sum(1 for _ in subformulas(f))


def free_paths(f: PathFormula) -> set[str]:
    out = set()
    for n in subformulas(f):
        if isinstance(n, (Atom, Nested)):
            out.add(n.path)
    return out


def nested_count(f) -> int:
    """Number of nested state formulas, at any depth."""
    if isinstance(f, StateFormula):
        return nested_count(f.body)
    total = 0
    for n in subformulas(f):
        if isinstance(n, Nested):
            total += 1 + nested_count(n.formula)
    return total


def map_path(f: PathFormula, fn: Callable) -> PathFormula:
    """Rebuild bottom-up, applying ``fn`` to atoms and nested formulas."""
    memo = {}
    for n in subformulas(f):
        if n in memo:
            continue
        if isinstance(n, (Atom, Nested)):
            memo[n] = fn(n)
        elif isinstance(n, Const):
            memo[n] = n
        elif isinstance(n, Not):
            memo[n] = Not(memo[n.arg])
        elif isinstance(n, Next):
            memo[n] = Next(memo[n.arg])
        elif isinstance(n, And):
            memo[n] = And(memo[n.left], memo[n.right])
        else:
            memo[n] = Until(memo[n.left], memo[n.right])
    return memo[f]


def rename_paths(f: PathFormula, mapping: dict) -> PathFormula:
    def fn(n):
        if isinstance(n, Atom):
            return Atom(n.ap, mapping.get(n.path, n.path))
        return Nested(n.formula, mapping.get(n.path, n.path))

    return map_path(f, fn)


def dual(f: StateFormula) -> StateFormula:
    """Flip every quantifier and negate the body (semantic negation)."""
    flip = {"forall": "exists", "exists": "forall"}
    return StateFormula(tuple((flip[q], x) for q, x in f.prefix), Not(f.body), f.bindings)


# -- validation ----------------------------------------------------------------

def validate(f: StateFormula) -> None:
    if not f.bindings:
        raise FormulaError("a binding list with at least one path is required")
    names = [x for _, x in f.prefix]
    seen = set()
    for x in names:
        if x in seen:
            raise FormulaError(f"strategy variable '{x}' quantified twice in one prefix")
        seen.add(x)
    bound_paths = set()
    for p, prof in f.bindings:
        if p in bound_paths:
            raise FormulaError(f"path variable '{p}' bound twice")
        bound_paths.add(p)
        if not prof:
            raise FormulaError(f"empty strategy profile for path '{p}'")
        for x in prof:
            if x not in seen:
                raise FormulaError(f"unquantified strategy variable '{x}'")
    for p in free_paths(f.body):
        if p not in bound_paths:
            raise FormulaError(f"unbound path variable '{p}'")
    for n in subformulas(f.body):
        if isinstance(n, Nested):
            validate(n.formula)


# -- printing ------------------------------------------------------------------

def _is_or(f):
    return isinstance(f, Not) and isinstance(f.arg, And) and isinstance(f.arg.left, Not) and isinstance(f.arg.right, Not)


def print_path(f: PathFormula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f'"{f.ap}"_{f.path}'
    if isinstance(f, Nested):
        return "{ " + print_formula(f.formula) + " }_" + f.path
    if isinstance(f, Not):
        a = f.arg
        if _is_or(f):
            return f"({print_path(a.left.arg)} | {print_path(a.right.arg)})"
        if isinstance(a, Until) and a.left == TRUE and isinstance(a.right, Not):
            return f"G {print_path(a.right.arg)}"
        return f"!{print_path(a)}"
    if isinstance(f, Next):
        return f"X {print_path(f.arg)}"
    if isinstance(f, And):
        return f"({print_path(f.left)} & {print_path(f.right)})"
    if f.left == TRUE:
        return f"F {print_path(f.right)}"
    return f"({print_path(f.left)} U {print_path(f.right)})"


def print_formula(f: StateFormula) -> str:
    pre = "".join(f"{q} {x}. " for q, x in f.prefix)
    binds = ", ".join(f"{p} : ({', '.join(prof)})" for p, prof in f.bindings)
    return f"{pre}({print_path(f.body)})[{binds}]"


# -- parsing -------------------------------------------------------------------

_TOK = re.compile(r"""
    (?P<ws>\s+)
  | (?P<str>"[^"]*")
  | (?P<op><->|->|[!&|()\[\]{}.,:_])
  | (?P<id>[A-Za-z_][A-Za-z0-9_#']*)
  | (?P<bad>.)
""", re.X)

_KEYWORDS = {"exists", "forall", "true", "false", "X", "U", "W", "R", "F", "G"}


def _lex(text: str):
    toks = []
    for m in _TOK.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "bad":
            raise FormulaError(f"unexpected character {m.group()!r}", m.start())
        toks.append((kind, m.group(), m.start()))
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[self.i + k]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.next()
        if t[1] != val:
            raise FormulaError(f"expected '{val}', found '{t[1] or 'end of input'}'", t[2])
        return t

    def ident(self):
        t = self.next()
        if t[0] != "id" or t[1] in _KEYWORDS:
            raise FormulaError(f"expected identifier, found '{t[1] or 'end of input'}'", t[2])
        return t[1]

    def state(self) -> StateFormula:
        prefix = []
        while self.peek()[1] in ("exists", "forall"):
            q = self.next()[1]
            prefix.append((q, self.ident()))
            while self.peek()[1] == ",":
                self.next()
                prefix.append((q, self.ident()))
            self.expect(".")
        body = self.implication()
        if self.peek()[1] != "[":
            raise FormulaError("expected binding list '[...]'", self.peek()[2])
        self.next()
        bindings = []
        if self.peek()[1] != "]":
            while True:
                p = self.ident()
                self.expect(":")
                self.expect("(")
                prof = [self.ident()]
                while self.peek()[1] == ",":
                    self.next()
                    prof.append(self.ident())
                self.expect(")")
                bindings.append((p, tuple(prof)))
                if self.peek()[1] != ",":
                    break
                self.next()
        self.expect("]")
        f = StateFormula(tuple(prefix), body, tuple(bindings))
        validate(f)
        return f

    def implication(self):
        left = self.disjunction()
        t = self.peek()[1]
        if t == "->":
            self.next()
            return implies(left, self.implication())
        if t == "<->":
            self.next()
            return iff(left, self.implication())
        return left

    def disjunction(self):
        args = [self.conjunction()]
        while self.peek()[1] == "|":
            self.next()
            args.append(self.conjunction())
        out = args[0]
        for a in args[1:]:
            out = disj(out, a)
        return out

    def conjunction(self):
        args = [self.binary()]
        while self.peek()[1] == "&":
            self.next()
            args.append(self.binary())
        out = args[0]
        for a in args[1:]:
            out = And(out, a)
        return out

    def binary(self):
        left = self.unary()
        op = self.peek()[1]
        if op in ("U", "W", "R"):
            self.next()
            right = self.binary()
            if op == "U":
                return Until(left, right)
            if op == "W":
                return weak_until(left, right)
            return release(left, right)
        return left

    def unary(self):
        kind, val, pos = self.peek()
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
        if val == "true":
            self.next()
            return TRUE
        if val == "false":
            self.next()
            return FALSE
        if val == "(":
            self.next()
            f = self.implication()
            self.expect(")")
            return f
        if kind == "str":
            self.next()
            self.expect("_")
            return Atom(val[1:-1], self.ident())
        if val == "{":
            self.next()
            inner = self.state()
            self.expect("}")
            self.expect("_")
            return Nested(inner, self.ident())
        raise FormulaError(f"unexpected '{val or 'end of input'}'", pos)


def parse_formula(text: str) -> StateFormula:
    p = _Parser(text)
    f = p.state()
    t = p.peek()
    if t[0] != "eof":
        raise FormulaError(f"trailing input '{t[1]}'", t[2])
    return f


def parse_path_formula(text: str) -> PathFormula:
    p = _Parser(text)
    f = p.implication()
    t = p.peek()
    if t[0] != "eof":
        raise FormulaError(f"trailing input '{t[1]}'", t[2])
    return f


# -- alpha renaming -----------------------------------------------------------------

def alpha_rename(f: StateFormula) -> StateFormula:
    """Make every quantified name unique across the formula and its nested formulas.

    Reused names get a ``#k`` suffix with the smallest free ``k``; the first
    (outermost, leftmost) occurrence keeps its name.
    """
    used: set[str] = set()
    return _rename(f, used)


def _fresh(x: str, used: set[str]) -> str:
    if x not in used:
        return x
    base = x.split("#", 1)[0]
    k = 1
    while f"{base}#{k}" in used:
        k += 1
    return f"{base}#{k}"


def _rename(f: StateFormula, used: set[str]) -> StateFormula:
    mapping = {}
    prefix = []
    for q, x in f.prefix:
        y = _fresh(x, used)
        used.add(y)
        mapping[x] = y
        prefix.append((q, y))

    def fn(n):
        if isinstance(n, Nested):
            return Nested(_rename(n.formula, used), n.path)
        return n

    body = map_path(f.body, fn)
    bindings = tuple((p, tuple(mapping.get(x, x) for x in prof)) for p, prof in f.bindings)
    return StateFormula(tuple(prefix), body, bindings)


# -- SPE decomposition ----------------------------------------------------------------

def spe_decompose(f: StateFormula) -> BlockDecomposition | NotSPE:
    """Split the prefix into one block per bound path, in binding order."""
    paths = f.paths
    use: dict[str, set[int]] = {}
    for j, (_, prof) in enumerate(f.bindings):
        for x in prof:
            use.setdefault(x, set()).add(j)
    for q, x in f.prefix:
        if len(use.get(x, ())) > 1:
            names = ", ".join(paths[j] for j in sorted(use[x]))
            return NotSPE(x, f"'{x}' is used by several paths ({names})")
    blocks: list[list] = [[] for _ in paths]
    current = -1
    for q, x in f.prefix:
        js = use.get(x)
        if not js:
            blocks[max(current, 0)].append((q, x))
            current = max(current, 0)
            continue
        (j,) = js
        if j == current:
            blocks[j].append((q, x))
        elif j == current + 1:
            current = j
            blocks[j].append((q, x))
        else:
            return NotSPE(x, f"'{x}' of path {paths[j]} is quantified out of block order")
    if current != len(paths) - 1:
        return NotSPE(f.prefix[-1][1] if f.prefix else "", "some path has no block")
    return BlockDecomposition(tuple(tuple(b) for b in blocks), paths,
                              tuple(prof for _, prof in f.bindings))


# -- nested state formula elimination ----------------------------------------------------------

@dataclass
class _SubCounter:
    value: int = 0


def eliminate_nested_state_formulas(g, f: StateFormula, check: Callable, states: Iterable[int] | None = None,
                                    counter: _SubCounter | None = None, memo: dict | None = None):
    """Replace nested state formulas by fresh ``@sub_k`` atoms, innermost first.

    ``check(g, s, phi)`` decides a nested formula in state ``s``.  Only the
    states in ``states`` (default: all) are checked; the fresh AP is false
    elsewhere.  Structurally equal nested formulas share one fresh AP.
    """
    counter = counter or _SubCounter()
    memo = {} if memo is None else memo
    state_list = list(range(g.n_states)) if states is None else sorted(states)
    box = [g]

    def fn(n):
        if not isinstance(n, Nested):
            return n
        inner_g, inner = eliminate_nested_state_formulas(box[0], n.formula, check, state_list, counter, memo)
        box[0] = inner_g
        ap = memo.get(inner)
        if ap is None:
            ap = f"@sub_{counter.value}"
            counter.value += 1
            holds = [s for s in state_list if check(box[0], s, inner)]
            box[0] = box[0].with_labels({ap: holds})
            memo[inner] = ap
        return Atom(ap, n.path)

    body = map_path(f.body, fn)
    return box[0], StateFormula(f.prefix, body, f.bindings)


# -- negation normal form -------------------------------------------------------------------

@dataclass(frozen=True)
class NNF:
    """Negation normal form node: op in lit/true/false/and/or/X/U/R."""

    op: str
    args: tuple = ()
    ap: str = ""
    path: str = ""
    positive: bool = True


def to_nnf(f: PathFormula, positive: bool = True) -> NNF:
    memo: dict = {}

    def go(n, pos):
        key = (n, pos)
        r = memo.get(key)
        if r is not None:
            return r
        if isinstance(n, Const):
            r = NNF("true" if n.value == pos else "false")
        elif isinstance(n, Atom):
            r = NNF("lit", ap=n.ap, path=n.path, positive=pos)
        elif isinstance(n, Nested):
            raise FormulaError("nested state formula in LTL translation; eliminate it first")
        elif isinstance(n, Not):
            r = go(n.arg, not pos)
        elif isinstance(n, And):
            r = NNF("and" if pos else "or", (go(n.left, pos), go(n.right, pos)))
        elif isinstance(n, Next):
            r = NNF("X", (go(n.arg, pos),))
        else:
            r = NNF("U" if pos else "R", (go(n.left, pos), go(n.right, pos)))
        memo[key] = r
        return r

    return go(f, positive)
