"""LTL over path-indexed atoms to alternating parity automata, and a lasso evaluator."""
from __future__ import annotations

from typing import Callable, Sequence

from .automata import APA, Alphabet, Store
from .cgs import CGS
from .formula import (NNF, And, Atom, Const, FormulaError, Nested, Next, Not, PathFormula,
                      free_paths, subformulas, to_nnf)


def ltl_to_apa(g: CGS, body: PathFormula, vars: Sequence[str]) -> APA:
    """One state per temporal subformula of the negation normal form.

    Colors: 1 on until states (they must be left eventually), 2 elsewhere.
    """
    vars = tuple(vars)
    missing = free_paths(body) - set(vars)
    if missing:
        raise FormulaError(f"path variable(s) {sorted(missing)} not in the alphabet")
    root = to_nnf(body)
    alphabet = Alphabet(vars, g.n_states)

    states: list[NNF] = []
    index: dict[NNF, int] = {}

    def state_of(f: NNF) -> int:
        i = index.get(f)
        if i is None:
            i = len(states)
            index[f] = i
            states.append(f)
        return i

    # closure: root, X arguments, U and R nodes
    state_of(root)
    lits: list[tuple[str, int]] = []
    lit_index: dict = {}
    seen = set()
    stack = [root]
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        if f.op == "lit":
            key = (f.ap, vars.index(f.path))
            if key not in lit_index:
                lit_index[key] = len(lits)
                lits.append(key)
        elif f.op == "X":
            state_of(f.args[0])
        elif f.op in ("U", "R"):
            state_of(f)
        stack.extend(f.args)

    store = Store()
    colors = [1 if f.op == "U" else 2 for f in states]
    n = alphabet.n_states
    k = len(vars)
    labels = g.labels

    def valuation(letter: int) -> tuple:
        tup = [0] * k
        x = letter
        for i in range(k - 1, -1, -1):
            x, tup[i] = divmod(x, n)
        return tuple(ap in labels[tup[i]] for ap, i in lits)

    expand_memo: dict = {}

    def expand(f: NNF, val: tuple) -> int:
        key = (f, val)
        r = expand_memo.get(key)
        if r is not None:
            return r
        op = f.op
        if op == "true":
            r = store.TRUE
        elif op == "false":
            r = store.FALSE
        elif op == "lit":
            v = val[lit_index[(f.ap, vars.index(f.path))]]
            r = store.TRUE if v == f.positive else store.FALSE
        elif op == "and":
            r = store.conj([expand(f.args[0], val), expand(f.args[1], val)])
        elif op == "or":
            r = store.disj([expand(f.args[0], val), expand(f.args[1], val)])
        elif op == "X":
            r = store.leaf(index[f.args[0]])
        elif op == "U":
            r = store.disj([expand(f.args[1], val),
                            store.conj([expand(f.args[0], val), store.leaf(index[f])])])
        else:  # R
            r = store.conj([expand(f.args[1], val),
                            store.disj([expand(f.args[0], val), store.leaf(index[f])])])
        expand_memo[key] = r
        return r

    def delta(q: int, letter: int) -> int:
        return expand(states[q], valuation(letter))

    a = APA(alphabet, len(states), 0, colors, store, delta, name="ltl")
    a.nnf_states = states
    return a


def eval_ltl_on_lasso(body: PathFormula, g: CGS, alphabet: Alphabet, stem: Sequence[int], cycle: Sequence[int],
                      nested: Callable[[object, int], bool] | None = None) -> bool:
    """Exact LTL evaluation on ``stem . cycle^omega`` by fixpoints over positions."""
    if not cycle:
        raise ValueError("cycle must be nonempty")
    letters = [alphabet.decode(x) for x in list(stem) + list(cycle)]
    L = len(letters)
    nxt = [p + 1 if p + 1 < L else len(stem) for p in range(L)]
    vars = alphabet.vars
    val: dict = {}
    for f in subformulas(body):
        if f in val:
            continue
        if isinstance(f, Const):
            v = [f.value] * L
        elif isinstance(f, Atom):
            i = vars.index(f.path)
            v = [f.ap in g.labels[letters[p][i]] for p in range(L)]
        elif isinstance(f, Nested):
            if nested is None:
                raise FormulaError("nested state formula without an evaluator")
            i = vars.index(f.path)
            v = [bool(nested(f.formula, letters[p][i])) for p in range(L)]
        elif isinstance(f, Not):
            v = [not b for b in val[f.arg]]
        elif isinstance(f, And):
            l, r = val[f.left], val[f.right]
            v = [l[p] and r[p] for p in range(L)]
        elif isinstance(f, Next):
            a = val[f.arg]
            v = [a[nxt[p]] for p in range(L)]
        else:
            l, r = val[f.left], val[f.right]
            v = [False] * L
            changed = True
            while changed:
                changed = False
                for p in range(L - 1, -1, -1):
                    if not v[p] and (r[p] or (l[p] and v[nxt[p]])):
                        v[p] = True
                        changed = True
        val[f] = v
    return val[body][0]
