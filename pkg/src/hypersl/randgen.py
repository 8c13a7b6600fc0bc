"""Seeded random instances: structures, automata, path formulas and lassos."""
from __future__ import annotations

import random
from typing import Sequence

from .automata import APA, Alphabet, Store
from .cgs import CGS
from .formula import (And, Atom, Next, Not, PathFormula, StateFormula, Until, disj,
                      eventually, globally, release)


def random_cgs(rng: random.Random, n_states: int, n_agents: int, n_actions: int, aps: Sequence[str] = ("a", "b"),
               p_label: float = 0.5) -> CGS:
    labels = [{ap for ap in aps if rng.random() < p_label} for _ in range(n_states)]
    npf = n_actions ** n_agents
    table = [[rng.randrange(n_states) for _ in range(npf)] for _ in range(n_states)]
    return CGS(n_states, 0, [f"ag{i}" for i in range(n_agents)], [f"m{i}" for i in range(n_actions)],
               labels, table, aps=list(aps))


def random_formula_node(rng: random.Random, store: Store, n_states: int, max_leaves: int = 3) -> int:
    """A random positive boolean formula over at most ``max_leaves`` state leaves."""
    def gen(k: int) -> int:
        if k == 1:
            r = rng.random()
            if r < 0.08:
                return store.TRUE
            if r < 0.16:
                return store.FALSE
            return store.leaf(rng.randrange(n_states))
        left = rng.randint(1, k - 1)
        kids = [gen(left), gen(k - left)]
        return store.conj(kids) if rng.random() < 0.5 else store.disj(kids)

    return gen(rng.randint(1, max_leaves))


def random_apa(rng: random.Random, max_states: int = 5, max_colors: int = 3, n_letters: int = 2,
               max_leaves: int = 3) -> APA:
    n = rng.randint(1, max_states)
    base = rng.randint(0, 1)
    colors = [base + rng.randrange(max_colors) for _ in range(n)]
    store = Store()
    alphabet = Alphabet(("v",), n_letters)
    table = [[random_formula_node(rng, store, n, max_leaves) for _ in range(n_letters)] for _ in range(n)]
    return APA.from_table(alphabet, 0, colors, store, table)


def random_lasso(rng: random.Random, n_letters: int, max_stem: int = 3, max_cycle: int = 3):
    stem = [rng.randrange(n_letters) for _ in range(rng.randint(0, max_stem))]
    cycle = [rng.randrange(n_letters) for _ in range(rng.randint(1, max_cycle))]
    return stem, cycle


def random_path_formula(rng: random.Random, paths: Sequence[str], aps: Sequence[str], max_size: int = 8) -> PathFormula:
    """A random formula over the primitive operators with at most ``max_size`` nodes."""
    target = rng.randint(1, max_size)

    def gen(budget: int) -> PathFormula:
        if budget <= 1:
            return Atom(rng.choice(list(aps)), rng.choice(list(paths)))
        if budget == 2:
            op = rng.choice(["not", "X"])
            arg = gen(1)
            return Not(arg) if op == "not" else Next(arg)
        op = rng.choice(["not", "X", "and", "U", "and", "U"])
        if op == "not":
            return Not(gen(budget - 1))
        if op == "X":
            return Next(gen(budget - 1))
        left = rng.randint(1, budget - 2)
        l, r = gen(left), gen(budget - 1 - left)
        return And(l, r) if op == "and" else Until(l, r)

    return gen(target)


def random_spe_formula(rng: random.Random, n_agents: int, rank: int, aps: Sequence[str], max_body: int = 6,
                       max_block: int = 2, polarity: Sequence[str] | None = None) -> StateFormula:
    """A HyperSL[SPE] formula of the given block-rank with random polarities."""
    prefix = []
    bindings = []
    counter = 0
    paths = [f"p{k + 1}" for k in range(rank)]
    for k in range(rank):
        nvars = rng.randint(1, min(max_block, n_agents))
        names = []
        for _ in range(nvars):
            q = rng.choice(polarity or ["exists", "forall"])
            name = f"x{counter}"
            counter += 1
            names.append(name)
            prefix.append((q, name))
        prof = [rng.choice(names) for _ in range(n_agents)]
        # every quantified variable of the block should matter when possible
        for i, name in enumerate(names[:n_agents]):
            if name not in prof:
                prof[rng.randrange(n_agents)] = name
        bindings.append((paths[k], tuple(prof)))
    body = random_path_formula(rng, paths, aps, max_body)
    return StateFormula(tuple(prefix), body, tuple(bindings))


def random_nnf_body(rng: random.Random, paths: Sequence[str], aps: Sequence[str], max_size: int = 6) -> PathFormula:
    """Random body in the style of sampled LTL: uses the derived operators too."""
    target = rng.randint(2, max_size)

    def gen(budget: int) -> PathFormula:
        if budget <= 1:
            a = Atom(rng.choice(list(aps)), rng.choice(list(paths)))
            return Not(a) if rng.random() < 0.3 else a
        op = rng.choice(["F", "G", "X", "and", "or", "U", "R"])
        if op in ("F", "G", "X"):
            arg = gen(budget - 1)
            return {"F": eventually, "G": globally, "X": Next}[op](arg)
        if budget < 3:
            return gen(1)
        left = rng.randint(1, budget - 2)
        l, r = gen(left), gen(budget - 1 - left)
        return {"and": lambda a, b: And(a, b), "or": disj, "U": Until, "R": release}[op](l, r)

    return gen(target)
