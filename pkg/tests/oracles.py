"""Independent brute-force references used by the tests."""
import itertools
import random

from hypersl.automata import EVEN, ODD, ParityGame, accepts_lasso


def random_game(rng: random.Random, n_max: int = 8, max_color: int = 5, max_out: int = 3) -> ParityGame:
    gm = ParityGame()
    n = rng.randint(1, n_max)
    for _ in range(n):
        gm.add(rng.choice((EVEN, ODD)), rng.randrange(max_color + 1))
    for v in range(n):
        gm.succ[v] = sorted(set(rng.randrange(n) for _ in range(rng.randint(1, max_out))))
    return gm


def _play_outcome(gm, sigma, tau, v):
    """Least color on the cycle reached from ``v`` under two positional strategies."""
    seen = {}
    path = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = sigma[v] if gm.owner[v] == EVEN else tau[v]
    return min(gm.color[w] for w in path[seen[v]:])


def brute_force_regions(gm: ParityGame) -> set:
    """Even's winning region by enumerating positional strategies of both players."""
    ev = [v for v in range(gm.n) if gm.owner[v] == EVEN]
    od = [v for v in range(gm.n) if gm.owner[v] == ODD]
    taus = [dict(zip(od, c)) for c in itertools.product(*[gm.succ[v] for v in od])]
    win = set()
    for choice in itertools.product(*[gm.succ[v] for v in ev]):
        sigma = dict(zip(ev, choice))
        for v in range(gm.n):
            if v in win:
                continue
            if all(_play_outcome(gm, sigma, tau, v) % 2 == 0 for tau in taus):
                win.add(v)
    return win


def all_lassos(n_letters: int, max_total: int):
    for total in range(1, max_total + 1):
        for cyc in range(1, total + 1):
            for word in itertools.product(range(n_letters), repeat=total):
                yield list(word[:total - cyc]), list(word[total - cyc:])


def lasso_enumeration_nonempty(a, max_total: int = 4) -> bool:
    return any(accepts_lasso(a, s, c) for s, c in all_lassos(a.alphabet.size, max_total))
