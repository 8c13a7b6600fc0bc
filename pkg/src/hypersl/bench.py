"""Benchmark families and the experiment runner.

Families: the client/scheduler protocol, adversarial grid planning, and
formula templates (non-inference, good-enough wrappers, random SPE).
"""
from __future__ import annotations

import csv
import io
import random
import shlex
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .automata import Limits, ResourceLimitError
from .cgs import CGS, parse_cgs
from .formula import (And, Atom, FormulaError, Not, StateFormula, conj, eventually, globally, iff, implies,
                      parse_formula, rename_paths, validate)
from .randgen import random_nnf_body

IDLE, WAIT, WORK = 0, 1, 2
_PHASE = "iwk"


# -- scheduler ----------------------------------------------------------------------------

def scheduler_state(g_bit: int, phases: Sequence[int], flags: Sequence[int]) -> int:
    """Index of a scheduler state: ``g`` is the most significant digit, then
    one base-6 digit (phase * 2 + flag) per client."""
    idx = g_bit
    for p, f in zip(phases, flags):
        idx = idx * 6 + p * 2 + f
    return idx


def _decode(idx: int, n: int):
    digits = []
    for _ in range(n):
        idx, d = divmod(idx, 6)
        digits.append(d)
    digits.reverse()
    return idx, [d // 2 for d in digits], [d % 2 for d in digits]


def gen_scheduler(n: int) -> tuple[CGS, StateFormula]:
    """Scheduler with ``n`` clients; 2 * 6^n states.

    Agent 0 is the scheduler, agents 1..n the clients.  Each client is idle,
    waiting or working and carries a flag bit that the protocol never sets
    (it only widens the declared state space).  A client's action 0 means
    "no request"; any other action requests access.  The scheduler's action
    ``i`` grants client ``i``.  A waiting client starts working when granted
    while nobody works; a working client becomes idle after one step.  The
    global bit records that the first step was taken.

    Formula: the scheduler can keep every client from waiting forever.
    """
    if n < 2:
        raise ValueError("the scheduler family needs n >= 2")
    n_states = 2 * 6 ** n
    actions = [f"a{k}" for k in range(max(n, 2))]
    agents = ["sched"] + [f"c{i}" for i in range(1, n + 1)]
    aps = [f"wt_{i}" for i in range(1, n + 1)]

    weights = [6 ** (n - 1 - i) for i in range(n)]
    top = 6 ** n
    cache: dict = {}

    def step(s: int, prof) -> int:
        info = cache.get(s)
        if info is None:
            _, phases, flags = _decode(s, n)
            base = top + sum(f * w for f, w in zip(flags, weights))
            info = cache[s] = (phases, base, WORK in phases)
        phases, idx, busy = info
        grant = prof[0]
        for i, p in enumerate(phases):
            if p == IDLE:
                if prof[i + 1] != 0:
                    idx += 2 * WAIT * weights[i]
            elif p == WAIT:
                idx += 2 * (WORK if grant == i and not busy else WAIT) * weights[i]
        return idx

    labels = []
    names = []
    for s in range(n_states):
        gb, phases, flags = _decode(s, n)
        labels.append({aps[i] for i, p in enumerate(phases) if p == WAIT})
        names.append(f"g{gb}_" + "".join(_PHASE[p] + str(f) for p, f in zip(phases, flags)))
    g = CGS(n_states, 0, agents, actions, labels, step, aps=aps, state_names=names)
    body = conj(*[globally(implies(Atom(f"wt_{i}", "p"), eventually(Not(Atom(f"wt_{i}", "p")))))
                  for i in range(1, n + 1)])
    prefix = (("exists", "x"),) + tuple(("forall", f"x{i}") for i in range(1, n + 1))
    f = StateFormula(prefix, body, (("p", ("x",) + tuple(f"x{i}" for i in range(1, n + 1))),))
    return g, f


# -- planning ---------------------------------------------------------------------------------

CALM, WINDY, STORMY = 0, 1, 2
_DIRS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}


@dataclass(frozen=True)
class PlanningLayout:
    """A grid: cell ``(x, y)`` has id ``y * width + x``.

    On a windy cell the robot may end up at its target or pushed one step
    further in the adversary's direction; on a stormy cell it is always
    pushed.  ``ndet`` picks among the candidates.
    """

    width: int
    height: int
    start: int
    goal: int
    weather: tuple        # per cell: CALM, WINDY or STORMY

    def directions(self) -> list[str]:
        if self.height == 1 and self.width > 1:
            return ["E", "W"]
        if self.width == 1 and self.height > 1:
            return ["N", "S"]
        if self.width == 1 and self.height == 1:
            return ["E"]
        return ["N", "E", "S", "W"]

    def move(self, cell: int, d: str) -> int:
        x, y = cell % self.width, cell // self.width
        dx, dy = _DIRS[d]
        nx, ny = x + dx, y + dy
        if 0 <= nx < self.width and 0 <= ny < self.height:
            return ny * self.width + nx
        return cell


def random_layout(width: int, height: int, seed: int, p_windy: float = 0.3, p_stormy: float = 0.1) -> PlanningLayout:
    if width < 1 or height < 1:
        raise ValueError("the grid must be nonempty")
    rng = random.Random(seed)
    n = width * height
    goal = rng.randrange(n)
    start = rng.randrange(n)
    if n > 1:
        while start == goal:
            start = rng.randrange(n)
    weather = []
    for c in range(n):
        r = rng.random()
        weather.append(STORMY if r < p_stormy else WINDY if r < p_stormy + p_windy else CALM)
    weather[goal] = CALM
    return PlanningLayout(width, height, start, goal, tuple(weather))


def planning_cgs(layout: PlanningLayout) -> CGS:
    dirs = layout.directions()
    n = layout.width * layout.height

    def step(c: int, prof) -> int:
        if c == layout.goal:
            return c
        r, a, z = prof
        target = layout.move(c, dirs[r])
        pushed = layout.move(target, dirs[a])
        w = layout.weather[c]
        cands = [target] if w == CALM else [target, pushed] if w == WINDY else [pushed]
        return cands[z % len(cands)]

    labels = [{"goal"} if c == layout.goal else set() for c in range(n)]
    names = [f"c{c % layout.width}_{c // layout.width}" for c in range(n)]
    return CGS(n, layout.start, ["r", "a", "ndet"], dirs, labels, step, aps=["goal"], state_names=names)


PLAN_REACH = 'exists x. forall y. exists z. (F "goal"_pi)[pi : (x, y, z)]'
PLAN_OPT = ('exists x. forall y. exists z. forall a. forall b. forall c. '
            '(!"goal"_pi2 U "goal"_pi)[pi : (x, y, z), pi2 : (a, b, c)]')


def gen_planning(width: int, height: int, seed: int, p_windy: float = 0.3, p_stormy: float = 0.1,
                 layout: PlanningLayout | None = None) -> tuple[CGS, StateFormula, StateFormula]:
    """Model plus the reachability and optimal-reachability formulas."""
    layout = layout or random_layout(width, height, seed, p_windy, p_stormy)
    return planning_cgs(layout), parse_formula(PLAN_REACH), parse_formula(PLAN_OPT)


# -- templates ----------------------------------------------------------------------------------

def _pick_aps(rng: random.Random, g: CGS, k: int, kind: str) -> list[str]:
    aps = [a for a in g.aps if not a.startswith("@")]
    if len(aps) < k:
        raise ValueError(f"template {kind} needs at least {k} atomic propositions, the model has {len(aps)}")
    return rng.sample(aps, k)


def gen_sec(g: CGS, seed: int) -> StateFormula:
    """Agent i reaches g without leaking h through o: some other path shows
    the same observations with a different secret."""
    rng = random.Random(seed)
    n = len(g.agents)
    goal, high, obs = _pick_aps(rng, g, 3, "Sec")
    i = rng.randrange(n)
    prof1 = tuple("x" if j == i else f"y{j + 1}" for j in range(n))
    prof2 = tuple(f"z{j + 1}" for j in range(n))
    prefix = (("exists", "x"),) + tuple(("forall", f"y{j + 1}") for j in range(n) if j != i) \
        + tuple(("exists", f"z{j + 1}") for j in range(n))
    body = conj(eventually(Atom(goal, "pi")),
                globally(iff(Atom(obs, "pi"), Atom(obs, "pi2"))),
                eventually(Not(iff(Atom(high, "pi"), Atom(high, "pi2")))))
    return StateFormula(prefix, body, (("pi", prof1), ("pi2", prof2)))


def gen_ge(g: CGS, seed: int, base: StateFormula | None = None, input_ap: str | None = None,
           body_size: int = 4) -> StateFormula:
    """Good-enough wrapper of a one-path formula ``Q xs. psi[pi : xs]``:
    ``Q xs. forall ys. (G(i_pi <-> i_pi') & psi[pi'/pi]) -> psi``."""
    rng = random.Random(seed)
    n = len(g.agents)
    if base is None:
        k = rng.randint(1, n)
        names = [f"x{j + 1}" for j in range(k)]
        prefix = tuple((rng.choice(["exists", "forall"]), x) for x in names)
        prof = tuple(names[j] if j < k else rng.choice(names) for j in range(n))
        aps = [a for a in g.aps if not a.startswith("@")]
        if not aps:
            raise ValueError("template GE needs at least one atomic proposition")
        base = StateFormula(prefix, random_nnf_body(rng, ["pi"], aps, body_size), (("pi", prof),))
    if len(base.bindings) != 1:
        raise ValueError("the GE template wraps a formula with one path")
    (pi, prof), = base.bindings
    if input_ap is None:
        input_ap = _pick_aps(rng, g, 1, "GE")[0]
    used = {x for _, x in base.prefix}
    ys = []
    for j in range(n):
        y = f"y{j + 1}"
        while y in used:
            y += "'"
        ys.append(y)
    other = "pi_ge" if pi != "pi_ge" else "pi_ge2"
    psi = base.body
    body = implies(And(globally(iff(Atom(input_ap, pi), Atom(input_ap, other))), rename_paths(psi, {pi: other})), psi)
    f = StateFormula(base.prefix + tuple(("forall", y) for y in ys), body, ((pi, prof), (other, tuple(ys))))
    validate(f)
    return f


def gen_rnd(g: CGS, seed: int, rank: int, body_size: int = 6, max_block: int = 2) -> StateFormula:
    """SPE formula of block-rank ``rank`` with random polarities and a random
    formula over the derived operators as body."""
    rng = random.Random(seed)
    n = len(g.agents)
    aps = [a for a in g.aps if not a.startswith("@")]
    if not aps:
        raise ValueError("template Rnd needs at least one atomic proposition")
    prefix = []
    bindings = []
    paths = [f"pi{k + 1}" for k in range(rank)]
    for k in range(rank):
        m = rng.randint(1, min(max_block, n))
        names = [f"x{k + 1}_{j + 1}" for j in range(m)]
        prefix += [(rng.choice(["exists", "forall"]), x) for x in names]
        prof = [names[j] if j < m else rng.choice(names) for j in range(n)]
        rng.shuffle(prof)
        bindings.append((paths[k], tuple(prof)))
    body = random_nnf_body(rng, paths, aps, body_size)
    return StateFormula(tuple(prefix), body, tuple(bindings))


def gen_template(kind: str, g: CGS, seed: int, **kw) -> StateFormula:
    """``kind`` is ``Sec``, ``GE`` or ``Rnd<rank>`` (also ``Rnd`` with ``rank=``)."""
    if kind == "Sec":
        return gen_sec(g, seed)
    if kind == "GE":
        return gen_ge(g, seed, **kw)
    if kind.startswith("Rnd"):
        rank = int(kind[3:]) if len(kind) > 3 else int(kw.pop("rank", 2))
        return gen_rnd(g, seed, rank, **kw)
    raise ValueError(f"unknown template '{kind}'")


# -- experiment runner ---------------------------------------------------------------------------

CSV_COLUMNS = ["family", "params", "|S|", "|S_reach|", "block_rank", "verdict", "stage_sizes", "time_s", "status",
               "oracle"]


@dataclass
class SuiteRow:
    family: str
    params: dict = field(default_factory=dict)
    line: int = 0

    def param_text(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.params.items())


def parse_suite(text: str) -> list[SuiteRow]:
    """One experiment per line: ``family=scheduler n=3 formula=default timeout=60``."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        params = {}
        for tok in shlex.split(line):
            if "=" not in tok:
                raise ValueError(f"line {lineno}: expected key=value, found '{tok}'")
            k, v = tok.split("=", 1)
            params[k] = v
        fam = params.pop("family", None)
        if fam is None:
            raise ValueError(f"line {lineno}: missing family=")
        rows.append(SuiteRow(fam, params, lineno))
    return rows


def _instance(row: SuiteRow, base: Path):
    p = row.params
    fam = row.family
    if fam == "scheduler":
        return gen_scheduler(int(p.get("n", 2)))
    if fam == "planning":
        w, h, seed = int(p.get("w", 3)), int(p.get("h", 1)), int(p.get("seed", 0))
        g, reach, opt = gen_planning(w, h, seed, float(p.get("windy", 0.3)), float(p.get("stormy", 0.1)))
        which = p.get("formula", "reach")
        if which not in ("reach", "opt"):
            raise ValueError(f"planning formula must be reach or opt, not '{which}'")
        return g, reach if which == "reach" else opt
    if fam in ("template", "file"):
        g = parse_cgs((base / p["model"]).read_text())
        if fam == "file":
            return g, parse_formula((base / p["formula"]).read_text())
        return g, gen_template(p.get("kind", "Rnd2"), g, int(p.get("seed", 0)))
    raise ValueError(f"unknown family '{fam}'")


def run_row(row: SuiteRow, base: str | Path = ".", default_timeout: float | None = None) -> dict:
    """Execute one suite row; failures are recorded in the ``status`` column."""
    from .mc import NotSPEError, model_check
    from .oracle import OracleBudgetError, dpa_memory_bound, eval_direct

    out = {c: "" for c in CSV_COLUMNS}
    out["family"] = row.family
    out["params"] = row.param_text()
    t0 = time.perf_counter()
    try:
        g, f = _instance(row, Path(base))
        out["|S|"] = g.n_states
        out["|S_reach|"] = len(g.reachable_states())
        timeout = float(row.params.get("timeout", default_timeout or 0)) or None
        limits = Limits.with_timeout(timeout)
        res = model_check(g, None, f, limits)
        out["block_rank"] = res.block_rank
        out["verdict"] = res.verdict.value
        out["stage_sizes"] = res.stage_sizes()
        out["status"] = "ok"
        if "oracle" in row.params:
            spec = row.params["oracle"]
            try:
                bound = dpa_memory_bound(g, f) if spec in ("", "dpa", "auto") else int(spec)
                o = eval_direct(g, g.initial, f, bound, int(row.params.get("oracle_budget", 2_000_000)))
                out["oracle"] = "agree" if o == res.sat else "DISAGREE"
            except OracleBudgetError:
                out["oracle"] = "budget"
    except ResourceLimitError as e:
        out["status"] = f"limit: {e}"
    except NotSPEError as e:
        out["status"] = f"notspe: {e.result.witness}"
    except (FormulaError, ValueError, KeyError, OSError) as e:
        out["status"] = f"error: {e}"
    out["time_s"] = f"{time.perf_counter() - t0:.3f}"
    return out


def _run_row_args(args):
    return run_row(*args)


def run_experiments(suite: str | Path | Sequence[SuiteRow], jobs: int = 1, base: str | Path | None = None,
                    default_timeout: float | None = None) -> str:
    """Run a suite and return the CSV text; rows keep suite order."""
    if isinstance(suite, Path) or (isinstance(suite, str) and "\n" not in suite and "=" not in suite):
        base = base or Path(suite).parent
        rows = parse_suite(Path(suite).read_text())
    elif isinstance(suite, str):
        rows = parse_suite(suite)
    else:
        rows = list(suite)
    base = base or "."
    args = [(r, base, default_timeout) for r in rows]
    if jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_row_args, args))
    else:
        results = [run_row(*a) for a in args]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r)
    return buf.getvalue()
