"""Model checking HyperSL[SPE]: eliminate blocks innermost first, then solve a
parity game over the singleton alphabet."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

from .automata import (EVEN, ODD, Limits, ParityGame, ResourceLimitError, apa_to_dpa, singleton_nonempty,
                       solve_parity_game)
from .cgs import CGS
from .formula import (FormulaError, NotSPE, StateFormula, alpha_rename, eliminate_nested_state_formulas,
                      nested_count, spe_decompose, validate)
from .ltl2apa import ltl_to_apa
from .summary import StageStats, simulate

EXIT_SAT, EXIT_UNSAT, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class Verdict(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"

    def __bool__(self):
        return self is Verdict.SAT

    @classmethod
    def of(cls, b: bool) -> "Verdict":
        return cls.SAT if b else cls.UNSAT


class NotSPEError(FormulaError):
    def __init__(self, result: NotSPE):
        super().__init__(f"formula is not in the SPE fragment (witness '{result.witness}'): {result.reason}")
        self.result = result


class StageLimitError(ResourceLimitError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"resource limit in stage {stage}: {cause}")
        self.stage = stage


@dataclass
class Result:
    verdict: Verdict
    block_rank: int
    n_states: int
    ltl_states: int = 0
    stages: list = field(default_factory=list)      # StageStats, innermost block first
    game_vertices: int = 0
    nested: int = 0
    seconds: float = 0.0

    @property
    def sat(self) -> bool:
        return self.verdict is Verdict.SAT

    def record(self) -> str:
        """One ``key=value`` pair per line."""
        lines = [f"verdict={self.verdict.value}", f"block_rank={self.block_rank}", f"states={self.n_states}",
                 f"nested={self.nested}", f"ltl_apa_states={self.ltl_states}"]
        for k, st in enumerate(self.stages):
            lines.append(f"stage{k + 1}=path:{st.path} in:{st.input_states} dpa:{st.dpa_states} "
                         f"out:{st.output_states} route:{st.route or '-'} time_s:{st.seconds:.4f}")
        lines.append(f"game_vertices={self.game_vertices}")
        lines.append(f"time_s={self.seconds:.4f}")
        return "\n".join(lines)

    def stage_sizes(self) -> str:
        return ";".join(f"{st.input_states}/{st.dpa_states}/{st.output_states}" for st in self.stages)


def _check_profiles(g: CGS, f: StateFormula) -> None:
    for p, prof in f.bindings:
        if len(prof) != len(g.agents):
            raise FormulaError(f"path {p} binds {len(prof)} variables but the structure has {len(g.agents)} agents")


def _missing_aps(g: CGS, f: StateFormula) -> None:
    from .formula import Atom, subformulas

    for n in subformulas(f.body):
        if isinstance(n, Atom) and n.ap not in g.aps:
            raise FormulaError(f"atomic proposition '{n.ap}' is not declared by the model")


def model_check(g: CGS, start: int | None, f: StateFormula, limits: Limits | None = None,
                dump: Callable[[str, object], None] | None = None) -> Result:
    """Decide ``start |= f``; nested state formulas are replaced by fresh APs first.

    ``dump(name, automaton)`` is called with the body automaton and with the
    output of every stage.
    """
    t0 = time.perf_counter()
    limits = limits or Limits()
    start = g.initial if start is None else start
    f = alpha_rename(f)
    validate(f)
    n_nested = nested_count(f.body)
    if n_nested:
        reach = g.reachable_states(start)
        memo: dict = {}

        def check(g2, s, phi):
            key = (phi, s)
            r = memo.get(key)
            if r is None:
                r = model_check(g2, s, phi, limits).sat
                memo[key] = r
            return r

        g, f = eliminate_nested_state_formulas(g, f, check, reach)
    _check_profiles(g, f)
    _missing_aps(g, f)
    dec = spe_decompose(f)
    if not dec:
        raise NotSPEError(dec)
    res = Result(Verdict.UNSAT, dec.rank, g.n_states, nested=n_nested)
    try:
        a = ltl_to_apa(g, f.body, dec.paths)
    except ResourceLimitError as e:
        raise StageLimitError("ltl", e) from e
    res.ltl_states = a.n
    if dump:
        dump("ltl", a)
    for k in range(dec.rank - 1, -1, -1):
        st = StageStats(dec.paths[k], a.n)
        try:
            a = simulate(g, start, dec.paths[k], dec.profiles[k], dec.blocks[k], a, limits, st)
        except ResourceLimitError as e:
            raise StageLimitError(f"simulate {dec.paths[k]}", e) from e
        res.stages.append(st)
        if dump:
            dump(f"stage{len(res.stages)}_{dec.paths[k]}", a)
    ok, gm, _ = singleton_nonempty(a)
    res.game_vertices = gm.n
    res.verdict = Verdict.of(ok)
    res.seconds = time.perf_counter() - t0
    return res


def check_rank1_direct(g: CGS, start: int | None, f: StateFormula, limits: Limits | None = None) -> Verdict:
    """Independent check for block-rank 1: a parity game on DPA states times
    game states, with one vertex layer per quantified action."""
    limits = limits or Limits()
    start = g.initial if start is None else start
    f = alpha_rename(f)
    validate(f)
    if nested_count(f.body):
        raise FormulaError("nested state formulas are not supported by the direct check")
    _check_profiles(g, f)
    dec = spe_decompose(f)
    if not dec:
        raise NotSPEError(dec)
    if dec.rank != 1:
        raise FormulaError("the direct check needs block-rank 1")
    (block,), (profile,) = dec.blocks, dec.profiles
    det = apa_to_dpa(ltl_to_apa(g, f.body, dec.paths), limits)
    det.explore(limits)
    top = max(det.colors) + 2
    top += top % 2          # helper vertices: even and above every state color
    quants = [q for q, _ in block]
    pos = {v: i for i, (_, v) in enumerate(block)}
    agent_pos = [pos[v] for v in profile]
    n_act = len(g.actions)
    gm = ParityGame()
    vert: dict = {}
    todo = []

    def state_vertex(q, s):
        v = vert.get((q, s))
        if v is None:
            v = gm.add(EVEN, det.colors[q])
            vert[(q, s)] = v
            todo.append((v, q, s))
            limits.check(gm.n, "direct game")
        return v

    root = state_vertex(det.initial, start)
    while todo:
        v, q, s = todo.pop()
        q2 = det.succ(q, s)
        row = g.successors(s)

        def layer(k, choice):
            if k == len(block):
                idx = g.profile_index([choice[agent_pos[i]] for i in range(len(profile))])
                return state_vertex(q2, row[idx])
            u = gm.add(EVEN if quants[k] == "exists" else ODD, top)
            gm.succ[u] = [layer(k + 1, choice + (a,)) for a in range(n_act)]
            return u

        gm.succ[v] = [layer(0, ())]
    sol = solve_parity_game(gm)
    return Verdict.of(root in sol.win[EVEN])


def exit_code(verdict: Verdict) -> int:
    return EXIT_SAT if verdict is Verdict.SAT else EXIT_UNSAT
