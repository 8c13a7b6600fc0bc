import random

import pytest

from hypersl.automata import Limits, ResourceLimitError
from hypersl.bench import CALM, STORMY, PLAN_OPT, PLAN_REACH, PlanningLayout, gen_scheduler, planning_cgs
from hypersl.cgs import CGS
from hypersl.formula import StateFormula, alpha_rename, dual, parse_formula
from hypersl.mc import (EXIT_SAT, EXIT_UNSAT, NotSPEError, StageLimitError, Verdict, check_rank1_direct, exit_code,
                        model_check)
from hypersl.randgen import random_cgs, random_spe_formula

from conftest import chain, one_state


def sat(g, text, start=None):
    return model_check(g, start, parse_formula(text)).sat


def test_single_state_globally():
    assert sat(one_state(), 'exists x. (G "a"_p)[p : (x)]')
    assert not sat(one_state(), 'exists x. (F "b"_p)[p : (x)]')


def test_line_grid_without_adversary_power():
    g = planning_cgs(PlanningLayout(3, 1, 0, 2, (CALM, CALM, CALM)))
    assert sat(g, PLAN_REACH)
    assert sat(g, PLAN_OPT)


def test_line_grid_adversary_controls_motion():
    # every step out of the start cell is a push the adversary directs
    g = planning_cgs(PlanningLayout(3, 1, 0, 2, (STORMY, STORMY, CALM)))
    assert not sat(g, PLAN_REACH)


def test_scheduler_two_clients():
    g, f = gen_scheduler(2)
    res = model_check(g, None, f)
    assert res.verdict is Verdict.SAT
    assert check_rank1_direct(g, None, f) is Verdict.SAT


def test_direct_check_examples():
    assert check_rank1_direct(chain(2), None, parse_formula('exists x. (F "g"_p)[p : (x)]')) is Verdict.SAT
    g = CGS(2, 0, ["p"], ["stay", "go"], [{"a"}, set()], [[0, 1], [1, 1]], aps=["a"])
    f = parse_formula('forall x. (G "a"_p)[p : (x)]')
    assert check_rank1_direct(g, None, f) is Verdict.UNSAT
    assert not model_check(g, None, f).sat


def test_direct_check_needs_rank_one():
    f = parse_formula('exists x. exists y. ("a"_p U "a"_q)[p : (x), q : (y)]')
    with pytest.raises(ValueError):
        check_rank1_direct(one_state(), None, f)


@pytest.mark.parametrize("seed", range(100))
def test_rank_one_agrees_with_direct(seed):
    rng = random.Random(seed)
    g = random_cgs(rng, rng.randint(1, 4), rng.randint(1, 2), 2)
    f = random_spe_formula(rng, len(g.agents), 1, ["a", "b"], max_body=6)
    assert model_check(g, None, f).verdict is check_rank1_direct(g, None, f)


@pytest.mark.parametrize("seed", range(25))
def test_invariances(seed):
    rng = random.Random(1000 + seed)
    g = random_cgs(rng, rng.randint(1, 3), 2, 2)
    f = random_spe_formula(rng, 2, rng.randint(1, 2), ["a", "b"], max_body=5)
    base = model_check(g, None, f).sat
    # renaming every variable
    ren = {x: f"v_{x}" for _, x in f.prefix}
    f2 = StateFormula(tuple((q, ren[x]) for q, x in f.prefix), f.body,
                      tuple((p, tuple(ren[x] for x in prof)) for p, prof in f.bindings))
    assert model_check(g, None, f2).sat == base
    # swapping the agents in model and formula together
    gp = g.with_agents_permuted([1, 0])
    fp = StateFormula(f.prefix, f.body, tuple((p, (prof[1], prof[0])) for p, prof in f.bindings))
    assert model_check(gp, None, fp).sat == base
    # an unused AP
    assert model_check(g.with_labels({"unused": [0]}), None, f).sat == base
    assert model_check(g, None, dual(f)).sat != base


def test_start_override():
    g = chain(3)
    f = parse_formula('forall x. (G "g"_p)[p : (x)]')
    assert not model_check(g, None, f).sat
    assert model_check(g, 2, f).sat


def test_nested_formula():
    g = chain(3)
    f = parse_formula('exists x. (F {forall y. (G "g"_q)[q : (y)]}_p)[p : (x)]')
    res = model_check(g, None, f)
    assert res.sat and res.nested == 1


def test_not_spe_raises_with_witness():
    g = random_cgs(random.Random(0), 2, 2, 2)
    f = parse_formula('exists x. exists y. forall z. forall w. ("a"_p1 U "a"_p2)[p1 : (x, z), p2 : (y, w)]')
    with pytest.raises(NotSPEError) as e:
        model_check(g, None, f)
    assert e.value.result.witness


def test_profile_length_mismatch():
    with pytest.raises(ValueError):
        model_check(one_state(n_agents=2), None, parse_formula('exists x. (G "a"_p)[p : (x)]'))


def test_missing_ap():
    with pytest.raises(ValueError, match="not declared"):
        model_check(one_state(), None, parse_formula('exists x. (G "zz"_p)[p : (x)]'))


def test_resource_limit_reports_stage():
    g, f = gen_scheduler(2)
    with pytest.raises(StageLimitError) as e:
        model_check(g, None, f, Limits(max_states=3))
    assert isinstance(e.value, ResourceLimitError)
    assert e.value.stage


def test_record_and_stage_sizes():
    g = random_cgs(random.Random(4), 3, 2, 2)
    f = parse_formula('exists x. forall y. exists z. ("a"_p U "b"_q)[p : (x, y), q : (z, z)]')
    res = model_check(g, None, f)
    rec = dict(line.split("=", 1) for line in res.record().splitlines())
    assert rec["verdict"] == res.verdict.value
    assert rec["block_rank"] == "2"
    assert "stage1" in rec and "stage2" in rec
    assert len(res.stage_sizes().split(";")) == 2


def test_exit_codes():
    assert exit_code(Verdict.SAT) == EXIT_SAT == 0
    assert exit_code(Verdict.UNSAT) == EXIT_UNSAT == 1


def test_alpha_rename_invariance_with_nesting():
    g = chain(3)
    f = parse_formula('exists x. (F {exists x. (G "g"_q)[q : (x)]}_p)[p : (x)]')
    assert model_check(g, None, f).sat == model_check(g, None, alpha_rename(f)).sat
