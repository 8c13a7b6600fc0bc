"""``hypersl`` command line: check, translate, gen, bench, automata.

Exit codes: 0 SAT (or success), 1 UNSAT, 2 usage, parse or fragment error,
3 resource limit.  ``HYPERSL_MAX_STATES`` and ``HYPERSL_TIMEOUT`` set the
default limits.
"""
from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .automata import Limits, ResourceLimitError, apa_to_dpa, dump_apa, dump_dpa
from .bench import gen_planning, gen_scheduler, gen_template, run_experiments
from .cgs import CGS, CGSError, parse_cgs, parse_observations
from .formula import FormulaError, parse_formula, print_formula
from .frontends import SLiiInstance, parse_sl, translate_hyperatl, translate_sl, translate_slii
from .ltl2apa import ltl_to_apa
from .mc import EXIT_RESOURCE, EXIT_USAGE, NotSPEError, exit_code, model_check
from .oracle import OracleBudgetError, eval_direct
from .randgen import random_cgs


def _env_timeout() -> float | None:
    v = os.environ.get("HYPERSL_TIMEOUT")
    return float(v) if v else None


def _limits(args) -> Limits:
    timeout = args.timeout if args.timeout is not None else _env_timeout()
    return Limits.with_timeout(timeout, args.max_states)


def _state_index(g: CGS, name: str) -> int:
    if name in g.state_names:
        return g.state_names.index(name)
    if name.isdigit() and int(name) < g.n_states:
        return int(name)
    raise CGSError(f"unknown state '{name}'")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_check(args) -> int:
    g = parse_cgs(Path(args.model).read_text())
    f = parse_formula(Path(args.formula).read_text())
    start = _state_index(g, args.start) if args.start else g.initial
    dump = None
    if args.dump_automata:
        out = Path(args.dump_automata)
        out.mkdir(parents=True, exist_ok=True)
        dump = lambda name, a: (out / f"{name}.apa").write_text(dump_apa(a, name))  # noqa: E731

    try:
        res = model_check(g, start, f, _limits(args), dump=dump)
    except NotSPEError as e:
        print(f"error: {e}", file=sys.stderr)
        print(f"witness={e.result.witness}")
        return EXIT_USAGE
    print(res.record())
    if args.oracle is not None:
        try:
            o = eval_direct(g, start, f, args.oracle, args.oracle_budget)
        except OracleBudgetError as e:
            print(f"oracle=budget ({e})")
            return EXIT_RESOURCE
        agree = o == res.sat
        print(f"oracle={'agree' if agree else 'DISAGREE'}")
        if not agree:
            print("error: model checker and oracle disagree", file=sys.stderr)
            return EXIT_USAGE
    return exit_code(res.verdict)


def cmd_translate(args) -> int:
    text = Path(args.input).read_text()
    if args.logic == "sl":
        f = translate_sl(text, args.agents)
    elif args.logic == "hyperatl":
        f = translate_hyperatl(text, None, args.agents)
    else:
        if not args.model or not args.obs:
            print("error: slii needs --model and --obs", file=sys.stderr)
            return EXIT_USAGE
        g = parse_cgs(Path(args.model).read_text())
        inst = SLiiInstance(parse_sl(text, args.agents or len(g.agents)), parse_observations(Path(args.obs).read_text()))
        g2, f = translate_slii(inst, g)
        if not args.model_out:
            print("error: slii needs --model-out for the transformed model", file=sys.stderr)
            return EXIT_USAGE
        Path(args.model_out).write_text(g2.dumps())
    _write(args.output, print_formula(f) + "\n")
    return 0


def cmd_gen(args) -> int:
    if args.family == "scheduler":
        g, f = gen_scheduler(args.n)
    elif args.family == "planning":
        g, reach, opt = gen_planning(args.w, args.h, args.seed, args.windy, args.stormy)
        f = reach if args.formula == "reach" else opt
    else:
        g = parse_cgs(Path(args.model).read_text()) if args.model else random_cgs(
            random.Random(args.seed), args.states, 2, 2, aps=("a", "b", "c"))
        f = gen_template(args.kind, g, args.seed)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "model.cgs").write_text(g.dumps())
        (out / "formula.hsl").write_text(print_formula(f) + "\n")
    else:
        sys.stdout.write(g.dumps())
        print("# formula: " + print_formula(f))
    return 0


def cmd_bench(args) -> int:
    timeout = args.timeout if args.timeout is not None else _env_timeout()
    csv_text = run_experiments(Path(args.suite), jobs=args.jobs, default_timeout=timeout)
    _write(args.output, csv_text)
    return 0


def cmd_automata(args) -> int:
    g = parse_cgs(Path(args.model).read_text())
    f = parse_formula(Path(args.formula).read_text())
    a = ltl_to_apa(g, f.body, [p for p, _ in f.bindings])
    text = dump_apa(a, "body")
    if args.dpa:
        d = apa_to_dpa(a, _limits(args))
        d.explore(_limits(args))
        text += dump_dpa(d, "body_dpa")
    _write(args.output, text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypersl", description="HyperSL[SPE] model checking")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def limits_flags(p):
        p.add_argument("--timeout", type=float, default=None, help="seconds (default: $HYPERSL_TIMEOUT)")
        p.add_argument("--max-states", type=int, default=None, help="default: $HYPERSL_MAX_STATES")

    p = sub.add_parser("check", help="model check a formula")
    p.add_argument("model")
    p.add_argument("formula")
    p.add_argument("--start", help="state name or index to check from")
    p.add_argument("--oracle", type=int, metavar="N", help="also run the bounded-memory oracle with memory N")
    p.add_argument("--oracle-budget", type=int, default=2_000_000)
    p.add_argument("--dump-automata", metavar="DIR")
    limits_flags(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("translate", help="translate SL, HyperATL* or SL_ii into HyperSL")
    p.add_argument("logic", choices=["sl", "hyperatl", "slii"])
    p.add_argument("input")
    p.add_argument("--agents", type=int)
    p.add_argument("--model", help="model (slii)")
    p.add_argument("--obs", help="observation file (slii)")
    p.add_argument("--model-out", help="where to write the transformed model (slii)")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("gen", help="generate a benchmark instance")
    p.add_argument("family", choices=["scheduler", "planning", "template"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--w", type=int, default=3)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--windy", type=float, default=0.3)
    p.add_argument("--stormy", type=float, default=0.1)
    p.add_argument("--formula", choices=["reach", "opt"], default="reach")
    p.add_argument("--kind", default="Rnd2", help="Sec, GE, Rnd1, Rnd2, ...")
    p.add_argument("--model", help="base model for templates")
    p.add_argument("--states", type=int, default=3, help="random base model size for templates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for model.cgs and formula.hsl")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("bench", help="run a suite file and print CSV")
    p.add_argument("suite")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("automata", help="dump the body automaton (and its DPA)")
    p.add_argument("model")
    p.add_argument("formula")
    p.add_argument("--dpa", action="store_true")
    p.add_argument("-o", "--output")
    limits_flags(p)
    p.set_defaults(fn=cmd_automata)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    try:
        return args.fn(args)
    except ResourceLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FormulaError, CGSError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
