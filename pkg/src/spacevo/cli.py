"""Command-line entry point.

Exit codes: 0 success, 1 verification found a violation, 2 configuration
error, 3 backend failure, 4 bad input (unparseable or failing program,
malformed data file).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional

from . import xsearch
from .corpus import get as corpus_get
from .llm_gateway import GatewayError, HttpBackend, ScriptedBackend
from .orchestrator import EvolveConfig, PromptTemplate, run_evolution
from .priolang import EvalError, ParseError, SourceProgram, StepLimitExceeded, concrete, parse
from .problems import (
    PREDICATES,
    PROBLEMS,
    AdmissibleParams,
    CycleProductSpec,
    capacity_lower_bound,
    check_admissible,
    find_adjacent_pair,
    find_collinear_triple,
    gen_or_dataset,
    gen_weibull_dataset,
    make_problem,
    save_instances,
)
from .progdb import ProgramDatabase

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_BACKEND, EXIT_INPUT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _problem_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--problem", choices=PROBLEMS, required=required)
    p.add_argument("--n", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--dataset", help="JSON instance file for bin packing")
    p.add_argument("--predicate", choices=sorted(PREDICATES),
                   help="admissibility predicate (default: distinct)")
    p.add_argument("--seed", type=int)


def _search_args(p: argparse.ArgumentParser):
    p.add_argument("--batch-size", type=int)
    p.add_argument("--k-stall", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--temperature", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spacevo", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log search progress")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the evolution loop")
    r.add_argument("--config", help="JSON run config; flags override its values")
    _problem_args(r, required=False)
    _search_args(r)
    for flag in ("--budget", "--k-reset", "--k-search", "--k-ref", "--k-cluster"):
        r.add_argument(flag, type=int)
    r.add_argument("--backend", choices=("http", "scripted"))
    r.add_argument("--replay-file", help="JSON-lines responses for the scripted backend")
    r.add_argument("--seed-program", help="file with an initial priority function")
    r.add_argument("--templates", help="directory overriding the bundled prompt templates")
    r.add_argument("--db", help="directory for per-process databases (default OUT/db)")
    r.add_argument("--out", default="run_out", help="output directory")

    e = sub.add_parser("evaluate", help="score a program without tunable markers")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("program", nargs="?", help="program file")
    src.add_argument("--corpus", help="name of a bundled program, e.g. program_4")
    _problem_args(e)

    v = sub.add_parser("verify", help="check a JSON set file")
    v.add_argument("kind", choices=("capset", "admissible", "independent"))
    v.add_argument("set_file")
    v.add_argument("--n", type=int)
    v.add_argument("--w", type=int)
    v.add_argument("--m", type=int)
    v.add_argument("--predicate", choices=sorted(PREDICATES), default="distinct")

    b = sub.add_parser("bound", help="cap-set constant from an admissible set size")
    b.add_argument("s", type=int)
    b.add_argument("n", type=int)
    b.add_argument("w", type=int)
    b.add_argument("--m", default="auto", help="recursion parameter or 'auto'")

    g = sub.add_parser("gen-data", help="generate a bin-packing dataset")
    g.add_argument("kind", choices=("or", "weibull"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--num-instances", type=int)
    g.add_argument("--items", type=int, help="items per instance")
    g.add_argument("--out", help="output file (default: <kind>_seed<seed>.json)")

    rp = sub.add_parser("replay", help="show the best entries of a database")
    rp.add_argument("--db", required=True, nargs="+", help="JSON-lines database file(s)")
    rp.add_argument("--top", type=int, default=1)

    x = sub.add_parser("xsearch", help="search the space of one tunable program")
    x.add_argument("program", help="tunable program file")
    _problem_args(x)
    _search_args(x)
    x.add_argument("--out", help="write the compacted program here")
    return ap


def _read_program(path: str) -> SourceProgram:
    try:
        with open(path, encoding="utf-8") as fh:
            return SourceProgram(fh.read(), "user")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None


def _make_problem(args, seed_default: int = 0):
    try:
        return make_problem(args.problem, n=args.n, w=args.w, m=args.m, dataset=args.dataset,
                            seed=args.seed if args.seed is not None else seed_default,
                            predicate=args.predicate or "distinct")
    except OSError as exc:
        raise CliError(f"cannot read dataset: {exc}", EXIT_INPUT) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def cmd_evaluate(args) -> int:
    if args.corpus:
        try:
            source = SourceProgram(corpus_get(args.corpus).text(), "user")
        except KeyError as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    else:
        source = _read_program(args.program)
    problem = _make_problem(args)
    try:
        program = concrete(source)
    except (ParseError, EvalError) as exc:
        raise CliError(f"invalid program: {exc}", EXIT_INPUT) from None
    score = problem.evaluator(program)
    if score is None:
        raise CliError("program failed during evaluation", EXIT_INPUT)
    print(_fmt(score))
    return EXIT_OK


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load {path}: {exc}", EXIT_INPUT) from None


def cmd_verify(args) -> int:
    data = _load_json(args.set_file)
    if not isinstance(data, list) or not all(isinstance(v, list) for v in data):
        raise CliError(f"{args.set_file}: expected a JSON array of integer arrays", EXIT_INPUT)
    try:
        if args.kind == "capset":
            bad = find_collinear_triple(data)
            report = bad and "collinear triple: " + ", ".join(str(list(v)) for v in bad)
        elif args.kind == "admissible":
            if args.n is None or args.w is None:
                raise CliError("admissible needs --n and --w", EXIT_CONFIG)
            bad = check_admissible(data, AdmissibleParams(args.n, args.w),
                                   PREDICATES[args.predicate])
            report = bad and str(bad)
        else:
            if args.m is None:
                raise CliError("independent needs --m", EXIT_CONFIG)
            n = args.n if args.n is not None else (len(data[0]) if data else 1)
            bad = find_adjacent_pair(data, CycleProductSpec(args.m, n))
            report = bad and "adjacent pair: " + ", ".join(str(list(v)) for v in bad)
    except (ValueError, TypeError) as exc:
        raise CliError(f"{args.set_file}: {exc}", EXIT_INPUT) from None
    if report:
        print(report)
        return EXIT_VIOLATION
    print("PASS")
    return EXIT_OK


def cmd_bound(args) -> int:
    m = args.m if args.m == "auto" else _int(args.m, "--m")
    try:
        res = capacity_lower_bound(args.s, args.n, args.w, m)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    print(f"C={res.C:.6f} dimension={res.dimension} m={res.m}")
    return EXIT_OK


def _int(text: str, flag: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise CliError(f"{flag} expects an integer or 'auto'", EXIT_CONFIG) from None


def cmd_gen_data(args) -> int:
    if args.kind == "or":
        data = gen_or_dataset(args.seed, args.num_instances or 20, args.items or 120)
    else:
        data = gen_weibull_dataset(args.seed, args.num_instances or 5, args.items or 5000)
    out = args.out or f"{args.kind}_seed{args.seed}.json"
    save_instances(data, out)
    print(f"wrote {len(data)} instances to {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    entries = []
    for path in args.db:
        try:
            entries.extend(ProgramDatabase.load(path).sampleable)
        except (OSError, ValueError) as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    entries.sort(key=lambda e: -e.score)
    for e in entries[:args.top]:
        print(f"# id={e.id} process={e.process_id} score={_fmt(e.score)}")
        print(e.source.rstrip())
    return EXIT_OK


def _xsearch_config(args, base: Optional[xsearch.XSearchConfig] = None) -> xsearch.XSearchConfig:
    base = base or xsearch.XSearchConfig()
    try:
        return xsearch.XSearchConfig(
            args.batch_size or base.batch_size,
            args.temperature or base.temperature,
            args.k_stall or base.k_stall,
            args.top_k or base.top_k,
            seed=args.seed if args.seed is not None else base.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def cmd_xsearch(args) -> int:
    source = _read_program(args.program)
    problem = _make_problem(args)
    try:
        tp = parse(source.text)
    except ParseError as exc:
        raise CliError(f"invalid program: {exc}", EXIT_INPUT) from None
    out = xsearch.run(tp, problem.evaluator, _xsearch_config(args))
    if out.failed:
        raise CliError("no sampled program evaluated successfully", EXIT_INPUT)
    print(f"best score: {_fmt(out.best_score)}")
    print(f"evaluations: {out.evaluations_used} in {out.rounds} rounds")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out.compacted.text)
    else:
        print(out.compacted.text.rstrip())
    return EXIT_OK


_RUN_KEYS = {"budget": "budget", "k_reset": "k_reset", "k_search": "k_search",
             "k_ref": "k_ref", "k_cluster": "k_cluster", "k_stall": "k_stall",
             "top_k": "top_k", "batch_size": "batch_size", "temperature": "temperature",
             "seed": "seed"}
_PROBLEM_KEYS = ("problem", "n", "w", "m", "dataset", "predicate")


def _run_settings(args) -> dict:
    conf = _load_json(args.config) if args.config else {}
    if not isinstance(conf, dict):
        raise CliError("run config must be a JSON object", EXIT_CONFIG)
    for key in _PROBLEM_KEYS + tuple(_RUN_KEYS) + ("backend", "replay_file", "seed_program",
                                                   "templates"):
        val = getattr(args, key, None)
        if val is not None:
            conf[key] = val
    return conf


def cmd_run(args) -> int:
    conf = _run_settings(args)
    if "problem" not in conf:
        raise CliError("--problem is required", EXIT_CONFIG)
    ns = argparse.Namespace(**{k: conf.get(k) for k in _PROBLEM_KEYS})
    ns.seed = conf.get("seed", 0)
    problem = _make_problem(ns)

    evolve = {"k_stall": problem.k_stall, "k_reset": problem.k_reset}
    evolve.update({v: conf[k] for k, v in _RUN_KEYS.items() if k in conf})
    extra = set(conf) - set(_RUN_KEYS) - set(_PROBLEM_KEYS) - {
        "backend", "replay_file", "seed_program", "templates", "refs_order", "model",
        "max_tokens", "p0"}
    if extra:
        raise CliError(f"unknown config keys: {', '.join(sorted(extra))}", EXIT_CONFIG)
    for k in ("refs_order", "model", "max_tokens", "p0"):
        if k in conf:
            evolve[k] = conf[k]
    if conf.get("seed_program"):
        evolve["seed_program"] = SourceProgram(_read_program(conf["seed_program"]).text, "seed")
    try:
        cfg = EvolveConfig.from_dict(evolve)
        template = PromptTemplate.load(problem.template, problem.hint, conf.get("templates"))
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None

    kind = conf.get("backend", "http")
    if kind == "scripted":
        if not conf.get("replay_file"):
            raise CliError("scripted backend needs --replay-file", EXIT_CONFIG)
        try:
            backend = ScriptedBackend.from_file(conf["replay_file"])
        except (OSError, ValueError) as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    elif kind == "http":
        try:
            backend = HttpBackend.from_env()
        except GatewayError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None
    else:
        raise CliError(f"unknown backend {kind!r}", EXIT_CONFIG)

    out = args.out
    db_dir = args.db or os.path.join(out, "db")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "progress.jsonl"), "w", encoding="utf-8") as prog:
        try:
            report = run_evolution(cfg, problem, backend, template, db_dir=db_dir,
                                   progress=lambda line: prog.write(line + "\n"))
        except GatewayError as exc:
            raise CliError(f"backend failure: {exc}", EXIT_BACKEND) from None
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    if report.global_best:
        with open(os.path.join(out, "best_program.py"), "w", encoding="utf-8") as fh:
            fh.write(report.global_best["source"])
        print(f"best score: {_fmt(report.global_best['score'])}")
    else:
        print("no valid program found")
    print(f"calls: {report.calls}, halving events: {len(report.halving_events)}, output: {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "evaluate": cmd_evaluate, "verify": cmd_verify, "bound": cmd_bound,
            "gen-data": cmd_gen_data, "replay": cmd_replay, "xsearch": cmd_xsearch}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (EvalError, StepLimitExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
