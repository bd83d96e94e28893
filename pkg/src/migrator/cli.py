"""Command-line driver: the top-level synthesis loop and its subcommands.

    migrator synth  -p src.dbp -s src.schema -t tgt.schema -o out.dbp
    migrator check  a.dbp b.dbp --schema-a a.schema --schema-b b.schema
    migrator sketch -p src.dbp -s src.schema -t tgt.schema [--phi-index K]
    migrator vc     -p src.dbp -s src.schema -t tgt.schema [-k N]

Exit codes: 0 success, 1 synthesis failure / inequivalent, 2 input error,
3 timeout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from .core import MigratorError, Program, Schema, ValueType
from .equiv import TestConfig, bounded_verify, find_mfi
from .parser import parse_program, parse_schema, pretty_print
from .sketch_gen import SketchGenError, gen_sketch, render_sketch
from .sketch_solver import (
    SolveConfig,
    complete_sketch,
    completion_count,
    encode_sketch,
)
from .solver import dump_dimacs
from .value_corr import (
    DEFAULT_ALPHA,
    encode_vc,
    format_correspondence,
    next_value_corr,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_TIMEOUT = 3


@dataclass
class SynthesisConfig:
    program_path: str
    source_schema_path: str
    target_schema_path: str
    output_path: Optional[str]
    alpha: int = DEFAULT_ALPHA
    test: TestConfig = field(default_factory=TestConfig)
    compose_mode: str = "choice"
    wf_constraints: bool = True
    timeout: float = 300.0
    max_value_corrs: Optional[int] = None
    dump_vc: bool = False
    dump_sketch: bool = False
    dump_cnf: bool = False


@dataclass
class SynthesisReport:
    status: str  # "found", "exhausted", "timeout", or "unmappable"
    program: Optional[Program] = None
    value_corrs: int = 0
    iterations: int = 0
    elapsed: float = 0.0


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def synthesize(
    cfg: SynthesisConfig,
    source: Schema,
    target: Schema,
    program: Program,
) -> SynthesisReport:
    """Algorithm: enumerate value correspondences best-first; for each, build
    the most general sketch and try to complete it; the first correspondence
    whose sketch admits a bounded-verified completion wins."""
    start = time.monotonic()
    deadline = start + cfg.timeout
    enc = encode_vc(source, target, program, cfg.alpha)
    report = SynthesisReport(status="exhausted")
    while True:
        if time.monotonic() > deadline:
            report.status = "timeout"
            break
        if cfg.max_value_corrs is not None and report.value_corrs >= cfg.max_value_corrs:
            break
        phi = next_value_corr(enc)
        if phi is None:
            break
        report.value_corrs += 1
        _log(f"value correspondence #{report.value_corrs}")
        if cfg.dump_vc:
            _log(format_correspondence(phi))
        try:
            sketch = gen_sketch(program, phi, source, target, cfg.compose_mode)
        except SketchGenError as e:
            _log(f"  sketch generation failed: {e}")
            continue
        if cfg.dump_sketch:
            _log(render_sketch(sketch))
        if cfg.dump_cnf:
            formula, _ = encode_sketch(sketch, cfg.wf_constraints)
            _log(dump_dimacs(formula))
        _log(f"  completions: {completion_count(sketch)}")

        def progress(iteration: int, remaining: Optional[int], mfi: Optional[str]) -> None:
            left = "?" if remaining is None else str(remaining)
            _log(f"  iteration {iteration}, models remaining {left}, mfi: {mfi}")

        result = complete_sketch(
            sketch,
            program,
            SolveConfig(
                source_schema=source,
                target_schema=target,
                test=cfg.test,
                wf_constraints=cfg.wf_constraints,
                timeout=max(0.0, deadline - time.monotonic()),
                progress=progress,
            ),
        )
        report.iterations += result.iterations
        if result.status == "found":
            report.status = "found"
            report.program = result.program
            break
        if result.status == "timeout":
            report.status = "timeout"
            break
        _log(f"  no completion after {result.iterations} candidates")
    report.elapsed = time.monotonic() - start
    return report


# ============================================================
# Argument handling
# ============================================================


def _env_default(name: str, fallback):
    return os.environ.get(f"MIGRATOR_{name}", fallback)


def _parse_seeds(args) -> TestConfig:
    ints = tuple(int(x) for x in str(args.seed_ints).split(",") if x != "")
    strs = tuple(x for x in str(args.seed_strs).split(",") if x != "")
    raw_bins = [x for x in str(args.seed_bins).split(",") if x != ""]
    bins = []
    for token in raw_bins:
        if token.startswith("0x") or token.startswith("0X"):
            token = token[2:]
        bins.append(bytes.fromhex(token))
    return TestConfig(
        seeds={
            ValueType.INT: ints,
            ValueType.STR: strs,
            ValueType.BIN: tuple(bins),
        },
        max_len=int(args.max_seq_len),
        compare=args.compare,
    )


def _add_test_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument(
        "--max-seq-len", default=_env_default("MAX_SEQ_LEN", 3),
        help="bound on invocation sequence length (default 3)",
    )
    sp.add_argument("--seed-ints", default=_env_default("SEED_INTS", "0,1"))
    sp.add_argument("--seed-strs", default=_env_default("SEED_STRS", "A,B"))
    sp.add_argument("--seed-bins", default=_env_default("SEED_BINS", "00,01"))
    sp.add_argument("--compare", choices=("bag", "list"), default="bag")


def _add_pipeline_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("-p", "--program", required=True, help="source program (.dbp)")
    sp.add_argument("-s", "--source-schema", required=True)
    sp.add_argument("-t", "--target-schema", required=True)
    sp.add_argument(
        "--alpha", type=int, default=int(_env_default("ALPHA", DEFAULT_ALPHA)),
        help="similarity base constant for the correspondence objective",
    )
    sp.add_argument(
        "--compose-mode", choices=("choice", "subset"), default="choice",
        help="how alternative update rewrites compose into the sketch",
    )


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="migrator",
        description="Synthesize an equivalent database program over a refactored schema",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="run the full synthesis pipeline")
    _add_pipeline_flags(synth)
    synth.add_argument("-o", "--output", required=True, help="path for the synthesized program")
    _add_test_flags(synth)
    synth.add_argument(
        "--no-wf-constraints", dest="wf_constraints", action="store_false",
        help="drop well-formedness side constraints from the encoding",
    )
    synth.add_argument(
        "--timeout", type=float, default=float(_env_default("TIMEOUT", 300.0))
    )
    synth.add_argument(
        "--max-vc", type=int, default=None,
        help="give up after this many value correspondences",
    )
    synth.add_argument("--dump-vc", action="store_true")
    synth.add_argument("--dump-sketch", action="store_true")
    synth.add_argument("--dump-cnf", action="store_true")
    synth.add_argument(
        "--report", choices=("json",), default=None,
        help="print a machine-readable summary to stdout",
    )

    check = sub.add_parser("check", help="bounded equivalence of two programs")
    check.add_argument("program_a")
    check.add_argument("program_b")
    check.add_argument("--schema-a", required=True)
    check.add_argument("--schema-b", required=True)
    _add_test_flags(check)

    sketch = sub.add_parser("sketch", help="dump the sketch for one correspondence")
    _add_pipeline_flags(sketch)
    sketch.add_argument(
        "--phi-index", type=int, default=0,
        help="0-based index into the correspondence enumeration",
    )
    sketch.add_argument("--dump-cnf", action="store_true")

    vc = sub.add_parser("vc", help="list the best value correspondences")
    _add_pipeline_flags(vc)
    vc.add_argument("-k", type=int, default=1, help="how many to list")
    return ap


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_inputs(args):
    source = parse_schema(_read(args.source_schema))
    target = parse_schema(_read(args.target_schema))
    program = parse_program(_read(args.program), source)
    return source, target, program


def _cmd_synth(args) -> int:
    cfg = SynthesisConfig(
        program_path=args.program,
        source_schema_path=args.source_schema,
        target_schema_path=args.target_schema,
        output_path=args.output,
        alpha=args.alpha,
        test=_parse_seeds(args),
        compose_mode=args.compose_mode,
        wf_constraints=args.wf_constraints,
        timeout=args.timeout,
        max_value_corrs=args.max_vc,
        dump_vc=args.dump_vc,
        dump_sketch=args.dump_sketch,
        dump_cnf=args.dump_cnf,
    )
    source, target, program = _load_inputs(args)
    report = synthesize(cfg, source, target, program)
    if report.program is not None:
        text = pretty_print(report.program)
        # the output must re-parse and re-validate against the target schema
        parse_program(text, target)
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _log(
            f"synthesized {args.output} after {report.value_corrs} correspondence(s), "
            f"{report.iterations} candidate(s), {report.elapsed:.1f}s"
        )
    else:
        _log(
            f"synthesis failed ({report.status}) after {report.value_corrs} "
            f"correspondence(s), {report.iterations} candidate(s), {report.elapsed:.1f}s"
        )
    if args.report == "json":
        print(
            json.dumps(
                {
                    "status": report.status,
                    "value_correspondences": report.value_corrs,
                    "iterations": report.iterations,
                    "elapsed_seconds": round(report.elapsed, 3),
                    "output": args.output if report.program else None,
                }
            )
        )
    if report.status == "found":
        return EXIT_OK
    return EXIT_TIMEOUT if report.status == "timeout" else EXIT_FAILURE


def _cmd_check(args) -> int:
    schema_a = parse_schema(_read(args.schema_a))
    schema_b = parse_schema(_read(args.schema_b))
    prog_a = parse_program(_read(args.program_a), schema_a)
    prog_b = parse_program(_read(args.program_b), schema_b)
    cfg = _parse_seeds(args)
    omega = find_mfi(prog_a, prog_b, cfg, schema_a, schema_b)
    if omega is None:
        print("equivalent (bounded)")
        return EXIT_OK
    print(f"not equivalent; failing input: {omega}")
    return EXIT_FAILURE


def _cmd_sketch(args) -> int:
    source, target, program = _load_inputs(args)
    enc = encode_vc(source, target, program, args.alpha)
    phi = None
    for _ in range(args.phi_index + 1):
        phi = next_value_corr(enc)
        if phi is None:
            _log("correspondence enumeration exhausted before requested index")
            return EXIT_FAILURE
    sketch = gen_sketch(program, phi, source, target, args.compose_mode)
    print(render_sketch(sketch))
    print(f"// completions: {completion_count(sketch)}")
    if args.dump_cnf:
        formula, _ = encode_sketch(sketch)
        print(dump_dimacs(formula))
    return EXIT_OK


def _cmd_vc(args) -> int:
    source, target, program = _load_inputs(args)
    enc = encode_vc(source, target, program, args.alpha)
    for i in range(args.k):
        phi = next_value_corr(enc)
        if phi is None:
            break
        print(f"// candidate {i + 1}")
        print(format_correspondence(phi))
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code not in (0, None) else EXIT_OK
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "sketch":
            return _cmd_sketch(args)
        if args.command == "vc":
            return _cmd_vc(args)
    except (OSError, ValueError, MigratorError) as e:
        _log(f"error: {e}")
        return EXIT_INPUT
    return EXIT_INPUT


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
