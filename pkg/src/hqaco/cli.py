"""Command-line entry point: ``hqaco {solve,benchmark,gen-instances,sweep,export}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import qap
from .aco import AcoConfig, run_aco
from .harness import (
    BenchmarkSpec,
    format_table,
    run_benchmark,
    substream,
    sweep,
    write_csv,
    write_sweep_csv,
)
from .qaco import (
    EXPLORATION_MODES,
    INITIAL_ANGLE,
    SIM_MODES,
    QacoConfig,
    beta_schedule,
    export_circuit,
    exploration_plan,
    run_qaco,
)


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints_or_auto(text: str) -> list[int | None]:
    return [None if t.strip() == "auto" else int(t) for t in text.split(",") if t.strip()]


def _algos(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of flag values (keys are flag names)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta0", type=float, default=0.13, help="initial exploration probability")
    p.add_argument("--conver-condition", type=int, default=None,
                   help="stagnation limit (default: fitted from the solution-set size)")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--mode", choices=SIM_MODES, default="unraveled")
    p.add_argument("--exploration", choices=EXPLORATION_MODES, default=None)
    p.add_argument("--ants", type=int, default=1)
    p.add_argument("--rho", type=float, default=0.05, help="trail evaporation for the classical colony")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqaco", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--algo", default="qaco", choices=("qaco", "aco", "brute"))
    _add_common(p)

    p = sub.add_parser("benchmark", help="repeated seeded runs with error statistics")
    p.add_argument("instances", nargs="*")
    p.add_argument("--bundled", action="store_true", help="use the five bundled 4x4 instances")
    p.add_argument("--algo", type=_algos, default=["qaco"], help="comma list of qaco,aco")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--escalate-ants", action="store_true")
    p.add_argument("--ant-cap", type=int, default=16)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("gen-instances", help="write random instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--ones", type=int, default=None, help="require exactly this many ones")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help=argparse.SUPPRESS)

    p = sub.add_parser("sweep", help="grid-evaluate parameters")
    p.add_argument("instances", nargs="*")
    p.add_argument("--gen-n", type=int, default=None, help="generate instances of this size instead")
    p.add_argument("--gen-count", type=int, default=10)
    p.add_argument("--ones", type=int, default=None)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--beta0", type=_floats, default=[0.13])
    p.add_argument("--conver-condition", type=_ints_or_auto, default=[None])
    p.add_argument("--table-scale", type=_floats, default=[1.0])
    p.add_argument("--mode", choices=SIM_MODES, default="unraveled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--config", help="JSON file of flag values")

    p = sub.add_parser("export", help="write one iteration as OpenQASM 2.0")
    p.add_argument("instance")
    p.add_argument("--iteration", type=int, default=1)
    p.add_argument("--beta", type=float, default=None, help="override the scheduled exploration probability")
    p.add_argument("--angles", type=_floats, default=None)
    _add_common(p)
    parser.commands = sub.choices
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        values = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser.commands[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, val in values.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r}")
        defaults[dest] = val
    sub.set_defaults(**defaults)
    # command-line flags still win over the file
    return parser.parse_args(argv)


def _qaco_config(args) -> QacoConfig:
    return QacoConfig(
        beta_e0=args.beta0,
        conver_condition=args.conver_condition,
        max_iter=args.max_iter,
        exploration=getattr(args, "exploration", None),
        sim_mode=args.mode,
    )


def _aco_config(args) -> AcoConfig:
    cfg = AcoConfig(rho=args.rho, beta_e=args.beta0, ants_per_iteration=args.ants)
    if args.conver_condition is not None:
        cfg = replace(cfg, conver_condition=args.conver_condition,
                      max_iter=args.max_iter or -(-args.conver_condition * 105 // 100))
    elif args.max_iter is not None:
        cfg = replace(cfg, max_iter=args.max_iter)
    return cfg


def cmd_solve(args) -> int:
    instance = qap.load_instance(args.instance)
    if args.algo == "brute":
        sol = qap.brute_force_opt(instance)
        print(f"best {sol.bits}")
        print(f"fitness {sol.fitness!r}")
        return 0
    rng, seed = substream(args.seed, instance.name, args.algo, args.ants, 0)
    if args.algo == "qaco":
        report = run_qaco(instance, _qaco_config(args), rng, seed=seed)
    else:
        report = run_aco(instance, _aco_config(args), rng, seed=seed)
    print(f"best {report.best.bits}")
    print(f"fitness {report.best.fitness!r}")
    print(f"exit_iteration {report.exit_iteration}")
    if args.out:
        with open(args.out, "w") as fh:
            report.dump(fh)
    return 0


def _load_many(paths: list[str]) -> list[qap.QapInstance]:
    return [qap.load_instance(p) for p in paths]


def cmd_benchmark(args) -> int:
    instances = _load_many(args.instances)
    if args.bundled:
        instances += list(qap.bundled_instances().values())
    if not instances:
        raise UsageError("no instances given (pass files or --bundled)")
    spec = BenchmarkSpec(
        instances=instances,
        algorithms=args.algo,
        runs=args.runs,
        seed=args.seed,
        ants=args.ants,
        escalate_ants=args.escalate_ants,
        ant_cap=args.ant_cap,
        qaco=_qaco_config(args),
        aco=_aco_config(args),
        workers=args.workers,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = run_benchmark(spec)
    print(format_table(rows))
    if args.out:
        with open(args.out, "w") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


def generate_instances(n: int, count: int, constraint: qap.Constraint, seed: int) -> list[qap.QapInstance]:
    out = []
    for i in range(count):
        rng, _ = substream(seed, "instance", n, i)
        out.append(qap.random_instance(n, constraint, rng, name=f"n{n}_{i:04d}"))
    return out


def cmd_gen_instances(args) -> int:
    constraint = qap.Constraint(args.ones)
    constraint.check(args.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for inst in generate_instances(args.n, args.count, constraint, args.seed):
        qap.save_instance(inst, out / f"{inst.name}.qap")
    print(f"wrote {args.count} instance(s) to {out}")
    return 0


def cmd_sweep(args) -> int:
    instances = _load_many(args.instances)
    if args.gen_n is not None:
        instances += generate_instances(args.gen_n, args.gen_count, qap.Constraint(args.ones), args.seed)
    if not instances:
        raise UsageError("no instances given (pass files or --gen-n)")
    rows = sweep(
        instances,
        beta0s=args.beta0,
        conver_conditions=args.conver_condition,
        table_scales=args.table_scale,
        runs=args.runs,
        seed=args.seed,
        base=QacoConfig(sim_mode=args.mode),
        workers=args.workers,
    )
    if args.out:
        with open(args.out, "w") as fh:
            write_sweep_csv(rows, fh)
    else:
        write_sweep_csv(rows, sys.stdout)
    return 0


def cmd_export(args) -> int:
    instance = qap.load_instance(args.instance)
    cfg = _qaco_config(args).resolved(instance)
    beta = args.beta if args.beta is not None else beta_schedule(args.iteration, cfg.beta_e0, cfg.max_iter)
    angles = args.angles if args.angles is not None else [INITIAL_ANGLE] * instance.n
    if len(angles) != instance.n:
        raise UsageError(f"need {instance.n} angles, got {len(angles)}")
    rng, _ = substream(args.seed, instance.name, "export", args.iteration)
    text = export_circuit(angles, beta, exploration_plan(instance.n, cfg.exploration, rng))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "benchmark": cmd_benchmark,
    "gen-instances": cmd_gen_instances,
    "sweep": cmd_sweep,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hqaco: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"hqaco: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
