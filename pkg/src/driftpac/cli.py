"""Command line front end.

Failures print one line ``error: <code>: <message>`` on stderr and exit
with status 2.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings

from . import __version__
from .config import load_config
from .domain import (log_valued_space_cardinality, parse_tuple,
                     read_oracle, read_schema, write_oracle)
from .drift import ABSTAIN_ADVICE, DEFAULT_BUDGET, STRATEGIES, diagnose
from .errors import ConfigError, DriftPacError
from .experiments import (drift_compare, error_claim, pac_validate,
                          reproduce_table1, simulate, write_outputs)
from .kernels import DEFAULT_EPOCHS, DEFAULT_REG, KernelSpec
from .pac import PlanningQuery, bound_table, min_sample_size
from .population import sample_oracle
from .therapy import advise, read_plans


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: usage: {message}\n")
        sys.exit(2)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _kernel(text: str) -> KernelSpec:
    try:
        return KernelSpec.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps subcommand defaults from clobbering flags given
    # before the subcommand name.
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="directory for report files and manifest.json")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="experiment config file (INI)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)

    p = _Parser(prog="driftpac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--jobs", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("plan", parents=[common],
                        help="minimum oracle size for precision/reliability targets")
    sp.add_argument("--epsilon", type=_floats, required=True)
    sp.add_argument("--delta", type=_floats, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--ln-cardinality", type=float)
    g.add_argument("--schema", help="file whose first line is a schema header")
    sp.add_argument("--table", action="store_true",
                    help="print the full epsilon x delta grid")
    sp.add_argument("--csv", action="store_true", help="comma-separated output")

    sp = sub.add_parser("diagnose", parents=[common],
                        help="fuse possible-world classifiers for one patient")
    sp.add_argument("--oracle", required=True)
    sp.add_argument("--patient", required=True, help="comma-separated sign values")
    sp.add_argument("--kernel", type=_kernel, default=KernelSpec.gaussian())
    sp.add_argument("--strategy", choices=STRATEGIES, default="voting")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--sample", action="store_true",
                    help="sample worlds when they exceed the budget")
    sp.add_argument("--reg", type=float, default=DEFAULT_REG)
    sp.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    sp.add_argument("--alarm", choices=("+", "-"), default="+")
    sp.add_argument("--expand-patient", action="store_true")
    sp.add_argument("--tally", metavar="FILE", help="write per-world votes here")

    sp = sub.add_parser("advise", parents=[common],
                        help="cautious therapy-plan advice")
    sp.add_argument("--plans", required=True)
    sp.add_argument("--patient", required=True)
    sp.add_argument("--kernel", type=_kernel, default=KernelSpec.gaussian())
    sp.add_argument("--strategy", choices=STRATEGIES, default="cautious")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--sample", action="store_true")
    sp.add_argument("--reg", type=float, default=DEFAULT_REG)

    sp = sub.add_parser("simulate", parents=[common],
                        help="evolve a synthetic drifting population")
    sp.add_argument("--ticks", type=int, default=10)
    sp.add_argument("--dump-oracle", nargs=2, metavar=("N", "FILE"))

    for name, text in (("pac-validate", "empirical check of the sample-size bound"),
                       ("drift-compare", "single classifier vs fused ensembles under drift"),
                       ("reproduce-table1", "regenerate the sample-size table"),
                       ("error-claim", "error of small-oracle voting ensembles")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def _emit(args, name: str, body: str, started: float, digest=None):
    sys.stdout.write(body)
    if args.out:
        write_outputs(args.out, {name: body}, seed=args.seed,
                      config_digest=digest, started=started)


def cmd_plan(args) -> str:
    if args.schema:
        log_card = log_valued_space_cardinality(read_schema(args.schema))
    else:
        log_card = args.ln_cardinality
    if args.table or len(args.epsilon) > 1 or len(args.delta) > 1:
        table = bound_table(args.epsilon, args.delta, log_card)
        return table.to_csv() if args.csv else table.to_text() + "\n"
    q = PlanningQuery(log_card, args.epsilon[0], args.delta[0])
    n = min_sample_size(q)
    if args.csv:
        return (f"epsilon,delta,log_cardinality,min_sample_size\n"
                f"{q.epsilon:g},{q.delta:g},{log_card:g},{n}\n")
    return (f"ln|V|: {log_card:.6g}\nepsilon: {q.epsilon:g}\n"
            f"delta: {q.delta:g}\nmin_sample_size: {n}\n")


def cmd_diagnose(args) -> str:
    oracle = read_oracle(args.oracle)
    patient = parse_tuple(args.patient, len(oracle.schema))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = diagnose(oracle, patient, args.kernel, args.strategy, args.reg,
                          args.epochs, args.seed, args.budget, args.sample,
                          alarm_label=args.alarm == "+",
                          expand_patient=args.expand_patient)
    d = result.decision
    lines = [f"label: {d.label_token()}",
             f"confidence: {d.confidence:.6f}",
             f"strategy: {d.strategy}",
             f"tally_positive: {d.tally[0]}",
             f"tally_negative: {d.tally[1]}",
             f"worlds_evaluated: {d.worlds_evaluated}"]
    if d.abstained:
        lines.append(f"advice: {ABSTAIN_ADVICE}")
    lines += [f"warning: {w.message}" for w in {str(w.message): w for w in caught}.values()]
    if args.tally:
        with open(args.tally, "w") as fh:
            fh.write("world,label,margin\n")
            for w, lab, m in result.votes:
                fh.write(f"{w},{'+' if lab else '-'},{m!r}\n")
    return "\n".join(lines) + "\n"


def cmd_advise(args) -> str:
    if args.strategy != "cautious":
        raise ConfigError(f"therapy advice supports only the cautious strategy, "
                          f"not {args.strategy!r}")
    schema, plans = read_plans(args.plans)
    patient = parse_tuple(args.patient, len(schema))
    adv = advise(plans, patient, schema, args.kernel, args.reg, args.seed,
                 args.budget, args.sample)
    lines = [f"status: {adv.status}", f"worlds_evaluated: {adv.worlds_evaluated}"]
    if adv.top_plan is not None:
        lines.append(f"top_plan: {adv.top_plan}")
    else:
        lines.append(f"advice: {ABSTAIN_ADVICE}")
        lines += [f"top_in_worlds: {pid} {cnt}" for pid, cnt in adv.histogram]
    lines += [f"rank: {pid} {score:.6f}" for pid, score in adv.ranking.entries]
    lines += [f"tie: {' '.join(t)}" for t in adv.ranking.ties]
    lines += [f"excluded: {pid}" for pid in adv.ranking.excluded]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        if args.command == "plan":
            _emit(args, "plan.txt", cmd_plan(args), started)
        elif args.command == "diagnose":
            _emit(args, "diagnosis.txt", cmd_diagnose(args), started)
        elif args.command == "advise":
            _emit(args, "advice.txt", cmd_advise(args), started)
        elif args.command == "reproduce-table1":
            _emit(args, "reproduce-table1.csv", reproduce_table1().body(), started)
        else:
            cfg = load_config(args.config)
            if args.command == "simulate":
                rep, state = simulate(cfg, args.ticks)
                if args.dump_oracle:
                    n, path = args.dump_oracle
                    try:
                        n = int(n)
                    except ValueError:
                        raise ConfigError(f"--dump-oracle size must be an integer, got {n!r}")
                    write_oracle(sample_oracle(state, n, args.seed), path)
                body = rep.body()
            elif args.command == "pac-validate":
                body = pac_validate(cfg, args.seed, args.jobs).body()
            elif args.command == "drift-compare":
                body = drift_compare(cfg, args.seed).body()
            else:
                body = error_claim(cfg, args.seed, args.jobs).body()
            _emit(args, f"{args.command}.csv", body, started, cfg.digest)
    except DriftPacError as exc:
        sys.stderr.write(f"error: {exc.code}: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: io: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
