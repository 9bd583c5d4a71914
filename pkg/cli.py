"""
Command Line Interface

Batch front end for the engine. Every command prints one JSON report on
standard output (sorted keys, so repeated runs are byte-identical) and
exits with:

    0  all verdicts non-failing
    1  a Distinct verdict, a failed check, or a domain error
    2  usage or syntax error

Commands:
    comm <expr>
    eval <expr> [--k K] [--order N] [--seed S] [--bound B] [--rep witness.json]
    eq <e1> <e2> [--sizes 2,3] [--order N] [--trials T] [--bound B] [--seed S]
    cremona apply --word <word> --to <expr>
    cremona verify --suite paper [eq flags] [--product N] [--scalar N] [--mobius N] [--duality N]
    delta --matrix <file> [--pivots r1,c1;r2,c2]
    closure {inv,prod,sum} --m <file> [--n <file>]

Configuration precedence: flag > environment variable (NC_SEED, ...) > default.
"""

import argparse
import json
import logging
import sys
import time

from commrat import commutativize
from config import load_settings
from cremona import SuiteSizes, classical_action, verify_relation_suite, word_to_auto, word_to_text
from errors import ExprSyntaxError, NCAlgebraError
from grammar import parse_nc, parse_word
from ncexpr import ExprStore, const
from repeq import EqConfig, RepEnv, eq_nc, represent
from vmatrix import VMatrix, closure_inverse, closure_product, closure_sum, decompose

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad files or flag values detected after argument parsing."""


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"sizes must be positive integers, got {text!r}")
    return values


def _pivot_list(text: str) -> list[tuple[int, int]]:
    pivots = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            r, c = (int(v) for v in chunk.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"pivots look like 'r1,c1;r2,c2', got {text!r}") from None
        pivots.append((r, c))
    return pivots


def _add_eq_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--sizes", type=_int_list, default=None, help="representation sizes, e.g. 2,3")
    parser.add_argument("--order", type=int, default=None, help="truncation order N")
    parser.add_argument("--trials", type=int, default=None, help="trials per size")
    parser.add_argument("--bound", type=int, default=None, help="entry bound B for S and T")
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides NC_SEED)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nc-algebra", description="Exact computations in the localized free algebra on x, y.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for detail (stderr)")
    parser.add_argument("--timing", action="store_true", help="add wall_time to the report")
    commands = parser.add_subparsers(dest="command", required=True)

    comm = commands.add_parser("comm", help="commutativization of an expression")
    comm.add_argument("expr")

    evaluate = commands.add_parser("eval", help="matrix-series representation of an expression")
    evaluate.add_argument("expr")
    evaluate.add_argument("--k", type=int, default=2)
    evaluate.add_argument("--order", type=int, default=None)
    evaluate.add_argument("--bound", type=int, default=None)
    evaluate.add_argument("--seed", type=int, default=None)
    evaluate.add_argument("--trial", type=int, default=0)
    evaluate.add_argument("--rep", default=None, help="witness JSON giving the environment")

    eq = commands.add_parser("eq", help="compare two expressions")
    eq.add_argument("e1")
    eq.add_argument("e2")
    _add_eq_flags(eq)

    cremona = commands.add_parser("cremona", help="Cremona words and relations")
    cremona_commands = cremona.add_subparsers(dest="action", required=True)
    apply_ = cremona_commands.add_parser("apply", help="apply a word to an expression")
    apply_.add_argument("--word", required=True)
    apply_.add_argument("--to", required=True, dest="target")
    verify = cremona_commands.add_parser("verify", help="run the relation suite")
    verify.add_argument("--suite", choices=["paper"], default="paper")
    _add_eq_flags(verify)
    defaults = SuiteSizes()
    verify.add_argument("--product", type=int, default=defaults.product, help="samples for t_a t_b = t_(ab)")
    verify.add_argument("--scalar", type=int, default=defaults.scalar, help="samples for scalar t_d")
    verify.add_argument("--mobius", type=int, default=defaults.mobius, help="samples for tau t_m tau")
    verify.add_argument("--duality", type=int, default=defaults.duality, help="samples for reversal duality")

    delta = commands.add_parser("delta", help="decompose a V-matrix")
    delta.add_argument("--matrix", required=True)
    delta.add_argument("--pivots", type=_pivot_list, default=None)

    closure = commands.add_parser("closure", help="closure constructions on designated elements")
    closure.add_argument("op", choices=["inv", "prod", "sum"])
    closure.add_argument("--m", required=True)
    closure.add_argument("--n", default=None)
    _add_eq_flags(closure)
    return parser


def _eq_config(args) -> EqConfig:
    return EqConfig.from_settings(
        load_settings(),
        sizes=getattr(args, "sizes", None),
        order=getattr(args, "order", None),
        trials=getattr(args, "trials", None),
        bound=getattr(args, "bound", None),
        seed=getattr(args, "seed", None),
    )


def _load_json(path: str) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_vmatrix(path: str) -> VMatrix:
    data = _load_json(path)
    if not isinstance(data, dict) or "entries" not in data:
        raise UsageError(f"{path} has no 'entries' list")
    try:
        return VMatrix.from_texts(data["entries"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ExprSyntaxError):
            raise
        raise UsageError(f"{path}: {exc}") from None


def cmd_comm(args, store: ExprStore) -> tuple[dict, int]:
    e = parse_nc(args.expr, store)
    return {"input": args.expr, "expr": str(e), "comm": commutativize(e).to_text()}, EXIT_OK


def cmd_eval(args, store: ExprStore) -> tuple[dict, int]:
    e = parse_nc(args.expr, store)
    if args.rep:
        try:
            env = RepEnv.from_dict(_load_json(args.rep))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"{args.rep} is not a witness: missing {exc}") from None
    else:
        settings = load_settings()
        seed = settings.seed if args.seed is None else args.seed
        order = settings.order if args.order is None else args.order
        bound = settings.bound if args.bound is None else args.bound
        env = RepEnv.derive(seed, args.k, args.trial, order, bound)
    matrix = represent(e, env)
    return {"input": args.expr, "expr": str(e), "env": env.to_dict(), "coefficients": matrix.to_rows()}, EXIT_OK


def cmd_eq(args, store: ExprStore) -> tuple[dict, int]:
    cfg = _eq_config(args)
    e1, e2 = parse_nc(args.e1, store), parse_nc(args.e2, store)
    verdict = eq_nc(e1, e2, cfg)
    log.info("eq: %s", verdict.name)
    report = {"inputs": [str(e1), str(e2)], "config": cfg.to_dict(), "result": verdict.to_dict()}
    return report, EXIT_FAILED if verdict.is_distinct else EXIT_OK


def cmd_cremona(args, store: ExprStore) -> tuple[dict, int]:
    if args.action == "apply":
        word = parse_word(args.word, store)
        f = word_to_auto(word, store)
        target = parse_nc(args.target, store)
        image = f.act(target)
        cx, cy = classical_action(word)
        report = {
            "word": word_to_text(word),
            "images": f.to_dict(),
            "classical": {"x": cx.to_text(), "y": cy.to_text()},
            "input": str(target),
            "result": str(image),
            "comm": commutativize(image).to_text(),
        }
        return report, EXIT_OK
    cfg = _eq_config(args)
    sizes = SuiteSizes(product=args.product, scalar=args.scalar, mobius=args.mobius, duality=args.duality)
    report = verify_relation_suite(cfg, cfg.seed, sizes)
    report["suite"] = args.suite
    return report, EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_delta(args, store: ExprStore) -> tuple[dict, int]:
    m = _load_vmatrix(args.matrix)
    d = decompose(m, args.pivots, store)
    report = d.to_dict()
    report["ratio_law"] = d.ratio_law_holds()
    return report, EXIT_OK if report["ratio_law"] else EXIT_FAILED


def cmd_closure(args, store: ExprStore) -> tuple[dict, int]:
    cfg = _eq_config(args)
    m = _load_vmatrix(args.m)
    dm = decompose(m, store=store)
    if args.op == "inv":
        p, dp = closure_inverse(dm)
        target = dm.delta.inv()
    else:
        if args.n is None:
            raise UsageError(f"closure {args.op} needs --n")
        n = _load_vmatrix(args.n)
        dn = decompose(n, store=store)
        if args.op == "prod":
            p, dp = closure_product(dm, dn)
            target = const(-1, store) * dn.delta * dm.delta
        else:
            p, dp = closure_sum(dm, dn)
            target = dm.delta + dn.delta
    comm_ok = commutativize(dp.delta) == commutativize(target)
    verdict = eq_nc(dp.delta, target, cfg)
    report = {
        "op": args.op,
        "P": p.to_texts(),
        "delta": str(dp.delta),
        "target": str(target),
        "comm": commutativize(dp.delta).to_text(),
        "comm_matches": comm_ok,
        "ratio_law": dp.ratio_law_holds(),
        "config": cfg.to_dict(),
        "result": verdict.to_dict(),
    }
    failed = verdict.is_distinct or not comm_ok or not report["ratio_law"]
    return report, EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    "comm": cmd_comm,
    "eval": cmd_eval,
    "eq": cmd_eq,
    "cremona": cmd_cremona,
    "delta": cmd_delta,
    "closure": cmd_closure,
}


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    """
    Run one command and print its JSON report.

    Args:
        argv: argument list (defaults to sys.argv[1:])

    Returns:
        int: the process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    start = time.perf_counter()
    store = ExprStore()
    try:
        report, code = COMMANDS[args.command](args, store)
    except (ExprSyntaxError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NCAlgebraError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    report["command"] = args.command
    if args.timing:
        report["wall_time"] = round(time.perf_counter() - start, 3)
    print(json.dumps(report, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
