"""Command line entry point: ``cosparse <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 infeasible configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import bench, linops, model, oracle, solver, theory
from .errors import (
    CombinatorialGuardError,
    ConditionNumberError,
    ConfigError,
    CosparseError,
    InfeasibleCosparsityError,
    InfiniteWeightError,
    LinearSolveError,
    TheoryInapplicableError,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver_config(args):
    return solver.SolverConfig(
        q=args.q, l=args.l, lam=args.lam, shrink=args.shrink, tau=args.tau,
        max_iter=args.max_iter, eps0=args.eps0, eps_floor=args.eps_floor)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen(args):
    omega = None
    if args.operator == "fd2d":
        omega = linops.fd2d_operator(args.height, args.width)
        p, d = omega.shape
    else:
        p, d = args.p, args.d
    prob = model.make_problem(args.m, d, p, args.l, args.sigma, args.seed, omega=omega)
    out = args.out or "problem"
    model.save_problem(prob, out)
    if args.json:
        _emit({"directory": out, "m": prob.m, "d": prob.d, "p": prob.p, "l": prob.l,
               "sigma": prob.sigma, "seed": prob.seed})
    return EXIT_OK


def cmd_solve(args):
    A = linops.read_matrix(args.A)
    y = linops.read_vector(args.y)
    omega = linops.read_matrix(args.omega)
    res = solver.solve(A, y, omega, _solver_config(args))
    if args.out:
        linops.write_vector(res.x_hat, args.out)
    if args.trace:
        res.write_trace(args.trace)
    summary = {"iterations": res.iterations, "converged": res.converged,
               "objective": res.objective, "eps": res.eps, "warnings": res.warnings}
    if args.json or not args.out:
        if not args.out:
            summary["x_hat"] = [float(v) for v in res.x_hat]
        _emit(summary)
    return EXIT_OK


def cmd_oracle(args):
    A = linops.read_matrix(args.A)
    y = linops.read_vector(args.y)
    omega = linops.read_matrix(args.omega)
    res = oracle.brute_force_lq(A, y, omega, args.q, args.noise_bound, args.l_min)
    _emit(res.to_dict(), args.out)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_theory(args):
    kind = args.kind
    if kind == "constants":
        inputs = theory.TheoryInputs(args.delta_rhoS, args.delta_rho1S, args.kappa, args.rho,
                                     args.q, args.S, args.sigma_min)
        c = theory.bound_constants(inputs)
        out = {"c1": c.c1, "c2": c.c2, "condition_holds": theory.check_condition(inputs)}
    elif kind == "threshold":
        out = {"threshold": theory.strong_threshold(args.kappa, args.q, args.rho)}
    elif kind == "sq":
        s_q, rho_q = theory.lq_sparsity_level(args.S, args.rho, args.q)
        out = {"s_q": s_q, "rho_q": float(rho_q), "rho_q_exact": str(rho_q)}
    elif kind == "bound":
        out = {"bound": theory.solver_error_bound(args.delta, args.F0, args.noise)}
    else:
        found = theory.min_feasible_q(args.delta, args.kappa)
        out = {"q": None, "rho": None} if found is None else {"q": found[0], "rho": found[1]}
    _emit(out, args.out)
    return EXIT_OK


def _experiment(args):
    if args.config:
        config = bench.ExperimentConfig.from_json(args.config)
    else:
        config = bench.preset(args.preset or "figure1")
    if args.trials is not None:
        config.trials = args.trials
    if args.seed is not None:
        config.base_seed = args.seed
    if args.m_values:
        config.m_values = args.m_values
    if args.q_values:
        config.q_values = args.q_values
    if args.l_values:
        config.l_values = args.l_values
    config.validate()
    return config


def cmd_phase(args):
    config = _experiment(args)
    outcome = bench.run_phase(config, threads=args.threads)
    if args.json:
        _emit({"cells": [dict(c._asdict(), success_rate=c.success_rate) for c in outcome.cells],
               "lambda_choice": [{"q": q, "m": m, "l": l, "lam": lam}
                                 for (q, m, l), lam in outcome.lambda_choice.items()]}, args.out)
    elif args.out:
        bench.emit_csv(outcome.cells, args.out)
    else:
        bench.emit_csv(outcome.cells, sys.stdout)
    return EXIT_OK


def cmd_preset(args):
    config = bench.preset(args.name)
    if args.trials is not None:
        config.trials = args.trials
    if args.seed is not None:
        config.base_seed = args.seed
    _emit(config.to_dict(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--A", required=True, help="measurement matrix file")
    p.add_argument("--y", required=True, help="observation vector file")
    p.add_argument("--omega", required=True, help="analysis operator file")
    p.add_argument("--q", type=float, required=True)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--threads", type=int, default=1)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output")
    fmt.add_argument("--csv", action="store_true", help="CSV output (default for phase)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cosparse", description="Cosparse recovery by lq-analysis minimisation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a problem directory")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, default=120)
    p.add_argument("--p", type=int, default=144)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--operator", choices=["tight", "fd2d"], default="tight")
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--width", type=int, default=8)
    p.set_defaults(func=cmd_gen, seed=0)

    p = sub.add_parser("solve", parents=[common], help="run the reweighted solver")
    _add_solver_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--shrink", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--eps0", type=float, default=1.0)
    p.add_argument("--eps-floor", type=float, default=1e-12)
    p.add_argument("--trace", default=None, help="write per-iteration trace CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", parents=[common], help="brute-force global minimum")
    _add_solver_flags(p)
    p.add_argument("--noise-bound", type=float, default=0.0)
    p.add_argument("--l-min", type=int, default=1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("theory", parents=[common], help="recovery-condition calculators")
    p.add_argument("kind", choices=["constants", "threshold", "sq", "bound", "feasible-q"])
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=9.0, help="block ratio (>= 2)")
    p.add_argument("--delta-rhoS", dest="delta_rhoS", type=float, default=0.0)
    p.add_argument("--delta-rho1S", dest="delta_rho1S", type=float, default=0.0)
    p.add_argument("--S", type=int, default=1)
    p.add_argument("--sigma-min", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--F0", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("phase", parents=[common], help="run a phase-transition sweep")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="ExperimentConfig JSON file")
    src.add_argument("--preset", choices=sorted(bench.PRESETS))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--m-values", type=int, nargs="+")
    p.add_argument("--l-values", type=int, nargs="+")
    p.add_argument("--q-values", type=float, nargs="+")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("preset", parents=[common], help="print a preset configuration")
    p.add_argument("name")
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InfeasibleCosparsityError, CombinatorialGuardError, ConditionNumberError,
            TheoryInapplicableError) as exc:
        print(f"cosparse: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (LinearSolveError, InfiniteWeightError, FloatingPointError) as exc:
        print(f"cosparse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, CosparseError, ValueError, OSError) as exc:
        print(f"cosparse: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
