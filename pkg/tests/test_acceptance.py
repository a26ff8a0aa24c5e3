"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import math

import numpy as np
import pytest

from cosparse import bench, linops, model, oracle, solver, theory
from cosparse.solver import SolverConfig
from cosparse.theory import TheoryInputs

from conftest import ACCEPTANCE

pytestmark = pytest.mark.slow

Q_GRID = [round(0.1 * k, 1) for k in range(1, 11)]


def record(name, passed, detail):
    ACCEPTANCE[name] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    assert passed, detail


def rates(cells):
    return {(c.q, c.m): c for c in cells}


def test_c1_noiseless_recovery_rate():
    cfg = bench.preset("figure1", trials=100)
    (cell,) = bench.phase_grid(cfg)
    record("C1 figure1 success rate >= 0.90", cell.success_rate >= 0.90,
           f"rate={cell.success_rate:.2f} over {cell.trials} trials "
           f"(mean rel err {cell.mean_relative_error:.3g}, skips {cell.skips})")


def test_c2_q07_dominates_l1():
    cfg = bench.preset("figure2-m", trials=50)
    cfg.m_values = [60, 70, 80, 90, 100]
    cfg.q_values = [0.7, 1.0]
    by = rates(bench.phase_grid(cfg))
    shortfalls = [by[(1.0, m)].success_rate - by[(0.7, m)].success_rate for m in cfg.m_values]
    bad = [s for s in shortfalls if s > 0]
    ok = len(bad) == 0 or (len(bad) == 1 and bad[0] <= 0.06)
    detail = "; ".join(
        f"m={m}: q0.7 {by[(0.7, m)].success_rate:.2f} (err {by[(0.7, m)].mean_relative_error:.2g})"
        f" vs q1 {by[(1.0, m)].success_rate:.2f} (err {by[(1.0, m)].mean_relative_error:.2g})"
        for m in cfg.m_values)
    record("C2 q=0.7 success >= q=1 at every m", ok, detail)


def test_c3_descent_and_monotone_smoothing():
    worst, eps_ok, runs = -math.inf, True, 0
    for i in range(20):
        q = (0.3, 0.7, 1.0)[i % 3]
        m = 60 + 2 * i
        pr = model.make_problem(m, 120, 144, 99, 0.0, seed=1000 + i)
        cfg = SolverConfig(q=q, l=99, lam=1e-4)
        res = solver.solve(pr.A, pr.y, pr.omega, cfg)
        f = res.objectives()
        excess = (f[1:] - f[:-1]) / (1.0 + f[:-1])
        worst = max(worst, float(np.max(excess)))
        eps = [cfg.eps0] + [row.eps for row in res.trace]
        eps_ok &= all(b <= a for a, b in zip(eps, eps[1:]))
        runs += 1
    record("C3 descent within 1e-9 and eps non-increasing", worst <= 1e-9 and eps_ok,
           f"{runs} problems, worst relative increase {worst:.3g}, eps monotone {eps_ok}")


def test_c4_oracle_equivalence():
    # d=6, p=8, m=5; cosparsity 5 is the largest with a nontrivial null space
    d, p, m, l, n = 6, 8, 5, 5, 25
    lines, ok = [], True
    for q in (0.7, 1.0):
        good = 0
        for seed in range(n):
            pr = model.make_problem(m, d, p, l, 0.0, seed=seed)
            res = solver.solve(pr.A, pr.y, pr.omega, SolverConfig(q=q, l=l, lam=1e-6))
            orc = oracle.brute_force_lq(pr.A, pr.y, pr.omega, q, l_min=d - m)
            gap = solver.lq_penalty(pr.omega @ res.x_hat, q) - orc.objective
            err = model.relative_error(res.x_hat, pr.x_true)
            good += gap <= 1e-3 and err <= 1e-3
        ok &= good / n >= 0.80
        lines.append(f"q={q}: {good}/{n}")
    record("C4 solver within 1e-3 of global minimum in >= 80%", ok, ", ".join(lines))


def test_c5_theory_exactness():
    c = theory.bound_constants(TheoryInputs(0.0, 0.0, 1.0, 9, 1.0, sigma_min=1.0))
    checks = {"constants": (c.c1, c.c2) == (3.0, 4.0),
              "threshold": theory.strong_threshold(1, 1, 9) == 0.6}
    checks["sq identity"] = all(
        (rq + 1) * sq == (r1 + 1) * s1
        for r1 in range(2, 21) for s1 in range(1, 11) for q in Q_GRID
        for sq, rq in [theory.lq_sparsity_level(s1, r1, q)])
    checks["threshold decreasing"] = all(
        a > b for rho in range(5, 51)
        for a, b in zip(*(lambda v: (v, v[1:]))([theory.strong_threshold(1, q, rho) for q in Q_GRID])))
    c1 = [theory.bound_constants(TheoryInputs(0.1, 0.2, 1.0, 9, q)).c1 for q in Q_GRID]
    checks["C1 increasing"] = all(a < b for a, b in zip(c1, c1[1:]))
    record("C5 theory exactness", all(checks.values()),
           ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()))


def test_c6_operators():
    rows = linops.fd2d_operator(256, 256, sparse=True).shape[0]
    om = linops.random_tight_frame(144, 120, 0)
    gram = float(np.max(np.abs(om.T @ om - np.eye(120))))
    kappa = linops.spectrum(om).kappa
    record("C6 operator checks", rows == 130560 and gram <= 1e-10 and abs(kappa - 1) <= 1e-8,
           f"fd2d rows {rows}, gram dev {gram:.2g}, kappa-1 {kappa - 1:.2g}")


def test_c7_noise_robustness():
    cfg = bench.preset("figure3-m", trials=50)
    cfg.m_values = [70, 90, 110]
    cfg.q_values = [0.7, 1.0]
    out = bench.run_phase(cfg)
    by = rates(out.cells)
    ok = all(by[(0.7, m)].mean_relative_error <= 1.1 * by[(1.0, m)].mean_relative_error
             for m in cfg.m_values)
    detail = "; ".join(
        f"m={m}: q0.7 {by[(0.7, m)].mean_relative_error:.3f} (lam {out.lambda_choice[(0.7, m, 99)]:g})"
        f" vs q1 {by[(1.0, m)].mean_relative_error:.3f} (lam {out.lambda_choice[(1.0, m, 99)]:g})"
        for m in cfg.m_values)
    record("C7 q=0.7 noisy error <= 1.1 x q=1 error", ok, detail)
