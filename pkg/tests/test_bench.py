import io

import numpy as np
import pytest

from cosparse import bench
from cosparse.bench import CellResult, ExperimentConfig
from cosparse.errors import ConfigError
from cosparse.solver import SolverConfig


def small_config(**kw):
    args = dict(d=20, p=24, m_values=[14, 18], l_values=[14], q_values=[0.7, 1.0],
                trials=3, base_seed=5, solver=SolverConfig(q=1.0, l=1, lam=1e-6, max_iter=200))
    args.update(kw)
    return ExperimentConfig(**args)


class TestSeeds:
    def test_stable(self):
        a = bench.trial_seed(0, 120, 144, 80, 99, 0.7, 0.0, 3)
        assert a == bench.trial_seed(0, 120, 144, 80, 99, 0.7, 0.0, 3)
        assert 0 <= a < 2 ** 64

    def test_distinct(self):
        seeds = {bench.trial_seed(0, 120, 144, m, 99, q, 0.0, t)
                 for m in (60, 70) for q in (0.7, 1.0) for t in range(50)}
        assert len(seeds) == 200

    def test_base_seed_changes_stream(self):
        assert bench.trial_seed(0, 1, 2, 1, 1, 1.0, 0.0, 0) != bench.trial_seed(1, 1, 2, 1, 1, 1.0, 0.0, 0)


class TestTrial:
    def test_square_system_succeeds(self):
        # with m = d the only error left is the O(lam) regularisation bias
        tpl = SolverConfig(q=1.0, l=1, lam=1e-7)
        for seed in range(3):
            metrics, result = bench.run_trial(20, 24, 20, 10, 0.7, 0.0, seed, tpl)
            assert metrics.success and result.converged

    def test_infeasible_is_skipped(self):
        cfg = small_config(d=6, p=8, m_values=[5], l_values=[6], q_values=[1.0])
        (cell,) = bench.phase_grid(cfg)
        assert cell.trials == 0 and cell.skips == 3
        assert np.isnan(cell.success_rate)


class TestPhase:
    def test_single_cell(self):
        (cell,) = bench.phase_grid(small_config(m_values=[14], q_values=[0.7], trials=1))
        assert cell.successes in (0, 1) and cell.trials == 1

    def test_sorted_and_deterministic_csv(self, tmp_path):
        cfg = small_config()
        cells = bench.phase_grid(cfg)
        assert [(c.q, c.m, c.l) for c in cells] == sorted((c.q, c.m, c.l) for c in cells)
        bench.emit_csv(cells, tmp_path / "a.csv")
        bench.emit_csv(bench.phase_grid(cfg), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_threads_match_serial(self):
        cfg = small_config(trials=2)
        assert bench.phase_grid(cfg, threads=1) == bench.phase_grid(cfg, threads=2)

    def test_adding_cells_keeps_existing_streams(self):
        a = bench.phase_grid(small_config(m_values=[14]))
        b = bench.phase_grid(small_config(m_values=[14, 18]))
        assert set(a) <= set(b)

    def test_lambda_grid_picks_best(self):
        cfg = small_config(m_values=[18], q_values=[0.7], sigma=0.01, lambda_grid=[1e-4, 1e-2])
        out = bench.run_phase(cfg)
        lam = out.lambda_choice[(0.7, 18, 14)]
        assert lam in (1e-4, 1e-2)
        assert all(r.lam == lam for r in out.trials)
        other = 1e-2 if lam == 1e-4 else 1e-4
        alt = bench.phase_grid(small_config(m_values=[18], q_values=[0.7], sigma=0.01,
                                            solver=SolverConfig(q=1.0, l=1, lam=other, max_iter=200)))
        assert out.cells[0].mean_relative_error <= alt[0].mean_relative_error


class TestCsv:
    def test_success_rate_row(self, tmp_path):
        cell = CellResult(0.7, 80, 99, 0.0, 10, 0, 7, 0.01, 20.0)
        buf = io.StringIO()
        bench.emit_csv([cell], buf)
        header, row = buf.getvalue().splitlines()
        assert header.split(",") == list(bench.CSV_HEADER)
        assert float(row.split(",")[7]) == 0.7

    def test_round_trip(self, tmp_path):
        cells = [CellResult(1.0, 60, 99, 0.01, 50, 1, 13, 0.123456789012345678, 33.3),
                 CellResult(0.7, 80, 99, 0.0, 10, 0, 7, 1e-5, 20.0)]
        bench.emit_csv(cells, tmp_path / "c.csv")
        assert bench.read_csv(tmp_path / "c.csv") == sorted(cells, key=lambda c: (c.q, c.m, c.l))

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            bench.emit_csv([], tmp_path / "e.csv")


class TestConfig:
    def test_presets(self):
        c = bench.preset("figure1")
        assert (c.d, c.p, c.m_values, c.l_values, c.sigma, c.q_values, c.solver.lam) == \
            (120, 144, [80], [99], 0.0, [0.7], 1e-4)
        c = bench.preset("figure3-l")
        assert (c.sigma, c.m_values, c.p, c.d) == (0.01, [90], 144, 120)
        for name in bench.PRESETS:
            bench.preset(name).validate()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            bench.preset("figure9")

    def test_invalid(self):
        with pytest.raises(ConfigError):
            small_config(m_values=[21])
        with pytest.raises(ConfigError):
            small_config(trials=0)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(dict(small_config().to_dict(), bogus=1))

    def test_json_round_trip(self, tmp_path):
        import json
        cfg = small_config(lambda_grid=[1e-3])
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_json(path) == cfg
