import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bregman_precond.cli import (
    ExperimentConfig,
    build_parser,
    config_from_args,
    main,
    run_analyze,
    run_fourdvar,
    run_solve,
    run_synthetic,
)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def small_synthetic_cfg(out, **kw):
    base = dict(
        kind="synthetic", n=40, m=24, rank=8, trials=2,
        labels_a=[1, 2], labels_b=[1], out=str(out),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_validation_catches_bad_labels(self):
        with pytest.raises(ValueError):
            small_synthetic_cfg("x.csv", labels_a=[9]).validate()

    def test_validation_catches_bad_roster(self):
        with pytest.raises(ValueError):
            small_synthetic_cfg("x.csv", preconditioners=["nope"]).validate()

    def test_validation_catches_rank_overflow(self):
        with pytest.raises(ValueError):
            small_synthetic_cfg("x.csv", rank=39, oversample=5).validate()

    def test_flags_override_config_file(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"n": 30, "m": 18, "rank": 6, "seed": 3}))
        args = build_parser().parse_args(
            ["synthetic", "--config", str(cfg_path), "--seed", "7"]
        )
        cfg = config_from_args(args)
        assert cfg.n == 30 and cfg.seed == 7

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"banana": 1}))
        args = build_parser().parse_args(["synthetic", "--config", str(cfg_path)])
        with pytest.raises(ValueError):
            config_from_args(args)


@pytest.fixture(scope="module")
def result(tmp_path_factory):
    out = tmp_path_factory.mktemp("syn") / "results.csv"
    run_synthetic(small_synthetic_cfg(out))
    return out, read_rows(out)


class TestRunSynthetic:

    def test_header_and_shape(self, result):
        out, rows = result
        assert set(rows[0]) == {
            "label_A", "label_B", "kappa2_S", "preconditioner", "iterations",
            "divergence_LD", "build_products", "solve_products", "status",
        }
        assert len(rows) == 2 * 1 * 12

    def test_flat_a_scaled_equals_nonscaled(self, result):
        _, rows = result
        flat = {r["preconditioner"]: r for r in rows if r["label_A"] == "1"}
        assert flat["S_hat"]["iterations"] == flat["S_tilde"]["iterations"]

    def test_divergence_ordering(self, result):
        _, rows = result
        by_cell = {}
        for r in rows:
            by_cell.setdefault((r["label_A"], r["label_B"]), {})[r["preconditioner"]] = r
        for cell in by_cell.values():
            assert float(cell["S_hat"]["divergence_LD"]) <= float(cell["S_tilde"]["divergence_LD"]) + 1e-9
            assert int(float(cell["S_hat"]["iterations"])) <= int(float(cell["I"]["iterations"]))

    def test_value_sanity(self, result):
        _, rows = result
        for r in rows:
            assert float(r["divergence_LD"]) >= -1e-10
            assert float(r["iterations"]) <= 1000
            assert r["status"] == "converged"

    def test_byte_identical_rerun(self, result, tmp_path):
        out, _ = result
        again = tmp_path / "again.csv"
        run_synthetic(small_synthetic_cfg(again))
        assert open(out, "rb").read() == open(again, "rb").read()

    def test_thread_count_does_not_change_output(self, result, tmp_path, monkeypatch):
        out, _ = result
        threaded = tmp_path / "threaded.csv"
        monkeypatch.setenv("BREGMAN_PRECOND_THREADS", "4")
        run_synthetic(small_synthetic_cfg(threaded))
        assert open(out, "rb").read() == open(threaded, "rb").read()

    def test_config_echo_written(self, result):
        out, _ = result
        echo = json.loads(open(str(out) + ".config.json").read())
        assert echo["kind"] == "synthetic" and echo["n"] == 40

    def test_timings_file_written(self, result):
        out, _ = result
        assert os.path.exists(str(out) + ".timings.csv")


class TestRunFourdvar:
    def test_scaled_fewer_iterations(self, tmp_path):
        out = tmp_path / "4d.csv"
        cfg = ExperimentConfig(
            kind="fourdvar", n=30, steps=4, obs=15, ranks=[10],
            tol=1e-6, maxit=150, trials=2, out=str(out),
        )
        run_fourdvar(cfg)
        rows = read_rows(out)
        it = {(r["preconditioner"], r["rank"]): float(r["iterations"]) for r in rows}
        assert it[("S_hat_nys", "10")] < it[("S_tilde_nys", "10")]
        assert it[("LDL", "")] <= it[("I", "")]

    def test_error_rows_do_not_abort(self, tmp_path):
        out = tmp_path / "4d.csv"
        cfg = ExperimentConfig(
            kind="fourdvar", n=10, steps=2, obs=5, ranks=[5],
            tol=1e-6, maxit=50, trials=1, out=str(out),
        )
        rows, _ = run_fourdvar(cfg)
        assert rows  # completes and returns rows


class TestRunAnalyze:
    def test_outputs_and_reconstruction(self, tmp_path):
        out = tmp_path / "analysis"
        cfg = ExperimentConfig(
            kind="analyze", n=30, m=18, rank=6, labels_a=[4], labels_b=[1],
            preconditioners=["S_hat", "S_tilde"], out=str(out),
        )
        summary = run_analyze(cfg)
        for name in ("S_hat", "S_tilde"):
            alignment = np.loadtxt(out / f"alignment_{name}.csv", delimiter=",")
            scalars = np.loadtxt(out / f"scalar_terms_{name}.csv", delimiter=",")
            eigs = np.loadtxt(out / f"generalized_eigs_{name}.csv", delimiter=",")
            assert np.allclose(alignment.sum(axis=0), 1.0, atol=1e-8)
            assert np.all(eigs > 0)
            row = next(r for r in summary if r[2] == name)
            assert np.isclose(float(np.sum(alignment * scalars)), row[3], atol=1e-8)
            assert np.isclose(row[3], row[4], atol=1e-8)

    def test_divergence_ordering(self, tmp_path):
        cfg = ExperimentConfig(
            kind="analyze", n=30, m=18, rank=6, labels_a=[4], labels_b=[1],
            preconditioners=["S_hat", "S_tilde"], out=str(tmp_path / "a"),
        )
        summary = {r[2]: r[3] for r in run_analyze(cfg)}
        assert summary["S_hat"] <= summary["S_tilde"] + 1e-12


class TestRunSolve:
    def test_matrix_market_roundtrip(self, tmp_path):
        from bregman_precond import SPECTRUM_LABELS_A, SPECTRUM_LABELS_B, assemble_synthetic, write_matrix

        p = assemble_synthetic(SPECTRUM_LABELS_A[2], SPECTRUM_LABELS_B[1], 20, 12, seed=5)
        s_path, a_path = tmp_path / "S.mtx", tmp_path / "A.mtx"
        write_matrix(s_path, p.s)
        write_matrix(a_path, p.a)
        out = tmp_path / "solve.json"
        cfg = ExperimentConfig(
            kind="solve", matrix=str(s_path), matrix_a=str(a_path),
            precond="scaled", rank=6, out=str(out),
        )
        payload = run_solve(cfg)
        assert payload["termination"] == "converged"
        assert json.loads(out.read_text())["iterations"] == payload["iterations"]

    def test_requires_matrix(self):
        with pytest.raises(ValueError):
            run_solve(ExperimentConfig(kind="solve"))

    def test_jacobi_variant(self, tmp_path):
        from bregman_precond import write_matrix

        s_path = tmp_path / "S.mtx"
        write_matrix(s_path, np.diag([4.0, 2.0, 1.0]))
        cfg = ExperimentConfig(
            kind="solve", matrix=str(s_path), precond="jacobi", out=str(tmp_path / "o.json")
        )
        assert run_solve(cfg)["iterations"] == 1


def test_main_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    rc = main([
        "synthetic", "--n", "30", "--m", "18", "--rank", "6", "--trials", "1",
        "--labels-a", "2", "--labels-b", "1",
        "--preconditioners", "I,S_hat", "--out", str(out),
    ])
    assert rc == 0
    assert len(read_rows(out)) == 2


def test_console_script_runs():
    out = subprocess.run(
        [sys.executable, "-m", "bregman_precond.cli", "--help"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert "synthetic" in out.stdout
