"""Config-driven benchmark runner.

Subcommands
-----------
synthetic   iteration counts and divergences over the synthetic spectrum grid
fourdvar    PCG comparison on the weak-constraint 4D-VAR heat-equation system
analyze     divergence term matrices and generalized eigenvalue files
solve       ad-hoc solve of a Matrix Market system

Outputs are deterministic CSV (wall times go to a separate timings file so
the main CSV is byte-identical for identical config + seed) plus a JSON echo
of the resolved configuration.
"""

import argparse
import csv
import json
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bregman import divergence_ld, divergence_terms
from .errors import DenseCapExceeded
from .linop import LinearOperator, chol_lower, dense_eig_sym, tri_solve
from .mmio import read_matrix
from .pcg import DENSE_CAP, generalized_eigs, lanczos_extreme_eigs, pcg_solve
from .precond import (
    build_jacobi,
    build_nonscaled,
    build_partial_cholesky,
    build_scaled,
    build_sgs,
    identity_precond,
)
from .sketch import SketchConfig, make_rng, nystrom, randomized_evd, truncated_evd
from .testgen import (
    SPECTRUM_LABELS_A,
    SPECTRUM_LABELS_B,
    FourDVarConfig,
    assemble_heat_4dvar,
    assemble_synthetic,
    build_4dvar_preconditioners,
)

__all__ = ["ExperimentConfig", "run_synthetic", "run_fourdvar", "run_analyze", "run_solve", "main"]

SYNTHETIC_ROSTER = [
    "I",
    "P_pchol",
    "P_SGS",
    "Jacobi",
    "S_tilde",
    "S_tilde_rand",
    "S_tilde_rand_power",
    "S_tilde_nys",
    "S_hat",
    "S_hat_rand",
    "S_hat_rand_power",
    "S_hat_nys",
]


@dataclass
class ExperimentConfig:
    """Resolved experiment description; validated before any work starts."""

    kind: str = "synthetic"
    n: int = 200
    m: int = 120
    rank: int = 60
    oversample: int = 0
    power: int = 2
    steps: int = 20
    obs: int = 50
    labels_a: list = field(default_factory=lambda: [1, 2, 3, 4])
    labels_b: list = field(default_factory=lambda: [1, 2])
    preconditioners: list = field(default_factory=lambda: list(SYNTHETIC_ROSTER))
    ranks: list = field(default_factory=list)
    tol: float = 1e-7
    maxit: int = 1000
    trials: int = 3
    seed: int = 0
    out: str = "results.csv"
    full_scale: bool = False
    matrix: str = ""
    matrix_a: str = ""
    precond: str = "identity"

    def validate(self):
        if self.kind not in ("synthetic", "fourdvar", "analyze", "solve"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.tol <= 0 or self.maxit < 1 or self.trials < 1:
            raise ValueError("tol must be > 0, maxit and trials >= 1")
        if self.kind in ("synthetic", "analyze"):
            if self.m > self.n:
                raise ValueError(f"m = {self.m} exceeds n = {self.n}")
            if self.rank + self.oversample > self.n:
                raise ValueError("rank + oversample exceeds n")
            unknown = set(self.labels_a) - set(SPECTRUM_LABELS_A)
            unknown |= set(self.labels_b) - set(SPECTRUM_LABELS_B)
            if unknown:
                raise ValueError(f"unknown spectrum labels {sorted(unknown)}")
            bad = set(self.preconditioners) - set(SYNTHETIC_ROSTER)
            if bad:
                raise ValueError(f"unknown preconditioners {sorted(bad)}")
        if self.kind == "fourdvar" and self.obs > self.n:
            raise ValueError(f"obs = {self.obs} exceeds n = {self.n}")
        return self


def _thread_count():
    raw = os.environ.get("BREGMAN_PRECOND_THREADS", "")
    if raw:
        return max(1, int(raw))
    return 1


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _echo_config(cfg, extra=None):
    payload = asdict(cfg)
    payload.update(extra or {})
    path = cfg.out + ".config.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path


def _dense_from_precond(p):
    """Materialize P from its inverse action via a Cholesky solve."""
    w = p.dense_inverse()
    l = chol_lower(w)
    dense = tri_solve(l, tri_solve(l, np.eye(p.dim)), transpose=True)
    return 0.5 * (dense + dense.T)


def _counted(apply, dim):
    return LinearOperator(dim, apply, flavor="callback")


def _synthetic_builders(problem, cfg, trial_seed):
    """Ordered (name -> builder) map; each builder returns (precond, build_products)."""
    n = problem.s.dim
    s = problem.s.entries
    q = problem.q

    def g_apply(x):
        return q.factor_solve(problem.b.entries @ q.factor_adjoint_solve(x))

    def b_apply(x):
        return problem.b.entries @ x

    def with_counter(apply, build):
        op = _counted(apply, n)
        p = build(op)
        return p, op.product_count

    sk = lambda p_extra=0, q_pow=0: SketchConfig(
        rank=cfg.rank, oversample=cfg.oversample + p_extra, power=q_pow, seed=trial_seed
    )

    builders = {
        "I": lambda: (identity_precond(n), 0),
        "P_pchol": lambda: (build_partial_cholesky(s, cfg.rank), 0),
        "P_SGS": lambda: (build_sgs(s), 0),
        "Jacobi": lambda: (build_jacobi(s), 0),
        "S_tilde": lambda: (build_nonscaled(q, truncated_evd(problem.b.entries, cfg.rank)), n),
        "S_tilde_rand": lambda: with_counter(
            b_apply, lambda op: build_nonscaled(q, randomized_evd(op, sk()))
        ),
        "S_tilde_rand_power": lambda: with_counter(
            b_apply, lambda op: build_nonscaled(q, randomized_evd(op, sk(q_pow=cfg.power)))
        ),
        "S_tilde_nys": lambda: with_counter(
            b_apply, lambda op: build_nonscaled(q, nystrom(op, sk(), range_mode="qr"))
        ),
        "S_hat": lambda: (build_scaled(q, truncated_evd(problem.g_dense(), cfg.rank)), n),
        "S_hat_rand": lambda: with_counter(
            g_apply, lambda op: build_scaled(q, randomized_evd(op, sk()))
        ),
        "S_hat_rand_power": lambda: with_counter(
            g_apply, lambda op: build_scaled(q, randomized_evd(op, sk(q_pow=cfg.power)))
        ),
        "S_hat_nys": lambda: with_counter(
            g_apply, lambda op: build_scaled(q, nystrom(op, sk(), range_mode="qr"))
        ),
    }
    return builders


def _median(values):
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def run_synthetic(cfg):
    """Run the synthetic spectrum grid; returns (rows, timing rows)."""
    cfg.validate()

    def one_trial(args):
        la, lb, trial = args
        trial_seed = cfg.seed + 1000 * trial
        problem = assemble_synthetic(
            SPECTRUM_LABELS_A[la], SPECTRUM_LABELS_B[lb], cfg.n, cfg.m, seed=trial_seed
        )
        s = problem.s.entries
        if cfg.n <= DENSE_CAP:
            w, _ = dense_eig_sym(s)
            kappa2 = float(w[0] / w[-1])
        else:
            kappa2 = None
        rhs = make_rng(trial_seed, 3).standard_normal(cfg.n)
        rhs /= np.linalg.norm(rhs)
        builders = _synthetic_builders(problem, cfg, trial_seed)
        cells = {}
        for name in cfg.preconditioners:
            t0 = time.perf_counter()
            try:
                p, build_products = builders[name]()
                s_op = LinearOperator.from_dense(s)
                report = pcg_solve(s_op, rhs, p, tol=cfg.tol, maxit=cfg.maxit)
                if cfg.n <= DENSE_CAP:
                    div = divergence_ld(_dense_from_precond(p), s).value
                else:
                    div = None
                cells[name] = dict(
                    iterations=report.iterations,
                    divergence=div,
                    build_products=build_products,
                    solve_products=s_op.product_count,
                    status=report.termination,
                    wall=time.perf_counter() - t0,
                )
            except Exception as exc:  # noqa: BLE001 - per-row error capture
                cells[name] = dict(
                    iterations=None,
                    divergence=None,
                    build_products=None,
                    solve_products=None,
                    status=f"error:{type(exc).__name__}",
                    wall=time.perf_counter() - t0,
                )
        return la, lb, kappa2, cells

    grid = [
        (la, lb, t)
        for la in cfg.labels_a
        for lb in cfg.labels_b
        for t in range(cfg.trials)
    ]
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        results = list(pool.map(one_trial, grid))

    rows, timing_rows = [], []
    for la in cfg.labels_a:
        for lb in cfg.labels_b:
            chunk = [r for r in results if r[0] == la and r[1] == lb]
            kappa2 = _median([c[2] for c in chunk])
            for name in cfg.preconditioners:
                cells = [c[3][name] for c in chunk]
                statuses = sorted({c["status"] for c in cells})
                rows.append(
                    [
                        la,
                        lb,
                        kappa2,
                        name,
                        _median([c["iterations"] for c in cells]),
                        _median([c["divergence"] for c in cells]),
                        _median([c["build_products"] for c in cells]),
                        _median([c["solve_products"] for c in cells]),
                        ";".join(statuses),
                    ]
                )
                timing_rows.append([la, lb, name, _median([c["wall"] for c in cells])])

    header = [
        "label_A",
        "label_B",
        "kappa2_S",
        "preconditioner",
        "iterations",
        "divergence_LD",
        "build_products",
        "solve_products",
        "status",
    ]
    _write_csv(cfg.out, header, rows)
    _write_csv(cfg.out + ".timings.csv", ["label_A", "label_B", "preconditioner", "wall_s"], timing_rows)
    _echo_config(cfg)
    return rows


_FOURDVAR_DENSE_CAP = 4000


def run_fourdvar(cfg):
    """Run the 4D-VAR preconditioner comparison; returns result rows."""
    cfg.validate()
    if cfg.full_scale:
        cfg.n, cfg.steps, cfg.obs = 1000, 99, 500
    state_dim = cfg.n * (cfg.steps + 1)
    ranks = list(cfg.ranks) or [max(1, int(state_dim * c)) for c in (0.005, 0.02, 0.04)]
    scenario = f"n={cfg.n},N={cfg.steps},m={cfg.obs}"

    def one_trial(trial):
        seed = cfg.seed + 1000 * trial
        system = assemble_heat_4dvar(
            FourDVarConfig(n=cfg.n, steps=cfg.steps, m=cfg.obs, seed=seed)
        )
        cells = {}

        def record(name, rank, precond):
            t0 = time.perf_counter()
            try:
                s_op = system.s_operator()
                rep = pcg_solve(s_op, system.rhs, precond, tol=cfg.tol, maxit=cfg.maxit)
                cells[(name, rank)] = dict(
                    iterations=rep.iterations,
                    relres=rep.residual_history[-1],
                    status=rep.termination,
                    wall=time.perf_counter() - t0,
                )
            except Exception as exc:  # noqa: BLE001
                cells[(name, rank)] = dict(
                    iterations=None, relres=None,
                    status=f"error:{type(exc).__name__}", wall=time.perf_counter() - t0,
                )

        record("I", None, None)
        base = build_4dvar_preconditioners(system, 0, seed=seed, variants=("ldl",))
        record("LDL", None, base["ldl"])
        if state_dim <= _FOURDVAR_DENSE_CAP:
            s_dense = system.s_operator().to_dense()
            for rank in ranks:
                record("P_pchol", rank, build_partial_cholesky(s_dense, rank))
        else:
            for rank in ranks:
                cells[("P_pchol", rank)] = dict(
                    iterations=None, relres=None, status="skipped:dense-cap", wall=0.0
                )
        for rank in ranks:
            built = build_4dvar_preconditioners(
                system, rank, seed=seed, variants=("scaled_nystrom", "nonscaled_nystrom")
            )
            record("S_tilde_nys", rank, built["nonscaled_nystrom"])
            record("S_hat_nys", rank, built["scaled_nystrom"])
        return cells

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        trials = list(pool.map(one_trial, range(cfg.trials)))

    keys = list(trials[0].keys())
    rows, timing_rows = [], []
    for key in keys:
        cells = [t[key] for t in trials]
        statuses = sorted({c["status"] for c in cells})
        rows.append(
            [
                scenario,
                key[0],
                key[1],
                _median([c["iterations"] for c in cells]),
                _median([c["relres"] for c in cells]),
                ";".join(statuses),
            ]
        )
        timing_rows.append([scenario, key[0], key[1], _median([c["wall"] for c in cells])])

    extra = {}
    if cfg.full_scale:
        system = assemble_heat_4dvar(
            FourDVarConfig(n=cfg.n, steps=cfg.steps, m=cfg.obs, seed=cfg.seed)
        )
        built = build_4dvar_preconditioners(system, 0, seed=cfg.seed, variants=("ldl",))
        lo, hi = lanczos_extreme_eigs(system.s_operator(), built["ldl"], seed=cfg.seed)
        extra["kappa2_estimate"] = hi / lo

    header = ["scenario", "preconditioner", "rank", "iterations", "final_relres", "status"]
    _write_csv(cfg.out, header, rows)
    _write_csv(cfg.out + ".timings.csv", ["scenario", "preconditioner", "rank", "wall_s"], timing_rows)
    _echo_config(cfg, extra)
    return rows, extra


def run_analyze(cfg):
    """Emit divergence term matrices and generalized eigenvalues per
    preconditioner as plot-ready CSV grids."""
    cfg.validate()
    if cfg.n > DENSE_CAP:
        raise DenseCapExceeded(f"analyze needs n <= {DENSE_CAP}, got {cfg.n}")
    la, lb = cfg.labels_a[0], cfg.labels_b[0]
    problem = assemble_synthetic(
        SPECTRUM_LABELS_A[la], SPECTRUM_LABELS_B[lb], cfg.n, cfg.m, seed=cfg.seed
    )
    s = problem.s.entries
    builders = _synthetic_builders(problem, cfg, cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    summary = []
    for name in cfg.preconditioners:
        p, _ = builders[name]()
        dense_p = _dense_from_precond(p)
        terms = divergence_terms(dense_p, s)
        eigs = generalized_eigs(p, s)
        tag = name.replace("\\", "_")
        np.savetxt(os.path.join(cfg.out, f"alignment_{tag}.csv"), terms.alignment, delimiter=",")
        np.savetxt(
            os.path.join(cfg.out, f"scalar_terms_{tag}.csv"), terms.scalar_terms, delimiter=","
        )
        np.savetxt(os.path.join(cfg.out, f"generalized_eigs_{tag}.csv"), eigs, delimiter=",")
        div = divergence_ld(dense_p, s).value
        recon = float(np.sum(terms.alignment * terms.scalar_terms))
        summary.append([la, lb, name, div, recon])
    _write_csv(
        os.path.join(cfg.out, "summary.csv"),
        ["label_A", "label_B", "preconditioner", "divergence_LD", "term_sum"],
        summary,
    )
    cfg_echo = ExperimentConfig(**{**asdict(cfg), "out": os.path.join(cfg.out, "summary.csv")})
    _echo_config(cfg_echo)
    return summary


def run_solve(cfg):
    """Solve a Matrix Market system with a chosen preconditioner."""
    cfg.validate()
    if not cfg.matrix:
        raise ValueError("solve needs --matrix pointing at a MatrixMarket file")
    s = read_matrix(cfg.matrix)
    n = s.dim
    rhs = make_rng(cfg.seed, 11).standard_normal(n)
    rhs /= np.linalg.norm(rhs)
    kind = cfg.precond
    if kind == "identity":
        p = identity_precond(n)
    elif kind == "jacobi":
        p = build_jacobi(s.entries)
    elif kind == "sgs":
        p = build_sgs(s.entries)
    elif kind == "pchol":
        p = build_partial_cholesky(s.entries, cfg.rank)
    elif kind in ("scaled", "nonscaled"):
        if not cfg.matrix_a:
            raise ValueError(f"{kind} preconditioner needs --matrix-a for the A part")
        from .linop import cholesky_factor

        a = read_matrix(cfg.matrix_a)
        q = cholesky_factor(a)
        b = s.entries - a.entries
        if kind == "scaled":
            g = np.column_stack([q.factor_solve(b[:, j]) for j in range(n)])
            g = np.column_stack([q.factor_solve(row) for row in g])
            p = build_scaled(q, truncated_evd(0.5 * (g + g.T), cfg.rank))
        else:
            p = build_nonscaled(q, truncated_evd(b, cfg.rank))
    else:
        raise ValueError(f"unknown preconditioner kind {kind!r}")
    rep = pcg_solve(s.as_operator(), rhs, p, tol=cfg.tol, maxit=cfg.maxit)
    payload = dict(
        matrix=cfg.matrix,
        preconditioner=kind,
        iterations=rep.iterations,
        termination=rep.termination,
        final_relres=rep.residual_history[-1],
    )
    with open(cfg.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return payload


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="bregman-precond", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in ("synthetic", "fourdvar", "analyze", "solve"):
        sp = sub.add_parser(kind)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--rank", type=int, default=None)
        sp.add_argument("--oversample", type=int, default=None)
        sp.add_argument("--power", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--maxit", type=int, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--m", type=int, default=None)
        sp.add_argument("--steps", type=int, default=None)
        sp.add_argument("--obs", type=int, default=None)
        sp.add_argument("--labels-a", type=_int_list, default=None)
        sp.add_argument("--labels-b", type=_int_list, default=None)
        sp.add_argument("--preconditioners", default=None,
                        help="comma-separated roster subset")
        sp.add_argument("--ranks", type=_int_list, default=None)
        sp.add_argument("--full-scale", action="store_true", default=None)
        sp.add_argument("--matrix", default=None)
        sp.add_argument("--matrix-a", default=None)
        sp.add_argument("--precond", default=None)
    return parser


_FLAG_FIELDS = {
    "seed": "seed", "out": "out", "rank": "rank", "oversample": "oversample",
    "power": "power", "tol": "tol", "maxit": "maxit", "trials": "trials",
    "n": "n", "m": "m", "steps": "steps", "obs": "obs",
    "labels_a": "labels_a", "labels_b": "labels_b", "ranks": "ranks",
    "full_scale": "full_scale", "matrix": "matrix", "matrix_a": "matrix_a",
    "precond": "precond",
}

_KIND_DEFAULTS = {
    "synthetic": {},
    "fourdvar": {"n": 100, "steps": 20, "obs": 50, "tol": 1e-6, "maxit": 150, "out": "fourdvar.csv"},
    "analyze": {"n": 100, "m": 60, "rank": 30, "out": "analysis",
                "labels_a": [4], "labels_b": [1],
                "preconditioners": ["S_hat", "S_tilde", "S_hat_rand", "S_tilde_rand"]},
    "solve": {"out": "solve.json", "maxit": 1000},
}


def config_from_args(args):
    values = dict(_KIND_DEFAULTS[args.kind])
    values["kind"] = args.kind
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(ExperimentConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        values.update(file_values)
    for flag, fieldname in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[fieldname] = v
    if getattr(args, "preconditioners", None):
        values["preconditioners"] = [t for t in args.preconditioners.split(",") if t]
    return ExperimentConfig(**values).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    runner = {
        "synthetic": run_synthetic,
        "fourdvar": run_fourdvar,
        "analyze": run_analyze,
        "solve": run_solve,
    }[cfg.kind]
    runner(cfg)
    print(f"wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
