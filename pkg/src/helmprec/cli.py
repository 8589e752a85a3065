"""Batch command-line interface: verify, sweep, import, export.

Every command reads a config (or matrix files), runs its checks, writes
report files into the output directory, prints one summary line per
check, and exits nonzero iff an asserted inequality failed or an error
occurred. Runs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import io as hio
from .assemble import (
    ProblemSpec,
    assemble_load,
    assemble_system,
    pair_as_external,
    validate_external,
)
from .bounds import (
    DEFAULT_SLACK,
    GardingConstants,
    garding_check,
    garding_constants_for,
    infsup_ladder,
    nearby_bound_report,
    norm_equivalence_report,
)
from .coeffs import CoefficientField, Role, field_diff_sup_norm
from .errors import HelmprecError
from .numerics import gram_factor
from .solvers import fixed_point, gmres

SWEEP_COLUMNS = hio.BOUND_COLUMNS + ("fp_iters", "gmres_iters", "error")
LADDER_COLUMNS = ("k", "h", "h_ref", "n", "n_ref", "gamma", "gamma_ref", "ratio",
                  "singular")


@dataclass
class ScenarioResult:
    """Paths of emitted reports, per-check summaries, and the exit status."""

    paths: dict[str, str] = field(default_factory=dict)
    summaries: list[tuple[str, bool, float]] = field(default_factory=list)
    exit_status: int = 0

    def add(self, name: str, passed: bool, margin: float):
        self.summaries.append((name, passed, margin))
        if not passed:
            self.exit_status = 1

    def print_summary(self, out=None):
        out = sys.stdout if out is None else out
        for name, passed, margin in self.summaries:
            flag = "PASS" if passed else "FAIL"
            print(f"{flag} {name}: margin={margin:.6e}", file=out)


def _add_report_checks(result: ScenarioResult, prefix: str, checks):
    for c in checks:
        result.add(f"{prefix}.{c.name}", c.passed, c.margin)


def _build_pair(cfg: hio.ExperimentConfig, k: float, mesh=None, alpha=None):
    """Assemble the (sys1, sys2) pair a config's perturbation describes."""
    spec1 = hio.build_problem(cfg, k=k, mesh=mesh)
    sys1 = assemble_system(spec1)
    pert = cfg.perturbation
    if pert["mode"] == "absorption":
        a = pert["alpha"] if alpha is None else alpha
        eps2 = spec1.eps.values * (1.0 + 1j * a)
        spec2 = spec1.with_eps(CoefficientField(spec1.mesh, eps2, Role.EPS))
        sys2 = assemble_system(spec2)
        return sys1, sys2, a
    mu2 = (
        hio.field_from_rule(spec1.mesh, pert["mu_inv"], Role.MU_INV, k)
        if pert["mu_inv"] is not None
        else spec1.mu_inv
    )
    eps2 = (
        hio.field_from_rule(spec1.mesh, pert["eps"], Role.EPS, k)
        if pert["eps"] is not None
        else spec1.eps
    )
    spec2 = ProblemSpec(k, spec1.mesh, mu2, eps2, spec1.theta)
    return sys1, assemble_system(spec2), None


def cmd_verify(
    config_path: str,
    out_dir: str | None = None,
    seed: int | None = None,
    tol_scale: float = 1.0,
    threads: int = 1,
) -> ScenarioResult:
    """Run the full bound-verification scenario of one config."""
    cfg = hio.load_config(config_path)
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    seed = cfg.seed if seed is None else seed
    slack = DEFAULT_SLACK * tol_scale
    result = ScenarioResult()

    sys1, sys2, alpha = _build_pair(cfg, cfg.problem["k"])
    if cfg.problem.get("garding") is not None:
        constants = GardingConstants(**cfg.problem["garding"])
    else:
        constants = garding_constants_for(sys1.spec)

    grep = garding_check(
        sys1, constants, n_samples=cfg.solver["garding_samples"], seed=seed
    )
    result.paths["garding"] = hio.write_report(
        grep, os.path.join(out, "garding.json"), "json"
    )
    result.add("garding.sampled", grep.violations == 0, grep.worst_rel_margin)
    if grep.identity_max_rel_err is not None:
        result.add(
            "garding.identity",
            grep.identity_max_rel_err <= 1e-12,
            1e-12 - grep.identity_max_rel_err,
        )

    nrep = norm_equivalence_report(sys1, constants, slack=slack, seed=seed)
    result.paths["norm_equivalence"] = hio.write_report(
        nrep, os.path.join(out, "norm_equivalence.json"), "json"
    )
    _add_report_checks(result, "norms", nrep.checks)

    brep = nearby_bound_report(sys1, sys2, slack=slack, seed=seed, alpha=alpha)
    result.paths["bounds"] = hio.write_report(
        brep, os.path.join(out, "bounds.json"), "json"
    )
    result.paths["bounds_csv"] = hio.write_report(
        brep, os.path.join(out, "bounds.csv"), "csv"
    )
    if brep.singular:
        result.add("bounds.nonsingular", False, math.nan)
    else:
        _add_report_checks(result, "bounds", brep.checks)
    return result


def _sweep_point(cfg, k, alpha, slack, seed):
    row = {c: None for c in SWEEP_COLUMNS}
    row.update({"k": k, "alpha": alpha, "error": ""})
    try:
        mesh = hio.build_mesh(dict(cfg.problem, resolution=cfg.sweep["resolution"]), k)
        sys1, sys2, alpha = _build_pair(cfg, k, mesh=mesh, alpha=alpha)
        rep = nearby_bound_report(sys1, sys2, slack=slack, seed=seed, alpha=alpha)
        row.update(hio.bound_report_row(rep))
        if rep.singular:
            return row
        b = assemble_load(sys1.spec, 1.0)
        gram = gram_factor(sys1.D)
        fp = fixed_point(
            sys1, sys2, b, np.zeros(sys1.n, dtype=complex),
            max_it=cfg.solver["max_it"], tol=cfg.solver["tol"], gram=gram,
        )
        lu2 = spla.splu(sp.csc_matrix(sys2.A, dtype=complex))
        apply_op = lambda x: lu2.solve(sys1.A @ x)
        gm = gmres(
            apply_op, lu2.solve(b), inner=gram,
            max_it=cfg.solver["max_it"], tol=cfg.solver["tol"],
        )
        row["fp_iters"] = fp.iterations
        row["gmres_iters"] = gm.iterations
    except HelmprecError as exc:
        row["error"] = type(exc).__name__
    return row


def cmd_sweep(
    config_path: str,
    out_dir: str | None = None,
    seed: int | None = None,
    tol_scale: float = 1.0,
    threads: int = 1,
) -> ScenarioResult:
    """Evaluate the config's (k, alpha) grid; one CSV row per point."""
    cfg = hio.load_config(config_path)
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    seed = cfg.seed if seed is None else seed
    slack = DEFAULT_SLACK * tol_scale
    result = ScenarioResult()

    alphas = cfg.sweep["alpha_values"] if cfg.perturbation["mode"] == "absorption" else [None]
    grid = [(k, a) for k in cfg.sweep["k_values"] for a in alphas]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(lambda p: _sweep_point(cfg, p[0], p[1], slack, seed), grid)
            )
    else:
        rows = [_sweep_point(cfg, k, a, slack, seed) for k, a in grid]

    sweep_path = os.path.join(out, "sweep.csv")
    hio.write_csv(sweep_path, SWEEP_COLUMNS, rows)
    result.paths["sweep"] = sweep_path
    for row, (k, a) in zip(rows, grid):
        name = f"sweep[k={k:g}" + (f",alpha={a:g}]" if a is not None else "]")
        if row["error"]:
            result.add(name, False, math.nan)
        elif row["singular"]:
            result.add(name + ".singular", True, math.nan)
        else:
            result.add(name, bool(row["passed"]), 0.0)

    if cfg.sweep["ladder"] is not None:
        refine = cfg.sweep["ladder"]["refine"]
        base = hio.build_problem(cfg, k=cfg.sweep["k_values"][0])

        def h_of(k):
            length = (
                cfg.problem["domain"][1] - cfg.problem["domain"][0]
                if cfg.problem["dimension"] == 1
                else max(cfg.problem["domain"]) * math.sqrt(2.0)
            )
            return length / hio.resolution_elements(cfg.sweep["resolution"], k, length)

        ladder = infsup_ladder(
            base, cfg.sweep["k_values"], h_of, lambda k: h_of(k) / refine, seed=seed
        )
        ladder_path = os.path.join(out, "ladder.csv")
        hio.write_report(ladder, ladder_path, "csv")
        result.paths["ladder"] = ladder_path
        for e in ladder.entries:
            result.add(
                f"ladder[k={e.k:g}]", not e.singular,
                e.ratio if not e.singular else math.nan,
            )
    return result


def cmd_export(
    config_path: str,
    out_dir: str | None = None,
    seed: int | None = None,
    tol_scale: float = 1.0,
    threads: int = 1,
) -> ScenarioResult:
    """Assemble the config's pair and write it as matrix exchange files."""
    cfg = hio.load_config(config_path)
    out = out_dir or cfg.output_dir
    sys1, sys2, _ = _build_pair(cfg, cfg.problem["k"])
    dmu = field_diff_sup_norm(sys1.spec.mu_inv, sys2.spec.mu_inv)
    deps = field_diff_sup_norm(sys1.spec.eps, sys2.spec.eps)
    ext = pair_as_external(sys1, sys2, dmu=dmu, deps=deps)
    result = ScenarioResult()
    result.paths.update(hio.write_matrix_exchange(ext, out))
    result.add("export", True, 0.0)
    return result


def cmd_import(
    matrix_dir: str,
    d_path: str | None = None,
    m_path: str | None = None,
    out_dir: str | None = None,
    seed: int = 0,
    tol_scale: float = 1.0,
    dmu: float | None = None,
    deps: float | None = None,
) -> ScenarioResult:
    """Read an external pair, validate it, and run the nearby bound report."""
    a1 = os.path.join(matrix_dir, "A1.mtx")
    a2 = os.path.join(matrix_dir, "A2.mtx")
    d_path = d_path or os.path.join(matrix_dir, "D.mtx")
    m_path = m_path or os.path.join(matrix_dir, "M.mtx")
    ext = hio.read_matrix_exchange(a1, a2, d_path, m_path)
    validate_external(ext)
    slack = DEFAULT_SLACK * tol_scale
    rep = nearby_bound_report(ext, ext, dmu=dmu, deps=deps, slack=slack, seed=seed)
    out = out_dir or matrix_dir
    os.makedirs(out, exist_ok=True)
    result = ScenarioResult()
    result.paths["bounds"] = hio.write_report(
        rep, os.path.join(out, "bounds.json"), "json"
    )
    result.paths["bounds_csv"] = hio.write_report(
        rep, os.path.join(out, "bounds.csv"), "csv"
    )
    if rep.singular:
        result.add("bounds.nonsingular", False, math.nan)
    else:
        _add_report_checks(result, "bounds", rep.checks)
    return result


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="helmprec",
        description="Assemble Helmholtz systems and verify preconditioner bounds",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", default=None, help="override output directory")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiplier on the inequality slack")
        sp.add_argument("--threads", type=int, default=1,
                        help="parallel sweep points (results stay in grid order)")

    for name, doc in (
        ("verify", "run bound checks for one config"),
        ("sweep", "evaluate the (k, alpha) grid of one config"),
        ("export", "write the config's system pair as matrix files"),
    ):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("--config", required=True, help="path to JSON config")
        common(sp)

    sp = sub.add_parser("import", help="run bound checks on external matrices")
    sp.add_argument("--dir", required=True, help="directory with A1.mtx and A2.mtx")
    sp.add_argument("--d", default=None, help="path to D matrix (default dir/D.mtx)")
    sp.add_argument("--m", default=None, help="path to M matrix (default dir/M.mtx)")
    sp.add_argument("--dmu", type=float, default=None,
                    help="sup norm of the diffusion coefficient difference")
    sp.add_argument("--deps", type=float, default=None,
                    help="sup norm of the low-order coefficient difference")
    sp.add_argument("--out-dir", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol-scale", type=float, default=1.0)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            result = cmd_verify(args.config, args.out_dir, args.seed,
                                args.tol_scale, args.threads)
        elif args.command == "sweep":
            result = cmd_sweep(args.config, args.out_dir, args.seed,
                               args.tol_scale, args.threads)
        elif args.command == "export":
            result = cmd_export(args.config, args.out_dir, args.seed,
                                args.tol_scale, args.threads)
        else:
            result = cmd_import(args.dir, args.d, args.m, args.out_dir,
                                args.seed or 0, args.tol_scale,
                                args.dmu, args.deps)
    except (HelmprecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result.print_summary()
    for name, path in result.paths.items():
        print(f"wrote {name}: {path}")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
