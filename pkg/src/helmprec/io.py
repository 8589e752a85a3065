"""Experiment configs, sparse-matrix exchange files, report serialization.

Configs are JSON with three blocks (problem, perturbation, sweep) plus
solver knobs and output paths; unknown keys are rejected by name and
defaults are materialized so a dump/re-read round-trip is the identity.

Matrices travel in Matrix Market coordinate format with complex
entries (real/imag pairs), 1-based indices, and symmetry 'general' or
'hermitian'; values are written with 17 significant digits so doubles
round-trip exactly. Reports serialize to JSON or flat CSV with a fixed
column order, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .assemble import ExternalSystem, ProblemSpec
from .bounds import (
    BoundReport,
    GardingReport,
    InfSupLadder,
    NormEquivalenceReport,
)
from .coeffs import CoefficientField, Role, constant_field, piecewise_field, pml_profile_1d
from .errors import ConfigError, InvalidArgumentError, MatrixExchangeError
from .mesh import BoundaryTag, Mesh, build_interval_mesh, build_rect_mesh
from .solvers import IterationTrace

SCHEMA_VERSION = 1

_TAGS = {t.value: t for t in BoundaryTag}

_RULE_KEYS = {
    "constant": {"type", "value"},
    "step": {"type", "axis", "threshold", "below", "above"},
    "pml": {"type", "start", "sigma0"},
}
_RES_KEYS = {
    "elements": {"type", "n"},
    "per_k": {"type", "factor"},
    "k_power": {"type", "scale", "exponent"},
}

_SCHEMA = {
    "schema_version": None,
    "seed": None,
    "problem": {
        "dimension": None,
        "domain": None,
        "boundary": None,
        "k": None,
        "theta": None,
        "resolution": None,
        "mu_inv": None,
        "eps": None,
        "garding": None,
    },
    "perturbation": {"mode": None, "alpha": None, "mu_inv": None, "eps": None},
    "sweep": {"k_values": None, "alpha_values": None, "resolution": None, "ladder": None},
    "solver": {"tol": None, "max_it": None, "garding_samples": None},
    "output": {"dir": None},
}


def _check_unknown(data: dict, schema: dict, prefix: str, unknown: list):
    for key, val in data.items():
        if key not in schema:
            unknown.append(prefix + key)
        elif isinstance(schema[key], dict) and isinstance(val, dict):
            _check_unknown(val, schema[key], prefix + key + ".", unknown)


def _check_rule(rule, where: str, table: dict):
    if not isinstance(rule, dict) or "type" not in rule:
        raise ConfigError(f"{where}: expected an object with a 'type' key")
    rtype = rule["type"]
    if rtype not in table:
        raise ConfigError(f"{where}: unknown type {rtype!r} (one of {sorted(table)})")
    extra = set(rule) - table[rtype]
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _as_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex value must be [re, im], got {v}")
        return complex(v[0], v[1])
    return complex(v)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A validated experiment description with all defaults applied."""

    data: dict

    @property
    def problem(self) -> dict:
        return self.data["problem"]

    @property
    def perturbation(self) -> dict:
        return self.data["perturbation"]

    @property
    def sweep(self) -> dict:
        return self.data["sweep"]

    @property
    def solver(self) -> dict:
        return self.data["solver"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def output_dir(self) -> str:
        return self.data["output"]["dir"]

    def normalized(self) -> dict:
        return self.data


def read_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; apply defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    unknown: list[str] = []
    _check_unknown(raw, _SCHEMA, "", unknown)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unrecognized schema_version {version!r}")

    prob = raw.get("problem")
    if prob is None:
        raise ConfigError("missing mandatory key: problem")
    missing = [k for k in ("dimension", "k") if k not in prob]
    if missing:
        raise ConfigError(
            "missing mandatory keys: " + ", ".join("problem." + m for m in missing)
        )
    dim = prob["dimension"]
    if dim not in (1, 2):
        raise ConfigError(f"problem.dimension must be 1 or 2, got {dim!r}")
    k = float(prob["k"])
    if k <= 0:
        raise ConfigError("problem.k must be positive")

    domain = prob.get("domain", [0.0, 1.0] if dim == 1 else [1.0, 1.0])
    if not (isinstance(domain, (list, tuple)) and len(domain) == 2):
        raise ConfigError("problem.domain must be a pair of numbers")
    domain = [float(domain[0]), float(domain[1])]

    sides = ("left", "right") if dim == 1 else ("left", "right", "bottom", "top")
    boundary = dict(prob.get("boundary", {}))
    extra_sides = set(boundary) - set(sides)
    if extra_sides:
        raise ConfigError(f"unknown boundary sides: {sorted(extra_sides)}")
    for s in sides:
        boundary.setdefault(s, "impedance")
        if boundary[s] not in _TAGS:
            raise ConfigError(
                f"boundary.{s} must be one of {sorted(_TAGS)}, got {boundary[s]!r}"
            )
    boundary = {s: boundary[s] for s in sides}

    resolution = prob.get("resolution", {"type": "per_k", "factor": 10.0})
    _check_rule(resolution, "problem.resolution", _RES_KEYS)
    mu_rule = prob.get("mu_inv", {"type": "constant", "value": [1.0, 0.0]})
    eps_rule = prob.get("eps", {"type": "constant", "value": [1.0, 0.0]})
    for name, rule in (("problem.mu_inv", mu_rule), ("problem.eps", eps_rule)):
        _check_rule(rule, name, _RULE_KEYS)
    garding = prob.get("garding")
    if garding is not None:
        extra = set(garding) - {"c_g1", "c_g2"}
        if extra or not {"c_g1", "c_g2"} <= set(garding):
            raise ConfigError("problem.garding needs exactly the keys c_g1, c_g2")
        garding = {"c_g1": float(garding["c_g1"]), "c_g2": float(garding["c_g2"])}

    pert_in = raw.get("perturbation", {})
    mode = pert_in.get("mode", "absorption")
    if mode not in ("absorption", "nearby"):
        raise ConfigError(f"perturbation.mode must be absorption|nearby, got {mode!r}")
    pert = {
        "mode": mode,
        "alpha": float(pert_in.get("alpha", 0.3)),
        "mu_inv": pert_in.get("mu_inv"),
        "eps": pert_in.get("eps"),
    }
    for name in ("mu_inv", "eps"):
        if pert[name] is not None:
            _check_rule(pert[name], f"perturbation.{name}", _RULE_KEYS)
    if pert["alpha"] < 0:
        raise ConfigError("perturbation.alpha must be >= 0")
    if mode == "nearby" and pert["mu_inv"] is None and pert["eps"] is None:
        raise ConfigError("nearby perturbation needs mu_inv and/or eps rules")

    sweep_in = raw.get("sweep", {})
    sweep = {
        "k_values": [float(x) for x in sweep_in.get("k_values", [k])],
        "alpha_values": [float(x) for x in sweep_in.get("alpha_values", [pert["alpha"]])],
        "resolution": sweep_in.get("resolution", resolution),
        "ladder": sweep_in.get("ladder"),
    }
    _check_rule(sweep["resolution"], "sweep.resolution", _RES_KEYS)
    if not sweep["k_values"] or not sweep["alpha_values"]:
        raise ConfigError("sweep grids must be non-empty")
    if sweep["ladder"] is not None:
        if set(sweep["ladder"]) - {"refine"}:
            raise ConfigError("sweep.ladder accepts only 'refine'")
        sweep["ladder"] = {"refine": int(sweep["ladder"].get("refine", 4))}
        if sweep["ladder"]["refine"] < 2:
            raise ConfigError("sweep.ladder.refine must be >= 2")

    solver_in = raw.get("solver", {})
    solver = {
        "tol": float(solver_in.get("tol", 1e-8)),
        "max_it": int(solver_in.get("max_it", 500)),
        "garding_samples": int(solver_in.get("garding_samples", 1000)),
    }

    data = {
        "schema_version": SCHEMA_VERSION,
        "seed": int(raw.get("seed", 0)),
        "problem": {
            "dimension": dim,
            "domain": domain,
            "boundary": boundary,
            "k": k,
            "theta": float(prob.get("theta", 1.0)),
            "resolution": resolution,
            "mu_inv": mu_rule,
            "eps": eps_rule,
            "garding": garding,
        },
        "perturbation": pert,
        "sweep": sweep,
        "solver": solver,
        "output": {"dir": raw.get("output", {}).get("dir", "out")},
    }
    return ExperimentConfig(data)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return read_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON dump of the normalized config (round-trip stable)."""
    return json.dumps(cfg.normalized(), indent=2) + "\n"


# -- config -> problem objects ------------------------------------------------

def resolution_elements(rule: dict, k: float, length: float) -> int:
    """Number of mesh elements along a length for one resolution rule."""
    if rule["type"] == "elements":
        n = int(rule["n"])
    elif rule["type"] == "per_k":
        n = math.ceil(float(rule["factor"]) * k)
    else:  # k_power: target h = scale * k^{-exponent}
        h = float(rule.get("scale", 1.0)) * k ** (-float(rule["exponent"]))
        n = math.ceil(length / h)
    if n < 1:
        raise ConfigError(f"resolution rule yields {n} elements")
    return n


def build_mesh(problem: dict, k: Optional[float] = None, refine: int = 1) -> Mesh:
    k = problem["k"] if k is None else k
    rule = problem["resolution"]
    if problem["dimension"] == 1:
        a, b = problem["domain"]
        n = resolution_elements(rule, k, b - a) * refine
        return build_interval_mesh(
            a, b, n, _TAGS[problem["boundary"]["left"]], _TAGS[problem["boundary"]["right"]]
        )
    w, h = problem["domain"]
    # element diameter is the cell diagonal; resolve counts per axis
    nx = resolution_elements(rule, k, w * math.sqrt(2.0)) * refine
    ny = resolution_elements(rule, k, h * math.sqrt(2.0)) * refine
    tags = {s: _TAGS[t] for s, t in problem["boundary"].items()}
    return build_rect_mesh(w, h, nx, ny, tags)


def field_from_rule(mesh: Mesh, rule: dict, role: Role, k: float) -> CoefficientField:
    """Materialize one coefficient rule on a mesh."""
    rtype = rule["type"]
    if rtype == "constant":
        return constant_field(mesh, _as_complex(rule["value"]), role)
    if rtype == "step":
        axis = int(rule.get("axis", 0))
        thr = float(rule["threshold"])
        below = _as_complex(rule["below"])
        above = _as_complex(rule["above"])
        if mesh.dimension == 1:
            f = lambda x: below if x < thr else above
        else:
            f = lambda p: below if p[axis] < thr else above
        return piecewise_field(mesh, f, role)
    if rtype == "pml":
        mu_inv, eps = pml_profile_1d(
            mesh, k, float(rule["start"]), float(rule["sigma0"])
        )
        return mu_inv if role == Role.MU_INV else eps
    raise ConfigError(f"unknown coefficient rule type {rtype!r}")


def build_problem(
    cfg: ExperimentConfig, k: Optional[float] = None, mesh: Optional[Mesh] = None
) -> ProblemSpec:
    """ProblemSpec for the config's primary problem, optionally at another k."""
    prob = cfg.problem
    k = prob["k"] if k is None else k
    if mesh is None:
        mesh = build_mesh(prob, k)
    mu = field_from_rule(mesh, prob["mu_inv"], Role.MU_INV, k)
    eps = field_from_rule(mesh, prob["eps"], Role.EPS, k)
    return ProblemSpec(k, mesh, mu, eps, prob["theta"])


# -- matrix exchange ----------------------------------------------------------

def write_matrix_mm(path: str, X, symmetry: str = "general"):
    """Write one sparse complex matrix in coordinate format.

    ``symmetry='hermitian'`` stores the lower triangle only. Values are
    written with 17 significant digits (lossless for doubles).
    """
    if symmetry not in ("general", "hermitian"):
        raise InvalidArgumentError(f"unsupported symmetry {symmetry!r}")
    coo = sp.coo_matrix(X, dtype=complex)
    n, m = coo.shape
    rows, cols, vals = coo.row, coo.col, coo.data
    if symmetry == "hermitian":
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    lines = [f"%%MatrixMarket matrix coordinate complex {symmetry}"]
    lines.append(f"{n} {m} {len(vals)}")
    for i, j, v in zip(rows, cols, vals):
        lines.append(f"{i + 1} {j + 1} {v.real:.16e} {v.imag:.16e}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_mm(path: str) -> sp.csr_matrix:
    """Read one coordinate-format complex matrix; errors carry line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixExchangeError("empty file", line=1)
    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        raise MatrixExchangeError("malformed header banner", line=1)
    _, obj, fmt, field, symmetry = banner
    if (obj, fmt) != ("matrix", "coordinate"):
        raise MatrixExchangeError(f"unsupported object/format {obj}/{fmt}", line=1)
    if field != "complex":
        raise MatrixExchangeError(f"field must be 'complex', got {field!r}", line=1)
    if symmetry not in ("general", "hermitian"):
        raise MatrixExchangeError(f"unsupported symmetry {symmetry!r}", line=1)

    ln = 1
    size_line = None
    for ln, text in enumerate(lines[1:], start=2):
        if text.startswith("%") or not text.strip():
            continue
        size_line = text
        break
    if size_line is None:
        raise MatrixExchangeError("missing size line", line=len(lines))
    parts = size_line.split()
    if len(parts) != 3:
        raise MatrixExchangeError("size line must be 'rows cols nnz'", line=ln)
    try:
        n, m, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixExchangeError("size line must contain integers", line=ln)

    rows, cols, vals = [], [], []
    entry_ln = ln
    for entry_ln, text in enumerate(lines[ln:], start=ln + 1):
        if text.startswith("%") or not text.strip():
            continue
        parts = text.split()
        if len(parts) != 4:
            raise MatrixExchangeError(
                "entry must be 'i j re im' (complex real/imag pair)", line=entry_ln
            )
        try:
            i, j = int(parts[0]), int(parts[1])
            re, im = float(parts[2]), float(parts[3])
        except ValueError:
            raise MatrixExchangeError("unparseable entry", line=entry_ln)
        if i < 1 or j < 1:
            raise MatrixExchangeError(
                f"index ({i}, {j}) violates the 1-based convention", line=entry_ln
            )
        if i > n or j > m:
            raise MatrixExchangeError(
                f"index ({i}, {j}) out of range for {n}x{m}", line=entry_ln
            )
        if symmetry == "hermitian" and j > i:
            raise MatrixExchangeError(
                "hermitian files store the lower triangle only", line=entry_ln
            )
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(complex(re, im))
    if len(vals) != nnz:
        raise MatrixExchangeError(
            f"expected {nnz} entries, found {len(vals)}", line=entry_ln
        )
    X = sp.coo_matrix((vals, (rows, cols)), shape=(n, m)).tocsr()
    if symmetry == "hermitian":
        strict_lower = sp.tril(X, k=-1)
        X = (X + strict_lower.getH()).tocsr()
    return X


_EXCHANGE_NAMES = ("A1.mtx", "A2.mtx", "D.mtx", "M.mtx")


def write_matrix_exchange(system: ExternalSystem, directory: str) -> dict[str, str]:
    """Write a system pair (A1, A2, D, M) plus optional metadata to a directory."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, X, symmetry in (
        ("A1.mtx", system.A1, "general"),
        ("A2.mtx", system.A2, "general"),
        ("D.mtx", system.D, "hermitian"),
        ("M.mtx", system.M, "hermitian"),
    ):
        path = os.path.join(directory, name)
        write_matrix_mm(path, X, symmetry)
        paths[name] = path
    meta = {}
    if system.dmu is not None:
        meta["dmu"] = system.dmu
    if system.deps is not None:
        meta["deps"] = system.deps
    if meta:
        meta_path = os.path.join(directory, "meta.json")
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
        paths["meta.json"] = meta_path
    return paths


def read_matrix_exchange(
    a1_path: str, a2_path: str, d_path: str, m_path: str
) -> ExternalSystem:
    """Read a system pair from four coordinate-format files.

    A ``meta.json`` next to the A1 file, when present, supplies the
    coefficient-difference norms.
    """
    mats = {}
    for name, path in (
        ("A1", a1_path), ("A2", a2_path), ("D", d_path), ("M", m_path)
    ):
        if not os.path.exists(path):
            raise MatrixExchangeError(f"matrix file for {name} not found: {path}")
        mats[name] = read_matrix_mm(path)
    dmu = deps = None
    meta_path = os.path.join(os.path.dirname(os.path.abspath(a1_path)), "meta.json")
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        dmu = meta.get("dmu")
        deps = meta.get("deps")
    return ExternalSystem(
        A1=mats["A1"], A2=mats["A2"], D=mats["D"], M=mats["M"],
        n=mats["A1"].shape[0], dmu=dmu, deps=deps,
    )


# -- report serialization -----------------------------------------------------

def _jsonify(obj):
    """Recursively convert numpy scalars so json.dump accepts the payload."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _f(x) -> str:
    """Deterministic CSV float formatting (shortest round-trip repr)."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


BOUND_COLUMNS = (
    "k", "h", "alpha", "n", "dmu", "deps", "cdis1", "cdis2", "mass_ratio",
    "lhs_D", "lhs_Dinv", "lhs_2", "lhs_2p", "rhs_lemma", "rhs_lemma2",
    "cond", "contraction", "singular", "passed",
)


def bound_report_row(rep: BoundReport) -> dict:
    return {
        "k": rep.k, "h": rep.h, "alpha": rep.alpha, "n": rep.n,
        "dmu": rep.dmu, "deps": rep.deps, "cdis1": rep.c_dis1,
        "cdis2": rep.c_dis2, "mass_ratio": rep.mass_ratio,
        "lhs_D": rep.lhs_D, "lhs_Dinv": rep.lhs_Dinv, "lhs_2": rep.lhs_2,
        "lhs_2p": rep.lhs_2p, "rhs_lemma": rep.rhs_lemma,
        "rhs_lemma2": rep.rhs_lemma2, "cond": rep.cond,
        "contraction": rep.lhs_D, "singular": rep.singular, "passed": rep.passed,
    }


def _bound_report_json(rep: BoundReport) -> dict:
    out = bound_report_row(rep)
    out["checks"] = [
        {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "passed": c.passed,
         "margin": c.margin}
        for c in rep.checks
    ]
    out["notes"] = [
        "cond and the small_cond checks use the measured discrete constant of "
        "system 1 as a proxy for the continuous solution-operator norm"
    ]
    return out


def _garding_json(rep: GardingReport) -> dict:
    return {
        "c_g1": rep.constants.c_g1, "c_g2": rep.constants.c_g2,
        "n_samples": rep.n_samples, "violations": rep.violations,
        "worst_rel_margin": rep.worst_rel_margin, "canonical": rep.canonical,
        "identity_max_rel_err": rep.identity_max_rel_err, "passed": rep.passed,
    }


def _norm_equiv_json(rep: NormEquivalenceReport) -> dict:
    return {
        "c_g1": rep.constants.c_g1, "c_g2": rep.constants.c_g2,
        "hstar_to_h": rep.hstar_to_h, "h0_to_h": rep.h0_to_h,
        "h0_to_h0": rep.h0_to_h0, "gamma": rep.gamma, "c_dis": rep.c_dis,
        "checks": [
            {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "passed": c.passed,
             "margin": c.margin}
            for c in rep.checks
        ],
        "passed": rep.passed,
    }


def _trace_rows(tr: IterationTrace):
    rows = []
    for i, norm in enumerate(tr.norms):
        env_c = tr.envelope_c[i] if tr.envelope_c is not None else None
        env_e = tr.envelope_elman[i] if tr.envelope_elman is not None else None
        rows.append(
            {"iteration": i, "norm": float(norm), "envelope_c": env_c,
             "envelope_elman": env_e}
        )
    return rows


def _ladder_rows(ladder: InfSupLadder):
    return [
        {"k": e.k, "h": e.h, "h_ref": e.h_ref, "n": e.n, "n_ref": e.n_ref,
         "gamma": e.gamma, "gamma_ref": e.gamma_ref, "ratio": e.ratio,
         "singular": e.singular}
        for e in ladder.entries
    ]


def write_csv(path: str, columns, rows):
    """Write rows (dicts) under a documented header; deterministic output."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_f(row.get(c)) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report(report, path: str, fmt: str = "json") -> str:
    """Serialize a report to JSON or CSV with deterministic field order."""
    if fmt not in ("json", "csv"):
        raise InvalidArgumentError(f"format must be json or csv, got {fmt!r}")
    if isinstance(report, BoundReport):
        payload, columns, rows = _bound_report_json(report), BOUND_COLUMNS, [
            bound_report_row(report)
        ]
    elif isinstance(report, GardingReport):
        payload = _garding_json(report)
        columns, rows = tuple(payload.keys()), [payload]
    elif isinstance(report, NormEquivalenceReport):
        payload = _norm_equiv_json(report)
        columns = ("c_g1", "c_g2", "hstar_to_h", "h0_to_h", "h0_to_h0",
                   "gamma", "c_dis", "passed")
        rows = [{c: payload[c] for c in columns}]
    elif isinstance(report, IterationTrace):
        rows = _trace_rows(report)
        columns = ("iteration", "norm", "envelope_c", "envelope_elman")
        payload = {
            "kind": report.kind, "inner": report.inner,
            "converged": report.converged,
            "final_relative": report.final_relative,
            "c": report.c, "trace": rows,
        }
    elif isinstance(report, InfSupLadder):
        rows = _ladder_rows(report)
        columns = ("k", "h", "h_ref", "n", "n_ref", "gamma", "gamma_ref",
                   "ratio", "singular")
        payload = {"entries": rows}
    else:
        raise InvalidArgumentError(f"cannot serialize {type(report).__name__}")

    if fmt == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonify(payload), fh, indent=2)
            fh.write("\n")
    else:
        write_csv(path, columns, rows)
    return path
