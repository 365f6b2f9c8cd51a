"""Configuration-driven experiment runner.

A config is JSON: ``schema_version``, ``algorithm``, ``seed``, ``params`` (and
``grid``/``cap`` for sweeps). Each runner returns a summary of scalars, a list
of oracle checks, free-form details and a CSV table. ``report.json`` and
``data.csv`` depend only on (config, seed, version); wall-clock data goes to
``metadata.json``.
"""

from __future__ import annotations

import copy
import io
import itertools
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

SCHEMA_VERSION = "1"
ALGORITHMS = ("encode", "qae", "integrate", "copies", "qade", "qrk", "qlbm")
DEFAULT_SWEEP_CAP = 256


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    pass


_NUM = {"type": "number"}
_INT = {"type": "integer"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
_CMAT = {"oneOf": [_MAT, {"type": "object", "properties": {"re": _MAT, "im": _MAT},
                          "required": ["re"], "additionalProperties": False}]}
_CVEC = {"oneOf": [_VEC, {"type": "object", "properties": {"re": _VEC, "im": _VEC},
                          "required": ["re"], "additionalProperties": False}]}
_MODE = {"enum": ["exact", "sampled"]}
_METHOD = {"enum": ["exhaustive", "sa"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


PARAM_SCHEMAS = {
    "encode": _obj({
        "kind": {"enum": ["amplitude", "basis", "basis-to-amplitude", "block"]},
        "vector": _VEC,
        "value": _NUM,
        "flavor": {"enum": ["binary", "fixed-point", "unary", "one-hot"]},
        "width": {"type": "integer", "minimum": 1, "maximum": 16},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "psi_width": {"type": "integer", "minimum": 1, "maximum": 8},
        "matrix": _MAT,
        "alpha": {"type": "number", "exclusiveMinimum": 0},
    }, ["kind"]),
    "qae": _obj({
        "a": {"type": "number", "minimum": 0, "maximum": 1},
        "samples": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
        "n_phase": {"type": "integer", "minimum": 1, "maximum": 12},
        "mode": _MODE,
        "M": {"type": "integer", "minimum": 1},
    }, ["n_phase"]),
    "integrate": _obj({
        "system": {"type": "object"},
        "y0": _VEC,
        "T": {"type": "number", "exclusiveMinimum": 0},
        "n_primary": {"type": "integer", "minimum": 1, "maximum": 4096},
        "N_secondary": {"type": "integer", "minimum": 1, "maximum": 1024},
        "r": {"type": "integer", "minimum": 1, "maximum": 4},
        "n_phase": {"type": "integer", "minimum": 1, "maximum": 12},
        "mode": _MODE,
        "M": {"type": "integer", "minimum": 1},
        "exact_mean": {"type": "boolean"},
    }, ["system", "T", "n_primary", "N_secondary"]),
    "copies": _obj({
        "construction": {"enum": ["quadratic-map", "meanfield", "history"]},
        "map": {"enum": ["identity", "complex-square"]},
        "z": _CVEC,
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.2},
        "dt": {"type": "number", "minimum": 0},
        "steps": {"type": "integer", "minimum": 1, "maximum": 1000},
        "F": _CMAT,
        "x0": _CVEC,
        "n": {"type": "integer", "minimum": 1, "maximum": 8},
        "E_dt": {"type": "number", "exclusiveMinimum": 0},
        "normalization": {"enum": ["mean-field", "binomial"]},
        "f": _CMAT,
        "b": {"type": "array", "items": _CVEC},
    }, ["construction"]),
    "qade": _obj({
        "problem": {"enum": ["quadratic"]},
        "interior_points": {"type": "integer", "minimum": 1, "maximum": 200},
        "family": {"enum": ["chebyshev", "monomial"]},
        "degree": {"type": "integer", "minimum": 0, "maximum": 8},
        "n_spins": {"type": "integer", "minimum": 1, "maximum": 8},
        "center": _VEC,
        "scale": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, _VEC]},
        "epochs": {"type": "integer", "minimum": 1, "maximum": 100},
        "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "method": _METHOD,
    }),
    "qrk": _obj({
        "tableau": {"enum": ["euler", "heun", "rk4", "backward-euler", "implicit-midpoint", "gauss-legendre-2"]},
        "matrix": _MAT,
        "constant": _VEC,
        "u": _VEC,
        "dt": {"type": "number", "minimum": 0},
        "solver": {"enum": ["continuous", "windowed"]},
        "bits": {"type": "integer", "minimum": 1, "maximum": 12},
        "epochs": {"type": "integer", "minimum": 1, "maximum": 100},
        "k0": _INT,
        "method": _METHOD,
    }, ["matrix", "u", "dt"]),
    "qlbm": _obj({
        "M": {"type": "integer", "minimum": 2, "maximum": 1024},
        "u": _NUM,
        "steps": {"type": "integer", "minimum": 1, "maximum": 10000},
        "initial": {"oneOf": [{"enum": ["gaussian", "uniform"]}, _VEC]},
        "width": {"type": "number", "exclusiveMinimum": 0},
    }, ["M"]),
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "algorithm": {"enum": list(ALGORITHMS)},
        "seed": {"type": "integer", "minimum": 0},
        "params": {"type": "object"},
        "output": _obj({"dir": {"type": "string"}}),
        "oracle_check": {"type": "boolean"},
        "grid": {"type": "object", "additionalProperties": {"type": "array"}},
        "cap": {"type": "integer", "minimum": 0},
    },
    "required": ["schema_version", "algorithm", "params"],
    "additionalProperties": False,
}


def validate_config(config: dict, sweep: bool = False) -> dict:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
        if not sweep:
            jsonschema.validate(config["params"], PARAM_SCHEMAS[config["algorithm"]])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    if "grid" in config and not sweep:
        raise ConfigError("'grid' is only allowed for sweep")
    return config


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


# ---------------------------------------------------------------------------
# Serialization


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return str(value)
        return value
    return obj


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        return f"{format(value.real, '.17g')}{format(value.imag, '+.17g')}j"
    return str(value)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _cvec(value):
    if isinstance(value, dict):
        re = np.asarray(value["re"], dtype=float)
        im = np.asarray(value.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(value, dtype=float)


# ---------------------------------------------------------------------------
# Runners


@dataclass
class RunResult:
    summary: dict
    header: list
    rows: list
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


def _check(name: str, value: float, tolerance: float) -> dict:
    return {"name": name, "value": float(value), "tolerance": float(tolerance), "passed": bool(value <= tolerance)}


def run_encode(params: dict, seed: int, oracle: bool) -> RunResult:
    from . import encodings as enc

    kind = params["kind"]
    checks = []
    if kind == "amplitude":
        x = np.asarray(params["vector"], dtype=float)
        state, norm = enc.amplitude_encode(x)
        amps = enc.amplitude_decode(state)
        rows = [[i, float(np.real(a))] for i, a in enumerate(amps)]
        if oracle:
            checks.append(_check("round-trip", np.max(np.abs(amps[: x.size] * norm - x)), 1e-12))
        return RunResult({"norm": norm, "qubits": state.num_qubits}, ["index", "amplitude"], rows, checks)
    if kind == "basis":
        spec = enc.BasisEncoding(params.get("flavor", "binary"), params.get("width", 4), params.get("scale", 1.0))
        idx = enc.basis_encode(params["value"], spec)
        decoded = enc.basis_decode(idx, spec)
        rows = [[idx, enc.bit_pattern(idx, spec.width), decoded]]
        return RunResult({"index": idx, "decoded": decoded}, ["index", "bits", "decoded"], rows)
    if kind == "basis-to-amplitude":
        d = np.asarray(params["vector"], dtype=float)
        state, prob = enc.basis_to_amplitude(d, params.get("psi_width"))
        amps = np.real(state.amplitudes[: d.size])
        rows = [[i, float(d[i]), float(amps[i])] for i in range(d.size)]
        if oracle and params.get("psi_width") is None:
            checks.append(_check("success-probability", abs(prob - float(d @ d) / d.size), 1e-12))
            checks.append(_check("proportionality", float(np.max(np.abs(amps - d / np.linalg.norm(d)))), 1e-10))
        return RunResult({"success_probability": prob}, ["index", "d", "amplitude"], rows, checks)
    A = np.asarray(params["matrix"], dtype=float)
    alpha = params.get("alpha", float(np.linalg.norm(A, 2)))
    be = enc.block_encode(A, alpha)
    ext = be.extract()
    rows = [[i, j, float(np.real(ext[i, j]))] for i in range(A.shape[0]) for j in range(A.shape[1])]
    if oracle:
        checks.append(_check("extraction", float(np.max(np.abs(ext - A))), 1e-10))
    return RunResult({"alpha": alpha, "unitary_dim": be.U.data.shape[0]}, ["row", "col", "extracted"], rows, checks)


def run_qae(params: dict, seed: int, oracle: bool) -> RunResult:
    from . import amplitude_estimation as qa
    from .statevector import ry

    n_phase = params["n_phase"]
    mode = params.get("mode", "exact")
    M = params.get("M", 1)
    if "samples" in params:
        g = np.asarray(params["samples"], dtype=float)
        est = qa.estimate_mean(g, n_phase, M=M, seed=seed, mode=mode)
        target = float(g.mean())
        value = est.estimate
    else:
        if "a" not in params:
            raise ConfigError("qae needs either 'a' or 'samples'")
        target = float(params["a"])
        A = ry(2 * math.asin(math.sqrt(target)))
        grover = qa.build_grover(A, qa.GoodSubspacePredicate([False, True]))
        est = qa.qae(grover, n_phase, "exact") if mode == "exact" else qa.qae_median(grover, n_phase, M, seed)
        value = est.a_hat
    bound = 2 * math.pi / 2**n_phase
    err = abs(value - target)
    summary = {"a": target, "a_hat": value, "y": est.y, "n_phase": n_phase, "error": err,
               "bound": bound, "mode": mode, "M": est.M}
    rows = [[y, float(p)] for y, p in enumerate(est.distribution)]
    checks = [_check("modal-error-bound", err, bound)] if oracle and mode == "exact" else []
    return RunResult(summary, ["y", "probability"], rows, checks)


def _build_system(spec: dict):
    from .integrator import FluxSpec, ODESystem, UniformGrid, discretize_pde

    kind = spec.get("type", "linear")
    if kind == "linear":
        return ODESystem.linear(spec["matrix"], spec.get("constant")), None
    if kind == "pde":
        grid = UniformGrid(int(spec["points"]), float(spec.get("length", 1.0)))
        flux = FluxSpec(spec.get("diffusivity", 0.0), spec.get("velocity", 0.0), spec.get("burgers", 0.0))
        return discretize_pde(flux, grid, spec.get("scheme", "central")), grid
    raise ConfigError(f"unknown system type {kind!r}")


def run_integrate(params: dict, seed: int, oracle: bool) -> RunResult:
    from .integrator import QAEConfig, TimeMesh, exact_mean, solve
    from .oracles import rk4_integrate

    sys_, grid = _build_system(params["system"])
    if "y0" in params:
        y0 = np.asarray(params["y0"], dtype=float)
    elif grid is not None:
        y0 = np.sin(2 * math.pi * grid.x / grid.length)
    else:
        raise ConfigError("integrate needs 'y0'")
    mesh = TimeMesh(params["T"], params["n_primary"], params["N_secondary"])
    cfg = QAEConfig(params.get("n_phase", 7), params.get("mode", "exact"), params.get("M", 1), seed)
    estimator = exact_mean if params.get("exact_mean", False) else None
    traj, report = solve(sys_, y0, mesh, params.get("r", 2), cfg, estimator, oracle=oracle)
    fine = params["n_primary"] * params["N_secondary"] * 8
    ref = rk4_integrate(sys_, y0, params["T"] / fine, fine)[:: params["N_secondary"] * 8]
    times = mesh.primary_times()
    rows = []
    for k, t in enumerate(times):
        for c in range(sys_.dimension):
            rows.append([k, t, c, traj[k, c], ref[k, c], traj[k, c] - ref[k, c]])
    summary = {"final_error_vs_rk4": float(np.max(np.abs(traj[-1] - ref[-1]))), "dimension": sys_.dimension,
               "n_phase": cfg.n_phase, "mode": cfg.mode, "exact_mean": estimator is not None}
    checks = []
    if oracle and report.oracle_delta is not None:
        delta = float(np.max(np.abs(report.oracle_delta)))
        summary["max_delta_vs_taylor_oracle"] = delta
        # per-step QAE bounds, amplified at most by exp(||L|| T) through the linear dynamics
        growth = math.exp(float(np.linalg.norm(sys_.coefficients[1], 2)) * params["T"]) if sys_.degree == 1 else 1.0
        bound = growth * sum(max(s.uncertainty) for s in report.steps)
        if cfg.mode == "exact" or estimator is not None:
            checks.append(_check("taylor-oracle-delta", delta, bound + 1e-10))
    details = {"steps": [s for s in report.to_dict()["steps"]]}
    return RunResult(summary, ["step", "t", "component", "y", "rk4_reference", "delta"], rows, checks, details)


def _random_anti_hermitian(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    return (g - g.conj().T) / 2


def run_copies(params: dict, seed: int, oracle: bool) -> RunResult:
    from . import copies as cp

    kind = params["construction"]
    if kind == "quadratic-map":
        qmap = cp.QuadraticMap.identity(2) if params.get("map", "identity") == "identity" else cp.QuadraticMap.complex_square()
        z = _cvec(params.get("z", [0.6, 0.8]))
        eps = params.get("epsilon", 0.1)
        steps = params.get("steps", 1)
        traj = cp.euler_iterate(qmap, z, params.get("dt", 0.1), steps, eps)
        first = cp.apply_quadratic_map(qmap, z, eps)
        rows = [[k, i, traj.z[k, i], traj.classical[k, i]] for k in range(steps + 1) for i in range(z.size)]
        summary = {"success_probability": first.success_probability, "fidelity": first.fidelity,
                   "copy_budget": traj.copy_budget, "epsilon": eps}
        checks = [_check("fidelity-deficit", 1 - first.fidelity, eps**2)] if oracle else []
        return RunResult(summary, ["step", "component", "z_quantum", "z_classical"], rows, checks)
    if kind == "meanfield":
        d = 2
        F = _cvec(params["F"]) if "F" in params else _random_anti_hermitian(d, seed)
        x0 = _cvec(params.get("x0", [1.0, 0.0])).astype(complex)
        x0 = x0 / np.linalg.norm(x0)
        sys_ = cp.MeanFieldSystem(d, F, params.get("n", 4), normalization=params.get("normalization", "mean-field"))
        e0 = float(np.linalg.norm(sys_.f(x0), 2))
        dt = params["dt"] if "dt" in params else params.get("E_dt", 0.05) / max(e0, 1e-300)
        res = cp.meanfield_evolve(sys_, x0, dt, params.get("steps", 5))
        edt = res.E_norm * dt
        rows = [[k, res.trace_distances[k], res.step_errors[k - 1] if k else 0.0, res.reduced[k].purity()]
                for k in range(len(res.reduced))]
        summary = {"E_dt": edt, "max_step_error": float(res.step_errors.max()), "dt": dt}
        checks = [_check("step-error", float(res.step_errors.max()), 10 * edt**2)] if oracle else []
        return RunResult(summary, ["step", "trace_distance", "step_error", "purity"], rows, checks)
    f = _cvec(params["f"])
    b = np.array([_cvec(v) for v in params["b"]])
    T = b.shape[0] - 1
    dt = params.get("dt", 0.1)
    n = params.get("n", 1)
    h = cp.build_history_system(f, b, T, dt, n, params.get("normalization", "mean-field"))
    ref = cp.euler_reference(f, b, T, dt)
    sol = cp.solve_history(h, ref)
    dev = np.linalg.norm(sol.extracted - ref, axis=1)
    rows = [[k, dev[k]] for k in range(T + 1)]
    summary = {"max_deviation": float(dev.max()), "nonzero_blocks": h.nonzero_blocks(), "n": n}
    checks = [_check("euler-match", float(dev.max()), 1e-12)] if oracle and n == 1 and f.ndim == 2 and f.shape[0] == b.shape[1] else []
    return RunResult(summary, ["step", "deviation"], rows, checks)


def run_qade(params: dict, seed: int, oracle: bool) -> RunResult:
    from .ising import AnnealSchedule
    from .qade import BasisSet, SpinEncoding, quadratic_test_problem, zoom_iterate

    basis = BasisSet(params.get("family", "monomial"), params.get("degree", 2))
    problem = quadratic_test_problem(params.get("interior_points", 5))
    center = np.asarray(params.get("center", [0.0] * basis.size), dtype=float)
    if center.size != basis.size:
        raise ConfigError(f"center needs {basis.size} entries")
    enc = SpinEncoding(center, params.get("scale", 2.0), params.get("n_spins", 3))
    res = zoom_iterate(problem, basis, enc, params.get("epochs", 6), params.get("shrink", 0.5),
                       params.get("method", "exhaustive"), AnnealSchedule(), seed)
    rows = [[k + 1, res.residuals[k], res.best_residuals[k + 1]] for k in range(len(res.residuals))]
    summary = {"weights": res.weights.tolist(), "best_residual": res.best_residuals[-1]}
    checks = []
    if oracle and basis.family == "monomial" and basis.degree == 2:
        err = float(np.max(np.abs(res.weights - [0.0, 0.0, 1.0])))
        summary["weight_error"] = err
        bound = float(np.max(enc.scale)) * 2.0 ** -enc.n_spins * params.get("shrink", 0.5) ** params.get("epochs", 6) * 2
        checks.append(_check("weights-vs-exact", err, bound))
    return RunResult(summary, ["epoch", "residual", "best_residual"], rows, checks)


def run_qrk(params: dict, seed: int, oracle: bool) -> RunResult:
    from .qrk import RKStageProblem, build_rk_residual, minimize_rk_residual, rk_windowed_solve, tableau

    tab = tableau(params.get("tableau", "implicit-midpoint"))
    p = RKStageProblem.linear(params["matrix"], params["u"], params["dt"], tab, params.get("constant"))
    if params.get("solver", "continuous") == "continuous":
        u_next, K, value = minimize_rk_residual(build_rk_residual(p))
        rows = [[0, i, u_next[i]] for i in range(p.N)]
        summary = {"u_next": u_next.tolist(), "objective": value}
    else:
        u_next, rep = rk_windowed_solve(p, params.get("bits", 6), params.get("epochs", 10),
                                        params.get("method", "exhaustive"), params.get("k0"), seed=seed)
        rows = [[e["epoch"], i, e["values"][i]] for e in rep.epochs for i in range(p.N)]
        summary = {"u_next": u_next.tolist(), "saturated_any": rep.saturated_any}
    checks = []
    if oracle:
        # classical reference: the linear stage system solved directly
        A = np.atleast_2d(np.asarray(params["matrix"], dtype=float))
        s, N, dt = tab.stages, p.N, params["dt"]
        c = np.zeros(N) if params.get("constant") is None else np.asarray(params["constant"], dtype=float)
        lhs = np.eye(s * N) - dt * np.kron(tab.A, A)
        rhs = np.tile(A @ p.u + c, s)
        K = np.linalg.solve(lhs, rhs).reshape(s, N)
        ref = p.u + dt * tab.b @ K
        delta = float(np.max(np.abs(u_next - ref)))
        summary["reference"] = ref.tolist()
        if params.get("solver", "continuous") == "continuous":
            tol = 1e-10
        else:
            # two steps of the finest window used in the last epoch
            tol = 2 * 2.0 ** -min(rep.epochs[-1]["k"])
        checks.append(_check("stage-solve-reference", delta, tol))
    return RunResult(summary, ["epoch", "component", "value"], rows, checks)


def run_qlbm(params: dict, seed: int, oracle: bool) -> RunResult:
    from .qlbm import D1Q2Params, LatticeField, gaussian_hill, qlbm_run

    p = D1Q2Params(params["M"], params.get("u", 0.0))
    init = params.get("initial", "gaussian")
    if init == "gaussian":
        field0 = gaussian_hill(p.M, params.get("width"))
    elif init == "uniform":
        field0 = LatticeField(np.ones(p.M))
    else:
        field0 = LatticeField(init)
    run = qlbm_run(field0, p, params.get("steps", 10))
    rows = [[t, j, run.quantum[t, j], run.classical[t, j], run.quantum[t, j] - run.classical[t, j]]
            for t in range(run.quantum.shape[0]) for j in range(p.M)]
    mass_drift = max(abs(r.mass_out - r.mass_in) for r in run.reports)
    summary = {"max_deviation": run.max_deviation(), "mass_drift": mass_drift, "qubits": p.qubit_count,
               "mean_collision_success": float(np.mean([r.collision_success_prob for r in run.reports]))}
    checks = [_check("classical-match", run.max_deviation(), 1e-8), _check("mass", mass_drift, 1e-10)] if oracle else []
    return RunResult(summary, ["step", "site", "phi_quantum", "phi_classical", "delta"], rows, checks,
                     {"reports": run.report_records()})


RUNNERS = {
    "encode": run_encode,
    "qae": run_qae,
    "integrate": run_integrate,
    "copies": run_copies,
    "qade": run_qade,
    "qrk": run_qrk,
    "qlbm": run_qlbm,
}


# ---------------------------------------------------------------------------
# Top-level drivers


def execute(config: dict, seed: int | None = None, oracle_check: bool | None = None) -> tuple[dict, str]:
    """Validate and run one config; returns ``(report, csv_text)``."""
    config = validate_config(copy.deepcopy(config))
    seed = config.get("seed", 0) if seed is None else seed
    oracle = config.get("oracle_check", True) if oracle_check is None else oracle_check
    result = RUNNERS[config["algorithm"]](config["params"], seed, oracle)
    report = {
        "artifact_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "algorithm": config["algorithm"],
        "seed": seed,
        "oracle_check": oracle,
        "config": config,
        "summary": result.summary,
        "checks": result.checks,
        "details": result.details,
    }
    return jsonable(report), to_csv(result.header, result.rows)


def _write_outputs(out_dir: Path, report: dict, csv_text: str, started: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out_dir / "data.csv").write_text(csv_text)
    meta = {
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.perf_counter() - started,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "norm_ledger_idealized": True,
    }
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def run(config: dict, out_dir, seed: int | None = None, oracle_check: bool | None = None) -> dict:
    """Execute and write ``report.json``, ``data.csv`` and ``metadata.json``.

    Raises :class:`CheckFailure` after writing if any oracle check failed.
    """
    started = time.perf_counter()
    report, csv_text = execute(config, seed, oracle_check)
    _write_outputs(Path(out_dir), report, csv_text, started)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    if failed:
        raise CheckFailure(f"oracle checks failed: {', '.join(failed)}")
    return report


def _set_param(params: dict, key: str, value) -> dict:
    out = copy.deepcopy(params)
    out[key] = value
    return out


def _sweep_point(args):
    config, seed, oracle = args
    report, _ = execute(config, seed, oracle)
    return report


def sweep(config: dict, out_dir, seed: int | None = None, oracle_check: bool | None = None,
          jobs: int = 1) -> list[dict]:
    """Run every point of ``config['grid']`` (cartesian product, keys sorted) and aggregate to one CSV."""
    config = validate_config(copy.deepcopy(config), sweep=True)
    started = time.perf_counter()
    grid = config.get("grid", {})
    keys = sorted(grid)
    points = list(itertools.product(*(grid[k] for k in keys))) if keys and all(grid[k] for k in keys) else []
    cap = config.get("cap", DEFAULT_SWEEP_CAP)
    if len(points) > cap:
        raise ConfigError(f"grid has {len(points)} points, cap is {cap}")
    seed = config.get("seed", 0) if seed is None else seed
    oracle = config.get("oracle_check", True) if oracle_check is None else oracle_check
    base = {k: v for k, v in config.items() if k not in ("grid", "cap")}
    jobs_args = []
    for point in points:
        params = base["params"]
        for k, v in zip(keys, point):
            params = _set_param(params, k, v)
        jobs_args.append(({**base, "params": params}, seed, oracle))
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_sweep_point, jobs_args))
    else:
        reports = [_sweep_point(a) for a in jobs_args]
    metric_keys = sorted({k for r in reports for k, v in r["summary"].items()
                          if not isinstance(v, (list, dict)) and k not in keys})
    header = ["point"] + keys + ["seed"] + metric_keys + ["checks_passed"]
    rows = []
    for i, (point, rep) in enumerate(zip(points, reports)):
        rows.append([i, *point, seed, *(rep["summary"].get(k, "") for k in metric_keys),
                     all(c["passed"] for c in rep["checks"])])
    aggregate = jsonable({
        "artifact_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "algorithm": config["algorithm"],
        "seed": seed,
        "config": config,
        "points": [dict(zip(keys, p)) for p in points],
        "summaries": [r["summary"] for r in reports],
        "checks": [c for r in reports for c in r["checks"]],
    })
    _write_outputs(Path(out_dir), aggregate, to_csv(header, rows), started)
    failed = [c["name"] for c in aggregate["checks"] if not c["passed"]]
    if failed:
        raise CheckFailure(f"oracle checks failed in sweep: {', '.join(sorted(set(failed)))}")
    return reports
