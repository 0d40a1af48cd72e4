"""Command-line front end.

    adiabatic-transfer run --config exp.json --out results/
    adiabatic-transfer clone-sweep --config configs/fig5.json --out results/ --threads 4
    adiabatic-transfer validate --config exp.json

Exit status is 0 on success, 2 for invalid configs or setups, 3 when the
numerics refuse the request. Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import cloning, network, oracle, pulse, scatter
from .config import (
    DEFAULT_RING_CARRIER,
    KINDS,
    ExperimentConfig,
    _set_path,
    load_config,
    parse_config,
    sweep_points,
)
from .emitter import check_impedance_matching, efficiency
from .errors import NumericalError, SetupError, SimulationError
from .qstate import bell_vector, fidelity, matrix_to_json, reference_state

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_FAILED = 0, 2, 3, 1


def fmt(x) -> str:
    return format(float(x), ".15g")


def clean(obj):
    """Round floats to 15 significant digits and make the object JSON-ready."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def _flatten(record: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            flat[name] = value
    return flat


# --------------------------------------------------------------------------
# experiments; each returns (record, trajectories)


def _outcome_record(o: network.HeraldedOutcome, refs: dict) -> dict:
    rec = {"detector": o.detector, "probability": o.probability}
    if o.conditional_state is not None:
        rec["conditional_state"] = matrix_to_json(o.conditional_state)
        rec["fidelity"] = {k: fidelity(o.conditional_state, v) for k, v in refs.items()}
    return rec


def _clone_record(res: cloning.CloneResult) -> dict:
    return {
        "p_branch": res.p_branch,
        "F_a": res.F_a,
        "F_b": res.F_b,
        "F_one_shot": res.F_one_shot,
        "F_one_shot_b": res.F_one_shot_b,
        "rho_a": {k: matrix_to_json(v) for k, v in res.rho_a.items()},
        "rho_b": {k: matrix_to_json(v) for k, v in res.rho_b.items()},
        **res.details,
    }


def run_scatter(cfg: ExperimentConfig):
    f = cfg.envelope()
    r = cfg.emitter.rates()
    res = scatter.scatter(f, r, cfg.geometry.L, cfg.geometry.c, cfg.method, cfg.order, cfg.integrator_order)
    match = check_impedance_matching(r, cfg.tolerances.matching)
    rec = {
        "method": res.trajectory.method,
        "p_transfer": res.p_transfer,
        "p_res": res.p_res,
        "efficiency": efficiency(r),
        "impedance_matched": match.matched,
        "impedance_mismatch": match.mismatch,
        "norm_squared": pulse.norm_squared(f),
    }
    if pulse.norm_squared(f) > 0:
        rec["bandwidth_ratio"] = pulse.bandwidth(f) / r.gamma_total
        try:
            m = pulse.moments(f, r.gamma_total, cfg.order)
        except NumericalError:
            m = None
        if m is not None:
            rec["moments"] = {"s": m.s, "r": m.r, "truncation_order": m.truncation_order}
            rec["p_transfer_adiabatic"] = efficiency(r) * m.s
            if abs(pulse.norm_squared(f) - 1) <= 1e-6:
                rec["overlap"] = scatter.overlap_with_input(f, res)
                rec["overlap_predicted"] = 1 - 2 * r.gamma_w_es / r.gamma_total * (m.s + 1j * m.r)
    traj = {
        "psi_e": (res.trajectory.grid, res.trajectory.psi_e),
        "out_w_es": (res.out_w_es.grid, res.out_w_es.samples),
        "out_w_ef": (res.out_w_ef.grid, res.out_w_ef.samples),
    }
    return rec, traj


def _trace_trajectories(trace: dict) -> dict:
    out = {}
    for (name, cfg), psi in trace.items():
        if isinstance(psi, pulse.PulseEnvelope):
            label = "psi_" + name + "_" + "".join(cfg).replace("*", "x")
            out[label] = (psi.grid, psi.samples)
    return out


def run_linear(cfg: ExperimentConfig):
    g = cfg.geometry
    setup = network.LinearSetup(
        cfg.emitter_a.rates(), cfg.emitter_b.rates(), g.L_ab, g.L_bd, cfg.envelope(), g.c,
        cfg.detector_efficiency,
    )
    trace: dict = {}
    o = network.simulate_linear_entanglement(setup, cfg.solver, trace=trace)
    target = np.array([0, 1, 2, 0]) / math.sqrt(5)
    rec = _outcome_record(o, {"target": target, "psi_plus": bell_vector("psi_plus")})
    rec["details"] = o.details
    return rec, _trace_trajectories(trace)


def _ring(cfg: ExperimentConfig, f) -> network.RingSetup:
    g = cfg.geometry
    a, b = cfg.emitter_a.rates(), cfg.emitter_b.rates()
    carrier = f.carrier if f is not None else (
        cfg.pulse.carrier if cfg.pulse and cfg.pulse.carrier is not None else DEFAULT_RING_CARRIER
    )
    if g.L2 is not None:
        return network.RingSetup(a, b, g.L1, g.L2, f, g.c, carrier, cfg.detector_efficiency)
    phase = math.pi if g.phase is None else g.phase
    return network.RingSetup.with_phase(
        a, b, f, phase, g.L1, carrier, g.c, detector_efficiency=cfg.detector_efficiency
    )


def run_ring(cfg: ExperimentConfig):
    setup = _ring(cfg, cfg.envelope())
    trace: dict = {}
    outcomes = network.simulate_ring_entanglement(setup, cfg.solver, trace=trace)
    refs = {"psi_plus": bell_vector("psi_plus"), "psi_minus": bell_vector("psi_minus")}
    rec = {
        "outcomes": [_outcome_record(o, refs) for o in outcomes],
        "R": sum(o.probability for o in outcomes),
        "interference_phase": setup.interference_phase,
        "details": outcomes[0].details,
    }
    return rec, _trace_trajectories(trace)


def run_clone_symmetric(cfg: ExperimentConfig):
    f = cfg.envelope() if cfg.solver == "pulse" else None
    res = cloning.simulate_symmetric_cloning(_ring(cfg, f), cfg.qubit.qubit(), cfg.solver)
    return _clone_record(res), {}


def _asymmetric_setup(cfg: ExperimentConfig) -> cloning.AsymmetricSetup:
    f = cfg.envelope() if cfg.pulse is not None and cfg.solver == "pulse" else None
    g = cfg.geometry
    L2 = g.L1 if g.L2 is None else g.L2
    carrier = f.carrier if f is not None else 0.0
    return cloning.AsymmetricSetup(
        f, cfg.gamma_scale(), g.splitter_phase, g.L1, L2, carrier, g.c, cfg.detector_efficiency
    )


def run_clone_asymmetric(cfg: ExperimentConfig):
    q = cfg.qubit.qubit()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = cloning.simulate_asymmetric_cloning(_asymmetric_setup(cfg), q, cfg.eta_bar_a, cfg.eta_bar_b)
    rec = _clone_record(res)
    rec["reference_state"] = reference_state(q).tolist()
    return rec, {}


def run_oracle_check(cfg: ExperimentConfig):
    f = cfg.envelope()
    r = cfg.emitter.rates()
    dt = cfg.oracle_dt if cfg.oracle_dt is not None else 1e-3 / r.gamma_total
    res = scatter.scatter(f, r, order=cfg.integrator_order)
    orc = oracle.evolve_collision(f, r, dt)
    overlaps = {}
    for name, ref in (("W_es", res.out_w_es), ("W_ef", res.out_w_ef)):
        env = oracle.emitted_envelope(orc, name)
        ref = pulse.resample(ref, orc.grid)
        n = math.sqrt(pulse.norm_squared(ref) * pulse.norm_squared(env))
        overlaps[name] = abs(pulse.inner_product(ref, env)) / n if n > 0 else None
    diffs = {k: orc.p_res[k] - res.p_res[k] for k in res.p_res}
    worst = max(abs(orc.p_transfer - res.p_transfer), *(abs(v) for v in diffs.values()))
    rec = {
        "dt": dt,
        "p_transfer": {"oracle": orc.p_transfer, "scatter": res.p_transfer},
        "p_res": {"oracle": orc.p_res, "scatter": res.p_res},
        "max_difference": worst,
        "envelope_overlap": overlaps,
        "max_norm_deviation": orc.max_norm_deviation,
        "passed": worst < cfg.tolerances.oracle,
    }
    traj = {"psi_e_oracle": (orc.grid, orc.psi_e), "psi_e": (res.trajectory.grid, res.trajectory.psi_e)}
    return rec, traj


RUNNERS = {
    "scatter": run_scatter,
    "entangle-linear": run_linear,
    "entangle-ring": run_ring,
    "clone-symmetric": run_clone_symmetric,
    "clone-asymmetric": run_clone_asymmetric,
    "oracle-check": run_oracle_check,
}


def _run_point(raw: dict) -> tuple[dict, dict]:
    cfg = parse_config(raw)
    return RUNNERS[cfg.kind](cfg)


def _map(fn, items, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _clone_sweep(cfg: ExperimentConfig, threads: int) -> tuple[list, list]:
    axes = {a.parameter: a.points() for a in cfg.sweep}
    unknown = set(axes) - {"eta_bar_a", "eta_bar_b"}
    if unknown:
        raise SetupError(f"clone-sweep only sweeps eta_bar_a and eta_bar_b, got {sorted(unknown)}")
    grid = [float(v) for v in np.linspace(0.0, 1.0, 21)]
    a_vals = axes.get("eta_bar_a", [cfg.eta_bar_a] if cfg.eta_bar_a is not None else grid)
    b_vals = axes.get("eta_bar_b", [cfg.eta_bar_b] if cfg.eta_bar_b is not None else grid)
    setup = cloning.AsymmetricSetup(gamma_total=cfg.gamma_scale())
    points = sorted((a, b) for a in a_vals for b in b_vals)

    def work(pt):
        return pt, cloning.bloch_average_fidelity(pt, cfg.sampler, cfg.n_samples, True, setup)

    results = _map(work, points, threads)
    header = ["eta_bar_a", "eta_bar_b", "F_a", "F_b", "R"]
    rows = [[a, b, *vals] for (a, b), vals in results]
    return header, rows


# --------------------------------------------------------------------------
# output


def write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (int, float, np.floating)) else v for v in row])


def write_trajectory_csv(path: Path, grid: pulse.TimeGrid, samples: np.ndarray) -> None:
    """Columns t, Re, Im."""
    t = grid.times
    rows = ([t[i], samples[i].real, samples[i].imag] for i in range(grid.n))
    write_csv(path, ["t", "Re", "Im"], rows)


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(clean(obj), indent=2) + "\n")


def execute(raw: dict, cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> dict:
    """Run an experiment (with its sweep) and write the result files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    json_name = cfg.output.json_name or f"{cfg.kind}.json"
    csv_name = cfg.output.csv or f"{cfg.kind}.csv"
    if cfg.kind == "clone-sweep":
        header, rows = _clone_sweep(cfg, threads)
        write_csv(out_dir / csv_name, header, rows)
        written.append(csv_name)
        summary = {"kind": cfg.kind, "points": len(rows), "sampler": cfg.sampler}
    elif cfg.sweep:
        points = sweep_points(raw, cfg)
        results = _map(lambda item: _run_point(item[1]), points, threads)
        names = [a.parameter for a in cfg.sweep]
        records = [dict(zip(names, params), result=rec) for (params, _), (rec, _) in zip(points, results)]
        flat = [_flatten(clean(r["result"])) for r in records]
        columns = sorted({k for f in flat for k in f})
        rows = [list(params) + [f.get(c, "") for c in columns] for (params, _), f in zip(points, flat)]
        write_csv(out_dir / csv_name, names + columns, rows)
        write_json(out_dir / json_name, {"kind": cfg.kind, "points": records})
        written += [csv_name, json_name]
        summary = {"kind": cfg.kind, "points": len(records)}
    else:
        rec, traj = RUNNERS[cfg.kind](cfg)
        write_json(out_dir / json_name, {"kind": cfg.kind, **rec})
        written.append(json_name)
        if cfg.output.trajectories:
            for name, (grid, samples) in traj.items():
                fname = f"{cfg.kind}_{name}.csv"
                write_trajectory_csv(out_dir / fname, grid, samples)
                written.append(fname)
        summary = {"kind": cfg.kind}
    summary["files"] = written
    return summary


# --------------------------------------------------------------------------
# validation


def _physics_checks(cfg: ExperimentConfig) -> list:
    checks = []

    def check(name, fn):
        try:
            msg = fn()
            checks.append({"check": name, "ok": True, "detail": msg})
        except SimulationError as exc:
            checks.append({
                "check": name, "ok": False, "error": type(exc).__name__, "detail": str(exc),
                "exit_code": EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_INVALID,
            })
            return False
        return True

    f_holder = {}

    def build():
        f_holder["f"] = cfg.envelope()
        for name in ("emitter", "emitter_a", "emitter_b"):
            spec = getattr(cfg, name)
            if spec is not None:
                spec.rates()
        return None

    if not check("build", build):
        return checks
    f = f_holder["f"]
    gamma = cfg.gamma_scale()
    if f is not None and pulse.norm_squared(f) > 0:
        def resolution():
            scale = max(gamma, pulse.bandwidth(f))
            if f.grid.dt * scale >= scatter.STEP_LIMIT:
                raise scatter.GridTooCoarse(f"dt * max(Gamma, bandwidth) = {f.grid.dt * scale:.3g}")
            return {"bandwidth_ratio": pulse.bandwidth(f) / gamma}

        check("grid_resolution", resolution)
        if cfg.method == "adiabatic" or cfg.kind in ("clone-symmetric",):
            check("adiabatic_series", lambda: {"ratio": pulse.check_adiabatic(f, gamma)})
    if cfg.kind == "entangle-linear":
        setup = network.LinearSetup(
            cfg.emitter_a.rates(), cfg.emitter_b.rates(), cfg.geometry.L_ab, cfg.geometry.L_bd, f
        )

        def separation():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return {"separation": network.check_separation(setup)}

        check("separation", separation)
    if cfg.kind in ("entangle-ring", "clone-symmetric"):
        def interference():
            network.require_interference(_ring(cfg, f), "destructive")

        check("interference", interference)
    if cfg.kind == "oracle-check":
        dt = cfg.oracle_dt if cfg.oracle_dt is not None else 1e-3 / gamma

        def step():
            if gamma * dt >= oracle.STEP_LIMIT:
                raise oracle.StepTooLarge(f"Gamma * dt = {gamma * dt:.3g}")

        check("oracle_step", step)
    return checks


def validate(config_path) -> dict:
    """Schema and physics-precondition report without running anything."""
    try:
        raw, cfg = load_config(config_path)
    except SetupError as exc:
        return {"valid": False, "exit_code": EXIT_INVALID,
                "checks": [{"check": "schema", "ok": False, "detail": str(exc)}]}
    checks = [{"check": "schema", "ok": True, "detail": None}]
    points = [raw]
    for axis in cfg.sweep:
        for value in {axis.points()[0], axis.points()[-1]}:
            probe = json.loads(json.dumps(raw))
            probe.pop("sweep", None)
            _set_path(probe, axis.parameter, value)
            points.append(probe)
    for point in points:
        try:
            checks += _physics_checks(parse_config(point))
        except SetupError as exc:
            checks.append({"check": "sweep", "ok": False, "detail": str(exc), "exit_code": EXIT_INVALID})
    codes = [c.get("exit_code", EXIT_OK) for c in checks if not c["ok"]]
    code = EXIT_OK if not codes else (EXIT_INVALID if EXIT_INVALID in codes else EXIT_NUMERICAL)
    return {"valid": code == EXIT_OK, "kind": cfg.kind, "exit_code": code, "checks": checks}


# --------------------------------------------------------------------------


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("SIM_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _error(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)
    return code


def run(config_path, out_dir=".", threads: int | None = None, expected_kind: str | None = None) -> int:
    try:
        raw, cfg = load_config(config_path)
        if expected_kind is not None and cfg.kind != expected_kind:
            raise SetupError(f"config kind {cfg.kind!r} does not match command {expected_kind!r}")
        summary = execute(raw, cfg, Path(out_dir), _threads(threads))
    except NumericalError as exc:
        return _error(exc, EXIT_NUMERICAL)
    except SetupError as exc:
        return _error(exc, EXIT_INVALID)
    except SimulationError as exc:
        return _error(exc, EXIT_FAILED)
    print(json.dumps(clean(summary)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adiabatic-transfer", description=__doc__.split("\n")[0])
    parser.add_argument("command", nargs="?", default="run", choices=("run", "validate") + KINDS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default=".", help="directory for result files")
    parser.add_argument("--threads", type=int, default=None, help="worker threads for sweeps (default: $SIM_THREADS or 1)")
    parser.add_argument("--validate-only", action="store_true", help="check the config and stop")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.validate_only or args.command == "validate":
        report = validate(args.config)
        print(json.dumps(clean(report), indent=2))
        return report["exit_code"]
    kind = None if args.command == "run" else args.command
    return run(args.config, args.out, args.threads, kind)


if __name__ == "__main__":
    sys.exit(main())
