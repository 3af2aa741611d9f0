"""Command-line interface.

Subcommands:

    simulate   generate a synthetic scenario and write canonical CSV streams
    adapt      convert a third-party dataset directory to canonical CSVs
    estimate   run an estimator (cipg / ekf / inekf) over sensor streams
    evaluate   score an estimated trajectory against ground truth
    compare    run several estimators on the same data, side by side

Options resolve in order: command line > --config file (``key = value``
lines, ``#`` comments) > built-in defaults.  ``--print-config`` shows the
resolved values and exits without running.

``estimate`` writes a metadata JSON next to the trajectory recording every
resolved parameter, the input provenance, a SHA-256 hash of the synchronized
epoch stream, runtime, and warmup/fallback counts.  ``--from-metadata``
replays such a file and reproduces the trajectory byte for byte (the epoch
hash is re-checked so silent input changes are caught).

Exit codes: 0 success; 1 estimation failure (divergence, numerical
breakdown, impossible alignment); 2 bad usage or configuration; 3 missing
or malformed input files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .adapters import adapt as run_adapt
from .baselines import FilterConfig, run_ekf, run_inekf
from .cascade import CascadeConfig, run_cascade
from .errors import (
    AlignmentError,
    DegenerateQuaternionError,
    DivergenceError,
    NumericalError,
    ParseError,
    SpecError,
    StreamOrderError,
    SyncGapError,
)
from .ipg import IpgParams
from .metrics import (
    MetricsConfig,
    align_trajectories,
    evaluate_trajectories,
    pair_trajectories,
    truth_from_gt,
    write_error_series,
    write_report,
)
from .preintegration import GravityModel, ImuBiases, NavState
from .sensors import dvl_body_to_nav, load_stream, synchronize
from .sim import NoiseSpec, ScenarioSpec, generate
from .trajectory import TRAJECTORY_COLUMNS, read_trajectory, write_trajectory

ESTIMATORS = ("cipg", "ekf", "inekf")


# ---------------------------------------------------------------------------
# option schema and resolution


def _parse_vec3(text: str) -> tuple:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_waypoints(text: str) -> tuple:
    pts = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if chunk:
            pts.append(_parse_vec3(chunk))
    if len(pts) < 2:
        raise ValueError(f"expected at least two 'x,y,z' waypoints separated by ';', got {text!r}")
    return tuple(pts)


_PARSERS = {
    "float": float,
    "int": int,
    "str": str,
    "vec3": _parse_vec3,
    "waypoints": _parse_waypoints,
}

# name -> (type, default, help); scenario options shared by simulate /
# estimate --scenario / compare --scenario.
SCENARIO_OPTS = {
    "scenario": ("str", "circle", "trajectory kind: stationary|line|circle|lawnmower|waypoints"),
    "duration": ("float", 100.0, "run length in seconds"),
    "speed": ("float", 0.5, "cruise speed m/s"),
    "imu_rate": ("float", 100.0, "IMU rate Hz"),
    "meas_rate": ("float", 5.0, "DVL/AHRS rate Hz"),
    "gps_rate": ("float", 2.0, "synthetic GPS rate Hz (0 disables)"),
    "circle_radius": ("float", 100.0, "circle radius m"),
    "lawnmower_leg": ("float", 40.0, "lawnmower leg length m"),
    "lawnmower_spacing": ("float", 10.0, "lawnmower track spacing m"),
    "waypoints": ("waypoints", None, "waypoint tour 'x,y,z;x,y,z;...'"),
    "initial_heading": ("float", 0.0, "initial yaw rad"),
    "dvl_frame": ("str", "nav", "frame of the generated DVL stream: nav|body"),
    "noise": ("str", "none", "noise preset: none|bluerov2"),
    "accel_density": ("float", None, "override accel noise density (m/s^2/sqrt(Hz))"),
    "gyro_density": ("float", None, "override gyro noise density (rad/s/sqrt(Hz))"),
    "dvl_std": ("float", None, "override DVL noise std (m/s)"),
    "ahrs_std": ("float", None, "override AHRS noise std (rad)"),
    "seed": ("int", 0, "RNG seed"),
}

ESTIMATOR_OPTS = {
    "estimator": ("str", "cipg", "estimator: cipg|ekf|inekf"),
    "horizon": ("int", 5, "window length N (epochs)"),
    "iterations": ("int", 3, "inner iterations d per epoch"),
    "alpha": ("float", 0.1, "preconditioner step size"),
    "delta": ("float", 1.0, "iterate step size"),
    "k0_scale": ("float", 1e-3, "initial preconditioner scale"),
    "fallback": ("str", "abort", "on divergence: abort|deadreckon"),
    "p0_scale": ("float", 0.1, "filter initial covariance scale"),
    "r_scale": ("float", 0.1, "filter measurement covariance scale"),
    "q_pos": ("float", 1e-8, "filter process noise, position"),
    "q_vel": ("float", 4e-6, "filter process noise, velocity"),
    "q_att": ("float", 1e-8, "filter process noise, attitude"),
    "accel_bias": ("vec3", (0.0, 0.0, 0.0), "accelerometer bias 'x,y,z' (m/s^2)"),
    "gyro_bias": ("vec3", (0.0, 0.0, 0.0), "gyro bias 'x,y,z' (rad/s)"),
    "gravity": ("vec3", (0.0, 0.0, 9.81), "gravity vector 'x,y,z' (m/s^2)"),
}

EVALUATE_OPTS = {
    "rpe_delta": ("float", 1.0, "RPE horizon in seconds"),
    "lever_arm": ("float", 1.0, "lever arm (m) folding attitude error into metres"),
    "n_align_fixes": ("int", 10, "samples used for yaw+translation alignment"),
}


def _add_schema(parser: argparse.ArgumentParser, schema: dict) -> None:
    for name, (typ, _default, help_text) in schema.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, type=_PARSERS[typ], default=None, help=help_text, dest=name)


def _load_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise SpecError(f"{path}:{line_no}: expected 'key = value', got {s!r}")
            key, value = s.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve_options(args, *schemas) -> dict:
    """Merge CLI values, --config file entries, and defaults into one dict."""
    merged_schema = {}
    for schema in schemas:
        merged_schema.update(schema)
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = [k for k in file_cfg if k not in merged_schema]
    if unknown:
        raise SpecError(f"config file: unknown keys {sorted(unknown)}")
    resolved = {}
    for name, (typ, default, _help) in merged_schema.items():
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            resolved[name] = cli_value
        elif name in file_cfg:
            try:
                resolved[name] = _PARSERS[typ](file_cfg[name])
            except ValueError as exc:
                raise SpecError(f"config file: bad value for {name}: {exc}") from None
        else:
            resolved[name] = default
    return resolved


def _print_config(cfg: dict) -> None:
    for key in sorted(cfg):
        print(f"{key} = {cfg[key]}")


# ---------------------------------------------------------------------------
# builders


def build_scenario(cfg: dict) -> ScenarioSpec:
    noise = NoiseSpec.preset(cfg["noise"])
    overrides = {
        k: cfg[k]
        for k in ("accel_density", "gyro_density", "dvl_std", "ahrs_std")
        if cfg.get(k) is not None
    }
    if overrides:
        from dataclasses import replace

        noise = replace(noise, **overrides)
    return ScenarioSpec(
        kind=cfg["scenario"],
        duration=cfg["duration"],
        speed=cfg["speed"],
        imu_rate=cfg["imu_rate"],
        meas_rate=cfg["meas_rate"],
        gps_rate=cfg["gps_rate"],
        circle_radius=cfg["circle_radius"],
        lawnmower_leg=cfg["lawnmower_leg"],
        lawnmower_spacing=cfg["lawnmower_spacing"],
        waypoints=cfg["waypoints"],
        initial_heading=cfg["initial_heading"],
        dvl_frame=cfg["dvl_frame"],
        noise=noise,
        biases=ImuBiases(np.asarray(cfg.get("accel_bias", (0.0, 0.0, 0.0))),
                         np.asarray(cfg.get("gyro_bias", (0.0, 0.0, 0.0)))),
        gravity=GravityModel(np.asarray(cfg.get("gravity", (0.0, 0.0, 9.81)))),
        seed=cfg["seed"],
    )


def _estimator_params(cfg: dict) -> dict:
    return {k: cfg[k] for k in ESTIMATOR_OPTS if k != "estimator"}


def build_cascade_config(cfg: dict, initial: NavState | None) -> CascadeConfig:
    return CascadeConfig(
        params=IpgParams(
            horizon=cfg["horizon"],
            iterations=cfg["iterations"],
            alpha=cfg["alpha"],
            delta=cfg["delta"],
            k0_scale=cfg["k0_scale"],
        ),
        biases=ImuBiases(np.asarray(cfg["accel_bias"]), np.asarray(cfg["gyro_bias"])),
        gravity=GravityModel(np.asarray(cfg["gravity"])),
        initial=initial,
        fallback=cfg["fallback"],
    )


def build_filter_config(cfg: dict) -> FilterConfig:
    return FilterConfig(
        p0_scale=cfg["p0_scale"],
        r_vel=cfg["r_scale"] * np.ones(3),
        r_att=cfg["r_scale"] * np.ones(3),
        q_pos=cfg["q_pos"],
        q_vel=cfg["q_vel"],
        q_att=cfg["q_att"],
        biases=ImuBiases(np.asarray(cfg["accel_bias"]), np.asarray(cfg["gyro_bias"])),
        gravity=GravityModel(np.asarray(cfg["gravity"])),
    )


def run_estimator(name: str, epochs, cfg: dict, initial: NavState | None):
    if name == "cipg":
        return run_cascade(epochs, build_cascade_config(cfg, initial))
    if name == "ekf":
        return run_ekf(epochs, build_filter_config(cfg), initial)
    if name == "inekf":
        return run_inekf(epochs, build_filter_config(cfg), initial)
    raise SpecError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")


def hash_epochs(epochs) -> str:
    """Order- and value-exact SHA-256 of a synchronized epoch stream."""
    h = hashlib.sha256()

    def put(*values):
        for v in values:
            h.update(repr(float(v)).encode())
            h.update(b",")

    for e in epochs:
        put(e.t, e.t_prev)
        for s in e.imu_burst:
            put(s.t, *s.accel, *s.gyro)
        put(*e.dvl)
        put(*e.ahrs)
        h.update(b";")
    return "sha256:" + h.hexdigest()


def _load_epoch_dir(input_dir: Path, dvl_frame: str):
    imu = load_stream(input_dir / "imu.csv", "imu")
    dvl = load_stream(input_dir / "dvl.csv", "dvl")
    ahrs = load_stream(input_dir / "ahrs.csv", "ahrs")
    if dvl_frame == "body":
        dvl = dvl_body_to_nav(dvl, ahrs)
    return synchronize(imu, dvl, ahrs)


def _initial_from_gt(input_dir: Path, epochs):
    gt_path = input_dir / "gt.csv"
    if not gt_path.exists():
        return None
    gt = load_stream(gt_path, "gt")
    if not gt or gt[0].t > epochs[0].t:
        return None
    first = gt[0]
    orientation = first.orientation if first.orientation is not None else epochs[0].ahrs
    return NavState(first.position, epochs[0].dvl, orientation)


def _load_truth(path: Path):
    """Read truth as a trajectory CSV or a gt sensor stream, whichever matches."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == ",".join(TRAJECTORY_COLUMNS):
        return read_trajectory(path), True
    return truth_from_gt(load_stream(path, "gt"))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = resolve_options(args, SCENARIO_OPTS, {k: ESTIMATOR_OPTS[k] for k in
                                                ("accel_bias", "gyro_bias", "gravity")})
    if args.print_config:
        _print_config(cfg)
        return 0
    spec = build_scenario(cfg)
    run = generate(spec)
    out_dir = Path(args.out)
    paths = run.write(out_dir)
    with open(out_dir / "scenario.json", "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(paths)} streams to {out_dir} "
          f"({len(run.imu)} imu, {len(run.dvl)} dvl, {len(run.ahrs)} ahrs samples)")
    return 0


def cmd_adapt(args) -> int:
    log = run_adapt(args.adapter, args.input, args.out)
    print(log.summary())
    return 0


def _prepare_input(args, cfg):
    """Resolve the epoch stream, initial state and provenance for estimate/compare."""
    if args.input is not None and getattr(args, "scenario", None) is not None:
        raise SpecError("--input and --scenario are mutually exclusive; pick one data source")
    if args.input is not None:
        input_dir = Path(args.input)
        if not input_dir.is_dir():
            raise FileNotFoundError(f"input directory {input_dir} not found")
        epochs = _load_epoch_dir(input_dir, cfg.get("dvl_frame", "nav"))
        initial = _initial_from_gt(input_dir, epochs)
        truth = None
        gt_path = input_dir / "gt.csv"
        if gt_path.exists():
            truth = truth_from_gt(load_stream(gt_path, "gt"))
        provenance = {"mode": "files", "dir": str(input_dir.resolve()),
                      "dvl_frame": cfg.get("dvl_frame", "nav")}
        return epochs, initial, truth, provenance
    spec = build_scenario(cfg)
    run = generate(spec)
    dvl = run.dvl
    if spec.dvl_frame == "body":
        dvl = dvl_body_to_nav(dvl, run.ahrs)
    epochs = synchronize(run.imu, dvl, run.ahrs)
    provenance = {"mode": "scenario", "scenario": spec.to_dict()}
    return epochs, run.initial_nav(), (run.truth, True), provenance


def _ensure_parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_estimate_outputs(points, out_path, meta, meta_path):
    write_trajectory(points, _ensure_parent(out_path))
    with open(_ensure_parent(meta_path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def cmd_estimate(args) -> int:
    if args.from_metadata is not None:
        return _estimate_from_metadata(args)
    cfg = resolve_options(args, SCENARIO_OPTS, ESTIMATOR_OPTS)
    if args.print_config:
        _print_config(cfg)
        return 0
    estimator = cfg["estimator"]
    if estimator not in ESTIMATORS:
        raise SpecError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    epochs, initial, _truth, provenance = _prepare_input(args, cfg)

    t0 = time.perf_counter()
    points = run_estimator(estimator, epochs, cfg, initial)
    runtime = time.perf_counter() - t0

    out_path = Path(args.out)
    meta_path = Path(args.metadata) if args.metadata else out_path.with_suffix(".meta.json")
    flags = [p.flag for p in points]
    meta = {
        "tool": "cipgnav",
        "version": __version__,
        "command": "estimate",
        "estimator": estimator,
        "params": _estimator_params(cfg),
        "input": provenance,
        "initial": None
        if initial is None
        else {
            "position": [float(v) for v in initial.position],
            "velocity": [float(v) for v in initial.velocity],
            "orientation": [float(v) for v in initial.orientation],
        },
        "epoch_hash": hash_epochs(epochs),
        "n_epochs": len(epochs),
        "counts": {
            "ok": flags.count("ok"),
            "warmup": flags.count("warmup"),
            "fallback": flags.count("fallback"),
        },
        "runtime_s": runtime,
        "output": str(out_path),
    }
    _write_estimate_outputs(points, out_path, meta, meta_path)
    print(
        f"{estimator}: {len(points)} epochs in {runtime:.2f} s "
        f"({meta['counts']['warmup']} warmup, {meta['counts']['fallback']} fallback) "
        f"-> {out_path}"
    )
    return 0


def _estimate_from_metadata(args) -> int:
    with open(args.from_metadata, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("command") != "estimate":
        raise SpecError(f"{args.from_metadata}: not an estimate metadata file")
    cfg = dict(meta["params"])
    cfg["estimator"] = meta["estimator"]
    for key in ("accel_bias", "gyro_bias", "gravity"):
        cfg[key] = tuple(cfg[key])
    provenance = meta["input"]
    if provenance["mode"] == "files":
        epochs = _load_epoch_dir(Path(provenance["dir"]), provenance.get("dvl_frame", "nav"))
    else:
        spec = ScenarioSpec.from_dict(provenance["scenario"])
        run = generate(spec)
        dvl = run.dvl
        if spec.dvl_frame == "body":
            dvl = dvl_body_to_nav(dvl, run.ahrs)
        epochs = synchronize(run.imu, dvl, run.ahrs)
    digest = hash_epochs(epochs)
    if digest != meta["epoch_hash"]:
        raise SpecError(
            "epoch stream does not match the metadata "
            f"(got {digest}, recorded {meta['epoch_hash']}); the input data changed"
        )
    initial = None
    if meta.get("initial") is not None:
        initial = NavState(
            np.asarray(meta["initial"]["position"], dtype=float),
            np.asarray(meta["initial"]["velocity"], dtype=float),
            np.asarray(meta["initial"]["orientation"], dtype=float),
        )
    t0 = time.perf_counter()
    points = run_estimator(meta["estimator"], epochs, cfg, initial)
    runtime = time.perf_counter() - t0
    out_path = Path(args.out) if args.out else Path(meta["output"])
    meta_path = Path(args.metadata) if args.metadata else out_path.with_suffix(".meta.json")
    meta = dict(meta)
    meta["runtime_s"] = runtime
    meta["output"] = str(out_path)
    _write_estimate_outputs(points, out_path, meta, meta_path)
    print(f"replayed {meta['estimator']}: {len(points)} epochs -> {out_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_options(args, EVALUATE_OPTS)
    est = read_trajectory(args.estimate)
    truth, has_orientation = _load_truth(Path(args.truth))
    mcfg = MetricsConfig(
        n_align_fixes=cfg["n_align_fixes"],
        align=args.align,
        rpe_delta=cfg["rpe_delta"],
        lever_arm=cfg["lever_arm"],
        mae_variance=args.mae_variance,
        use_orientation=has_orientation,
    )
    report = evaluate_trajectories(est, truth, mcfg)
    for key, value in report.rows():
        print(f"{key} = {value!r}")
    if args.report:
        write_report(_ensure_parent(args.report), report)
    if args.errors:
        est_used = align_trajectories(est, truth, mcfg.n_align_fixes) if args.align else est
        pair = pair_trajectories(est_used, truth)
        write_error_series(_ensure_parent(args.errors), pair, mcfg.rpe_delta)
    return 0


def cmd_compare(args) -> int:
    cfg = resolve_options(args, SCENARIO_OPTS, ESTIMATOR_OPTS, EVALUATE_OPTS)
    if args.print_config:
        _print_config(cfg)
        return 0
    names = [n.strip() for n in args.estimators.split(",") if n.strip()]
    bad = [n for n in names if n not in ESTIMATORS]
    if bad:
        raise SpecError(f"unknown estimators {bad}; expected from {ESTIMATORS}")
    epochs, initial, truth_info, _prov = _prepare_input(args, cfg)
    if truth_info is None:
        raise FileNotFoundError(
            "compare needs ground truth: add gt.csv to the input directory or use --scenario"
        )
    truth, has_orientation = truth_info
    mcfg = MetricsConfig(
        n_align_fixes=cfg["n_align_fixes"],
        rpe_delta=cfg["rpe_delta"],
        lever_arm=cfg["lever_arm"],
        use_orientation=has_orientation,
    )
    columns = {}
    runtimes = {}
    for name in names:
        t0 = time.perf_counter()
        points = run_estimator(name, epochs, cfg, initial)
        runtimes[name] = time.perf_counter() - t0
        columns[name] = evaluate_trajectories(points, truth, mcfg)

    metric_names = [key for key, _ in next(iter(columns.values())).rows()]
    width = max(len(m) for m in metric_names + ["runtime_s"]) + 2
    col_w = max(14, max(len(n) for n in names) + 2)
    lines = ["".ljust(width) + "".join(n.rjust(col_w) for n in names)]
    for metric in metric_names:
        row = metric.ljust(width)
        for name in names:
            value = dict(columns[name].rows())[metric]
            row += f"{value:.6g}".rjust(col_w)
        lines.append(row)
    row = "runtime_s".ljust(width)
    for name in names:
        row += f"{runtimes[name]:.3g}".rjust(col_w)
    lines.append(row)
    table = "\n".join(lines)
    print(table)
    if args.out:
        with open(_ensure_parent(args.out), "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cipgnav",
        description="Window-based cascade state estimation for IMU/DVL/AHRS navigation.",
    )
    parser.add_argument("--version", action="version", version=f"cipgnav {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic scenario")
    _add_schema(p_sim, SCENARIO_OPTS)
    for key in ("accel_bias", "gyro_bias", "gravity"):
        typ, _d, help_text = ESTIMATOR_OPTS[key]
        p_sim.add_argument("--" + key.replace("_", "-"), type=_PARSERS[typ], default=None,
                           help=help_text, dest=key)
    p_sim.add_argument("--config", help="key=value config file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--print-config", action="store_true", help="print resolved options and exit")
    p_sim.set_defaults(func=cmd_simulate)

    p_adapt = sub.add_parser("adapt", help="convert a dataset directory to canonical CSVs")
    p_adapt.add_argument("--adapter", required=True,
                         help="builtin adapter name or adapter JSON path")
    p_adapt.add_argument("--input", required=True, help="source dataset directory")
    p_adapt.add_argument("--out", required=True, help="output directory for canonical CSVs")
    p_adapt.set_defaults(func=cmd_adapt)

    p_est = sub.add_parser("estimate", help="run an estimator over sensor streams")
    p_est.add_argument("--input", help="directory with imu.csv, dvl.csv, ahrs.csv (and optional gt.csv)")
    _add_schema(p_est, SCENARIO_OPTS)
    _add_schema(p_est, ESTIMATOR_OPTS)
    p_est.add_argument("--config", help="key=value config file")
    p_est.add_argument("--out", default="trajectory.csv", help="output trajectory CSV")
    p_est.add_argument("--metadata", help="metadata JSON path (default: <out>.meta.json)")
    p_est.add_argument("--from-metadata", help="replay a previous run from its metadata JSON")
    p_est.add_argument("--print-config", action="store_true", help="print resolved options and exit")
    p_est.set_defaults(func=cmd_estimate)

    p_eval = sub.add_parser("evaluate", help="score an estimate against ground truth")
    p_eval.add_argument("--estimate", required=True, help="estimated trajectory CSV")
    p_eval.add_argument("--truth", required=True,
                        help="ground truth: trajectory CSV or gt.csv sensor stream")
    _add_schema(p_eval, EVALUATE_OPTS)
    p_eval.add_argument("--config", help="key=value config file")
    p_eval.add_argument("--align", action="store_true",
                        help="yaw+translation align the estimate over the first fixes")
    p_eval.add_argument("--mae-variance", action="store_true",
                        help="report variance of per-axis MAEs instead of pooled error variance")
    p_eval.add_argument("--report", help="write the metric table to this file")
    p_eval.add_argument("--errors", help="write per-sample error series CSV to this file")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cmp = sub.add_parser("compare", help="run several estimators side by side")
    p_cmp.add_argument("--input", help="directory with canonical CSVs incl. gt.csv")
    _add_schema(p_cmp, SCENARIO_OPTS)
    _add_schema(p_cmp, ESTIMATOR_OPTS)
    _add_schema(p_cmp, EVALUATE_OPTS)
    p_cmp.add_argument("--estimators", default="cipg,ekf,inekf",
                       help="comma-separated estimators to run")
    p_cmp.add_argument("--config", help="key=value config file")
    p_cmp.add_argument("--out", help="write the comparison table to this file")
    p_cmp.add_argument("--print-config", action="store_true", help="print resolved options and exit")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, AlignmentError, DegenerateQuaternionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, StreamOrderError, SyncGapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
