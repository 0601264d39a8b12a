"""Command-line front end.

Every run reads one JSON config document.  Angles in the config and in all
outputs are degrees; frequencies are GHz unless a column name says kHz.

    nvorient spectrum --config run.json
    nvorient scan --config run.json --seed 3 --out scan.csv
    nvorient track --config run.json --format json

Exit codes: 0 success, 1 runtime or estimation failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analytic_spectra import f_pm_general
from .errors import NVOrientError
from .geometry import (CrystalAlignment, NVOrientation, RotationStep, field_to_nv, misorientation,
                       rotate_orientation, surface_lab_basis)
from .microscopics import DefectGeometry, susceptibility_report
from .protocols.estimation import OrientationEstimate, estimate_x, estimate_z
from .protocols.noise import NoiseModel
from .protocols.scans import transverse_scan
from .protocols.sensitivity import sensitivity_table
from .protocols.tracking import track_sequence
from .spin_model import FieldConfig, SpinParams, exact_spectrum

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
SCAN_SCHEMA = "scan/1"
TRACK_SCHEMA = "track/1"
SENSITIVITY_SCHEMA = "sensitivity/1"
SCAN_COLUMNS = ("angle_deg", "delta_f_minus_khz", "signal", "sigma")
TRACK_COLUMNS = ("index", "timestamp_s", "status", "axis_x", "axis_y", "axis_z", "angle_deg", "error_deg",
                 "orientation_error_deg")
COMMANDS = ("spectrum", "scan", "estimate", "track", "sensitivity", "microscopics")
DEFAULT_FORMAT = {"spectrum": "json", "scan": "csv", "estimate": "json", "track": "csv",
                  "sensitivity": "json", "microscopics": "json"}


class ConfigError(Exception):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


Vector = tuple[float, float, float]


class ParamsBlock(_Block):
    D: float = Field(2.87, gt=0)
    g_e: float = Field(2.003, gt=0)
    k_z: float = Field(3.5, gt=0)
    k_perp: float = Field(170.0, gt=0)
    gamma_e: Optional[float] = Field(None, gt=0)


class NoiseBlock(_Block):
    count_rate: float = Field(200.0, gt=0)
    contrast: float = Field(0.30, gt=0, le=1)
    C_factor: float = Field(12.0, gt=0)
    T_c: float = Field(1.0, gt=0)
    rng_seed: int = 0


class AxesBlock(_Block):
    x_axis: Vector
    z_axis: Vector


class CrystalBlock(_Block):
    family: int = Field(ge=0, le=3)
    minor_index: int = Field(0, ge=0, le=2)
    surface_normal: Optional[Vector] = None


Orientation = Union[AxesBlock, CrystalBlock]


class FieldsBlock(_Block):
    B: Vector = (0.0, 0.0, 0.0)
    E: Vector = (0.0, 0.0, 0.0)
    frame: Literal["nv", "lab"] = "nv"


class ScanBlock(_Block):
    mode: Literal["phiB", "phiE", "gamma", "delta"] = "gamma"
    B_perp: float = Field(100.0, ge=0)
    E_perp: float = Field(1.0, ge=0)
    fixed_angle: float = 0.0
    n_points: int = Field(72, ge=1, le=100_000)
    tau: Optional[float] = Field(None, gt=0)
    shots_per_point: int = Field(100_000, ge=1)


class EstimateBlock(_Block):
    prior: Optional[Orientation] = None
    B: float = Field(100.0, gt=0)
    E_perp: float = Field(1.0, gt=0)
    mode: Literal["sq", "dq"] = "dq"
    time: float = Field(1.0, gt=0)
    readings_z: Optional[tuple[float, float]] = None
    readings_x: Optional[tuple[float, float]] = None

    @model_validator(mode="after")
    def _readings_together(self):
        if (self.readings_z is None) != (self.readings_x is None):
            raise ValueError("readings_z and readings_x must be given together")
        return self


class StepBlock(_Block):
    axis: Vector
    angle: float = Field(ge=0, le=20)


class TrackBlock(_Block):
    steps: Optional[list[StepBlock]] = None
    axis: Optional[Vector] = None
    angle: Optional[float] = Field(None, ge=0, le=20)
    n_steps: Optional[int] = Field(None, ge=1, le=100_000)
    budget_per_step: float = Field(1.0, gt=0)
    z_time: Optional[float] = Field(None, gt=0)
    B: float = Field(100.0, gt=0)
    E_perp: float = Field(1.0, gt=0)
    mode: Literal["sq", "dq"] = "dq"

    @model_validator(mode="after")
    def _one_trajectory(self):
        uniform = (self.axis, self.angle, self.n_steps)
        if self.steps is None and any(v is None for v in uniform):
            raise ValueError("give either 'steps' or all of 'axis', 'angle', 'n_steps'")
        if self.steps is not None and any(v is not None for v in uniform):
            raise ValueError("'steps' cannot be combined with 'axis'/'angle'/'n_steps'")
        return self


class SensitivityBlock(_Block):
    B: float = Field(100.0, gt=0)
    E_perp: float = Field(1.0, gt=0)
    theta_working_point: float = 60.0
    gamma_working_point: float = 30.0


class MicroscopicsBlock(_Block):
    l_C: float = Field(0.31, gt=0)
    l_N: float = Field(0.27, gt=0)
    L_C: float = Field(1.65, gt=0)
    L_N: float = Field(1.68, gt=0)
    lambda_mix: float = 1.0
    E_o: float = Field(1.945, gt=0)
    g_e: float = Field(2.003, gt=0)
    convention: Literal["standard", "inverted"] = "standard"
    x_carbon: int = Field(0, ge=0, le=2)


class RunConfig(_Block):
    params: ParamsBlock = ParamsBlock()
    noise: Optional[NoiseBlock] = None
    orientation_truth: Optional[Orientation] = None
    fields: FieldsBlock = FieldsBlock()
    scan: ScanBlock = ScanBlock()
    estimate: EstimateBlock = EstimateBlock()
    track: Optional[TrackBlock] = None
    sensitivity: SensitivityBlock = SensitivityBlock()
    microscopics: MicroscopicsBlock = MicroscopicsBlock()


def load_config(path: str | Path | None, seed: int | None = None) -> RunConfig:
    """Parse and validate a config file (None gives all defaults)."""
    if path is None:
        raw = {}
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("; ".join(lines)) from exc
    if seed is not None and cfg.noise is not None:
        cfg = cfg.model_copy(update={"noise": cfg.noise.model_copy(update={"rng_seed": seed})})
    return cfg


def _orientation(block: Orientation) -> NVOrientation:
    if isinstance(block, AxesBlock):
        return NVOrientation(np.asarray(block.x_axis), np.asarray(block.z_axis))
    basis = None if block.surface_normal is None else surface_lab_basis(block.surface_normal)
    return CrystalAlignment(block.family, block.minor_index).orientation(basis)


class _Objects:
    """Domain objects built (and validated) before any computation."""

    def __init__(self, cfg: RunConfig, command: str):
        try:
            self.params = SpinParams(**cfg.params.model_dump())
            self.noise = None if cfg.noise is None else NoiseModel(**cfg.noise.model_dump())
            self.truth = None if cfg.orientation_truth is None else _orientation(cfg.orientation_truth)
            if command == "spectrum":
                self.fields = FieldConfig(cfg.fields.B, cfg.fields.E, cfg.fields.frame)
                if self.fields.frame == "lab" and self.truth is None:
                    raise ConfigError("lab-frame fields need orientation_truth")
            if command in ("scan", "track") and self.truth is None:
                raise ConfigError(f"{command} needs orientation_truth")
            if command == "estimate":
                est = cfg.estimate
                prior_block = est.prior
                if prior_block is None and self.truth is None:
                    raise ConfigError("estimate needs estimate.prior or orientation_truth")
                self.prior = self.truth if prior_block is None else _orientation(prior_block)
                if est.readings_z is None and self.truth is None:
                    raise ConfigError("estimate needs orientation_truth or recorded readings")
            if command == "track":
                if cfg.track is None:
                    raise ConfigError("track: missing 'track' block")
                self.trajectory = _trajectory(self.truth, cfg.track)
            if command == "microscopics":
                m = cfg.microscopics.model_dump()
                self.convention, self.x_carbon = m.pop("convention"), m.pop("x_carbon")
                self.geometry = DefectGeometry(**m)
        except ConfigError:
            raise
        except (ValueError, NVOrientError) as exc:
            raise ConfigError(str(exc)) from exc


def _trajectory(start: NVOrientation, block: TrackBlock) -> list[NVOrientation]:
    if block.steps is not None:
        steps = [(s.axis, s.angle) for s in block.steps]
    else:
        steps = [(block.axis, block.angle)] * block.n_steps
    out = [start]
    for axis, angle in steps:
        out.append(rotate_orientation(out[-1], RotationStep(np.asarray(axis), math.radians(angle))))
    return out


def _num(value: float) -> str:
    return format(value, ".10g")


def _csv(schema: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _vec(v) -> list[float]:
    return [float(c) for c in v]


def cmd_spectrum(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    fields = objs.fields
    if fields.frame == "lab":
        fields = field_to_nv(fields, objs.truth)
    exact = exact_spectrum(objs.params, fields)
    analytic = f_pm_general(objs.params, fields)
    out = {
        "exact": {"f_minus": exact.f_minus, "f_plus": exact.f_plus},
        "analytic": {"f_minus": analytic.f_minus, "f_plus": analytic.f_plus},
        "difference": {"f_minus": analytic.f_minus - exact.f_minus, "f_plus": analytic.f_plus - exact.f_plus},
        "warnings": list(exact.warnings) + list(analytic.warnings),
    }
    if fmt == "csv":
        rows = [(k, out[k]["f_minus"], out[k]["f_plus"]) for k in ("exact", "analytic", "difference")]
        return _csv("spectrum/1", ("method", "f_minus_ghz", "f_plus_ghz"), rows)
    return _json(out)


def cmd_scan(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    s = cfg.scan
    points = transverse_scan(objs.params, objs.truth, s.B_perp, s.E_perp, s.mode, math.radians(s.fixed_angle),
                             s.n_points, objs.noise, tau=s.tau, shots_per_point=s.shots_per_point)
    rows = [(math.degrees(p.angle), p.delta_f_minus * 1e6, p.signal, p.sigma) for p in points]
    if fmt == "json":
        return _json({"schema": SCAN_SCHEMA, "rows": [dict(zip(SCAN_COLUMNS, r)) for r in rows]})
    return _csv(SCAN_SCHEMA, SCAN_COLUMNS, rows)


def _estimate_dict(est: OrientationEstimate, truth: NVOrientation | None) -> dict:
    o = est.orientation
    out = {
        "x_axis": _vec(o.x_axis),
        "z_axis": _vec(o.z_axis),
        "sigma_theta_deg": math.degrees(est.sigma_theta),
        "sigma_gamma_deg": math.degrees(est.sigma_gamma),
        "timestamp_s": est.timestamp,
        "n_sequences": est.n_sequences,
        "method": est.method,
    }
    if truth is not None:
        out["z_error_deg"] = math.degrees(math.acos(min(1.0, float(o.z_axis @ truth.z_axis))))
        out["orientation_error_deg"] = math.degrees(misorientation(o, truth))
    return out


def cmd_estimate(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    e = cfg.estimate
    noise = objs.noise
    prior = OrientationEstimate(objs.prior, 0.0, 0.0, 0.0, 0)
    z_est = estimate_z(objs.params, prior, e.B, noise, truth=objs.truth, readings=e.readings_z, time=e.time,
                       mode=e.mode, rng=None if noise is None else noise.rng(0, 0))
    est = estimate_x(objs.params, z_est.orientation.z_axis, z_est.orientation.x_axis, e.B, e.E_perp, noise,
                     truth=objs.truth, readings=e.readings_x, time=e.time, mode=e.mode,
                     sigma_theta=z_est.sigma_theta, rng=None if noise is None else noise.rng(0, 1))
    out = _estimate_dict(est, objs.truth)
    if fmt == "csv":
        return _csv("estimate/1", tuple(k for k in out), [[_flat(v) for v in out.values()]])
    return _json(out)


def _flat(v):
    return " ".join(_num(c) for c in v) if isinstance(v, list) else v


def cmd_track(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    t = cfg.track
    records = track_sequence(objs.params, objs.trajectory, t.budget_per_step, objs.noise, B=t.B,
                             E_perp=t.E_perp, mode=t.mode, z_time=t.z_time)
    rows = []
    for r in records:
        axis = (math.nan,) * 3 if r.step is None else tuple(float(c) for c in r.step.axis)
        angle = math.nan if r.step is None else math.degrees(r.step.angle)
        rows.append((r.index, float(r.timestamp), r.status, *axis, angle, math.degrees(r.step_error),
                     math.degrees(r.orientation_error)))
    if fmt == "json":
        data = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in zip(TRACK_COLUMNS, row)}
                for row in rows]
        return _json({"schema": TRACK_SCHEMA, "rows": data})
    return _csv(TRACK_SCHEMA, TRACK_COLUMNS, rows)


def cmd_sensitivity(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    s = cfg.sensitivity
    table = sensitivity_table(objs.params, objs.noise or NoiseModel(), B=s.B, E_perp=s.E_perp,
                              theta_working_point=math.radians(s.theta_working_point),
                              gamma_working_point=math.radians(s.gamma_working_point))
    if fmt == "csv":
        return _csv(SENSITIVITY_SCHEMA, ("quantity", "value"), list(table.items()))
    return _json(table)


def cmd_microscopics(cfg: RunConfig, objs: _Objects, fmt: str) -> str:
    report = susceptibility_report(objs.geometry, objs.convention, objs.x_carbon).to_dict()
    if fmt == "csv":
        return _csv("microscopics/1", tuple(report), [list(report.values())])
    return _json(report)


HANDLERS = {
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "estimate": cmd_estimate,
    "track": cmd_track,
    "sensitivity": cmd_sensitivity,
    "microscopics": cmd_microscopics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nvorient", description="NV centre orientation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, help="override noise.rng_seed (no effect on noiseless runs)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), help=f"default: {DEFAULT_FORMAT[name]}")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        objs = _Objects(cfg, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or DEFAULT_FORMAT[args.command]
    try:
        text = HANDLERS[args.command](cfg, objs, fmt)
    except (NVOrientError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
