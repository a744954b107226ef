"""Epsilon sweeps, rate fitting and report files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .dynamics import NS, PE, NonFinite, StepperConfig, Trajectory, cfl_cap, integrate
from .fields import VelocityField, make_initial_data
from .norms import NORM_TAG, lq_norm, x_eps
from .spectral import GridSpec, build_grid

log = logging.getLogger(__name__)

CSV_COLUMNS = ("eps", "x_eps", "e1_h2q", "e1_lq", "e1_dt", "wallclock_s", "status")


class ConfigError(ValueError):
    pass


class PreflightError(ConfigError):
    pass


def check_assumption_A(p: float, q: float) -> bool:
    """q > 4/3 and p >= max(q/(q-1), 2q/(3q-4))."""
    if not (p > 1 and q > 1):
        raise ValueError(f"exponents must exceed 1, got p={p}, q={q}")
    if q <= 4.0 / 3.0:
        return False
    ok = True
    if q >= 2:
        ok &= 1.0 / p + 1.0 / q <= 1.0 + 1e-15
    if q <= 2:
        ok &= 2.0 / (3.0 * p) + 4.0 / (3.0 * q) <= 1.0 + 1e-15
    return bool(ok)


@dataclass(frozen=True)
class Perturbation:
    """Initial data u0 + delta(eps) c |u0| phi/|phi| with delta = eps**power."""

    power: float
    coefficient: float = 0.1
    seed: int = 1_000_003

    def delta(self, eps: float) -> float:
        return eps**self.power


@dataclass
class SweepConfig:
    grid: GridSpec
    dt: float
    T: float
    p: float
    q: float
    eps: list
    seed: int = 0
    band_limit: int = 8
    decay_rate: float = 4.0
    amplitude: float = 350.0
    perturbation: Optional[Perturbation] = None
    sample_stride: int = 10
    output_dir: str = "sweep_out"
    allow_any_exponents: bool = False
    preflight: bool = True

    def validate(self) -> "SweepConfig":
        eps = [float(e) for e in self.eps]
        if len(eps) < 3:
            raise ConfigError("need at least three eps values for a rate fit")
        if any(e <= 0 for e in eps):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps values must be strictly decreasing")
        if not self.allow_any_exponents:
            try:
                ok = check_assumption_A(self.p, self.q)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if not ok:
                raise ConfigError(f"(p, q) = ({self.p}, {self.q}) fails check_assumption_A")
        if not self.dt > 0 or self.T < 0:
            raise ConfigError("need dt > 0 and T >= 0")
        try:
            StepperConfig(self.dt, self.T, self.sample_stride).nsteps
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"nx": self.grid.nx, "ny": self.grid.ny, "nz": self.grid.nz}
        d["eps"] = [float(e) for e in self.eps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        d = dict(d)
        try:
            g = d["grid"]
            d["grid"] = GridSpec(**g) if isinstance(g, dict) else GridSpec(*g)
            if d.get("perturbation") is not None:
                d["perturbation"] = Perturbation(**d["perturbation"])
            cfg = cls(**d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from None
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "SweepConfig":
        text = Path(path).read_text()  # OSError propagates (I/O, not a config problem)
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r2: Optional[float] = None
    degenerate: bool = False
    config: dict = field(default_factory=dict)
    config_hash: str = ""
    norm_tag: str = NORM_TAG
    preflight: Optional[dict] = None
    pe_e1: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        return cls(**d)

    def ok_rows(self) -> list:
        return [r for r in self.rows if r["status"] == "ok"]


def fit_rate(eps, xs) -> tuple[float, float, float]:
    """Least-squares line through (log eps, log X): (slope, intercept, R^2)."""
    e = np.asarray(eps, dtype=float)
    x = np.asarray(xs, dtype=float)
    if e.shape != x.shape or len(e) < 3:
        raise ValueError("need at least three (eps, X) pairs")
    if np.any(e <= 0) or np.any(~(x > 0)):
        raise ValueError("rate fit needs strictly positive eps and X values")
    le, lx = np.log(e), np.log(x)
    slope, intercept = np.polyfit(le, lx, 1)
    resid = lx - (slope * le + intercept)
    ss_tot = float(np.sum((lx - lx.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def initial_data(cfg: SweepConfig, grid=None) -> VelocityField:
    grid = grid or build_grid(cfg.grid)
    return make_initial_data(grid, cfg.seed, cfg.band_limit, cfg.decay_rate, cfg.amplitude)


def perturbed_data(cfg: SweepConfig, u0: VelocityField, eps: float) -> VelocityField:
    pert = cfg.perturbation
    if pert is None:
        return u0
    phi = make_initial_data(u0.grid, pert.seed, cfg.band_limit, cfg.decay_rate, 1.0)
    scale = pert.coefficient * pert.delta(eps) * lq_norm(u0, 2) / lq_norm(phi, 2)
    return u0 + scale * phi


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HYDROLIM_THREADS", "1")))
    except ValueError:
        return 1


Integrator = Callable[..., Trajectory]


def _ns_row(cfg: SweepConfig, u0, pe: Trajectory, eps: float, integrator: Integrator) -> dict:
    stepper = StepperConfig(cfg.dt, cfg.T, cfg.sample_stride)
    t0 = time.perf_counter()
    try:
        ns = integrator(perturbed_data(cfg, u0, eps), NS(eps), stepper)
    except NonFinite as exc:
        log.warning("eps=%g: %s", eps, exc)
        return {"eps": eps, "x_eps": None, "e1_h2q": None, "e1_lq": None, "e1_dt": None,
                "wallclock_s": time.perf_counter() - t0, "status": "nonfinite", "failed_at": exc.t}
    x = x_eps(ns, pe, eps, cfg.p, cfg.q)
    return {"eps": eps, "x_eps": x.value, "e1_h2q": x.h2q, "e1_lq": x.lq, "e1_dt": x.dt,
            "wallclock_s": time.perf_counter() - t0, "status": "ok"}


def _pilot_time_error(cfg: SweepConfig, u0, x_dt: float, integrator: Integrator) -> float:
    """Richardson estimate of the time-discretization error of X at the largest eps."""
    eps = float(cfg.eps[0])
    half = StepperConfig(cfg.dt / 2, cfg.T, 2 * cfg.sample_stride)
    pe = integrate(u0, PE(), half)
    ns = integrator(perturbed_data(cfg, u0, eps), NS(eps), half)
    x_half = x_eps(ns, pe, eps, cfg.p, cfg.q).value
    return abs(x_dt - x_half) * 4.0 / 3.0


def run_sweep(cfg: SweepConfig, integrator: Integrator = integrate) -> SweepReport:
    """Integrate PE once and NS_eps per eps from the shared u0; fit log X vs log eps."""
    cfg.validate()
    grid = build_grid(cfg.grid)
    u0 = initial_data(cfg, grid)
    cap = cfl_cap(u0)
    if cfg.dt > cap:
        raise ConfigError(f"dt = {cfg.dt:g} exceeds the advective cap {cap:g}")
    stepper = StepperConfig(cfg.dt, cfg.T, cfg.sample_stride)
    pe = integrate(u0, PE(), stepper)
    from .norms import e1_norm

    pe_e1 = e1_norm(pe, cfg.p, cfg.q).value if len(pe) > 1 else 0.0

    eps_list = [float(e) for e in cfg.eps]
    nthreads = min(thread_count(), len(eps_list))
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            rows = list(pool.map(lambda e: _ns_row(cfg, u0, pe, e, integrator), eps_list))
    else:
        rows = [_ns_row(cfg, u0, pe, e, integrator) for e in eps_list]
    del pe

    report = SweepReport(rows=rows, config=_public_config(cfg), config_hash=cfg.hash(), pe_e1=pe_e1)
    ok = report.ok_rows()
    xs = [r["x_eps"] for r in ok]
    if len(ok) >= 3 and all(x > 0 for x in xs):
        report.slope, report.intercept, report.r2 = fit_rate([r["eps"] for r in ok], xs)
    else:
        report.degenerate = True

    if cfg.preflight and rows[0]["status"] == "ok" and rows[0]["x_eps"] > 0 and cfg.T > 0:
        err = _pilot_time_error(cfg, u0, rows[0]["x_eps"], integrator)
        x_min = min(xs)
        report.preflight = {
            "time_error_estimate": err,
            "x_min": x_min,
            "ok": bool(err <= 0.1 * x_min),
        }
        if not report.preflight["ok"]:
            log.warning("time error %.3e is not an order below min X = %.3e", err, x_min)
    return report


def _public_config(cfg: SweepConfig) -> dict:
    d = cfg.to_dict()
    d.pop("output_dir")
    return d


# -- report files ------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_json(report: SweepReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_report(report: SweepReport, directory) -> tuple[Path, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = d / "report.csv", d / "report.json"
    csv_path.write_text(report_csv(report))
    json_path.write_text(report_json(report))
    return csv_path, json_path


def read_report(directory) -> SweepReport:
    d = Path(directory)
    return SweepReport.from_dict(json.loads((d / "report.json").read_text()))


def read_report_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                if k == "status":
                    row[k] = v
                else:
                    row[k] = float(v) if v != "" else None
            rows.append(row)
    return rows


def strip_wallclock(d):
    """Copy of a report dict without wallclock fields (for determinism checks)."""
    if isinstance(d, dict):
        return {k: strip_wallclock(v) for k, v in d.items() if "wallclock" not in k}
    if isinstance(d, list):
        return [strip_wallclock(v) for v in d]
    return d


def default_acceptance_config(**overrides) -> SweepConfig:
    base = dict(
        grid=GridSpec(32, 32, 32), dt=1e-3, T=0.25, p=2.0, q=2.0,
        eps=[0.2, 0.1, 0.05, 0.025], seed=0, band_limit=8, decay_rate=4.0,
        amplitude=350.0, sample_stride=10,
    )
    base.update(overrides)
    return SweepConfig(**base).validate()
