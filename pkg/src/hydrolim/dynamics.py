"""Time integration of the rescaled Navier-Stokes system and the primitive equations.

Both systems are advanced with the same IMEX scheme: the unit-viscosity
diffusion is treated by the trapezoid rule (an exact per-mode solve in
spectral space), the projected advection/pressure/forcing terms by two-step
Adams-Bashforth extrapolation.  The first step uses implicit Euler for the
diffusion and explicit Euler for the rest.

NS states carry the physical velocity ``(v, w)`` with ``div u = 0``; the
anisotropic projection is applied in the rescaled variables ``(v, eps w)``.
PE states carry only ``v``; ``w`` is reconstructed hydrostatically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .fields import (
    BarotropicDivergence,
    VelocityField,
    barotropic_project_array,
    hdiv_array,
    hydrostatic_w_array,
    make_initial_data,
    read_snapshot,
    write_snapshot,
)
from .projection import advect_array, leray_eps_array, pe_pressure_from_integral
from .spectral import (
    GridSpec,
    ScalarField,
    SpectralGrid,
    build_grid,
    fft3,
    ifft3,
    symmetrize_array,
)

Forcing = Callable[[float], np.ndarray]
Projector = Callable[[SpectralGrid, np.ndarray, float], np.ndarray]

PARITIES = ("even", "even", "odd")


class NonFinite(FloatingPointError):
    """A coefficient became NaN or infinite during time stepping."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"non-finite coefficients at t = {t:.6g}")


class ConstraintViolation(AssertionError):
    pass


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    T: float
    sample_stride: int = 1
    cfl_cap: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.cfl_cap is not None and self.dt > self.cfl_cap:
            raise ValueError(f"dt = {self.dt:g} exceeds the advective cap {self.cfl_cap:g}")

    @property
    def nsteps(self) -> int:
        n = self.T / self.dt
        steps = int(round(n))
        if abs(n - steps) > 1e-8 * max(1.0, n):
            raise ValueError(f"T = {self.T} is not an integer multiple of dt = {self.dt}")
        return steps


def cfl_cap(u0: VelocityField, safety: float = 0.5) -> float:
    """safety * h_min / U_max from the initial velocity."""
    phys = ifft3(u0.stack())
    umax = float(np.max(np.sqrt(np.sum(phys**2, axis=0))))
    return math.inf if umax == 0 else safety * u0.grid.h_min / umax


# -- systems -----------------------------------------------------------------


@dataclass(frozen=True)
class NS:
    """Rescaled anisotropic Navier-Stokes with aspect ratio ``eps``."""

    eps: float
    advection: bool = True
    projector: Optional[Projector] = None

    ncomp = 3

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def label(self) -> float:
        return float(self.eps)

    def project(self, grid: SpectralGrid, a: np.ndarray) -> np.ndarray:
        proj = self.projector or leray_eps_array
        eps = self.eps
        scaled = np.stack([a[0], a[1], eps * a[2]])
        out = proj(grid, scaled, eps)
        return np.stack([out[0], out[1], out[2] / eps])

    def constrain(self, grid: SpectralGrid, a: np.ndarray) -> np.ndarray:
        a = np.stack([symmetrize_array(grid, a[i], PARITIES[i]) for i in range(3)])
        return self.project(grid, a)

    def velocity(self, grid: SpectralGrid, a: np.ndarray) -> np.ndarray:
        return a

    def explicit(self, grid: SpectralGrid, a: np.ndarray, t: float, forcing: Optional[Forcing]) -> np.ndarray:
        rhs = -advect_array(grid, a, a) if self.advection else grid.zeros(3)
        if forcing is not None:
            rhs = rhs + forcing(t)
        return self.project(grid, rhs)

    def tendency_velocity(self, grid: SpectralGrid, a: np.ndarray, da: np.ndarray) -> np.ndarray:
        return da


@dataclass(frozen=True)
class PE:
    """Primitive equations; the state is the horizontal velocity only."""

    advection: bool = True

    ncomp = 2
    label = 0.0

    def constrain(self, grid: SpectralGrid, a: np.ndarray) -> np.ndarray:
        a = symmetrize_array(grid, a, "even")
        return barotropic_project_array(grid, a)

    def velocity(self, grid: SpectralGrid, a: np.ndarray) -> np.ndarray:
        return np.concatenate([a, hydrostatic_w_array(grid, a)[None]])

    def explicit(self, grid: SpectralGrid, a: np.ndarray, t: float, forcing: Optional[Forcing]) -> np.ndarray:
        if self.advection:
            u = self.velocity(grid, a)
            rhs = -advect_array(grid, u, a)
        else:
            rhs = grid.zeros(2)
        if forcing is not None:
            rhs = rhs + forcing(t)
        # surface pressure from the barotropic constraint: 2 lap_H p = div_H int (rhs)
        p = pe_pressure_from_integral(grid, -2.0 * rhs)
        rhs = rhs - np.stack([1j * grid.dx * p, 1j * grid.dy * p])
        return barotropic_project_array(grid, rhs)

    def tendency_velocity(self, grid: SpectralGrid, a: np.ndarray, da: np.ndarray) -> np.ndarray:
        # da is barotropically projected by construction
        return np.concatenate([da, hydrostatic_w_array(grid, da, tol=None)[None]])


# -- states ------------------------------------------------------------------


@dataclass(eq=False)
class NSState:
    u: VelocityField
    eps: float
    t: float = 0.0
    prev: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid


@dataclass(eq=False)
class PEState:
    v: tuple[ScalarField, ScalarField]
    t: float = 0.0
    prev: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def grid(self) -> SpectralGrid:
        return self.v[0].grid

    @property
    def w(self) -> ScalarField:
        a = np.stack([c.coeffs for c in self.v])
        return ScalarField(self.grid, hydrostatic_w_array(self.grid, a), "odd")

    @property
    def u(self) -> VelocityField:
        return VelocityField(self.v[0], self.v[1], self.w)


def _unpack(state) -> tuple[np.ndarray, object]:
    if isinstance(state, NSState):
        return state.u.stack(), NS(state.eps)
    if isinstance(state, PEState):
        return np.stack([c.coeffs for c in state.v]), PE()
    raise TypeError(f"expected NSState or PEState, got {type(state).__name__}")


def _pack(state, a: np.ndarray, t: float, prev: np.ndarray):
    g = state.grid
    if isinstance(state, NSState):
        return NSState(VelocityField.from_stack(g, a), state.eps, t, prev)
    return PEState((ScalarField(g, a[0], "even"), ScalarField(g, a[1], "even")), t, prev)


def _system_for(state, advection: bool, projector: Optional[Projector]):
    _, system = _unpack(state)
    if isinstance(system, NS):
        return NS(system.eps, advection, projector)
    return PE(advection)


def _rhs(system, grid: SpectralGrid, a: np.ndarray, t: float, forcing: Optional[Forcing]) -> np.ndarray:
    return system.explicit(grid, a, t, forcing) - grid.ksq * a


def ns_rhs(
    state: NSState,
    forcing: Optional[Forcing] = None,
    advection: bool = True,
    projector: Optional[Projector] = None,
) -> VelocityField:
    """Full tendency P_eps(-u.grad u + f) + lap u of an NS state."""
    system = NS(state.eps, advection, projector)
    a = state.u.stack()
    return VelocityField.from_stack(state.grid, _rhs(system, state.grid, a, state.t, forcing))


def pe_rhs(
    state: PEState,
    forcing: Optional[Forcing] = None,
    advection: bool = True,
) -> tuple[ScalarField, ScalarField]:
    """Tendency of v: -u.grad v + lap v - grad_H p, barotropically projected."""
    g = state.grid
    a = np.stack([c.coeffs for c in state.v])
    da = _rhs(PE(advection), g, a, state.t, forcing)
    return ScalarField(g, da[0], "even"), ScalarField(g, da[1], "even")


def _advance(system, grid, a, prev, explicit_now, dt):
    """One IMEX update given the explicit term at the current level."""
    if prev is None:
        new = (a + dt * explicit_now) / (1.0 + dt * grid.ksq)
    else:
        half = 0.5 * dt * grid.ksq
        new = ((1.0 - half) * a + dt * (1.5 * explicit_now - 0.5 * prev)) / (1.0 + half)
    return system.constrain(grid, new)


def _check_finite(a: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFinite(t)


def step(
    state,
    cfg: StepperConfig,
    forcing: Optional[Forcing] = None,
    advection: bool = True,
    projector: Optional[Projector] = None,
):
    """Advance an `NSState` or `PEState` by one time step ``cfg.dt``."""
    a, _ = _unpack(state)
    system = _system_for(state, advection, projector)
    g = state.grid
    e = system.explicit(g, a, state.t, forcing)
    new = _advance(system, g, a, state.prev, e, cfg.dt)
    t = state.t + cfg.dt
    _check_finite(new, t)
    return _pack(state, new, t, e)


# -- trajectories ------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    t: float
    u: VelocityField
    dudt: Optional[VelocityField]


@dataclass(eq=False)
class Trajectory:
    """Sampled velocities and tendencies; ``eps == 0`` marks a PE trajectory."""

    grid: SpectralGrid
    eps: float
    times: np.ndarray
    u: np.ndarray  # (S, 3, nx, ny, nz)
    dudt: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ValueError("trajectory needs at least one sample time")
        if self.times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.u.shape != (len(self.times), 3) + self.grid.shape:
            raise ValueError(f"velocity samples have shape {self.u.shape}")
        if self.dudt is not None and self.dudt.shape != self.u.shape:
            raise ValueError("tendency samples must match velocity samples")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def is_pe(self) -> bool:
        return self.eps == 0

    def sample(self, i: int) -> Sample:
        du = None if self.dudt is None else VelocityField.from_stack(self.grid, self.dudt[i])
        return Sample(float(self.times[i]), VelocityField.from_stack(self.grid, self.u[i]), du)

    def samples(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self.sample(i)

    def scaled(self, c: float) -> "Trajectory":
        du = None if self.dudt is None else c * self.dudt
        return Trajectory(self.grid, self.eps, self.times.copy(), c * self.u, du)

    def truncated(self, t_max: float) -> "Trajectory":
        n = int(np.searchsorted(self.times, t_max, side="right"))
        du = None if self.dudt is None else self.dudt[:n]
        return Trajectory(self.grid, self.eps, self.times[:n], self.u[:n], du)


def sample_indices(nsteps: int, stride: int) -> list[int]:
    idx = list(range(0, nsteps + 1, stride))
    if idx[-1] != nsteps:
        idx.append(nsteps)
    return idx


def integrate(
    u0: VelocityField,
    system,
    cfg: StepperConfig,
    forcing: Optional[Forcing] = None,
    debug: bool = False,
    tol: float = 1e-10,
) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.T`` with ``system`` an `NS` or `PE` instance.

    Samples (and full right-hand sides) are recorded every ``cfg.sample_stride``
    steps plus the final step.  With ``debug`` the parity and divergence
    constraints are checked after every step.
    """
    if isinstance(system, (int, float)):
        system = NS(float(system))
    g = u0.grid
    full = u0.stack()
    a = full if system.ncomp == 3 else full[:2]
    a = system.constrain(g, a.copy())
    nsteps = cfg.nsteps
    keep = set(sample_indices(nsteps, cfg.sample_stride))
    times, us, dus = [], [], []
    prev = None
    t = 0.0
    for n in range(nsteps + 1):
        t = n * cfg.dt
        e = system.explicit(g, a, t, forcing)
        if n in keep:
            times.append(t)
            us.append(system.velocity(g, a))
            dus.append(system.tendency_velocity(g, a, e - g.ksq * a))
        if n == nsteps:
            break
        a_new = _advance(system, g, a, prev, e, cfg.dt)
        _check_finite(a_new, t + cfg.dt)
        if debug:
            check_constraints(g, system, a_new, tol)
        prev, a = e, a_new
    return Trajectory(g, system.label, np.array(times), np.array(us), np.array(dus))


def check_constraints(grid: SpectralGrid, system, a: np.ndarray, tol: float = 1e-10) -> dict:
    u = system.velocity(grid, a)
    d = constraint_defects(grid, u, system.label)
    if d["parity"] > tol or d["divergence"] > tol:
        raise ConstraintViolation(f"constraint defects {d} exceed {tol:g}")
    return d


def constraint_defects(grid: SpectralGrid, u: np.ndarray, eps: float) -> dict:
    """Relative parity and divergence defects of a 3-component velocity array.

    For NS (``eps > 0``) the divergence is ``div_eps`` of the rescaled field
    ``(v, eps w)``, i.e. ``div u``; for PE (``eps == 0``) it is ``div_H`` of
    the vertical mean of ``v``.
    """
    scale = max(float(np.max(np.abs(u))), 1e-300)
    par = max(
        float(np.max(np.abs(symmetrize_array(grid, u[i], "odd" if PARITIES[i] == "even" else "even"))))
        for i in range(3)
    )
    if eps > 0:
        div = 1j * (grid.dx * u[0] + grid.dy * u[1] + grid.dz * u[2])
        dscale = float(np.max(np.abs(grid.dx * u[0]) + np.abs(grid.dy * u[1]) + np.abs(grid.dz * u[2])))
    else:
        div = hdiv_array(grid, u[:2])[..., 0]
        dscale = float(np.max(np.abs(grid.dx * u[0]) + np.abs(grid.dy * u[1])))
    return {
        "parity": par / scale,
        "divergence": float(np.max(np.abs(div))) / max(dscale, 1e-300),
    }


# -- trajectory manifests ----------------------------------------------------


def write_trajectory(traj: Trajectory, directory) -> Path:
    """Write per-sample snapshots and a JSON manifest; returns the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, s in enumerate(traj.samples()):
        up = f"u_{i:05d}.bin"
        write_snapshot(d / up, s.u)
        entry = {"t": s.t, "u": up}
        if s.dudt is not None:
            dp = f"dudt_{i:05d}.bin"
            write_snapshot(d / dp, s.dudt)
            entry["dudt"] = dp
        entries.append(entry)
    manifest = {
        "format": "hydrolim-trajectory",
        "grid": list(traj.grid.shape),
        "eps": traj.eps,
        "system": "pe" if traj.is_pe else "ns",
        "samples": entries,
    }
    path = d / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_trajectory(manifest_path) -> Trajectory:
    path = Path(manifest_path)
    meta = json.loads(path.read_text())
    grid = build_grid(GridSpec(*meta["grid"]))
    base = path.parent
    times, us, dus = [], [], []
    have_dudt = all("dudt" in e for e in meta["samples"])
    for e in meta["samples"]:
        times.append(float(e["t"]))
        us.append(read_snapshot(base / e["u"], grid)[1])
        if have_dudt:
            dus.append(read_snapshot(base / e["dudt"], grid)[1])
    return Trajectory(grid, float(meta["eps"]), np.array(times), np.array(us),
                      np.array(dus) if have_dudt else None)


# -- difference system diagnostics -------------------------------------------


def difference_forcing(ns: Sample, pe: Sample, eps: float):
    """Forcing terms (F_H, eps F_z) of the NS/PE difference system at one time.

    Returns a pair of even fields for F_H and an odd field for eps * F_z.
    """
    if abs(ns.t - pe.t) > 1e-12 * max(1.0, abs(ns.t)):
        raise ValueError(f"sample times differ: {ns.t} vs {pe.t}")
    if ns.u.grid.shape != pe.u.grid.shape:
        raise ValueError("samples live on different grids")
    if pe.dudt is None:
        raise ValueError("PE sample needs a stored tendency")
    g = pe.u.grid
    u = pe.u.stack()
    U = ns.u.stack() - u
    Ugrad_u = advect_array(g, U, u)       # U . grad (v, w)
    ugrad_U = advect_array(g, u, U)       # u . grad (V, W)
    Ugrad_U = advect_array(g, U, U)       # U . grad (V, W)
    ugrad_w = advect_array(g, u, u[2:3])[0]
    w = u[2]
    wt = pe.dudt.stack()[2]
    FH = -Ugrad_u[:2] - ugrad_U[:2] - Ugrad_U[:2]
    Fz = -Ugrad_u[2] - ugrad_U[2] - Ugrad_U[2] - wt - ugrad_w - g.ksq * w
    return (
        (ScalarField(g, FH[0], "even"), ScalarField(g, FH[1], "even")),
        ScalarField(g, eps * Fz, "odd"),
    )


def sine_series_of_z(grid: SpectralGrid, band: Optional[int] = None) -> np.ndarray:
    """1D coefficients (over k3) of the truncated sine series of z on (-1, 1)."""
    nz = grid.spec.nz
    band = nz // 3 if band is None else band
    k = np.rint(np.fft.fftfreq(nz) * nz).astype(int)
    c = np.zeros(nz, dtype=complex)
    for j, kk in enumerate(k):
        if kk != 0 and abs(kk) <= band:
            m = abs(kk)
            b = 2.0 * (-1) ** (m + 1) / (np.pi * m)  # z = sum b_m sin(pi m z)
            c[j] = b / (2j) * np.sign(kk)
    return c


def int_z(grid: SpectralGrid, g: np.ndarray, band: Optional[int] = None) -> np.ndarray:
    """int_z^1 g - int_{-1}^z g + z int_{-1}^1 g for an even field g.

    The non-periodic parts of the two antiderivatives and the factor z are
    expanded in the same truncated sine series of z.
    """
    s = sine_series_of_z(grid, band)[None, None, :]
    a0 = g[..., 0][..., None]                     # mean over z, per (k1, k2)
    inv = np.divide(1.0, grid.dz, out=np.zeros_like(grid.dz), where=grid.dz != 0)
    periodic = -1j * g * inv                       # sum_{k3 != 0} c e^{i pi k z}/(i pi k)
    periodic[..., 0] = 0.0
    one = np.zeros(grid.spec.nz, dtype=complex)
    one[0] = 1.0
    one = one[None, None, :]
    # int_{-1}^z g = (z + 1) a0 + periodic ; int_z^1 g = 2 a0 - int_{-1}^z g
    lower = (s + one) * a0 + periodic
    upper = 2.0 * one * a0 - lower
    return upper - lower + s * (2.0 * a0)


@dataclass(frozen=True)
class WResidual:
    residual: float
    relative: float
    z_truncation: float


def w_heat_residual(pe: Sample, forcing: Optional[np.ndarray] = None, band: Optional[int] = None) -> WResidual:
    """L2 norm of dt w - lap w - f(v, w) with f = -1/2 int_z div_H div(u (x) v).

    The sign follows from applying -int_{-1}^z div_H to the v-equation with
    w = -int_{-1}^z div_H v.  ``forcing`` is the spectral forcing of the
    v-equation, if any, and enters as f -> f + 1/2 int_z div_H F.  The L2 error of the truncated sine series
    of z on the collocation grid is reported alongside.
    """
    from .norms import lq_norm_array

    if pe.dudt is None:
        raise ValueError("PE sample needs a stored tendency")
    g = pe.u.grid
    u = pe.u.stack()
    up = ifft3(u)
    # div(u (x) v_c) = sum_a d_a (u_a v_c), dealiased products
    flux = fft3(np.stack([up[a] * up[c] for c in range(2) for a in range(3)])) * g.dealias_mask
    sym = (g.dx, g.dy, g.dz)
    divflux = np.stack([
        sum(1j * sym[a] * flux[3 * c + a] for a in range(3)) for c in range(2)
    ])
    if forcing is not None:
        divflux = divflux - forcing
    f = -0.5 * int_z(g, hdiv_array(g, divflux), band)
    wt = pe.dudt.stack()[2]
    res = wt + g.ksq * u[2] - f
    norm = lq_norm_array(g, res[None], 2.0)
    scale = lq_norm_array(g, wt[None], 2.0) + lq_norm_array(g, (g.ksq * u[2])[None], 2.0)
    nz = g.spec.nz
    zs = (np.fft.ifft(sine_series_of_z(g, band)) * nz).real
    z = 2.0 * np.fft.fftfreq(nz)
    trunc = float(np.sqrt(np.mean((zs - z) ** 2) * 2.0))
    return WResidual(norm, norm / scale if scale > 0 else 0.0, trunc)


# -- manufactured solutions --------------------------------------------------


class ScaledMode:
    """u(t) = a(t) phi for a fixed band-limited admissible phi.

    The forcing is ``a' phi - rhs(a phi)`` with the discrete right-hand side,
    so ``a(t) phi`` solves the semi-discrete system exactly and all remaining
    error is temporal.  ``steady=True`` uses a = 1.
    """

    def __init__(self, grid: SpectralGrid, system, seed: int = 7, band_limit: int = 2,
                 umax: float = 2.0, steady: bool = False):
        self.grid = grid
        self.system = system
        phi = make_initial_data(grid, seed, band_limit, 2.0, 1.0)
        phi = (umax * 0.5 * grid.h_min / cfl_cap(phi)) * phi.stack()
        self.phi = phi if system.ncomp == 3 else phi[:2]
        self.steady = steady
        sys_lin = replace(system, advection=False) if isinstance(system, NS) else PE(False)
        self._lin = _rhs(sys_lin, grid, self.phi, 0.0, None)
        self._quad = _rhs(system, grid, self.phi, 0.0, None) - self._lin

    def a(self, t: float) -> float:
        return 1.0 if self.steady else math.exp(-t) * (1.0 + 0.5 * math.sin(2 * math.pi * t))

    def da(self, t: float) -> float:
        if self.steady:
            return 0.0
        return math.exp(-t) * (-(1.0 + 0.5 * math.sin(2 * math.pi * t)) + math.pi * math.cos(2 * math.pi * t))

    def initial(self) -> VelocityField:
        return VelocityField.from_stack(self.grid, self.system.velocity(self.grid, self.a(0.0) * self.phi))

    def exact(self, t: float) -> np.ndarray:
        return self.system.velocity(self.grid, self.a(t) * self.phi)

    def forcing(self) -> Forcing:
        phi, lin, quad = self.phi, self._lin, self._quad

        def f(t: float) -> np.ndarray:
            a = self.a(t)
            return self.da(t) * phi - a * lin - a * a * quad

        return f


class BoundaryLayer:
    """Non-band-limited manufactured solution with a vertical boundary layer.

    v = a(t) (sin(2 pi y) g(z), sin(2 pi x)), w = 0, p = 0, with
    g(z) = exp(-(1 + cos(pi z)) / (pi width)^2), a Gaussian layer of the
    given width at z = +-1.  Both NS and PE are satisfied with the same
    forcing, evaluated pointwise on the collocation grid.
    """

    def __init__(self, grid: SpectralGrid, system, width: float = 0.2, amplitude: float = 2.0):
        self.grid = grid
        self.system = system
        self.c = (math.pi * width) ** 2
        self.amp = amplitude
        x, y, z = grid.coords()
        self._x, self._y, self._z = x, y, z

    def a(self, t: float) -> float:
        return self.amp * math.exp(-t) * (1.0 + 0.5 * math.sin(2 * math.pi * t))

    def da(self, t: float) -> float:
        return self.amp * math.exp(-t) * (-(1.0 + 0.5 * math.sin(2 * math.pi * t)) + math.pi * math.cos(2 * math.pi * t))

    def _profiles(self):
        x, y, z, c = self._x, self._y, self._z, self.c
        g = np.exp(-(1.0 + np.cos(np.pi * z)) / c)
        gp = g * np.pi * np.sin(np.pi * z) / c
        gpp = g * ((np.pi * np.sin(np.pi * z) / c) ** 2 + np.pi**2 * np.cos(np.pi * z) / c)
        return x, y, g, gpp

    def exact_physical(self, t: float) -> np.ndarray:
        x, y, g, _ = self._profiles()
        a = self.a(t)
        return np.stack([a * np.sin(2 * np.pi * y) * g, a * np.sin(2 * np.pi * x) + 0 * g, 0 * g])

    def exact(self, t: float) -> np.ndarray:
        return fft3(self.exact_physical(t))

    def initial(self) -> VelocityField:
        return VelocityField.from_stack(self.grid, self.exact(0.0))

    def forcing(self) -> Forcing:
        x, y, g, gpp = self._profiles()
        s2y, s2x = np.sin(2 * np.pi * y), np.sin(2 * np.pi * x)
        c2y, c2x = np.cos(2 * np.pi * y), np.cos(2 * np.pi * x)
        k2 = (2 * np.pi) ** 2
        ncomp = self.system.ncomp

        def f(t: float) -> np.ndarray:
            a, da = self.a(t), self.da(t)
            # v1 = a s2y g, v2 = a s2x; u.grad v1 = v2 d_y v1, u.grad v2 = v1 d_x v2
            f1 = da * s2y * g - a * (-k2 * s2y * g + s2y * gpp) + a * a * s2x * 2 * np.pi * c2y * g
            f2 = da * s2x + a * k2 * s2x + a * a * s2y * g * 2 * np.pi * c2x
            comps = [f1, f2] if ncomp == 2 else [f1, f2, 0.0 * f1]
            return fft3(np.stack(comps))

        return f


@dataclass
class MMSReport:
    system: str
    dts: list
    temporal_errors: list
    temporal_order: float
    resolutions: list = field(default_factory=list)
    spatial_errors: list = field(default_factory=list)
    spatial_ratio: Optional[float] = None
    steady_drift: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _l2(grid: SpectralGrid, a: np.ndarray) -> float:
    from .norms import lq_norm_array

    return lq_norm_array(grid, a, 2.0)


def temporal_error(solution, dt: float, T: float) -> float:
    g = solution.grid
    cfg = StepperConfig(dt=dt, T=T, sample_stride=10**9)
    traj = integrate(solution.initial(), solution.system, cfg, forcing=solution.forcing())
    return _l2(g, traj.u[-1] - solution.exact(T))


def fit_order(hs: Sequence[float], errs: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)


def mms_verify(
    system,
    grid_spec: GridSpec = GridSpec(16, 16, 16),
    dts: Sequence[float] = (0.01, 0.005, 0.0025, 0.00125),
    T: float = 0.2,
    resolutions: Sequence[int] = (16, 32),
    spatial_dt: float = 5e-4,
    spatial_T: float = 0.05,
) -> MMSReport:
    """Temporal order, spectral refinement and steady fixed point for one system.

    Temporal order is fitted over ``dts`` with a band-limited decaying
    solution. The spatial study doubles ``nz`` through ``resolutions`` for
    the boundary-layer solution at fixed small dt.
    """
    grid = build_grid(grid_spec)
    sol = ScaledMode(grid, system)
    errs = [temporal_error(sol, dt, T) for dt in dts]
    order = fit_order(dts, errs)

    steady = ScaledMode(grid, system, steady=True)
    traj = integrate(steady.initial(), system, StepperConfig(dts[0], T, 10**9), forcing=steady.forcing())
    drift = _l2(grid, traj.u[-1] - steady.exact(T)) / _l2(grid, steady.exact(0.0))

    # spatial error against a run on twice the finest nz at the same dt, so
    # the (grid independent) time error cancels
    cfg = StepperConfig(spatial_dt, spatial_T, 10**9)
    finals = {}
    for nz in list(resolutions) + [2 * max(resolutions)]:
        g = build_grid(GridSpec(grid_spec.nx, grid_spec.ny, nz))
        bl = BoundaryLayer(g, system)
        tr = integrate(bl.initial(), system, cfg, forcing=bl.forcing())
        finals[nz] = (g, tr.u[-1])
    gref, uref = finals.pop(2 * max(resolutions))
    serrs = []
    for nz in resolutions:
        g, u = finals[nz]
        # compare on the coarse collocation points (z_j of the coarse grid is a subset)
        step = gref.shape[2] // nz
        diff = ifft3(u) - ifft3(uref)[..., ::step]
        serrs.append(float(np.sqrt(np.mean(np.sum(diff**2, axis=0)) * 2.0)))
    ratio = serrs[0] / serrs[-1] if len(serrs) > 1 and serrs[-1] > 0 else None
    name = "pe" if isinstance(system, PE) else f"ns(eps={system.eps:g})"
    return MMSReport(name, list(dts), errs, order, list(resolutions), serrs, ratio, drift)
