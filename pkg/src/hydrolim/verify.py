"""Verification suite behind ``hydrolim verify``.

Each check returns a `Check` (name, ok, detail, value) so the CLI and the
test-suite can share the same code paths and thresholds.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import (
    NS,
    PE,
    NSState,
    PEState,
    ScaledMode,
    StepperConfig,
    constraint_defects,
    fit_order,
    integrate,
    mms_verify,
    step,
    w_heat_residual,
)
from .fields import VelocityField, make_initial_data
from .norms import bessel_norm_array, parseval_l2, time_lp
from .projection import leray_eps_array, leray_eps_modes, pe_pressure
from .spectral import GridSpec, ScalarField, SpectralGrid, build_grid, symmetrize_array

EPS_RANGE = (1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0)


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str
    value: Optional[float] = None


# -- projection --------------------------------------------------------------


def random_modes(n: int, seed: int = 0, kmax: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """n nonzero wavevectors (2 pi k1, 2 pi k2, pi k3) and complex vectors, shape (3, n)."""
    rng = np.random.default_rng(seed)
    k = rng.integers(-kmax, kmax + 1, size=(3, n))
    zero = np.all(k == 0, axis=0)
    k[0, zero] = 1
    kappa = np.array([2 * np.pi, 2 * np.pi, np.pi])[:, None] * k
    u = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
    return kappa, u


def projection_suite(n_modes: int = 10_000, eps_values=EPS_RANGE, seed: int = 0) -> list[Check]:
    kappa, u = random_modes(n_modes, seed)
    rng = np.random.default_rng(seed + 1)
    phi = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
    worst = dict(grad=0.0, idem=0.0, expand=0.0, div=0.0)
    for eps in eps_values:
        ke = kappa / np.array([1.0, 1.0, eps])[:, None]
        grad = 1j * ke * phi
        norm_g = np.linalg.norm(grad, axis=0)
        worst["grad"] = max(worst["grad"], float(np.max(np.linalg.norm(leray_eps_modes(kappa, grad, eps), axis=0) / norm_g)))
        pu = leray_eps_modes(kappa, u, eps)
        nu = np.linalg.norm(u, axis=0)
        worst["idem"] = max(worst["idem"], float(np.max(np.linalg.norm(leray_eps_modes(kappa, pu, eps) - pu, axis=0) / nu)))
        worst["expand"] = max(worst["expand"], float(np.max(np.linalg.norm(pu, axis=0) / nu)))
        div = np.abs(np.sum(ke * pu, axis=0)) / (np.linalg.norm(ke, axis=0) * nu)
        worst["div"] = max(worst["div"], float(np.max(div)))

    parity = 0.0
    grid = build_grid(GridSpec(16, 16, 16))
    rng = np.random.default_rng(seed + 2)
    for eps in eps_values:
        raw = rng.standard_normal((3,) + grid.shape) + 1j * rng.standard_normal((3,) + grid.shape)
        f = np.stack([symmetrize_array(grid, raw[i], p) for i, p in enumerate(("even", "even", "odd"))])
        out = leray_eps_array(grid, f, eps)
        scale = float(np.max(np.abs(f)))
        d = max(
            float(np.max(np.abs(symmetrize_array(grid, out[i], p)))) / scale
            for i, p in enumerate(("odd", "odd", "even"))
        )
        parity = max(parity, d)

    n = f"{n_modes} modes, eps in [{min(eps_values):g}, {max(eps_values):g}]"
    return [
        Check("projection: gradient modes annihilated", worst["grad"] <= 1e-14,
              f"max |P grad|/|grad| = {worst['grad']:.2e} ({n})", worst["grad"]),
        Check("projection: idempotent", worst["idem"] <= 1e-14,
              f"max |PPu - Pu|/|u| = {worst['idem']:.2e}", worst["idem"]),
        Check("projection: per-mode non-expansive", worst["expand"] <= 1.0 + 1e-15,
              f"max |Pu|/|u| = {worst['expand']:.16f}", worst["expand"]),
        Check("projection: div_eps free", worst["div"] <= 1e-12,
              f"max |k_eps . Pu|/(|k_eps||u|) = {worst['div']:.2e}", worst["div"]),
        Check("projection: parity preserved", parity <= 1e-14,
              f"max wrong-parity part / |u| = {parity:.2e}", parity),
    ]


def isotropic_leray_array(grid: SpectralGrid, u: np.ndarray, eps: float = 1.0) -> np.ndarray:
    """Reference isotropic projection built from the explicit 3x3 symbol I - k k^T/|k|^2.

    ``eps`` is accepted for signature compatibility with projector hooks and ignored.
    """
    nx, ny, nz = grid.shape
    axes = []
    for n, scale in ((nx, 2 * np.pi), (ny, 2 * np.pi), (nz, np.pi)):
        idx = np.rint(np.fft.fftfreq(n) * n)
        idx[n // 2] = 0.0  # Nyquist index, as in the differentiation symbols
        axes.append(scale * idx)
    k = np.stack(np.meshgrid(*axes, indexing="ij"))
    k2 = np.einsum("i...,i...->...", k, k)
    m = np.eye(3)[:, :, None, None, None] * np.ones(grid.shape)
    nz = k2 > 0
    m[:, :, nz] -= np.einsum("i...,j...->ij...", k[:, nz], k[:, nz]) / k2[nz]
    return np.einsum("ij...,j...->i...", m, u)


def isotropic_equivalence(grid_spec: GridSpec = GridSpec(32, 32, 32), steps: int = 100,
                          dt: float = 1e-3, seed: int = 0) -> Check:
    grid = build_grid(grid_spec)
    band = min(8, min(grid.shape) // 3)
    u0 = make_initial_data(grid, seed, band, 4.0, 350.0)
    cfg = StepperConfig(dt, steps * dt, 1)
    a = integrate(u0, NS(1.0), cfg)
    b = integrate(u0, NS(1.0, projector=isotropic_leray_array), cfg)
    err = float(np.max(np.abs(a.u - b.u)) / np.max(np.abs(a.u)))
    return Check("eps = 1 NS matches isotropic oracle", err <= 1e-12,
                 f"max relative difference over {steps} steps = {err:.2e}", err)


# -- time stepping -----------------------------------------------------------


def heat_kernel_errors(dts=(1e-3, 5e-4, 2.5e-4, 1.25e-4), T: float = 0.1,
                       grid_spec: GridSpec = GridSpec(8, 8, 8)) -> tuple[list, float]:
    """Per-mode amplitude error of pure diffusion of v1 = sin(2 pi y) cos(pi z)."""
    grid = build_grid(grid_spec)
    x, y, z = grid.coords()
    from .spectral import fft3

    phys = np.stack([np.sin(2 * np.pi * y) * np.cos(np.pi * z), 0 * x, 0 * x])
    u0 = VelocityField.from_stack(grid, fft3(phys))
    k2 = 4 * np.pi**2 + np.pi**2
    exact = math.exp(-k2 * T)
    # coefficient of the mode (k2 = 1, k3 = 1): sin(2 pi y) cos(pi z) = sum of four modes of size 1/4
    i = (0, 1, 1)
    c0 = u0.v1.coeffs[i]
    errs = []
    for dt in dts:
        tr = integrate(u0, NS(1.0, advection=False), StepperConfig(dt, T, 10**9))
        errs.append(abs(tr.u[-1][0][i] / c0 - exact))
    return errs, fit_order(dts, errs)


def heat_kernel_check() -> Check:
    errs, order = heat_kernel_errors()
    return Check("heat kernel temporal order", abs(order - 2.0) <= 0.2,
                 f"order {order:.3f}, errors {', '.join(f'{e:.2e}' for e in errs)}", order)


def mms_checks(quick: bool = False) -> list[Check]:
    out = []
    systems = [PE(), NS(0.1)] if quick else [PE(), NS(0.1), NS(1.0)]
    for system in systems:
        kw = dict(resolutions=(8, 16), spatial_T=0.02) if quick else {}
        r = mms_verify(system, **kw)
        out.append(Check(f"MMS {r.system} temporal order", abs(r.temporal_order - 2.0) <= 0.2,
                         f"order {r.temporal_order:.3f}", r.temporal_order))
        out.append(Check(f"MMS {r.system} spatial refinement", r.spatial_ratio is not None and r.spatial_ratio >= 100,
                         f"error ratio nz {r.resolutions[0]} -> {r.resolutions[-1]}: {r.spatial_ratio:.3g}",
                         r.spatial_ratio))
        out.append(Check(f"MMS {r.system} steady fixed point", r.steady_drift <= 1e-10,
                         f"relative drift {r.steady_drift:.2e}", r.steady_drift))
    return out


# -- structural invariants ---------------------------------------------------


def invariant_run(system, grid_spec: GridSpec = GridSpec(32, 32, 32), steps: int = 1000,
                  dt: float = 1e-3, seed: int = 0) -> dict:
    """Maximum relative parity / divergence defects over ``steps`` steps.

    For PE also the largest z-dependent surface-pressure coefficient, which
    is zero by representation.
    """
    grid = build_grid(grid_spec)
    band = min(8, min(grid.shape) // 3)
    u0 = make_initial_data(grid, seed, band, 4.0, 350.0)
    cfg = StepperConfig(dt, steps * dt)
    if isinstance(system, PE):
        state = PEState(u0.horizontal)
        label = 0.0
    else:
        state = NSState(u0, system.eps)
        label = system.eps
    worst = {"parity": 0.0, "divergence": 0.0, "pressure_dz": 0.0}
    for _ in range(steps):
        state = step(state, cfg)
        u = state.u
        d = constraint_defects(grid, u.stack(), label)
        worst["parity"] = max(worst["parity"], d["parity"])
        worst["divergence"] = max(worst["divergence"], d["divergence"])
        if label == 0.0:
            p = pe_pressure(u)[0].coeffs
            worst["pressure_dz"] = max(worst["pressure_dz"], float(np.max(np.abs(p[..., 1:]))))
    return worst


def invariant_checks(quick: bool = False) -> list[Check]:
    gs = GridSpec(16, 16, 16) if quick else GridSpec(32, 32, 32)
    steps = 200 if quick else 1000
    out = []
    for system, name in ((NS(0.1), "NS(eps=0.1)"), (PE(), "PE")):
        w = invariant_run(system, gs, steps)
        ok = w["parity"] < 1e-10 and w["divergence"] < 1e-10 and w["pressure_dz"] == 0.0
        out.append(Check(f"invariants {name}", ok,
                         f"{steps} steps: parity {w['parity']:.1e}, divergence {w['divergence']:.1e}, "
                         f"dz p {w['pressure_dz']:.1e}", max(w["parity"], w["divergence"])))
    return out


# -- w heat-equation residual ------------------------------------------------


def w_residual_study(dts=(0.01, 0.005), bands=(2, 5), T: float = 0.2,
                     grid_spec: GridSpec = GridSpec(16, 16, 16)) -> dict:
    """w residual on the manufactured PE solution against the MMS error level."""
    grid = build_grid(grid_spec)
    sol = ScaledMode(grid, PE())
    forcing = sol.forcing()
    out = {"dt": [], "mms_error": [], "residual_dt": [], "residual_band": []}
    last = None
    for dt in dts:
        tr = integrate(sol.initial(), PE(), StepperConfig(dt, T, 10**9), forcing=forcing)
        s = tr.sample(len(tr) - 1)
        r = w_heat_residual(s, forcing(T)[:2])
        err = float(np.sqrt(2.0 * np.sum(np.abs(tr.u[-1] - sol.exact(T)) ** 2)))
        out["dt"].append(dt)
        out["mms_error"].append(err)
        out["residual_dt"].append(r.residual)
        last = s
    for b in bands:
        out["residual_band"].append(w_heat_residual(last, forcing(T)[:2], band=b).residual)
    return out


def w_residual_checks() -> list[Check]:
    s = w_residual_study()
    below = all(r < e for r, e in zip(s["residual_dt"], s["mms_error"]))
    rd, rb = s["residual_dt"], s["residual_band"]
    return [
        Check("w residual below MMS error", below,
              f"residual {', '.join(f'{r:.2e}' for r in rd)} vs error {', '.join(f'{e:.2e}' for e in s['mms_error'])}"),
        Check("w residual decreases under dt refinement", rd[-1] < rd[0],
              f"residual {rd[0]:.3e} -> {rd[-1]:.3e}"),
        Check("w residual decreases under band-limit refinement", rb[-1] < rb[0],
              f"residual {rb[0]:.3e} -> {rb[-1]:.3e}"),
    ]


# -- norms -------------------------------------------------------------------


def norm_checks(n_fields: int = 100, seed: int = 0) -> list[Check]:
    grid = build_grid(GridSpec(8, 8, 8))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_fields):
        raw = rng.standard_normal(grid.shape)
        from .spectral import fft3

        c = fft3(raw)[None]
        direct = parseval_l2(grid, c * (1.0 + grid.ksq))
        quad = bessel_norm_array(grid, c, 2, 2.0)
        worst = max(worst, abs(quad - direct) / direct)
    t = np.linspace(0.0, 1.0, 1000)
    got = time_lp(t, np.exp(-t), 2.0)
    exact = math.sqrt((1 - math.exp(-2.0)) / 2)
    return [
        Check("bessel norm matches Parseval sums", worst <= 1e-10, f"max relative gap {worst:.2e}", worst),
        Check("time_lp exponential decay", abs(got - exact) <= 1e-5, f"|{got:.8f} - {exact:.8f}| = {abs(got - exact):.1e}",
              abs(got - exact)),
    ]


def run_all(quick: bool = False) -> list[Check]:
    checks = []
    checks += projection_suite(2_000 if quick else 10_000)
    checks += norm_checks(20 if quick else 100)
    checks.append(heat_kernel_check())
    checks.append(isotropic_equivalence(GridSpec(16, 16, 16) if quick else GridSpec(32, 32, 32),
                                        20 if quick else 100))
    checks += mms_checks(quick)
    checks += invariant_checks(quick)
    checks += w_residual_checks()
    return checks
