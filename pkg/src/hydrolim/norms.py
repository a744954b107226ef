"""Discrete space-time norms: L^q, Bessel H^{s,q}, E_0(T), E_1(T) and X_eps(T).

Spatial integrals use equal-weight quadrature on the collocation grid (cell
volume 2).  Vector fields are measured with the pointwise Euclidean norm.
The E_1 intersection norm is realized as the sum of its three components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .fields import VelocityField
from .spectral import ScalarField, SpectralGrid, ifft3

NORM_TAG = "sum(L^p H^{2,q} (I-lap), L^p L^q, L^p L^q of dt) ; trapezoid in time ; grid quadrature"


def _check_exp(name: str, v: float) -> float:
    v = float(v)
    if not 1.0 < v < np.inf:
        raise ValueError(f"exponent {name} must lie in (1, inf), got {v}")
    return v


@dataclass(frozen=True)
class NormSpec:
    p: float = 2.0
    q: float = 2.0
    s: float = 2.0

    def __post_init__(self):
        _check_exp("p", self.p)
        _check_exp("q", self.q)
        if self.s not in (0, 2):
            raise ValueError(f"only s in {{0, 2}} is supported, got {self.s}")


@dataclass(frozen=True)
class SpaceTimeNorm:
    value: float
    h2q: float
    lq: float
    dt: float

    def as_dict(self) -> dict:
        return {"value": self.value, "h2q": self.h2q, "lq": self.lq, "dt": self.dt}


def lq_norm_array(grid: SpectralGrid, coeffs: np.ndarray, q: float) -> float:
    """L^q norm of a stack of components (leading axis) given in spectral form."""
    phys = ifft3(coeffs)
    mag = np.abs(phys[0]) if phys.shape[0] == 1 else np.sqrt(np.sum(phys**2, axis=0))
    if not np.any(mag):
        return 0.0
    m = mag.max()
    return float(m * (np.sum((mag / m) ** q) * grid.dv) ** (1.0 / q))


def _stack(field) -> tuple[SpectralGrid, np.ndarray]:
    if isinstance(field, ScalarField):
        return field.grid, field.coeffs[None]
    if isinstance(field, VelocityField):
        return field.grid, field.stack()
    comps = tuple(field)
    return comps[0].grid, np.stack([c.coeffs for c in comps])


def lq_norm(field, q: float) -> float:
    grid, c = _stack(field)
    return lq_norm_array(grid, c, _check_exp("q", q))


def bessel_weight(grid: SpectralGrid, s: float) -> np.ndarray:
    if s == 0:
        return np.ones(grid.shape)
    if s == 2:
        return 1.0 + grid.ksq
    raise ValueError(f"only s in {{0, 2}} is supported, got {s}")


def bessel_norm_array(grid: SpectralGrid, coeffs: np.ndarray, s: float, q: float) -> float:
    return lq_norm_array(grid, coeffs * bessel_weight(grid, s), q)


def bessel_norm(field, s: float, q: float) -> float:
    """L^q norm of (I - lap)^{s/2} f; s = 2 is the exact (I - lap) multiplier."""
    grid, c = _stack(field)
    return bessel_norm_array(grid, c, s, _check_exp("q", q))


def parseval_l2(grid: SpectralGrid, coeffs: np.ndarray) -> float:
    """L^2 norm from coefficient sums, for cross-checking the quadrature path."""
    return float(np.sqrt(2.0 * np.sum(np.abs(coeffs) ** 2)))


def time_lp(times: Sequence[float], g: Sequence[float], p: float) -> float:
    """(int g(t)^p dt)^{1/p} by the composite trapezoid rule on g^p."""
    t = np.asarray(times, dtype=float)
    g = np.asarray(g, dtype=float)
    p = _check_exp("p", p)
    if t.shape != g.shape or t.ndim != 1:
        raise ValueError("times and samples must be matching 1D sequences")
    if len(t) < 2:
        raise ValueError("time_lp needs at least two samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.any(g < 0):
        raise ValueError("samples must be nonnegative")
    gp = g**p
    integral = float(np.sum(0.5 * (gp[1:] + gp[:-1]) * np.diff(t)))
    return integral ** (1.0 / p)


def e1_from_samples(
    grid: SpectralGrid,
    times: Sequence[float],
    us: Iterable[np.ndarray],
    dus: Iterable[np.ndarray],
    p: float,
    q: float,
) -> SpaceTimeNorm:
    h2, l, d = [], [], []
    for u, du in zip(us, dus):
        h2.append(bessel_norm_array(grid, u, 2, q))
        l.append(lq_norm_array(grid, u, q))
        d.append(lq_norm_array(grid, du, q))
    if len(times) == 1:
        return SpaceTimeNorm(0.0, 0.0, 0.0, 0.0)
    a, b, c = time_lp(times, h2, p), time_lp(times, l, p), time_lp(times, d, p)
    return SpaceTimeNorm(a + b + c, a, b, c)


def e1_norm(traj, p: float, q: float) -> SpaceTimeNorm:
    if traj.dudt is None:
        raise ValueError("E_1 norm needs stored tendencies")
    return e1_from_samples(traj.grid, traj.times, traj.u, traj.dudt, p, q)


def e0_norm(traj, p: float, q: float) -> float:
    vals = [lq_norm_array(traj.grid, u, q) for u in traj.u]
    return time_lp(traj.times, vals, p) if len(vals) > 1 else 0.0


def _scale_w(a: np.ndarray, eps: float) -> np.ndarray:
    out = a.copy()
    out[2] *= eps
    return out


def x_eps(traj_ns, traj_pe, eps: float, p: float, q: float) -> SpaceTimeNorm:
    """E_1(T) norm of (v_eps - v, eps (w_eps - w)) sampled on shared times."""
    if len(traj_ns) != len(traj_pe) or not np.allclose(traj_ns.times, traj_pe.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories must share sample times")
    if traj_ns.grid.shape != traj_pe.grid.shape:
        raise ValueError("trajectories must share the grid")
    if traj_ns.dudt is None or traj_pe.dudt is None:
        raise ValueError("trajectories need stored tendencies")
    us = (_scale_w(a - b, eps) for a, b in zip(traj_ns.u, traj_pe.u))
    dus = (_scale_w(a - b, eps) for a, b in zip(traj_ns.dudt, traj_pe.dudt))
    return e1_from_samples(traj_ns.grid, traj_ns.times, us, dus, p, q)
