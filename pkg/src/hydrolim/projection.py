"""Anisotropic Helmholtz projection and pressure recovery.

With ``kappa_eps = (kx, ky, kz / eps)`` the projection acts per mode as

    u -> u - kappa_eps (kappa_eps . u) / |kappa_eps|^2

which is the Fourier form of ``Id - grad_eps lap_eps^{-1} div_eps``.  It is
the orthogonal projection for fields written in the rescaled variables
``(v, eps w)``; `oblique_leray_array` is the same map expressed on the
physical velocity ``(v, w)``, for which it enforces ``div u = 0``.
"""

from __future__ import annotations

import numpy as np

from .fields import HorizontalField, VelocityField, hdiv_array
from .spectral import ScalarField, SpectralGrid, fft3, ifft3


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps > 0 or not np.isfinite(eps):
        raise ValueError(f"aspect ratio eps must be a positive finite number, got {eps!r}")
    return eps


def eps_symbols(grid: SpectralGrid, eps: float):
    kz = grid.dz / eps
    k2 = grid.dx**2 + grid.dy**2 + kz**2
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    return grid.dx, grid.dy, kz, inv


def _project(kx, ky, kz, inv, u):
    s = (kx * u[0] + ky * u[1] + kz * u[2]) * inv
    return np.stack([u[0] - kx * s, u[1] - ky * s, u[2] - kz * s])


def leray_eps_array(grid: SpectralGrid, u: np.ndarray, eps: float) -> np.ndarray:
    kx, ky, kz, inv = eps_symbols(grid, _check_eps(eps))
    return _project(kx, ky, kz, inv, u)


def leray_eps_modes(kappa: np.ndarray, u: np.ndarray, eps: float) -> np.ndarray:
    """Per-mode projection for wavevectors ``kappa`` of shape (3, ...) and
    coefficient vectors ``u`` of the same shape; kappa = 0 is left unchanged."""
    eps = _check_eps(eps)
    kx, ky, kz = kappa[0], kappa[1], kappa[2] / eps
    k2 = kx**2 + ky**2 + kz**2
    inv = np.divide(1.0, k2, out=np.zeros_like(k2, dtype=float), where=k2 > 0)
    return _project(kx, ky, kz, inv, u)


def oblique_leray_array(grid: SpectralGrid, u: np.ndarray, eps: float) -> np.ndarray:
    """`leray_eps_array` conjugated by the scaling (v, w) -> (v, eps w)."""
    eps = _check_eps(eps)
    scaled = np.stack([u[0], u[1], eps * u[2]])
    out = leray_eps_array(grid, scaled, eps)
    out[2] /= eps
    return out


def leray_eps(u: VelocityField, eps: float) -> VelocityField:
    return VelocityField.from_stack(u.grid, leray_eps_array(u.grid, u.stack(), eps))


def div_eps(u: VelocityField, eps: float) -> ScalarField:
    eps = _check_eps(eps)
    g = u.grid
    c = 1j * (g.dx * u.v1.coeffs + g.dy * u.v2.coeffs + (g.dz / eps) * u.w.coeffs)
    return ScalarField(g, c, "even")


def pressure_eps(F: VelocityField, eps: float) -> ScalarField:
    """Mean-free P with -(lap_H + eps^-2 dz^2) P = div(f_H, f_z / eps)."""
    g = F.grid
    kx, ky, kz, inv = eps_symbols(g, _check_eps(eps))
    f = F.stack()
    P = 1j * (kx * f[0] + ky * f[1] + kz * f[2]) * inv
    P[0, 0, 0] = 0.0
    return ScalarField(g, P, "even")


def pe_pressure_from_integral(grid: SpectralGrid, n_int: np.ndarray) -> np.ndarray:
    """Solve 2 lap_H p = -div_H N for the k3 = 0 plane of a horizontal pair N."""
    dx = grid.dx[:, :, 0]
    dy = grid.dy[:, :, 0]
    kh2 = dx**2 + dy**2
    inv = np.divide(1.0, kh2, out=np.zeros_like(kh2), where=kh2 > 0)
    p = grid.zeros()
    p[:, :, 0] = 1j * (dx * n_int[0][:, :, 0] + dy * n_int[1][:, :, 0]) * inv / 2.0
    return p


def advect_array(grid: SpectralGrid, u: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Dealiased convective derivative u . grad(target) for each target component."""
    up = ifft3(u)
    sym = (grid.dx, grid.dy, grid.dz)
    grads = ifft3(np.stack([1j * s * t for t in targets for s in sym]))
    n = len(targets)
    prod = np.empty((n,) + grid.shape)
    for c in range(n):
        g3 = grads[3 * c:3 * c + 3]
        prod[c] = up[0] * g3[0] + up[1] * g3[1] + up[2] * g3[2]
    return fft3(prod) * grid.dealias_mask


def pe_pressure(u: VelocityField) -> HorizontalField:
    """Surface pressure of the primitive equations, mean free, z independent."""
    g = u.grid
    v = u.stack()[:2]
    adv = advect_array(g, u.stack(), v)
    p = pe_pressure_from_integral(g, 2.0 * adv)
    return HorizontalField((ScalarField(g, p, "even"),))


def pe_pressure_residual(u: VelocityField, p: HorizontalField) -> float:
    """max |2 lap_H p + div_H N| over modes, N the vertical integral of u . grad v."""
    g = u.grid
    adv = advect_array(g, u.stack(), u.stack()[:2])
    n_int = np.zeros_like(adv)
    n_int[..., 0] = 2.0 * adv[..., 0]
    kh2 = g.dx**2 + g.dy**2
    res = -2.0 * kh2 * p[0].coeffs + hdiv_array(g, n_int)
    return float(np.max(np.abs(res)))
