"""Velocity fields, divergence operators, hydrostatic reconstruction, initial data.

A horizontal velocity ``v`` is passed around as a pair ``(v1, v2)`` of even
`ScalarField`s; the full velocity ``u = (v1, v2, w)`` as a `VelocityField`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .spectral import (
    GridSpec,
    ScalarField,
    SpectralGrid,
    build_grid,
    symmetrize_array,
)

TOL_DIV = 1e-10
SNAPSHOT_MAGIC = b"HYDROLIM1"


class BarotropicDivergence(ValueError):
    """The vertical mean of v is not horizontally divergence free."""


@dataclass(eq=False)
class VelocityField:
    v1: ScalarField
    v2: ScalarField
    w: ScalarField

    @property
    def grid(self) -> SpectralGrid:
        return self.v1.grid

    @property
    def horizontal(self) -> tuple[ScalarField, ScalarField]:
        return (self.v1, self.v2)

    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return (self.v1, self.v2, self.w)

    def stack(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components()])

    @classmethod
    def from_stack(cls, grid: SpectralGrid, arr: np.ndarray) -> "VelocityField":
        return cls(
            ScalarField(grid, arr[0], "even"),
            ScalarField(grid, arr[1], "even"),
            ScalarField(grid, arr[2], "odd"),
        )

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "VelocityField":
        return cls.from_stack(grid, grid.zeros(3))

    def __add__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.v1 + other.v1, self.v2 + other.v2, self.w + other.w)

    def __sub__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.v1 - other.v1, self.v2 - other.v2, self.w - other.w)

    def __mul__(self, c: float) -> "VelocityField":
        return VelocityField(self.v1 * c, self.v2 * c, self.w * c)

    __rmul__ = __mul__

    def parity_defect(self) -> float:
        return max(c.parity_defect() for c in self.components())


@dataclass(eq=False)
class HorizontalField:
    """Fields without z dependence (only k3 = 0 coefficients may be nonzero)."""

    components: tuple[ScalarField, ...]

    def __post_init__(self):
        for c in self.components:
            if np.any(c.coeffs[..., 1:] != 0):
                raise ValueError("HorizontalField components must not depend on z")

    def __getitem__(self, i: int) -> ScalarField:
        return self.components[i]

    def __len__(self) -> int:
        return len(self.components)


def _pair(v) -> tuple[ScalarField, ScalarField]:
    if isinstance(v, VelocityField):
        return v.horizontal
    v1, v2 = v
    return v1, v2


# -- array-level kernels (shared with the time steppers) ---------------------


def hdiv_array(grid: SpectralGrid, v: np.ndarray) -> np.ndarray:
    return 1j * (grid.dx * v[0] + grid.dy * v[1])


def barotropic_project_array(grid: SpectralGrid, v: np.ndarray) -> np.ndarray:
    """2D Leray projection of the k3 = 0 plane of a horizontal pair.

    The unpaired z-Nyquist plane is zeroed as well: an even cosine there has
    no odd antiderivative on the grid, so it can never belong to an
    admissible (v, w).
    """
    out = v.copy()
    out[..., grid.spec.nz // 2] = 0.0
    dx = grid.dx[:, :, 0]
    dy = grid.dy[:, :, 0]
    kh2 = dx**2 + dy**2
    inv = np.divide(1.0, kh2, out=np.zeros_like(kh2), where=kh2 > 0)
    a, b = v[0, :, :, 0], v[1, :, :, 0]
    s = (dx * a + dy * b) * inv
    out[0, :, :, 0] = a - dx * s
    out[1, :, :, 0] = b - dy * s
    return out


def hydrostatic_w_array(grid: SpectralGrid, v: np.ndarray, tol: Optional[float] = TOL_DIV) -> np.ndarray:
    d = hdiv_array(grid, v)
    inv = np.divide(1.0, grid.dz, out=np.zeros_like(grid.dz), where=grid.dz != 0)
    if tol is None:
        return 1j * d * inv
    scale = np.max(np.abs(grid.dx * v[0]) + np.abs(grid.dy * v[1]), initial=0.0)
    mean_div = np.max(np.abs(d[..., 0]), initial=0.0)
    if mean_div > tol * scale:
        raise BarotropicDivergence(
            f"vertical mean of div_H v is {mean_div:.3e} (relative {mean_div / scale:.3e} > {tol:g})"
        )
    # cos(pi k z) -> -sin(pi k z)/(pi k); constants cancel pairwise for even input
    return 1j * d * inv


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the real part of the field (axes are the last three)."""
    flip = coeffs
    for ax in (-3, -2, -1):
        n = coeffs.shape[ax]
        flip = np.take(flip, (-np.arange(n)) % n, axis=ax)
    return 0.5 * (coeffs + np.conj(flip))


# -- public operations -------------------------------------------------------


def divergence(u: VelocityField) -> ScalarField:
    g = u.grid
    c = 1j * (g.dx * u.v1.coeffs + g.dy * u.v2.coeffs + g.dz * u.w.coeffs)
    return ScalarField(g, c, "even")


def horizontal_divergence(v) -> ScalarField:
    v1, v2 = _pair(v)
    g = v1.grid
    parity = v1.parity if v1.parity == v2.parity else None
    return ScalarField(g, hdiv_array(g, np.stack([v1.coeffs, v2.coeffs])), parity)


def vertical_mean(v) -> HorizontalField:
    """Half the integral over z in (-1, 1): keeps the k3 = 0 coefficients."""
    comps = (v,) if isinstance(v, ScalarField) else _pair(v)
    out = []
    for c in comps:
        m = np.zeros_like(c.coeffs)
        m[..., 0] = c.coeffs[..., 0]
        out.append(ScalarField(c.grid, m, "even"))
    return HorizontalField(tuple(out))


def project_barotropic(v) -> tuple[ScalarField, ScalarField]:
    v1, v2 = _pair(v)
    g = v1.grid
    p = barotropic_project_array(g, np.stack([v1.coeffs, v2.coeffs]))
    return ScalarField(g, p[0], v1.parity), ScalarField(g, p[1], v2.parity)


def hydrostatic_w(v, tol: float = TOL_DIV) -> ScalarField:
    """w(z) = -int_{-1}^z div_H v, computed as a spectral antiderivative.

    Raises `BarotropicDivergence` when the k3 = 0 part of div_H v exceeds
    ``tol`` relative to the size of the horizontal divergence terms.  A
    z-Nyquist component of div_H v has no odd antiderivative on the grid and
    is dropped.
    """
    v1, v2 = _pair(v)
    g = v1.grid
    w = hydrostatic_w_array(g, np.stack([v1.coeffs, v2.coeffs]), tol)
    return ScalarField(g, w, "odd")


def make_initial_data(
    grid: SpectralGrid,
    seed: int,
    band_limit: int,
    decay_rate: float,
    amplitude: float,
) -> VelocityField:
    """Seeded, band-limited, admissible velocity field.

    Random complex coefficients on the index box ``|k_i| <= band_limit`` are
    weighted by ``amplitude * (1 + |kappa|^2)^(-decay_rate/2)``, made real,
    even in z, barotropically solenoidal and mean free; ``w`` is the
    hydrostatic reconstruction.  The draws depend only on ``seed`` and
    ``band_limit``, so the same seed gives the same continuous field on
    every grid that resolves the band.
    """
    nx, ny, nz = grid.shape
    if band_limit < 1 or band_limit > min(nx // 3, ny // 3, nz // 3):
        raise ValueError(
            f"band_limit {band_limit} outside the dealiasing mask (max {min(nx, ny, nz) // 3})"
        )
    B = band_limit
    m = 2 * B + 1
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((2, 2, m, m, m))
    box = draws[:, 0] + 1j * draws[:, 1]
    box = np.fft.ifftshift(box, axes=(-3, -2, -1))  # centered box -> FFT order
    box = hermitian_part(box)

    idx = np.rint(np.fft.fftfreq(m) * m).astype(int)
    coeffs = grid.zeros(2)
    sel = np.ix_(idx % nx, idx % ny, idx % nz)
    coeffs[0][sel] = box[0]
    coeffs[1][sel] = box[1]

    envelope = amplitude * (1.0 + grid.ksq) ** (-0.5 * decay_rate)
    coeffs *= envelope
    coeffs = symmetrize_array(grid, coeffs, "even")
    coeffs = barotropic_project_array(grid, coeffs)
    coeffs[:, 0, 0, 0] = 0.0
    w = hydrostatic_w_array(grid, coeffs)
    return VelocityField.from_stack(grid, np.concatenate([coeffs, w[None]]))


# -- snapshot files ----------------------------------------------------------


def write_snapshot(path, components: VelocityField | Sequence[ScalarField]) -> None:
    comps = components.components() if isinstance(components, VelocityField) else tuple(components)
    if not comps:
        raise ValueError("snapshot needs at least one component")
    nx, ny, nz = comps[0].grid.shape
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IIII", nx, ny, nz, len(comps)))
        for c in comps:
            fh.write(np.ascontiguousarray(c.coeffs, dtype="<c16").tobytes())


def read_snapshot(path, grid: SpectralGrid | None = None) -> tuple[SpectralGrid, np.ndarray]:
    """Returns the grid and a (ncomp, nx, ny, nz) complex array."""
    data = Path(path).read_bytes()
    head = len(SNAPSHOT_MAGIC)
    if data[:head] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a HYDROLIM1 snapshot")
    nx, ny, nz, ncomp = struct.unpack_from("<IIII", data, head)
    if grid is None:
        grid = build_grid(GridSpec(nx, ny, nz))
    elif grid.shape != (nx, ny, nz):
        raise ValueError(f"{path}: snapshot grid {(nx, ny, nz)} != {grid.shape}")
    body = data[head + 16:]
    expected = ncomp * nx * ny * nz * 16
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype="<c16").reshape(ncomp, nx, ny, nz).astype(complex)
    return grid, arr


def read_velocity(path, grid: SpectralGrid | None = None) -> VelocityField:
    grid, arr = read_snapshot(path, grid)
    if arr.shape[0] != 3:
        raise ValueError(f"{path}: velocity snapshot needs 3 components, found {arr.shape[0]}")
    return VelocityField.from_stack(grid, arr)
