"""Fourier representation of periodic fields on (0,1)^2 x (-1,1).

Coefficients are stored in FFT order over the full (nx, ny, nz) index box and
normalized so that the zero mode holds the arithmetic mean of the samples:

    f(x, y, z) = sum_k c_k exp(i (2 pi k1 x + 2 pi k2 y + pi k3 z))

Collocation points are x_j = j/nx, y_j = j/ny and z_j = 2j/nz taken modulo 2
into [-1, 1), so the point set is mirror-symmetric about z = 0 and the
reflection z -> -z acts on coefficients as k3 -> -k3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.fft as sfft

Parity = Optional[Literal["even", "odd"]]

AXES = (-3, -2, -1)
CELL = (1.0, 1.0, 2.0)


class GridError(ValueError):
    """Invalid grid specification or grid/array mismatch."""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise GridError(f"{name} must be an even integer >= 4, got {n!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Wavenumbers, masks and mirror indices for one `GridSpec`.

    ``k1, k2, k3`` are integer mode indices in FFT order, ``kx, ky, kz`` the
    physical wavenumbers (2 pi k1, 2 pi k2, pi k3) broadcast to 3D.  The
    ``d*`` arrays are the differentiation symbols, identical to ``k*`` except
    that the unpaired Nyquist index is zeroed so derivatives stay real.
    """

    spec: GridSpec
    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)
    k3: np.ndarray = field(repr=False)
    kx: np.ndarray = field(repr=False)
    ky: np.ndarray = field(repr=False)
    kz: np.ndarray = field(repr=False)
    dx: np.ndarray = field(repr=False)
    dy: np.ndarray = field(repr=False)
    dz: np.ndarray = field(repr=False)
    ksq: np.ndarray = field(repr=False)
    dealias_mask: np.ndarray = field(repr=False)
    z_mirror: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.spec.shape

    @property
    def size(self) -> int:
        return self.spec.nx * self.spec.ny * self.spec.nz

    @property
    def h_min(self) -> float:
        return min(L / n for L, n in zip(CELL, self.shape))

    @property
    def dv(self) -> float:
        """Quadrature weight per collocation node (cell volume 2)."""
        return 2.0 / self.size

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Collocation coordinates as 3D arrays (indexing='ij')."""
        nx, ny, nz = self.shape
        x = np.arange(nx) / nx
        y = np.arange(ny) / ny
        z = 2.0 * np.fft.fftfreq(nz)
        return np.meshgrid(x, y, z, indexing="ij")

    def wavenumber(self, axis: int) -> np.ndarray:
        return (self.kx, self.ky, self.kz)[axis]

    def deriv_symbol(self, axis: int) -> np.ndarray:
        return (self.dx, self.dy, self.dz)[axis]

    def mirror(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients of f(x, y, -z)."""
        return coeffs[..., self.z_mirror]

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.shape, dtype=complex)


def _indices(n: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


def build_grid(spec: GridSpec) -> SpectralGrid:
    if not isinstance(spec, GridSpec):
        spec = GridSpec(*spec)
    i1, i2, i3 = (_indices(n) for n in spec.shape)
    k1 = i1[:, None, None]
    k2 = i2[None, :, None]
    k3 = i3[None, None, :]
    kx = 2 * np.pi * k1.astype(float)
    ky = 2 * np.pi * k2.astype(float)
    kz = np.pi * k3.astype(float)

    def nyq_zeroed(kk, idx, n):
        out = kk.copy()
        out[idx == -n // 2] = 0.0
        return out

    dx = nyq_zeroed(kx, k1, spec.nx)
    dy = nyq_zeroed(ky, k2, spec.ny)
    dz = nyq_zeroed(kz, k3, spec.nz)
    mask = (
        (np.abs(k1) <= spec.nx // 3)
        & (np.abs(k2) <= spec.ny // 3)
        & (np.abs(k3) <= spec.nz // 3)
    )
    return SpectralGrid(
        spec=spec,
        k1=k1, k2=k2, k3=k3,
        kx=kx, ky=ky, kz=kz,
        dx=dx, dy=dy, dz=dz,
        ksq=kx**2 + ky**2 + kz**2,
        dealias_mask=mask,
        z_mirror=(-np.arange(spec.nz)) % spec.nz,
    )


# -- array-level transforms (leading axes are batch axes) --------------------


def fft3(samples: np.ndarray, workers: int = 1) -> np.ndarray:
    n = np.prod(samples.shape[-3:])
    return sfft.fftn(samples, axes=AXES, workers=workers) / n


def ifft3(coeffs: np.ndarray, workers: int = 1) -> np.ndarray:
    n = np.prod(coeffs.shape[-3:])
    return sfft.ifftn(coeffs, axes=AXES, workers=workers).real * n


def symmetrize_array(grid: SpectralGrid, coeffs: np.ndarray, parity: Parity) -> np.ndarray:
    if parity is None:
        return coeffs
    m = grid.mirror(coeffs)
    return 0.5 * (coeffs + m) if parity == "even" else 0.5 * (coeffs - m)


# -- ScalarField -------------------------------------------------------------


@dataclass(eq=False)
class ScalarField:
    """Real scalar field in spectral form with a declared z-parity."""

    grid: SpectralGrid
    coeffs: np.ndarray
    parity: Parity = None

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )
        if self.parity not in (None, "even", "odd"):
            raise ValueError(f"unknown parity {self.parity!r}")

    @classmethod
    def zeros(cls, grid: SpectralGrid, parity: Parity = None) -> "ScalarField":
        return cls(grid, grid.zeros(), parity)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.coeffs.copy(), self.parity)

    def _combine_parity(self, other: "ScalarField") -> Parity:
        return self.parity if self.parity == other.parity else None

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.coeffs + other.coeffs, self._combine_parity(other))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.coeffs - other.coeffs, self._combine_parity(other))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.coeffs, self.parity)

    def __mul__(self, c: float) -> "ScalarField":
        if not np.isscalar(c) or np.iscomplexobj(c):
            raise TypeError("fields scale by real scalars only; use `product` for fields")
        return ScalarField(self.grid, self.coeffs * c, self.parity)

    __rmul__ = __mul__

    def samples(self) -> np.ndarray:
        return inverse_transform(self)

    def hermitian_defect(self) -> float:
        """max |c(-k) - conj c(k)| over the paired modes."""
        c = self.coeffs
        flipped = c[np.ix_(*[(-np.arange(n)) % n for n in c.shape])]
        defect = flipped - np.conj(c)
        # an unpaired Nyquist index pairs with itself; ignore it
        g = self.grid
        paired = (
            (g.k1 != -g.spec.nx // 2) & (g.k2 != -g.spec.ny // 2) & (g.k3 != -g.spec.nz // 2)
        )
        return float(np.max(np.abs(defect * paired), initial=0.0))

    def parity_defect(self) -> float:
        """max coefficient of the part violating the declared parity."""
        if self.parity is None:
            return 0.0
        bad = "odd" if self.parity == "even" else "even"
        return float(np.max(np.abs(symmetrize_array(self.grid, self.coeffs, bad)), initial=0.0))


def forward_transform(grid: SpectralGrid, samples: np.ndarray, parity: Parity = None) -> ScalarField:
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise GridError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(samples):
        raise TypeError("samples must be real")
    return ScalarField(grid, fft3(samples.astype(float)), parity)


def inverse_transform(f: ScalarField) -> np.ndarray:
    return ifft3(f.coeffs)


def derivative(f: ScalarField, axis: int | str) -> ScalarField:
    ax = {"x": 0, "y": 1, "z": 2}.get(axis, axis)
    if ax not in (0, 1, 2):
        raise ValueError(f"axis must be one of 0, 1, 2, 'x', 'y', 'z', got {axis!r}")
    parity = f.parity
    if ax == 2 and parity is not None:
        parity = "odd" if parity == "even" else "even"
    return ScalarField(f.grid, 1j * f.grid.deriv_symbol(ax) * f.coeffs, parity)


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, -f.grid.ksq * f.coeffs, f.parity)


def dealias(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, f.coeffs * f.grid.dealias_mask, f.parity)


def parity_symmetrize(f: ScalarField, target: Literal["even", "odd"]) -> ScalarField:
    if target not in ("even", "odd"):
        raise ValueError(f"target parity must be 'even' or 'odd', got {target!r}")
    return ScalarField(f.grid, symmetrize_array(f.grid, f.coeffs, target), target)


def product(a: ScalarField, b: ScalarField) -> ScalarField:
    """Pseudospectral product followed by 2/3-rule truncation."""
    if a.parity is None or b.parity is None:
        parity = None
    else:
        parity = "even" if a.parity == b.parity else "odd"
    c = fft3(inverse_transform(a) * inverse_transform(b))
    return ScalarField(a.grid, c * a.grid.dealias_mask, parity)
