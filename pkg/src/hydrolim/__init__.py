"""Hydrostatic-limit experiments: anisotropic Navier-Stokes versus the primitive equations.

Fourier pseudospectral discretization on (0,1)^2 x (-1,1) with even/odd
z-parity, an IMEX time stepper, space-time norms and an eps-sweep harness.
"""

from .dynamics import (
    NS,
    PE,
    NonFinite,
    NSState,
    PEState,
    StepperConfig,
    Trajectory,
    difference_forcing,
    integrate,
    mms_verify,
    ns_rhs,
    pe_rhs,
    read_trajectory,
    step,
    w_heat_residual,
    write_trajectory,
)
from .fields import (
    BarotropicDivergence,
    HorizontalField,
    VelocityField,
    divergence,
    horizontal_divergence,
    hydrostatic_w,
    make_initial_data,
    project_barotropic,
    read_snapshot,
    vertical_mean,
    write_snapshot,
)
from .harness import SweepConfig, SweepReport, emit_report, fit_rate, run_sweep
from .norms import NormSpec, bessel_norm, e1_norm, lq_norm, time_lp, x_eps
from .projection import div_eps, leray_eps, pe_pressure, pressure_eps
from .spectral import (
    GridError,
    GridSpec,
    ScalarField,
    SpectralGrid,
    build_grid,
    dealias,
    derivative,
    forward_transform,
    inverse_transform,
    parity_symmetrize,
)

__version__ = "0.1.0"
