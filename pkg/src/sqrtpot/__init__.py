"""Exact radial solutions, spectra and phase shifts for V(r) = -alpha / sqrt(r).

Units are hbar = 2m = 1. The radial equation maps onto the biconfluent
Heun equation; bound levels are zeros of the connection coefficient ``K2``
and phase shifts are ``-arg K2`` plus a logarithmic term. A direct Numerov
integrator provides independent reference values.
"""

from .errors import SqrtPotError, NumericalError
from .heun import (
    ConnectionPair,
    HeunParams,
    SeriesResult,
    connection_by_matching,
    eval_Bplus,
    eval_Hplus,
    eval_N,
    eval_second_local,
    k2_integral,
)
from .numerics import (
    ErrorEstimate,
    adaptive_quadrature,
    compensated_sum,
    find_root_bracketed,
    ln_gamma,
    pochhammer,
)
from .oracle import (
    IntegrationGrid,
    OracleResult,
    extract_phase_shift,
    integrate_radial,
    shoot_bound_state,
)
from .radial import PhysicalConfig, RadialPoint, asymptotic_u_infinity, regular_u, theta
from .spectra import (
    PhaseShift,
    SpectrumEntry,
    bound_spectrum,
    bound_wavefunction,
    partial_wave_amplitude,
    phase_shift,
    regular_scattering_wavefunction,
    s_matrix,
    scattering_wavefunction,
)

__version__ = "0.1.0"
