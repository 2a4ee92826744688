"""Continuous-variable CHSH tests on the two-mode squeezed state."""

from .correlators import (
    KERNEL_SIGN,
    BellSettings,
    ClosedForm,
    ConvergenceError,
    CorrelationResult,
    FockTruncation,
    Quadrature,
    ScanResult,
    bell_complex_scan,
    bell_real_scan,
    bell_value,
    closed_form_E,
    complex_settings,
    correlation,
    correlation_detail,
    max_violation,
    oracle_compare,
    real_settings,
    unsharp_threshold,
)
from .epr_state import EprState, PhasePoint, from_mean_photon, from_squeezing
from .lhv_phase_space import MonteCarlo, lhv_chsh_grid, lhv_chsh_scan, lhv_correlation
from .observables import (
    Boundedness,
    ObservableSpec,
    Profile,
    WignerSymbol,
    classify_boundedness,
    make_custom,
    make_parity,
    make_parity_inversion,
    make_sign,
    make_unsharp,
    wigner_symbol,
)

__version__ = "0.1.0"
