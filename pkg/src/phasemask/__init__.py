"""Phase-mask quantum random cipher: signals, encryption and error analysis."""

__version__ = "0.1.0"

from .error_analysis import (  # noqa: E402
    SystemRates,
    bob_optimal_error,
    bob_photon_count_error,
    eve_error_lower_bound,
    eve_error_quadrature,
    exponent_bound,
    regime_report,
)
from .keystream import SecretKey, derive_running_key, phase_mask_from_key  # noqa: E402
from .symplectic import ComplexUnitary, apply_encryption, unitary_to_symplectic  # noqa: E402
from .waveform import ModeGrid, PpmConfig, build_ppm_signal  # noqa: E402

__all__ = [
    "ComplexUnitary",
    "ModeGrid",
    "PpmConfig",
    "SecretKey",
    "SystemRates",
    "apply_encryption",
    "bob_optimal_error",
    "bob_photon_count_error",
    "build_ppm_signal",
    "derive_running_key",
    "eve_error_lower_bound",
    "eve_error_quadrature",
    "exponent_bound",
    "phase_mask_from_key",
    "regime_report",
    "unitary_to_symplectic",
]
