"""Deterministic qubit-state transfer through the upper sideband.

A spectrally narrow single-rail qubit pulse sent through the transducer
arrives attenuated (or amplified) and buried in added noise. Averaged over
the Bloch sphere, the transfer fidelity depends only on the efficiency and
added noise at the pulse frequency:

    F_q = 1 - (5/3) eta N + (2/3) (sqrt(eta) - 1) + (1/6) (sqrt(eta) - 1)^2

This expansion holds near unit efficiency and small noise; outside that
regime the expression is still returned but a :class:`ValidityWarning` is
emitted.
"""

from __future__ import annotations

import math
import warnings

from ..errors import DomainError, ValidityWarning

#: Expansion-validity thresholds: |sqrt(eta) - 1| and eta*N beyond these
#: trigger a ValidityWarning.
MISMATCH_LIMIT = 0.2
NOISE_LIMIT = 0.2


def qubit_fidelity(eta_plus: float, n_plus: float) -> float:
    """Bloch-sphere-averaged qubit transfer fidelity.

    Parameters
    ----------
    eta_plus:
        Transfer efficiency at the pulse frequency (upper sideband).
    n_plus:
        Added noise at the pulse frequency, in input-referred quanta.
    """
    if not math.isfinite(eta_plus) or eta_plus < 0.0:
        raise DomainError(f"eta_plus must be finite and non-negative, got {eta_plus!r}")
    if not math.isfinite(n_plus) or n_plus < 0.0:
        raise DomainError(f"n_plus must be finite and non-negative, got {n_plus!r}")
    mismatch = math.sqrt(eta_plus) - 1.0
    noise = eta_plus * n_plus
    if abs(mismatch) > MISMATCH_LIMIT or noise > NOISE_LIMIT:
        warnings.warn(
            "qubit fidelity expansion used outside its regime "
            f"(|sqrt(eta)-1|={abs(mismatch):.3g}, eta*N={noise:.3g}); "
            "the returned value extrapolates the small-mismatch, small-noise "
            "expression",
            ValidityWarning,
            stacklevel=2,
        )
    return 1.0 - (5.0 / 3.0) * noise + (2.0 / 3.0) * mismatch + mismatch**2 / 6.0
