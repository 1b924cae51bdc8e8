"""Degrees of freedom, eigenvalue spectra and discarded-power accounting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import CorrelationModel, correlation_matrix
from .errors import NumericalError, UsageError
from .geometry import Aperture

__all__ = [
    "EigenReport",
    "dof_limit",
    "evanescent_loss",
    "eigen_spectrum",
    "eigen_report",
    "dense_spectrum",
    "discarded_power",
    "significant_mode_count",
    "eigenvalue_count_gap",
]

log = logging.getLogger(__name__)

ZERO_RATIO = 1e-12
CROSS_CHECK_MAX_N = 512


@dataclass(frozen=True, eq=False)
class EigenReport:
    """Descending eigenvalues with a power split at ``keep``.

    ``retained`` and ``discarded`` are fractions of the total power held by
    the first ``keep`` eigenvalues and by the rest.
    """

    eigenvalues: np.ndarray
    total: float
    keep: int
    retained: float
    discarded: float

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.eigenvalues))

    def cumulative_fraction(self) -> np.ndarray:
        return np.cumsum(self.eigenvalues) / self.total

    def with_cutoff(self, keep: int) -> EigenReport:
        return eigen_report(self.eigenvalues, keep)


def eigen_report(eigenvalues, keep: int | None = None) -> EigenReport:
    """Build an :class:`EigenReport` from raw eigenvalues.

    Values are sorted descending, slightly negative round-off is clamped to
    zero and anything below ``1e-12`` times the largest eigenvalue is set to
    exactly zero.
    """
    ev = np.sort(np.asarray(eigenvalues, dtype=float).ravel())[::-1]
    if ev.size == 0:
        raise UsageError("no eigenvalues")
    if ev[-1] < -1e-10 * max(abs(ev[0]), 1.0):
        raise NumericalError(f"matrix is not positive semidefinite (min eigenvalue {ev[-1]:.3g})")
    if ev[-1] < -ZERO_RATIO * max(abs(ev[0]), 1.0):
        log.warning("clamping negative eigenvalues down to %.3g", ev[-1])
    ev = np.maximum(ev, 0.0)
    ev[ev < ZERO_RATIO * ev[0]] = 0.0
    keep = ev.size if keep is None else int(keep)
    if not 0 <= keep <= ev.size:
        raise UsageError(f"keep={keep} outside [0, {ev.size}]")
    total = math.fsum(ev)
    retained = math.fsum(ev[:keep]) / total
    return EigenReport(ev, total, keep, retained, 1.0 - retained)


def eigen_spectrum(model: CorrelationModel, cross_check: bool | None = None) -> EigenReport:
    """Eigenvalues of ``Phi diag(sigma**2) Phi^H`` without forming the matrix.

    These are the mode variances (merged over aliased modes) padded with
    zeros up to ``N``. For ``N <= 512`` the result is checked against a dense
    Hermitian eigensolver unless ``cross_check=False``.
    """
    N = model.aperture.N
    ev = model.mode_eigenvalues()
    ev = np.concatenate([ev, np.zeros(max(N - ev.size, 0))])[:N]
    report = eigen_report(ev)
    if cross_check is None:
        cross_check = N <= CROSS_CHECK_MAX_N
    if cross_check:
        dense = eigen_report(np.linalg.eigvalsh(correlation_matrix(model)))
        err = np.max(np.abs(dense.eigenvalues - report.eigenvalues))
        if err > 1e-8 * max(report.eigenvalues[0], 1.0):
            raise NumericalError(f"fast eigenvalues disagree with dense solver by {err:.3g}")
    return report


def dense_spectrum(R: np.ndarray) -> EigenReport:
    """Spectrum of an explicit Hermitian correlation matrix."""
    return eigen_report(np.linalg.eigvalsh(R))


def discarded_power(report: EigenReport, keep: int) -> float:
    """Fraction of total power in eigenvalues beyond the first ``keep``."""
    return report.with_cutoff(keep).discarded


def significant_mode_count(report: EigenReport, fraction: float = 0.95) -> int:
    """Smallest number of leading eigenvalues holding ``fraction`` of the power."""
    if not 0 < fraction <= 1:
        raise UsageError("fraction must lie in (0, 1]")
    cum = report.cumulative_fraction()
    return int(min(np.searchsorted(cum, fraction - 1e-12) + 1, cum.size))


def dof_limit(geometry: str, wavelength: float, extent: float) -> float:
    """Asymptotic spatial DoF of a linear (``2/lambda`` per metre) or planar
    (``pi/lambda**2`` per square metre) aperture of the given extent."""
    if not (wavelength > 0 and extent > 0):
        raise UsageError("wavelength and extent must be positive")
    if geometry == "linear":
        return 2.0 / wavelength * extent
    if geometry == "planar":
        return math.pi / wavelength**2 * extent
    raise UsageError(f"geometry must be 'linear' or 'planar', got {geometry!r}")


def evanescent_loss() -> float:
    """DoF fraction lost by ignoring evanescent waves: ``1 - pi/4``."""
    return 1.0 - math.pi / 4.0


def eigenvalue_count_gap(aperture: Aperture) -> float:
    """Ratio ``N/n`` of i.i.d. to propagating eigenvalue counts per unit area,
    ``1 / (pi * spacing_x * spacing_y)``."""
    return 1.0 / (math.pi * aperture.spacing_x * aperture.spacing_y)
