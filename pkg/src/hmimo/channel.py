"""Correlation matrices and channel realizations.

The joint spatial correlation of the separable model is ``R_t (x) R_r`` with
``R = Phi diag(sigma**2) Phi^H`` per side. Realizations are drawn in the
angular domain, where entries are independent, and mapped to the spatial
domain by the Fourier mode matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .geometry import Aperture, alias_classes, fourier_matrix
from .spectrum import ModeVariances, ScatteringSpec, disk_nodes

__all__ = [
    "CorrelationModel",
    "AngularChannel",
    "correlation_model",
    "correlation_matrix",
    "kronecker_eigenvalues",
    "trial_rng",
    "sample_angular",
    "angular_to_spatial",
    "reference_correlation",
    "quadrature_correlation",
]


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """One side of the separable correlation, kept in factored form."""

    variances: ModeVariances
    side: str = "receive"

    def __post_init__(self):
        if self.side not in ("transmit", "receive"):
            raise UsageError(f"side must be 'transmit' or 'receive', got {self.side!r}")

    @property
    def aperture(self) -> Aperture:
        return self.variances.aperture

    @property
    def phi(self) -> np.ndarray:
        return fourier_matrix(self.aperture, self.variances.mode_set)

    @property
    def sigma(self) -> np.ndarray:
        return self.variances.sigma

    @property
    def sigma_sq(self) -> np.ndarray:
        return self.variances.sigma_sq

    def mode_eigenvalues(self) -> np.ndarray:
        """Nonzero-spectrum candidates of ``R``: variances summed per alias class.

        For a semi-unitary ``Phi`` this is just ``sigma**2``. When two modes
        fall on the same DFT bin their columns coincide and their variances
        merge into one eigenvalue.
        """
        labels = alias_classes(self.variances.mode_set)
        return np.bincount(labels, weights=self.sigma_sq)


def correlation_model(variances: ModeVariances, side: str = "receive") -> CorrelationModel:
    return CorrelationModel(variances, side)


def correlation_matrix(model: CorrelationModel) -> np.ndarray:
    """Dense ``Phi diag(sigma**2) Phi^H``, symmetrized to be exactly Hermitian."""
    phi = model.phi
    R = (phi * model.sigma_sq) @ phi.conj().T
    return 0.5 * (R + R.conj().T)


def kronecker_eigenvalues(model_t: CorrelationModel, model_r: CorrelationModel) -> np.ndarray:
    """Nonzero spectrum of ``R_t (x) R_r`` from the per-side factors, descending."""
    prod = np.multiply.outer(model_t.mode_eigenvalues(), model_r.mode_eigenvalues())
    return np.sort(prod.ravel())[::-1]


@dataclass(frozen=True, eq=False)
class AngularChannel:
    """Angular-domain channel ``H_a`` of shape ``(n_r, n_t)``."""

    H_a: np.ndarray
    seed: int
    trial: int

    @property
    def shape(self):
        return self.H_a.shape


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one Monte Carlo trial.

    Keyed on ``(seed, trial)`` only, so any trial can be regenerated in
    isolation and trials may be evaluated in any order or concurrently.
    """
    if seed < 0 or trial < 0:
        raise UsageError("seed and trial must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric complex Gaussian entries with unit variance."""
    z = rng.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def sample_angular(mv_t: ModeVariances, mv_r: ModeVariances, seed: int,
                   trial: int) -> AngularChannel:
    """Draw ``H_a[i, j] = sigma_r[i] * sigma_t[j] * w[i, j]``, ``w ~ CN(0, 1)``."""
    w = standard_complex_normal(trial_rng(seed, trial), (mv_r.n, mv_t.n))
    H = mv_r.sigma[:, None] * w * mv_t.sigma[None, :]
    return AngularChannel(H, seed, trial)


def angular_to_spatial(H_a, phi_t: np.ndarray, phi_r: np.ndarray) -> np.ndarray:
    """Spatial channel ``Phi_r H_a Phi_t^H`` of shape ``(N_r, N_t)``."""
    H_a = H_a.H_a if isinstance(H_a, AngularChannel) else np.asarray(H_a)
    if H_a.ndim != 2 or phi_r.shape[1] != H_a.shape[0] or phi_t.shape[1] != H_a.shape[1]:
        raise UsageError(
            f"dimension mismatch: phi_r {phi_r.shape}, H_a {H_a.shape}, phi_t {phi_t.shape}"
        )
    return phi_r @ H_a @ phi_t.conj().T


def reference_correlation(aperture: Aperture, spec: ScatteringSpec | None = None,
                          oversample: float = 1.0) -> np.ndarray:
    """Spatial correlation of the continuous plane-wave spectrum, trace ``N``.

    ``R[p, q]`` is the spectral density's Fourier transform evaluated at the
    element offset ``p - q``. This is the exact correlation the Fourier-series
    model approximates; unlike ``Phi diag(sigma**2) Phi^H`` it has full rank
    with a tail of small eigenvalues beyond the mode count. The isotropic
    case has the closed form ``sinc(2 * |p - q| / lambda)``; other spectra
    are integrated numerically.
    """
    spec = spec or ScatteringSpec()
    if spec.kind == "isotropic" or spec.kappa == 0.0:
        pos = aperture.positions()
        d = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1))
        return np.sinc(2.0 * d).astype(complex)
    return quadrature_correlation(aperture, spec, oversample)


def quadrature_correlation(aperture: Aperture, spec: ScatteringSpec,
                           oversample: float = 1.0, chunk: int = 4096) -> np.ndarray:
    """Numerical version of :func:`reference_correlation` for any spectrum.

    The polar node grid grows with the aperture diagonal so that the phase
    ``exp(2j*pi*k.d)`` is resolved across the whole array.
    """
    diag = math.hypot(aperture.L_x, aperture.L_y)
    radial = 16 + math.ceil(oversample * 2.0 * diag)
    angular = 32 + math.ceil(oversample * 2.0 * math.pi * diag)
    kx, ky, w = disk_nodes(spec, radial, angular)
    pos = aperture.positions()
    R = np.zeros((aperture.N, aperture.N), dtype=complex)
    for s in range(0, len(w), chunk):
        A = np.exp(2j * np.pi * (np.outer(pos[:, 0], kx[s:s + chunk])
                                 + np.outer(pos[:, 1], ky[s:s + chunk])))
        R += (A * w[s:s + chunk]) @ A.conj().T
    R = 0.5 * (R + R.conj().T)
    return R * (aperture.N / np.trace(R).real)
