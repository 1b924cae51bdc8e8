"""Per-mode variances of the plane-wave spectrum.

Wavenumbers are normalized so that the propagating disk is the unit disk
(``k = 1`` corresponds to ``2*pi/lambda``). Mode ``(l, m)`` owns the cell
``[(l - 1/2)/L_x, (l + 1/2)/L_x] x [(m - 1/2)/L_y, (m + 1/2)/L_y]`` and its
variance is the spectral density integrated over the part of that cell
inside the disk.

The isotropic density ``1/sqrt(1 - k_x**2 - k_y**2)`` is singular on the
rim. Each cell is integrated as an outer midpoint rule in ``k_x`` and, for
fixed ``k_x`` with ``a = sqrt(1 - k_x**2)``, the substitution
``k_y = a*sin(phi)`` which turns ``dk_y / sqrt(a**2 - k_y**2)`` into
``dphi``. The inner integral is exact for the isotropic density and smooth
for the directional one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError
from .geometry import Aperture, ModeSet, full_grid_modes

__all__ = [
    "ScatteringSpec",
    "ModeVariances",
    "mode_variances",
    "iid_variances",
    "cell_integrals",
    "disk_nodes",
]


@dataclass(frozen=True)
class ScatteringSpec:
    """Angular power spectrum of the scattering environment.

    ``kind="isotropic"`` is Clarke's 3D isotropic model. ``kind="directional"``
    weights it by ``exp(kappa*(d.u - 1))`` where ``u`` is the unit
    propagation direction of a plane wave and ``d`` the lobe centre given by
    ``azimuth`` (from the x axis) and ``elevation`` (from the array plane;
    ``pi/2`` is broadside). ``kappa = 0`` recovers the isotropic case.
    ``resolution`` is the number of quadrature nodes per cell and axis.
    """

    kind: str = "isotropic"
    kappa: float = 0.0
    azimuth: float = 0.0
    elevation: float = math.pi / 2
    resolution: int = 32

    def __post_init__(self):
        if self.kind not in ("isotropic", "directional"):
            raise UsageError(f"unknown scattering kind {self.kind!r}")
        if self.kind == "isotropic" and (
            self.kappa != 0.0 or self.azimuth != 0.0 or self.elevation != math.pi / 2
        ):
            raise UsageError("isotropic scattering takes no direction parameters")
        if self.kappa < 0:
            raise UsageError("kappa must be >= 0")
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise UsageError("resolution must be a positive integer")

    @classmethod
    def directional(cls, kappa, azimuth=0.0, elevation=math.pi / 2, resolution=32):
        return cls("directional", float(kappa), float(azimuth), float(elevation),
                   int(resolution))

    @property
    def center(self) -> np.ndarray:
        ce = math.cos(self.elevation)
        return np.array([ce * math.cos(self.azimuth), ce * math.sin(self.azimuth),
                         math.sin(self.elevation)])

    def weight(self, kx, ky, kz):
        """Directional factor relative to the isotropic density."""
        if self.kind == "isotropic" or self.kappa == 0.0:
            return np.ones(np.broadcast(kx, ky, kz).shape)
        d = self.center
        return np.exp(self.kappa * (d[0] * kx + d[1] * ky + d[2] * kz - 1.0))


@dataclass(frozen=True, eq=False)
class ModeVariances:
    """Per-mode variances ``sigma_sq`` normalized so they sum to ``target``."""

    mode_set: ModeSet
    sigma_sq: np.ndarray
    target: float = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.sigma_sq, dtype=float).copy()
        if s.shape != (self.mode_set.n,):
            raise UsageError("one variance per mode is required")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise UsageError("variances must be finite and nonnegative")
        s.setflags(write=False)
        object.__setattr__(self, "sigma_sq", s)
        if self.target is None:
            object.__setattr__(self, "target", float(self.mode_set.aperture.N))

    @property
    def aperture(self) -> Aperture:
        return self.mode_set.aperture

    @property
    def n(self) -> int:
        return self.mode_set.n

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma_sq)

    def scaled(self, target: float) -> ModeVariances:
        return ModeVariances(self.mode_set, self.sigma_sq * (target / self.sigma_sq.sum()),
                             float(target))


def _midpoints(lo, hi, res):
    """Midpoint nodes of ``res`` equal subintervals of each ``[lo, hi]`` row."""
    t = (np.arange(res) + 0.5) / res
    return lo[:, None] + (hi - lo)[:, None] * t[None, :]


def cell_integrals(x0, x1, y0, y1, spec: ScatteringSpec) -> np.ndarray:
    """Spectral power inside each rectangle ``[x0, x1] x [y0, y1]`` cut by the
    unit disk. Inputs are 1-D arrays of equal length, one entry per cell.

    The rule is applied with ``k_x`` outer and again with ``k_y`` outer, and
    the two results averaged, so the quadrature is symmetric under swapping
    the axes.
    """
    swapped = _swap_axes(spec)
    return 0.5 * (_cell_integrals_x_outer(x0, x1, y0, y1, spec)
                  + _cell_integrals_x_outer(y0, y1, x0, x1, swapped))


def _swap_axes(spec: ScatteringSpec) -> ScatteringSpec:
    if spec.kind == "isotropic" or spec.kappa == 0.0:
        return spec
    # reflect the lobe centre across the k_x = k_y plane
    return ScatteringSpec(spec.kind, spec.kappa, math.pi / 2 - spec.azimuth, spec.elevation,
                          spec.resolution)


def _cell_integrals_x_outer(x0, x1, y0, y1, spec: ScatteringSpec) -> np.ndarray:
    res = spec.resolution
    x0 = np.clip(np.asarray(x0, float), -1.0, 1.0)
    x1 = np.clip(np.asarray(x1, float), -1.0, 1.0)
    y0 = np.asarray(y0, float)
    y1 = np.asarray(y1, float)
    hx = (x1 - x0) / res
    x = _midpoints(x0, x1, res)  # (cells, res)
    a = np.sqrt(np.maximum(1.0 - x**2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        p0 = np.arcsin(np.clip(y0[:, None] / a, -1.0, 1.0))
        p1 = np.arcsin(np.clip(y1[:, None] / a, -1.0, 1.0))
    p0 = np.where(a > 0, p0, 0.0)
    p1 = np.where(a > 0, p1, 0.0)
    if spec.kind == "isotropic" or spec.kappa == 0.0:
        inner = p1 - p0
    else:
        phi = p0[..., None] + (p1 - p0)[..., None] * ((np.arange(res) + 0.5) / res)
        ky = a[..., None] * np.sin(phi)
        kz = a[..., None] * np.cos(phi)
        w = spec.weight(x[..., None], ky, kz)
        inner = w.mean(axis=-1) * (p1 - p0)
    return inner.sum(axis=1) * hx


def mode_variances(
    aperture: Aperture,
    modes: ModeSet,
    spec: ScatteringSpec | None = None,
    target: float | None = None,
) -> ModeVariances:
    """Integrate the angular spectrum over each mode cell and normalize.

    The result sums to ``target`` (``aperture.N`` by default) so that the
    implied correlation matrix has trace ``N``.
    """
    if modes.aperture != aperture:
        raise UsageError("mode set was enumerated for a different aperture")
    spec = spec or ScatteringSpec()
    l = modes.modes[:, 0].astype(float)
    m = modes.modes[:, 1].astype(float)
    Lx, Ly = aperture.L_x, aperture.L_y
    raw = cell_integrals((l - 0.5) / Lx, (l + 0.5) / Lx, (m - 0.5) / Ly, (m + 0.5) / Ly,
                         spec)
    bad = ~np.isfinite(raw)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"non-finite spectral integral in cell {tuple(int(v) for v in modes.modes[k])}")
    raw = np.maximum(raw, 0.0)
    total = math.fsum(raw)
    if total <= 0:
        raise NumericalError("spectrum carries no power over the mode set")
    T = float(aperture.N if target is None else target)
    return ModeVariances(modes, raw * (T / total), T)


def iid_variances(aperture: Aperture) -> ModeVariances:
    """Unit variances on the full DFT grid: the i.i.d. Rayleigh baseline."""
    modes = full_grid_modes(aperture)
    return ModeVariances(modes, np.ones(modes.n), float(aperture.N))


def disk_nodes(spec: ScatteringSpec, radial: int = 64, angular: int = 128):
    """Quadrature nodes and weights covering the whole unit disk.

    Uses polar coordinates with ``r = sin(t)``, which absorbs the isotropic
    rim singularity: Gauss-Legendre in ``t`` and the periodic trapezoid rule
    in the azimuth. Returns ``(kx, ky, w)`` such that ``sum(w * f(kx, ky))``
    approximates the integral of ``f`` against the spectral density, with
    weights normalized to sum to one.
    """
    x, wt = np.polynomial.legendre.leggauss(radial)
    t = 0.25 * np.pi * (x + 1.0)
    wt = wt * 0.25 * np.pi
    th = 2.0 * np.pi * np.arange(angular) / angular
    T, TH = np.meshgrid(t, th, indexing="ij")
    r = np.sin(T)
    kx, ky, kz = r * np.cos(TH), r * np.sin(TH), np.cos(T)
    w = (wt[:, None] * r) * spec.weight(kx, ky, kz)
    w = w.ravel()
    return kx.ravel(), ky.ravel(), w / math.fsum(w)
