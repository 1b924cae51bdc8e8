"""Planar apertures, propagating-mode lattices and Fourier mode matrices.

All lengths are in wavelengths. An aperture of ``L_x x L_y`` wavelengths
sampled every ``spacing_x x spacing_y`` wavelengths has its elements at
``(i * spacing_x, j * spacing_y)`` for ``i < N_x``, ``j < N_y`` (corner
anchored). Element index is ``i * N_y + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import UsageError

__all__ = [
    "Aperture",
    "ModeSet",
    "enumerate_modes",
    "full_grid_modes",
    "formula_mode_count",
    "fourier_matrix",
    "alias_classes",
]

_RATIO_TOL = 1e-9


def _element_count(length: float, spacing: float, axis: str) -> int:
    if not (length > 0 and spacing > 0):
        raise UsageError(f"L_{axis} and spacing_{axis} must be positive")
    if spacing > length:
        raise UsageError(f"spacing_{axis}={spacing} exceeds L_{axis}={length}")
    ratio = length / spacing
    count = round(ratio)
    if abs(ratio - count) > _RATIO_TOL:
        raise UsageError(
            f"L_{axis}/spacing_{axis} = {ratio!r} is not an integer; "
            "pick a spacing that divides the aperture"
        )
    return int(count)


@dataclass(frozen=True)
class Aperture:
    """Rectangular planar array.

    Parameters
    ----------
    L_x, L_y : float
        Side lengths in wavelengths.
    spacing_x, spacing_y : float
        Element spacing in wavelengths. ``spacing_y`` defaults to
        ``spacing_x``.
    """

    L_x: float
    L_y: float
    spacing_x: float = 0.5
    spacing_y: float | None = None
    N_x: int = field(init=False)
    N_y: int = field(init=False)

    def __post_init__(self):
        if self.spacing_y is None:
            object.__setattr__(self, "spacing_y", self.spacing_x)
        object.__setattr__(self, "L_x", float(self.L_x))
        object.__setattr__(self, "L_y", float(self.L_y))
        object.__setattr__(self, "spacing_x", float(self.spacing_x))
        object.__setattr__(self, "spacing_y", float(self.spacing_y))
        object.__setattr__(self, "N_x", _element_count(self.L_x, self.spacing_x, "x"))
        object.__setattr__(self, "N_y", _element_count(self.L_y, self.spacing_y, "y"))

    @classmethod
    def square(cls, L: float, spacing: float = 0.5) -> Aperture:
        return cls(L, L, spacing, spacing)

    @property
    def N(self) -> int:
        """Total number of elements."""
        return self.N_x * self.N_y

    def positions(self) -> np.ndarray:
        """Element coordinates in wavelengths, shape ``(N, 2)``."""
        i, j = np.meshgrid(np.arange(self.N_x), np.arange(self.N_y), indexing="ij")
        return np.column_stack(
            [i.ravel() * self.spacing_x, j.ravel() * self.spacing_y]
        )


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Ordered set of wavenumber modes ``(l, m)`` belonging to an aperture.

    ``modes`` is an integer array of shape ``(n, 2)``. Instances are built
    by :func:`enumerate_modes` (propagating modes) or
    :func:`full_grid_modes` (one mode per DFT bin).
    """

    aperture: Aperture
    modes: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, 2)
        if len(modes) == 0:
            raise UsageError("a mode set needs at least one mode")
        modes.setflags(write=False)
        object.__setattr__(self, "modes", modes)

    @property
    def n(self) -> int:
        return len(self.modes)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, ModeSet):
            return NotImplemented
        return self.aperture == other.aperture and np.array_equal(
            self.modes, other.modes
        )

    def __hash__(self):
        return hash((self.aperture, self.modes.tobytes()))

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        """Map from ``(l, m)`` to row position in :attr:`modes`."""
        return {(int(l), int(m)): k for k, (l, m) in enumerate(self.modes)}


def enumerate_modes(aperture: Aperture) -> ModeSet:
    """All integer ``(l, m)`` with ``(l/L_x)**2 + (m/L_y)**2 <= 1``.

    Modes are sorted lexicographically by ``(l, m)``. The count is the exact
    number of lattice points in the ellipse, which differs slightly from
    :func:`formula_mode_count` (317 against 315 for a 10 x 10 aperture).
    """
    Lx, Ly = aperture.L_x, aperture.L_y
    lmax, mmax = math.floor(Lx), math.floor(Ly)
    l, m = np.meshgrid(
        np.arange(-lmax, lmax + 1), np.arange(-mmax, mmax + 1), indexing="ij"
    )
    l, m = l.ravel(), m.ravel()
    # integer form avoids round-off on points that sit exactly on the ellipse
    if Lx.is_integer() and Ly.is_integer():
        keep = (l * int(Ly)) ** 2 + (m * int(Lx)) ** 2 <= int(Lx * Ly) ** 2
    else:
        keep = (l / Lx) ** 2 + (m / Ly) ** 2 <= 1.0 + 1e-12
    return ModeSet(aperture, np.column_stack([l[keep], m[keep]]))


def full_grid_modes(aperture: Aperture) -> ModeSet:
    """One mode per 2D DFT bin, ``N`` modes in total.

    Used for the i.i.d. baseline where the Fourier matrix is the full unitary
    DFT.
    """
    lx = np.arange(aperture.N_x) - aperture.N_x // 2
    my = np.arange(aperture.N_y) - aperture.N_y // 2
    l, m = np.meshgrid(lx, my, indexing="ij")
    return ModeSet(aperture, np.column_stack([l.ravel(), m.ravel()]))


def formula_mode_count(aperture: Aperture) -> int:
    """Asymptotic mode count ``ceil(pi * L_x * L_y)``."""
    return math.ceil(math.pi * aperture.L_x * aperture.L_y)


def fourier_matrix(aperture: Aperture, modes: ModeSet) -> np.ndarray:
    """Angular-to-spatial mode matrix of shape ``(N, n)``.

    Entry ``[(i, j), (l, m)]`` is
    ``exp(2j*pi*(l*i*spacing_x/L_x + m*j*spacing_y/L_y)) / sqrt(N)``.
    Columns are unit norm; they are mutually orthogonal unless two modes
    alias onto the same DFT bin (see :func:`alias_classes`).
    """
    if modes.aperture != aperture:
        raise UsageError("mode set was enumerated for a different aperture")
    i = np.arange(aperture.N_x)
    j = np.arange(aperture.N_y)
    l, m = modes.modes[:, 0], modes.modes[:, 1]
    ex = np.exp(2j * np.pi * np.outer(i, l) / aperture.N_x)  # (N_x, n)
    ey = np.exp(2j * np.pi * np.outer(j, m) / aperture.N_y)  # (N_y, n)
    phi = (ex[:, None, :] * ey[None, :, :]).reshape(aperture.N, modes.n)
    return phi / math.sqrt(aperture.N)


def alias_classes(modes: ModeSet) -> np.ndarray:
    """Label modes that share a DFT bin, i.e. have identical columns.

    Returns an integer array ``labels`` of length ``n``; modes with equal
    labels map to the same column of :func:`fourier_matrix`. All labels are
    distinct exactly when the Fourier matrix is semi-unitary.
    """
    ap = modes.aperture
    bins = (modes.modes[:, 0] % ap.N_x) * ap.N_y + (modes.modes[:, 1] % ap.N_y)
    _, labels = np.unique(bins, return_inverse=True)
    return labels.reshape(-1)
