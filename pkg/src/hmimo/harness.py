"""Seeded experiment drivers producing plain result tables.

Every experiment is a pure function of its :class:`ExperimentSpec`: Monte
Carlo trials are keyed on ``(seed, trial)`` and one seed is shared by all
points of a sweep, so regimes and spacings are compared on common random
numbers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis, capacity
from .channel import correlation_model, reference_correlation
from .errors import HmimoError, UsageError
from .geometry import Aperture, enumerate_modes
from .multiuser import LisConfig, UserLink, lis_sum_rate
from .spectrum import ScatteringSpec, iid_variances, mode_variances

__all__ = ["ExperimentSpec", "Table", "run_experiment", "KINDS", "SWEEP_REGIMES"]

log = logging.getLogger(__name__)

KINDS = ("dof", "eig-spectrum", "capacity-sweep", "regime-compare", "sumrate")
SWEEP_REGIMES = ("iid-uniform", "iid-asymptotic", "csir-uniform", "stat-csit",
                 "perfect-csi", "asymptotic")
DEFAULT_REGIMES = ("iid-asymptotic", "csir-uniform", "stat-csit", "perfect-csi",
                   "asymptotic")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment."""

    kind: str
    L: float = 10.0
    L_y: float | None = None
    spacing: float = 0.5
    spacings: tuple[float, ...] = (0.5,)
    scattering: ScatteringSpec = field(default_factory=ScatteringSpec)
    model: str = "exact"
    snr_db: float = 10.0
    trials: int = 200
    seed: int = 0
    workers: int = 1
    regimes: tuple[str, ...] = DEFAULT_REGIMES
    geometry: str = "planar"
    wavelength: float = 0.1
    extent: float = 1.0
    users: tuple[tuple[float, float], ...] = ((1.0, 1.0),)
    radius: float = 1.0
    noise: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.seed < 0:
            raise UsageError("seed must be nonnegative")
        if self.model not in ("exact", "fourier"):
            raise UsageError("model must be 'exact' or 'fourier'")
        if self.kind in ("capacity-sweep", "regime-compare"):
            if not self.spacings:
                raise UsageError("spacing list is empty")
            if any(not 0 < s <= 0.5 + 1e-12 for s in self.spacings):
                raise UsageError("sweep spacings must lie in (0, 0.5] wavelengths")
        bad = set(self.regimes) - set(SWEEP_REGIMES)
        if bad:
            raise UsageError(f"unknown regimes: {', '.join(sorted(bad))}")

    @property
    def gamma(self) -> float:
        return capacity.db_to_linear(self.snr_db)

    def aperture(self, spacing: float | None = None) -> Aperture:
        s = self.spacing if spacing is None else spacing
        return Aperture(self.L, self.L if self.L_y is None else self.L_y, s, s)


@dataclass
class Table:
    """Named result table: ``columns`` plus rows of matching tuples."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _annotate(exc: HmimoError, where: str) -> HmimoError:
    exc.args = (f"{where}: {exc.args[0] if exc.args else ''}",) + exc.args[1:]
    return exc


def _eig_spectrum(spec: ExperimentSpec) -> Table:
    ap = spec.aperture()
    if spec.model == "exact":
        report = analysis.dense_spectrum(reference_correlation(ap, spec.scattering))
    else:
        mv = mode_variances(ap, enumerate_modes(ap), spec.scattering)
        report = analysis.eigen_spectrum(correlation_model(mv))
    log.info("N=%d nonzero=%d significant(95%%)=%d", ap.N, report.nonzero_count,
             analysis.significant_mode_count(report))
    cum = report.cumulative_fraction()
    rows = [(k + 1, float(v), float(c)) for k, (v, c) in enumerate(zip(report.eigenvalues, cum))]
    return Table("eig-spectrum", ("index", "eigenvalue", "cumulative_fraction"), rows)


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / v.size
    if v.size < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2) / (v.size - 1) / v.size)


def _sweep_point(spec: ExperimentSpec, spacing: float) -> dict[str, tuple[float, float, int]]:
    """Capacities at one spacing as ``regime -> (capacity, stderr, trials)``."""
    ap = spec.aperture(spacing)
    gamma = spec.gamma
    mv = mode_variances(ap, enumerate_modes(ap), spec.scattering)
    out = {}
    wanted = set(spec.regimes)
    mc = wanted & {"csir-uniform", "stat-csit", "perfect-csi"}
    if mc:
        per_trial = capacity.compare_regimes(mv, mv, gamma, spec.trials, spec.seed, spec.workers)
        for regime in mc:
            m, se = _mean_se(per_trial[regime])
            out[regime] = (m, se, spec.trials)
    if "asymptotic" in wanted:
        out["asymptotic"] = (capacity.capacity_asymptotic(mv, mv, gamma).capacity, 0.0, 0)
    if wanted & {"iid-uniform", "iid-asymptotic"}:
        iid = iid_variances(ap)
        if "iid-asymptotic" in wanted:
            out["iid-asymptotic"] = (capacity.capacity_asymptotic(iid, iid, gamma).capacity,
                                     0.0, 0)
        if "iid-uniform" in wanted:
            r = capacity.capacity_csir_uniform_ergodic(iid, iid, gamma, spec.trials, spec.seed,
                                                       spec.workers)
            out["iid-uniform"] = (r.capacity, r.stderr, spec.trials)
    return out


def _sweep(spec: ExperimentSpec) -> dict[float, dict]:
    results = {}
    for s in spec.spacings:
        try:
            results[s] = _sweep_point(spec, s)
        except HmimoError as exc:
            raise _annotate(exc, f"spacing={s!r}")
    return results


def _capacity_sweep(spec: ExperimentSpec) -> Table:
    table = Table("capacity-sweep",
                  ("spacing", "regime", "capacity_bits", "stderr", "trials", "seed"))
    for s, point in _sweep(spec).items():
        for regime in spec.regimes:
            c, se, n = point[regime]
            table.rows.append((float(s), regime, c, se, n, spec.seed))
    return table


def _regime_compare(spec: ExperimentSpec) -> Table:
    regimes = [r for r in SWEEP_REGIMES if r in spec.regimes]
    cols = ("spacing",) + tuple(r.replace("-", "_") for r in regimes) + ("trials", "seed")
    table = Table("regime-compare", cols)
    for s, point in _sweep(spec).items():
        table.rows.append((float(s),) + tuple(point[r][0] for r in regimes)
                          + (spec.trials, spec.seed))
    return table


def _sumrate(spec: ExperimentSpec) -> Table:
    users = [UserLink(p, eps, f"user{k}") for k, (p, eps) in enumerate(spec.users)]
    res = lis_sum_rate(users, LisConfig(spec.radius, spec.noise))
    rows = list(zip(res.labels, res.terms)) + [("total", res.total)]
    return Table("sumrate", ("user", "term_bits"), rows)


def _dof(spec: ExperimentSpec) -> Table:
    dof = analysis.dof_limit(spec.geometry, spec.wavelength, spec.extent)
    return Table("dof", ("geometry", "wavelength", "extent", "dof", "evanescent_loss"),
                 [(spec.geometry, spec.wavelength, spec.extent, dof, analysis.evanescent_loss())])


_RUNNERS = {
    "dof": _dof,
    "eig-spectrum": _eig_spectrum,
    "capacity-sweep": _capacity_sweep,
    "regime-compare": _regime_compare,
    "sumrate": _sumrate,
}


def run_experiment(spec: ExperimentSpec) -> Table:
    """Run ``spec`` and return its result table."""
    log.info("running %s", spec.kind)
    return _RUNNERS[spec.kind](spec)
