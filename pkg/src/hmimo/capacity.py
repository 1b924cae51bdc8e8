"""Ergodic capacity of the angular-domain channel under three CSI regimes.

Conventions: the transmit covariance ``Q_a`` has unit trace and ``gamma`` is
the receive SNR, so a realization supports
``log2 det(I + gamma * H_a Q_a H_a^H)`` bit/s/Hz. The water-filling routine
works in the equivalent form with power budget ``gamma`` and unit noise,
so its water level ``mu`` solves ``gamma = sum [mu - 1/lambda_i]^+``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .channel import sample_angular
from .errors import ConvergenceError, RankZeroError, UsageError
from .spectrum import ModeVariances

__all__ = [
    "PowerAllocation",
    "WaterFill",
    "CapacityReport",
    "db_to_linear",
    "waterfill",
    "capacity_csir_uniform",
    "capacity_perfect_csi",
    "transmit_covariance",
    "stat_csit_allocation",
    "capacity_with_allocation",
    "monte_carlo",
    "capacity_csir_uniform_ergodic",
    "capacity_perfect_csi_ergodic",
    "capacity_stat_csit",
    "capacity_asymptotic",
    "compare_regimes",
]

LOG2E = 1.0 / math.log(2.0)


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-mode powers ``p`` with budget ``budget`` and water level ``mu``."""

    powers: np.ndarray
    budget: float
    mu: float = float("nan")

    @property
    def active(self) -> int:
        return int(np.count_nonzero(self.powers))


class WaterFill(NamedTuple):
    mu: float
    allocation: PowerAllocation
    capacity: float


@dataclass(frozen=True)
class CapacityReport:
    """Result of one capacity evaluation.

    Fields that do not apply to a regime are left at their defaults
    (``nan`` or 0): water-filling fields for uniform power, Monte Carlo
    fields for the asymptotic approximation.
    """

    regime: str
    capacity: float
    trials: int = 0
    stderr: float = 0.0
    mu: float = float("nan")
    active: int = 0
    residual: float = float("nan")
    iterations: int = 0


def waterfill(eigenvalues, gamma: float) -> WaterFill:
    """Exact water-filling of budget ``gamma`` over channel gains ``eigenvalues``.

    Sorts ``1/lambda`` ascending and takes the largest active set whose water
    level clears its weakest member. Zero gains never receive power.

    Returns
    -------
    WaterFill
        ``(mu, allocation, capacity)`` with ``capacity = sum log2(mu*lambda_i)``
        over active modes.
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    if not gamma > 0:
        raise UsageError("power budget must be positive")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise UsageError("eigenvalues must be finite and nonnegative")
    if not np.any(lam > 0):
        raise RankZeroError("rank-zero channel")
    # mu never exceeds gamma + 1/max(lam), so weaker modes stay inactive
    pos = np.flatnonzero(lam * (gamma + 1.0 / lam.max()) > 1.0)
    inv = np.sort(1.0 / lam[pos])
    k = np.arange(1, inv.size + 1)
    levels = (gamma + np.cumsum(inv)) / k
    n_active = int(np.flatnonzero(levels > inv)[-1]) + 1
    # recompute with fsum so the budget residual stays at round-off
    mu = (gamma + math.fsum(inv[:n_active])) / n_active
    p = np.zeros_like(lam)
    p[pos] = np.maximum(mu - 1.0 / lam[pos], 0.0)
    on = p > 0
    cap = math.fsum(np.log2(mu * lam[on]))
    return WaterFill(mu, PowerAllocation(p, float(gamma), mu), cap)


def _gram_eigenvalues(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H)
    G = H @ H.conj().T if H.shape[0] <= H.shape[1] else H.conj().T @ H
    return np.maximum(np.linalg.eigvalsh(G), 0.0)


def capacity_csir_uniform(H_a, gamma: float, method: str = "eig") -> float:
    """``sum_i log2(1 + gamma/n_t * lambda_i(H_a H_a^H))`` for one realization.

    ``method="cholesky"`` evaluates the same quantity as
    ``log2 det(I + gamma/n_t * G)`` on the smaller Gram matrix ``G``, which is
    several times faster for large channels.
    """
    H = np.asarray(getattr(H_a, "H_a", H_a))
    rho = gamma / H.shape[1]
    if method == "eig":
        return math.fsum(np.log2(1.0 + rho * _gram_eigenvalues(H)))
    if method != "cholesky":
        raise UsageError(f"unknown method {method!r}")
    G = H @ H.conj().T if H.shape[0] <= H.shape[1] else H.conj().T @ H
    G *= rho
    G[np.diag_indices_from(G)] += 1.0
    return 2.0 * math.fsum(np.log2(np.linalg.cholesky(G).diagonal().real))


def capacity_perfect_csi(H_a, gamma: float) -> tuple[float, PowerAllocation]:
    """Water-filled capacity over the eigenmodes of ``H_a H_a^H``.

    The allocation lists powers per right singular vector of ``H_a``, in
    descending singular-value order, and sums to ``gamma``.
    """
    H = np.asarray(getattr(H_a, "H_a", H_a))
    s = np.linalg.svd(H, compute_uv=False)
    wf = waterfill(s**2, gamma)
    return wf.capacity, wf.allocation


def transmit_covariance(H_a, allocation: PowerAllocation) -> np.ndarray:
    """Unit-trace ``Q_a = V_a diag(p/gamma) V_a^H`` for a perfect-CSI allocation."""
    H = np.asarray(getattr(H_a, "H_a", H_a))
    _, _, Vh = np.linalg.svd(H)
    V = Vh.conj().T[:, : allocation.powers.size]
    return (V * (allocation.powers / allocation.budget)) @ V.conj().T


def _coupled_gammas(a, c, gamma, gt=1.0, gr=1.0, tol=1e-13, max_iter=10_000):
    """Solve ``gt = sum c/(1 + gamma c gr)``, ``gr = sum a/(1 + gamma a gt)``."""
    for it in range(max_iter):
        nt = math.fsum(c / (1.0 + gamma * c * gr))
        nr = math.fsum(a / (1.0 + gamma * a * gt))
        residual = max(abs(nt - gt), abs(nr - gr))
        if residual < tol * max(1.0, nt, nr):
            return nt, nr
        gt += 0.5 * (nt - gt)
        gr += 0.5 * (nr - gr)
    raise ConvergenceError("coupled coefficients did not converge", residual, max_iter)


def stat_csit_allocation(mv_t: ModeVariances, mv_r: ModeVariances, gamma: float,
                         tol: float = 1e-12, max_iter: int = 500) -> PowerAllocation:
    """Diagonal angular-domain allocation from second-order statistics only.

    Unit power is water-filled over the transmit coupling strengths
    ``gamma * sigma_t[j]**2 * G_r`` where ``G_r`` is the receive-side
    coefficient of the large-system approximation evaluated at the current
    allocation. Alternating the two steps converges to the allocation that
    maximizes the approximate ergodic capacity.
    """
    a, b = mv_r.sigma_sq, mv_t.sigma_sq
    p = np.full(b.size, 1.0 / b.size)
    gt = gr = 1.0
    for it in range(1, max_iter + 1):
        gt, gr = _coupled_gammas(a, b * p, gamma, gt, gr)
        gains = gamma * b * gr
        wf = waterfill(gains, 1.0)
        step = float(np.max(np.abs(wf.allocation.powers - p)))
        p = wf.allocation.powers
        # p = mu - 1/g carries round-off of order eps/g at low SNR
        floor = 64 * np.finfo(float).eps * wf.mu
        if step < max(tol, floor):
            return wf.allocation
    raise ConvergenceError("statistical-CSIT allocation did not converge", step, max_iter)


def capacity_with_allocation(H_a, gamma: float, powers) -> float:
    """``log2 det(I + gamma * H_a diag(powers) H_a^H)``."""
    H = np.asarray(getattr(H_a, "H_a", H_a))
    Hp = H * np.sqrt(np.asarray(powers, dtype=float))[None, :]
    return math.fsum(np.log2(1.0 + gamma * _gram_eigenvalues(Hp)))


def monte_carlo(per_trial: Callable[[np.ndarray], object], mv_t: ModeVariances,
                mv_r: ModeVariances, trials: int, seed: int, workers: int = 1) -> list:
    """Evaluate ``per_trial(H_a)`` on trials ``0..trials-1``, in trial order.

    Channel draws depend only on ``(seed, trial)``, so the output does not
    depend on ``workers``.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")

    def one(t):
        return per_trial(sample_angular(mv_t, mv_r, seed, t).H_a)

    if workers <= 1:
        return [one(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


def _mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / v.size
    if v.size < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2) / (v.size - 1)
    return mean, math.sqrt(var / v.size)


def capacity_csir_uniform_ergodic(mv_t, mv_r, gamma, trials, seed, workers=1,
                                  control_variate: bool = False) -> CapacityReport:
    """Monte Carlo ergodic capacity with uniform power.

    With ``control_variate=True`` the estimate is corrected with the channel
    energy ``||H_a||_F**2``, whose mean ``sum(sigma_r**2) * sum(sigma_t**2)``
    is known exactly. The estimator stays unbiased up to O(1/trials) and its
    standard error typically drops by a third or more.
    """
    def per_trial(H):
        return capacity_csir_uniform(H, gamma, "cholesky"), float(np.vdot(H, H).real)

    vals = np.array(monte_carlo(per_trial, mv_t, mv_r, trials, seed, workers))
    c = vals[:, 0]
    if control_variate and trials > 2:
        e = vals[:, 1]
        mean_e = math.fsum(mv_r.sigma_sq) * math.fsum(mv_t.sigma_sq)
        ec = e - math.fsum(e) / trials
        cc = c - math.fsum(c) / trials
        beta = math.fsum(ec * cc) / math.fsum(ec * ec)
        c = c - beta * (e - mean_e)
    mean, se = _mean_stderr(c)
    return CapacityReport("csir-uniform", mean, trials, se)


def capacity_perfect_csi_ergodic(mv_t, mv_r, gamma, trials, seed, workers=1) -> CapacityReport:
    vals = monte_carlo(lambda H: capacity_perfect_csi(H, gamma)[0], mv_t, mv_r, trials, seed,
                       workers)
    mean, se = _mean_stderr(vals)
    return CapacityReport("perfect-csi", mean, trials, se)


def capacity_stat_csit(mv_t: ModeVariances, mv_r: ModeVariances, gamma: float, trials: int,
                       seed: int, workers: int = 1) -> CapacityReport:
    """Ergodic capacity with a fixed, statistics-based diagonal allocation."""
    alloc = stat_csit_allocation(mv_t, mv_r, gamma)
    p = alloc.powers
    vals = monte_carlo(lambda H: capacity_with_allocation(H, gamma, p), mv_t, mv_r, trials,
                       seed, workers)
    mean, se = _mean_stderr(vals)
    return CapacityReport("stat-csit", mean, trials, se, mu=alloc.mu, active=alloc.active)


def compare_regimes(mv_t: ModeVariances, mv_r: ModeVariances, gamma: float, trials: int,
                    seed: int, workers: int = 1) -> dict[str, np.ndarray]:
    """Per-trial capacities of all three regimes on shared channel draws.

    Returns arrays keyed ``"perfect-csi"``, ``"stat-csit"`` and
    ``"csir-uniform"``, each of length ``trials``.
    """
    p = stat_csit_allocation(mv_t, mv_r, gamma).powers

    def all_three(H):
        return (capacity_perfect_csi(H, gamma)[0],
                capacity_with_allocation(H, gamma, p),
                capacity_csir_uniform(H, gamma, "cholesky"))

    rows = np.array(monte_carlo(all_three, mv_t, mv_r, trials, seed, workers))
    return {"perfect-csi": rows[:, 0], "stat-csit": rows[:, 1], "csir-uniform": rows[:, 2]}


def _fixed_point_maps(st, sr, gamma, n_t):
    def f_t(gr):
        return math.fsum(st / (1.0 + gamma * st * gr)) / n_t

    def f_r(gt):
        return math.fsum(sr / (1.0 + gamma * sr * gt)) / n_t

    return f_t, f_r


def asymptotic_coefficients(mv_t: ModeVariances, mv_r: ModeVariances, gamma: float,
                            tol: float = 1e-12, max_iter: int = 10_000,
                            damping: float = 0.5) -> tuple[float, float, float, int]:
    """Solve the coupled deterministic-equivalent equations by damped iteration.

    ``Gamma_t = (1/n_t) sum_j s_t,j / (1 + gamma s_t,j Gamma_r)`` and
    ``Gamma_r = (1/n_t) sum_i s_r,i / (1 + gamma s_r,i Gamma_t)`` with
    ``s = sigma**2``. Iteration starts at 1 and stops once applying the maps
    moves neither coefficient by ``tol`` or more.

    Returns ``(Gamma_t, Gamma_r, residual, iterations)``.
    """
    if not tol > 0:
        raise UsageError("tol must be positive")
    if not 0 < damping <= 1:
        raise UsageError("damping must lie in (0, 1]")
    st, sr = mv_t.sigma_sq, mv_r.sigma_sq
    f_t, f_r = _fixed_point_maps(st, sr, gamma, mv_t.n)
    gt = gr = 1.0
    residual = float("inf")
    for it in range(1, max_iter + 1):
        nt, nr = f_t(gr), f_r(gt)
        residual = max(abs(nt - gt), abs(nr - gr))
        if residual < tol:
            return gt, gr, residual, it
        gt += damping * (nt - gt)
        gr += damping * (nr - gr)
    raise ConvergenceError(
        f"fixed point did not converge in {max_iter} iterations (residual {residual:.3g})",
        residual, max_iter)


def capacity_asymptotic(mv_t: ModeVariances, mv_r: ModeVariances, gamma: float,
                        tol: float = 1e-12, max_iter: int = 10_000,
                        damping: float = 0.5) -> CapacityReport:
    """Large-aperture approximation of the uniform-power ergodic capacity.

    ``C = sum_j log2((1 + gamma s_t,j Gamma_r) / exp(gamma Gamma_t Gamma_r))
    + sum_i log2(1 + gamma s_r,i Gamma_t)``.
    """
    gt, gr, res, it = asymptotic_coefficients(mv_t, mv_r, gamma, tol, max_iter, damping)
    st, sr = mv_t.sigma_sq, mv_r.sigma_sq
    cap = (math.fsum(np.log2(1.0 + gamma * st * gr))
           - mv_t.n * gamma * gt * gr * LOG2E
           + math.fsum(np.log2(1.0 + gamma * sr * gt)))
    return CapacityReport("asymptotic", cap, residual=res, iterations=it)
