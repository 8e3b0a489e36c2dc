"""Closed-form tradeoff and complexity evaluators.

Rate formulas are in bits per channel use (base-2 logs); the complexity
asymptotics also use base-2 logs.  Asymptotic-equality formulas are
implemented as their finite-SNR right-hand sides with rho a parameter; the
functions report values and never claim limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .lattices import RadiusEstimates

#: shaping-goodness constant used when no radius estimates are available
#: (flagged fallback; random construction-A lattices sit near this floor)
PHI_FLOOR = 0.25


def _validate_zeta(zeta, M):
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (M,):
        raise ValueError(f"zeta must have length M = {M}")
    if np.any(zeta < 0) or np.any(np.diff(zeta) > 1e-12):
        raise ValueError("zeta must satisfy zeta_1 >= ... >= zeta_M >= 0")
    if np.sum(zeta) > M + 1e-12:
        raise ValueError("zeta must sum to at most M")
    return zeta


@dataclass
class DmtCurve:
    """Piecewise-linear diversity-multiplexing curve.

    Breakpoints are (r(k), d(k/ell)) for k = 0..M.  The value at r = 0 is
    d(0) = M*N even when unbalanced coefficient assignments collapse the
    first breakpoint onto r = 0.
    """
    breakpoints: list            # [(r, d)] with r nondecreasing
    zeta: np.ndarray

    def evaluate(self, r: float) -> float:
        pts = self.breakpoints
        if r <= pts[0][0]:
            return pts[0][1]
        if r >= pts[-1][0]:
            return pts[-1][1]
        # last breakpoint at or left of r governs (duplicates collapse)
        idx = max(i for i, (rk, _) in enumerate(pts) if rk <= r)
        r0, d0 = pts[idx]
        r1, d1 = pts[idx + 1]
        if r == r0:
            return d0
        return d0 + (d1 - d0) * (r - r0) / (r1 - r0)


def dmt_curve(M: int, N: int, zeta, ell: int = 1) -> DmtCurve:
    """Breakpoints (r(k), (M-k/ell)(N-k/ell)) with r(k) the sum of the k
    smallest rate-split coefficients."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    zeta = _validate_zeta(zeta, M)
    pts = [(0.0, float(M * N))]
    for k in range(1, M + 1):
        r_k = float(np.sum(zeta[M - k:]))
        d_k = (M - k / ell) * (N - k / ell)
        pts.append((r_k, d_k))
    return DmtCurve(pts, zeta)


def uniform_zeta(M: int) -> np.ndarray:
    return np.ones(M)


def optimal_arq_tradeoff(M: int, N: int, L: int, r_e: float,
                         model: str = "long-term") -> float:
    """Best achievable diversity at effective multiplexing gain r_e:
    f(r_e/L) long-term, L*f(r_e/L) short-term, with f(r) = (M-r)(N-r)."""
    if r_e < 0:
        raise ValueError("r_e must be >= 0")
    if r_e >= min(M, N):
        return 0.0
    f = (M - r_e / L) * (N - r_e / L)
    if model == "short-term":
        return L * f
    return f


def eta_target(eigenvalues, rho: float, zeta, phi: float = 0.5) -> float:
    """phi * prod (1 + rho*lambda_i)^zeta_i, the tunable rate target."""
    lam = np.asarray(eigenvalues, dtype=float)
    return phi * float(np.prod((1.0 + rho * lam) ** np.asarray(zeta)))


def bias_schedule(eigenvalues, rho: float, zeta, ell: int, M: int, L: int,
                  radii: RadiusEstimates, phi: float = 0.5) -> float:
    """SNR-adaptive bias:

    b = 1/2 * prod(1+rho l_i)^(ell/ML) / eta^(ell/ML)
        * [1 - (eta / prod(1+rho l_i))^(ell/2ML)] * (2 r_pack / r_eff)^2

    with eta = phi * prod(1+rho l_i)^zeta_i, which must land strictly
    between 1 and prod(1+rho l_i).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be nonnegative")
    zeta = _validate_zeta(zeta, M)
    prod = float(np.prod(1.0 + rho * lam))
    if prod <= 1.0:
        return 0.0
    eta = eta_target(lam, rho, zeta, phi)
    if not 1.0 < eta < prod:
        raise ValueError(
            f"eta = {eta:.6g} outside (1, {prod:.6g}); adjust zeta or phi")
    e = ell / (M * L)
    factor = (2.0 * radii.r_pack / radii.r_eff) ** 2
    return 0.5 * (prod / eta) ** e * (1.0 - (eta / prod) ** (e / 2.0)) * factor


def bias_to_alpha(bias: float, radii: RadiusEstimates) -> float:
    """Rate-penalty parameter (r_eff / 2 r_pack)^2 * b of a fixed bias."""
    return (radii.r_eff / (2.0 * radii.r_pack)) ** 2 * bias


def achievable_rate(r_mod: float, alpha: float, M: int, L: int) -> float:
    """max{R_mod - 2ML log2((1 + sqrt(1+8a))/2), 0}, bits per channel use."""
    if r_mod < 0 or alpha < 0:
        raise ValueError("r_mod and alpha must be >= 0")
    penalty = 2.0 * M * L * math.log2((1.0 + math.sqrt(1.0 + 8.0 * alpha)) / 2.0)
    return max(r_mod - penalty, 0.0)


def shaping_constant(radii: RadiusEstimates | None) -> float:
    """0.5 (2 r_pack / r_eff)^2 from radius estimates, or the flagged floor."""
    if radii is None:
        return PHI_FLOOR
    return 0.5 * (2.0 * radii.r_pack / radii.r_eff) ** 2


def default_zeta_const(M: int, N: int, T: int, L: int, r1: float = 0.0,
                       ell: int = 1) -> float:
    """Smallest zeta with MTL*zeta >= (M - r1/ell)(N - r1/ell)."""
    return (M - r1 / ell) * (N - r1 / ell) / (M * T * L)


def gamma_out_bound(r_matrix: np.ndarray, bias: float, m: int, mtl: float,
                    zeta_const: float, rho: float) -> float:
    """Smallest node budget certifying the retransmission-probability decay:

    m + sum_k (4 pi)^(k/2)/Gamma(k/2+1)
            * [b k + MTL (1 + zeta log2 rho)]^(k/2) / det(R_kk^T R_kk)^(1/2)
    """
    diag = np.diag(np.asarray(r_matrix, dtype=float))
    if np.any(diag <= 0):
        raise ValueError("R must have a positive diagonal")
    log_det_tail = np.cumsum(np.log(diag[::-1]))
    level = mtl * (1.0 + zeta_const * math.log2(rho))
    total = float(m)
    for k in range(1, m + 1):
        log_s = (0.5 * k * math.log(4 * math.pi)
                 + 0.5 * k * math.log(bias * k + level)
                 - gammaln(k / 2.0 + 1.0) - log_det_tail[k - 1])
        total += math.exp(log_s)
    return total


def tradeoff_exponent_boost(r_e: float, M: int, N: int, T: int, L: int) -> float:
    """l(r_e) = (T r_e / M)(M - r_e/L) - (M - r_e/L)(N - r_e/L)."""
    a = M - r_e / L
    return (T * r_e / M) * a - a * (N - r_e / L)


def avg_gamma_out_asymptotic(M: int, N: int, T: int, L: int, rho: float,
                             r_e: float = 0.0) -> float:
    """Average node budget achieving the optimal tradeoff at high SNR:
    2MTL + (log2 rho)^(MTL) * rho^l(r_e)."""
    if rho <= 1:
        raise ValueError("rho must exceed 1")
    if not 0 <= r_e <= M:
        raise ValueError("r_e must lie in [0, M]")
    mtl = M * T * L
    return 2.0 * mtl + math.log2(rho) ** mtl \
        * rho ** tradeoff_exponent_boost(r_e, M, N, T, L)


def _asymptotic_mean_nodes(mtl: int, mn: int, rho: float,
                           tree_exponent: int) -> float:
    return 2.0 * mtl + math.log2(rho) ** tree_exponent / rho ** mn


def sphere_complexity_asymptotic(M: int, N: int, T: int, L: int,
                                 rho: float) -> float:
    """Average list sphere decoder work at fixed rate:
    2MTL + (log2 rho)^(2MTL)/rho^(MN)."""
    return _asymptotic_mean_nodes(M * T * L, M * N, rho, 2 * M * T * L)


def complexity_ratio(M: int, N: int, T: int, L: int, rho: float) -> float:
    """Sphere-to-stack average complexity ratio at fixed rate; >= 1, and
    decreasing toward 1 as rho grows."""
    if rho <= 1:
        raise ValueError("rho must exceed 1")
    mtl = M * T * L
    return (_asymptotic_mean_nodes(mtl, M * N, rho, 2 * mtl)
            / _asymptotic_mean_nodes(mtl, M * N, rho, mtl))


@dataclass
class OutageEstimate:
    probability: float
    events: int
    trials: int
    upper_bound_95: float        # one-sided bound, informative when events=0
    is_bound: bool               # True when no events were observed


def _batched_eigenvalues(M: int, N: int, n: int, rng) -> np.ndarray:
    h = (rng.standard_normal((n, N, M)) + 1j * rng.standard_normal((n, N, M))) \
        * np.sqrt(0.5)
    if M == 2:
        # closed form for the 2x2 Gram spectrum; much faster than eigvalsh
        g = np.einsum("nij,nik->njk", h.conj(), h)
        tr = g[:, 0, 0].real + g[:, 1, 1].real
        det = (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]).real
        disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
        return np.stack([(tr - disc) / 2.0, (tr + disc) / 2.0], axis=1)
    gram = np.einsum("nij,nik->njk", h.conj(), h)
    return np.sort(np.linalg.eigvalsh(gram).real, axis=1)


def outage_probability(M: int, N: int, L: int, ell: int, model: str,
                       rho: float, rate_r1: float, zeta, trials: int,
                       rng) -> OutageEstimate:
    """Monte Carlo outage frequency under the rate target
    sum_i zeta_i * ell * log2(1 + rho lambda_i) < R1 (long-term), or the
    per-round double sum for the short-term model."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    zeta = _validate_zeta(zeta, M)
    if model not in ("long-term", "short-term"):
        raise ValueError(f"unknown channel model {model!r}")
    events = 0
    done = 0
    chunk_max = 1 << 20
    while done < trials:
        n = min(chunk_max, trials - done)
        # eigenvalue columns come out ascending, pairing lambda_1 with zeta_1
        if model == "long-term":
            lam = _batched_eigenvalues(M, N, n, rng)
            rates = ell * np.sum(zeta * np.log2(1.0 + rho * lam), axis=1)
        else:
            rates = np.zeros(n)
            for _ in range(ell):
                lam = _batched_eigenvalues(M, N, n, rng)
                rates += np.sum(zeta * np.log2(1.0 + rho * lam), axis=1)
        events += int(np.sum(rates < rate_r1))
        done += n
    ub = 1.0 - 0.05 ** (1.0 / trials) if events == 0 \
        else min(1.0, (events + 1.96 * math.sqrt(events)) / trials)
    return OutageEstimate(events / trials, events, trials, ub, events == 0)


def outage_exponent(M: int, N: int, L: int, ell: int, model: str,
                    rho_grid, rate_r1: float, zeta, trials,
                    rng) -> tuple[float, list[OutageEstimate]]:
    """Fitted SNR exponent: minus the slope of log P_out against log rho.

    ``trials`` may be one count or a per-grid-point sequence (rarer events
    at the high-SNR end need proportionally more samples).  Grid points
    with zero observed events are dropped from the regression.
    """
    if np.isscalar(trials):
        trials = [int(trials)] * len(rho_grid)
    estimates = [outage_probability(M, N, L, ell, model, rho, rate_r1, zeta,
                                    n, rng) for rho, n in zip(rho_grid,
                                                              trials)]
    xs, ys = [], []
    for rho, est in zip(rho_grid, estimates):
        if est.events > 0:
            xs.append(math.log(rho))
            ys.append(math.log(est.probability))
    if len(xs) < 2:
        raise ValueError("too few grid points with observed outage events")
    slope = np.polyfit(xs, ys, 1)[0]
    return -float(slope), estimates
