"""Vector-level credible sets: interval batches, L2 balls, region diagnostics.

Centers are always the posterior means. Interval half-widths come from
the exact per-coordinate mass equation; ball radii from Monte Carlo
over joint posterior draws, with a moment-based approximation available
when draws are too expensive. The region classifiers and the
self-similarity / excessive-bias checks operate on the true mean vector
and are pure bookkeeping: they exist so simulation studies can report
coverage per signal-size regime.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .kernels import (
    GlobalScale,
    SparsityRate,
    posterior_fourth_central,
    posterior_variance,
    zeta,
)
from .posterior import PosteriorBatch

__all__ = [
    "CredibleInterval",
    "CredibleBall",
    "RegionLabel",
    "ExcessiveBiasReport",
    "interval_batch",
    "ball_radius",
    "ball_radius_approx",
    "credible_ball",
    "classify_regions",
    "classify_regions_adaptive",
    "self_similar_check",
    "excessive_bias_diagnostic",
    "region_blowups",
]


@dataclass(frozen=True)
class CredibleInterval:
    """Symmetric credible interval |x - center| <= half_width."""

    center: float
    half_width: float
    alpha: float
    blowup_L: float = 1.0

    def __post_init__(self):
        if self.half_width < 0.0:
            raise ValueError("half_width must be nonnegative")
        if self.blowup_L <= 0.0:
            raise ValueError("blowup_L must be positive")

    def contains(self, x) -> bool:
        return bool(abs(x - self.center) <= self.half_width)

    @property
    def base_radius(self) -> float:
        """Half-width before the blow-up factor was applied."""
        return self.half_width / self.blowup_L


@dataclass(frozen=True, eq=False)
class CredibleBall:
    """L2 ball around the posterior mean vector."""

    center: np.ndarray
    radius: float
    alpha: float
    blowup_L: float
    mc_draws: int
    mc_se: float
    approx: bool = False

    def __post_init__(self):
        if self.radius <= 0.0 and len(self.center) >= 1 and self.alpha < 1.0:
            raise ValueError("ball radius must be positive")
        if not self.approx and self.mc_draws < 1:
            raise ValueError("mc_draws must be a positive integer")

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.linalg.norm(theta - self.center) <= self.radius)


class RegionLabel(Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class ExcessiveBiasReport:
    satisfied: bool
    q: int | None
    p_tilde: int
    constants: dict = field(default_factory=dict)


def _as_vector(Y, name="Y"):
    arr = np.asarray(Y, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    bad = ~np.isfinite(arr)
    if bad.any():
        raise ValueError(f"coordinate {int(np.argmax(bad))}: value not finite")
    return arr


def interval_batch(Y, tau, alpha, L=1.0):
    """One marginal credible interval per coordinate, shared tau."""
    if L <= 0.0:
        raise ValueError(f"blow-up factor must be positive, got {L}")
    Y = _as_vector(Y)
    batch = PosteriorBatch(Y, tau)
    radii = batch.radius_batch(alpha)
    return [
        CredibleInterval(center=float(c), half_width=float(L * r), alpha=float(alpha), blowup_L=float(L))
        for c, r in zip(batch.means, radii)
    ]


def ball_radius(Y, tau, alpha, draws, rng):
    """(1-alpha) quantile of ||theta - mean|| over joint posterior draws.

    Returns (radius, mc_se) where the standard error comes from the
    usual order-statistic asymptotics with a finite-difference density
    estimate at the quantile.
    """
    draws = int(draws)
    if draws < 1000:
        raise ValueError(f"need at least 1000 draws for a stable quantile, got {draws}")
    Y = _as_vector(Y)
    batch = PosteriorBatch(Y, tau)
    M = batch.draw_matrix(draws, rng)
    dist = np.linalg.norm(M - batch.means[None, :], axis=1)
    p = 1.0 - float(alpha)
    r = float(np.quantile(dist, p))
    h = min(float(alpha) / 2.0, 0.02)
    spread = float(np.quantile(dist, p + h) - np.quantile(dist, p - h))
    dens = spread / (2.0 * h) if spread > 0 else math.inf
    mc_se = math.sqrt(p * (1.0 - p) / draws) * dens
    return r, mc_se


def ball_radius_approx(Y, tau, alpha):
    """Moment-based ball radius: sum of variances plus a z-multiple of
    the standard deviation of ||theta - mean||^2. No sampling; useful as
    a cheap cross-check, not a replacement for the Monte Carlo radius.
    """
    Y = _as_vector(Y)
    t = tau.tau if isinstance(tau, GlobalScale) else float(tau)
    v = posterior_variance(Y, t)
    mu4 = posterior_fourth_central(Y, t)
    total = float(np.sum(v))
    sd = math.sqrt(max(float(np.sum(mu4 - v * v)), 0.0))
    return math.sqrt(max(total + ndtri(1.0 - float(alpha)) * sd, 0.0))


def credible_ball(Y, tau, alpha, L, draws, rng, method="mc"):
    """Credible ball centered at the posterior mean vector.

    method="mc" is the defining Monte Carlo construction; method="approx"
    uses the moment radius and is flagged on the result.
    """
    if L <= 0.0:
        raise ValueError(f"blow-up factor must be positive, got {L}")
    Y = _as_vector(Y)
    batch = PosteriorBatch(Y, tau)
    if method == "approx":
        r = ball_radius_approx(Y, tau, alpha)
        return CredibleBall(
            center=batch.means, radius=float(L) * r, alpha=float(alpha),
            blowup_L=float(L), mc_draws=0, mc_se=0.0, approx=True,
        )
    if method != "mc":
        raise ValueError(f"unknown ball method {method!r}")
    r, se = ball_radius(Y, tau, alpha, draws, rng)
    return CredibleBall(
        center=batch.means, radius=float(L) * r, alpha=float(alpha),
        blowup_L=float(L), mc_draws=int(draws), mc_se=float(L) * se,
    )


def _region_split(theta0, small_hi, med_lo, med_hi, large_lo):
    a = np.abs(np.asarray(theta0, dtype=float).ravel())
    labels = np.full(a.shape, RegionLabel.UNCLASSIFIED, dtype=object)
    labels[a <= small_hi] = RegionLabel.SMALL
    labels[(a >= med_lo) & (a <= med_hi)] = RegionLabel.MEDIUM
    labels[a >= large_lo] = RegionLabel.LARGE
    return list(labels)


def classify_regions(theta0, tau, kS=1.0, kM=0.9, kL=1.1, f=2.0):
    """Label coordinates as small/medium/large relative to the scale tau."""
    t = tau.tau if isinstance(tau, GlobalScale) else float(tau)
    if kS <= 0.0 or f <= 0.0:
        raise ValueError("kS and f must be positive")
    if not kM < 1.0:
        raise ValueError(f"medium cutoff must satisfy kM < 1, got {kM}")
    if not kL > 1.0:
        raise ValueError(f"large cutoff must satisfy kL > 1, got {kL}")
    if f * t <= kS * t:
        raise ValueError(
            f"regions overlap: medium floor f*tau = {f * t:.4g} does not exceed "
            f"small ceiling kS*tau = {kS * t:.4g}"
        )
    z = zeta(t)
    return _region_split(theta0, kS * t, f * t, kM * z, kL * z)


def classify_regions_adaptive(theta0, n, p, kS=1.0, kM=0.9, kL=1.1, f=2.0):
    """Same labeling with boundaries tied to the sparsity rate (p of n)."""
    if kS <= 0.0 or f <= 0.0:
        raise ValueError("kS and f must be positive")
    if not kM < 1.0:
        raise ValueError(f"medium cutoff must satisfy kM < 1, got {kM}")
    if not kL > 1.0:
        raise ValueError(f"large cutoff must satisfy kL > 1, got {kL}")
    tn = SparsityRate(n=n, p=p).tau_n
    if f * tn <= kS / n:
        raise ValueError(
            f"regions overlap: medium floor f*tau_n = {f * tn:.4g} does not exceed "
            f"small ceiling kS/n = {kS / n:.4g}"
        )
    med_hi = kM * math.sqrt(2.0 * math.log(1.0 / tn))
    large_lo = kL * math.sqrt(2.0 * math.log(n))
    return _region_split(theta0, kS / n, f * tn, med_hi, large_lo)


def _count_at_least(sorted_abs, thr):
    # exceedance count; a zero threshold counts strictly positive entries
    if thr <= 0.0:
        return int(np.sum(sorted_abs > 0.0))
    return int(sorted_abs.size - np.searchsorted(sorted_abs, thr, side="left"))


def self_similar_check(theta0, p, A=2.0, Cs=1.0):
    """True when at least p/Cs coordinates clear the A-scaled threshold."""
    if not A > 1.0:
        raise ValueError(f"need A > 1, got {A}")
    if not Cs >= 1.0:
        raise ValueError(f"need Cs >= 1, got {Cs}")
    a = np.sort(np.abs(_as_vector(theta0, "theta0")))
    n = a.size
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got p={p}")
    thr = A * math.sqrt(2.0 * math.log(n / p)) if p < n else 0.0
    return _count_at_least(a, thr) >= p / Cs


def excessive_bias_diagnostic(theta0, A=2.0, Cs=1.0, C=None):
    """Smallest q whose tail energy and exceedance count both pass.

    Scans q = 1..n for sum of squares below the q-th threshold at most
    C*q*log(n/q) while at least q/Cs coordinates clear it; reports the
    exceedance count p_tilde at that q.
    """
    if not A > 1.0:
        raise ValueError(f"need A > 1, got {A}")
    if Cs <= 0.0:
        raise ValueError(f"need Cs > 0, got {Cs}")
    if C is None:
        C = 2.0 * A * A
    if C <= 0.0:
        raise ValueError(f"need C > 0, got {C}")
    theta0 = _as_vector(theta0, "theta0")
    a = np.sort(np.abs(theta0))
    n = a.size
    sq = np.concatenate([[0.0], np.cumsum(a * a)])
    constants = {"A": float(A), "Cs": float(Cs), "C": float(C)}
    for q in range(1, n + 1):
        log_ratio = math.log(n / q)
        thr = A * math.sqrt(2.0 * log_ratio) if q < n else 0.0
        count = _count_at_least(a, thr)
        if count < q / Cs:
            continue
        below = int(np.searchsorted(a, thr, side="left"))
        if sq[below] <= C * q * log_ratio:
            return ExcessiveBiasReport(satisfied=True, q=q, p_tilde=count, constants=constants)
    return ExcessiveBiasReport(satisfied=False, q=None, p_tilde=0, constants=constants)


def region_blowups(alpha, gamma, k_small=1.0):
    """Blow-up factors at which small and large coordinates reach their
    target coverage, as functions of the coverage shortfall gamma. The
    medium region is the one that stays uncovered at any fixed factor.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    z_a = ndtri(1.0 - alpha)
    zg = zeta(gamma / 2.0)
    L_small = (2.1 / z_a) * (k_small + (2.0 / gamma) * zg)
    L_large = (1.1 / z_a) * zg
    return L_small, L_large
