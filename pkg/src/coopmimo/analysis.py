"""Closed-form SINR statistics, outage CDF, and outage-constrained rates.

In the large-antenna limit the post-detection SINR of the target user
collapses to a deterministic functional of the interference field: a sum of
pathloss/shadowing terms over every user the detector does *not* estimate,
scaled by how much of the frame is usable as training. Over random user
placements that sum is a shot-noise variable; its mean and variance follow
from the density of the field (Campbell's theorem), which turns the outage
probability into a Gaussian tail and rate adaptation into inverting that
tail.

Lengths are metres, gains are unitless large-scale power ratios, SINR is
linear (not dB).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .channel import FrameConfig
from .errors import ConfigError, NumericalError, ThresholdUndefinedError
from .geometry import RegionSpec, UserDrop, hex_area, shadowing_moment

_SQRT2 = math.sqrt(2.0)
_DB_LN = math.log(10.0) / 10.0  # d/dB of the natural-log shadowing exponent
_EXP_CLIP = 700.0               # exp() overflow guard


# --------------------------------------------------------------------------
# Gaussian tail
# --------------------------------------------------------------------------

def q_function(x):
    """Standard normal upper-tail probability (vectorized)."""
    arr = np.asarray(x, dtype=float)
    out = 0.5 * erfc(arr / _SQRT2)
    return out if arr.ndim else float(out)


def q_inverse(prob: float) -> float:
    """Inverse of :func:`q_function` on (0, 1), by bracketed root finding."""
    if not 0.0 < prob < 1.0:
        raise ConfigError(f"tail probability must be in (0, 1), got {prob}")
    return brentq(lambda x: q_function(x) - prob, -40.0, 40.0, xtol=1e-12)


# --------------------------------------------------------------------------
# large-antenna SINR functional
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticSinr:
    """Deterministic-equivalent SINR for one placement of interferers."""

    sinr: float
    interference: float
    phi_size: int
    known_len: int
    unbounded: bool


def asymptotic_sinr(target_rho: float, interferer_rho, phi_size: int,
                    known_len: int, m_antennas: int) -> AsymptoticSinr:
    """Large-antenna SINR given the gains of the unestimated interferers.

    Each interferer contributes a direct term (suppressed by the antenna
    count) and a contamination term (suppressed by the training length);
    the total is inflated by the training overhead ``phi_size/known_len``.
    """
    if not target_rho > 0:
        raise ConfigError(f"target gain must be positive, got {target_rho}")
    if known_len < 1 or m_antennas < 1 or phi_size < 1:
        raise ConfigError("phi_size, known_len and m_antennas must be >= 1")
    rho = np.asarray(interferer_rho, dtype=float).ravel()
    ratio = rho / target_rho
    total = float(np.sum(ratio / m_antennas + ratio ** 2 / known_len))
    load = phi_size / known_len + 1.0
    if total == 0.0:
        return AsymptoticSinr(math.inf, 0.0, phi_size, known_len, True)
    return AsymptoticSinr(1.0 / (load * total), total, phi_size, known_len,
                          False)


def drop_asymptotic_sinr(drop: UserDrop, config: FrameConfig, block: int,
                         mode: str = "coop") -> AsymptoticSinr:
    """Evaluate the SINR functional on a sampled drop, block by block.

    Uses the drop's actual estimated set: the target cell's members, plus —
    on cooperative blocks — every pilot-bearing user within the cooperation
    radius.
    """
    if mode not in ("coop", "baseline"):
        raise ConfigError(f"mode must be 'coop' or 'baseline', got {mode!r}")
    if not 1 <= block <= config.n_blocks:
        raise ConfigError(f"block outside 1..{config.n_blocks}: {block}")
    if drop.target_index is None:
        raise ConfigError("drop has no designated target user")
    i = block - 1
    members = drop.members(0)
    if mode == "baseline" or i < config.backhaul_delay:
        known = members
        l_dag = config.known_len(i)
    else:
        known = np.concatenate(
            [members, drop.coop_members(config.coop_radius)])
        l_dag = config.delayed_len(i)
    outside = np.setdiff1d(np.arange(drop.n_users), known,
                           assume_unique=False)
    return asymptotic_sinr(float(drop.rho[drop.target_index, 0]),
                           drop.rho[outside, 0], int(known.size), l_dag,
                           config.m_antennas)


# --------------------------------------------------------------------------
# analytic interference statistics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SinrStats:
    """First two moments of the interference functional for one block.

    ``phi_size`` is the (expected) number of estimated users, ``known_len``
    the training window; together they set the overhead in
    :attr:`load_factor`. ``mean_tail``/``variance_tail`` hold the
    closed-form remainder of the moment integrals beyond ``r_max`` —
    diagnostics for how much the truncation left out (the literal variance
    mode has no convergent remainder; see :func:`interference_stats`).
    """

    mean: float
    variance: float
    phi_size: float
    known_len: int
    target_rho: float
    block: int = 0
    provenance: str = "analytic"
    variance_mode: str = "campbell"
    region: str = ""
    r_max: float = 0.0
    mean_tail: float = 0.0
    variance_tail: float = 0.0

    @property
    def load_factor(self) -> float:
        return self.phi_size / self.known_len + 1.0


def interference_stats(config: FrameConfig, cell_radius: float,
                       density: float, target_distance: float, block: int,
                       mode: str = "coop", *, r_max: float | None = None,
                       target_rho: float | None = None,
                       variance_mode: str = "campbell",
                       n_radial: int = 256,
                       n_angular: int = 128) -> SinrStats:
    """Moments of the interference functional under a uniform user field.

    The unestimated interferers form a Poisson field of intensity
    ``density`` outside the estimated zone: the serving hexagon before
    cooperation kicks in, the whole cooperation disk afterwards. The mean
    averages each point's pathloss/contamination contribution over the
    lognormal shadowing; the variance comes in two flavours:

    * ``"campbell"`` (default) — the shot-noise variance of the marked
      field, i.e. the density-weighted integral of the second moment of a
      single point's contribution;
    * ``"literal"`` — an alternative closed form that squares the
      mean-marked integrand and subtracts the squared mean. Its second
      term degenerates to a near-constant over the plane, so the result is
      orders of magnitude too large (and its beyond-``r_max`` remainder
      diverges, reported as ``variance_tail = inf``). Kept selectable for
      comparison runs.
    """
    if mode not in ("coop", "baseline"):
        raise ConfigError(f"mode must be 'coop' or 'baseline', got {mode!r}")
    if not 1 <= block <= config.n_blocks:
        raise ConfigError(f"block outside 1..{config.n_blocks}: {block}")
    if variance_mode not in ("campbell", "literal"):
        raise ConfigError(
            f"variance_mode must be 'campbell' or 'literal', "
            f"got {variance_mode!r}")
    if not (np.isfinite(density) and density >= 0):
        # zero is legal: an empty interferer field is the degenerate case
        # where the SINR piles up at infinity and every CDF value is 0
        raise ConfigError(f"density must be >= 0, got {density}")
    if not target_distance > 0:
        raise ConfigError(
            f"target_distance must be positive, got {target_distance}")
    if r_max is None:
        r_max = 20.0 * cell_radius

    i = block - 1
    if mode == "baseline" or i < config.backhaul_delay:
        region = RegionSpec.outside_cell(cell_radius, r_max, n_radial,
                                         n_angular)
        l_dag = config.known_len(i)
        phi = 1.0 + density * hex_area(cell_radius)
    else:
        if config.coop_radius < cell_radius:
            raise ConfigError(
                "cooperation radius smaller than the cell circumradius: "
                "the annular interference region does not apply")
        region = RegionSpec.outside_radius(config.coop_radius, r_max,
                                           n_radial, n_angular)
        l_dag = config.delayed_len(i)
        phi = 1.0 + density * math.pi * config.coop_radius ** 2

    sigma = config.pathloss_exp
    theta = config.shadow_std_db
    rho_t = target_distance ** (-sigma) if target_rho is None else target_rho
    if not rho_t > 0:
        raise ConfigError(f"target gain must be positive, got {rho_t}")
    e1, e2, e3, e4 = (shadowing_moment(k, theta) for k in (1, 2, 3, 4))
    g = 1.0 / (config.m_antennas * rho_t)
    h = 1.0 / (l_dag * rho_t ** 2)

    def _mean_fn(pts):
        pl = np.hypot(pts[:, 0], pts[:, 1]) ** (-sigma)
        return density * (e1 * g * pl + e2 * h * pl ** 2)

    mean = region.integrate(_mean_fn)
    mean_tail = density * (e1 * g * region.tail_factor(sigma)
                           + e2 * h * region.tail_factor(2 * sigma))

    if variance_mode == "campbell":
        def _var_fn(pts):
            pl = np.hypot(pts[:, 0], pts[:, 1]) ** (-sigma)
            return density * (e2 * (g * pl) ** 2
                              + 2 * e3 * g * h * pl ** 3
                              + e4 * (h * pl ** 2) ** 2)

        variance = region.integrate(_var_fn)
        variance_tail = density * (
            e2 * g * g * region.tail_factor(2 * sigma)
            + 2 * e3 * g * h * region.tail_factor(3 * sigma)
            + e4 * h * h * region.tail_factor(4 * sigma))
    else:
        ln_var = 2.0 * (_DB_LN * theta) ** 2

        def _var_fn(pts):
            pl = np.hypot(pts[:, 0], pts[:, 1]) ** (-sigma)
            bracket = e1 * g * pl + np.exp(
                np.minimum(ln_var * pl ** 2, _EXP_CLIP)) * h
            return density * bracket ** 2

        variance = region.integrate(_var_fn) - mean ** 2
        variance_tail = math.inf

    return SinrStats(mean=mean, variance=variance, phi_size=phi,
                     known_len=l_dag, target_rho=rho_t, block=block,
                     provenance="analytic", variance_mode=variance_mode,
                     region=region.kind, r_max=float(r_max),
                     mean_tail=mean_tail, variance_tail=variance_tail)


# --------------------------------------------------------------------------
# outage CDF and rate adaptation
# --------------------------------------------------------------------------

def sinr_cdf(stats: SinrStats, thresholds):
    """P[SINR < t] under the Gaussian model of the interference functional.

    Zero variance degenerates to a unit step at ``1 / (load * mean)``.
    """
    if stats.variance < 0:
        raise NumericalError(
            f"negative variance in SINR stats: {stats.variance}")
    t = np.asarray(thresholds, dtype=float)
    out = np.zeros(t.shape if t.ndim else (1,), dtype=float)
    flat_t = np.atleast_1d(t)
    pos = flat_t > 0
    inv = 1.0 / (flat_t[pos] * stats.load_factor)
    if stats.variance == 0.0:
        out[pos] = (inv < stats.mean).astype(float)
    else:
        out[pos] = q_function((inv - stats.mean) / math.sqrt(stats.variance))
    return out.reshape(t.shape) if t.ndim else float(out[0])


@dataclass(frozen=True)
class RatePlan:
    """Outage-constrained transmission choice for one block."""

    threshold: float
    rate: float
    epsilon: float
    block: int
    stats: SinrStats = field(repr=False)


def rate_threshold(stats: SinrStats, epsilon: float) -> RatePlan:
    """Largest SINR threshold whose outage stays below ``epsilon``.

    Raises :class:`ThresholdUndefinedError` when the Gaussian quantile
    crosses zero — the requested outage is unreachable at these stats.
    """
    if stats.variance < 0:
        raise NumericalError(
            f"negative variance in SINR stats: {stats.variance}")
    quantile = q_inverse(epsilon)
    core = quantile * math.sqrt(stats.variance) + stats.mean
    if core <= 0.0:
        raise ThresholdUndefinedError(
            f"outage target {epsilon} is unreachable: quantile "
            f"{quantile:.4f} drives the interference percentile to "
            f"{core:.3e}")
    threshold = 1.0 / (core * stats.load_factor)
    return RatePlan(threshold=threshold, rate=math.log2(1.0 + threshold),
                    epsilon=epsilon, block=stats.block, stats=stats)


# --------------------------------------------------------------------------
# empirical distribution helpers
# --------------------------------------------------------------------------

def ks_distance(samples, cdf) -> float:
    """Kolmogorov–Smirnov distance between samples and a model CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ConfigError("ks_distance needs at least one sample")
    model = np.asarray(cdf(x), dtype=float)
    steps = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(np.abs(steps - model),
                                   np.abs(steps - 1.0 / n - model))))
