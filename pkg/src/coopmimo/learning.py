"""Online estimation of interference statistics and cross-user transfer.

The rate adapter needs the mean and variance of the interference functional
but the BS may not know the user density or shadowing law. Both moments can
instead be accumulated on the fly from per-frame interference samples
(collected in slots the target cell leaves silent, or evaluated directly
from the sampled geometry), each normalized by the training-overhead factor
of the frame it came from. A running-moment recursion keeps O(1) state.

Once learned for three reference users, the moments transfer to any other
user of the same cell: both are short polynomials in the inverse of the
target's own large-scale gain, so two (mean) or three (second moment)
reference users pin the coefficients down through small linear solves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import STREAM_MEASURE, make_rng
from .analysis import SinrStats, drop_asymptotic_sinr
from .channel import FrameConfig, sample_channels
from .detector import FrameResult, run_frame
from .errors import ConfigError, IllConditionedError, NumericalError
from .geometry import DensityMap, NetworkLayout, UserDrop, \
    plant_target_user, sample_user_drop

_COND_LIMIT = 1e12


# --------------------------------------------------------------------------
# running moments
# --------------------------------------------------------------------------

@dataclass
class LearnerState:
    """Running mean/variance of overhead-normalized interference samples.

    The variance recursion deliberately differences each sample against the
    *previous* running mean and divides by ``count - 1``; it telescopes to
    sum_j (x_j - mean_{j-1})^2 / (n - 1), which is consistent but not equal
    to the textbook sample variance. The first sample sets the mean and
    leaves the variance pinned at zero (the recursion is undefined there).
    """

    count: int = 0
    mean: float = 0.0
    variance: float = 0.0

    def update(self, value: float, load_factor: float = 1.0) -> None:
        if not (np.isfinite(load_factor) and load_factor > 0):
            raise ConfigError(
                f"load_factor must be positive, got {load_factor}")
        sample = value / load_factor
        n = self.count + 1
        if n > 1:
            self.variance = ((n - 2) / (n - 1)) * self.variance \
                + (sample - self.mean) ** 2 / (n - 1)
        self.mean = ((n - 1) / n) * self.mean + sample / n
        self.count = n


# --------------------------------------------------------------------------
# silent-slot probing
# --------------------------------------------------------------------------

def _cgauss(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape)
            + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def measure_silent_interference(drop: UserDrop, config: FrameConfig,
                                result: FrameResult, block: int, seed: int,
                                index: int = 0, mute: str = "cell",
                                include_noise: bool = True) -> float:
    """One interference-power sample from a slot the target leaves silent.

    Everyone outside the muted set transmits one fresh symbol over a fresh
    fading realization; the BS applies the detector row it used for
    ``block`` and normalizes the captured power by the block's realized
    signal power, landing the sample in the same units as the SINR
    denominator terms. Muting the whole serving cell (``"cell"``) keeps
    own-cell leakage out of the sample; ``"user"`` silences only the target.

    The gaussian draws depend only on ``(seed, index)`` and the user count
    — never on the muted set — so the two mute policies see identical
    channels, symbols and noise and differ exactly by the extra silenced
    users' contribution. ``include_noise=False`` drops the thermal term
    (diagnostic runs).
    """
    if not 1 <= block <= len(result.records):
        raise ConfigError(f"block outside 1..{len(result.records)}: {block}")
    if mute not in ("cell", "user"):
        raise ConfigError(f"mute must be 'cell' or 'user', got {mute!r}")
    rec = result.records[block - 1]
    if not rec.signal > 0:
        raise NumericalError("degenerate block: zero realized signal power")
    if mute == "cell":
        silenced = drop.members(0)
    else:
        if drop.target_index is None:
            raise ConfigError("drop has no designated target user")
        silenced = np.array([drop.target_index])

    rng = make_rng(seed, STREAM_MEASURE, index)
    m = config.m_antennas
    p = config.snr_scale
    h = _cgauss(rng, m, drop.n_users) * np.sqrt(drop.rho[:, 0])[None, :]
    symbols = _cgauss(rng, drop.n_users) * math.sqrt(p)
    noise = _cgauss(rng, m) if include_noise else np.zeros(m, dtype=complex)
    symbols[silenced] = 0.0
    y = h @ symbols + noise
    z = result.target_rows[block - 1]
    return float(np.abs(np.vdot(z, y)) ** 2) / (p * rec.signal)


# --------------------------------------------------------------------------
# learning campaigns
# --------------------------------------------------------------------------

@dataclass
class LearningResult:
    """Per-block outcome of a learning campaign with its convergence trace."""

    stats: SinrStats
    mean_trace: np.ndarray
    var_trace: np.ndarray
    measurement: str
    mute: str
    mode: str
    block: int
    state: LearnerState = field(repr=False, default_factory=LearnerState)


def drop_stream(layout: NetworkLayout, density: DensityMap,
                config: FrameConfig, target_distance: float, seed: int,
                r_max: float | None = None, pilot_limit: int | None = None):
    """Endless generator of fresh drops with the target planted, one per
    frame."""
    if not target_distance > 0:
        raise ConfigError(
            f"target_distance must be positive, got {target_distance}")
    if r_max is None:
        r_max = 20.0 * layout.cell_radius
    n = 0
    while True:
        drop = sample_user_drop(
            layout, density, seed=seed, r_max=r_max,
            pathloss_exp=config.pathloss_exp,
            shadow_std_db=config.shadow_std_db, pilot_limit=pilot_limit,
            index=n)
        yield plant_target_user(drop, layout, target_distance)
        n += 1


def run_learning_campaign(drops, config: FrameConfig, blocks, n_iters: int,
                          *, seed: int = 0, mode: str = "coop",
                          measurement: str = "functional",
                          mute: str = "cell") -> dict:
    """Accumulate interference moments per block over a stream of drops.

    ``drops`` is any iterable of target-planted :class:`UserDrop` (use
    :func:`drop_stream` for the usual fresh-drop-per-frame campaign); each
    drop feeds one overhead-normalized sample per requested block:

    * ``measurement="functional"`` evaluates the large-antenna interference
      functional of the drop directly — the fast path, unbiased for both
      moments;
    * ``measurement="detector"`` runs the full per-frame detector once per
      drop and takes physical silent-slot power samples (slow; carries the
      residual biases of a real probe, e.g. own-cell leakage left out by
      whole-cell muting).

    Returns ``{block: LearningResult}``.
    """
    if n_iters < 1:
        raise ConfigError(f"n_iters must be >= 1, got {n_iters}")
    if measurement not in ("functional", "detector"):
        raise ConfigError(
            f"measurement must be 'functional' or 'detector', "
            f"got {measurement!r}")
    if mute not in ("cell", "user"):
        raise ConfigError(f"mute must be 'cell' or 'user', got {mute!r}")
    block_list = sorted(set(int(b) for b in np.atleast_1d(blocks)))
    if not block_list:
        raise ConfigError("blocks must name at least one block")
    for b in block_list:
        if not 1 <= b <= config.n_blocks:
            raise ConfigError(f"block outside 1..{config.n_blocks}: {b}")

    states = {b: LearnerState() for b in block_list}
    mean_trace = {b: np.empty(n_iters) for b in block_list}
    var_trace = {b: np.empty(n_iters) for b in block_list}
    phi_sum = {b: 0.0 for b in block_list}
    l_dag = {b: config.known_len(b - 1) for b in block_list}
    target_rho = math.nan
    r_max = 0.0

    it = iter(drops)
    for n in range(n_iters):
        try:
            drop = next(it)
        except StopIteration:
            raise ConfigError(
                f"drop stream exhausted after {n} of {n_iters} frames"
            ) from None
        target_rho = float(drop.rho[drop.target_index, 0]) \
            if drop.target_index is not None else math.nan
        r_max = drop.r_max
        if measurement == "functional":
            for b in block_list:
                probe = drop_asymptotic_sinr(drop, config, b, mode)
                load = probe.phi_size / probe.known_len + 1.0
                states[b].update(load * probe.interference, load)
                phi_sum[b] += probe.phi_size
                l_dag[b] = probe.known_len
                mean_trace[b][n] = states[b].mean
                var_trace[b][n] = states[b].variance
        else:
            realization = sample_channels(drop, config, seed, index=n)
            frame = run_frame(drop, config, mode=mode,
                              realization=realization)
            for b in block_list:
                rec = frame.records[b - 1]
                sample = measure_silent_interference(
                    drop, config, frame, b, seed=seed,
                    index=n * (config.n_blocks + 1) + b, mute=mute)
                load = rec.phi_size / rec.l_dagger + 1.0
                states[b].update(sample, load)
                phi_sum[b] += rec.phi_size
                l_dag[b] = rec.l_dagger
                mean_trace[b][n] = states[b].mean
                var_trace[b][n] = states[b].variance

    out = {}
    for b in block_list:
        stats = SinrStats(
            mean=states[b].mean, variance=states[b].variance,
            phi_size=phi_sum[b] / n_iters, known_len=l_dag[b],
            target_rho=target_rho, block=b, provenance="learned",
            region="sampled", r_max=float(r_max))
        out[b] = LearningResult(
            stats=stats, mean_trace=mean_trace[b], var_trace=var_trace[b],
            measurement=measurement, mute=mute, mode=mode, block=b,
            state=states[b])
    return out


# --------------------------------------------------------------------------
# cross-user extrapolation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UserStatsTriple:
    """Learned (gain, mean, variance) records of three same-cell users."""

    user_index: tuple
    rho: tuple
    mean: tuple
    variance: tuple

    def __post_init__(self):
        for name in ("user_index", "rho", "mean", "variance"):
            vals = tuple(getattr(self, name))
            if len(vals) != 3:
                raise ConfigError(f"{name} must have three entries")
            object.__setattr__(self, name, vals)
        rho = np.asarray(self.rho, dtype=float)
        if not (np.all(np.isfinite(rho)) and np.all(rho > 0)):
            raise ConfigError(f"gains must be positive, got {self.rho}")
        if np.unique(rho).size != 3:
            raise ConfigError(
                f"reference gains must be pairwise distinct, got {self.rho}")

    def to_json(self) -> str:
        return json.dumps({
            "user_index": list(self.user_index),
            "rho": list(self.rho),
            "mean": list(self.mean),
            "variance": list(self.variance),
        })

    @classmethod
    def from_json(cls, blob: str) -> "UserStatsTriple":
        raw = json.loads(blob)
        return cls(user_index=tuple(raw["user_index"]),
                   rho=tuple(raw["rho"]), mean=tuple(raw["mean"]),
                   variance=tuple(raw["variance"]))


@dataclass(frozen=True)
class Extrapolation:
    """Moments transferred to a new gain, with the solve conditioning."""

    mean: float
    variance: float
    condition: float


def solve_stats_transfer(rho_known, mean_known, var_known,
                         rho_target: float) -> Extrapolation:
    """Solve the two transfer systems and evaluate at ``rho_target``.

    The mean is a/rho + b/rho^2 (the first two reference users fix a, b);
    the second moment is c2/rho^2 + c3/rho^3 + c4/rho^4 (all three fix the
    c's). Reference gains are rescaled by their geometric mean before
    solving, so the reported conditioning reflects their spread rather than
    their absolute scale.
    """
    rho = np.asarray(rho_known, dtype=float).ravel()
    means = np.asarray(mean_known, dtype=float).ravel()
    variances = np.asarray(var_known, dtype=float).ravel()
    if rho.shape != (3,) or means.shape != (3,) or variances.shape != (3,):
        raise ConfigError("stats transfer needs exactly three reference "
                          "users (gains, means, variances)")
    if not (np.all(np.isfinite(rho)) and np.all(rho > 0)):
        raise ConfigError(f"reference gains must be positive, got {rho}")
    if not rho_target > 0:
        raise ConfigError(f"target gain must be positive, got {rho_target}")
    if np.unique(rho).size != 3:
        raise ConfigError(f"reference gains must be distinct, got {rho}")

    scale = float(np.exp(np.mean(np.log(rho))))
    t = rho / scale
    t_k = rho_target / scale

    mean_sys = np.stack([1.0 / t[:2], 1.0 / t[:2] ** 2], axis=1)
    var_sys = np.stack([1.0 / t ** 2, 1.0 / t ** 3, 1.0 / t ** 4], axis=1)
    condition = max(np.linalg.cond(mean_sys), np.linalg.cond(var_sys))
    if not condition <= _COND_LIMIT:
        raise IllConditionedError(
            f"reference gains too spread out: condition {condition:.3e}")

    ab = np.linalg.solve(mean_sys, means[:2])
    c = np.linalg.solve(var_sys, variances + means ** 2)
    mean_k = ab[0] / t_k + ab[1] / t_k ** 2
    second_k = c[0] / t_k ** 2 + c[1] / t_k ** 3 + c[2] / t_k ** 4
    return Extrapolation(mean=float(mean_k),
                         variance=float(second_k - mean_k ** 2),
                         condition=float(condition))


def extrapolate_stats(triple: UserStatsTriple, rho_target: float,
                      config: FrameConfig, block: int, mode: str = "coop",
                      phi_size: float | None = None) -> SinrStats:
    """Transfer a measured triple to a user with gain ``rho_target``.

    ``phi_size`` (expected estimated-set size) feeds the load factor of the
    returned stats; without it the stats carry no overhead information and
    are unfit for rate planning.
    """
    if mode not in ("coop", "baseline"):
        raise ConfigError(f"mode must be 'coop' or 'baseline', got {mode!r}")
    if not 1 <= block <= config.n_blocks:
        raise ConfigError(f"block outside 1..{config.n_blocks}: {block}")
    i = block - 1
    if mode == "baseline" or i < config.backhaul_delay:
        l_dag = config.known_len(i)
    else:
        l_dag = config.delayed_len(i)
    ex = solve_stats_transfer(triple.rho, triple.mean, triple.variance,
                              rho_target)
    return SinrStats(mean=ex.mean, variance=ex.variance,
                     phi_size=float(phi_size) if phi_size is not None
                     else 0.0,
                     known_len=l_dag, target_rho=float(rho_target),
                     block=block, provenance="extrapolated")
