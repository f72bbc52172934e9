"""Frame structure, pilot books, and physical-layer signal generation.

Units and scaling convention (used consistently by the whole package):

* The channel matrix column for user u is CN(0, rho_u I) with ``rho`` the raw
  large-scale gain from :mod:`coopmimo.geometry` — no transmit power folded in.
* Every transmitted symbol, pilot or data, has per-symbol power
  ``tx_power_watts``; thermal noise has per-sample power ``noise_power_watts``.
* Estimation and detection normalize the received signal by the noise standard
  deviation once at entry, after which the only power that appears is the
  unitless ratio ``snr_scale = tx_power_watts / noise_power_watts``.

All closed-form expressions elsewhere in the package are written against the
normalized domain, which is why they never mention watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import STREAM_CHANNELS, make_rng
from .errors import ConfigError
from .geometry import UserDrop


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def noise_power_watts(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power over a bandwidth from a PSD in dBm/Hz."""
    return dbm_to_watts(psd_dbm_hz) * bandwidth_hz


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# --------------------------------------------------------------------------
# pilots
# --------------------------------------------------------------------------

def zadoff_chu(root: int, length: int) -> np.ndarray:
    """Unit-amplitude Zadoff–Chu sequence z[n] = exp(-j pi root n(n+1)/L).

    ``length`` must be an odd prime so that (a) every root 1..L-1 is coprime
    to L and (b) any two distinct roots have flat cross-correlation of
    magnitude sqrt(L). Cyclic shifts of a single root are exactly orthogonal.
    """
    if not (_is_prime(length) and length % 2 == 1):
        raise ConfigError(f"pilot length must be an odd prime, got {length}")
    if not 1 <= root < length:
        raise ConfigError(f"root must be in 1..{length - 1}, got {root}")
    n = np.arange(length)
    return np.exp(-1j * math.pi * root * n * (n + 1) / length)


@dataclass(frozen=True)
class PilotBook:
    """Per-cell pilot roots with per-user cyclic shifts.

    Cell c uses root c+1; user k inside the cell gets the k-symbol cyclic
    shift, so a cell supports up to ``pilot_len`` users with exactly
    orthogonal pilots, and any two cells stay at the flat sqrt(L)
    cross-correlation floor regardless of shifts.
    """

    pilot_len: int
    n_cells: int
    _base: np.ndarray = field(repr=False)  # (n_cells, pilot_len)

    def pilot(self, cell: int, shift: int) -> np.ndarray:
        if not 0 <= cell < self.n_cells:
            raise ConfigError(f"cell {cell} outside 0..{self.n_cells - 1}")
        if not 0 <= shift < self.pilot_len:
            raise ConfigError(f"shift {shift} outside 0..{self.pilot_len - 1}")
        return np.roll(self._base[cell], shift)


def build_pilot_book(n_cells: int, pilot_len: int, validate: bool = True) -> PilotBook:
    if n_cells < 1:
        raise ConfigError(f"need at least one cell, got {n_cells}")
    if n_cells > pilot_len - 1:
        raise ConfigError(
            f"{n_cells} cells need {n_cells} distinct roots; a length-"
            f"{pilot_len} book only has {pilot_len - 1}")
    base = np.stack([zadoff_chu(c + 1, pilot_len) for c in range(n_cells)])
    book = PilotBook(pilot_len=pilot_len, n_cells=n_cells, _base=base)
    if validate:
        _validate_pilot_book(book)
    return book


def _validate_pilot_book(book: PilotBook) -> None:
    """Exhaustive gram check: every shift of every root against every other."""
    L = book.pilot_len
    shifted = np.stack([np.roll(book._base, s, axis=1) for s in range(L)])
    flat = shifted.reshape(L * book.n_cells, L)  # (shift, cell) pairs
    gram = np.abs(flat.conj() @ flat.T)
    cells = np.tile(np.arange(book.n_cells), L)
    same = cells[:, None] == cells[None, :]
    eye = np.eye(L * book.n_cells, dtype=bool)
    ok_diag = np.allclose(gram[eye], L, rtol=1e-10)
    ok_same = np.all(gram[same & ~eye] < 1e-8 * L)
    ok_cross = np.allclose(gram[~same], math.sqrt(L), rtol=1e-9)
    if not (ok_diag and ok_same and ok_cross):
        raise ConfigError("pilot book failed its orthogonality audit")


# --------------------------------------------------------------------------
# frame configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameConfig:
    """Static parameters of one uplink frame and its radio environment."""

    m_antennas: int
    pilot_len: int
    block_lengths: tuple
    backhaul_delay: int
    coop_radius: float
    tx_power_watts: float
    noise_power_watts: float
    pathloss_exp: float
    shadow_std_db: float
    symbol_error_rate: float = 0.0

    def __post_init__(self):
        if self.m_antennas < 1:
            raise ConfigError(f"m_antennas must be >= 1, got {self.m_antennas}")
        if not (_is_prime(self.pilot_len) and self.pilot_len % 2 == 1):
            raise ConfigError(
                f"pilot_len must be an odd prime, got {self.pilot_len}")
        blocks = tuple(int(b) for b in self.block_lengths)
        if len(blocks) == 0 or any(b < 1 for b in blocks):
            raise ConfigError(f"block_lengths must be positive, got {blocks}")
        object.__setattr__(self, "block_lengths", blocks)
        if self.backhaul_delay < 1:
            raise ConfigError(
                f"backhaul_delay must be >= 1, got {self.backhaul_delay}")
        if not self.coop_radius > 0:
            raise ConfigError(f"coop_radius must be positive, got {self.coop_radius}")
        if not self.tx_power_watts > 0 or not self.noise_power_watts > 0:
            raise ConfigError("transmit and noise powers must be positive")
        if not self.pathloss_exp > 0:
            raise ConfigError(f"pathloss_exp must be positive, got {self.pathloss_exp}")
        if self.shadow_std_db < 0:
            raise ConfigError("shadow_std_db must be >= 0")
        if not 0.0 <= self.symbol_error_rate < 1.0:
            raise ConfigError(
                f"symbol_error_rate must be in [0, 1), got {self.symbol_error_rate}")

    @property
    def n_blocks(self) -> int:
        return len(self.block_lengths)

    @property
    def frame_len(self) -> int:
        return self.pilot_len + sum(self.block_lengths)

    @property
    def snr_scale(self) -> float:
        """Per-symbol transmit power over noise power (the unitless P)."""
        return self.tx_power_watts / self.noise_power_watts

    def known_len(self, blocks_detected: int) -> int:
        """Training length available after detecting this many blocks."""
        if not 0 <= blocks_detected <= self.n_blocks:
            raise ConfigError(f"blocks_detected outside 0..{self.n_blocks}")
        return self.pilot_len + sum(self.block_lengths[:blocks_detected])

    def delayed_len(self, blocks_detected: int) -> int:
        """Training length a cooperating BS has, lagging by the backhaul delay."""
        return self.known_len(max(0, blocks_detected - self.backhaul_delay))

    def block_span(self, block: int) -> slice:
        """Column span of 1-based data block ``block`` inside the frame."""
        if not 1 <= block <= self.n_blocks:
            raise ConfigError(f"block must be in 1..{self.n_blocks}, got {block}")
        start = self.known_len(block - 1)
        return slice(start, start + self.block_lengths[block - 1])


# --------------------------------------------------------------------------
# channel realizations
# --------------------------------------------------------------------------

class ChannelRealization:
    """Channels, symbols, and noise for one frame at the target BS.

    ``symbols`` holds what users actually transmit (physical amplitude);
    ``reported()`` is what re-estimation gets to reuse — identical under
    genie reconstruction, symbol errors injected at the configured rate
    otherwise.
    """

    def __init__(self, channels: np.ndarray, symbols: np.ndarray,
                 noise: np.ndarray, reported_symbols: np.ndarray | None = None):
        self.channels = channels
        self.symbols = symbols
        self.noise = noise
        self._reported = reported_symbols
        self._received = None

    def received(self) -> np.ndarray:
        if self._received is None:
            self._received = self.channels @ self.symbols + self.noise
        return self._received

    def reported(self) -> np.ndarray:
        return self.symbols if self._reported is None else self._reported


def sample_channels(drop: UserDrop, config: FrameConfig, seed: int,
                    index: int = 0) -> ChannelRealization:
    """Draw one frame's channels, symbols, and noise for a user drop.

    Draw order is fixed (channels, data symbols, noise, then symbol-error
    positions) so results are reproducible and comparisons across detector
    variants can share a realization.
    """
    rng = make_rng(seed, STREAM_CHANNELS, index)
    n = drop.n_users
    M, T, Lp = config.m_antennas, config.frame_len, config.pilot_len
    amp = math.sqrt(config.tx_power_watts)

    def cgauss(size):
        # unit-variance circular complex Gaussian
        re = rng.standard_normal(size)
        im = rng.standard_normal(size)
        return (re + 1j * im) / math.sqrt(2.0)

    H = cgauss((M, n)) * np.sqrt(drop.rho[:, 0])[None, :]
    X = cgauss((n, T)) * amp

    book = build_pilot_book(drop.layout.n_bs, Lp, validate=False)
    for u in np.flatnonzero(drop.pilot_bearing):
        X[u, :Lp] = amp * book.pilot(int(drop.cell_index[u]),
                                     int(drop.in_cell_index[u]))

    Z = cgauss((M, T)) * math.sqrt(config.noise_power_watts)

    reported = None
    if config.symbol_error_rate > 0:
        reported = X.copy()
        bearers = np.flatnonzero(drop.pilot_bearing)
        data = slice(Lp, T)
        flips = rng.uniform(size=(bearers.size, T - Lp)) < config.symbol_error_rate
        wrong = cgauss((bearers.size, T - Lp)) * amp
        block = reported[bearers, data]
        block[flips] = wrong[flips]
        reported[bearers, data] = block

    return ChannelRealization(H, X, Z, reported)
