"""Data-assisted MMSE channel estimation and detection at the target BS.

The per-frame loop alternates between re-estimating channels from everything
detected so far and detecting the next block:

* block 1 is detected from pilot-only estimates;
* before cooperation kicks in (fewer blocks detected than the backhaul
  delay), each further block reuses the cell's own detected data as extra
  pilots;
* afterwards, the BS additionally cancels its own users from the (delayed)
  shared window, estimates the channels of nearby out-of-cell users from the
  residual, and detects with the combined filter.

All kernels here take *normalized* quantities: symbols scaled so the noise
has unit variance and power appears as the unitless ``p_norm`` (see
:mod:`coopmimo.channel` for the convention). ``run_frame`` does that
normalization once at entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelRealization, FrameConfig, sample_channels
from .errors import ConfigError
from .geometry import UserDrop


# --------------------------------------------------------------------------
# estimation / detection kernels (normalized domain)
# --------------------------------------------------------------------------

def q_in_matrix(x_known: np.ndarray, rho_in: np.ndarray, rho_out_sum: float,
                m_antennas: int, p_norm: float) -> np.ndarray:
    """In-cell MMSE estimator: channels = Y[:, :L] @ Q.

    ``x_known`` is the (n1, L) matrix of pilots plus already-detected data of
    the cell's own users; ``rho_out_sum`` the summed large-scale gains of
    everyone else, which enters as a white interference floor.
    """
    x = np.asarray(x_known)
    n1, L = x.shape
    xh_r = x.conj().T * (m_antennas * np.asarray(rho_in))[None, :]  # X^H R
    bracket = xh_r @ x
    bracket[np.diag_indices(L)] += p_norm * m_antennas * rho_out_sum + n1
    return cho_solve(cho_factor(bracket), xh_r)


def incell_error_cov(x_known: np.ndarray, rho_in: np.ndarray,
                     rho_out_sum: float, m_antennas: int,
                     p_norm: float) -> np.ndarray:
    """Residual error covariance sum E[(dH)^H dH] of the in-cell estimate.

    When ``rho_out_sum`` is exactly zero the interference floor in the
    denominator vanishes; the unit-noise term (m_antennas) takes its place
    so the expression stays defined.
    """
    x = np.asarray(x_known)
    n1 = x.shape[0]
    denom = p_norm * m_antennas * rho_out_sum
    if denom == 0.0:
        denom = float(m_antennas)
    bracket = x @ x.conj().T / denom
    bracket[np.diag_indices(n1)] += 1.0 / (m_antennas * np.asarray(rho_in))
    return cho_solve(cho_factor(bracket), np.eye(n1, dtype=complex))


def q_co_matrix(x_intf: np.ndarray, rho_intf: np.ndarray,
                x_in_delayed: np.ndarray, err_in: np.ndarray,
                rho_out_sum: float, m_antennas: int,
                p_norm: float) -> np.ndarray:
    """Cooperative MMSE estimator for nearby out-of-cell users.

    Works on the residual after cancelling the cell's own users from the
    delayed window; the imperfect cancellation re-enters through the in-cell
    error covariance sandwiched between the delayed in-cell symbols.
    """
    x = np.asarray(x_intf)
    nco, L = x.shape
    xh_r = x.conj().T * (m_antennas * np.asarray(rho_intf))[None, :]
    bracket = xh_r @ x
    bracket += x_in_delayed.conj().T @ err_in @ x_in_delayed
    bracket[np.diag_indices(L)] += m_antennas * p_norm * rho_out_sum + nco
    return cho_solve(cho_factor(bracket), xh_r)


def coop_error_cov(x_intf: np.ndarray, rho_intf: np.ndarray,
                   q_co: np.ndarray, m_antennas: int) -> np.ndarray:
    """Posterior error covariance sum of the cooperative estimate.

    Bayesian identity for the linear-Gaussian model the estimator assumes:
    E = M (D - D X Q) with D the prior gain diagonal; positive semidefinite
    with per-user diagonals never exceeding M * rho.
    """
    rho = np.asarray(rho_intf, dtype=float)
    E = -rho[:, None] * (x_intf @ q_co)
    E[np.diag_indices(rho.size)] += rho
    return m_antennas * E


def psi_matrix(h_hat: np.ndarray, delta_total: float, rho_out_sum: float,
               p_norm: float) -> np.ndarray:
    """Receive-filter core: inverse of the modeled received covariance.

    ``delta_total`` is the summed per-antenna estimation-error power of all
    estimated users; ``rho_out_sum`` the summed gains of users the filter
    only knows statistically.
    """
    M = h_hat.shape[0]
    bracket = h_hat @ h_hat.conj().T
    bracket[np.diag_indices(M)] += delta_total + rho_out_sum + 1.0 / p_norm
    return cho_solve(cho_factor(bracket), np.eye(M, dtype=complex))


def mmse_detector(h_hat: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Detection rows, one per estimated user: S = H^H Psi."""
    return h_hat.conj().T @ psi


# --------------------------------------------------------------------------
# per-block results
# --------------------------------------------------------------------------

@dataclass
class BlockSinrRecord:
    """Conditional SINR of the target user for one block, term by term.

    ``signal`` and ``interf_est`` are realized given the channel estimates;
    ``interf_err`` (estimation residuals), ``interf_out`` (users known only
    statistically), and ``noise`` are conditional expectations. ``capped``
    marks the defensive case of a vanishing denominator.
    """

    signal: float
    interf_est: float
    interf_err: float
    interf_out: float
    noise: float
    sinr: float
    capped: bool = False
    block: int = 0
    path: str = ""
    phi_size: int = 0
    l_dagger: int = 0


def sinr_decomposition(psi: np.ndarray, h_hat: np.ndarray, delta_total: float,
                       rho_out_sum: float, rho_out_sq_sum: float,
                       p_norm: float, target_col: int,
                       est_weight_sq: float) -> BlockSinrRecord:
    """Term-by-term conditional SINR of the target user for one block.

    The out-of-set term has two parts. Fresh fading through the realized
    filter contributes ``sum(rho) * ||z||^2``. On top of that, unknown users
    transmitted during the training window, so a slice of each of their
    channels leaks into the target's estimate and stays aligned with them at
    detection time. To first order in the leakage coefficient that alignment
    adds ``p * rho^2 * ||w_1||^2 * tr(Psi)^2 * (1 - s_1)^2`` per unknown
    user, where ``w_1`` is the combining column that produced the target's
    estimate (``est_weight_sq`` its squared norm) and ``s_1`` the realized
    unit-normalized signal amplitude; the factor ``(1 - s_1)`` is how much of
    the leaked direction the filter fails to absorb into the signal path.
    The term fades as the training window grows (``||w_1||^2 ~ 1/(pL)``) and
    scales with the squared gain ratio, which is what makes longer shared
    windows pay off most for weak (cell-edge) targets.
    """
    z = psi @ h_hat[:, target_col]
    w = h_hat.conj().T @ z
    signal = float(np.abs(w[target_col]) ** 2)
    interf_est = float(np.sum(np.abs(w) ** 2) - np.abs(w[target_col]) ** 2)
    zz = float(np.real(np.vdot(z, z)))
    interf_err = delta_total * zz
    leak = float(np.real(np.trace(psi))) * (1.0 - float(np.real(w[target_col])))
    interf_out = rho_out_sum * zz \
        + p_norm * rho_out_sq_sum * est_weight_sq * leak ** 2
    noise = zz / p_norm
    total = interf_est + interf_err + interf_out + noise
    if total > 0.0:
        return BlockSinrRecord(signal, interf_est, interf_err, interf_out,
                               noise, signal / total)
    return BlockSinrRecord(signal, interf_est, interf_err, interf_out,
                           noise, math.inf, capped=True)


@dataclass
class FrameResult:
    """Per-block SINR records and target detector rows for one frame."""

    mode: str
    records: list
    target_rows: list
    realization: ChannelRealization
    config: FrameConfig


# --------------------------------------------------------------------------
# frame loop
# --------------------------------------------------------------------------

def run_frame(drop: UserDrop, config: FrameConfig, mode: str = "coop",
              seed: int = 0, realization: ChannelRealization | None = None,
              interference_override: float | None = None) -> FrameResult:
    """Run the detection loop of one frame at the target BS.

    ``mode`` is "coop" (cancel-and-re-estimate once the backhaul delay has
    elapsed) or "baseline" (data-assisted in-cell estimation only). Passing
    a shared ``realization`` lets both modes see identical channels, symbols
    and noise. ``interference_override`` replaces the out-of-set interference
    level *inside the receive filter only* (a deliberately mismatched
    detector); the reported interference terms keep the true environment so
    records reflect actual conditional performance.
    """
    if mode not in ("coop", "baseline"):
        raise ConfigError(f"mode must be 'coop' or 'baseline', got {mode!r}")
    mem = drop.members(0)
    if mem.size == 0:
        raise ConfigError("target cell has no users to detect")
    if mem.size > config.pilot_len:
        raise ConfigError(
            f"{mem.size} users in the target cell exceed the pilot budget "
            f"({config.pilot_len})")
    if drop.target_index is not None:
        hits = np.flatnonzero(mem == drop.target_index)
        if hits.size != 1:
            raise ConfigError("target user is not a member of cell 0")
        target_col = int(hits[0])
    else:
        target_col = 0

    if realization is None:
        realization = sample_channels(drop, config, seed)

    sigma = math.sqrt(config.noise_power_watts)
    p = config.snr_scale
    M = config.m_antennas

    Yn = realization.received() / sigma
    Xn = realization.reported() / sigma

    rho0 = drop.rho[:, 0]
    rho_in = rho0[mem]
    s_out = float(rho0.sum() - rho_in.sum())
    s2_out = float((rho0 ** 2).sum() - (rho_in ** 2).sum())
    if mode == "coop":
        co = drop.coop_members(config.coop_radius)
    else:
        co = np.empty(0, dtype=int)
    rho_co = rho0[co]
    s_out_co = s_out - float(rho_co.sum())
    s2_out_co = s2_out - float((rho_co ** 2).sum())

    records: list[BlockSinrRecord] = []
    rows: list[np.ndarray] = []
    d = config.backhaul_delay

    for i in range(config.n_blocks):
        L_i = config.known_len(i)
        x1 = Xn[mem, :L_i]
        q1 = q_in_matrix(x1, rho_in, s_out, M, p)
        h1 = Yn[:, :L_i] @ q1
        e_in = incell_error_cov(x1, rho_in, s_out, M, p)
        delta_in = float(np.real(np.trace(e_in))) / M
        w_t = q1[:, target_col]
        est_w_sq = float(np.real(np.vdot(w_t, w_t)))

        coop_round = mode == "coop" and i >= d
        if coop_round:
            l_dag = config.delayed_len(i)
            if co.size:
                x1_delayed = x1[:, :l_dag]
                resid = Yn[:, :l_dag] - h1 @ x1_delayed
                x_co = Xn[co, :l_dag]
                qco = q_co_matrix(x_co, rho_co, x1_delayed, e_in,
                                  s_out_co, M, p)
                h_co = resid @ qco
                delta_co = float(np.real(np.trace(
                    coop_error_cov(x_co, rho_co, qco, M)))) / M
                h_full = np.concatenate([h1, h_co], axis=1)
            else:
                h_full, delta_co = h1, 0.0
            delta_tot = delta_in + delta_co
            rho_model = s_out_co if interference_override is None \
                else interference_override
            psi = psi_matrix(h_full, delta_tot, rho_model, p)
            rec = sinr_decomposition(psi, h_full, delta_tot, s_out_co,
                                     s2_out_co, p, target_col, est_w_sq)
            rec = replace(rec, block=i + 1, path="coop",
                          phi_size=mem.size + co.size, l_dagger=l_dag)
        else:
            rho_model = s_out if interference_override is None \
                else interference_override
            psi = psi_matrix(h1, delta_in, rho_model, p)
            h_full = h1
            rec = sinr_decomposition(psi, h1, delta_in, s_out, s2_out, p,
                                     target_col, est_w_sq)
            rec = replace(rec, block=i + 1, path="incell",
                          phi_size=mem.size, l_dagger=L_i)

        records.append(rec)
        rows.append(psi @ h_full[:, target_col])

    return FrameResult(mode=mode, records=records, target_rows=rows,
                       realization=realization, config=config)
