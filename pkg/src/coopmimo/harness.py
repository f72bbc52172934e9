"""Command-line orchestration: config files, campaigns, CSV/JSON emission.

Five subcommands map onto the library layers:

* ``simulate``     — Monte Carlo frames through the full detector; emits
  per-block SINR records and empirical CDFs (proposed and/or baseline).
* ``analyze``      — closed-form SINR CDFs for the same placements, in the
  Campbell variance form and/or the literal-integrand variant.
* ``learn``        — online moment estimation over a fresh-drop stream with
  analytic reference lines in the trace.
* ``adapt``        — outage-constrained rate plans from analytic or learned
  statistics; ``--validate`` replays fresh drops against the thresholds.
* ``extrapolate``  — transfers a learned three-user statistics triple to
  other large-scale gains.

Configuration is a flat ``key = value`` text file overlaid by CLI flags;
every emitted table row carries a hash of the physics-relevant config
fields so rows from different runs can never be silently mixed. Outputs are
CSV tables plus a ``manifest.json``.

Determinism: a run is a pure function of (config, master seed). Trial ``t``
derives its randomness from counter-based streams keyed by the master seed
and indexed by ``t`` alone (drops, channels and probe draws use separate
stream constants), so any trial is reproducible in isolation, proposed and
baseline share fading when run jointly, and process-pool execution returns
byte-identical tables to the serial path (results are reduced in trial
order). Wall-clock timing lives only in the manifest, never in tables.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import drop_asymptotic_sinr, interference_stats, \
    rate_threshold, sinr_cdf
from .channel import FrameConfig, dbm_to_watts, noise_power_watts, \
    sample_channels
from .detector import run_frame
from .errors import ConfigError
from .geometry import DensityMap, build_hex_layout, hex_area, \
    plant_target_user, sample_user_drop
from .learning import UserStatsTriple, drop_stream, extrapolate_stats, \
    run_learning_campaign

_MODE_RUNS = {
    "proposed": (("proposed", "coop"),),
    "baseline": (("baseline", "baseline"),),
    "both": (("proposed", "coop"), ("baseline", "baseline")),
}
_VARIANCE_RUNS = {
    "campbell": (("campbell", "campbell"),),
    "literal": (("literal", "literal"),),
    "both": (("campbell", "campbell"), ("literal", "literal")),
}
# fields that steer execution but leave every table value unchanged
_NON_PHYSICS_FIELDS = frozenset({"jobs", "out", "validate"})
_TUPLE_INT_FIELDS = frozenset({"blocks", "block_lengths",
                               "triple_user_index"})


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment, fully specified; defaults are the reference setup.

    Reference values: 500 m cells in two rings (19 sites), pathloss 3.76,
    3 dB lognormal shadowing, 200 antennas, 23 dBm transmitters over 5 MHz
    with -174 dBm/Hz noise, 700 m cooperation radius, 31-symbol pilots, five
    100-symbol data blocks, one-frame backhaul delay, mean 10 users/cell.
    """

    # cell geometry and user field
    cell_radius: float = 500.0
    rings: int = 2
    density: str = "constant"
    users_per_cell: float = 10.0
    target_distance: float = 100.0
    r_max_factor: float = 6.0
    # radio and frame structure
    antennas: int = 200
    tx_power_dbm: float = 23.0
    noise_dbm_hz: float = -174.0
    bandwidth_hz: float = 5e6
    pathloss_exp: float = 3.76
    shadow_std_db: float = 3.0
    coop_radius: float = 700.0
    pilot_len: int = 31
    n_blocks: int = 5
    block_len: int = 100
    block_lengths: tuple = ()
    backhaul_delay: int = 1
    symbol_error_rate: float = 0.0
    # campaign controls
    trials: int = 500
    seed: int = 1
    mode: str = "proposed"
    variance: str = "campbell"
    stats: str = "analytic"
    epsilon: float = 0.05
    blocks: tuple = ()
    learn_iters: int = 500
    measurement: str = "functional"
    mute: str = "cell"
    grid_min_db: float = -20.0
    grid_max_db: float = 50.0
    grid_points: int = 281
    # statistics-transfer inputs
    triple_user_index: tuple = ()
    triple_rho: tuple = ()
    triple_mean: tuple = ()
    triple_variance: tuple = ()
    extrapolate_rho: tuple = ()
    extrapolate_phi: float = 0.0
    # execution plumbing (excluded from the config hash)
    jobs: int = 1
    out: str = "results"
    validate: bool = False

    def __post_init__(self):
        for f in fields(self):
            if f.type == "tuple":
                object.__setattr__(self, f.name,
                                   tuple(getattr(self, f.name)))
        if self.mode not in _MODE_RUNS:
            raise ConfigError(f"mode must be one of "
                              f"{sorted(_MODE_RUNS)}, got {self.mode!r}")
        if self.variance not in _VARIANCE_RUNS:
            raise ConfigError(
                f"variance must be one of {sorted(_VARIANCE_RUNS)}, "
                f"got {self.variance!r}")
        if self.stats not in ("analytic", "learned"):
            raise ConfigError(
                f"stats must be 'analytic' or 'learned', got {self.stats!r}")
        if self.density != "constant":
            raise ConfigError(
                f"unknown density map {self.density!r} (supported: "
                f"'constant')")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.learn_iters < 1:
            raise ConfigError(
                f"learn_iters must be >= 1, got {self.learn_iters}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(
                f"epsilon must sit in (0, 1), got {self.epsilon}")
        if self.grid_points < 2 or self.grid_max_db <= self.grid_min_db:
            raise ConfigError("threshold grid needs >= 2 points and "
                              "grid_max_db > grid_min_db")
        if not self.users_per_cell >= 0:
            raise ConfigError(
                f"users_per_cell must be >= 0, got {self.users_per_cell}")
        if not self.r_max_factor * self.cell_radius > 0:
            raise ConfigError("sampling radius must be positive")

    # -- derived pieces ----------------------------------------------------

    def frame_config(self) -> FrameConfig:
        blocks = self.block_lengths or (self.block_len,) * self.n_blocks
        return FrameConfig(
            m_antennas=self.antennas, pilot_len=self.pilot_len,
            block_lengths=blocks, backhaul_delay=self.backhaul_delay,
            coop_radius=self.coop_radius,
            tx_power_watts=dbm_to_watts(self.tx_power_dbm),
            noise_power_watts=noise_power_watts(self.noise_dbm_hz,
                                                self.bandwidth_hz),
            pathloss_exp=self.pathloss_exp,
            shadow_std_db=self.shadow_std_db,
            symbol_error_rate=self.symbol_error_rate)

    @property
    def user_density(self) -> float:
        return self.users_per_cell / hex_area(self.cell_radius)

    @property
    def r_max(self) -> float:
        return self.r_max_factor * self.cell_radius

    def block_list(self, frame: FrameConfig) -> list:
        chosen = self.blocks or range(1, frame.n_blocks + 1)
        out = sorted(set(int(b) for b in chosen))
        for b in out:
            if not 1 <= b <= frame.n_blocks:
                raise ConfigError(
                    f"block outside 1..{frame.n_blocks}: {b}")
        return out

    def grid_db(self) -> np.ndarray:
        return np.linspace(self.grid_min_db, self.grid_max_db,
                           self.grid_points)

    def config_hash(self) -> str:
        physics = {k: v for k, v in dataclasses.asdict(self).items()
                   if k not in _NON_PHYSICS_FIELDS}
        blob = json.dumps(physics, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, blank lines ok)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def _coerce(name: str, kind: str, text: str):
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "tuple":
            items = [s for s in (part.strip() for part in text.split(","))
                     if s]
            cast = int if name in _TUPLE_INT_FIELDS else float
            return tuple(cast(s) for s in items)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from exc


def load_config(config_path=None, overrides=None) -> ExperimentConfig:
    """Defaults <- config file <- explicit overrides, then validate once."""
    schema = {f.name: f.type for f in fields(ExperimentConfig)}
    merged = {}
    if config_path is not None:
        for key, text in read_config_file(config_path).items():
            if key not in schema:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, schema[key], text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    return ExperimentConfig(**merged)


# --------------------------------------------------------------------------
# result bundle
# --------------------------------------------------------------------------

_TABLE_SCHEMAS = {
    "records": (
        "config_hash", "seed", "block", "mode", "sinr_db",
        "interference_known_db", "interference_error_db",
        "interference_out_db", "noise_db"),
    "empirical_cdf": (
        "config_hash", "mode", "block", "threshold_db", "probability"),
    "analytic_cdf": (
        "config_hash", "mode", "block", "variance", "threshold_db",
        "probability"),
    "learning_trace": (
        "config_hash", "block", "n", "mean_estimate", "var_estimate",
        "mean_reference", "var_reference"),
    "rate_plans": (
        "config_hash", "mode", "block", "stats_source", "epsilon",
        "threshold", "threshold_db", "rate_bits"),
    "outage_validation": (
        "config_hash", "mode", "block", "stats_source", "epsilon",
        "threshold_db", "empirical_outage", "n_drops"),
    "extrapolation": (
        "config_hash", "mode", "block", "rho_target", "mean", "variance",
        "phi_size", "known_len", "provenance"),
}


@dataclass
class ResultBundle:
    """Everything one command produced, ready to serialize.

    Tables are lists of tuples matching the schemas above; each row leads
    with the config hash. ``metadata`` lands in ``manifest.json`` (the only
    place wall-clock figures are allowed — tables stay bitwise reproducible
    for a fixed config and seed).
    """

    command: str
    config: ExperimentConfig
    records: list = field(default_factory=list)
    empirical_cdf: list = field(default_factory=list)
    analytic_cdf: list = field(default_factory=list)
    learning_trace: list = field(default_factory=list)
    rate_plans: list = field(default_factory=list)
    outage_validation: list = field(default_factory=list)
    extrapolation: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def tables(self):
        for name in _TABLE_SCHEMAS:
            rows = getattr(self, name)
            if rows:
                yield name, _TABLE_SCHEMAS[name], rows

    def write(self, outdir=None) -> dict:
        outdir = Path(self.config.out if outdir is None else outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = {}
        manifest_tables = {}
        for name, header, rows in self.tables():
            path = outdir / f"{name}.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
            written[name] = path
            manifest_tables[name] = {"file": path.name, "rows": len(rows)}
        manifest = {
            "command": self.command,
            "config": dataclasses.asdict(self.config),
            "config_hash": self.config.config_hash(),
            "code_version": __version__,
            "seed_scheme": (
                "counter-based Philox streams keyed by the master seed; "
                "trial t uses counter index t for its drop and channel "
                "draws, probe draws use index t*(n_blocks+1)+block"),
            "tables": manifest_tables,
            **self.metadata,
        }
        path = outdir / "manifest.json"
        with path.open("w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["manifest"] = path
        return written


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _scene(cfg: ExperimentConfig):
    layout = build_hex_layout(cfg.cell_radius, cfg.rings)
    density = DensityMap.constant(cfg.user_density)
    return layout, density, cfg.frame_config()


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _simulate_trial(payload):
    cfg, trial = payload
    layout, density, frame = _scene(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        drop = sample_user_drop(
            layout, density, seed=cfg.seed, r_max=cfg.r_max,
            pathloss_exp=cfg.pathloss_exp, shadow_std_db=cfg.shadow_std_db,
            pilot_limit=frame.pilot_len - 1, index=trial)
    redraws = sum(int(str(w.message).split("redrawn ")[1].split("x")[0])
                  for w in caught if "redrawn" in str(w.message))
    drop = plant_target_user(drop, layout, cfg.target_distance)
    realization = sample_channels(drop, frame, cfg.seed, index=trial)
    hash_ = cfg.config_hash()
    rows = []
    for label, internal in _MODE_RUNS[cfg.mode]:
        result = run_frame(drop, frame, mode=internal,
                           realization=realization)
        for rec in result.records:
            rows.append((
                hash_, trial, rec.block, label, _db(rec.sinr),
                _db(rec.interf_est), _db(rec.interf_err),
                _db(rec.interf_out), _db(rec.noise)))
    return trial, rows, redraws


def cmd_simulate(cfg: ExperimentConfig) -> ResultBundle:
    """Monte Carlo frames -> per-block SINR records + empirical CDFs."""
    _scene(cfg)  # validate geometry/frame before any worker forks
    payloads = [(cfg, t) for t in range(cfg.trials)]
    started = time.perf_counter()
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunk = max(1, cfg.trials // (cfg.jobs * 4))
            outcomes = list(pool.map(_simulate_trial, payloads,
                                     chunksize=chunk))
    else:
        outcomes = [_simulate_trial(p) for p in payloads]
    elapsed = time.perf_counter() - started

    records = []
    redraws = 0
    samples = {}
    for _trial, rows, n_redraws in outcomes:  # already in trial order
        redraws += n_redraws
        records.extend(rows)
        for row in rows:
            samples.setdefault((row[3], row[2]), []).append(row[4])

    hash_ = cfg.config_hash()
    grid = cfg.grid_db()
    empirical = []
    for label, _internal in _MODE_RUNS[cfg.mode]:
        for block in sorted(b for (lab, b) in samples if lab == label):
            data = np.sort(np.asarray(samples[(label, block)]))
            probs = np.searchsorted(data, grid, side="right") / data.size
            empirical.extend(
                (hash_, label, block, float(t), float(p))
                for t, p in zip(grid, probs))

    rate = redraws / cfg.trials
    if rate > 0.01:
        warnings.warn(
            f"drop resample rate {rate:.2%} exceeds 1% — the pilot cap is "
            f"biasing the user field", RuntimeWarning, stacklevel=2)
    bundle = ResultBundle(command="simulate", config=cfg, records=records,
                          empirical_cdf=empirical)
    bundle.metadata = {
        "timing": {"seconds_total": elapsed,
                   "seconds_per_trial": elapsed / cfg.trials},
        "resampling": {"redraws": redraws, "rate": rate,
                       "exceeds_warning_level": rate > 0.01},
    }
    return bundle


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------

def cmd_analyze(cfg: ExperimentConfig) -> ResultBundle:
    """Closed-form SINR CDFs on the configured threshold grid."""
    _layout, _density, frame = _scene(cfg)
    hash_ = cfg.config_hash()
    grid = cfg.grid_db()
    thresholds = 10.0 ** (grid / 10.0)
    rows = []
    degenerate = []
    for label, internal in _MODE_RUNS[cfg.mode]:
        for block in cfg.block_list(frame):
            for vlabel, vmode in _VARIANCE_RUNS[cfg.variance]:
                stats = interference_stats(
                    frame, cfg.cell_radius, cfg.user_density,
                    cfg.target_distance, block=block, mode=internal,
                    r_max=cfg.r_max, variance_mode=vmode)
                if stats.mean == 0.0:
                    degenerate.append(
                        {"mode": label, "block": block, "variance": vlabel,
                         "reason": "zero interference mean — CDF collapses "
                                   "to a step at infinite SINR"})
                probs = np.atleast_1d(sinr_cdf(stats, thresholds))
                rows.extend(
                    (hash_, label, block, vlabel, float(t), float(p))
                    for t, p in zip(grid, probs))
    bundle = ResultBundle(command="analyze", config=cfg, analytic_cdf=rows)
    if degenerate:
        bundle.metadata["degenerate"] = degenerate
    return bundle


# --------------------------------------------------------------------------
# learn
# --------------------------------------------------------------------------

def _single_mode(cfg: ExperimentConfig) -> tuple:
    runs = _MODE_RUNS[cfg.mode]
    if len(runs) != 1:
        raise ConfigError(
            "this command runs one detection mode at a time; pick "
            "--mode proposed or --mode baseline")
    return runs[0]


def cmd_learn(cfg: ExperimentConfig) -> ResultBundle:
    """Online moment estimation with analytic reference lines."""
    layout, density, frame = _scene(cfg)
    label, internal = _single_mode(cfg)
    blocks = cfg.block_list(frame)
    stream = drop_stream(layout, density, frame, cfg.target_distance,
                         seed=cfg.seed, r_max=cfg.r_max,
                         pilot_limit=frame.pilot_len - 1)
    campaign = run_learning_campaign(
        stream, frame, blocks=blocks, n_iters=cfg.learn_iters,
        seed=cfg.seed, mode=internal, measurement=cfg.measurement,
        mute=cfg.mute)
    hash_ = cfg.config_hash()
    rows = []
    learned = {}
    for block in blocks:
        ref = interference_stats(
            frame, cfg.cell_radius, cfg.user_density, cfg.target_distance,
            block=block, mode=internal, r_max=cfg.r_max)
        out = campaign[block]
        learned[block] = out.stats
        rows.extend(
            (hash_, block, n + 1, float(out.mean_trace[n]),
             float(out.var_trace[n]), ref.mean, ref.variance)
            for n in range(cfg.learn_iters))
    bundle = ResultBundle(command="learn", config=cfg, learning_trace=rows)
    bundle.metadata["learned_stats"] = {
        str(b): {"mean": s.mean, "variance": s.variance,
                 "phi_size": s.phi_size, "known_len": s.known_len}
        for b, s in learned.items()}
    return bundle


# --------------------------------------------------------------------------
# adapt
# --------------------------------------------------------------------------

def cmd_adapt(cfg: ExperimentConfig) -> ResultBundle:
    """Rate plans at the configured outage target; optional closed loop.

    With ``stats = learned`` the campaign's own drop stream keeps running
    for validation, so the frames that tuned the moments never score them.
    """
    layout, density, frame = _scene(cfg)
    blocks = cfg.block_list(frame)
    hash_ = cfg.config_hash()
    plans = []
    validation = []
    for label, internal in _MODE_RUNS[cfg.mode]:
        stream = drop_stream(layout, density, frame, cfg.target_distance,
                             seed=cfg.seed, r_max=cfg.r_max,
                             pilot_limit=frame.pilot_len - 1)
        if cfg.stats == "learned":
            campaign = run_learning_campaign(
                stream, frame, blocks=blocks, n_iters=cfg.learn_iters,
                seed=cfg.seed, mode=internal, measurement=cfg.measurement,
                mute=cfg.mute)
            stats_by_block = {b: campaign[b].stats for b in blocks}
        else:
            stats_by_block = {
                b: interference_stats(
                    frame, cfg.cell_radius, cfg.user_density,
                    cfg.target_distance, block=b, mode=internal,
                    r_max=cfg.r_max)
                for b in blocks}
        plan_by_block = {b: rate_threshold(stats_by_block[b], cfg.epsilon)
                         for b in blocks}
        plans.extend(
            (hash_, label, b, cfg.stats, cfg.epsilon,
             plan_by_block[b].threshold, _db(plan_by_block[b].threshold),
             plan_by_block[b].rate)
            for b in blocks)
        if cfg.validate:
            below = {b: 0 for b in blocks}
            for _ in range(cfg.trials):
                drop = next(stream)
                for b in blocks:
                    gamma = drop_asymptotic_sinr(drop, frame, b,
                                                 internal).sinr
                    below[b] += gamma < plan_by_block[b].threshold
            validation.extend(
                (hash_, label, b, cfg.stats, cfg.epsilon,
                 _db(plan_by_block[b].threshold),
                 below[b] / cfg.trials, cfg.trials)
                for b in blocks)
    return ResultBundle(command="adapt", config=cfg, rate_plans=plans,
                        outage_validation=validation)


# --------------------------------------------------------------------------
# extrapolate
# --------------------------------------------------------------------------

def cmd_extrapolate(cfg: ExperimentConfig) -> ResultBundle:
    """Transfer a measured statistics triple to other large-scale gains."""
    frame = _scene(cfg)[2]
    if not (cfg.triple_rho and cfg.triple_mean and cfg.triple_variance):
        raise ConfigError(
            "extrapolate needs triple_rho, triple_mean and triple_variance "
            "(three comma-separated values each)")
    triple = UserStatsTriple(
        user_index=cfg.triple_user_index or (0, 1, 2),
        rho=cfg.triple_rho, mean=cfg.triple_mean,
        variance=cfg.triple_variance)
    targets = cfg.extrapolate_rho or cfg.triple_rho
    phi = cfg.extrapolate_phi if cfg.extrapolate_phi > 0 else None
    hash_ = cfg.config_hash()
    rows = []
    for label, internal in _MODE_RUNS[cfg.mode]:
        for block in cfg.block_list(frame):
            for rho_k in targets:
                st = extrapolate_stats(triple, float(rho_k), frame,
                                       block=block, mode=internal,
                                       phi_size=phi)
                rows.append((hash_, label, block, float(rho_k), st.mean,
                             st.variance, st.phi_size, st.known_len,
                             st.provenance))
    return ResultBundle(command="extrapolate", config=cfg,
                        extrapolation=rows)


# --------------------------------------------------------------------------
# CLI
# --------------------------------------------------------------------------

_COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "learn": cmd_learn,
    "adapt": cmd_adapt,
    "extrapolate": cmd_extrapolate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopmimo",
        description="Cooperative-detection uplink simulator and analyzer")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", metavar="PATH",
                        help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="master seed (64-bit)")
    parser.add_argument("--trials", type=int,
                        help="Monte Carlo trials / validation drops")
    parser.add_argument("--mode",
                        choices=["proposed", "baseline", "both"])
    parser.add_argument("--variance",
                        choices=["campbell", "literal", "both"],
                        help="variance integrand for analytic CDFs")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--validate", action="store_true",
                        help="closed-loop outage validation (adapt)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed, "trials": args.trials, "mode": args.mode,
        "variance": args.variance, "out": args.out,
        "validate": True if args.validate else None,
    }
    try:
        cfg = load_config(args.config, overrides)
        bundle = _COMMANDS[args.command](cfg)
        written = bundle.write()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # NumericalError and kin -> exit 3
        from .errors import CoopMimoError
        if isinstance(exc, CoopMimoError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        raise
    for name, path in written.items():
        rows = getattr(bundle, name, None)
        suffix = f" ({len(rows)} rows)" if isinstance(rows, list) else ""
        print(f"wrote {path}{suffix}")
    return 0
