"""
Monte-Carlo experiment harness.

A :class:`SimConfig` describes one sweep: grid, channel, pulse, scheme,
equaliser and estimation settings, the SNR/PDR points and the trial count.
:func:`run_sweep` draws one channel per ``(seed, trial)`` and reuses it at
every point, so two schemes run with the same seed see identical channels;
data and noise are drawn per ``(seed, trial, point)``.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .baselines import (
    OfdmConfig,
    energy_per_carrier,
    fading_spread,
    fd_mount_receive,
    fd_mount_transmit,
    ofdm_channel_matrix,
    ofdm_transceive,
)
from .channel import band_preset, effective_channel, fd_channel, periodize, veh_a_paths
from .equalizer import (
    BandedMatrix,
    NoiseModel,
    NullSpaceMask,
    cgm_equalize,
    detect,
    extract_band,
    lmmse_direct,
    mask_encode,
)
from .estimation import (
    PowerSplit,
    estimation_window,
    make_pilot,
    superimpose,
    turbo_estimate,
)
from .pulses import KINDS, PulseShape
from .zak import Constellation, GridParams, dfzt, idfzt, unvec, vec

SCHEMES = ("zak-dd", "zak-fd-cgm", "fd-mount", "fd-mount-1tap", "cp-ofdm-genie", "cp-ofdm-1tap")
ZAK_SCHEMES = ("zak-dd", "zak-fd-cgm")
ESTIMATION_MODES = ("perfect", "spread-pilot")

TRIAL_COLUMNS = ("fingerprint", "seed", "trial", "snr_db", "pdr_db", "turbo",
                 "bit_errors", "bits_total", "nmse", "cgm_iterations")
CURVE_COLUMNS = ("snr_db", "pdr_db", "turbo", "trials", "bit_errors", "bits_total",
                 "ber", "ber_ci_low", "ber_ci_high", "nmse_median", "nmse_median_db",
                 "cgm_iterations_mean")


# ---------------------------------------------------------------- config

def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValueError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return cls(**data)


def _floats(xs, name):
    if isinstance(xs, (int, float)):
        xs = [xs]
    try:
        return tuple(float(x) for x in xs)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a list of numbers") from None


@dataclass(frozen=True)
class GridSection:
    M: int = 31
    N: int = 37
    nu_p: float = 30e3


@dataclass(frozen=True)
class ChannelSection:
    model: str = "veh-a"
    nu_max: float = 815.0


@dataclass(frozen=True)
class PulseSection:
    kind: str = "rrc"
    beta_tau: float | None = None
    beta_nu: float | None = None
    alpha_tau: float | None = None
    alpha_nu: float | None = None

    def build(self) -> PulseShape:
        params = [self.beta_tau, self.beta_nu, self.alpha_tau, self.alpha_nu]
        if all(p is None for p in params):
            return PulseShape.default(self.kind)
        return PulseShape(self.kind, *params)


@dataclass(frozen=True)
class EqualizerSection:
    b: int | str = "preset"
    eps: float = 1e-6
    max_iter: int = 250


@dataclass(frozen=True)
class EstimationSection:
    mode: str = "perfect"
    root: int = 101
    mapping: str = "td"
    pdr_db: tuple = (10.0,)
    n_turbo: tuple = (0,)


@dataclass(frozen=True)
class SweepSection:
    snr_db: tuple = (20.0,)
    trials: int = 20
    seed: int = 1


@dataclass(frozen=True)
class OutputSection:
    directory: str = "results"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class SimConfig:
    """Declarative description of one sweep; see ``README.md`` for the schema."""

    grid: GridSection = field(default_factory=GridSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    pulse: PulseSection = field(default_factory=PulseSection)
    scheme: str = "zak-fd-cgm"
    constellation: int = 4
    cp_len: int = 4
    equalizer: EqualizerSection = field(default_factory=EqualizerSection)
    estimation: EstimationSection = field(default_factory=EstimationSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict | None) -> "SimConfig":
        data = dict(data or {})
        sections = {"grid": GridSection, "channel": ChannelSection, "pulse": PulseSection,
                    "equalizer": EqualizerSection, "estimation": EstimationSection,
                    "sweep": SweepSection, "output": OutputSection}
        scalars = {"scheme", "constellation", "cp_len"}
        unknown = set(data) - set(sections) - scalars
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: data[k] for k in scalars if k in data}
        for name, sec in sections.items():
            raw = data.get(name)
            if name == "estimation" and isinstance(raw, dict):
                raw = dict(raw)
                if "pdr_db" in raw:
                    raw["pdr_db"] = _floats(raw["pdr_db"], "estimation.pdr_db")
                if "n_turbo" in raw:
                    t = raw["n_turbo"]
                    raw["n_turbo"] = tuple(int(x) for x in (t if isinstance(t, (list, tuple)) else [t]))
            if name == "sweep" and isinstance(raw, dict) and "snr_db" in raw:
                raw = dict(raw, snr_db=_floats(raw["snr_db"], "sweep.snr_db"))
            if name == "output" and isinstance(raw, dict) and "formats" in raw:
                raw = dict(raw, formats=tuple(raw["formats"]))
            kw[name] = _section(sec, raw, name)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))

    def to_dict(self) -> dict:
        def plain(x):
            if isinstance(x, tuple):
                return [plain(v) for v in x]
            if isinstance(x, dict):
                return {k: plain(v) for k, v in x.items()}
            return x
        return plain(dataclasses.asdict(self))

    def replace(self, **changes) -> "SimConfig":
        """Copy with top-level fields or ``section__key`` entries changed."""
        top, nested = {}, {}
        for key, val in changes.items():
            if "__" in key:
                sec, sub = key.split("__", 1)
                nested.setdefault(sec, {})[sub] = val
            else:
                top[key] = val
        for sec, kv in nested.items():
            top[sec] = dataclasses.replace(getattr(self, sec), **kv)
        return dataclasses.replace(self, **top)

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def validate(self):
        g = self.grid
        self.grid_params  # raises on bad geometry
        if self.channel.model != "veh-a":
            raise ValueError(f"unsupported channel model {self.channel.model!r}")
        if self.channel.nu_max < 0:
            raise ValueError("nu_max must be non-negative")
        if self.pulse.kind not in KINDS:
            raise ValueError(f"unsupported pulse kind {self.pulse.kind!r}")
        self.pulse.build()
        if self.scheme not in SCHEMES:
            raise ValueError(f"unsupported scheme {self.scheme!r}; pick one of {SCHEMES}")
        Constellation.qam(self.constellation)
        OfdmConfig(g.M, g.N, self.cp_len)
        eq = self.equalizer
        if not (eq.b == "preset" or (isinstance(eq.b, int) and eq.b >= 0)):
            raise ValueError("equalizer.b must be 'preset' or a non-negative integer")
        if eq.eps < 0 or eq.max_iter < 1:
            raise ValueError("equalizer needs eps >= 0 and max_iter >= 1")
        est = self.estimation
        if est.mode not in ESTIMATION_MODES:
            raise ValueError(f"estimation.mode must be one of {ESTIMATION_MODES}")
        if est.mode == "spread-pilot":
            if self.scheme not in ZAK_SCHEMES:
                raise ValueError("spread-pilot estimation is only defined for Zak schemes")
            if math.gcd(est.root, g.M * g.N) != 1:
                raise ValueError(f"pilot root {est.root} is not coprime with MN")
            if est.mapping not in ("td", "dd"):
                raise ValueError("estimation.mapping must be 'td' or 'dd'")
            if not est.pdr_db:
                raise ValueError("estimation.pdr_db must not be empty")
            if not est.n_turbo or min(est.n_turbo) < 0:
                raise ValueError("estimation.n_turbo must list non-negative integers")
        if not self.sweep.snr_db:
            raise ValueError("sweep.snr_db must not be empty")
        if self.sweep.trials < 1:
            raise ValueError("sweep.trials must be positive")
        if set(self.output.formats) - {"csv", "timing"}:
            raise ValueError("output.formats may contain 'csv' and 'timing'")
        if 2 * self.half_bandwidth >= g.M * g.N and self.scheme == "zak-fd-cgm":
            raise ValueError("half-bandwidth too large for the grid")

    @property
    def grid_params(self) -> GridParams:
        return GridParams(self.grid.M, self.grid.N, self.grid.nu_p)

    @property
    def half_bandwidth(self) -> int:
        if self.equalizer.b == "preset":
            return band_preset(self.pulse.kind, self.grid_params, self.channel.nu_max)
        return int(self.equalizer.b)

    @property
    def points(self) -> list[tuple[float, float]]:
        """``(snr_db, pdr_db)`` pairs; ``pdr_db`` is NaN under perfect CSI."""
        pdrs = self.estimation.pdr_db if self.estimation.mode == "spread-pilot" else (math.nan,)
        return [(s, p) for s in self.sweep.snr_db for p in pdrs]


# --------------------------------------------------------------- trials

@dataclass(frozen=True)
class TrialResult:
    fingerprint: str
    seed: int
    trial: int
    snr_db: float
    pdr_db: float
    turbo: int
    bit_errors: int
    bits_total: int
    nmse: float
    cgm_iterations: int
    wall_time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.bit_errors <= self.bits_total:
            raise ValueError("bit_errors must lie in [0, bits_total]")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


@dataclass
class SweepResult:
    config: SimConfig
    trials: list[TrialResult]

    def curve(self) -> list[dict]:
        return aggregate(self.trials)


class _DenseLmmse:
    """Dense LMMSE with the Gram matrix cached across noise levels."""

    def __init__(self, H: np.ndarray):
        self.Hh = H.conj().T
        self.G = self.Hh @ H

    def __call__(self, r, s2):
        n = self.G.shape[0]
        return np.linalg.solve(np.eye(n) + self.G / s2, self.Hh @ r / s2)


class _Trial:
    """Everything that depends only on the channel draw of one trial."""

    def __init__(self, cfg: SimConfig, trial: int):
        grid = cfg.grid_params
        self.cfg = cfg
        self.grid = grid
        self.rng = np.random.default_rng([cfg.sweep.seed, trial])
        self.paths = veh_a_paths(cfg.channel.nu_max, self.rng)
        self.pulse = cfg.pulse.build()
        self.h = effective_channel(self.paths, self.pulse, grid)
        self.fd = fd_channel(periodize(self.h))
        self.b = cfg.half_bandwidth
        self._cache = {}

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


def _bits(rng, n_symbols, C):
    return rng.integers(0, 2, n_symbols * C.bits_per_symbol, dtype=np.int8)


def _run_point(t: _Trial, snr_db: float, pdr_db: float, rng, C: Constellation):
    """Returns a list of ``(turbo, bit_errors, bits_total, nmse, iterations)``."""
    cfg, grid, fd = t.cfg, t.grid, t.fd
    MN = grid.frame_size
    noise = NoiseModel.from_snr_db(snr_db)
    scheme = cfg.scheme
    est = cfg.estimation
    if est.mode == "spread-pilot":
        b = t.b if scheme == "zak-fd-cgm" else 0
        mask = t.cached(("mask", b), lambda: NullSpaceMask(grid, b))
        pilot = t.cached("pilot", lambda: make_pilot(grid, est.root, est.mapping))
        window = estimation_window(grid, t.pulse, t.paths.max_delay, t.b)
        bits = _bits(rng, mask.n_data, C)
        split = PowerSplit.from_pdr(pdr_db, mask.n_data)
        X = superimpose(C.map(bits), pilot, split, mask)
        r = fd.matvec(idfzt(X))
        y = dfzt(r + noise.sample(r.shape, rng), grid)
        res = turbo_estimate(y, pilot, split, noise, mask, C, window, max(est.n_turbo),
                             h_true=t.h, method="cgm" if scheme == "zak-fd-cgm" else "dense",
                             eps=cfg.equalizer.eps, max_iter=cfg.equalizer.max_iter)
        out = []
        for n in est.n_turbo:
            det = res.detections[n]
            errs = int(np.count_nonzero(C.demap(det.soft) != bits))
            out.append((n, errs, bits.size, res.nmse[n], det.iterations))
        return out
    iters = 0
    if scheme == "zak-fd-cgm":
        mask = t.cached("mask", lambda: NullSpaceMask(grid, t.b))
        band = t.cached("band", lambda: extract_band(fd, t.b))
        bits = _bits(rng, mask.n_data, C)
        s = mask_encode(C.map(bits), mask)
        r = fd.matvec(s)
        r = r + noise.sample(r.shape, rng)
        sol = cgm_equalize(band, r, noise, cfg.equalizer.eps, cfg.equalizer.max_iter)
        iters = sol.iterations
        soft = C.points[detect(sol.s, mask, C)]
    elif scheme == "zak-dd":
        solver = t.cached("dd", lambda: _DenseLmmse(fd.dd_dense()))
        bits = _bits(rng, MN, C)
        X = unvec(C.map(bits), grid)
        y = vec(fd.dd_apply(X))
        soft = solver(y + noise.sample(y.shape, rng), noise.variance)
    elif scheme.startswith("fd-mount"):
        H = t.cached("fd-dense", fd.dense)
        bits = _bits(rng, MN, C)
        r = fd_mount_transmit(C.map(bits), fd, noise, rng)
        soft = fd_mount_receive(r, H, "genie" if scheme == "fd-mount" else "one_tap", noise)
    else:
        ocfg = OfdmConfig(grid.M, grid.N, cfg.cp_len)
        H = t.cached("ofdm", lambda: ofdm_channel_matrix(t.h, ocfg))
        bits = _bits(rng, ocfg.n_carriers, C)
        receiver = "genie" if scheme == "cp-ofdm-genie" else "one_tap"
        detected = ofdm_transceive(bits, t.h, receiver, noise, rng, C, ocfg, H)
        return [(0, int(np.count_nonzero(detected != bits)), bits.size, math.nan, 0)]
    errs = int(np.count_nonzero(C.demap(soft) != bits))
    return [(0, errs, bits.size, math.nan, iters)]


def run_sweep(config: SimConfig, progress=None) -> SweepResult:
    """Run every ``(point, trial)`` of a sweep; results sorted by point then trial."""
    config.validate()
    C = Constellation.qam(config.constellation)
    fp, seed = config.fingerprint, config.sweep.seed
    points = config.points
    rows = []
    for trial in range(config.sweep.trials):
        t = _Trial(config, trial)
        for p, (snr, pdr) in enumerate(points):
            rng = np.random.default_rng([seed, trial, p + 1])
            start = time.perf_counter()
            outs = _run_point(t, snr, pdr, rng, C)
            elapsed = time.perf_counter() - start
            for turbo, errs, total, err2, iters in outs:
                rows.append(((p, turbo, trial), TrialResult(
                    fp, seed, trial, snr, pdr, turbo, errs, total, float(err2), int(iters),
                    elapsed)))
        if progress:
            progress(trial + 1, config.sweep.trials)
    rows.sort(key=lambda kv: kv[0])
    return SweepResult(config, [r for _, r in rows])


# ------------------------------------------------------------ aggregation

def wilson_interval(errors: int, total: int, z: float = 1.959963984540054):
    """95 % Wilson score interval for a binomial proportion."""
    if total == 0:
        return (math.nan, math.nan)
    p = errors / total
    den = 1 + z * z / total
    mid = (p + z * z / (2 * total)) / den
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / den
    lo = 0.0 if errors == 0 else max(0.0, mid - half)
    hi = 1.0 if errors == total else min(1.0, mid + half)
    return (lo, hi)


def _key(r: TrialResult):
    return (r.snr_db, r.pdr_db, r.turbo)


def aggregate(trials: list[TrialResult]) -> list[dict]:
    """Per-point BER (pooled over bits), Wilson CI and median NMSE."""
    groups: dict = {}
    for r in trials:
        groups.setdefault(_key(r), []).append(r)
    out = []
    for (snr, pdr, turbo), rs in groups.items():
        errs = sum(r.bit_errors for r in rs)
        total = sum(r.bits_total for r in rs)
        lo, hi = wilson_interval(errs, total)
        nm = [r.nmse for r in rs if not math.isnan(r.nmse)]
        med = float(np.median(nm)) if nm else math.nan
        out.append({
            "snr_db": snr, "pdr_db": pdr, "turbo": turbo, "trials": len(rs),
            "bit_errors": errs, "bits_total": total, "ber": errs / total if total else math.nan,
            "ber_ci_low": lo, "ber_ci_high": hi, "nmse_median": med,
            "nmse_median_db": 10 * math.log10(med) if med > 0 else math.nan,
            "cgm_iterations_mean": float(np.mean([r.cgm_iterations for r in rs])),
        })
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def emit_results(result: SweepResult, out_dir=None, formats=None) -> dict[str, Path]:
    """Write ``trials.csv``, ``curve.csv`` and ``manifest.yaml``.

    These three files depend only on the config and seed. Wall-clock times
    go to ``timing.csv`` when ``"timing"`` is among the formats.
    """
    cfg = result.config
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    formats = tuple(formats if formats is not None else cfg.output.formats)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"trials": out / "trials.csv", "curve": out / "curve.csv",
             "manifest": out / "manifest.yaml"}
    _write_csv(paths["trials"], TRIAL_COLUMNS, [dataclasses.asdict(r) for r in result.trials])
    _write_csv(paths["curve"], CURVE_COLUMNS, result.curve())
    manifest = {
        "package": "zakfd", "version": __version__, "fingerprint": cfg.fingerprint,
        "master_seed": cfg.sweep.seed, "trials_per_point": cfg.sweep.trials,
        "half_bandwidth": cfg.half_bandwidth,
        "rng_streams": {"channel": "[seed, trial]", "data_and_noise": "[seed, trial, point + 1]"},
        "points": [{"snr_db": s, "pdr_db": None if math.isnan(p) else p} for s, p in cfg.points],
        "config": cfg.to_dict(),
    }
    paths["manifest"].write_text(yaml.safe_dump(manifest, sort_keys=True))
    if "timing" in formats:
        paths["timing"] = out / "timing.csv"
        _write_csv(paths["timing"], ("snr_db", "pdr_db", "turbo", "trial", "wall_time"),
                   [dataclasses.asdict(r) for r in result.trials])
    return paths


def read_trials(path) -> list[TrialResult]:
    """Load a ``trials.csv`` written by :func:`emit_results`."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialResult(
                row["fingerprint"], int(row["seed"]), int(row["trial"]), float(row["snr_db"]),
                float(row["pdr_db"]), int(row["turbo"]), int(row["bit_errors"]),
                int(row["bits_total"]), float(row["nmse"]), int(row["cgm_iterations"])))
    return out


# ------------------------------------------------------------- benchmark

@dataclass(frozen=True)
class BenchRow:
    method: str
    M: int
    N: int
    MN: int
    seconds: float
    iterations: int


@dataclass
class BenchTable:
    rows: list[BenchRow]

    def slope(self, method: str) -> float:
        """Least-squares slope of ``log(time)`` against ``log(MN)``."""
        pts = [(r.MN, r.seconds) for r in self.rows if r.method == method]
        if len(pts) < 2:
            return math.nan
        x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])

    def write_csv(self, path):
        _write_csv(Path(path), ("method", "M", "N", "MN", "seconds", "iterations"),
                   [dataclasses.asdict(r) for r in self.rows])


DEFAULT_BENCH_GRIDS = ((5, 31), (11, 31), (31, 37), (61, 75))


def _random_band(n, b, rng):
    bands = (rng.standard_normal((2 * b + 1, n)) + 1j * rng.standard_normal((2 * b + 1, n)))
    return BandedMatrix(bands / np.sqrt(2 * (2 * b + 1)), b)


def _best_time(fn, repeats, min_time):
    """Minimum wall time of ``fn`` over at least ``repeats`` calls and
    ``min_time`` seconds, so cheap calls are sampled more often."""
    best, spent, runs = math.inf, 0.0, 0
    while runs < repeats or spent < min_time:
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        best, spent, runs = min(best, dt), spent + dt, runs + 1
    return best


def bench_complexity(grids=DEFAULT_BENCH_GRIDS, b: int = 3, k: int = 250,
                     repeats: int = 5, dense_max: int = 1200, seed: int = 0,
                     min_time: float = 0.5) -> BenchTable:
    """Time the banded CGM (exactly ``k`` iterations) and dense LMMSE per grid.

    CGM runs with ``eps = 0`` so every grid does the same iteration count;
    should it stop early on an exact breakdown, its time is rescaled to
    ``k`` iterations. Dense LMMSE is timed single-threaded on grids up to
    ``dense_max``. Each entry is the minimum over at least ``repeats`` runs
    and ``min_time`` seconds.
    """
    from threadpoolctl import threadpool_limits

    rng = np.random.default_rng(seed)
    noise = NoiseModel(0.1)
    rows = []
    # compile the kernels outside the timed region
    warm = _random_band(64, b, rng)
    cgm_equalize(warm, np.ones(64, complex), noise, 0.0, 2)
    for M, N in grids:
        n = M * N
        band = _random_band(n, b, rng)
        r = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        res = []
        best = _best_time(lambda: res.append(cgm_equalize(band, r, noise, 0.0, k)),
                          repeats, min_time)
        iters = res[-1].iterations
        rows.append(BenchRow("cgm", M, N, n, best * k / max(iters, 1), iters))
        if n <= dense_max:
            H = band.dense()
            with threadpool_limits(1):
                best = _best_time(lambda: lmmse_direct(H, r, noise), repeats, min_time)
            rows.append(BenchRow("dense", M, N, n, best, 0))
    return BenchTable(rows)


# ---------------------------------------------------------------- fading

@dataclass
class FadingStudy:
    """Carrier energies per seed for the three carrier sets."""

    energies: dict[str, list[np.ndarray]]

    def spreads(self) -> dict[str, list[float]]:
        return {k: [fading_spread(e) for e in v] for k, v in self.energies.items()}

    def median_spreads(self) -> dict[str, float]:
        return {k: float(np.median(v)) for k, v in self.spreads().items()}


def fading_study(grid: GridParams, pulse: PulseShape, nu_max: float, seeds,
                 cp_len: int = 4) -> FadingStudy:
    """Energy per carrier for pulsones, direct FD mounting and CP-OFDM."""
    ocfg = OfdmConfig(grid.M, grid.N, cp_len)
    out = {"pulsone": [], "dft": [], "cp-ofdm": []}
    for s in seeds:
        h = effective_channel(veh_a_paths(nu_max, np.random.default_rng([s])), pulse, grid)
        fd = fd_channel(periodize(h))
        out["pulsone"].append(energy_per_carrier(fd.dd_dense()))
        out["dft"].append(energy_per_carrier(fd.dense()))
        out["cp-ofdm"].append(energy_per_carrier(ofdm_channel_matrix(h, ocfg)))
    return FadingStudy(out)
