"""
Spread-pilot channel estimation with turbo refinement.

A unit-energy chirp pilot is superimposed on the masked data frame. The
receiver correlates the DD frame against every twisted shift of the pilot
inside an estimation window (the cross-ambiguity), rebuilds the FD channel
from the estimated taps, cancels the pilot and equalises. Each turbo round
then subtracts the re-modulated data decisions and re-estimates from a
cleaner pilot observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import (
    ChannelWindow,
    EffectiveChannel,
    FDChannel,
    _ceil,
    _SKIRT,
    fd_channel,
    fundamental_delays,
    periodize,
)
from .equalizer import (
    NoiseModel,
    NullSpaceMask,
    cgm_equalize,
    despread,
    extract_band,
    lmmse_direct,
)
from .pulses import PulseShape
from .zak import Constellation, GridParams, dd_to_td, idfzt, td_to_dd, unvec, vec

MAPPINGS = ("td", "dd")


def zadoff_chu(length: int, root: int) -> np.ndarray:
    """Unit-modulus Zadoff-Chu sequence of the given length and root."""
    if length < 1:
        raise ValueError("length must be positive")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} is not coprime with length {length}")
    n = np.arange(length, dtype=np.int64)
    cf = length % 2
    # reduce the exponent exactly so the phase stays accurate for long sequences
    e = (root % (2 * length)) * ((n * (n + cf)) % (2 * length)) % (2 * length)
    return np.exp(-1j * np.pi * e / length)


@dataclass
class SpreadPilot:
    """Unit-norm pilot frame ``x_s`` and the chirp it was built from.

    With ``mapping="td"`` the chirp is the pilot's time-domain waveform; its
    periodic autocorrelation is ideal, so every twisted DD shift of the
    pilot away from the ridge ``k = l * root^-1 (mod MN)`` is orthogonal to
    it. ``mapping="dd"`` places the chirp directly on the DD grid in
    column-major order instead, which leaves sidelobes near the origin.
    """

    grid: GridParams
    frame: np.ndarray
    root: int
    mapping: str = "td"
    _banks: dict = field(default_factory=dict, repr=False)

    @cached_property
    def td(self) -> np.ndarray:
        return dd_to_td(self.frame)

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Unnormalised DFT of the TD waveform."""
        return np.fft.fft(self.td)


def make_pilot(grid: GridParams, root: int = 101, mapping: str = "td") -> SpreadPilot:
    MN = grid.frame_size
    if mapping not in MAPPINGS:
        raise ValueError(f"mapping must be one of {MAPPINGS}")
    zc = zadoff_chu(MN, root) / np.sqrt(MN)
    if mapping == "td":
        frame = td_to_dd(zc, grid)
    else:
        frame = unvec(zc, grid)
    return SpreadPilot(grid, frame, int(root), mapping)


@dataclass(frozen=True)
class PowerSplit:
    """Pilot and data frame energies.

    Both are totals over the frame: the pilot frame is scaled to energy
    ``e_p`` and each of the ``n_data`` data symbols carries ``e_d / n_data``.
    """

    e_p: float
    e_d: float

    def __post_init__(self):
        if self.e_p < 0 or self.e_d < 0:
            raise ValueError("energies must be non-negative")
        if self.e_p == 0 and self.e_d == 0:
            raise ValueError("pilot and data energies cannot both be zero")

    @classmethod
    def from_pdr(cls, pdr_db: float, e_d: float) -> "PowerSplit":
        return cls(e_d * 10.0 ** (pdr_db / 10.0), e_d)

    @property
    def pdr_db(self) -> float:
        return 10.0 * np.log10(self.e_p / self.e_d)

    def data_amplitude(self, n_data: int) -> float:
        return float(np.sqrt(self.e_d / n_data))


def data_frame(symbols: np.ndarray, mask: NullSpaceMask) -> np.ndarray:
    """DD frame ``unvec(Nmat x')`` carrying the data symbols."""
    return unvec(mask.expand(symbols), mask.grid)


def superimpose(symbols: np.ndarray, pilot: SpreadPilot, split: PowerSplit,
                mask: NullSpaceMask) -> np.ndarray:
    """Transmit DD frame ``sqrt(e_p) x_s + a_d unvec(Nmat x')``."""
    a_d = split.data_amplitude(mask.n_data)
    return np.sqrt(split.e_p) * pilot.frame + a_d * data_frame(symbols, mask)


def estimation_window(grid: GridParams, pulse: PulseShape, max_delay: float,
                      b: int) -> ChannelWindow:
    """Taps the receiver estimates.

    Delays span the physical spread plus a small skirt (a full delay period
    for the sinc pulse); Dopplers span ``-b..b``, capped below ``N / 2``.
    """
    spread = _ceil(max_delay * grid.B)
    l_max = min(b, (grid.N - 1) // 2)
    k_lo, k_hi = -_SKIRT, spread + _SKIRT
    if not pulse.compact or k_hi - k_lo + 1 > grid.M:
        k_lo, k_hi = fundamental_delays(grid, spread)
    return ChannelWindow(k_lo, k_hi, l_max)


def cross_ambiguity(y_dd: np.ndarray, pilot: SpreadPilot, window: ChannelWindow,
                    e_p: float) -> EffectiveChannel:
    """Matched-filter tap estimates on ``window``.

    ``h[k, l] = e_p**-0.5 * sum_{k', l'} y[k', l'] conj(x_s[k' - k, l' - l])
    exp(-j 2 pi l (k' - k) / MN)`` with ``x_s`` extended quasi-periodically.
    The sum is evaluated in the time domain, where a twisted DD shift is a
    delay plus a frequency shift and the sum over delays is a circular
    correlation.
    """
    if e_p <= 0:
        raise ValueError("the pilot needs positive energy")
    grid = pilot.grid
    MN = grid.frame_size
    Y = np.fft.fft(dd_to_td(y_dd))
    P = pilot.spectrum
    # sum_m conj(x[m] e^{j2pi l m/MN}) y[m + k]  ==  ifft(conj(roll(P, l)) * Y)[k]
    rows = np.stack([np.roll(P, l) for l in window.dopplers])
    corr = np.fft.ifft(np.conj(rows) * Y[None, :], axis=1)
    taps = corr[:, window.delays % MN].T / np.sqrt(e_p)
    return EffectiveChannel(grid, window, taps)


def quasi_periodic(X: np.ndarray, k, l) -> np.ndarray:
    """``X[k, l]`` at any integer indices, with
    ``X[k + nM, l + mN] = exp(j 2 pi n l / N) X[k, l]``."""
    M, N = X.shape
    k, l = np.asarray(k), np.asarray(l)
    n, k0 = np.divmod(k, M)
    l0 = l % N
    return X[k0, l0] * np.exp(2j * np.pi * n * l0 / N)


def cross_ambiguity_direct(y_dd: np.ndarray, pilot: SpreadPilot, window: ChannelWindow,
                           e_p: float) -> EffectiveChannel:
    """Reference evaluation of :func:`cross_ambiguity` straight from the DD sum."""
    grid = pilot.grid
    MN = grid.frame_size
    kp, lp = np.meshgrid(np.arange(grid.M), np.arange(grid.N), indexing="ij")
    taps = np.zeros(window.shape, dtype=complex)
    for a, k in enumerate(window.delays):
        for c, l in enumerate(window.dopplers):
            ref = quasi_periodic(pilot.frame, kp - k, lp - l)
            taps[a, c] = np.sum(y_dd * np.conj(ref) * np.exp(-2j * np.pi * l * (kp - k) / MN))
    return EffectiveChannel(grid, window, taps / np.sqrt(e_p))


@dataclass
class ChannelEstimate:
    """Estimated taps and the FD channel they induce."""

    taps: EffectiveChannel
    fd: FDChannel

    @property
    def H(self) -> np.ndarray:
        return self.fd.dense()

    @property
    def H_dd(self) -> np.ndarray:
        return self.fd.dd_dense()


def reconstruct(h_hat: EffectiveChannel) -> ChannelEstimate:
    """Rebuild the FD (and, on demand, DD) channel from estimated taps."""
    return ChannelEstimate(h_hat, fd_channel(periodize(h_hat)))


def pilot_cancel(y_dd: np.ndarray, fd: FDChannel, pilot: SpreadPilot,
                 split: PowerSplit) -> np.ndarray:
    return y_dd - np.sqrt(split.e_p) * fd.dd_apply(pilot.frame)


def data_cancel(y_dd: np.ndarray, fd: FDChannel, symbols: np.ndarray,
                split: PowerSplit, mask: NullSpaceMask) -> np.ndarray:
    a_d = split.data_amplitude(mask.n_data)
    return y_dd - a_d * fd.dd_apply(data_frame(symbols, mask))


def nmse(h_hat: EffectiveChannel, h_true: EffectiveChannel) -> float:
    """``||h_hat - h||^2 / ||h||^2`` over the union of both windows.

    Taps outside the estimation window count as estimated by zero.
    """
    ref = h_true.energy()
    if ref == 0:
        raise ValueError("NMSE is undefined for an all-zero reference channel")
    a, b = h_hat.window, h_true.window
    union = ChannelWindow(min(a.k_lo, b.k_lo), max(a.k_hi, b.k_hi), max(a.l_max, b.l_max))
    diff = h_hat.crop(union).taps - h_true.crop(union).taps
    return float(np.sum(np.abs(diff) ** 2) / ref)


@dataclass
class Detection:
    """Output of one equalise-and-slice pass."""

    indices: np.ndarray
    soft: np.ndarray
    iterations: int


def equalize(y_data: np.ndarray, fd: FDChannel, mask: NullSpaceMask,
             constellation: Constellation, noise: NoiseModel, split: PowerSplit,
             method: str = "cgm", eps: float = 1e-6, max_iter: int = 250) -> Detection:
    """LMMSE-equalise a pilot-free DD observation and slice the symbols.

    ``method="cgm"`` runs the banded FD conjugate-gradient solver with the
    mask's half-bandwidth; ``"dense"`` solves the full DD system directly.
    """
    a_d = split.data_amplitude(mask.n_data)
    eff = NoiseModel(noise.variance / a_d ** 2)
    if method == "cgm":
        res = cgm_equalize(extract_band(fd, mask.b), idfzt(y_data) / a_d, eff, eps, max_iter)
        soft = despread(res.s, mask)
        iters = res.iterations
    elif method == "dense":
        H_eff = fd.dd_dense() @ mask.matrix()
        soft = lmmse_direct(H_eff, vec(y_data) / a_d, eff)
        iters = 0
    else:
        raise ValueError(f"unknown equaliser {method!r}")
    return Detection(constellation.nearest(soft), soft, iters)


@dataclass
class TurboResult:
    """Per-round estimates and decisions; index 0 is the pilot-only round."""

    estimates: list[ChannelEstimate]
    detections: list[Detection]
    nmse: list[float]

    @property
    def final(self) -> Detection:
        return self.detections[-1]


def turbo_estimate(y_dd: np.ndarray, pilot: SpreadPilot, split: PowerSplit,
                   noise: NoiseModel, mask: NullSpaceMask,
                   constellation: Constellation, window: ChannelWindow,
                   n_turbo: int = 0, h_true: EffectiveChannel | None = None,
                   method: str = "cgm", eps: float = 1e-6,
                   max_iter: int = 250) -> TurboResult:
    """Estimate, equalise, and refine the estimate ``n_turbo`` times.

    When ``h_true`` is given, the NMSE of every round's estimate is recorded.
    """
    if n_turbo < 0:
        raise ValueError("n_turbo must be non-negative")
    estimates, detections, errs = [], [], []
    y_pilot = y_dd
    for _ in range(n_turbo + 1):
        est = reconstruct(cross_ambiguity(y_pilot, pilot, window, split.e_p))
        det = equalize(pilot_cancel(y_dd, est.fd, pilot, split), est.fd, mask,
                       constellation, noise, split, method, eps, max_iter)
        estimates.append(est)
        detections.append(det)
        if h_true is not None:
            errs.append(nmse(est.taps, h_true))
        y_pilot = data_cancel(y_dd, est.fd, constellation.points[det.indices], split, mask)
    return TurboResult(estimates, detections, errs)
