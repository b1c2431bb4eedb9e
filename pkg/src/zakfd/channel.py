"""
Doubly-spread channel synthesis and the channel matrices it induces.

A physical channel is a small set of paths ``(h_i, tau_i, nu_i)``. Pulse
shaping turns it into discrete effective taps ``h_eff[k, l]`` on a delay x
Doppler window, which are then wrapped modulo ``MN`` and turned into the
TD operator, the DD matrix (pulsone basis) or the FD matrix (DFT basis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pulses import PulseShape
from .zak import DENSE_CAP, GridParams, dfzt, idfzt, pulsone, vec

VEH_A_DELAYS_US = np.array([0.0, 0.31, 0.71, 1.09, 1.73, 2.51])
VEH_A_POWERS_DB = np.array([0.0, -1.0, -9.0, -10.0, -15.0, -20.0])

# skirt (in bins) kept around the physical spread for compact pulses
_SKIRT = 4


def _ceil(x: float) -> int:
    # guards against 2.0000000001 from float products such as nu_max * T
    return math.ceil(x - 1e-9)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class PathSet:
    """Physical multipath: complex gains, delays (s) and Dopplers (Hz)."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    nu_max: float = 0.0

    def __post_init__(self):
        if not (len(self.gains) == len(self.delays) == len(self.dopplers)):
            raise ValueError("gains, delays and dopplers must have equal length")
        if np.any(self.delays < 0):
            raise ValueError("path delays must be non-negative")
        if np.any(np.abs(self.dopplers) > self.nu_max * (1 + 1e-12)):
            raise ValueError("path Doppler exceeds nu_max")

    def __len__(self):
        return len(self.gains)

    @property
    def max_delay(self) -> float:
        return float(np.max(self.delays)) if len(self) else 0.0

    @classmethod
    def single(cls, gain=1.0, delay=0.0, doppler=0.0) -> "PathSet":
        return cls(np.array([gain], dtype=complex), np.array([float(delay)]),
                   np.array([float(doppler)]), abs(float(doppler)))


def veh_a_paths(nu_max: float, seed=None) -> PathSet:
    """Six-path Vehicular-A realisation with Jakes-style Doppler draws.

    Path powers follow the Veh-A profile normalised to unit total power,
    phases are uniform, and ``nu_i = nu_max * cos(theta_i)`` with
    ``theta_i ~ U(-pi, pi)``.
    """
    if nu_max < 0:
        raise ValueError("nu_max must be non-negative")
    rng = as_rng(seed)
    power = 10.0 ** (VEH_A_POWERS_DB / 10.0)
    power /= power.sum()
    phase = rng.uniform(-np.pi, np.pi, size=power.size)
    theta = rng.uniform(-np.pi, np.pi, size=power.size)
    return PathSet(
        gains=np.sqrt(power) * np.exp(1j * phase),
        delays=VEH_A_DELAYS_US * 1e-6,
        dopplers=nu_max * np.cos(theta),
        nu_max=float(nu_max),
    )


@dataclass(frozen=True)
class ChannelWindow:
    """Tap window: delays ``k_lo..k_hi`` and Dopplers ``-l_max..l_max`` (bins)."""

    k_lo: int
    k_hi: int
    l_max: int

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_hi + 1)

    @property
    def dopplers(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.k_hi - self.k_lo + 1, 2 * self.l_max + 1)

    def check(self, grid: GridParams):
        if self.k_hi < self.k_lo or self.l_max < 0:
            raise ValueError(f"empty channel window {self}")
        if self.shape[0] > grid.frame_size:
            raise ValueError(f"delay window {self.shape[0]} wider than MN = {grid.frame_size}")
        if 2 * self.l_max + 1 > grid.N:
            raise ValueError(f"Doppler window 2*{self.l_max}+1 wider than N = {grid.N}")


def default_window(grid: GridParams, pulse: PulseShape, max_delay: float,
                   nu_max: float) -> ChannelWindow:
    """Support window for :func:`effective_channel`.

    Compact pulses keep a skirt of a few bins around the physical spread,
    clipped to one delay period. The sinc pulse decays too slowly for that:
    its window reaches one full delay period beyond each end of the spread
    and covers every Doppler bin below ``N / 2``.
    """
    spread = _ceil(max_delay * grid.B)
    if spread > grid.M - 1:
        raise ValueError("delay spread does not fit within one delay period")
    l_cap = (grid.N - 1) // 2
    if not pulse.compact:
        return ChannelWindow(-grid.M, spread + grid.M, l_cap)
    k_lo, k_hi = -_SKIRT, spread + _SKIRT
    l_max = max(_ceil(5 * nu_max * grid.T), _ceil(nu_max * grid.T) + _SKIRT)
    if k_hi - k_lo + 1 > grid.M:
        k_lo, k_hi = fundamental_delays(grid, spread)
    return ChannelWindow(k_lo, k_hi, min(l_max, l_cap))


def fundamental_delays(grid: GridParams, spread: int) -> tuple[int, int]:
    """One full delay period ``(k_lo, k_hi)`` centred on ``0..spread``."""
    k_lo = -((grid.M - 1 - spread) // 2)
    return k_lo, k_lo + grid.M - 1


@dataclass
class EffectiveChannel:
    """Discrete DD taps ``taps[k - k_lo, l + l_max]`` on a window."""

    grid: GridParams
    window: ChannelWindow
    taps: np.ndarray

    def __post_init__(self):
        if self.taps.shape != self.window.shape:
            raise ValueError(f"taps shape {self.taps.shape} != window {self.window.shape}")

    @property
    def support(self) -> list[tuple[int, int]]:
        kk, ll = np.nonzero(self.taps)
        return [(int(k + self.window.k_lo), int(l - self.window.l_max)) for k, l in zip(kk, ll)]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))

    def crop(self, window: ChannelWindow) -> "EffectiveChannel":
        """Restrict (or zero-extend) the taps to another window."""
        out = np.zeros(window.shape, dtype=complex)
        w = self.window
        klo, khi = max(w.k_lo, window.k_lo), min(w.k_hi, window.k_hi)
        lm = min(w.l_max, window.l_max)
        if klo <= khi:
            out[klo - window.k_lo: khi - window.k_lo + 1,
                window.l_max - lm: window.l_max + lm + 1] = \
                self.taps[klo - w.k_lo: khi - w.k_lo + 1, w.l_max - lm: w.l_max + lm + 1]
        return EffectiveChannel(self.grid, window, out)

    def to_text(self) -> str:
        """One ``k l re im`` line per nonzero tap."""
        lines = []
        for k, l in self.support:
            v = self.taps[k - self.window.k_lo, l + self.window.l_max]
            lines.append(f"{k} {l} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str, grid: GridParams,
                  window: ChannelWindow | None = None) -> "EffectiveChannel":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        ks = [int(r[0]) for r in rows]
        ls = [int(r[1]) for r in rows]
        if window is None:
            window = ChannelWindow(min(ks, default=0), max(ks, default=0),
                                   max((abs(x) for x in ls), default=0))
        taps = np.zeros(window.shape, dtype=complex)
        for k, l, r in zip(ks, ls, rows):
            taps[k - window.k_lo, l + window.l_max] += float(r[2]) + 1j * float(r[3])
        return cls(grid, window, taps)

    @classmethod
    def load(cls, path, grid: GridParams, window: ChannelWindow | None = None):
        return cls.from_text(Path(path).read_text(), grid, window)


def effective_channel(paths: PathSet, pulse: PulseShape, grid: GridParams,
                      window: ChannelWindow | None = None,
                      floor: float = 1e-6) -> EffectiveChannel:
    """Sample the pulse-shaped channel on the DD lattice.

    ``h_eff[k, l] = sum_p h_p g_tau(k - tau_p B) g_nu(l - nu_p T)
    exp(-j 2 pi nu_p (k / B - tau_p))``; taps below ``floor`` times the
    peak magnitude are zeroed.
    """
    if window is None:
        window = default_window(grid, pulse, paths.max_delay, paths.nu_max)
    window.check(grid)
    if np.any(paths.delays * grid.B > window.k_hi) or np.any(paths.delays * grid.B < window.k_lo):
        raise ValueError("path delays fall outside the channel window")
    if np.any(paths.delays >= grid.tau_p):
        raise ValueError("path delays must be shorter than the delay period")
    k = window.delays[:, None].astype(float)
    l = window.dopplers[:, None].astype(float)
    tau_b = paths.delays[None, :] * grid.B
    nu_t = paths.dopplers[None, :] * grid.T
    g_tau = pulse.delay_response(k - tau_b)
    g_nu = pulse.doppler_response(l - nu_t)
    # phase exp(-j 2 pi nu (k/B - tau)) written in bin units
    phase = np.exp(-2j * np.pi * nu_t * (k - tau_b) / grid.frame_size)
    taps = np.einsum("p,kp,lp->kl", paths.gains, g_tau * phase, g_nu)
    peak = np.abs(taps).max(initial=0.0)
    if peak > 0:
        taps[np.abs(taps) < floor * peak] = 0.0
    return EffectiveChannel(grid, window, taps)


@dataclass
class PeriodizedChannel:
    """``MN``-periodised taps stored sparsely as ``(kbar, lbar, value)``."""

    grid: GridParams
    kbar: np.ndarray
    lbar: np.ndarray
    values: np.ndarray

    def dense(self) -> np.ndarray:
        MN = self.grid.frame_size
        h = np.zeros((MN, MN), dtype=complex)
        np.add.at(h, (self.kbar, self.lbar), self.values)
        return h

    @classmethod
    def delta(cls, grid: GridParams, gain=1.0) -> "PeriodizedChannel":
        return cls(grid, np.array([0]), np.array([0]), np.array([gain], dtype=complex))


def periodize(h_eff: EffectiveChannel) -> PeriodizedChannel:
    """Fold the taps modulo ``MN`` in both indices, summing aliases."""
    MN = h_eff.grid.frame_size
    kk, ll = np.nonzero(h_eff.taps)
    vals = h_eff.taps[kk, ll]
    kbar = (kk + h_eff.window.k_lo) % MN
    lbar = (ll - h_eff.window.l_max) % MN
    key = kbar * MN + lbar
    uniq, inv = np.unique(key, return_inverse=True)
    acc = np.zeros(uniq.size, dtype=complex)
    np.add.at(acc, inv, vals)
    return PeriodizedChannel(h_eff.grid, uniq // MN, uniq % MN, acc)


def td_apply(h: PeriodizedChannel, x: np.ndarray) -> np.ndarray:
    """``y[n] = sum h[k, l] x[n - k] exp(j 2 pi l (n - k) / MN)`` for periodic x."""
    MN = h.grid.frame_size
    n = np.arange(MN)
    y = np.zeros(np.shape(x), dtype=complex)
    for k, l, v in zip(h.kbar, h.lbar, h.values):
        ph = np.exp(2j * np.pi * l * ((n - k) % MN) / MN)
        ph = ph.reshape((MN,) + (1,) * (np.ndim(x) - 1))
        y += v * ph * np.roll(x, k, axis=0)
    return y


def td_channel_operator(h: PeriodizedChannel, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``C`` with ``y = C x`` for one period of an ``MN``-periodic x."""
    MN = h.grid.frame_size
    if MN > cap:
        raise ValueError(f"MN = {MN} exceeds the dense cap {cap}")
    n = np.arange(MN)
    C = np.zeros((MN, MN), dtype=complex)
    for k, l, v in zip(h.kbar, h.lbar, h.values):
        m = (n - k) % MN
        C[n, m] += v * np.exp(2j * np.pi * l * m / MN)
    return C


def basis_matrix(grid: GridParams, basis: str) -> np.ndarray:
    """Columns are the TD basis signals (pulsone order ``i = k0 + l0 M``)."""
    MN = grid.frame_size
    if basis == "dft":
        n = np.arange(MN)
        return np.exp(2j * np.pi * np.outer(n, n) / MN) / np.sqrt(MN)
    if basis == "pulsone":
        Phi = np.empty((MN, MN), dtype=complex)
        for l0 in range(grid.N):
            for k0 in range(grid.M):
                Phi[:, k0 + l0 * grid.M] = pulsone(grid, k0, l0)
        return Phi
    raise ValueError(f"unknown basis {basis!r}")


def build_H_basis(h: PeriodizedChannel, basis: str = "pulsone",
                  cap: int = DENSE_CAP) -> np.ndarray:
    """``H[f, i] = phi_f^H C phi_i`` by explicit projection (oracle route)."""
    Phi = basis_matrix(h.grid, basis)
    C = td_channel_operator(h, cap)
    return Phi.conj().T @ C @ Phi


@dataclass
class FDChannel:
    """FD channel kept as its nonzero cyclic diagonals.

    ``H[f, (f - offsets[j]) mod MN] = diags[j, f]``. Applying it costs one
    multiply-add per stored diagonal entry.
    """

    grid: GridParams
    offsets: np.ndarray
    diags: np.ndarray

    def matvec(self, s: np.ndarray) -> np.ndarray:
        y = np.zeros(np.shape(s), dtype=complex)
        shape = (-1,) + (1,) * (np.ndim(s) - 1)
        for off, d in zip(self.offsets, self.diags):
            y += d.reshape(shape) * np.roll(s, off, axis=0)
        return y

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        s = np.zeros(np.shape(y), dtype=complex)
        shape = (-1,) + (1,) * (np.ndim(y) - 1)
        for off, d in zip(self.offsets, self.diags):
            s += np.roll(d.conj().reshape(shape) * y, -off, axis=0)
        return s

    def dense(self) -> np.ndarray:
        MN = self.grid.frame_size
        f = np.arange(MN)
        H = np.zeros((MN, MN), dtype=complex)
        for off, d in zip(self.offsets, self.diags):
            H[f, (f - off) % MN] += d
        return H

    def signed_offsets(self) -> np.ndarray:
        """Offsets mapped to ``(-MN/2, MN/2]`` (positive = below the diagonal)."""
        MN = self.grid.frame_size
        return np.where(self.offsets > MN // 2, self.offsets - MN, self.offsets)

    def dd_apply(self, X: np.ndarray) -> np.ndarray:
        """Apply ``H_DD = R^H H R`` to DD frame(s) through the fast transforms."""
        return dfzt(self.matvec(idfzt(X)), self.grid)

    def dd_dense(self) -> np.ndarray:
        """Dense ``H_DD`` assembled column by column with the fast transforms."""
        grid = self.grid
        MN = grid.frame_size
        E = np.eye(MN, dtype=complex).reshape(grid.M, grid.N, MN, order="F")
        return vec(self.dd_apply(E))


def fd_channel(h: PeriodizedChannel) -> FDChannel:
    """Diagonals of ``H[f, i] = sum_k h[k, (f - i) mod MN] exp(-j 2 pi f k / MN)``."""
    MN = h.grid.frame_size
    f = np.arange(MN)
    offsets = np.unique(h.lbar)
    diags = np.zeros((offsets.size, MN), dtype=complex)
    for j, off in enumerate(offsets):
        sel = h.lbar == off
        diags[j] = np.exp(-2j * np.pi * np.outer(f, h.kbar[sel]) / MN) @ h.values[sel]
    return FDChannel(h.grid, offsets, diags)


def build_H_fd(h: PeriodizedChannel, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense FD channel matrix from its closed form."""
    if h.grid.frame_size > cap:
        raise ValueError(f"MN = {h.grid.frame_size} exceeds the dense cap {cap}")
    return fd_channel(h).dense()


def band_preset(kind: str, grid: GridParams, nu_max: float) -> int:
    """Half-bandwidth used with each pulse family in the reference experiments."""
    nt = nu_max * grid.T
    if kind in ("rrc", "gauss"):
        return _ceil(nt) + 1
    if kind == "gauss-sinc":
        return _ceil(5 * nt)
    if kind == "sinc":
        return grid.N + 1
    raise ValueError(f"unsupported pulse kind {kind!r}")


def doppler_band_width(h: PeriodizedChannel, threshold: float = 1e-6) -> int:
    """Smallest ``b`` such that entries with ``(f - i) mod MN`` outside
    ``[0, b] U [MN - b, MN)`` are below ``threshold * max|H|``."""
    fd = fd_channel(h)
    mags = np.abs(fd.diags).max(axis=1) if fd.diags.size else np.zeros(0)
    peak = mags.max(initial=0.0)
    if peak == 0:
        return 0
    sig = np.abs(fd.signed_offsets()[mags >= threshold * peak])
    return int(sig.max(initial=0))
