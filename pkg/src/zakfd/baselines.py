"""
Reference schemes and fading diagnostics.

* Direct FD mounting: QAM symbols placed straight on the ``MN`` DFT carriers
  and passed through the FD channel matrix.
* CP-OFDM: ``N`` OFDM symbols of ``M`` subcarriers, each with a cyclic
  prefix, pushed through the same doubly-spread TD channel (applied
  linearly, not periodically, since the frame is no longer periodic).
* Energy per carrier, the column energies of ``H^H H``, and an exhaustive
  non-fading check for a candidate carrier basis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .channel import EffectiveChannel, FDChannel, fd_channel
from .equalizer import NoiseModel, apply_channel, lmmse_direct
from .zak import DENSE_CAP, Constellation, GridParams

RECEIVERS = ("genie", "one_tap")


@dataclass(frozen=True)
class OfdmConfig:
    """CP-OFDM frame: ``n_symbols`` blocks of ``n_subcarriers`` plus prefix."""

    n_subcarriers: int
    n_symbols: int
    cp_len: int = 4

    def __post_init__(self):
        if self.n_subcarriers < 1 or self.n_symbols < 1:
            raise ValueError("need at least one subcarrier and one symbol")
        if not 0 <= self.cp_len < self.n_subcarriers:
            raise ValueError(f"cp_len must lie in [0, {self.n_subcarriers}), got {self.cp_len}")

    @classmethod
    def from_grid(cls, grid: GridParams, cp_len: int = 4) -> "OfdmConfig":
        """One OFDM symbol per delay period: spacing ``B / M = nu_p``."""
        return cls(grid.M, grid.N, cp_len)

    @property
    def n_carriers(self) -> int:
        return self.n_subcarriers * self.n_symbols

    @property
    def n_samples(self) -> int:
        return (self.n_subcarriers + self.cp_len) * self.n_symbols


def ofdm_modulate(symbols: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Symbols ordered ``m + t M`` (subcarrier ``m``, OFDM symbol ``t``) -> samples."""
    M, cp = cfg.n_subcarriers, cfg.cp_len
    blocks = np.fft.ifft(symbols.reshape((cfg.n_symbols, M) + symbols.shape[1:]),
                         axis=1, norm="ortho")
    blocks = np.concatenate([blocks[:, M - cp:], blocks], axis=1)
    return blocks.reshape((cfg.n_samples,) + symbols.shape[1:])


def ofdm_demodulate(samples: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    M, cp = cfg.n_subcarriers, cfg.cp_len
    blocks = samples.reshape((cfg.n_symbols, M + cp) + samples.shape[1:])[:, cp:]
    return np.fft.fft(blocks, axis=1, norm="ortho").reshape((cfg.n_carriers,) + samples.shape[1:])


def linear_td_channel(h: EffectiveChannel, n_samples: int) -> sp.csr_matrix:
    """Aperiodic TD operator ``y[n] = sum h[k, l] x[n - k] exp(j 2 pi l (n - k) / MN)``.

    Samples outside ``0 <= n < n_samples`` are zero, so taps at negative
    delays see the start of the next block and the frame edges are clean.
    """
    MN = h.grid.frame_size
    rows, cols, vals = [], [], []
    l = h.window.dopplers
    for j, k in enumerate(h.window.delays):
        if not np.any(h.taps[j]):
            continue
        m = np.arange(max(0, -k), min(n_samples, n_samples - k))
        gain = np.exp(2j * np.pi * np.outer(m, l) / MN) @ h.taps[j]
        rows.append(m + k)
        cols.append(m)
        vals.append(gain)
    if not rows:
        return sp.csr_matrix((n_samples, n_samples), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_samples, n_samples))


def ofdm_channel_matrix(h: EffectiveChannel, cfg: OfdmConfig, cap: int = DENSE_CAP) -> np.ndarray:
    """Frame-wide carrier-to-carrier matrix, ICI and inter-symbol leakage included."""
    if cfg.n_carriers > cap:
        raise ValueError(f"{cfg.n_carriers} carriers exceed the dense cap {cap}")
    C = linear_td_channel(h, cfg.n_samples)
    E = np.eye(cfg.n_carriers, dtype=complex)
    return ofdm_demodulate(C @ ofdm_modulate(E, cfg), cfg)


def ofdm_transceive(bits, h: EffectiveChannel, receiver: str, noise: NoiseModel,
                    rng: np.random.Generator | None = None,
                    constellation: Constellation | None = None,
                    cfg: OfdmConfig | None = None,
                    H: np.ndarray | None = None) -> np.ndarray:
    """Send one CP-OFDM frame through ``h`` and return the detected bits.

    ``genie`` runs dense LMMSE on the full frame matrix; ``one_tap`` divides
    each carrier by its own channel gain. A precomputed frame matrix can be
    passed as ``H`` when several frames share one channel.
    """
    if receiver not in RECEIVERS:
        raise ValueError(f"receiver must be one of {RECEIVERS}")
    constellation = constellation or Constellation.qam(4)
    cfg = cfg or OfdmConfig.from_grid(h.grid)
    x = constellation.map(bits)
    if x.size != cfg.n_carriers:
        raise ValueError(f"need {cfg.n_carriers} symbols, got {x.size}")
    C = linear_td_channel(h, cfg.n_samples)
    y = C @ ofdm_modulate(x, cfg)
    if noise.variance > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise is present")
        y = y + noise.sample(y.shape, rng)
    r = ofdm_demodulate(y, cfg)
    if H is None:
        H = ofdm_channel_matrix(h, cfg)
    return constellation.demap(_receive(H, r, receiver, noise))


def _receive(H: np.ndarray, r: np.ndarray, receiver: str, noise: NoiseModel) -> np.ndarray:
    if receiver == "genie":
        if noise.variance == 0:
            return np.linalg.solve(H, r)
        return lmmse_direct(H, r, noise)
    return r / np.diag(H)


def fd_mount_transmit(x: np.ndarray, h, noise: NoiseModel | None = None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """``r = H x + w`` with symbols mounted directly on the DFT carriers.

    ``h`` is a :class:`PeriodizedChannel` or a prebuilt :class:`FDChannel`.
    """
    fd = h if isinstance(h, FDChannel) else fd_channel(h)
    return apply_channel(fd, np.asarray(x, dtype=complex), noise or NoiseModel(0.0), rng)


def fd_mount_receive(r: np.ndarray, H: np.ndarray, receiver: str,
                     noise: NoiseModel) -> np.ndarray:
    """Soft symbols from a directly-mounted FD frame (dense ``H``)."""
    if receiver not in RECEIVERS:
        raise ValueError(f"receiver must be one of {RECEIVERS}")
    return _receive(H, r, receiver, noise)


def energy_per_carrier(H: np.ndarray) -> np.ndarray:
    """Received energy of each carrier, ``diag(H^H H)`` (column energies)."""
    return np.sum(np.abs(H) ** 2, axis=0)


def relative_db(energy: np.ndarray) -> np.ndarray:
    """Energies in dB relative to their mean."""
    return 10.0 * np.log10(energy / np.mean(energy))


def fading_spread(energy: np.ndarray) -> float:
    """Relative spread ``(max - min) / mean`` of carrier energies."""
    return float((energy.max() - energy.min()) / np.mean(energy))


def non_fading(basis: np.ndarray, delays, max_doppler_diff: int, tol: float = 1e-9) -> bool:
    """Exhaustive test of the non-fading condition for a carrier basis.

    Column ``i`` of ``basis`` is a TD carrier over one period. Carrier
    energies are equal for every channel supported on ``delays`` with
    Doppler differences ``|l2 - l1| <= max_doppler_diff`` iff, for every
    delay pair, the Fourier coefficients
    ``sum_n phi_i[n - k2] conj(phi_i[n - k1]) exp(j 2 pi m n / MN)`` at
    those ``m`` do not depend on ``i``.
    """
    MN = basis.shape[0]
    m = np.arange(-max_doppler_diff, max_doppler_diff + 1)
    W = np.exp(2j * np.pi * np.outer(m, np.arange(MN)) / MN)
    for k1 in delays:
        a = np.roll(basis, k1, axis=0).conj()
        for k2 in delays:
            coef = W @ (np.roll(basis, k2, axis=0) * a)
            if np.max(np.abs(coef - coef[:, :1])) > tol:
                return False
    return True


def write_energy_csv(path, columns: dict[str, np.ndarray]):
    """One row per carrier, one column per scheme (linear energies)."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["carrier"] + names)
        for i in range(len(columns[names[0]])):
            w.writerow([i] + [repr(float(columns[n][i])) for n in names])

