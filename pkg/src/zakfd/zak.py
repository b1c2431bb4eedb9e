"""
Delay-Doppler grid geometry, QAM constellations and the transforms between
the delay-Doppler (DD), frequency (FD) and time (TD) representations of a
Zak-OTFS frame.

Array conventions
-----------------
* A DD frame is an ``(M, N)`` complex array ``X[k0, l0]`` (delay index first).
* An FD vector is a length ``MN`` complex array ``s[i]``.
* A TD signal is a length ``MN`` complex array holding one period of an
  ``MN``-periodic sequence.
* ``vec(X)`` is column-major (delay index fastest), so the flat DD index is
  ``i = k0 + l0 * M``.

All transforms accept extra trailing axes and act on the leading frame
axes, so a batch of frames ``(M, N, B)`` maps to a batch ``(MN, B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

#: Largest frame size ``MN`` for which dense ``MN x MN`` matrices are built.
DENSE_CAP = 4096


@dataclass(frozen=True)
class GridParams:
    """Geometry of the DD lattice.

    Parameters
    ----------
    M : int
        Number of delay bins.
    N : int
        Number of Doppler bins.
    nu_p : float
        Doppler period in Hz. The delay period is ``1 / nu_p``.
    """

    M: int
    N: int
    nu_p: float = 30e3

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.nu_p > 0:
            raise ValueError(f"nu_p must be positive, got {self.nu_p!r}")

    @property
    def tau_p(self) -> float:
        """Delay period in seconds."""
        return 1.0 / self.nu_p

    @property
    def B(self) -> float:
        """Bandwidth ``M * nu_p`` in Hz."""
        return self.M * self.nu_p

    @property
    def T(self) -> float:
        """Frame duration ``N * tau_p`` in seconds."""
        return self.N / self.nu_p

    @property
    def frame_size(self) -> int:
        return self.M * self.N

    @property
    def carrier_spacing(self) -> float:
        """Spacing ``B / MN`` of the ``MN`` frequency-domain carriers."""
        return self.B / self.frame_size


@dataclass(frozen=True)
class Constellation:
    """Square QAM constellation with a Gray bit labelling.

    The point with index ``j`` carries the bits of ``j`` written MSB first.
    The first half of the bits selects the in-phase level, the second half
    the quadrature level; each axis uses a binary-reflected Gray code over
    the levels ``+(L-1), ..., -(L-1)``. For 4-QAM this gives::

        00 -> ( 1 + 1j) / sqrt(2)     01 -> ( 1 - 1j) / sqrt(2)
        10 -> (-1 + 1j) / sqrt(2)     11 -> (-1 - 1j) / sqrt(2)
    """

    name: str
    points: np.ndarray = field(repr=False)
    bits_per_symbol: int

    def __post_init__(self):
        if len(self.points) != 2 ** self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")

    @classmethod
    def qam(cls, order: int = 4) -> "Constellation":
        bps = int(round(np.log2(order)))
        if 2 ** bps != order or bps % 2:
            raise ValueError(f"square QAM needs order 4**k, got {order}")
        half = bps // 2
        levels = 2 ** half
        # gray code g -> amplitude level, largest amplitude first
        amp = np.empty(levels)
        for pos in range(levels):
            g = pos ^ (pos >> 1)
            amp[g] = levels - 1 - 2 * pos
        idx = np.arange(order)
        pts = amp[idx >> half] + 1j * amp[idx & (levels - 1)]
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
        return cls(f"{order}-QAM", pts, bps)

    def map(self, bits) -> np.ndarray:
        """Map a flat 0/1 array onto constellation points."""
        bits = np.asarray(bits, dtype=np.int64).ravel()
        k = self.bits_per_symbol
        if bits.size % k:
            raise ValueError(
                f"bit count {bits.size} is not a multiple of {k} bits/symbol"
            )
        weights = 1 << np.arange(k - 1, -1, -1)
        return self.points[bits.reshape(-1, k) @ weights]

    def nearest(self, symbols) -> np.ndarray:
        """Index of the nearest point; ties go to the lowest index."""
        symbols = np.asarray(symbols).ravel()
        dist = np.abs(symbols[:, None] - self.points[None, :])
        return np.argmin(dist, axis=1)

    def demap(self, symbols) -> np.ndarray:
        """Hard minimum-distance demapping back to bits."""
        idx = self.nearest(symbols)
        k = self.bits_per_symbol
        shifts = np.arange(k - 1, -1, -1)
        return ((idx[:, None] >> shifts) & 1).astype(np.int8).ravel()

    @cached_property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())


def vec(X: np.ndarray) -> np.ndarray:
    """Column-major flattening of the leading ``(M, N)`` axes."""
    M, N = X.shape[:2]
    return X.reshape((M * N,) + X.shape[2:], order="F")


def unvec(x: np.ndarray, grid: GridParams) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return x.reshape((grid.M, grid.N) + x.shape[1:], order="F")


def pulsone(grid: GridParams, k0: int, l0: int) -> np.ndarray:
    """TD pulsone ``p_(k0, l0)[n]`` over one period ``0 <= n < MN``.

    A train of ``N`` impulses at ``n = k0 + d*M`` modulated by the tone
    ``exp(j 2 pi d l0 / N) / sqrt(N)``.
    """
    M, N = grid.M, grid.N
    if not (0 <= k0 < M and 0 <= l0 < N):
        raise ValueError(f"pulsone index ({k0}, {l0}) outside {M}x{N} grid")
    x = np.zeros(M * N, dtype=complex)
    d = np.arange(N)
    x[k0 + d * M] = np.exp(2j * np.pi * d * l0 / N) / np.sqrt(N)
    return x


def dd_to_td(X: np.ndarray) -> np.ndarray:
    """Superpose pulsones weighted by the DD symbols ``X``."""
    M, N = X.shape[:2]
    # x[k0 + d*M] = sqrt(N) * IDFT_l(X[k0, :])[d]
    Z = np.fft.ifft(X, axis=1) * np.sqrt(N)
    return np.swapaxes(Z, 0, 1).reshape((M * N,) + X.shape[2:])


def td_to_dd(x: np.ndarray, grid: GridParams) -> np.ndarray:
    """Project a TD signal onto the pulsone basis (inverse of dd_to_td)."""
    M, N = grid.M, grid.N
    Z = x.reshape((N, M) + x.shape[1:])
    return np.fft.fft(np.swapaxes(Z, 0, 1), axis=1) / np.sqrt(N)


def _twist(grid: GridParams) -> np.ndarray:
    """Phase ``q[k, l] = exp(-j 2 pi l k / MN)`` as an ``(M, N)`` array."""
    k = np.arange(grid.M)[:, None]
    l = np.arange(grid.N)[None, :]
    return np.exp(-2j * np.pi * k * l / grid.frame_size)


def idfzt(X: np.ndarray) -> np.ndarray:
    """Inverse discrete frequency Zak transform (DD frame -> FD vector).

    ``s[i] = M**-0.5 * sum_k0 X[k0, i mod N] * exp(-j 2 pi i k0 / MN)``.
    """
    M, N = X.shape[:2]
    q = _twist(GridParams(M, N))
    q = q.reshape(q.shape + (1,) * (X.ndim - 2))
    Z = np.fft.fft(X * q, axis=0) / np.sqrt(M)
    # s[l + m*N] = Z[m, l]
    return Z.reshape((M * N,) + X.shape[2:])


def dfzt(s: np.ndarray, grid: GridParams) -> np.ndarray:
    """Discrete frequency Zak transform (FD vector -> DD frame)."""
    M, N = grid.M, grid.N
    if s.shape[0] != M * N:
        raise ValueError(f"FD vector length {s.shape[0]} != MN = {M * N}")
    Z = s.reshape((M, N) + s.shape[1:])
    q = _twist(grid)
    q = q.reshape(q.shape + (1,) * (s.ndim - 1))
    return np.fft.ifft(Z, axis=0) * np.sqrt(M) * np.conj(q)


def td_from_fd(s: np.ndarray) -> np.ndarray:
    """Synthesize the TD signal from FD coefficients (unitary IDFT)."""
    return np.fft.ifft(s, axis=0, norm="ortho")


def fd_from_td(x: np.ndarray) -> np.ndarray:
    """Unitary DFT, the analysis side of :func:`td_from_fd`."""
    return np.fft.fft(x, axis=0, norm="ortho")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary ``n``-point DFT matrix ``F[m, k] = exp(-j 2 pi m k / n) / sqrt(n)``."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def stride_permutation(M: int, N: int) -> np.ndarray:
    """Permutation ``K = sum_ij E_ij^T kron E_ij`` with ``E_ij`` of size N x M."""
    K = np.zeros((M * N, M * N))
    for i in range(N):
        for j in range(M):
            E = np.zeros((N, M))
            E[i, j] = 1.0
            K += np.kron(E.T, E)
    return K


def build_R(grid: GridParams, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense IDFZT matrix ``R = K (I_N kron F_M) diag(q)``.

    Built from its Kronecker factorisation rather than from :func:`idfzt`, so
    the two can be cross-checked. ``R @ vec(X) == idfzt(X)``.
    """
    M, N = grid.M, grid.N
    MN = M * N
    if MN > cap:
        raise ValueError(f"MN = {MN} exceeds the dense cap {cap}")
    q = vec(_twist(grid))
    blk = np.kron(np.eye(N), dft_matrix(M))
    # K is a permutation: apply it as a row gather instead of a dense product
    perm = np.empty(MN, dtype=np.int64)
    m, l = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    perm[(l + m * N).ravel()] = (m + l * M).ravel()
    return blk[perm, :] * q[None, :]
