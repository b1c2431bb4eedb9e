"""
Banded FD equalisation.

Symbols are mounted on the null space of the first and last ``b`` rows of
the IDFZT matrix so that the transmitted FD vector has ``b`` zeros at each
end. The cyclic corners of the FD channel then never touch the signal and
the channel acts as a true banded matrix, which the conjugate-gradient
LMMSE solver exploits at ``O(b MN)`` per iteration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
import scipy.linalg

from .channel import FDChannel
from .zak import DENSE_CAP, Constellation, GridParams, dfzt, idfzt, unvec, vec


@dataclass(frozen=True)
class NoiseModel:
    """Circularly-symmetric white Gaussian noise, covariance ``variance * I``."""

    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("noise variance must be non-negative")

    @classmethod
    def from_snr_db(cls, snr_db: float, symbol_energy: float = 1.0) -> "NoiseModel":
        return cls(symbol_energy * 10.0 ** (-snr_db / 10.0))

    def sample(self, shape, rng: np.random.Generator) -> np.ndarray:
        scale = np.sqrt(self.variance / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@numba.njit(cache=True)
def _band_matvec(bands, b, x, out):
    n = x.shape[0]
    for f in range(n):
        acc = 0j
        for d in range(max(-b, f - n + 1), min(b, f) + 1):
            acc += bands[d + b, f] * x[f - d]
        out[f] = acc


@numba.njit(cache=True)
def _band_rmatvec(bands, b, y, out):
    n = y.shape[0]
    for i in range(n):
        acc = 0j
        for d in range(max(-b, -i), min(b, n - 1 - i) + 1):
            acc += np.conj(bands[d + b, i + d]) * y[i + d]
        out[i] = acc


class BandedMatrix:
    """Square matrix with entries only on ``|f - i| <= b``.

    Stored diagonal-major: ``bands[d + b, f] = H[f, f - d]`` for
    ``-b <= d <= b``; slots that fall outside the matrix hold zeros.
    """

    def __init__(self, bands: np.ndarray, b: int):
        bands = np.ascontiguousarray(bands, dtype=complex)
        if bands.shape[0] != 2 * b + 1:
            raise ValueError(f"expected {2 * b + 1} diagonals, got {bands.shape[0]}")
        self.b = int(b)
        self.n = bands.shape[1]
        f = np.arange(self.n)
        d = np.arange(-b, b + 1)[:, None]
        bands[(f - d < 0) | (f - d >= self.n)] = 0.0
        self.bands = bands

    @property
    def shape(self):
        return (self.n, self.n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=complex)
        out = np.empty(self.n, dtype=complex)
        _band_matvec(self.bands, self.b, x, out)
        return out

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        """Product with the conjugate transpose."""
        y = np.ascontiguousarray(y, dtype=complex)
        out = np.empty(self.n, dtype=complex)
        _band_rmatvec(self.bands, self.b, y, out)
        return out

    def __matmul__(self, x):
        return self.matvec(x)

    def dense(self) -> np.ndarray:
        H = np.zeros(self.shape, dtype=complex)
        f = np.arange(self.n)
        for d in range(-self.b, self.b + 1):
            ok = (f - d >= 0) & (f - d < self.n)
            H[f[ok], f[ok] - d] = self.bands[d + self.b, ok]
        return H


def extract_band(H, b: int) -> BandedMatrix:
    """Keep the entries of an FD channel with ``|f - i| <= b``.

    ``H`` is a dense array or an :class:`FDChannel`. The folded corner
    entries are dropped; they only multiply the masked-out FD slots.
    """
    if isinstance(H, FDChannel):
        n = H.grid.frame_size
        bands = np.zeros((2 * b + 1, n), dtype=complex)
        for off, d in zip(H.signed_offsets(), H.diags):
            if abs(off) <= b:
                bands[off + b] += d
        return BandedMatrix(bands, b)
    H = np.asarray(H)
    n = H.shape[0]
    if 2 * b + 1 > 2 * n - 1:
        b = n - 1
    f = np.arange(n)
    bands = np.zeros((2 * b + 1, n), dtype=complex)
    for d in range(-b, b + 1):
        ok = (f - d >= 0) & (f - d < n)
        bands[d + b, ok] = H[f[ok], f[ok] - d]
    return BandedMatrix(bands, b)


def idfzt_rows(grid: GridParams, rows) -> np.ndarray:
    """Selected rows of the IDFZT matrix, ``R[f, k0 + l0 M]``, without forming R."""
    M, N = grid.M, grid.N
    rows = np.asarray(rows)
    out = np.zeros((rows.size, M * N), dtype=complex)
    k0 = np.arange(M)
    for j, f in enumerate(rows):
        out[j, k0 + (f % N) * M] = np.exp(-2j * np.pi * f * k0 / (M * N)) / np.sqrt(M)
    return out


class NullSpaceMask:
    """Orthonormal basis ``Nmat`` of the null space of ``R'``.

    ``R'`` stacks the first ``b`` and last ``b`` rows of the IDFZT matrix.
    The basis is the trailing ``MN - 2b`` columns of the complete Householder
    QR factor of ``R'^H``; it is applied through the ``2b`` reflectors and
    never materialised, so encoding costs ``O(b MN)``.
    """

    def __init__(self, grid: GridParams, b: int):
        MN = grid.frame_size
        if b < 0 or 2 * b >= MN:
            raise ValueError(f"need 0 <= 2b < MN, got b = {b}, MN = {MN}")
        self.grid = grid
        self.b = int(b)
        self.rows = np.r_[np.arange(b), np.arange(MN - b, MN)].astype(int)
        if b:
            (qr, tau), _ = scipy.linalg.qr(idfzt_rows(grid, self.rows).conj().T, mode="raw")
            self._v = [np.r_[1.0, qr[j + 1:, j]] for j in range(2 * b)]
            self._tau = tau
        else:
            self._v, self._tau = [], np.zeros(0)

    @property
    def n_data(self) -> int:
        return self.grid.frame_size - 2 * self.b

    def _q(self, z):
        for j in range(2 * self.b - 1, -1, -1):
            v = self._v[j]
            z[j:] -= self._tau[j] * np.outer(v, v.conj() @ z[j:]).reshape(z[j:].shape)
        return z

    def _qh(self, y):
        for j in range(2 * self.b):
            v = self._v[j]
            y[j:] -= np.conj(self._tau[j]) * np.outer(v, v.conj() @ y[j:]).reshape(y[j:].shape)
        return y

    def expand(self, x_prime: np.ndarray) -> np.ndarray:
        """``Nmat @ x'`` (length ``MN``)."""
        x_prime = np.asarray(x_prime)
        if x_prime.shape[0] != self.n_data:
            raise ValueError(f"expected {self.n_data} symbols, got {x_prime.shape[0]}")
        z = np.zeros((self.grid.frame_size,) + x_prime.shape[1:], dtype=complex)
        z[2 * self.b:] = x_prime
        return self._q(z)

    def project(self, y: np.ndarray) -> np.ndarray:
        """``Nmat^H @ y`` (length ``MN - 2b``)."""
        y = np.array(y, dtype=complex)
        return self._qh(y)[2 * self.b:]

    def matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        MN = self.grid.frame_size
        if MN > cap:
            raise ValueError(f"MN = {MN} exceeds the dense cap {cap}")
        return self.expand(np.eye(self.n_data, dtype=complex))

    def r_prime(self) -> np.ndarray:
        return idfzt_rows(self.grid, self.rows)


def build_mask(grid: GridParams, b: int) -> NullSpaceMask:
    return NullSpaceMask(grid, b)


def mask_encode(x_prime: np.ndarray, mask: NullSpaceMask) -> np.ndarray:
    """FD vector ``s' = R Nmat x'`` whose first and last ``b`` entries vanish."""
    return idfzt(unvec(mask.expand(x_prime), mask.grid))


def apply_channel(H, s: np.ndarray, noise: NoiseModel,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """``r = H s + w``; ``H`` is dense, an :class:`FDChannel` or a :class:`BandedMatrix`."""
    r = H @ s if isinstance(H, np.ndarray) else H.matvec(s)
    if noise.variance > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise is present")
        r = r + noise.sample(r.shape, rng)
    return r


def lmmse_direct(H: np.ndarray, r: np.ndarray, noise: NoiseModel,
                 form: str = "primal", cap: int = DENSE_CAP) -> np.ndarray:
    """Dense LMMSE estimate, ``(I + H^H H / s2)^-1 H^H r / s2``.

    ``form="dual"`` evaluates the equivalent ``H^H (H H^H + s2 I)^-1 r``.
    Cubic in the dimension; used as the reference equaliser.
    """
    if noise.variance <= 0:
        raise ValueError("LMMSE needs a positive noise variance")
    n = H.shape[1]
    if n > cap:
        raise ValueError(f"dimension {n} exceeds the dense cap {cap}")
    s2 = noise.variance
    Hh = H.conj().T
    if form == "primal":
        Q = np.eye(n) + Hh @ H / s2
        return np.linalg.solve(Q, Hh @ r / s2)
    if form == "dual":
        G = H @ Hh + s2 * np.eye(H.shape[0])
        return Hh @ np.linalg.solve(G, r)
    raise ValueError(f"unknown form {form!r}")


class CGResult(NamedTuple):
    s: np.ndarray
    iterations: int
    residual_trace: np.ndarray
    converged: bool


@numba.njit(cache=True)
def _cgm(bands, b, r, s2, eps, max_iter):
    n = r.shape[0]
    tmp = np.empty(n, dtype=np.complex128)
    rhs = np.empty(n, dtype=np.complex128)
    a = np.empty(n, dtype=np.complex128)
    _band_rmatvec(bands, b, r, rhs)
    s = np.zeros(n, dtype=np.complex128)
    c = rhs.copy()  # c0 = rhs - (H^H H + s2 I) s0 with s0 = 0
    p = c.copy()
    cn = np.sum(c.real ** 2 + c.imag ** 2)
    trace = np.empty(max_iter + 1)
    trace[0] = cn
    if cn < eps * eps:
        return s, 0, trace[:1], True
    # vector updates are written as explicit loops to avoid temporaries
    for i in range(1, max_iter + 1):
        _band_matvec(bands, b, p, tmp)
        _band_rmatvec(bands, b, tmp, a)
        pa = 0.0
        for j in range(n):
            a[j] += s2 * p[j]
            pa += p[j].real * a[j].real + p[j].imag * a[j].imag
        if pa <= 0.0:
            return s, i - 1, trace[:i], False
        alpha = cn / pa
        cn_new = 0.0
        for j in range(n):
            s[j] += alpha * p[j]
            c[j] -= alpha * a[j]
            cn_new += c[j].real ** 2 + c[j].imag ** 2
        trace[i] = cn_new
        if cn_new < eps * eps:
            return s, i, trace[: i + 1], True
        beta = cn_new / cn
        for j in range(n):
            p[j] = c[j] + beta * p[j]
        cn = cn_new
    return s, max_iter, trace, False


def cgm_equalize(band: BandedMatrix, r: np.ndarray, noise: NoiseModel,
                 eps: float = 1e-6, max_iter: int = 250) -> CGResult:
    """Conjugate-gradient solution of ``(H^H H + s2 I) s = H^H r``.

    ``H^H H`` is never formed; each iteration applies the band twice. Stops
    once the squared residual norm drops below ``eps**2`` or after
    ``max_iter`` iterations, returning the last iterate either way.
    ``residual_trace[i]`` is the squared residual norm after iteration ``i``.
    """
    if noise.variance <= 0:
        raise ValueError("CGM needs a positive noise variance")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    r = np.ascontiguousarray(r, dtype=complex)
    s, it, trace, ok = _cgm(band.bands, band.b, r, float(noise.variance), float(eps), int(max_iter))
    return CGResult(s, int(it), trace, bool(ok))


def write_residual_csv(trace, path):
    """Dump a residual trace as ``iteration,c_norm`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "c_norm"])
        for i, v in enumerate(trace):
            w.writerow([i, repr(float(v))])


def despread(s_hat: np.ndarray, mask: NullSpaceMask) -> np.ndarray:
    """Soft symbol estimates ``Nmat^H R^H s~``."""
    return mask.project(vec(dfzt(s_hat, mask.grid)))


def detect(s_hat: np.ndarray, mask: NullSpaceMask, constellation: Constellation) -> np.ndarray:
    """Minimum-distance decisions on the despread FD estimate.

    Returns constellation indices; exact ties go to the lowest index.
    """
    return constellation.nearest(despread(s_hat, mask))
