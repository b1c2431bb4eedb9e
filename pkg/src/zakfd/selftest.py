"""
Oracle-equivalence checks runnable without pytest.

Each check compares a fast code path with an independent construction
(dense Kronecker matrices, explicit basis projections, direct solves) on a
small grid and reports the worst deviation against its tolerance.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .channel import (
    ChannelWindow,
    build_H_basis,
    build_H_fd,
    effective_channel,
    fd_channel,
    periodize,
    veh_a_paths,
)
from .equalizer import (
    BandedMatrix,
    NoiseModel,
    NullSpaceMask,
    cgm_equalize,
    extract_band,
    lmmse_direct,
    mask_encode,
)
from .estimation import cross_ambiguity, cross_ambiguity_direct, make_pilot
from .pulses import PulseShape
from .zak import GridParams, build_R, dfzt, idfzt, vec


class Check(NamedTuple):
    name: str
    error: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.error < self.tol)


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def check_unitarity() -> Check:
    err = 0.0
    for M, N in ((3, 5), (31, 37)):
        R = build_R(GridParams(M, N))
        err = max(err, np.abs(R.conj().T @ R - np.eye(M * N)).max())
    return Check("IDFZT matrix is unitary", err, 1e-12)


def check_fast_transforms() -> Check:
    g = GridParams(7, 9)
    X = _rand(np.random.default_rng(1), 7, 9)
    R = build_R(g)
    err = max(np.abs(idfzt(X) - R @ vec(X)).max(), np.abs(dfzt(idfzt(X), g) - X).max())
    return Check("fast IDFZT/DFZT match the dense matrix", err, 1e-12)


def check_unitary_equivalence() -> Check:
    g = GridParams(3, 5)
    R = build_R(g)
    err = 0.0
    for seed in range(5):
        h = periodize(effective_channel(veh_a_paths(815.0, seed), PulseShape.default("rrc"), g))
        H = build_H_fd(h)
        H_dd = build_H_basis(h, "pulsone")
        err = max(err, np.abs(H - R @ H_dd @ R.conj().T).max() / np.abs(H).max())
        err = max(err, np.abs(H - build_H_basis(h, "dft")).max() / np.abs(H).max())
    return Check("FD channel equals R H_DD R^H and the DFT projection", err, 1e-9)


def check_cgm() -> Check:
    rng = np.random.default_rng(2)
    err = 0.0
    for n, b in ((60, 2), (150, 3), (255, 4)):
        band = BandedMatrix(_rand(rng, 2 * b + 1, n) / np.sqrt(2 * (2 * b + 1)), b)
        r = _rand(rng, n)
        noise = NoiseModel(0.05)
        ref = lmmse_direct(band.dense(), r, noise)
        got = cgm_equalize(band, r, noise, 1e-10, 250).s
        err = max(err, np.linalg.norm(got - ref) / np.linalg.norm(ref))
    return Check("banded CGM matches dense LMMSE", err, 1e-5)


def check_mask() -> Check:
    g = GridParams(31, 37)
    b = 3
    mask = NullSpaceMask(g, b)
    rng = np.random.default_rng(3)
    s = mask_encode(_rand(rng, mask.n_data), mask)
    err = max(np.abs(s[:b]).max(), np.abs(s[-b:]).max())
    # crop the Doppler taps to |l| <= b so the channel is exactly band-limited
    h = effective_channel(veh_a_paths(815.0, 3), PulseShape.default("rrc"), g)
    h = h.crop(ChannelWindow(h.window.k_lo, h.window.k_hi, b))
    fd = fd_channel(periodize(h))
    err = max(err, np.abs(fd.matvec(s) - extract_band(fd, b).matvec(s)).max())
    return Check("masked FD vectors vanish at both ends", err, 1e-9)


def check_cross_ambiguity() -> Check:
    g = GridParams(7, 9)
    pilot = make_pilot(g, 5)
    y = _rand(np.random.default_rng(4), 7, 9)
    w = ChannelWindow(-2, 3, 2)
    err = np.abs(cross_ambiguity(y, pilot, w, 2.0).taps
                 - cross_ambiguity_direct(y, pilot, w, 2.0).taps).max()
    return Check("FFT cross-ambiguity matches the DD sum", err, 1e-10)


CHECKS: tuple[Callable[[], Check], ...] = (
    check_unitarity,
    check_fast_transforms,
    check_unitary_equivalence,
    check_cgm,
    check_mask,
    check_cross_ambiguity,
)


def run(echo=print) -> bool:
    ok = True
    for fn in CHECKS:
        c = fn()
        ok &= c.ok
        echo(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.error:.2e} (tol {c.tol:.0e})")
    return ok
