"""
End-to-end (transmit filter followed by its matched receive filter) pulse
responses along one DD axis.

Every response is a function of the offset ``u`` measured in resolution
bins (``1/B`` along delay, ``1/T`` along Doppler) and is normalised to
``g(0) = 1``, i.e. unit-energy transmit pulses.

==========  ==================================  ===========================
kind        transmit pulse w(u)                 end-to-end g(u) = (w * w)(u)
==========  ==================================  ===========================
sinc        sinc(u)                             sinc(u)
rrc         root raised cosine, roll-off beta   raised cosine, roll-off beta
gauss       exp(-alpha u^2)                     exp(-alpha u^2 / 2)
gauss-sinc  sinc(u) exp(-alpha u^2)             numerical self-convolution
==========  ==================================  ===========================

Only the sinc and raised-cosine responses are Nyquist (zero at nonzero
integers); the Gaussian response leaks into neighbouring bins.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

KINDS = ("sinc", "rrc", "gauss", "gauss-sinc")


@dataclass(frozen=True)
class PulseShape:
    """Separable DD pulse: one end-to-end response per axis."""

    kind: str = "rrc"
    beta_tau: float | None = None
    beta_nu: float | None = None
    alpha_tau: float | None = None
    alpha_nu: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unsupported pulse kind {self.kind!r}; pick one of {KINDS}")
        betas = (self.beta_tau, self.beta_nu)
        alphas = (self.alpha_tau, self.alpha_nu)
        if self.kind == "rrc":
            if None in betas or any(a is not None for a in alphas):
                raise ValueError("rrc needs beta_tau and beta_nu only")
            if not all(0.0 <= b <= 1.0 for b in betas):
                raise ValueError("roll-off factors must lie in [0, 1]")
        elif self.kind in ("gauss", "gauss-sinc"):
            if None in alphas or any(b is not None for b in betas):
                raise ValueError(f"{self.kind} needs alpha_tau and alpha_nu only")
            if not all(a > 0 for a in alphas):
                raise ValueError("Gaussian width parameters must be positive")
        elif any(p is not None for p in betas + alphas):
            raise ValueError("sinc takes no parameters")

    @classmethod
    def default(cls, kind: str) -> "PulseShape":
        """Parameter settings used in the reference experiments."""
        if kind == "rrc":
            return cls("rrc", beta_tau=0.6, beta_nu=0.6)
        if kind == "gauss":
            return cls("gauss", alpha_tau=1.584, alpha_nu=1.584)
        if kind == "gauss-sinc":
            return cls("gauss-sinc", alpha_tau=0.044, alpha_nu=0.044)
        return cls(kind)

    @property
    def compact(self) -> bool:
        """False for the slowly decaying sinc pulse."""
        return self.kind != "sinc"

    def delay_response(self, u):
        return response(self.kind, u, self.beta_tau if self.kind == "rrc" else self.alpha_tau)

    def doppler_response(self, u):
        return response(self.kind, u, self.beta_nu if self.kind == "rrc" else self.alpha_nu)


def raised_cosine(u, beta: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if beta == 0:
        return np.sinc(u)
    den = 1.0 - (2.0 * beta * u) ** 2
    sing = np.isclose(den, 0.0, atol=1e-10)
    out = np.empty_like(u)
    ok = ~sing
    out[ok] = np.sinc(u[ok]) * np.cos(np.pi * beta * u[ok]) / den[ok]
    out[sing] = np.pi / 4 * np.sinc(1.0 / (2.0 * beta))
    return out


@lru_cache(maxsize=16)
def _gauss_sinc_table(alpha: float) -> CubicSpline:
    # w * w on a fine grid; the envelope makes w negligible beyond |u| = span
    step = 1.0 / 64
    span = max(40.0, 6.0 / np.sqrt(alpha))
    x = np.arange(-span, span + step / 2, step)
    w = np.sinc(x) * np.exp(-alpha * x ** 2)
    g = np.convolve(w, w, mode="same") * step
    g /= g[len(x) // 2]
    return CubicSpline(x, g)


def response(kind: str, u, param: float | None = None) -> np.ndarray:
    """Evaluate the end-to-end response ``g(u)`` of a pulse family."""
    u = np.asarray(u, dtype=float)
    if kind == "sinc":
        return np.sinc(u)
    if kind == "rrc":
        return raised_cosine(u, param)
    if kind == "gauss":
        return np.exp(-param * u ** 2 / 2.0)
    if kind == "gauss-sinc":
        table = _gauss_sinc_table(float(param))
        lim = table.x[-1] / 2
        return np.where(np.abs(u) < lim, table(np.clip(u, -lim, lim)), 0.0)
    raise ValueError(f"unsupported pulse kind {kind!r}")


def response_energy(kind: str, param: float | None = None) -> float:
    """Integral of ``|g(u)|^2`` over the real line."""
    from scipy.integrate import quad

    f = lambda u: float(response(kind, np.array([u]), param)[0]) ** 2  # noqa: E731
    # oscillatory tails: integrate piecewise over unit intervals
    total = 0.0
    for a in range(-200, 200):
        total += quad(f, a, a + 1, limit=50)[0]
    return total
