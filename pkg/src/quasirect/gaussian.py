"""Closed-form algebra for real-displaced squeezed vacua |alpha, r> = D(alpha) S(r)|0>.

Conventions: x = (a + a^dag)/sqrt(2), vacuum wavefunction pi^{-1/4} exp(-x^2/2).
For r > 0 the state is squeezed in x, i.e. Var(x) = exp(-2r)/2, and a real
displacement alpha moves the packet to x = sqrt(2) alpha.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)
LOG_PI = np.log(np.pi)

# relative slack when deciding whether a Gram sum is numerically zero
_GRAM_TOL = 1e-12


def squeeze_factors(r: float) -> tuple[float, float]:
    """Return (mu, nu) = (cosh r, sinh r)."""
    return float(np.cosh(r)), float(np.sinh(r))


def log_cosh(r):
    """log(cosh r) without overflow for large |r|."""
    r = np.abs(r)
    return r + np.log1p(np.exp(-2.0 * r)) - np.log(2.0)


def log_overlap_real_squeezed(alpha1, alpha2, r):
    """Natural log of <alpha1, r|alpha2, r>; broadcasts over array inputs."""
    d = np.asarray(alpha1, dtype=float) - np.asarray(alpha2, dtype=float)
    return -0.5 * d * d * np.exp(2.0 * r)


def overlap_real_squeezed(alpha1, alpha2, r):
    """<alpha1, r|alpha2, r> = exp(-(alpha1 - alpha2)^2 e^{2r} / 2) for real amplitudes.

    Underflows cleanly to 0.0 for widely separated components.
    """
    return np.exp(log_overlap_real_squeezed(alpha1, alpha2, r))


def position_amplitude(x, alpha, r):
    """Position-space wavefunction <x|alpha, r>.

    (e^{2r}/pi)^{1/4} exp(-(e^{2r}/2)(x - sqrt(2) alpha)^2), evaluated in log form.
    """
    x = np.asarray(x, dtype=float)
    d = x - SQRT2 * alpha
    return np.exp(0.5 * r - 0.25 * LOG_PI - 0.5 * np.exp(2.0 * r) * d * d)


def log_coherent_squeezed_overlap(beta, alpha, r):
    """Complex log of <beta|alpha, r> for a coherent state |beta>."""
    beta = np.asarray(beta, dtype=complex)
    bc = np.conj(beta)
    t = np.tanh(r)
    return (
        -0.5 * log_cosh(r)
        - 0.5 * (beta.real**2 + beta.imag**2)
        - 0.5 * alpha * alpha
        + alpha * bc
        - 0.5 * t * (bc - alpha) ** 2
    )


def coherent_squeezed_overlap(beta, alpha, r):
    """<beta|D(alpha) S(r)|0> for real alpha and complex beta.

    Uses S(r)|0> = cosh(r)^{-1/2} exp(-tanh(r) a^dag^2 / 2)|0>, so the result
    carries the cosh(r)^{-1/2} prefactor and depends on conj(beta). At r = 0 it
    reduces to the coherent-state overlap exp(-|beta|^2/2 - alpha^2/2 + conj(beta) alpha).
    """
    return np.exp(log_coherent_squeezed_overlap(beta, alpha, r))


def unnormalised_coherent_squeezed_overlap(beta, alpha, r):
    """Overlap variant without the normalisation prefactor or the conjugation of beta.

    Kept for comparison only: it lacks the cosh(r)^{-1/2} prefactor and uses beta
    where conj(beta) belongs, so it fails <0|S(r)|0> = cosh(r)^{-1/2} and is not
    normalised as a coherent-state projection. Not used by any observable.
    """
    beta = np.asarray(beta, dtype=complex)
    mu, nu = squeeze_factors(r)
    return np.exp(
        -0.5 * alpha**2
        - 0.5 * np.abs(beta) ** 2
        - nu * alpha**2 / (2 * mu)
        + nu * beta**2 / (2 * mu)
        + beta * alpha / mu
    )


@dataclass(frozen=True)
class SqueezedComponent:
    """One term w * |alpha, r> of a superposition."""

    amplitude: float
    weight: complex = 1.0

    def __post_init__(self):
        if not np.isfinite(self.amplitude):
            raise ValueError(f"non-finite amplitude {self.amplitude!r}")
        if not np.isfinite(complex(self.weight)):
            raise ValueError(f"non-finite weight {self.weight!r}")


def gram_matrix(amplitudes, r) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=float)
    return overlap_real_squeezed(a[:, None], a[None, :], r)


def superposition_norm(components: Sequence[SqueezedComponent], r: float) -> float:
    """Norm of sum_j w_j |alpha_j, r>, i.e. sqrt(sum_{j,m} conj(w_j) w_m <alpha_j,r|alpha_m,r>)."""
    if len(components) == 0:
        raise ValueError("empty superposition")
    amps = np.array([c.amplitude for c in components], dtype=float)
    w = np.array([complex(c.weight) for c in components])
    gram = gram_matrix(amps, r)
    total = np.vdot(w, gram @ w)
    scale = float(np.sum(np.abs(w)) ** 2)
    if total.real <= _GRAM_TOL * scale or abs(total.imag) > 1e-9 * max(scale, 1e-300):
        raise ValueError("degenerate superposition")
    return float(np.sqrt(total.real))


def dyadic_norm_squared(k: int, tau: float, r: float) -> float:
    """Closed-form squared norm of the unit-weight state sum_{j<2^k} |(2j+1)tau, r> + |-(2j+1)tau, r>.

    2 * sum_{j,m=0}^{2^k-1} [exp(-2(j+m+1)^2 tau^2 e^{2r}) + exp(-2(j-m)^2 tau^2 e^{2r})]
    """
    n = 2**k
    j = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    c = tau * tau * np.exp(2.0 * r)
    terms = np.exp(-2.0 * (j + m + 1) ** 2 * c) + np.exp(-2.0 * (j - m) ** 2 * c)
    return float(2.0 * terms.sum())


@dataclass
class SuperpositionState:
    """Weighted superposition of squeezed components sharing one squeeze parameter.

    ``norm_constant`` is the norm of the unnormalised sum; the physical state is
    (1/norm_constant) sum_j w_j |alpha_j, r>.
    """

    components: list[SqueezedComponent]
    r: float
    norm_constant: float = field(default=float("nan"))

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ValueError(f"non-finite squeeze parameter {self.r!r}")
        self.components = list(self.components)
        if not np.isfinite(self.norm_constant):
            self.norm_constant = superposition_norm(self.components, self.r)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([complex(c.weight) for c in self.components])

    @property
    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.amplitudes)))

    def __len__(self):
        return len(self.components)

    def position_wavefunction(self, x) -> np.ndarray:
        """Normalised <x|psi> on an array of positions."""
        x = np.asarray(x, dtype=float)
        psi = np.zeros(x.shape, dtype=complex)
        for c in self.components:
            psi += complex(c.weight) * position_amplitude(x, c.amplitude, self.r)
        return psi / self.norm_constant

    def coherent_projection(self, beta) -> np.ndarray:
        """Normalised <beta|psi> on an array of coherent amplitudes."""
        beta = np.asarray(beta, dtype=complex)
        out = np.zeros(beta.shape, dtype=complex)
        for c in self.components:
            out += complex(c.weight) * coherent_squeezed_overlap(beta, c.amplitude, self.r)
        return out / self.norm_constant
