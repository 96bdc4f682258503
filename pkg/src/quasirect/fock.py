"""Brute-force truncated Fock-space simulation of the ion-laser protocol.

Joint states are 2D vectors ordered (|g> block, |e> block). Every unitary is
built from the eigendecomposition of its Hermitian generator, so truncation
error is the only approximation; the tail check makes that error visible.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gaussian import SuperpositionState
from .protocol import PulseSchedule

MIN_DIMENSION = 16
DEFAULT_DIMENSION = 256
DEFAULT_TAIL_BOUND = 1e-10


class TruncationError(RuntimeError):
    """The Fock cutoff is too small for the requested state."""


@dataclass(frozen=True)
class TruncationPolicy:
    dimension: int = DEFAULT_DIMENSION
    tail_mass_bound: float = DEFAULT_TAIL_BOUND

    def __post_init__(self):
        if self.dimension < MIN_DIMENSION:
            raise ValueError(f"dimension must be >= {MIN_DIMENSION}, got {self.dimension}")
        if not 0 < self.tail_mass_bound < 1:
            raise ValueError(f"tail_mass_bound must lie in (0, 1), got {self.tail_mass_bound}")


@dataclass(frozen=True)
class FockOperators:
    dimension: int
    a: np.ndarray = field(repr=False)
    a_dag: np.ndarray = field(repr=False)


def _check_dim(D):
    if D < MIN_DIMENSION:
        raise ValueError(f"dimension must be >= {MIN_DIMENSION}, got {D}")


def fock_operators(D: int) -> FockOperators:
    _check_dim(D)
    a = np.diag(np.sqrt(np.arange(1, D, dtype=float)), 1).astype(complex)
    return FockOperators(D, a, a.conj().T)


def tail_mass(vec, fraction: float = 0.1) -> float:
    """Share of |vec|^2 held by the top ``fraction`` of Fock levels."""
    vec = np.asarray(vec)
    p = np.abs(vec) ** 2
    total = p.sum()
    start = len(vec) - max(1, int(math.ceil(fraction * len(vec))))
    return float(p[start:].sum() / total) if total > 0 else 0.0


def _check_tail(vec, bound, what):
    if bound is None:
        return
    t = tail_mass(vec)
    if not t < bound:
        raise TruncationError(f"truncation too small: {what} has tail mass {t:.3e} >= {bound:.1e} (D={len(vec)})")


# Eigendecompositions are cached per (D, ...) and never mutated after construction.


@functools.lru_cache(maxsize=16)
def _quadrature_eig(D: int, phi: float):
    """Eigenpairs of X_phi = a e^{i phi} + a^dag e^{-i phi}."""
    ops = fock_operators(D)
    X = ops.a * np.exp(1j * phi) + ops.a_dag * np.exp(-1j * phi)
    w, v = np.linalg.eigh(X)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


@functools.lru_cache(maxsize=16)
def _squeeze_eig(D: int):
    """Eigenpairs of the Hermitian K with S(r) = exp(-i r K), K = (i/2)(a^2 - a^dag^2)."""
    ops = fock_operators(D)
    K = 0.5j * (ops.a @ ops.a - ops.a_dag @ ops.a_dag)
    w, v = np.linalg.eigh(K)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def _apply(eig, f, vec):
    w, v = eig
    return v @ (f(w) * (v.conj().T @ vec))


def _matrix(eig, f):
    w, v = eig
    return (v * f(w)) @ v.conj().T


def _displacement_eig(alpha: complex, D: int):
    # alpha a^dag - conj(alpha) a = i |alpha| X_{pi/2 - arg alpha}; real alpha keeps its sign
    alpha = complex(alpha)
    if alpha.imag == 0:
        return _quadrature_eig(D, math.pi / 2), alpha.real
    return _quadrature_eig(D, math.pi / 2 - math.atan2(alpha.imag, alpha.real)), abs(alpha)


def vacuum(D: int) -> np.ndarray:
    v = np.zeros(D, dtype=complex)
    v[0] = 1.0
    return v


def squeeze_matrix(r: float, D: int, tail_mass_bound: float | None = DEFAULT_TAIL_BOUND) -> np.ndarray:
    """S(r) with S^dag a S = cosh(r) a - sinh(r) a^dag (x squeezed for r > 0)."""
    _check_dim(D)
    S = _matrix(_squeeze_eig(D), lambda w: np.exp(-1j * r * w))
    _check_tail(S[:, 0], tail_mass_bound, f"S({r})|0>")
    return S


def apply_squeeze(r: float, vec: np.ndarray) -> np.ndarray:
    return _apply(_squeeze_eig(len(vec)), lambda w: np.exp(-1j * r * w), vec)


def displacement_matrix(alpha: complex, D: int, tail_mass_bound: float | None = DEFAULT_TAIL_BOUND) -> np.ndarray:
    """Glauber D(alpha) = exp(alpha a^dag - conj(alpha) a)."""
    _check_dim(D)
    eig, mod = _displacement_eig(alpha, D)
    M = _matrix(eig, lambda w: np.exp(1j * mod * w))
    _check_tail(M[:, 0], tail_mass_bound, f"D({alpha})|0>")
    return M


def apply_displacement(alpha: complex, vec: np.ndarray) -> np.ndarray:
    eig, mod = _displacement_eig(alpha, len(vec))
    return _apply(eig, lambda w: np.exp(1j * mod * w), vec)


def evolution_operator(gt: float, phi: float, D: int) -> np.ndarray:
    """exp(-i gt X_phi (A_eg + A_ge)) on the joint space, basis order (g, e).

    Diagonal blocks are cos(gt X_phi), off-diagonal blocks -i sin(gt X_phi); at
    phi = pi/2, X_phi = i(a - a^dag).
    """
    _check_dim(D)
    eig = _quadrature_eig(D, float(phi))
    C = _matrix(eig, lambda w: np.cos(gt * w))
    Sn = -1j * _matrix(eig, lambda w: np.sin(gt * w))
    return np.block([[C, Sn], [Sn, C]])


@dataclass
class JointFockState:
    """Unnormalised joint vector; ``norm`` tracks its Euclidean norm."""

    dimension: int
    vector: np.ndarray = field(repr=False)
    norm: float = float("nan")

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=complex)
        if self.vector.shape != (2 * self.dimension,):
            raise ValueError(f"expected vector of length {2 * self.dimension}, got {self.vector.shape}")
        self.norm = float(np.linalg.norm(self.vector))

    @classmethod
    def excited(cls, vib: np.ndarray) -> "JointFockState":
        D = len(vib)
        return cls(D, np.concatenate([np.zeros(D, dtype=complex), vib]))

    @classmethod
    def ground(cls, vib: np.ndarray) -> "JointFockState":
        D = len(vib)
        return cls(D, np.concatenate([vib, np.zeros(D, dtype=complex)]))

    @property
    def g_block(self) -> np.ndarray:
        return self.vector[: self.dimension]

    @property
    def e_block(self) -> np.ndarray:
        return self.vector[self.dimension :]


def evolve(state: JointFockState, gt: float, phi: float = math.pi / 2) -> JointFockState:
    """Apply the evolution operator blockwise without forming the 2D x 2D matrix."""
    eig = _quadrature_eig(state.dimension, float(phi))
    w, v = eig
    g_hat = v.conj().T @ state.g_block
    e_hat = v.conj().T @ state.e_block
    c, s = np.cos(gt * w), np.sin(gt * w)
    g_new = v @ (c * g_hat - 1j * s * e_hat)
    e_new = v @ (c * e_hat - 1j * s * g_hat)
    return JointFockState(state.dimension, np.concatenate([g_new, e_new]))


def conditional_measure_excited(state: JointFockState) -> tuple[np.ndarray, float]:
    """Project onto |e>; return the unnormalised vibrational block and the branch probability."""
    if not state.norm > 0:
        raise ValueError("state has zero norm")
    block = state.e_block.copy()
    p = float(np.vdot(block, block).real) / state.norm**2
    if p < 1e-300:
        raise ValueError("measurement branch vanished")
    return block, p


def run_protocol_oracle(
    schedule: PulseSchedule,
    r: float,
    policy: TruncationPolicy = TruncationPolicy(),
    phi: float = math.pi / 2,
) -> tuple[np.ndarray, float]:
    """Evolve |0,r>|e> pulse by pulse, keeping only the |e> outcome each time.

    Returns the normalised final vibrational vector and the product of branch
    probabilities.
    """
    D = policy.dimension
    vib = apply_squeeze(r, vacuum(D))
    try:
        _check_tail(vib, policy.tail_mass_bound, f"initial squeezed vacuum (r={r})")
    except TruncationError as exc:
        raise TruncationError(f"before pulse 0: {exc}") from None
    prob = 1.0
    for i, gt in enumerate(schedule.areas):
        state = evolve(JointFockState.excited(vib), gt, phi)
        block, p = conditional_measure_excited(state)
        prob *= p
        vib = block / np.sqrt(np.vdot(block, block).real)
        try:
            _check_tail(vib, policy.tail_mass_bound, f"state after pulse {i}")
        except TruncationError as exc:
            raise TruncationError(f"pulse {i}: {exc}") from None
    return vib, prob


def analytic_to_fock(
    state: SuperpositionState, D: int, tail_mass_bound: float | None = DEFAULT_TAIL_BOUND
) -> np.ndarray:
    """Normalised Fock vector of a superposition, built as sum_j w_j D(alpha_j) S(r)|0>."""
    _check_dim(D)
    sq = apply_squeeze(state.r, vacuum(D))
    out = np.zeros(D, dtype=complex)
    for c in state.components:
        comp = apply_displacement(c.amplitude, sq)
        _check_tail(comp, tail_mass_bound, f"component alpha={c.amplitude}")
        out += complex(c.weight) * comp
    return out / np.linalg.norm(out)


def fidelity(u, v) -> float:
    """|<u|v>|^2 / (|u|^2 |v|^2)."""
    u = np.asarray(u)
    v = np.asarray(v)
    return float(abs(np.vdot(u, v)) ** 2 / (np.vdot(u, u).real * np.vdot(v, v).real))


def suggest_dimension(max_amplitude: float, r: float, sigmas: float = 8.0, step: int = 128) -> int:
    """Cutoff estimate for states |alpha, r> with |alpha| <= max_amplitude.

    Bounds the photon number by (x^2 + p^2)/2 at ``sigmas`` standard deviations in
    each quadrature and leaves the top 10% of levels above that. Only an estimate:
    the tail check is what validates it.
    """
    sx = math.exp(-r) / math.sqrt(2)
    sp = math.exp(r) / math.sqrt(2)
    xmax = math.sqrt(2) * abs(max_amplitude) + sigmas * sx
    pmax = sigmas * sp
    n = 0.5 * (xmax**2 + pmax**2)
    D = int(math.ceil(n / 0.9)) + MIN_DIMENSION
    return max(MIN_DIMENSION, step * int(math.ceil(D / step)))


def hermite_functions(x, n_max: int) -> np.ndarray:
    """Normalised oscillator eigenfunctions <x|n> for n < n_max, shape (n_max, len(x)).

    Upward recurrence on the normalised functions, which stays finite at large n.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((n_max, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def fock_position_wavefunction(vec, x) -> np.ndarray:
    """<x|psi> for a Fock vector via the Hermite-function expansion."""
    vec = np.asarray(vec)
    return vec @ hermite_functions(x, len(vec))


def fock_coherent_projection(vec, beta) -> np.ndarray:
    """<beta|psi> = exp(-|beta|^2/2) sum_n conj(beta)^n / sqrt(n!) psi_n."""
    vec = np.asarray(vec)
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    bc = np.conj(beta)
    coeff = np.exp(-0.5 * np.abs(beta) ** 2).astype(complex)
    total = coeff * vec[0]
    for n in range(1, len(vec)):
        coeff = coeff * bc / np.sqrt(n)
        total = total + coeff * vec[n]
    return total


def fock_husimi(vec, beta) -> np.ndarray:
    return np.abs(fock_coherent_projection(vec, beta)) ** 2 / np.pi


def write_fock_vector(vec, path) -> None:
    """Dump a Fock vector as ``index real imag`` lines with 17 significant digits."""
    lines = [f"{n} {z.real:.17g} {z.imag:.17g}" for n, z in enumerate(np.asarray(vec, dtype=complex))]
    Path(path).write_text("\n".join(lines) + "\n")


def read_fock_vector(path) -> np.ndarray:
    data = np.loadtxt(path, ndmin=2)
    return data[:, 1] + 1j * data[:, 2]
