"""Pulse schedules and their expansion into squeezed-state superpositions.

Each interaction of area s followed by a successful |e> measurement applies
cos[i s (a - a^dag)] = (D(s) + D(-s)) / 2 to the motional state, so a schedule of
P pulses produces 2^P signed-sum displacements of weight 2^-P each.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gaussian import SqueezedComponent, SuperpositionState

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered dimensionless pulse areas g*t_j."""

    areas: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(float(s) for s in self.areas))
        if len(self.areas) == 0:
            raise ValueError("empty schedule")
        for s in self.areas:
            if not (np.isfinite(s) and s > 0):
                raise ValueError(f"pulse areas must be positive and finite, got {s!r}")

    @property
    def pulses(self) -> int:
        return len(self.areas)

    @property
    def total_area(self) -> float:
        return float(sum(self.areas))

    def extended(self, area: float) -> "PulseSchedule":
        return PulseSchedule(self.areas + (area,), self.label)


def dyadic_schedule(pulses: int, tau: float) -> PulseSchedule:
    """Areas tau, 2 tau, 4 tau, ..., 2^(P-1) tau."""
    if pulses < 1:
        raise ValueError("empty schedule")
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be positive and finite, got {tau!r}")
    return PulseSchedule(tuple(tau * 2.0**j for j in range(pulses)), label=f"dyadic P={pulses} tau={tau!r}")


@dataclass(frozen=True)
class AmplitudeMultiset:
    """Distinct displacement amplitudes (ascending) with positive weights summing to one."""

    amplitudes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.amplitudes)

    def items(self):
        return list(zip(self.amplitudes.tolist(), self.weights.tolist()))


def _merge(amps: np.ndarray, weights: np.ndarray, tol: float):
    order = np.argsort(amps, kind="stable")
    amps, weights = amps[order], weights[order]
    out_a, out_w = [], []
    start = 0
    for i in range(1, len(amps) + 1):
        if i == len(amps) or amps[i] - amps[i - 1] > tol:
            w = weights[start:i]
            a = float(np.dot(amps[start:i], w) / w.sum()) if i - start > 1 else float(amps[start])
            if abs(a) <= tol:
                a = 0.0
            out_a.append(a)
            out_w.append(float(w.sum()))
            start = i
    return np.array(out_a), np.array(out_w)


def expand_schedule(schedule: PulseSchedule, tol: float = MERGE_TOL) -> AmplitudeMultiset:
    """All signed sums of the pulse areas, coincident amplitudes merged."""
    amps = np.zeros(1)
    weights = np.ones(1)
    for s in schedule.areas:
        amps = np.concatenate([amps - s, amps + s])
        weights = np.concatenate([weights, weights]) * 0.5
        amps, weights = _merge(amps, weights, tol)
    return AmplitudeMultiset(amps, weights)


def build_superposition(schedule: PulseSchedule, r: float) -> SuperpositionState:
    """Unnormalised post-measurement state, one component per distinct amplitude.

    With weights 2^-P (merged), ``norm_constant**2`` is the probability that every
    measurement found the ion in |e>.
    """
    ms = expand_schedule(schedule)
    comps = [SqueezedComponent(a, w) for a, w in zip(ms.amplitudes.tolist(), ms.weights.tolist())]
    return SuperpositionState(comps, r)


def success_probability(schedule: PulseSchedule, r: float) -> float:
    """Probability that all conditional measurements of the schedule yield |e>."""
    return build_superposition(schedule, r).norm_constant ** 2


def ladder_state(k: int, tau: float, r: float) -> SuperpositionState:
    """Unit-weight state sum_{j<2^k} |(2j+1)tau, r> + |-(2j+1)tau, r> (2^(k+1) components).

    Identical up to overall scale to ``build_superposition(dyadic_schedule(k + 1, tau), r)``.
    """
    odd = (2 * np.arange(2**k) + 1) * tau
    amps = np.concatenate([-odd[::-1], odd])
    return SuperpositionState([SqueezedComponent(float(a), 1.0) for a in amps], r)
