"""Position densities, Husimi Q functions and a flatness metric on sampled grids."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .gaussian import SuperpositionState

DEFAULT_POSITION_POINTS = 2001
DEFAULT_PHASE_POINTS = 301
# half-width of auto grids, in standard deviations of the widest component
GRID_SIGMAS = 8.5


@dataclass(frozen=True)
class PositionGrid:
    x_min: float
    x_max: float
    points: int = DEFAULT_POSITION_POINTS

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got {self.x_min}, {self.x_max}")
        if self.points < 2:
            raise ValueError("a grid needs at least 2 points")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    points: int = DEFAULT_PHASE_POINTS

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate phase-space grid")
        if self.points < 2:
            raise ValueError("a grid needs at least 2 points per axis")

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.points)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.points)

    def beta(self) -> np.ndarray:
        """Complex grid, shape (points_im, points_re)."""
        return self.re[None, :] + 1j * self.im[:, None]


@dataclass
class GridResult:
    """Sampled nonnegative field plus its trapezoid-rule integral.

    ``values`` is 1-D for position densities and (im, re)-shaped for Q grids.
    """

    kind: str
    grid: PositionGrid | PhaseSpaceGrid
    values: np.ndarray = field(repr=False)
    integral_estimate: float = float("nan")
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("grid values must be nonnegative")
        if self.kind == "density":
            self.integral_estimate = float(trapezoid(self.values, self.grid.x))
        else:
            inner = trapezoid(self.values, self.grid.re, axis=1)
            self.integral_estimate = float(trapezoid(inner, self.grid.im))

    @property
    def covers_support(self) -> bool:
        return self.integral_estimate >= 0.999


@dataclass(frozen=True)
class FlatnessReport:
    """Ripple (max - min)/mean of a density over the window holding ``coverage`` of the mass."""

    plateau_window: tuple[float, float]
    ripple: float
    plateau_mass: float
    coverage: float


def auto_position_grid(state: SuperpositionState, points: int = DEFAULT_POSITION_POINTS) -> PositionGrid:
    half = math.sqrt(2) * state.max_amplitude + 8.0 * math.exp(-state.r)
    return PositionGrid(-half, half, points)


def auto_phase_grid(state: SuperpositionState, points: int = DEFAULT_PHASE_POINTS) -> PhaseSpaceGrid:
    """Rectangle covering the Q function of every component.

    Q of |alpha, r> is Gaussian with Var(Re beta) = (1 + e^{-2r})/4 and
    Var(Im beta) = (1 + e^{2r})/4.
    """
    s_re = math.sqrt((1 + math.exp(-2 * state.r)) / 4)
    s_im = math.sqrt((1 + math.exp(2 * state.r)) / 4)
    re_half = state.max_amplitude + GRID_SIGMAS * s_re
    im_half = GRID_SIGMAS * s_im
    return PhaseSpaceGrid(-re_half, re_half, -im_half, im_half, points)


def position_density(state: SuperpositionState, grid: PositionGrid | None = None) -> GridResult:
    grid = grid or auto_position_grid(state)
    psi = state.position_wavefunction(grid.x)
    values = psi.real**2 + psi.imag**2
    return GridResult("density", grid, values)


def husimi_q(state: SuperpositionState, grid: PhaseSpaceGrid | None = None) -> GridResult:
    grid = grid or auto_phase_grid(state)
    amp = state.coherent_projection(grid.beta())
    values = (amp.real**2 + amp.imag**2) / np.pi
    return GridResult("husimi", grid, values)


def flatness_report(density: GridResult, coverage: float = 0.8) -> FlatnessReport:
    """Locate the symmetric window about the centre of mass holding ``coverage`` probability.

    Edge values are linearly interpolated and included in the max/min; the mean is
    plateau_mass / window width.
    """
    if not 0 < coverage < 1:
        raise ValueError(f"coverage must lie in (0, 1), got {coverage}")
    x, rho = density.grid.x, np.asarray(density.values, dtype=float)
    total = trapezoid(rho, x)
    if not total > 0:
        raise ValueError("degenerate density")
    p = rho / total
    center = float(trapezoid(x * p, x))
    cdf = np.concatenate([[0.0], cumulative_trapezoid(p, x)])

    def mass(h):
        return np.interp(center + h, x, cdf) - np.interp(center - h, x, cdf)

    lo, hi = 0.0, max(center - x[0], x[-1] - center)
    if mass(hi) < coverage:
        raise ValueError("grid holds less probability than the requested coverage")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass(mid) < coverage:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    h = hi
    a, b = center - h, center + h
    inside = rho[(x > a) & (x < b)]
    edges = np.interp([a, b], x, rho)
    sample = np.concatenate([inside, edges])
    plateau_mass = float(mass(h))
    mean = plateau_mass * total / (b - a)
    ripple = float((sample.max() - sample.min()) / mean)
    return FlatnessReport((float(a), float(b)), ripple, plateau_mass, coverage)


# serialization


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _header_items(result: GridResult) -> list[tuple[str, str]]:
    items = [(k, _fmt(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v))
             for k, v in result.params.items()]
    for k, v in asdict(result.grid).items():
        items.append((k, str(v) if k == "points" else _fmt(v)))
    items.append(("integral_estimate", _fmt(result.integral_estimate)))
    return items


def to_csv(result: GridResult) -> str:
    buf = io.StringIO()
    for k, v in _header_items(result):
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    if result.kind == "density":
        w.writerow(["x", "density"])
        for xi, v in zip(result.grid.x, result.values):
            w.writerow([_fmt(xi), _fmt(v)])
    else:
        w.writerow(["re", "im", "q"])
        re, im = result.grid.re, result.grid.im
        for i, y in enumerate(im):
            for j, xr in enumerate(re):
                w.writerow([_fmt(xr), _fmt(y), _fmt(result.values[i, j])])
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict[str, str], np.ndarray]:
    """Parse a grid CSV back into (header dict, numeric rows)."""
    header = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            header[k] = v
        elif line and not line[0].isalpha():
            rows.append([float(t) for t in line.split(",")])
    return header, np.array(rows)


def to_json(result: GridResult, flatness: FlatnessReport | None = None) -> str:
    payload: dict[str, Any] = {
        "kind": result.kind,
        "params": {k: (float(v) if isinstance(v, float) else v) for k, v in result.params.items()},
        "grid": asdict(result.grid),
        "integral_estimate": result.integral_estimate,
    }
    if result.kind == "density":
        payload["x"] = result.grid.x.tolist()
        payload["density"] = result.values.tolist()
    else:
        payload["re"] = result.grid.re.tolist()
        payload["im"] = result.grid.im.tolist()
        payload["q"] = result.values.tolist()
    if flatness is not None:
        payload["flatness"] = {
            "metric": "ripple = (max - min) / mean over the central coverage window",
            **asdict(flatness),
        }
    return json.dumps(payload, indent=1, sort_keys=True)
