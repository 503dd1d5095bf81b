"""GRW spontaneous localization of a 1-D wavefunction on a uniform grid.

Units are natural: hbar = 1, masses in nucleon masses, lengths in units of
the localization width (so the default ``alpha`` is 1).  CGS conversions for
the physical parameter values live in :mod:`grwsim.estimates`.

A hit centred at ``x_bar`` multiplies the wavefunction by the 1-D Gaussian

    L(x_bar) = (alpha/pi)^(1/4) exp(-alpha/2 (x - x_bar)^2)

and renormalizes; ``x_bar`` is drawn from p(x_bar) = ||L(x_bar) psi||^2.
Hit times form a Poisson process whose rate is ``n_constituents *
lambda_micro``: the wavefunction stands for the centre of mass of a rigid
body, which is localized whenever any constituent is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .trajectories import poisson_times

__all__ = [
    "GrwError",
    "LocalizationUnderflowError",
    "NyquistError",
    "BoundaryError",
    "GrwParams",
    "GridWavefunction",
    "HitEvent",
    "GrwRun",
    "make_grid_state",
    "gaussian_packet",
    "two_packet_state",
    "apply_localization",
    "hit_density",
    "sample_hit",
    "schedule_hits",
    "free_drift",
    "kinetic_energy",
    "position_moments",
    "mass_density",
    "run_grw",
    "expected_energy_gain_per_hit",
]

NORM_TOL = 1e-8
BOUNDARY_MASS_TOL = 1e-6
SPECTRAL_TAIL_TOL = 1e-10
BOUNDARY_FRACTION = 1.0 / 32.0
NYQUIST_FRACTION = 0.8


class GrwError(RuntimeError):
    pass


class LocalizationUnderflowError(GrwError):
    """The hit multiplier annihilated the state to machine precision."""


class NyquistError(GrwError):
    """The grid spacing does not resolve the state's momentum content."""


class BoundaryError(GrwError):
    """Probability has reached the edge of the periodic grid."""


@dataclass(frozen=True)
class GrwParams:
    lambda_micro: float
    alpha: float = 1.0
    mass: float = 1.0
    n_constituents: float = 1

    def __post_init__(self):
        if not self.lambda_micro > 0:
            raise ValueError("lambda_micro must be > 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if not self.n_constituents >= 1:
            raise ValueError("n_constituents must be >= 1")

    @property
    def rate(self) -> float:
        """Centre-of-mass hit rate N * lambda."""
        return self.n_constituents * self.lambda_micro


@dataclass(frozen=True)
class GridWavefunction:
    x_min: float
    dx: float
    amplitudes: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a 1-D array with at least two points")
        if not self.dx > 0 or not self.mass > 0:
            raise ValueError("dx and mass must be > 0")
        norm2 = float(np.sum(np.abs(amps) ** 2) * self.dx)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"wavefunction not normalized: sum |psi|^2 dx = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm2(self) -> float:
        return float(np.sum(self.probability) * self.dx)

    def replace(self, amplitudes: np.ndarray) -> "GridWavefunction":
        return GridWavefunction(self.x_min, self.dx, amplitudes, self.mass)

    def boundary_mass(self) -> float:
        width = max(1, int(self.n * BOUNDARY_FRACTION))
        prob = self.probability
        return float((prob[:width].sum() + prob[-width:].sum()) * self.dx)

    def check_support(self) -> None:
        edge = self.boundary_mass()
        if edge > BOUNDARY_MASS_TOL:
            raise BoundaryError(f"boundary probability {edge:.3e} exceeds {BOUNDARY_MASS_TOL:g}")


def make_grid_state(x_min: float, dx: float, values: np.ndarray, mass: float = 1.0) -> GridWavefunction:
    """Normalize arbitrary sampled amplitudes into a :class:`GridWavefunction`."""
    values = np.asarray(values, dtype=complex)
    norm = math.sqrt(float(np.sum(np.abs(values) ** 2)) * dx)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return GridWavefunction(x_min, dx, values / norm, mass)


def gaussian_packet(x: np.ndarray, center: float, sigma: float, k0: float = 0.0) -> np.ndarray:
    """Unnormalized packet whose |psi|^2 has standard deviation ``sigma``."""
    return np.exp(-((x - center) ** 2) / (4.0 * sigma**2) + 1j * k0 * x)


def two_packet_state(
    separation: float,
    sigma: float = 1.0,
    weights: tuple[float, float] = (0.48, 0.52),
    n: int = 4096,
    span: float | None = None,
    mass: float = 1.0,
) -> GridWavefunction:
    """sqrt(w_A) * packet(+d/2) + sqrt(w_B) * packet(-d/2) on a centred grid.

    Packet A sits at ``+separation/2``.  The default span is the separation
    plus 24 widths on each side.
    """
    if span is None:
        span = separation + 48.0 * sigma
    dx = span / n
    x_min = -span / 2.0
    x = x_min + dx * np.arange(n)
    a = gaussian_packet(x, separation / 2.0, sigma)
    b = gaussian_packet(x, -separation / 2.0, sigma)
    a /= math.sqrt(np.sum(np.abs(a) ** 2) * dx)
    b /= math.sqrt(np.sum(np.abs(b) ** 2) * dx)
    wa, wb = weights
    return make_grid_state(x_min, dx, math.sqrt(wa) * a + math.sqrt(wb) * b, mass)


def apply_localization(psi: GridWavefunction, x_bar: float, alpha: float) -> GridWavefunction:
    x = psi.x
    factor = (alpha / math.pi) ** 0.25 * np.exp(-0.5 * alpha * (x - x_bar) ** 2)
    hit = psi.amplitudes * factor
    norm2 = float(np.sum(np.abs(hit) ** 2) * psi.dx)
    if not norm2 > 1e-300:
        raise LocalizationUnderflowError(
            f"hit at x_bar={x_bar!r} leaves norm^2 {norm2!r}; state has no support there"
        )
    return psi.replace(hit / math.sqrt(norm2))


def _gaussian_kernel(alpha: float, dx: float, n: int) -> np.ndarray:
    reach = min(n - 1, int(math.ceil(math.sqrt(40.0 / alpha) / dx)))
    offsets = dx * np.arange(-reach, reach + 1)
    return math.sqrt(alpha / math.pi) * np.exp(-alpha * offsets**2)


def hit_density(psi: GridWavefunction, alpha: float) -> np.ndarray:
    """p(x_bar) on the grid points: |psi|^2 convolved with a normal density of
    variance 1/(2 alpha)."""
    kernel = _gaussian_kernel(alpha, psi.dx, psi.n)
    dens = fftconvolve(psi.probability * psi.dx, kernel, mode="same")
    return np.clip(dens, 0.0, None)


def sample_hit(psi: GridWavefunction, alpha: float, u, density: np.ndarray | None = None):
    """Inverse-CDF draw(s) of hit centres from :func:`hit_density`.

    Each grid point owns a cell of width dx; ``u`` is mapped through the
    piecewise-linear CDF of those cells (renormalized over the grid, i.e. the
    POVM truncated to the grid support).  Scalar in, scalar out.
    """
    dens = hit_density(psi, alpha) if density is None else density
    cell = dens * psi.dx
    cdf = np.cumsum(cell)
    total = cdf[-1]
    target = np.asarray(u, dtype=float) * total
    j = np.clip(np.searchsorted(cdf, target, side="left"), 0, psi.n - 1)
    prev = np.where(j > 0, cdf[j - 1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(cell[j] > 0, (target - prev) / cell[j], 0.5)
    x_bar = psi.x_min + psi.dx * (j - 0.5 + np.clip(frac, 0.0, 1.0))
    return float(x_bar) if x_bar.ndim == 0 else x_bar


def schedule_hits(p: GrwParams, horizon: float, seed) -> np.ndarray:
    """Hit times on [0, horizon] for rate N * lambda (``default_rng(seed)``)."""
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    return poisson_times(np.random.default_rng(seed), p.rate, horizon)


def free_drift(psi: GridWavefunction, dt: float) -> GridWavefunction:
    """Exact free evolution exp(-i k^2 dt / 2m) applied in momentum space.

    Raises :class:`NyquistError` if more than 1e-10 of the momentum
    distribution sits above 0.8 k_Nyquist, and :class:`BoundaryError` if the
    evolved state puts more than 1e-6 probability in the outer 1/32 of the
    grid on either side (the periodic wrap would then be visible).
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return psi
    phi = np.fft.fft(psi.amplitudes)
    power = np.abs(phi) ** 2
    k = psi.k
    tail = power[np.abs(k) > NYQUIST_FRACTION * math.pi / psi.dx].sum() / power.sum()
    if tail > SPECTRAL_TAIL_TOL:
        raise NyquistError(f"momentum weight {tail:.3e} above 0.8 k_Nyquist; refine the grid")
    out = psi.replace(np.fft.ifft(phi * np.exp(-0.5j * k**2 * dt / psi.mass)))
    out.check_support()
    return out


def kinetic_energy(psi: GridWavefunction) -> float:
    """<p^2>/2m evaluated spectrally (hbar = 1)."""
    power = np.abs(np.fft.fft(psi.amplitudes)) ** 2
    return float(np.sum(power * psi.k**2) / power.sum() / (2.0 * psi.mass))


def position_moments(psi: GridWavefunction) -> tuple[float, float]:
    """Mean and variance of |psi|^2."""
    w = psi.probability * psi.dx
    x = psi.x
    mean = float(np.sum(w * x))
    return mean, float(np.sum(w * (x - mean) ** 2))


def mass_density(psi: GridWavefunction) -> np.ndarray:
    """Single-particle mass density m |psi(x)|^2 on the grid."""
    return psi.mass * psi.probability


def expected_energy_gain_per_hit(alpha: float, mass: float) -> float:
    """Born-averaged kinetic-energy increase of one hit, hbar^2 alpha / (4 m)."""
    return alpha / (4.0 * mass)


@dataclass(frozen=True)
class HitEvent:
    time: float
    x_bar: float
    energy_before: float
    energy_after: float


@dataclass
class GrwRun:
    final: GridWavefunction
    hits: list[HitEvent] = field(default_factory=list)
    seed: object = None


def run_grw(psi0: GridWavefunction, p: GrwParams, horizon: float, seed) -> GrwRun:
    """Free evolution interleaved with Poisson-timed hits.

    One ``default_rng(seed)`` stream supplies, in order, the hit times (the
    same times :func:`schedule_hits` returns for this seed) and one uniform
    per hit for the centre.  The state is drifted up to each hit time, hit,
    and finally drifted to ``horizon``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if abs(psi0.mass - p.mass) > 1e-12 * p.mass:
        raise ValueError(f"state mass {psi0.mass!r} differs from parameter mass {p.mass!r}")
    rng = np.random.default_rng(seed)
    times = poisson_times(rng, p.rate, horizon)
    draws = rng.random(times.size)
    psi, t = psi0, 0.0
    hits = []
    for th, u in zip(times, draws):
        psi = free_drift(psi, th - t)
        t = th
        e_before = kinetic_energy(psi)
        x_bar = sample_hit(psi, p.alpha, u)
        psi = apply_localization(psi, x_bar, p.alpha)
        hits.append(HitEvent(float(th), x_bar, e_before, kinetic_energy(psi)))
    psi = free_drift(psi, horizon - t)
    return GrwRun(psi, hits, seed)
