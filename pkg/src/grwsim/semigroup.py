"""Two-level collapse toy model: spin-1/2 under H = hbar*omega*sigma_x with
Poisson-rate ``lambda`` projective reductions onto the sigma_z eigenstates.

The statistical operator is kept in the parametrization

    rho = [[rho1,        rho3    ],
           [conj(rho3),  1 - rho1]]

so trace one holds by construction.  The master equation

    d rho/dt = -i[omega*sigma_x, rho] + lambda*(P+ rho P+ + P- rho P-) - lambda*rho

reduces componentwise to

    d rho1/dt = -2*omega*Im(rho3)
    d rho3/dt = -i*omega*(1 - 2*rho1) - lambda*rho3

(hbar cancels: the Hamiltonian enters only through omega).  Writing
x = rho1 - 1/2, y = Im rho3, z = Re rho3 decouples this into z' = -lambda*z
and the 2x2 linear system x' = -2 omega y, y' = 2 omega x - lambda y whose
eigenvalues are (-lambda +/- sqrt(lambda^2 - 16 omega^2)) / 2.  That is the
closed form used by :func:`closed_form_solution`.  :func:`evolve_numeric`
integrates the unreduced 2x2 matrix equation instead, so the two routes are
independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ValidationError",
    "CriticalDampingError",
    "IntegrationError",
    "ToyParams",
    "PureState2",
    "DensityMatrix2",
    "TimeSeries",
    "Plateau",
    "PLUS_PROJECTOR",
    "MINUS_PROJECTOR",
    "SIGMA_X",
    "DEFAULT_LAMBDA",
    "initial_superposition",
    "mixture",
    "pure_to_density",
    "lindblad_rhs",
    "lindblad_rhs_matrix",
    "relaxation_rates",
    "mode_amplitudes",
    "closed_form_solution",
    "closed_form_series",
    "evolve_numeric",
    "superoperator",
    "default_rk4_step",
    "steady_state",
    "detect_plateau",
]

DEFAULT_LAMBDA = 100.0  # 1/s; reduction time ~ perceptual time 1e-2 s
NORM_TOL = 1e-12
STATE_TOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PLUS_PROJECTOR = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
MINUS_PROJECTOR = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
for _m in (SIGMA_X, PLUS_PROJECTOR, MINUS_PROJECTOR):
    _m.setflags(write=False)


class ValidationError(ValueError):
    """Input violates a state or parameter invariant."""


class CriticalDampingError(ValueError):
    """lambda^2 == 16 omega^2: the relaxation eigenvalues coincide."""


class IntegrationError(RuntimeError):
    """Adaptive integration could not proceed (step size underflow)."""

    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last good time t={last_time!r})")
        self.last_time = last_time


@dataclass(frozen=True)
class ToyParams:
    omega: float
    lambda_rate: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega >= 0.0):
            raise ValidationError(f"omega must be finite and >= 0, got {self.omega!r}")
        if not (math.isfinite(self.lambda_rate) and self.lambda_rate > 0.0):
            raise ValidationError(f"lambda_rate must be finite and > 0, got {self.lambda_rate!r}")

    @property
    def epsilon(self) -> float:
        return self.omega / self.lambda_rate

    @classmethod
    def from_epsilon(cls, epsilon: float, lambda_rate: float = DEFAULT_LAMBDA) -> "ToyParams":
        return cls(omega=epsilon * lambda_rate, lambda_rate=lambda_rate)


@dataclass(frozen=True)
class PureState2:
    """Normalized spinor in the sigma_z basis."""

    c_plus: complex
    c_minus: complex

    def __post_init__(self):
        object.__setattr__(self, "c_plus", complex(self.c_plus))
        object.__setattr__(self, "c_minus", complex(self.c_minus))
        norm2 = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if not abs(norm2 - 1.0) <= NORM_TOL:
            raise ValidationError(f"state not normalized: |c+|^2 + |c-|^2 = {norm2!r}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_plus, self.c_minus])

    @property
    def prob_plus(self) -> float:
        return abs(self.c_plus) ** 2


def initial_superposition(weight_plus: float = 0.48, sign: int = +1) -> PureState2:
    """``sqrt(w)|+> + sign * i * sqrt(1 - w)|->`` (the toy model's default start)."""
    if not 0.0 <= weight_plus <= 1.0:
        raise ValidationError(f"weight_plus must lie in [0, 1], got {weight_plus!r}")
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    return PureState2(math.sqrt(weight_plus), sign * 1j * math.sqrt(1.0 - weight_plus))


@dataclass(frozen=True)
class DensityMatrix2:
    rho1: float
    rho3: complex

    def __post_init__(self):
        object.__setattr__(self, "rho1", float(self.rho1))
        object.__setattr__(self, "rho3", complex(self.rho3))
        r1 = self.rho1
        if not (-STATE_TOL <= r1 <= 1.0 + STATE_TOL):
            raise ValidationError(f"rho1 outside [0, 1]: {r1!r}")
        if abs(self.rho3) ** 2 > r1 * (1.0 - r1) + STATE_TOL:
            raise ValidationError(
                f"not positive: |rho3|^2={abs(self.rho3) ** 2!r} > rho1(1-rho1)={r1 * (1 - r1)!r}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.rho1, self.rho3], [self.rho3.conjugate(), 1.0 - self.rho1]], dtype=complex
        )

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix2":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(np.trace(m) - 1.0) > STATE_TOL or np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise ValidationError("matrix is not a unit-trace Hermitian operator")
        return cls(m[0, 0].real, m[0, 1])

    @property
    def purity(self) -> float:
        """tr(rho^2)."""
        r1 = self.rho1
        return r1 * r1 + (1.0 - r1) ** 2 + 2.0 * abs(self.rho3) ** 2


def mixture(states: Sequence[DensityMatrix2], weights: Sequence[float]) -> DensityMatrix2:
    """Convex combination of statistical operators."""
    w = np.asarray(weights, dtype=float)
    if len(states) != len(w) or len(w) == 0:
        raise ValidationError("states and weights must be non-empty and of equal length")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError(f"weights must be non-negative and sum to 1, got {w.tolist()}")
    rho1 = sum(wi * s.rho1 for wi, s in zip(w, states))
    rho3 = sum(wi * s.rho3 for wi, s in zip(w, states))
    return DensityMatrix2(rho1, rho3)


@dataclass(frozen=True)
class TimeSeries:
    """Sampled trajectory of the statistical operator.

    Stored column-wise; ``series[i]`` gives the :class:`DensityMatrix2` at
    ``series.times[i]``.
    """

    times: np.ndarray
    rho1: np.ndarray
    rho3: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        rho1 = np.array(self.rho1, dtype=float)
        rho3 = np.array(self.rho3, dtype=complex)
        if times.ndim != 1 or rho1.shape != times.shape or rho3.shape != times.shape:
            raise ValidationError("times, rho1 and rho3 must be 1-D arrays of equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValidationError("times must be strictly increasing")
        for name, arr in (("times", times), ("rho1", rho1), ("rho3", rho3)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, i: int) -> DensityMatrix2:
        return DensityMatrix2(self.rho1[i], self.rho3[i])

    def max_violation(self) -> float:
        """Largest breach of the state invariants over all samples (<= 0 means none)."""
        below = -self.rho1
        above = self.rho1 - 1.0
        positivity = np.abs(self.rho3) ** 2 - self.rho1 * (1.0 - self.rho1)
        return float(max(below.max(), above.max(), positivity.max()))


def _as_grid(times: Iterable[float]) -> np.ndarray:
    grid = np.asarray(times, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("time grid must be a non-empty 1-D sequence")
    if grid[0] != 0.0:
        raise ValidationError(f"time grid must start at 0, got {grid[0]!r}")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("time grid must be strictly increasing")
    return grid


def pure_to_density(psi: PureState2) -> DensityMatrix2:
    if not isinstance(psi, PureState2):
        raise ValidationError("expected a PureState2")
    return DensityMatrix2(abs(psi.c_plus) ** 2, psi.c_plus * psi.c_minus.conjugate())


def lindblad_rhs(rho: DensityMatrix2, p: ToyParams) -> tuple[float, complex]:
    """Time derivative ``(d rho1/dt, d rho3/dt)`` of the toy master equation.

    Component form of  -i[omega sigma_x, rho] + lambda sum_k P_k rho P_k - lambda rho:
    the commutator gives d rho1 = -i omega (rho3* - rho3) = -2 omega Im rho3 and
    d rho3 = -i omega (1 - 2 rho1); the dissipator leaves the diagonal alone and
    damps the coherence at rate lambda.
    """
    d_rho1 = -2.0 * p.omega * rho.rho3.imag
    d_rho3 = -1j * p.omega * (1.0 - 2.0 * rho.rho1) - p.lambda_rate * rho.rho3
    return d_rho1, d_rho3


def lindblad_rhs_matrix(rho: np.ndarray, p: ToyParams) -> np.ndarray:
    """Same generator evaluated directly on a 2x2 matrix."""
    h = p.omega * SIGMA_X
    out = -1j * (h @ rho - rho @ h)
    for proj in (PLUS_PROJECTOR, MINUS_PROJECTOR):
        out = out + p.lambda_rate * (proj @ rho @ proj)
    return out - p.lambda_rate * rho


def _check_noncritical(p: ToyParams) -> float:
    disc = p.lambda_rate**2 - 16.0 * p.omega**2
    if abs(disc) <= 1e-12 * p.lambda_rate**2:
        raise CriticalDampingError(
            f"critical damping lambda = 4 omega (lambda={p.lambda_rate!r}, omega={p.omega!r}) "
            "is not supported"
        )
    return disc


def relaxation_rates(p: ToyParams) -> tuple[complex, complex]:
    """Eigenvalues ``(s_slow, s_fast)`` of the population/coherence block.

    Computed so that the slow rate, ~ -4 omega^2/lambda when omega << lambda,
    keeps full relative precision (product of the roots is 4 omega^2).
    """
    disc = _check_noncritical(p)
    lam = p.lambda_rate
    if disc > 0:
        s_fast = -0.5 * (lam + math.sqrt(disc))
        s_slow = 4.0 * p.omega**2 / s_fast
        return complex(s_slow), complex(s_fast)
    root = 0.5j * math.sqrt(-disc)
    return complex(-0.5 * lam + root), complex(-0.5 * lam - root)


def mode_amplitudes(rho0: DensityMatrix2, p: ToyParams) -> tuple[complex, complex]:
    """Amplitudes ``(x_s, x_f)`` with rho1(t) - 1/2 = x_s e^{s_slow t} + x_f e^{s_fast t}."""
    s1, s2 = relaxation_rates(p)
    x0 = rho0.rho1 - 0.5
    y0 = rho0.rho3.imag
    # x' = -2 omega y  =>  x'(0) = s1 x_s + s2 x_f
    dx0 = -2.0 * p.omega * y0
    x_s = (dx0 - s2 * x0) / (s1 - s2)
    x_f = x0 - x_s
    return x_s, x_f


def _propagate(rho0: DensityMatrix2, p: ToyParams, t: np.ndarray):
    s1, s2 = relaxation_rates(p)
    om, lam = p.omega, p.lambda_rate
    x0 = rho0.rho1 - 0.5
    y0 = rho0.rho3.imag
    z0 = rho0.rho3.real
    e1 = np.exp(s1 * t)
    e2 = np.exp(s2 * t)
    # exp(Mt) = [e1 (M - s2) - e2 (M - s1)] / (s1 - s2),  M = [[0, -2w], [2w, -lam]]
    denom = s1 - s2
    m00 = (e1 * (0.0 - s2) - e2 * (0.0 - s1)) / denom
    m01 = (e1 - e2) * (-2.0 * om) / denom
    m10 = (e1 - e2) * (2.0 * om) / denom
    m11 = (e1 * (-lam - s2) - e2 * (-lam - s1)) / denom
    x = (m00 * x0 + m01 * y0).real
    y = (m10 * x0 + m11 * y0).real
    z = z0 * np.exp(-lam * t)
    return 0.5 + x, z + 1j * y


def closed_form_solution(rho0: DensityMatrix2, p: ToyParams, t: float) -> DensityMatrix2:
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t!r}")
    if t == 0:
        return rho0
    rho1, rho3 = _propagate(rho0, p, np.asarray(float(t)))
    return DensityMatrix2(float(rho1), complex(rho3))


def closed_form_series(rho0: DensityMatrix2, p: ToyParams, times: Iterable[float]) -> TimeSeries:
    """Vectorized :func:`closed_form_solution` over a time grid starting at 0."""
    grid = _as_grid(times)
    rho1, rho3 = _propagate(rho0, p, grid)
    rho1[0] = rho0.rho1
    rho3[0] = rho0.rho3
    return TimeSeries(grid, rho1, rho3)


# Two-stage Gauss-Legendre collocation (order 4, A-stable).
_SQ3 = math.sqrt(3.0)
_GL_A = np.array([[0.25, 0.25 - _SQ3 / 6.0], [0.25 + _SQ3 / 6.0, 0.25]])


def superoperator(p: ToyParams) -> np.ndarray:
    """4x4 generator acting on the row-major vectorization of rho."""
    eye = np.eye(2)
    h = p.omega * SIGMA_X
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for proj in (PLUS_PROJECTOR, MINUS_PROJECTOR):
        sup = sup + p.lambda_rate * np.kron(proj, proj.T)
    return sup - p.lambda_rate * np.eye(4)


def _gl4_step(gen: np.ndarray, gen_a: np.ndarray, u: np.ndarray, h: float) -> np.ndarray:
    lu = gen @ u
    k = np.linalg.solve(np.eye(8) - h * gen_a, np.concatenate((lu, lu)))
    return u + 0.5 * h * (k[:4] + k[4:])


def _evolve_gauss4(gen, u, grid, atol):
    gen_a = np.kron(_GL_A, gen)
    local_tol = 1e-2 * atol
    rate = max(np.max(np.abs(gen)), 1e-300)
    h = 1e-3 / rate
    out = np.empty((grid.size, 4), dtype=complex)
    out[0] = u
    t = 0.0
    for i in range(1, grid.size):
        target = grid[i]
        while t < target:
            last = target - t <= h
            step = target - t if last else h
            if step <= 1e-14 * max(abs(t), 1.0 / rate):
                raise IntegrationError("step size underflow", t)
            full = _gl4_step(gen, gen_a, u, step)
            mid = _gl4_step(gen, gen_a, u, 0.5 * step)
            half = _gl4_step(gen, gen_a, mid, 0.5 * step)
            diff = half - full
            err = np.max(np.abs(diff)) / 15.0
            if err <= local_tol:
                u = half + diff / 15.0
                t = target if last else t + step
            fac = 0.9 * (local_tol / err) ** 0.2 if err > 0 else 5.0
            h = step * min(5.0, max(0.2, fac))
        out[i] = u
    return out


def _evolve_rk4(gen, u, grid, dt):
    out = np.empty((grid.size, 4), dtype=complex)
    out[0] = u
    for i in range(1, grid.size):
        span = grid[i] - grid[i - 1]
        n = max(1, math.ceil(span / dt))
        h = span / n
        for _ in range(n):
            k1 = gen @ u
            k2 = gen @ (u + 0.5 * h * k1)
            k3 = gen @ (u + 0.5 * h * k2)
            k4 = gen @ (u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = u
    return out


def default_rk4_step(p: ToyParams) -> float:
    """Fixed step resolving both the coherence decay and the Rabi rotation."""
    dt = 1.0 / (50.0 * p.lambda_rate)
    if p.omega > 0:
        dt = min(dt, 1.0 / (50.0 * p.omega))
    return dt


def evolve_numeric(
    rho0: DensityMatrix2,
    p: ToyParams,
    times: Iterable[float],
    method: str = "gauss4",
    atol: float = 1e-9,
    dt: float | None = None,
) -> TimeSeries:
    """Integrate the 2x2 master equation numerically on ``times``.

    ``method="gauss4"`` (default) is an adaptive two-stage Gauss-Legendre
    scheme with step-doubling error control; being A-stable it crosses the
    fast (rate ~lambda) transient and then takes steps sized by the slow mode,
    which is what makes horizons like 1e12 s tractable.  ``atol`` is the
    target absolute accuracy on rho1; per-step error is held to ``atol/100``.

    ``method="rk4"`` is classical fixed-step RK4 with step ``dt`` (default
    :func:`default_rk4_step`); only practical for short horizons.
    """
    grid = _as_grid(times)
    gen = superoperator(p)
    u0 = rho0.matrix.reshape(-1)
    if method == "gauss4":
        if atol <= 0:
            raise ValidationError("atol must be > 0")
        out = _evolve_gauss4(gen, u0, grid, atol)
    elif method == "rk4":
        out = _evolve_rk4(gen, u0, grid, dt or default_rk4_step(p))
    else:
        raise ValidationError(f"unknown method {method!r}")
    return TimeSeries(grid, out[:, 0].real, out[:, 1])


def steady_state(p: ToyParams) -> DensityMatrix2:
    """The maximally mixed state I/2, stationary for every omega and lambda."""
    if p.lambda_rate <= 0:
        raise ValidationError("lambda_rate must be > 0")
    return DensityMatrix2(0.5, 0.0)


@dataclass(frozen=True)
class Plateau:
    start: float
    end: float
    value: float
    delta: float
    censored: bool = field(default=False)  # series ended before rho1 left the band

    @property
    def duration(self) -> float:
        return self.end - self.start


def detect_plateau(series: TimeSeries, t_settle: float = 0.1, delta: float = 0.0025) -> Plateau:
    """Longest interval from ``t_settle`` over which rho1 stays within ``delta``
    of its value at ``t_settle``.

    rho1(t_settle) is linearly interpolated if ``t_settle`` is off-grid.  The
    exit point is located by linear interpolation between the last in-band and
    first out-of-band samples; if the series never leaves the band the plateau
    runs to the last sample and ``censored`` is set.
    """
    if delta <= 0:
        raise ValidationError("delta must be > 0")
    t = series.times
    if len(series) < 2 or t_settle < t[0] or t_settle >= t[-1]:
        raise ValidationError("series too short: it must extend beyond t_settle")
    after = t > t_settle
    if np.count_nonzero(after) < 2:
        raise ValidationError("series too short: need at least two samples after t_settle")
    value = float(np.interp(t_settle, t, series.rho1))
    ts = np.concatenate(([t_settle], t[after]))
    dev = np.abs(np.concatenate(([value], series.rho1[after])) - value)
    outside = np.flatnonzero(dev > delta)
    if outside.size == 0:
        return Plateau(t_settle, float(ts[-1]), value, delta, censored=True)
    j = outside[0]
    t0, t1 = ts[j - 1], ts[j]
    d0, d1 = dev[j - 1], dev[j]
    end = t0 + (t1 - t0) * (delta - d0) / (d1 - d0)
    return Plateau(t_settle, float(end), value, delta)
