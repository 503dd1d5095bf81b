"""Quantum-jump unraveling of the two-level collapse model.

Each trajectory is a pure state rotating under exp(-i omega t sigma_x) and
interrupted at Poisson(lambda) times by a projective reduction onto |+> or
|-> with Born probabilities.  Averaging rho1 over trajectories reproduces the
master-equation solution in :mod:`grwsim.semigroup`.

Seeds
-----
Every trajectory owns an independent ``numpy.random.PCG64`` stream.  The
per-trajectory seed is derived from the ensemble's master seed by
:func:`trajectory_seed`: the first 64-bit word of
``SeedSequence(master_seed, spawn_key=(index,))``.  This is numpy's own
spawning scheme (identical to ``SeedSequence(master_seed).spawn(n)[index]``),
so streams are statistically independent and do not depend on how the
ensemble is scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .semigroup import PureState2, ToyParams, ValidationError

__all__ = [
    "RNG_NAME",
    "TrajectoryRecord",
    "EnsembleSummary",
    "unitary_step",
    "sample_jump",
    "trajectory_seed",
    "poisson_times",
    "run_trajectory",
    "run_trajectory_reference",
    "ensemble_mean",
]

RNG_NAME = "numpy.PCG64 via SeedSequence(master_seed, spawn_key=(index,))"

PLUS = PureState2(1.0, 0.0)
MINUS = PureState2(0.0, 1.0)


def unitary_step(psi: PureState2, omega: float, dt: float) -> PureState2:
    """Apply exp(-i omega dt sigma_x) = cos(omega dt) I - i sin(omega dt) sigma_x."""
    c = math.cos(omega * dt)
    s = math.sin(omega * dt)
    return PureState2(c * psi.c_plus - 1j * s * psi.c_minus, -1j * s * psi.c_plus + c * psi.c_minus)


def sample_jump(psi: PureState2, u: float) -> tuple[PureState2, int]:
    """Reduce ``psi`` onto a sigma_z eigenstate: +1 iff ``u < |c_plus|^2``."""
    if u < abs(psi.c_plus) ** 2:
        return PLUS, +1
    return MINUS, -1


def trajectory_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def poisson_times(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Event times of a rate-``rate`` Poisson process on [0, horizon].

    Inter-arrival gaps are drawn in chunks sized from the expected count, so
    the sequence of draws (and hence the result) depends only on the stream.
    """
    if rate <= 0 or horizon <= 0:
        return np.empty(0)
    expected = rate * horizon
    chunk = int(expected + 5.0 * math.sqrt(expected) + 16) if expected < 1e8 else int(1e8)
    times = []
    t = 0.0
    while True:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        block = t + np.cumsum(gaps)
        inside = block[block <= horizon]
        times.append(inside)
        if inside.size < block.size:
            break
        t = block[-1]
    return np.concatenate(times)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One unraveled trajectory.

    ``c_plus``/``c_minus`` hold the pure state on the sampling grid ``times``
    (right-continuous: a jump at exactly a grid time is already applied).
    The post-jump states are the basis states named by ``jump_outcomes``.
    """

    seed: int
    jump_times: np.ndarray
    jump_outcomes: np.ndarray
    times: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray

    @property
    def rho1(self) -> np.ndarray:
        return np.abs(self.c_plus) ** 2

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.abs(self.c_plus) ** 2 + np.abs(self.c_minus) ** 2)

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)


def _check_grid(grid, horizon: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("sampling grid must be a non-empty 1-D sequence")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValidationError("sampling grid must be non-negative and strictly increasing")
    if horizon < grid[-1]:
        raise ValidationError(f"horizon {horizon!r} is shorter than the grid end {grid[-1]!r}")
    return grid


def _resolve_outcomes(p_plus_first: float, gaps: np.ndarray, omega: float, u: np.ndarray) -> np.ndarray:
    """Vectorized jump outcomes, bit-identical to the sequential rule.

    After a reduction the state is a basis vector; a gap of length g rotates
    it so the next +1 probability is cos^2(omega g) from |+> and sin^2(omega g)
    from |->.  Jump k is thus a map {+,-} -> {+,-}: constant if both branches
    agree, else identity or negation.  Outcomes follow from the last constant
    map and the parity of negations since.
    """
    n = u.size
    out_if_plus = np.empty(n, dtype=bool)
    out_if_minus = np.empty(n, dtype=bool)
    out_if_plus[0] = out_if_minus[0] = u[0] < p_plus_first
    theta = omega * gaps
    out_if_plus[1:] = u[1:] < np.cos(theta) ** 2
    out_if_minus[1:] = u[1:] < np.sin(theta) ** 2
    const = out_if_plus == out_if_minus
    neg = ~out_if_plus & out_if_minus
    idx = np.arange(n)
    last_const = np.maximum.accumulate(np.where(const, idx, 0))
    parity = np.cumsum(neg)
    flips = (parity - parity[last_const]) & 1
    plus = out_if_plus[last_const] ^ flips.astype(bool)
    return np.where(plus, 1, -1).astype(np.int8)


def _rotate(c_plus, c_minus, theta):
    c = np.cos(theta)
    s = np.sin(theta)
    return c * c_plus - 1j * s * c_minus, -1j * s * c_plus + c * c_minus


def run_trajectory(
    psi0: PureState2, p: ToyParams, horizon: float, grid: Sequence[float], seed: int
) -> TrajectoryRecord:
    """Simulate one trajectory up to ``horizon`` and sample it on ``grid``.

    Draw order from ``default_rng(seed)``: jump times (chunked exponential
    gaps), then one uniform per jump for the outcome.
    """
    grid = _check_grid(grid, horizon)
    rng = np.random.default_rng(seed)
    jump_times = poisson_times(rng, p.lambda_rate, horizon)
    u = rng.random(jump_times.size)
    omega = p.omega

    if jump_times.size:
        c0p, _ = _rotate(psi0.c_plus, psi0.c_minus, omega * jump_times[0])
        outcomes = _resolve_outcomes(abs(c0p) ** 2, np.diff(jump_times), omega, u)
    else:
        outcomes = np.empty(0, dtype=np.int8)

    last = np.searchsorted(jump_times, grid, side="right") - 1
    before = last < 0
    if jump_times.size:
        tau = np.where(before, grid, grid - jump_times[np.maximum(last, 0)])
    else:
        tau = grid
    start_plus = np.where(before, psi0.c_plus, 0.0).astype(complex)
    start_minus = np.where(before, psi0.c_minus, 0.0).astype(complex)
    if jump_times.size:
        landed = outcomes[np.maximum(last, 0)]
        start_plus = np.where(~before & (landed == 1), 1.0 + 0j, start_plus)
        start_minus = np.where(~before & (landed == -1), 1.0 + 0j, start_minus)
    c_plus, c_minus = _rotate(start_plus, start_minus, omega * tau)
    return TrajectoryRecord(seed, jump_times, outcomes, grid, c_plus, c_minus)


def run_trajectory_reference(
    psi0: PureState2, p: ToyParams, horizon: float, grid: Sequence[float], seed: int
) -> TrajectoryRecord:
    """Event-by-event version of :func:`run_trajectory` built from
    :func:`unitary_step` and :func:`sample_jump`.  Same draws, same result;
    kept as a slow cross-check."""
    grid = _check_grid(grid, horizon)
    rng = np.random.default_rng(seed)
    jump_times = poisson_times(rng, p.lambda_rate, horizon)
    u = rng.random(jump_times.size)
    psi, t = psi0, 0.0
    outcomes = []
    states = []
    gi = 0
    for tj, uj in zip(jump_times, u):
        while gi < grid.size and grid[gi] < tj:
            states.append(unitary_step(psi, p.omega, grid[gi] - t))
            gi += 1
        psi, outcome = sample_jump(unitary_step(psi, p.omega, tj - t), uj)
        t = tj
        outcomes.append(outcome)
    while gi < grid.size:
        states.append(unitary_step(psi, p.omega, grid[gi] - t))
        gi += 1
    c_plus = np.array([s.c_plus for s in states])
    c_minus = np.array([s.c_minus for s in states])
    return TrajectoryRecord(seed, jump_times, np.array(outcomes, dtype=np.int8), grid, c_plus, c_minus)


@dataclass(frozen=True)
class EnsembleSummary:
    n_traj: int
    master_seed: int
    times: np.ndarray
    mean_rho1: np.ndarray
    stderr_rho1: np.ndarray
    jump_counts: np.ndarray


def ensemble_mean(
    psi0: PureState2,
    p: ToyParams,
    horizon: float,
    grid: Sequence[float],
    n_traj: int,
    master_seed: int,
    workers: int | None = None,
) -> EnsembleSummary:
    """Average rho1 over ``n_traj`` independently seeded trajectories.

    Rows are stored by trajectory index before reduction, so any ``workers``
    setting returns a bitwise-identical summary.
    """
    if n_traj < 2:
        raise ValidationError("n_traj must be >= 2 for a standard error")
    grid = _check_grid(grid, horizon)
    # time-major so the per-time reductions below use pairwise summation
    rows = np.empty((grid.size, n_traj))
    counts = np.empty(n_traj, dtype=np.int64)

    def work(i: int) -> None:
        rec = run_trajectory(psi0, p, horizon, grid, trajectory_seed(master_seed, i))
        rows[:, i] = rec.rho1
        counts[i] = rec.n_jumps

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(n_traj)))
    else:
        for i in range(n_traj):
            work(i)
    mean = rows.mean(axis=1)
    stderr = rows.std(axis=1, ddof=1) / math.sqrt(n_traj)
    return EnsembleSummary(n_traj, master_seed, grid, mean, stderr, counts)
