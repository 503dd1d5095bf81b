"""Order-of-magnitude calculators for GRW regimes, in CGS units.

All constants are pinned in this module.  Everything here is closed-form
arithmetic; no randomness and no state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "HBAR_CGS",
    "NUCLEON_MASS_G",
    "SECONDS_PER_YEAR",
    "GRW_LAMBDA",
    "GRW_ALPHA",
    "ADLER_FACTOR",
    "ADLER_LAMBDA",
    "PERCEPTUAL_TIME",
    "PhysicalParams",
    "RegimeReport",
    "localization_interval",
    "spread_time",
    "hits_during_spread",
    "regime_report",
    "pointer_table",
]

HBAR_CGS = 1.0546e-27  # erg s
NUCLEON_MASS_G = 1.67e-24  # g
SECONDS_PER_YEAR = 3.156e7
GRW_LAMBDA = 1e-16  # 1/s per nucleon
GRW_ALPHA = 1e10  # 1/cm^2
ADLER_FACTOR = 1e8
ADLER_LAMBDA = GRW_LAMBDA * ADLER_FACTOR
PERCEPTUAL_TIME = 1e-2  # s
# reduction slower than this many perceptual times counts as plainly quantum
QUANTUM_MARGIN = 1e4


@dataclass(frozen=True)
class PhysicalParams:
    lambda_micro: float = GRW_LAMBDA
    alpha: float = GRW_ALPHA
    mass: float = 1.0
    sigma0: float = 1e-5
    sigma_target: float = 1e-1
    n_nucleons: float | None = None

    def __post_init__(self):
        for name in ("lambda_micro", "alpha", "mass", "sigma0", "sigma_target"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_nucleons is None:
            object.__setattr__(self, "n_nucleons", self.mass / NUCLEON_MASS_G)
        elif not self.n_nucleons > 0:
            raise ValueError("n_nucleons must be > 0")


def localization_interval(n: float, lambda_micro: float) -> float:
    """Mean time between centre-of-mass localizations, 1/(n lambda)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not lambda_micro > 0:
        raise ValueError("lambda_micro must be > 0")
    return 1.0 / (n * lambda_micro)


def spread_time(mass: float, sigma0: float, sigma_target: float) -> float:
    """Time for a free Gaussian of width sigma0 to reach sigma_target.

    Inverts sigma(t) = sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2).
    """
    if not (mass > 0 and sigma0 > 0):
        raise ValueError("mass and sigma0 must be > 0")
    if sigma_target < sigma0:
        raise ValueError(f"sigma_target {sigma_target!r} is below sigma0 {sigma0!r}")
    ratio = sigma_target / sigma0
    return 2.0 * mass * sigma0**2 / HBAR_CGS * math.sqrt(ratio * ratio - 1.0)


def hits_during_spread(p: PhysicalParams) -> float:
    return spread_time(p.mass, p.sigma0, p.sigma_target) * p.n_nucleons * p.lambda_micro


@dataclass(frozen=True)
class RegimeReport:
    n_displaced: float
    lambda_micro: float
    perceptual_time: float
    reduction_time: float
    regime: str
    grw_reduction_time: float
    adler_reduction_time: float
    required_lambda: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_records(self) -> list[tuple[str, str]]:
        rows = [
            ("n_displaced", f"{self.n_displaced:.6g}"),
            ("lambda_micro", f"{self.lambda_micro:.6g}"),
            ("perceptual_time_s", f"{self.perceptual_time:.6g}"),
            ("reduction_time_s", f"{self.reduction_time:.6g}"),
            ("regime", self.regime),
            ("grw_reduction_time_s", f"{self.grw_reduction_time:.6g}"),
            ("adler_reduction_time_s", f"{self.adler_reduction_time:.6g}"),
            ("required_lambda_per_s", f"{self.required_lambda:.6g}"),
        ]
        rows.extend((f"note.{i}", note) for i, note in enumerate(self.notes))
        return rows

    def to_text(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in self.to_records())


def regime_report(
    p: PhysicalParams, n_displaced: float, perceptual_time: float = PERCEPTUAL_TIME
) -> RegimeReport:
    """Classify a superposition displacing ``n_displaced`` nucleons.

    ``classical`` if the reduction time 1/(n lambda) is at most the
    perceptual time, ``quantum`` if it exceeds it by more than 1e4, and
    ``transition`` in between.
    """
    tau = localization_interval(n_displaced, p.lambda_micro)
    if tau <= perceptual_time:
        regime = "classical"
    elif tau > QUANTUM_MARGIN * perceptual_time:
        regime = "quantum"
    else:
        regime = "transition"
    required = 1.0 / (n_displaced * perceptual_time)
    notes = []
    if n_displaced == 1:
        years = tau / SECONDS_PER_YEAR
        notes.append(f"single nucleon: one localization every {tau:.3g} s = {years:.3g} yr")
    if p.lambda_micro >= ADLER_LAMBDA and regime != "classical":
        notes.append(
            f"tension: with lambda={p.lambda_micro:.3g}/s reduction takes {tau:.3g} s, "
            f"slower than the {perceptual_time:g} s perceptual time; "
            f"reduction within it needs lambda >= {required:.3g}/s"
        )
    return RegimeReport(
        n_displaced=n_displaced,
        lambda_micro=p.lambda_micro,
        perceptual_time=perceptual_time,
        reduction_time=tau,
        regime=regime,
        grw_reduction_time=localization_interval(n_displaced, GRW_LAMBDA),
        adler_reduction_time=localization_interval(n_displaced, ADLER_LAMBDA),
        required_lambda=required,
        notes=tuple(notes),
    )


def pointer_table(mass: float = 1.0, sigma0: float = 1e-5, far_target: float = 1e-1) -> list[dict]:
    """Hits suffered by a spreading pointer, for doubling and for reaching
    ``far_target``, under the GRW and the Adler-rescaled rates."""
    rows = []
    for label, lam in (("grw", GRW_LAMBDA), ("adler", ADLER_LAMBDA)):
        for target_label, target in (("doubling", 2.0 * sigma0), ("far", far_target)):
            p = PhysicalParams(lambda_micro=lam, mass=mass, sigma0=sigma0, sigma_target=target)
            rows.append(
                {
                    "rate_model": label,
                    "lambda_micro": lam,
                    "target": target_label,
                    "sigma_target_cm": target,
                    "spread_time_s": spread_time(mass, sigma0, target),
                    "n_nucleons": p.n_nucleons,
                    "hits": hits_during_spread(p),
                }
            )
    return rows
