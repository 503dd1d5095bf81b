"""Named, reproducible scenarios with CSV output and key/value manifests.

A scenario is a function of (parameters, tolerances, seed) returning tables
and a list of named checks.  :func:`run_scenario` resolves overrides, runs
it, writes ``<id>_<table>.csv`` files plus ``<id>_manifest.txt`` into the
output directory and returns the :class:`ExperimentManifest`.

CSV floats are written with 17 significant digits so reruns are
byte-identical.  Toy-model series use the header ``t,rho1,re_rho3,im_rho3``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import estimates as est
from .grw import (
    GrwParams,
    apply_localization,
    expected_energy_gain_per_hit,
    gaussian_packet,
    make_grid_state,
    run_grw,
    two_packet_state,
)
from .semigroup import (
    DensityMatrix2,
    PureState2,
    TimeSeries,
    ToyParams,
    closed_form_series,
    closed_form_solution,
    detect_plateau,
    evolve_numeric,
    initial_superposition,
    pure_to_density,
)
from .trajectories import RNG_NAME, trajectory_seed

__all__ = [
    "EXIT_PASS",
    "EXIT_ERROR",
    "EXIT_FAILED",
    "UnknownScenarioError",
    "ParameterError",
    "Check",
    "ScenarioOutcome",
    "Scenario",
    "ExperimentManifest",
    "SCENARIOS",
    "get_scenario",
    "coerce_values",
    "bob_branches",
    "scenario_fig2",
    "scenario_fig34",
    "scenario_fig5",
    "scenario_grw_twopacket",
    "scenario_grw_energy",
    "scenario_pointer_estimates",
    "run_scenario",
    "read_manifest",
    "rerun_manifest",
]

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

SERIES_HEADER = ("t", "rho1", "re_rho3", "im_rho3")


class UnknownScenarioError(KeyError):
    pass


class ParameterError(ValueError):
    """Override names an undeclared key or has a value of the wrong type."""


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ScenarioOutcome:
    tables: dict[str, tuple[tuple[str, ...], list[tuple]]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)
    series: dict[str, TimeSeries] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(Check(name, bool(passed), detail))


Runner = Callable[[dict, dict, int], ScenarioOutcome]


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    defaults: dict
    tolerances: dict
    outputs: tuple[str, ...]
    runner: Runner
    uses_seed: bool = False


def _series_rows(series: TimeSeries) -> list[tuple]:
    return [
        (t, r1, r3.real, r3.imag)
        for t, r1, r3 in zip(series.times.tolist(), series.rho1.tolist(), series.rho3.tolist())
    ]


def _toy_setup(params: dict) -> tuple[ToyParams, DensityMatrix2]:
    p = ToyParams.from_epsilon(params["epsilon"], params["lambda"])
    rho0 = pure_to_density(initial_superposition(params["weight_plus"]))
    return p, rho0


def _log_grid(t_min: float, t_max: float, n_points: int) -> np.ndarray:
    return np.concatenate(([0.0], np.logspace(math.log10(t_min), math.log10(t_max), n_points - 1)))


def scenario_fig2(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """Fast collapse (epsilon = 1e-6): reduction, long plateau at the quantum
    weight, eventual relaxation to I/2.  Log-spaced time grid."""
    p, rho0 = _toy_setup(params)
    grid = _log_grid(params["t_min"], params["t_max"], params["n_points"])
    series = closed_form_series(rho0, p, grid)
    numeric = evolve_numeric(rho0, p, grid, atol=tol["numeric_tol"])
    out = ScenarioOutcome(series={"series": series})
    out.tables["series"] = (SERIES_HEADER, _series_rows(series))
    t = series.times

    late = t >= tol["reduction_time"]
    coh = float(np.max(np.abs(series.rho3[late])))
    out.check("reduction", coh < tol["coherence_max"],
              f"max |rho3| for t >= {tol['reduction_time']:g} s is {coh:.3e}")
    window = (t >= tol["t_settle"]) & (t <= tol["plateau_end"])
    dev = float(np.max(np.abs(series.rho1[window] - params["weight_plus"])))
    out.check("plateau_value", dev <= tol["plateau_tol"],
              f"max |rho1 - {params['weight_plus']:g}| on [{tol['t_settle']:g}, {tol['plateau_end']:g}] s is {dev:.3e}")
    asym = abs(float(series.rho1[-1]) - 0.5)
    out.check("asymptote", asym <= tol["asymptote_tol"],
              f"|rho1({t[-1]:g}) - 0.5| = {asym:.3e}")
    agree = float(np.max(np.abs(numeric.rho1 - series.rho1)))
    out.check("numeric_agreement", agree <= tol["numeric_tol"],
              f"max |rho1 numeric - closed form| = {agree:.3e}")

    plateau = detect_plateau(series, tol["t_settle"], tol["plateau_delta"])
    out.summary.update(plateau_value=plateau.value, plateau_end_s=plateau.end,
                       plateau_duration_s=plateau.duration, max_coherence_after_reduction=coh)
    return out


def scenario_fig34(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """Competing dynamics (epsilon = 1e-2): plateau above 49% lasting ~7 s."""
    p, rho0 = _toy_setup(params)
    grid = np.linspace(0.0, params["t_max"], params["n_points"])
    series = closed_form_series(rho0, p, grid)
    numeric = evolve_numeric(rho0, p, grid, atol=tol["numeric_tol"])
    out = ScenarioOutcome(series={"series": series})
    out.tables["series"] = (SERIES_HEADER, _series_rows(series))
    t = series.times

    window = (t >= tol["floor_from"]) & (t <= tol["floor_to"])
    low = float(np.min(series.rho1[window]))
    out.check("above_floor", low > tol["floor"],
              f"min rho1 on [{tol['floor_from']:g}, {tol['floor_to']:g}] s is {low:.6f}")
    plateau = detect_plateau(series, tol["t_settle"], tol["plateau_delta"])
    out.check("plateau_value", tol["value_min"] <= plateau.value <= tol["value_max"],
              f"plateau value {plateau.value:.6f} (band [{tol['value_min']:g}, {tol['value_max']:g}])")
    out.check("plateau_duration", tol["duration_min"] <= plateau.duration <= tol["duration_max"],
              f"plateau duration {plateau.duration:.3f} s at delta={tol['plateau_delta']:g} "
              f"(band [{tol['duration_min']:g}, {tol['duration_max']:g}])")
    agree = float(np.max(np.abs(numeric.rho1 - series.rho1)))
    out.check("numeric_agreement", agree <= tol["numeric_tol"],
              f"max |rho1 numeric - closed form| = {agree:.3e}")
    out.summary.update(plateau_value=plateau.value, plateau_duration_s=plateau.duration,
                       excess_over_quantum=plateau.value - params["weight_plus"],
                       rho1_at_1s=closed_form_solution(rho0, p, 1.0).rho1)
    return out


def bob_branches(weight_plus: float = 0.48) -> dict[str, list[tuple[float, DensityMatrix2]]]:
    """Alice's conditional states for each of Bob's two measurement choices.

    The shared state is (|c1> (a|A> + ib|B>) + |c2> (a|A> - ib|B>)) / sqrt 2.
    Bob measures either {|c1>, |c2>} ("chi") or {(|c1> +/- |c2>)/sqrt 2}
    ("chi_pm").  Returns (probability, normalized Alice state) per outcome.
    """
    a = math.sqrt(weight_plus)
    b = math.sqrt(1.0 - weight_plus)
    plus_b = np.array([a, 1j * b])
    minus_b = np.array([a, -1j * b])
    # index = 2 * bob + alice
    joint = (np.kron([1.0, 0.0], plus_b) + np.kron([0.0, 1.0], minus_b)) / math.sqrt(2.0)
    joint = joint.reshape(2, 2)
    bases = {
        "chi": np.eye(2),
        "chi_pm": np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0),
    }
    result = {}
    for name, basis in bases.items():
        branches = []
        for bob_vec in basis:
            alice = bob_vec.conj() @ joint
            prob = float(np.vdot(alice, alice).real)
            alice = alice / math.sqrt(prob)
            branches.append((prob, pure_to_density(PureState2(alice[0], alice[1]))))
        result[name] = branches
    return result


def scenario_fig5(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """No-signaling: the diagonal mixture evolves as the average of the two
    superpositions differing in the sign of the imaginary amplitude."""
    p = ToyParams.from_epsilon(params["epsilon"], params["lambda"])
    w = params["weight_plus"]
    grid = np.linspace(0.0, params["t_max"], params["n_points"])
    rho = pure_to_density(initial_superposition(w, +1))
    rho_tilde = pure_to_density(initial_superposition(w, -1))
    rho_mix = DensityMatrix2(w, 0.0)

    def evolve(state):
        return evolve_numeric(state, p, grid, atol=tol["numeric_tol"])

    s, s_tilde, s_mix = evolve(rho), evolve(rho_tilde), evolve(rho_mix)
    out = ScenarioOutcome(series={"rho": s, "rho_tilde": s_tilde, "mix": s_mix})
    for name, series in out.series.items():
        out.tables[name] = (SERIES_HEADER, _series_rows(series))

    ident = float(np.max(np.abs(s_mix.rho1 - 0.5 * (s.rho1 + s_tilde.rho1))))
    out.check("mixture_average", ident <= tol["identity_tol"],
              f"max |rho1_mix - (rho1 + rho1_tilde)/2| = {ident:.3e}")

    # Alice's rho1(t), averaged over Bob's outcomes, for each choice of Bob
    def key(state):
        return (round(state.rho1, 15), round(state.rho3.real, 15), round(state.rho3.imag, 15))

    observed = {}
    branch_cache = {key(rho): s, key(rho_tilde): s_tilde}
    for choice, branches in bob_branches(w).items():
        total = np.zeros(grid.size)
        for prob, state in branches:
            k = key(state)
            if k not in branch_cache:
                branch_cache[k] = evolve(state)
            total += prob * branch_cache[k].rho1
        observed[choice] = total
    signal = float(np.max(np.abs(observed["chi"] - observed["chi_pm"])))
    out.check("no_signaling", signal <= tol["signaling_tol"],
              f"max |<rho1>_chi - <rho1>_chi_pm| = {signal:.3e}")
    out.summary.update(rho1_at_1s=closed_form_solution(rho, p, 1.0).rho1,
                       rho1_tilde_at_1s=closed_form_solution(rho_tilde, p, 1.0).rho1,
                       mixture_identity_error=ident, signaling_bound=signal)
    return out


def _region_weights(psi, boundary: float = 0.0) -> tuple[float, float]:
    prob = psi.probability * psi.dx
    right = float(prob[psi.x > boundary].sum())
    return right, float(prob[psi.x <= boundary].sum())


def scenario_grw_twopacket(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """Born statistics of GRW collapse on a 0.48/0.52 two-packet state."""
    psi0 = two_packet_state(params["separation"], params["sigma"],
                            (params["weight_a"], 1.0 - params["weight_a"]),
                            n=params["n_grid"], mass=params["mass"])
    horizon = 1.0
    grw = GrwParams(lambda_micro=params["expected_hits"] / horizon, alpha=params["alpha"], mass=params["mass"])
    n_runs = params["n_runs"]
    rows = []
    selected_a = 0
    uncollapsed = 0
    for i in range(n_runs):
        run_seed = trajectory_seed(seed, i)
        run = run_grw(psi0, grw, horizon, run_seed)
        wa, wb = _region_weights(run.final)
        pick = "A" if wa > wb else "B"
        selected_a += pick == "A"
        uncollapsed += min(wa, wb) > tol["collapse_residual"]
        rows.append((i, run_seed, len(run.hits), pick, wa))
    out = ScenarioOutcome()
    out.tables["runs"] = (("run", "seed", "n_hits", "selected", "weight_a_final"), rows)

    w = params["weight_a"]
    freq = selected_a / n_runs
    band = tol["z_sigma"] * math.sqrt(w * (1.0 - w) / n_runs)
    out.check("born_frequency", abs(freq - w) <= band,
              f"packet A selected in {freq:.4f} of {n_runs} runs (target {w:g} +/- {band:.4f})")
    out.check("collapsed", uncollapsed == 0,
              f"{uncollapsed} runs keep more than {tol['collapse_residual']:g} in the minority packet")

    d, alpha = params["separation"], params["alpha"]
    hit = apply_localization(psi0, d / 2.0, alpha)
    wa, wb = _region_weights(hit)
    relative = wb / wa
    bound = math.exp(-alpha * d * d / 4.0) * tol["suppression_slack"]
    out.check("single_hit_suppression", relative <= bound,
              f"relative weight after one hit at +d/2: {relative:.3e} (bound {bound:.3e}, alpha d^2 = {alpha * d * d:g})")
    out.summary.update(frequency_a=freq, band=band, alpha_d2=alpha * d * d, relative_weight=relative)
    return out


def scenario_grw_energy(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """Kinetic energy grows linearly with the number of hits."""
    span, n = params["span"], params["n_grid"]
    dx = span / n
    x = -span / 2.0 + dx * np.arange(n)
    psi0 = make_grid_state(-span / 2.0, dx, gaussian_packet(x, 0.0, params["sigma"]), params["mass"])
    grw = GrwParams(lambda_micro=params["rate"], alpha=params["alpha"], mass=params["mass"])
    energies = []
    gains = []
    for i in range(params["n_runs"]):
        run = run_grw(psi0, grw, params["horizon"], trajectory_seed(seed, i))
        energies.append([h.energy_after for h in run.hits])
        gains.extend(h.energy_after - h.energy_before for h in run.hits)
    depth = min(len(e) for e in energies)
    mean_energy = np.array([e[:depth] for e in energies]).mean(axis=0)
    k = np.arange(1, depth + 1, dtype=float)
    slope, intercept = np.polyfit(k, mean_energy, 1)
    fit = slope * k + intercept
    r2 = 1.0 - np.sum((mean_energy - fit) ** 2) / np.sum((mean_energy - mean_energy.mean()) ** 2)
    expected = expected_energy_gain_per_hit(params["alpha"], params["mass"])
    mean_gain = float(np.mean(gains))

    out = ScenarioOutcome()
    out.tables["energy"] = (("hits", "mean_energy"), list(zip(k.astype(int).tolist(), mean_energy.tolist())))
    out.check("hit_count", len(gains) >= tol["min_hits"], f"{len(gains)} hits recorded")
    out.check("gain_per_hit", abs(mean_gain - expected) <= tol["slope_rel"] * expected,
              f"mean gain per hit {mean_gain:.4f} vs alpha/4m = {expected:.4f}")
    out.check("slope", abs(slope - expected) <= tol["slope_rel"] * expected,
              f"fitted slope {slope:.4f} vs alpha/4m = {expected:.4f}")
    out.check("linearity", r2 > tol["r2_min"], f"R^2 = {r2:.5f} over {depth} hit counts")
    out.summary.update(n_hits=len(gains), mean_gain=mean_gain, slope=float(slope), r2=float(r2), expected=expected)
    return out


def scenario_pointer_estimates(params: dict, tol: dict, seed: int = 0) -> ScenarioOutcome:
    """Localization intervals and hit counts for a spreading 1 g pointer."""
    out = ScenarioOutcome()
    table = est.pointer_table(params["mass"], params["sigma0"], params["far_target"])
    header = tuple(table[0])
    out.tables["pointer"] = (header, [tuple(r[h] for h in header) for r in table])

    regimes = []
    for lam_label, lam in (("grw", est.GRW_LAMBDA), ("adler", est.ADLER_LAMBDA)):
        for n_disp in (1.0, 1e4, 1e5, 1e13, params["n_macro"]):
            rep = est.regime_report(est.PhysicalParams(lambda_micro=lam), n_disp)
            regimes.append((lam_label, n_disp, rep.reduction_time, rep.regime, rep.required_lambda))
    out.tables["regimes"] = (("rate_model", "n_displaced", "reduction_time_s", "regime", "required_lambda"), regimes)

    interval = est.localization_interval(params["n_macro"], est.GRW_LAMBDA)
    out.check("macro_interval", abs(interval - 1e-7) <= tol["rel_tol"] * 1e-7,
              f"1/(N lambda) for N={params['n_macro']:g}: {interval:.6g} s")
    by_key = {(r["rate_model"], r["target"]): r["hits"] for r in table}
    lo, hi = tol["min_order"], tol["max_order"]
    for target in ("doubling", "far"):
        hits = by_key[("grw", target)]
        order = math.floor(math.log10(hits))
        out.check(f"hits_{target}", lo <= order <= hi,
                  f"{hits:.3g} localizations while spreading ({target}); order 1e{order} within 1e{lo:g}..1e{hi:g}")
        ratio = by_key[("adler", target)] / hits
        out.check(f"adler_{target}", abs(ratio - est.ADLER_FACTOR) <= tol["rel_tol"] * est.ADLER_FACTOR,
                  f"Adler/GRW ratio {ratio:.6g}")
    out.summary.update(hits_doubling=by_key[("grw", "doubling")], hits_far=by_key[("grw", "far")],
                       adler_hits_doubling=by_key[("adler", "doubling")], adler_hits_far=by_key[("adler", "far")])
    return out


SCENARIOS: dict[str, Scenario] = {
    s.id: s
    for s in (
        Scenario(
            "fig2",
            "Two-level toy model at epsilon=1e-6: reduction within ~0.05 s, plateau at the quantum weight, relaxation to I/2",
            {"epsilon": 1e-6, "lambda": 100.0, "weight_plus": 0.48, "t_min": 1e-4, "t_max": 1e12, "n_points": 1601},
            {"reduction_time": 0.05, "coherence_max": 0.01, "t_settle": 0.1, "plateau_end": 1e6,
             "plateau_tol": 1e-3, "asymptote_tol": 1e-4, "plateau_delta": 0.0025, "numeric_tol": 1e-9},
            ("series",),
            scenario_fig2,
        ),
        Scenario(
            "fig34",
            "Two-level toy model at epsilon=1e-2: plateau above 0.49 lasting about 7 s",
            {"epsilon": 1e-2, "lambda": 100.0, "weight_plus": 0.48, "t_max": 60.0, "n_points": 1001},
            {"floor": 0.490, "floor_from": 0.2, "floor_to": 10.0, "t_settle": 0.1, "plateau_delta": 0.0025,
             "value_min": 0.4895, "value_max": 0.4915, "duration_min": 5.0, "duration_max": 9.0,
             "numeric_tol": 1e-9},
            ("series",),
            scenario_fig34,
        ),
        Scenario(
            "fig5",
            "No-signaling check: mixture equals the average of the +i and -i superpositions",
            {"epsilon": 1e-2, "lambda": 100.0, "weight_plus": 0.48, "t_max": 60.0, "n_points": 1001},
            {"identity_tol": 1e-9, "signaling_tol": 1e-9, "numeric_tol": 1e-9},
            ("rho", "rho_tilde", "mix"),
            scenario_fig5,
        ),
        Scenario(
            "grw_twopacket",
            "GRW hits on a 0.48/0.52 two-packet state: Born selection statistics and single-hit suppression",
            {"n_runs": 2000, "alpha": 1.0, "separation": 20.0, "sigma": 1.0, "mass": 1.0,
             "weight_a": 0.48, "expected_hits": 10.0, "n_grid": 2048},
            {"z_sigma": 3.0, "suppression_slack": 10.0, "collapse_residual": 1e-6},
            ("runs",),
            scenario_grw_twopacket,
            uses_seed=True,
        ),
        Scenario(
            "grw_energy",
            "GRW energy non-conservation: mean kinetic energy gain per hit vs alpha/(4m)",
            {"n_runs": 50, "alpha": 1.0, "sigma": 3.0, "mass": 1.0, "rate": 1000.0, "horizon": 0.05,
             "span": 80.0, "n_grid": 4096},
            {"slope_rel": 0.1, "r2_min": 0.99, "min_hits": 1000},
            ("energy",),
            scenario_grw_energy,
            uses_seed=True,
        ),
        Scenario(
            "pointer",
            "Order-of-magnitude estimates: localization intervals and hits during pointer spreading (GRW and Adler rates)",
            {"mass": 1.0, "sigma0": 1e-5, "far_target": 1e-1, "n_macro": 1e23},
            {"rel_tol": 1e-12, "min_order": 25, "max_order": 29},
            ("pointer", "regimes"),
            scenario_pointer_estimates,
        ),
    )
}


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise UnknownScenarioError(
            f"unknown scenario {scenario_id!r}; known: {', '.join(sorted(SCENARIOS))}"
        ) from None


def _coerce(kind: type, key: str, value):
    if isinstance(value, str):
        try:
            if kind is int:
                return int(value)
            if kind is float:
                return float(value)
        except ValueError:
            raise ParameterError(f"{key}: expected {kind.__name__}, got {value!r}") from None
        return value
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    raise ParameterError(f"{key}: expected {kind.__name__}, got {value!r}")


def coerce_values(declared: dict, overrides: dict | None, what: str = "parameter") -> dict:
    """Merge ``overrides`` into ``declared`` defaults, converting each value
    to the type of its default.  Undeclared keys raise :class:`ParameterError`."""
    resolved = dict(declared)
    for key, value in (overrides or {}).items():
        if key not in declared:
            raise ParameterError(f"unknown {what} {key!r}; declared: {', '.join(sorted(declared))}")
        resolved[key] = _coerce(type(declared[key]), key, value)
    return resolved


def _fmt(value, float_format: str = "%.17g") -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return float_format % value
    return str(value)


def _fmt_manifest(value) -> str:
    # shortest repr that round-trips, so rerun_manifest recovers exact inputs
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return _fmt(value)


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


@dataclass
class ExperimentManifest:
    scenario_id: str
    seed: int
    parameters: dict
    tolerances: dict
    version: str = __version__
    rng: str = RNG_NAME
    outputs: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    path: Path | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def exit_status(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAILED

    def to_lines(self) -> list[str]:
        lines = [
            f"scenario = {self.scenario_id}",
            f"version = {self.version}",
            f"seed = {self.seed}",
            f"rng = {self.rng}",
        ]
        lines += [f"param.{k} = {_fmt_manifest(v)}" for k, v in self.parameters.items()]
        lines += [f"tol.{k} = {_fmt_manifest(v)}" for k, v in self.tolerances.items()]
        lines += [f"output.{i} = {name}" for i, name in enumerate(self.outputs)]
        lines += [f"check.{c.name} = {'pass' if c.passed else 'fail'}: {c.detail}" for c in self.checks]
        lines += [f"summary.{k} = {_fmt_manifest(v)}" for k, v in self.summary.items()]
        lines.append(f"status = {'pass' if self.passed else 'fail'}")
        lines.append(f"runtime_s = {self.runtime_s:.3f}")
        return lines


def run_scenario(
    scenario_id: str,
    overrides: dict | None = None,
    seed: int = 0,
    out_dir: str | os.PathLike = ".",
    tolerances: dict | None = None,
) -> ExperimentManifest:
    """Run a registered scenario and persist its CSVs and manifest.

    Assertion failures do not raise: they are recorded as failed checks and
    reflected in ``manifest.exit_status``.  Unknown ids raise
    :class:`UnknownScenarioError`, bad overrides :class:`ParameterError`,
    and an unwritable ``out_dir`` the underlying ``OSError``.
    """
    scenario = get_scenario(scenario_id)
    params = coerce_values(scenario.defaults, overrides)
    tols = coerce_values(scenario.tolerances, tolerances, what="tolerance")
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    outcome = scenario.runner(params, tols, seed)
    runtime = time.perf_counter() - start

    manifest = ExperimentManifest(scenario.id, seed, params, tols)
    for name in scenario.outputs:
        header, rows = outcome.tables[name]
        filename = f"{scenario.id}_{name}.csv"
        (out / filename).write_bytes(_csv_bytes(header, rows))
        manifest.outputs.append(filename)
    manifest.checks = outcome.checks
    manifest.summary = outcome.summary
    manifest.runtime_s = runtime
    manifest.path = out / f"{scenario.id}_manifest.txt"
    manifest.path.write_text("\n".join(manifest.to_lines()) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path: str | os.PathLike) -> dict[str, str]:
    """Parse a manifest into an ordered ``key -> raw value`` mapping."""
    entries = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ValueError(f"malformed manifest line: {line!r}")
        entries[key] = value
    return entries


def rerun_manifest(path: str | os.PathLike, out_dir: str | os.PathLike) -> ExperimentManifest:
    """Re-run the scenario recorded in a manifest with identical inputs."""
    entries = read_manifest(path)
    params = {k[len("param."):]: v for k, v in entries.items() if k.startswith("param.")}
    tols = {k[len("tol."):]: v for k, v in entries.items() if k.startswith("tol.")}
    return run_scenario(entries["scenario"], params, int(entries["seed"]), out_dir, tols)
