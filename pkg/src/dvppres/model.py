"""Input data types, unit conventions and validation.

Unit convention: powers are per-unit on one consistent base (default base
factor 1.0, so raw numbers pass through), time in seconds.  Frequency
deviations are converted to Hz only where they meet the security limits,
through ``GridParameters.f_base`` (Hz per unit of model frequency; 1.0 by
default, so model output is already Hz).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: instants closer than this (seconds) count as the same occurrence time
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class GridParameters:
    """Aggregate grid constants plus the DVPP's virtual parameters."""

    h0: float           # SG inertia [power*s/Hz]
    d0: float           # load damping [power/Hz]
    r: float            # SG droop [power/Hz]
    t_sg: float         # governor time constant [s]
    h_dvpp: float = 0.0  # aggregate virtual inertia
    d_dvpp: float = 0.0  # aggregate virtual damping
    f_base: float = 1.0  # Hz per unit of model frequency deviation

    @property
    def h_total(self) -> float:
        return self.h0 + self.h_dvpp

    @property
    def d_total(self) -> float:
        return self.d0 + self.d_dvpp

    def with_dvpp(self, h_dvpp: float, d_dvpp: float) -> "GridParameters":
        return GridParameters(self.h0, self.d0, self.r, self.t_sg,
                              h_dvpp, d_dvpp, self.f_base)


@dataclass(frozen=True)
class SecurityLimits:
    """Frequency-security thresholds, all strictly positive."""

    rocof_lim: float   # [Hz/s]
    nadir_lim: float   # [Hz]
    ss_lim: float      # [Hz]


@dataclass(frozen=True)
class DisturbanceForecast:
    """Sequential-disturbance forecast over n windows of length tau.

    ``candidate_offsets`` are the admissible occurrence offsets inside each
    window (sorted, within [0, tau]); the default grid {0, tau/2, tau}
    includes both window edges so coincidence across adjacent windows is
    representable.
    """

    n: int
    tau: float
    magnitudes: tuple = ()      # signed Delta P_i [power]
    probabilities: tuple = ()   # occurrence probabilities in [0, 1]
    candidate_offsets: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", tuple(float(m) for m in self.magnitudes))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if self.candidate_offsets is None:
            object.__setattr__(self, "candidate_offsets",
                               (0.0, 0.5 * self.tau, self.tau))
        else:
            object.__setattr__(self, "candidate_offsets",
                               tuple(float(o) for o in self.candidate_offsets))

    @property
    def horizon(self) -> float:
        return self.n * self.tau


@dataclass(frozen=True)
class DisturbanceScenario:
    """One concrete timing assignment: absolute occurrence instants."""

    occurrence_times: tuple   # t_i = (i-1)*tau + dt_i, one per window [s]
    active_flags: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "occurrence_times",
                           tuple(float(t) for t in self.occurrence_times))
        if self.active_flags is None:
            object.__setattr__(self, "active_flags",
                               (True,) * len(self.occurrence_times))
        else:
            object.__setattr__(self, "active_flags", tuple(bool(a) for a in self.active_flags))

    @property
    def n(self) -> int:
        return len(self.occurrence_times)

    @staticmethod
    def from_offsets(offsets, tau: float, active_flags=None) -> "DisturbanceScenario":
        times = tuple(i * tau + float(o) for i, o in enumerate(offsets))
        return DisturbanceScenario(times, active_flags)


@dataclass(frozen=True)
class IbrSpec:
    """One inverter-based resource inside the DVPP."""

    a: float                    # inertia provision cost [$ per inertia unit]
    b: float                    # damping provision cost [$ per damping unit]
    p_av: float                 # available injection magnitude [power]
    h_bounds: tuple = (0.0, float("inf"))
    d_bounds: tuple = (0.0, float("inf"))

    def __post_init__(self):
        object.__setattr__(self, "h_bounds", tuple(float(x) for x in self.h_bounds))
        object.__setattr__(self, "d_bounds", tuple(float(x) for x in self.d_bounds))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, message: str):
        self.violations.append((path, message))

    def __str__(self):
        if self.ok:
            return "validation: pass"
        lines = ["validation: %d violation(s)" % len(self.violations)]
        lines += ["  %s: %s" % v for v in self.violations]
        return "\n".join(lines)


def _require(report, cond, path, message):
    if not cond:
        report.add(path, message)


def validate_grid(grid: GridParameters, report=None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    _require(report, grid.h0 > 0, "grid.h0", "must be > 0")
    _require(report, grid.d0 >= 0, "grid.d0", "must be >= 0")
    _require(report, grid.r >= 0, "grid.r", "must be >= 0")
    _require(report, grid.t_sg > 0, "grid.t_sg", "must be > 0")
    _require(report, grid.h_dvpp >= 0, "grid.h_dvpp", "must be >= 0")
    _require(report, grid.d_dvpp >= 0, "grid.d_dvpp", "must be >= 0")
    _require(report, grid.f_base > 0, "grid.f_base", "must be > 0")
    return report


def validate_limits(limits: SecurityLimits, report=None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    _require(report, limits.rocof_lim > 0, "limits.rocof_lim", "must be > 0")
    _require(report, limits.nadir_lim > 0, "limits.nadir_lim", "must be > 0")
    _require(report, limits.ss_lim > 0, "limits.ss_lim", "must be > 0")
    return report


def validate_forecast(forecast: DisturbanceForecast, report=None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    _require(report, forecast.n >= 0, "forecast.n", "must be >= 0")
    _require(report, forecast.tau > 0, "forecast.tau", "must be > 0")
    _require(report, len(forecast.magnitudes) == forecast.n,
             "forecast.magnitudes", "length must equal n")
    _require(report, len(forecast.probabilities) == forecast.n,
             "forecast.probabilities", "length must equal n")
    for i, p in enumerate(forecast.probabilities, start=1):
        _require(report, 0.0 <= p <= 1.0,
                 "forecast.probabilities[%d]" % i, "must lie in [0, 1]")
    offs = forecast.candidate_offsets
    _require(report, len(offs) > 0, "forecast.candidate_offsets", "must be non-empty")
    for i, o in enumerate(offs, start=1):
        _require(report, 0.0 <= o <= forecast.tau,
                 "forecast.candidate_offsets[%d]" % i, "must lie in [0, tau]")
    _require(report, all(b > a for a, b in zip(offs, offs[1:])),
             "forecast.candidate_offsets", "must be strictly increasing")
    return report


def validate_scenario(scenario: DisturbanceScenario, forecast: DisturbanceForecast,
                      report=None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    _require(report, scenario.n == forecast.n, "scenario.occurrence_times",
             "length must equal forecast.n")
    times = scenario.occurrence_times
    _require(report, all(b >= a for a, b in zip(times, times[1:])),
             "scenario.occurrence_times", "must be non-decreasing")
    for i, t in enumerate(times, start=1):
        lo, hi = (i - 1) * forecast.tau, i * forecast.tau
        _require(report, lo - COINCIDENCE_TOL <= t <= hi + COINCIDENCE_TOL,
                 "scenario.occurrence_times[%d]" % i,
                 "must lie in window [%g, %g]" % (lo, hi))
    return report


def validate_ibrs(ibrs, report=None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    for i, ibr in enumerate(ibrs, start=1):
        _require(report, ibr.p_av > 0, "ibrs[%d].p_av" % i, "must be > 0")
        _require(report, ibr.a >= 0, "ibrs[%d].a" % i, "must be >= 0")
        _require(report, ibr.b >= 0, "ibrs[%d].b" % i, "must be >= 0")
        _require(report, ibr.h_bounds[0] <= ibr.h_bounds[1],
                 "ibrs[%d].h_bounds" % i, "min must not exceed max")
        _require(report, ibr.d_bounds[0] <= ibr.d_bounds[1],
                 "ibrs[%d].d_bounds" % i, "min must not exceed max")
    return report


def validate_inputs(grid: GridParameters, forecast: DisturbanceForecast,
                    limits: SecurityLimits, ibrs=()) -> ValidationReport:
    """Check every structural invariant; never raises, never mutates."""
    report = ValidationReport()
    validate_grid(grid, report)
    validate_forecast(forecast, report)
    validate_limits(limits, report)
    validate_ibrs(ibrs, report)
    return report


def scenario_groups(scenario: DisturbanceScenario, forecast: DisturbanceForecast,
                    weighting: str = "probabilistic"):
    """Normalize a scenario into merged step groups [(time, magnitude), ...].

    Active disturbances are sorted by occurrence instant; instants equal
    within COINCIDENCE_TOL merge into one group whose magnitude is the sum
    of the members (simultaneous steps act as one combined step).

    weighting: "probabilistic" scales each magnitude by its forecast
    probability; "realized" takes active disturbances at full magnitude
    (the worst-case realization).
    """
    if weighting not in ("probabilistic", "realized"):
        raise ValueError("unknown weighting %r" % weighting)
    if scenario.n != forecast.n:
        raise ScenarioMismatch(
            "scenario has %d periods, forecast has %d" % (scenario.n, forecast.n))
    pairs = []
    for i in range(forecast.n):
        if not scenario.active_flags[i]:
            continue
        k = forecast.magnitudes[i]
        if weighting == "probabilistic":
            k *= forecast.probabilities[i]
        pairs.append((scenario.occurrence_times[i], k))
    pairs.sort(key=lambda p: p[0])
    groups = []
    for t, k in pairs:
        if groups and abs(t - groups[-1][0]) <= COINCIDENCE_TOL:
            groups[-1][1] += k
        else:
            groups.append([t, k])
    return [(t, k) for t, k in groups]


class ScenarioMismatch(ValueError):
    """Scenario and forecast disagree on the number of periods."""


class CombinatorialOverflow(RuntimeError):
    """Scenario enumeration would exceed the configured cap."""


class OverdampedRegime(ValueError):
    """zeta >= 1: the underdamped closed form does not apply at this point."""


class EmptyRegion(RuntimeError):
    """No feasible cell in the scanned region."""


class EmptyColumn(RuntimeError):
    """No feasible cell in the requested damping column."""


class StepTooLarge(ValueError):
    """Integrator step exceeds the stability/accuracy precondition."""


class Infeasible(RuntimeError):
    """The allocation program has no feasible point."""

    def __init__(self, message, cause_hint=None):
        super().__init__(message)
        self.cause_hint = cause_hint


def as_float_array(values) -> np.ndarray:
    return np.asarray(values, dtype=float)
