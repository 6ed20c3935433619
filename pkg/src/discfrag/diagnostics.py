"""Long-time behaviour: decay envelopes and distance to the monomeric state.

All bounds are checked, never claimed tight.  Measured quantities come from
the solver; envelopes from closed-form expressions in the infimum rate and
the certified kappa of the weight.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import PreconditionError, check_grid, check_index, check_vector, check_weight
from .coefficients import check_mass_rule
from .operators import first_moment, opnorm_weighted, weighted_norm
from .solver import SolverConfig, evolution_matrices, integrate

__all__ = [
    "RateEstimate",
    "DecayReport",
    "inf_rate",
    "decay_envelope",
    "check_opnorm_decay",
    "decomp_bound_check",
    "monomer_distance",
    "check_monomer_decay",
    "fit_decay_rate",
    "eventual_constant",
]

REL_SLACK = 1e-8


@dataclass(frozen=True)
class RateEstimate:
    """Infimum of ``a_n(tau)`` over ``n >= n_min`` and ``tau`` in ``[s, T]``.

    ``value`` is the analytic infimum when the family declares one,
    otherwise the grid minimum (then ``on_grid_only`` is set).  ``grid_min``
    is always the sampled minimum.
    """

    value: float
    grid_min: float
    on_grid_only: bool
    n_sufficient: bool

    def __float__(self):
        return float(self.value)


def inf_rate(family, s, T, n_min, n_max, time_grid):
    n_min = check_index(n_min, 1, "n_min")
    if n_min not in (1, 2):
        raise ValueError("n_min must be 1 or 2")
    n_max = check_index(n_max, n_min, "n_max")
    grid = check_grid(time_grid, family.horizon)
    if grid[0] < s or grid[-1] > T:
        raise ValueError("time grid must lie inside [s, T]")
    grid_min = min(float(np.min(family.rates(t, n_max)[n_min - 1 :])) for t in grid)
    if family.rate_infimum is not None:
        return RateEstimate(float(family.rate_infimum(n_min, s, T)), grid_min, False, True)
    return RateEstimate(grid_min, grid_min, True, family.monotone_rates)


def decay_envelope(rate, kappa, dt):
    """``exp(-rate * (1 - kappa) * dt)``."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if not 0 <= kappa < 1:
        raise ValueError("kappa must lie in [0, 1)")
    return math.exp(-float(rate) * (1.0 - kappa) * dt)


@dataclass(frozen=True, eq=False)
class DecayReport:
    times: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    rate_used: float
    kappa_used: float
    kind: str
    applicable: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def margin(self):
        """Smallest ``envelope - measured`` over the grid."""
        if not self.applicable:
            return math.nan
        return float(np.min(self.envelope - self.measured))

    @property
    def passed(self):
        if not self.applicable:
            return None
        return bool(np.all(self.measured <= self.envelope * (1 + REL_SLACK)))

    def to_json_dict(self):
        return {
            "kind": self.kind,
            "applicable": self.applicable,
            "passed": self.passed,
            "margin": None if not self.applicable else self.margin,
            "rate_used": self.rate_used,
            "kappa_used": self.kappa_used,
            "times": [float(t) for t in self.times],
            "measured": [float(x) for x in self.measured],
            "envelope": [float(x) for x in self.envelope],
            **self.extra,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "measured", "envelope"])
        for row in zip(self.times, self.measured, self.envelope):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _kappa(weight):
    kappa = getattr(weight, "kappa_hat", None)
    if kappa is None:
        raise PreconditionError("weight is not certified")
    return float(kappa)


def check_opnorm_decay(family, weight, s, T, N, cfg=None, time_grid=None):
    """Compare ``||U(t, s)||_w`` with ``exp(-a_inf (1 - kappa)(t - s))``.

    ``a_inf`` is the infimum of all rates (monomers included) over
    ``[s, T]``.  The report also records the contraction check
    ``||U(t, s)|| <= 1``.
    """
    kappa = _kappa(weight)
    w = check_weight(weight, N)
    grid = np.linspace(s, T, 20) if time_grid is None else check_grid(time_grid, family.horizon)
    rate = inf_rate(family, s, T, 1, N, grid)
    mats = evolution_matrices(family, s, grid, N, cfg)
    measured = np.array([opnorm_weighted(U.entries, w) for U in mats])
    envelope = np.array([decay_envelope(rate.value, kappa, t - s) for t in grid])
    contraction = bool(np.all(measured <= 1 + REL_SLACK))
    return DecayReport(
        grid, measured, envelope, rate.value, kappa, "opnorm",
        extra={"contraction": contraction, "rate_on_grid_only": rate.on_grid_only},
    )


def decomp_bound_check(g, w):
    """Return ``(||g||_w, (w_1 + 1) ||P g||)`` for a zero-mass vector ``g``.

    ``P`` drops the monomer component.
    """
    g = check_vector(g, "g")
    w = check_weight(w, g.size)
    n = np.arange(1, g.size + 1)
    if abs(float(n @ g)) > 1e-10 * float(n @ np.abs(g)):
        raise PreconditionError("g must have zero first moment")
    lhs = float(np.sum(w * np.abs(g)))
    rhs = (w[0] + 1.0) * float(np.sum(w[1:] * np.abs(g[1:])))
    return lhs, rhs


def monomer_distance(u, m0, w):
    """``||u - m0 e_1||_w``."""
    u = check_vector(u)
    w = check_weight(w, u.size)
    return float(w[0] * abs(u[0] - m0) + np.sum(w[1:] * np.abs(u[1:])))


def fit_decay_rate(times, distance, prefactor):
    """Least-squares exponential rate over the last half of the samples.

    Points below ``1e3 * eps * prefactor`` are dropped as numerical noise;
    returns ``nan`` if fewer than two remain.
    """
    times = np.asarray(times, dtype=float)
    distance = np.asarray(distance, dtype=float)
    half = slice(times.size // 2, None)
    t, d = times[half], distance[half]
    keep = d > 1e3 * np.finfo(float).eps * prefactor
    if keep.sum() < 2:
        return math.nan
    slope = np.polyfit(t[keep], np.log(d[keep]), 1)[0]
    return float(-slope)


def eventual_constant(u0_norm, w1, c, switch_time):
    """Constant ``M = (w_1 + 1) ||u0||_w e^{c s}`` of the eventual-rate bound."""
    return (w1 + 1.0) * u0_norm * math.exp(c * switch_time)


def check_monomer_decay(family, weight, u0, s, time_grid, cfg=None, rate=None):
    """Distance to ``M_1(u0) e_1`` against ``(w_1+1)||u0||_w exp(-a_hat (1-kappa)(t-s))``.

    ``a_hat`` is the infimum of rates of clusters of size two or more over
    the grid span; pass ``rate`` to override it (e.g. with a liminf for
    half-line runs).  Families that are not mass conserving on the grid get
    an inapplicable report.
    """
    kappa = _kappa(weight)
    u0 = check_vector(u0, "u0")
    N = u0.size
    w = check_weight(weight, N)
    grid = check_grid(time_grid, family.horizon)
    if grid[0] != s:
        grid = np.concatenate(([s], grid[grid > s]))
    T = float(grid[-1])
    mass_rule = check_mass_rule(family, max(N, 2), grid)
    a_hat = inf_rate(family, s, T, 2, max(N, 2), grid)
    rate_used = a_hat.value if rate is None else float(rate)
    prefactor = (w[0] + 1.0) * weighted_norm(u0, w)
    envelope = np.array([prefactor * decay_envelope(rate_used, kappa, t - s) for t in grid])
    if not mass_rule.conserving:
        return DecayReport(
            grid, np.full(grid.size, np.nan), envelope, rate_used, kappa, "monomer",
            applicable=False, extra={"mass_rule": mass_rule.mode},
        )
    traj = integrate(family, u0, s, T, cfg, t_eval=grid)
    m0 = first_moment(u0)
    measured = np.array([monomer_distance(st.u, m0, w) for st in traj.states])
    fitted = fit_decay_rate(grid, measured, prefactor)
    guaranteed_rate = rate_used * (1.0 - kappa)
    return DecayReport(
        grid, measured, envelope, rate_used, kappa, "monomer",
        extra={
            "mass_rule": mass_rule.mode,
            "fitted_rate": fitted,
            "guaranteed_rate": guaranteed_rate,
            "prefactor": prefactor,
            "bound_constant": eventual_constant(weighted_norm(u0, w), w[0], guaranteed_rate, s),
            "min_component": float(traj.values.min()),
        },
    )
