"""Trajectories and evolution-family matrices of the truncated system.

Three independent routes produce ``U(t, s)``:

``adaptive_rk``
    Dormand-Prince 5(4) on the matrix ODE ``X' = G(t) X``, ``X(s) = I``.
``voc_recursion``
    Row-by-row variation of constants with the diagonal decay applied
    exactly (see :mod:`discfrag._voc`).
``product_oracle``
    Ordered product of matrix exponentials of frozen generators.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _rk, _voc
from ._rk import SolverError, StepSizeUnderflow
from ._validation import check_index, check_vector, check_weight
from ._voc import QuadratureError
from .operators import StateVector, TriangularMatrix, generator_matrix, opnorm_weighted

__all__ = [
    "SolverConfig",
    "Trajectory",
    "SolverError",
    "StepSizeUnderflow",
    "QuadratureError",
    "integrate",
    "evolution_matrix",
    "evolution_matrices",
    "column_voc",
    "product_oracle",
    "compose_check",
]

METHODS = ("adaptive_rk", "voc_recursion", "product_oracle")


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_step: float = 0.25
    min_step: float = 1e-12
    quadrature_points: int = 8
    method: str = "adaptive_rk"
    oracle_steps: int = 10_000
    oracle_rule: str = "midpoint"
    max_refinements: int = 8
    workers: int = 1

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise ValueError("need 0 < min_step <= max_step")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.oracle_rule not in ("midpoint", "left"):
            raise ValueError("oracle_rule must be 'midpoint' or 'left'")
        if self.quadrature_points < 2 or self.oracle_steps < 1 or self.workers < 1:
            raise ValueError("quadrature_points >= 2, oracle_steps >= 1, workers >= 1 required")


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: list
    stats: dict = field(default_factory=dict)
    method: str = "adaptive_rk"

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def values(self):
        return np.array([s.u for s in self.states])

    def masses(self):
        return np.array([s.first_moment() for s in self.states])

    def weighted_norms(self, w):
        return np.array([s.weighted_norm(w) for s in self.states])

    def to_csv(self, w):
        """Header ``t,u1..uN,mass,wnorm``; floats in shortest round-trip form."""
        N = self.states[0].N
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t"] + [f"u{n}" for n in range(1, N + 1)] + ["mass", "wnorm"])
        for st in self.states:
            row = [st.t, *st.u, st.first_moment(), st.weighted_norm(w)]
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def stats_json(self):
        return json.dumps({"method": self.method, **self.stats}, indent=2, sort_keys=True)


def _check_span(family, s, t):
    s, t = family.check_time(s), family.check_time(t)
    if t < s:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    return s, t


def _output_times(family, s, t_end, t_eval):
    if t_eval is None:
        return [s, t_end]
    ts = sorted({float(x) for x in t_eval} | {s})
    if ts[0] < s or ts[-1] > t_end:
        raise ValueError("output times must lie in [s, t_end]")
    return ts


def _rhs(family, N, shift):
    if family.time_constant:
        G = generator_matrix(family, 0.0, N, shift)
        return lambda t, y: G @ y
    if family.daughters_constant:
        # G(t) y = D (a * y) - (a + shift) * y with D fixed
        D = np.triu(family.daughters(0.0, N), k=1)

        def rhs(t, y):
            a = family.rates(t, N)[:, None] if y.ndim == 2 else family.rates(t, N)
            return D @ (a * y) - (a + shift) * y

        return rhs
    return lambda t, y: generator_matrix(family, t, N, shift) @ y


def _propagate(family, s, times, X0, cfg, shift=0.0):
    """States at ``times`` (first entry may equal ``s``) for initial ``X0``."""
    cfg = cfg or SolverConfig()
    later = [t for t in times if t > s]
    head = [np.array(X0, dtype=float) for t in times if t <= s]
    if not later:
        return head, {}
    N = X0.shape[0]
    if cfg.method == "adaptive_rk":
        out, stats = _rk.integrate(
            _rhs(family, N, shift), s, X0, later, cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.min_step
        )
    elif cfg.method == "voc_recursion":
        out, stats = _voc.propagate(
            family, s, later, X0, shift, cfg.quadrature_points, cfg.max_step,
            cfg.rel_tol, cfg.abs_tol, cfg.max_refinements,
        )
    else:
        out, prev = [], s
        X = np.array(X0, dtype=float)
        for t in later:
            steps = max(1, math.ceil(cfg.oracle_steps * (t - prev) / (later[-1] - s)))
            X = _product(family, prev, t, N, steps, cfg.oracle_rule, cfg.workers, shift) @ X
            out.append(X)
            prev = t
        stats = {"steps": cfg.oracle_steps, "rule": cfg.oracle_rule}
    return head + out, stats


def integrate(family, u0, s, t_end, cfg=None, t_eval=None):
    """Solve the truncated system from ``u(s) = u0`` and sample it at ``t_eval``.

    The first state of the result is ``u0`` itself at time ``s``.
    """
    cfg = cfg or SolverConfig()
    s, t_end = _check_span(family, s, t_end)
    if not t_end > s:
        raise ValueError("need s < t_end")
    u0 = check_vector(u0)
    times = _output_times(family, s, t_end, t_eval)
    out, stats = _propagate(family, s, times, u0[:, None], cfg)
    states = [StateVector(s, u0)] + [StateVector(t, x[:, 0]) for t, x in zip(times[1:], out[1:])]
    return Trajectory(states, stats, cfg.method)


def evolution_matrices(family, s, times, N, cfg=None, rescaled=False):
    """``U(t, s)`` (or ``V``) for every ``t`` in ``times``; ``U(s, s) = I`` exactly."""
    cfg = cfg or SolverConfig()
    N = check_index(N, 1, "N")
    s = family.check_time(s)
    times = [_check_span(family, s, t)[1] for t in times]
    order = sorted(set(times))
    shift = 1.0 if rescaled else 0.0
    out, _ = _propagate(family, s, order, np.eye(N), cfg, shift)
    by_time = dict(zip(order, out))
    mats = []
    for t in times:
        X = np.eye(N) if t == s else by_time[t]
        mats.append(TriangularMatrix(X, s, t, rescaled))
    return mats


def evolution_matrix(family, s, t, N, cfg=None, rescaled=False):
    """Matrix of ``U(t, s)``: column ``n`` is the solution started from ``e_n``."""
    return evolution_matrices(family, s, [t], N, cfg, rescaled)[0]


def column_voc(family, n, s, t, cfg=None, N=None):
    """Column ``n`` of the rescaled matrix ``V(t, s)`` by the recursion.

    The result has length ``N`` (default ``n``); entries below row ``n`` are
    exactly zero since only rows ``1..n`` are ever touched.
    """
    cfg = cfg or SolverConfig()
    n = check_index(n, 1, "n")
    N = n if N is None else check_index(N, n, "N")
    s, t = _check_span(family, s, t)
    col = np.zeros(N)
    if t == s:
        col[n - 1] = 1.0
        return col
    e = np.zeros((n, 1))
    e[n - 1, 0] = 1.0
    (X,), _ = _voc.propagate(
        family, s, [t], e, 1.0, cfg.quadrature_points, cfg.max_step,
        cfg.rel_tol, cfg.abs_tol, cfg.max_refinements,
    )
    col[:n] = X[:, 0]
    return col


def _product(family, s, t, N, steps, rule, workers, shift=0.0):
    dt = (t - s) / steps
    if family.time_constant:
        E = scipy.linalg.expm(dt * generator_matrix(family, s, N, shift))
        return np.linalg.matrix_power(E, steps)
    offset = 0.5 if rule == "midpoint" else 0.0
    # the last node of a long product can overshoot t by rounding
    nodes = [min(s + (k + offset) * dt, t) for k in range(steps)]

    def factor(tk):
        return scipy.linalg.expm(dt * generator_matrix(family, tk, N, shift))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            factors = list(pool.map(factor, nodes))
    else:
        factors = map(factor, nodes)
    P = np.eye(N)
    for E in factors:
        P = E @ P
    return P


def product_oracle(family, s, t, N, steps, rule="midpoint", workers=1, rescaled=False):
    """Ordered product ``prod_k exp(dt * G(t_k))`` over ``steps`` equal sub-intervals.

    ``rule='midpoint'`` freezes the generator at sub-interval midpoints
    (second order in ``dt``); ``rule='left'`` at left endpoints (first order).
    Exact, up to ``expm`` accuracy, for time-constant coefficients.
    """
    N = check_index(N, 1, "N")
    steps = check_index(steps, 1, "steps")
    s, t = _check_span(family, s, t)
    if t == s:
        return TriangularMatrix(np.eye(N), s, t, rescaled)
    P = _product(family, s, t, N, steps, rule, workers, 1.0 if rescaled else 0.0)
    return TriangularMatrix(P, s, t, rescaled)


def compose_check(family, s, r, t, N, cfg=None, w=None):
    """Weighted operator-norm defect ``||U(t,r) U(r,s) - U(t,s)||``."""
    if not s <= r <= t:
        raise ValueError("need s <= r <= t")
    w = np.arange(1, N + 1, dtype=float) if w is None else check_weight(w, N)
    U_rs, U_ts = evolution_matrices(family, s, [r, t], N, cfg)
    U_tr = evolution_matrix(family, r, t, N, cfg)
    return opnorm_weighted(U_tr.entries @ U_rs.entries - U_ts.entries, w)
