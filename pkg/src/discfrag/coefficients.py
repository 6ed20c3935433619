"""Time-dependent fragmentation coefficients and assumption checkers.

A family bundles the loss rates ``a(n, t)`` and daughter distributions
``b(n, j, t)`` (expected number of ``n``-mers produced when a ``j``-mer
breaks at time ``t``).  Built-in families also carry vectorised evaluators
so that truncated generators can be assembled without Python loops.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import check_grid, check_index, check_time, check_weight, frozen

__all__ = [
    "CoefficientFamily",
    "Generator",
    "SineModulation",
    "AffineRates",
    "power_law_daughters",
    "becker_doring_daughters",
    "power_law_family",
    "becker_doring_family",
    "eval_lambda",
    "NonnegativityReport",
    "check_nonnegativity",
    "MassRuleReport",
    "check_mass_rule",
    "HolderCertificate",
    "estimate_holder",
]


# ---------------------------------------------------------------------------
# building blocks for affine rates  a_n(t) = c_n * phi(t) + d_n


@dataclass(frozen=True)
class Generator:
    """Sequence ``n -> k``, ``k*n`` or ``k*n**q`` with ``k >= 0``."""

    kind: str = "const"
    k: float = 0.0
    q: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "linear", "power"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValueError("generator coefficient k must be finite and >= 0")
        if not math.isfinite(self.q):
            raise ValueError("generator exponent q must be finite")

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        if self.kind == "const":
            return np.full_like(n, self.k)
        if self.kind == "linear":
            return self.k * n
        return self.k * n**self.q

    def infimum(self, n_min=1):
        """Exact infimum over all indices ``n >= n_min``."""
        if self.kind == "const":
            return self.k
        if self.kind == "power" and self.q < 0:
            return 0.0
        return float(self(n_min))

    def to_dict(self):
        if self.kind == "const":
            return {"const": self.k}
        if self.kind == "linear":
            return {"linear": self.k}
        return {"power": [self.k, self.q]}

    @classmethod
    def from_dict(cls, spec):
        ((kind, value),) = spec.items()
        if kind == "power":
            k, q = value
            return cls("power", float(k), float(q))
        return cls(kind, float(value))


@dataclass(frozen=True)
class SineModulation:
    """``phi(t) = gamma + delta*sin(omega*t)`` with ``gamma > delta >= 0``.

    ``lower_bound`` and ``lipschitz`` are the constants K1 and K2 of the
    affine-rate Hölder estimate (with exponent 1).
    """

    gamma: float = 1.0
    delta: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.gamma > self.delta >= 0):
            raise ValueError("need gamma > delta >= 0")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValueError("omega must be finite and >= 0")

    def __call__(self, t):
        return self.gamma + self.delta * np.sin(self.omega * np.asarray(t, dtype=float))

    @property
    def lower_bound(self):
        return self.gamma - self.delta

    @property
    def lipschitz(self):
        return self.delta * self.omega

    @property
    def constant(self):
        return self.delta == 0 or self.omega == 0

    def minimum(self, s, T):
        """Exact minimum of phi over ``[s, T]`` (``T`` may be infinite)."""
        if self.constant:
            return float(self(0.0))
        if not math.isfinite(T) or self.omega * (T - s) >= 2 * math.pi:
            return self.lower_bound
        # troughs sit at omega*t = 3*pi/2 + 2*pi*k
        k = math.ceil((self.omega * s - 1.5 * math.pi) / (2 * math.pi))
        trough = (1.5 * math.pi + 2 * math.pi * k) / self.omega
        if trough <= T:
            return self.lower_bound
        return float(min(self(s), self(T)))

    def to_dict(self):
        return {"gamma": self.gamma, "delta": self.delta, "omega": self.omega}


@dataclass(frozen=True)
class AffineRates:
    """Rates ``a_n(t) = c_n*phi(t) + d_n``; ``monomer_inert`` forces ``a_1 = 0``."""

    c: Generator = Generator("linear", 1.0)
    d: Generator = Generator("const", 0.0)
    phi: SineModulation = SineModulation()
    monomer_inert: bool = True

    def vector(self, t, N):
        n = np.arange(1, N + 1, dtype=float)
        a = self.c(n) * self.phi(t) + self.d(n)
        if self.monomer_inert:
            a[0] = 0.0
        return a

    def scalar(self, n, t):
        if self.monomer_inert and n == 1:
            return 0.0
        return float(self.c(n) * self.phi(t) + self.d(n))

    def infimum(self, n_min, s, T):
        """Lower bound on ``inf_{tau in [s,T]} inf_{n >= n_min} a_n(tau)``.

        Exact whenever ``c`` and ``d`` attain their infima at the same index,
        which holds for every monotone generator pair.
        """
        if self.monomer_inert and n_min <= 1:
            return 0.0
        n0 = max(n_min, 2) if self.monomer_inert else n_min
        return self.c.infimum(n0) * self.phi.minimum(s, T) + self.d.infimum(n0)

    @property
    def time_constant(self):
        return self.phi.constant or self.c.k == 0

    def to_dict(self):
        return {
            "c": self.c.to_dict(),
            "d": self.d.to_dict(),
            "phi": self.phi.to_dict(),
            "monomer_inert": self.monomer_inert,
        }


# ---------------------------------------------------------------------------
# daughter distributions (constant in time)


@functools.lru_cache(maxsize=64)
def power_law_daughters(nu, N):
    """Matrix ``D[n-1, j-1] = n**nu * zeta_j`` for ``n < j``, zero elsewhere.

    ``zeta_j = j / sum_{l<j} l**(nu+1)`` is evaluated by direct summation,
    which makes every column carry exactly mass ``j`` up to rounding.
    """
    if nu < -1:
        raise ValueError("power-law daughters need nu >= -1")
    n = np.arange(1, N + 1, dtype=float)
    partial = np.concatenate(([np.nan], np.cumsum(n ** (nu + 1))[:-1]))
    with np.errstate(invalid="ignore"):
        zeta = n / partial
    zeta[0] = 0.0
    D = np.triu(np.outer(n**nu, zeta), k=1)
    return frozen(D)


@functools.lru_cache(maxsize=64)
def becker_doring_daughters(N):
    """A ``j``-mer breaks into a monomer and a ``(j-1)``-mer."""
    D = np.zeros((N, N))
    for j in range(2, N + 1):
        D[0, j - 1] += 1.0
        D[j - 2, j - 1] += 1.0
    return frozen(D)


# ---------------------------------------------------------------------------


def _loop_rates(a):
    def rates(t, N):
        return np.array([a(n, t) for n in range(1, N + 1)], dtype=float)

    return rates


def _loop_daughters(b):
    def daughters(t, N):
        D = np.empty((N, N))
        for n, j in itertools.product(range(1, N + 1), repeat=2):
            D[n - 1, j - 1] = b(n, j, t)
        return D

    return daughters


@dataclass(frozen=True, eq=False)
class CoefficientFamily:
    """Fragmentation coefficients ``a(n, t)`` and ``b(n, j, t)``.

    Parameters
    ----------
    a, b : callable
        Scalar evaluators; indices start at 1.
    horizon : float
        Final time T (``math.inf`` for the half-line).
    kind : str
        One of ``power_law``, ``becker_doring``, ``custom``.
    params : dict
        Construction parameters, kept for reports.
    rate_vector, daughter_matrix : callable, optional
        Vectorised ``(t, N) -> (a_1..a_N)`` and ``(t, N) -> D`` with
        ``D[n-1, j-1] = b(n, j, t)``.  Derived from the scalar callables if
        omitted.
    rates_constant, daughters_constant : bool
        Declares time independence; enables caching.
    rate_infimum : callable, optional
        ``(n_min, s, T) -> float`` analytic lower bound on the rates over
        ``n >= n_min`` and ``[s, T]``.
    monotone_rates : bool
        Declares ``a_n(t)`` non-decreasing in ``n`` for every ``t``.
    """

    a: Callable[[int, float], float]
    b: Callable[[int, int, float], float]
    horizon: float = math.inf
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    rate_vector: Optional[Callable] = None
    daughter_matrix: Optional[Callable] = None
    rates_constant: bool = False
    daughters_constant: bool = False
    rate_infimum: Optional[Callable] = None
    monotone_rates: bool = False

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.rate_vector is None:
            object.__setattr__(self, "rate_vector", _loop_rates(self.a))
        if self.daughter_matrix is None:
            object.__setattr__(self, "daughter_matrix", _loop_daughters(self.b))

    # evaluation -----------------------------------------------------------

    def check_time(self, t):
        return check_time(t, self.horizon)

    def rates(self, t, N):
        """Array ``(a_1(t), ..., a_N(t))``."""
        t = self.check_time(t)
        return np.asarray(self.rate_vector(t, N), dtype=float)

    def daughters(self, t, N):
        """Matrix ``D`` with ``D[n-1, j-1] = b(n, j, t)``."""
        t = self.check_time(t)
        return np.asarray(self.daughter_matrix(t, N), dtype=float)

    def fragment_matrix(self, t, N):
        """Gain matrix ``F[n-1, j-1] = a_j(t) * b(n, j, t)`` of the truncation."""
        return self.daughters(t, N) * self.rates(t, N)[None, :]

    def shifted(self):
        """Family on the sub-system without monomers: indices shifted by one."""
        a, b = self.a, self.b
        rate_vector, daughter_matrix = self.rate_vector, self.daughter_matrix
        inf = self.rate_infimum
        return CoefficientFamily(
            a=lambda n, t: a(n + 1, t),
            b=lambda n, j, t: b(n + 1, j + 1, t),
            horizon=self.horizon,
            kind=self.kind,
            params={**self.params, "shift": self.params.get("shift", 0) + 1},
            rate_vector=lambda t, N: rate_vector(t, N + 1)[1:],
            daughter_matrix=lambda t, N: daughter_matrix(t, N + 1)[1:, 1:],
            rates_constant=self.rates_constant,
            daughters_constant=self.daughters_constant,
            rate_infimum=None if inf is None else (lambda n_min, s, T: inf(n_min + 1, s, T)),
            monotone_rates=self.monotone_rates,
        )

    @property
    def time_constant(self):
        return self.rates_constant and self.daughters_constant

    def describe(self):
        return {"kind": self.kind, "horizon": self.horizon, **self.params}


def _affine_family(kind, params, rates, daughter_fn, scalar_b, horizon):
    return CoefficientFamily(
        a=rates.scalar,
        b=scalar_b,
        horizon=horizon,
        kind=kind,
        params={**params, "rates": rates.to_dict()},
        rate_vector=rates.vector,
        daughter_matrix=lambda t, N: daughter_fn(N),
        rates_constant=rates.time_constant,
        daughters_constant=True,
        rate_infimum=rates.infimum,
        monotone_rates=rates.c.kind != "power" or rates.c.q >= 0,
    )


def power_law_family(nu=0.0, rates=None, horizon=math.inf):
    """Mass-conserving separable daughters ``b_{n,j} = n**nu * zeta_j``."""
    nu = float(nu)
    if not nu >= -1:
        raise ValueError("nu must be >= -1")
    rates = AffineRates() if rates is None else rates

    def b(n, j, t):
        if j <= n:
            return 0.0
        partial = math.fsum(float(l) ** (nu + 1) for l in range(1, j))
        return float(n) ** nu * j / partial

    return _affine_family(
        "power_law", {"nu": nu}, rates, lambda N: power_law_daughters(nu, N), b, horizon
    )


def becker_doring_family(rates=None, horizon=math.inf):
    """Each break-up yields one monomer and one ``(j-1)``-mer."""
    rates = AffineRates() if rates is None else rates

    def b(n, j, t):
        if j <= n:
            return 0.0
        return float(n == 1) + float(n == j - 1)

    return _affine_family("becker_doring", {}, rates, becker_doring_daughters, b, horizon)


# ---------------------------------------------------------------------------
# checkers


def eval_lambda(family, j, t):
    """Mass-defect fraction ``1 - (1/j) * sum_{n<j} n*b(n, j, t)``."""
    j = check_index(j, 2, "j")
    t = family.check_time(t)
    total = math.fsum(n * family.b(n, j, t) for n in range(1, j))
    return 1.0 - total / j


@dataclass(frozen=True)
class NonnegativityReport:
    passed: bool
    witness: Optional[tuple] = None
    reason: str = ""


def check_nonnegativity(family, n_max, time_grid):
    """Sample the sign and support rules for ``a`` and ``b`` on a finite box.

    Returns the first violation found, scanning times in order and, for each
    time, rates before daughters.
    """
    n_max = check_index(n_max, 1, "n_max")
    grid = check_grid(time_grid, family.horizon)
    for t in grid:
        a = family.rates(t, n_max)
        bad = np.flatnonzero(~(a >= 0))
        if bad.size:
            return NonnegativityReport(False, (int(bad[0]) + 1, float(t)), "negative rate")
        D = family.daughters(t, n_max)
        neg = np.argwhere(~(D >= 0))
        if neg.size:
            n, j = neg[0] + 1
            return NonnegativityReport(False, (int(n), int(j), float(t)), "negative daughter count")
        lower = np.argwhere(np.tril(D) != 0)
        if lower.size:
            n, j = lower[0] + 1
            return NonnegativityReport(False, (int(n), int(j), float(t)), "daughter with j <= n")
    return NonnegativityReport(True)


@dataclass(frozen=True)
class MassRuleReport:
    """Classification of a family by its sampled mass-defect fractions."""

    mode: str
    lambda_samples: list
    monomer_loss: bool = False
    witness: Optional[tuple] = None
    tol: float = 1e-10

    @property
    def conserving(self):
        return self.mode == "conserving"

    def to_dict(self):
        return {
            "mode": self.mode,
            "monomer_loss": self.monomer_loss,
            "witness": None if self.witness is None else list(self.witness),
            "tol": self.tol,
            "lambda_min": min(l for _, _, l in self.lambda_samples),
            "lambda_max": max(l for _, _, l in self.lambda_samples),
        }


def _lambdas(family, t, N):
    D = family.daughters(t, N)
    n = np.arange(1, N + 1, dtype=float)
    return 1.0 - (n @ D)[1:] / n[1:]


def check_mass_rule(family, j_max, time_grid, tol=1e-10):
    """Classify as ``conserving``, ``non_gaining`` or ``gaining``.

    ``conserving`` additionally requires ``a(1, t) == 0`` on the grid.
    """
    j_max = check_index(j_max, 2, "j_max")
    grid = check_grid(time_grid, family.horizon)
    samples = []
    monomer_loss = False
    for t in grid:
        lam = _lambdas(family, t, j_max)
        samples.extend((j, float(t), float(l)) for j, l in zip(range(2, j_max + 1), lam))
        monomer_loss |= bool(family.rates(t, 1)[0] != 0)
    worst = min(samples, key=lambda s: s[2])
    if worst[2] < -tol:
        return MassRuleReport("gaining", samples, monomer_loss, worst, tol)
    if not monomer_loss and all(abs(l) <= tol for _, _, l in samples):
        return MassRuleReport("conserving", samples, monomer_loss, None, tol)
    return MassRuleReport("non_gaining", samples, monomer_loss, None, tol)


@dataclass(frozen=True)
class HolderCertificate:
    """Grid maxima of the rate and gain-term Hölder quotients."""

    sigma: float
    c1: float
    c2: float
    grid: dict
    status: str = "certified_on_grid"
    witness: Optional[tuple] = None

    @property
    def certified(self):
        return self.status == "certified_on_grid"

    def bound(self, s, t):
        return (self.c1 + self.c2) * abs(t - s) ** self.sigma

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "c1": self.c1,
            "c2": self.c2,
            "grid": self.grid,
            "status": self.status,
            "witness": None if self.witness is None else list(self.witness),
        }


def estimate_holder(family, weight, sigma=1.0, n_max=None, time_grid=(), limits=None):
    """Estimate the Hölder constants of rates and gain terms on a grid.

    ``c1`` is the maximum over sampled ``n`` and ``s != t`` of
    ``|a_n(t) - a_n(s)| / ((1 + min_tau a_n(tau)) |t-s|**sigma)``; ``c2`` is
    the analogous weighted maximum over the columns of the gain matrix.
    The worst ``tau`` is the grid minimiser of the rate.

    ``limits=(c1_max, c2_max)`` turns the certificate into a test: exceeding
    either limit, or a non-finite quotient, marks it ``violated`` with the
    offending ``(constant, index, s, t, tau)``.
    """
    sigma = float(sigma)
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    grid = check_grid(time_grid, family.horizon)
    if grid.size < 2:
        raise ValueError("time grid needs at least two distinct times")
    w = np.asarray(getattr(weight, "w", weight), dtype=float)
    if n_max is None:
        n_max = w.size
    n_max = check_index(n_max, 1, "n_max")
    w = check_weight(w, n_max)

    A = np.array([family.rates(t, n_max) for t in grid])  # (K, N)
    F = np.array([family.fragment_matrix(t, n_max) for t in grid])  # (K, N, N)
    tau_idx = A.argmin(axis=0)
    denom = 1.0 + A.min(axis=0)
    k, l = np.triu_indices(grid.size, k=1)
    dt = np.abs(grid[k] - grid[l]) ** sigma

    q1 = np.abs(A[k] - A[l]) / (denom[None, :] * dt[:, None])
    q2 = np.array([w @ np.abs(F[p] - F[r]) for p, r in zip(k, l)])
    q2 /= w[None, :] * denom[None, :] * dt[:, None]

    def top(q):
        flat = np.nan_to_num(q, nan=np.inf)
        p, n = np.unravel_index(np.argmax(flat), q.shape)
        return float(flat[p, n]), (int(n) + 1, float(grid[k[p]]), float(grid[l[p]]), float(grid[tau_idx[n]]))

    c1, arg1 = top(q1)
    c2, arg2 = top(q2)
    status, witness = "certified_on_grid", None
    lim1, lim2 = (math.inf, math.inf) if limits is None else limits
    if not (c1 <= lim1):
        status, witness = "violated", ("c1",) + arg1
    elif not (c2 <= lim2):
        status, witness = "violated", ("c2",) + arg2
    info = {"times": grid.tolist(), "n_max": n_max, "argmax_c1": list(arg1), "argmax_c2": list(arg2)}
    return HolderCertificate(sigma, c1, c2, info, status, witness)
