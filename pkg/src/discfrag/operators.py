"""Truncated loss, gain and full generators plus weighted-ℓ¹ norms.

Truncation to indices ``1..N`` is exact for data supported there, since a
fragment is always smaller than its parent.  All matrices are ``N x N``
arrays in which column ``j`` describes the fate of a ``j``-mer.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_vector, check_weight, frozen

__all__ = [
    "StateVector",
    "TriangularMatrix",
    "generator_matrix",
    "apply_A",
    "apply_B",
    "apply_G",
    "weighted_norm",
    "phi_w",
    "first_moment",
    "opnorm_weighted",
    "check_B_bound",
    "check_resolvent_bound",
    "check_holder_opnorm",
]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Truncated densities ``(u_1, ..., u_N)`` at time ``t``."""

    t: float
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", frozen(check_vector(self.u).copy()))
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self):
        return self.u.size

    def weighted_norm(self, w):
        return weighted_norm(self.u, w)

    def phi_w(self, w):
        return phi_w(self.u, w)

    def first_moment(self):
        return first_moment(self.u)


@dataclass(frozen=True, eq=False)
class TriangularMatrix:
    """Upper-triangular matrix of ``U(t, s)`` (or ``V(t, s)`` when ``rescaled``)."""

    entries: np.ndarray
    s: float
    t: float
    rescaled: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("entries must be a square matrix")
        object.__setattr__(self, "entries", frozen(np.triu(m)))

    @property
    def N(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def as_evolution(self):
        """``U(t, s) = e^{t-s} V(t, s)``."""
        if not self.rescaled:
            return self
        return TriangularMatrix(np.exp(self.t - self.s) * self.entries, self.s, self.t, False)

    def as_rescaled(self):
        if self.rescaled:
            return self
        return TriangularMatrix(np.exp(self.s - self.t) * self.entries, self.s, self.t, True)

    def to_csv(self):
        """Row-major, one row per line, lower triangle written as explicit zeros."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"c{j}" for j in range(1, self.N + 1)])
        for row in self.entries:
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json_dict(self):
        return {
            "N": self.N,
            "s": self.s,
            "t": self.t,
            "rescaled": self.rescaled,
            "entries": [[float(x) for x in row] for row in self.entries],
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc):
        return cls(np.asarray(doc["entries"], dtype=float), doc["s"], doc["t"], doc["rescaled"])


def generator_matrix(family, t, N, shift=0.0):
    """Truncated ``G(t) - shift*I`` as a dense upper-triangular array."""
    a = family.rates(t, N)
    G = np.triu(family.fragment_matrix(t, N), k=1)
    G[np.diag_indices(N)] = -(a + shift)
    return G


def _state(u):
    return check_vector(u)


def apply_A(family, t, u):
    """Loss term ``(-a_n(t) u_n)_n``."""
    u = _state(u)
    return -family.rates(t, u.size) * u


def apply_B(family, t, u):
    """Gain term ``(sum_{j=n+1}^{N} a_j(t) b(n, j, t) u_j)_n``."""
    u = _state(u)
    F = np.triu(family.fragment_matrix(t, u.size), k=1)
    return F @ u


def apply_G(family, t, u):
    """Right-hand side of the truncated fragmentation system."""
    return apply_A(family, t, u) + apply_B(family, t, u)


def weighted_norm(u, w):
    u = check_vector(u)
    return float(np.sum(check_weight(w, u.size) * np.abs(u)))


def phi_w(u, w):
    """Linear functional ``sum w_n u_n``; equals the norm on the positive cone."""
    u = check_vector(u)
    return float(np.sum(check_weight(w, u.size) * u))


def first_moment(u):
    u = check_vector(u)
    return float(np.arange(1, u.size + 1) @ u)


def opnorm_weighted(M, w):
    """Exact operator norm on weighted ℓ¹: ``max_j (1/w_j) sum_i w_i |m_ij|``."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("need a square matrix")
    if M.shape[0] == 0:
        return 0.0
    w = check_weight(w, M.shape[0])
    return float(np.max((w @ np.abs(M)) / w))


def check_B_bound(family, weight, t, N):
    """Largest ``||B(t) e_j||_w / ||A(t) e_j||_w`` over columns with ``a_j(t) > 0``."""
    w = check_weight(weight, N)
    a = family.rates(t, N)
    F = np.triu(family.fragment_matrix(t, N), k=1)
    active = a > 0
    if not active.any():
        return 0.0
    ratios = (w @ np.abs(F))[active] / (w[active] * a[active])
    return float(ratios.max())


def check_resolvent_bound(family, weight, t, lam, N):
    """Norms of ``R(lam, A(t))`` and ``B(t) R(lam, A(t))`` on the truncation.

    Expected: the first is at most ``1/|lam|``, the second at most kappa.
    """
    lam = complex(lam)
    if not lam.real > 0:
        raise ValueError("need Re(lambda) > 0")
    w = check_weight(weight, N)
    a = family.rates(t, N)
    r = 1.0 / (lam + a)
    F = np.triu(family.fragment_matrix(t, N), k=1)
    return opnorm_weighted(np.diag(r), w), opnorm_weighted(F * r[None, :], w)


def check_holder_opnorm(family, weight, holder, s, t, tau, N):
    """Norm of ``(G(t) - G(s)) R(1, A(tau))`` on the truncation.

    ``holder`` is accepted so callers can compare against
    ``holder.bound(s, t)``; it does not enter the computation.
    """
    w = check_weight(weight, N)
    diff = generator_matrix(family, t, N) - generator_matrix(family, s, N)
    resolvent = 1.0 / (1.0 + family.rates(tau, N))
    return opnorm_weighted(diff * resolvent[None, :], w)
