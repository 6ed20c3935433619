"""Weight sequences for the state space and their kappa certificates.

A weight ``w`` is admissible when ``w_n >= n`` and every fragmentation event
produces at most a fraction ``kappa < 1`` of the parent's weighted mass:
``sum_{n<j} w_n b(n, j, t) <= kappa * w_j``.  Everything here is checked on
finite ``(j, t)`` grids and labelled as such.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_grid, check_index, check_weight

__all__ = [
    "WeightCertificate",
    "construct_weight",
    "certify_kappa",
    "power_weight",
    "powerlaw_kappa_bound",
    "shift_weight",
    "kappa_ratios",
]


@dataclass(frozen=True, eq=False)
class WeightCertificate:
    """A weight sequence with the largest sampled kappa ratio.

    ``kappa_hat`` is ``None`` when the sample does not certify a constant
    below one or the weight breaks ``w_n >= n``; ``max_ratio`` always holds
    the measured maximum and ``witness`` its ``(j, t)``.
    """

    w: np.ndarray
    kappa_hat: Optional[float]
    checked_grid: dict = field(default_factory=dict)
    construction: dict = field(default_factory=lambda: {"kind": "external"})
    max_ratio: float = 0.0
    witness: Optional[tuple] = None

    @property
    def certified(self):
        return self.kappa_hat is not None

    @property
    def N(self):
        return len(self.w)

    def to_json_dict(self):
        grid = dict(self.checked_grid)
        grid["max_ratio"] = self.max_ratio
        grid["argmax"] = None if self.witness is None else list(self.witness)
        return {
            "w": [float(x) for x in self.w],
            "kappa_hat": "uncertified" if self.kappa_hat is None else self.kappa_hat,
            "grid": grid,
            "construction": dict(self.construction),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc):
        grid = dict(doc["grid"])
        max_ratio = grid.pop("max_ratio", 0.0)
        argmax = grid.pop("argmax", None)
        kappa = doc["kappa_hat"]
        return cls(
            w=np.asarray(doc["w"], dtype=float),
            kappa_hat=None if kappa == "uncertified" else float(kappa),
            checked_grid=grid,
            construction=dict(doc["construction"]),
            max_ratio=max_ratio,
            witness=None if argmax is None else (int(argmax[0]), float(argmax[1])),
        )


def kappa_ratios(w, family, N, time_grid):
    """Array ``R[k, j-2] = (1/w_j) sum_{n<j} w_n b(n, j, t_k)`` for ``j = 2..N``."""
    grid = check_grid(time_grid, family.horizon)
    w = check_weight(w, N)
    return np.array([(w @ family.daughters(t, N))[1:] / w[1:] for t in grid])


def certify_kappa(weight, family, N, time_grid, construction=None):
    """Largest sampled kappa ratio over ``2 <= j <= N`` and the grid times.

    Certified iff that maximum is below one and ``w_n >= n`` for ``n <= N``.
    """
    N = check_index(N, 2, "N")
    w = check_weight(weight, N)
    grid = check_grid(time_grid, family.horizon)
    R = kappa_ratios(w, family, N, grid)
    k, col = np.unravel_index(np.argmax(R), R.shape)
    max_ratio = float(R[k, col])
    ok = max_ratio < 1.0 and bool(np.all(w >= np.arange(1, N + 1)))
    return WeightCertificate(
        w=w.copy(),
        kappa_hat=max_ratio if ok else None,
        checked_grid={"j_max": N, "times": grid.tolist()},
        construction=construction or {"kind": "external"},
        max_ratio=max_ratio,
        witness=(int(col) + 2, float(grid[k])),
    )


def construct_weight(family, kappa_target, N, time_grid):
    """Build ``w`` index by index so that each sampled ratio is at most ``kappa_target``.

    ``w_1 = 1`` and ``w_j = max(j, max_t sum_{n<j} w_n b(n, j, t) / kappa_target)``.
    """
    kappa_target = float(kappa_target)
    if not 0 < kappa_target < 1:
        raise ValueError("kappa_target must lie in (0, 1)")
    N = check_index(N, 2, "N")
    grid = check_grid(time_grid, family.horizon)
    D = np.array([family.daughters(t, N) for t in grid])
    if not np.all(np.isfinite(D)):
        raise ValueError("daughter distribution is not bounded on the grid")
    w = np.empty(N)
    w[0] = 1.0
    for j in range(2, N + 1):
        produced = (D[:, : j - 1, j - 1] @ w[: j - 1]).max()
        w[j - 1] = max(float(j), produced / kappa_target)
    return certify_kappa(
        w, family, N, grid, construction={"kind": "iterative", "kappa_target": kappa_target}
    )


def power_weight(p, N):
    """``w_n = n**p``."""
    if not p >= 1:
        raise ValueError("power weights need p >= 1")
    return np.arange(1, N + 1, dtype=float) ** p


def powerlaw_kappa_bound(nu, p):
    """Uniform bound ``(nu+2) 2**(nu+2) / (p+nu+1)`` on the kappa ratio of
    power-law daughters under ``w_n = n**p``.  Admissible only if ``< 1``."""
    nu, p = float(nu), float(p)
    if not (nu >= -1 and p >= 1):
        raise ValueError("need nu >= -1 and p >= 1")
    return (nu + 2) * 2 ** (nu + 2) / (p + nu + 1)


def shift_weight(weight):
    """Weight of the monomer-free sub-system: ``(w_2, w_3, ...)``."""
    w = np.asarray(getattr(weight, "w", weight), dtype=float)
    if w.ndim != 1 or w.size < 2:
        raise ValueError("need at least two weight entries to shift")
    return w[1:].copy()
