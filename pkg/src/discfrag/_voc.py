"""Variation-of-constants recursion for upper-triangular linear systems.

Row ``m`` of the solution obeys ``x_m' = -c_m(t) x_m + S_m(t)`` with the
source ``S_m = sum_{j>m} F_{mj}(t) x_j`` built from rows already computed,
so rows are solved bottom-up.  On every panel ``[t_k, t_k + h]``

    x_m(tau) = e^{-D(tau)} [x_m(t_k) + int_{t_k}^{tau} e^{D(r)} S_m(r) dr],
    D(tau) = int_{t_k}^{tau} c_m,

where the integrals use Gauss-Legendre nodes and the spectral integration
matrix of the node interpolant.  Values at the nodes are kept so that lower
rows can build their sources; the diagonal decay is applied exactly through
the exponential factor.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from numpy.polynomial import legendre

from ._rk import SolverError

# floats held at quadrature nodes before giving up (about 400 MB)
NODE_BUDGET = 50_000_000


class QuadratureError(SolverError):
    pass


@functools.lru_cache(maxsize=16)
def panel_rule(p):
    """Nodes, weights and integration matrix on ``[-1, 1]``.

    ``Q[i, l] = int_{-1}^{x_i} L_l(x) dx`` for the Lagrange basis ``L_l`` of
    the Gauss nodes.
    """
    x, wts = legendre.leggauss(p)
    coeffs = np.linalg.inv(legendre.legvander(x, p - 1))
    Q = np.empty((p, p))
    for l in range(p):
        Q[:, l] = legendre.legval(x, legendre.legint(coeffs[:, l], lbnd=-1))
    return x, wts, Q


def _panels(s, times, h):
    """Panel edges covering ``[s, times[-1]]`` with every output time an edge."""
    edges = [np.array([s])]
    out_idx = []
    start = s
    for t in times:
        if t > start:
            k = max(1, math.ceil((t - start) / h))
            edges.append(np.linspace(start, t, k + 1)[1:])
            start = t
        out_idx.append(sum(e.size for e in edges) - 1)
    return np.concatenate(edges), out_idx


def _solve(family, s, times, X0, shift, p, h):
    x, wts, Q = panel_rule(p)
    edges, out_idx = _panels(s, times, h)
    N, k = X0.shape
    K = edges.size - 1
    if K * p * N * k > NODE_BUDGET:
        raise QuadratureError(
            f"{K} panels of {p} nodes for a {N}x{k} system exceed the memory budget; "
            "reduce the truncation, the number of columns or quadrature_points"
        )
    half = 0.5 * np.diff(edges)  # (K,)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()  # (K*p,)

    A = np.array([family.rates(t, N) for t in nodes])  # (P, N)
    if family.daughters_constant:
        D = family.daughters(nodes[0], N)
        gain_row = lambda m: D[m, m + 1 :][None, :] * A[:, m + 1 :]  # noqa: E731
    else:
        Dn = np.array([family.daughters(t, N) for t in nodes])
        gain_row = lambda m: Dn[:, m, m + 1 :] * A[:, m + 1 :]  # noqa: E731

    Xn = np.zeros((K * p, N, k))
    Xe = np.zeros((K + 1, N, k))
    for m in range(N - 1, -1, -1):
        c = (shift + A[:, m]).reshape(K, p)
        Dnodes = half[:, None] * (c @ Q.T)  # (K, p)
        Dend = half * (c @ wts)  # (K,)
        if m < N - 1:
            S = np.einsum("pj,pjk->pk", gain_row(m), Xn[:, m + 1 :, :]).reshape(K, p, k)
            g = np.exp(Dnodes)[:, :, None] * S
            In = half[:, None, None] * np.einsum("il,Klk->Kik", Q, g)
            Ie = half[:, None] * np.einsum("l,Klk->Kk", wts, g)
        else:
            In = np.zeros((K, p, k))
            Ie = np.zeros((K, k))
        decay_nodes = np.exp(-Dnodes)
        decay_end = np.exp(-Dend)
        row_nodes = Xn[:, m, :].reshape(K, p, k)
        v = X0[m].astype(float)
        Xe[0, m] = v
        for i in range(K):
            row_nodes[i] = decay_nodes[i][:, None] * (v[None, :] + In[i])
            v = decay_end[i] * (v + Ie[i])
            Xe[i + 1, m] = v
        Xn[:, m, :] = row_nodes.reshape(K * p, k)
    return [Xe[i].copy() for i in out_idx], K


# cap on the starting panel count; beyond it the diagonal is too stiff to resolve
MAX_PANELS = 200_000


def propagate(family, s, times, X0, shift=0.0, quadrature_points=8, max_step=0.25,
              rel_tol=1e-10, abs_tol=1e-14, max_refinements=8):
    """Solve the truncated system for several initial columns at once.

    ``X0`` is ``N x k``; returns ``(list of N x k arrays at times, stats)``.
    The panel width starts at ``min(max_step, 1/(shift + max rate))`` and is
    halved until two successive results agree to ``abs_tol + rel_tol*max|X|``.
    """
    times = [float(t) for t in times]
    X0 = np.asarray(X0, dtype=float)
    N = X0.shape[0]
    probe = np.linspace(s, times[-1], 9)
    a_max = max(float(np.max(family.rates(t, N))) for t in probe)
    h = min(max_step, 1.0 / (shift + a_max)) if shift + a_max > 0 else max_step
    span = times[-1] - s
    if span / h > MAX_PANELS:
        raise QuadratureError(
            f"rates up to {a_max:.3e} need more than {MAX_PANELS} panels on [{s}, {times[-1]}]; "
            "reduce the truncation size or the time span"
        )
    prev, panels = _solve(family, s, times, X0, shift, quadrature_points, h)
    for level in range(1, max_refinements + 1):
        h /= 2
        cur, panels = _solve(family, s, times, X0, shift, quadrature_points, h)
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(cur, prev))
        scale = max(float(np.max(np.abs(a))) for a in cur)
        if diff <= abs_tol + rel_tol * scale:
            return cur, {"panels": panels, "refinements": level, "last_change": diff}
        prev = cur
    raise QuadratureError(
        f"panel refinement did not converge (last change {diff:.3e}); "
        "increase quadrature_points or max_refinements, or reduce max_step"
    )
