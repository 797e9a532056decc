"""Dense two-phase primal simplex.

Small LPs only (a few hundred rows).  Pricing is Dantzig's rule with ties
broken by the lowest column index; after a run of degenerate pivots the
solver switches to Bland's rule for the rest of the phase, which cannot
cycle.  The ratio test breaks ties by the lowest basic-variable index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
DEGENERATE_STREAK = 30


class LPNumericalError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    fun: Optional[float]
    iterations: int = 0

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             bounds: Optional[Sequence[Tuple[float, Optional[float]]]] = None,
             maximize: bool = False, max_iter: int = 50_000) -> LPResult:
    """Minimise (or maximise) ``c @ x`` subject to ``A_ub x <= b_ub``,
    ``A_eq x == b_eq`` and ``lo <= x <= hi``.

    ``bounds`` defaults to ``(0, None)`` for every variable; lower bounds must
    be finite.  The returned point satisfies every row to within ``1e-9``
    (scaled by the row's right-hand side); anything looser raises
    :class:`LPNumericalError`.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        bounds = [(0.0, None)] * n
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")
    if np.any(hi < lo - FEAS_TOL):
        return LPResult("infeasible", None, None)
    sign = -1.0 if maximize else 1.0

    # shift to x' = x - lo >= 0; finite upper bounds become rows
    ub_idx = np.flatnonzero(np.isfinite(hi))
    rows_ub = [A_ub, np.eye(n)[ub_idx]]
    rhs_ub = [b_ub - A_ub @ lo, (hi - lo)[ub_idx]]
    G = np.vstack(rows_ub)
    g = np.concatenate(rhs_ub)
    H = A_eq
    h = b_eq - A_eq @ lo

    x_shift, status, iters = _simplex(sign * c, G, g, H, h, max_iter)
    if status != "optimal":
        return LPResult(status, None, None, iters)
    x = x_shift + lo
    # snap onto bounds to kill round-off drift
    x = np.minimum(np.maximum(x, lo), hi)
    _check_feasible(x, A_ub, b_ub, A_eq, b_eq)
    return LPResult("optimal", x, float(c @ x), iters)


def _check_feasible(x, A_ub, b_ub, A_eq, b_eq):
    if A_ub.size:
        viol = A_ub @ x - b_ub
        scale = np.maximum(1.0, np.abs(b_ub))
        if np.any(viol > FEAS_TOL * scale):
            raise LPNumericalError(f"inequality residual {viol.max():.3e} exceeds tolerance")
    if A_eq.size:
        viol = np.abs(A_eq @ x - b_eq)
        scale = np.maximum(1.0, np.abs(b_eq))
        if np.any(viol > FEAS_TOL * scale):
            raise LPNumericalError(f"equality residual {viol.max():.3e} exceeds tolerance")


def _simplex(c, G, g, H, h, max_iter):
    """min c x  s.t.  G x <= g, H x = h, x >= 0.  Returns (x, status, iterations)."""
    n = c.size
    m_ub, m_eq = G.shape[0], H.shape[0]
    m = m_ub + m_eq

    # columns: x (n) | slacks (m_ub) | artificials (as needed)
    flip_ub = g < 0
    flip_eq = h < 0
    art_rows = list(np.flatnonzero(flip_ub)) + [m_ub + i for i in range(m_eq)]
    n_art = len(art_rows)
    width = n + m_ub + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m_ub, :n] = G
    T[:m_ub, n:n + m_ub] = np.eye(m_ub)
    T[:m_ub, -1] = g
    T[m_ub:m, :n] = H
    T[m_ub:m, -1] = h
    T[:m_ub][flip_ub] *= -1.0
    T[m_ub:m][flip_eq] *= -1.0

    basis = np.empty(m, dtype=int)
    for i in range(m_ub):
        basis[i] = n + i
    for j, r in enumerate(art_rows):
        col = n + m_ub + j
        T[r, col] = 1.0
        basis[r] = col

    iters = 0
    if n_art:
        # phase 1: minimise the sum of artificials
        T[m, :] = 0.0
        T[m, n + m_ub:width] = 1.0
        for r in art_rows:
            T[m] -= T[r]
        status, k = _iterate(T, basis, width, max_iter)
        iters += k
        if status != "optimal":
            raise LPNumericalError("phase 1 did not terminate")
        if T[m, -1] < -FEAS_TOL * max(1.0, np.abs(T[:m, -1]).max(initial=0.0)):
            return None, "infeasible", iters
        # drive artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n + m_ub:
                cand = np.flatnonzero(np.abs(T[r, :n + m_ub]) > 1e-9)
                if cand.size:
                    _pivot(T, basis, r, int(cand[0]))
                else:
                    keep[r] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = basis[keep]
            m = basis.size
        # forbid artificials from re-entering
        T = np.hstack([T[:, :n + m_ub], T[:, -1:]])
        width = n + m_ub

    # phase 2
    T[m, :] = 0.0
    T[m, :n] = c
    for r in range(m):
        if basis[r] < n and c[basis[r]] != 0.0:
            T[m] -= c[basis[r]] * T[r]
    status, k = _iterate(T, basis, width, max_iter)
    iters += k
    if status == "unbounded":
        return None, "unbounded", iters
    if status != "optimal":
        raise LPNumericalError(f"simplex did not converge in {max_iter} iterations")
    x = np.zeros(width)
    x[basis] = T[:m, -1]
    return np.maximum(x[:n], 0.0), "optimal", iters


def _iterate(T, basis, width, max_iter):
    m = basis.size
    bland = False
    streak = 0
    for it in range(max_iter):
        red = T[m, :width]
        neg = np.flatnonzero(red < -FEAS_TOL)
        if neg.size == 0:
            return "optimal", it
        if bland:
            col = int(neg[0])
        else:
            col = int(neg[np.argmin(red[neg])])  # argmin returns lowest index on ties
        colv = T[:m, col]
        pos = np.flatnonzero(colv > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded", it
        ratios = T[pos, -1] / colv[pos]
        best = ratios.min()
        tied = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(tied[np.argmin(basis[tied])])
        if T[row, -1] <= 1e-12:
            streak += 1
            if streak >= DEGENERATE_STREAK:
                bland = True
        else:
            streak = 0
        _pivot(T, basis, row, col)
    return "iteration_limit", max_iter


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    nz = np.flatnonzero(colv)
    if nz.size:
        T[nz] -= np.outer(colv[nz], T[row])
    basis[row] = col
