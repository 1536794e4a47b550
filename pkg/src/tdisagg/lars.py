"""LASSO solution path by least angle regression with the drop modification.

The objective is ``||y - X b||^2 + lam * ||b||_1`` with no ``1/2n`` factor,
so the KKT conditions read ``|x_j' r| <= lam / 2`` with equality and
``sign(b_j) == sign(x_j' r)`` on the active set.  Between knots the solution
is linear in ``lam``; the path records it at every knot where a variable
enters or leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesignError, ShapeError

# 1 - |cos(angle)| below this between two active columns is treated as collinear
COLLINEAR_TOL = 1e-12


@dataclass(frozen=True)
class LarsPath:
    """Piecewise-linear LASSO path.

    Attributes
    ----------
    knots : ndarray, shape (k,)
        Strictly decreasing penalty values; ``knots[0] = 2 * max|X'y|``.
    betas : ndarray, shape (k, d)
        Solution at each knot; ``betas[0]`` is all zero.
    actions : list of list of (str, int)
        ``("add", j)`` / ``("drop", j)`` events that happened at each knot.
    """

    knots: np.ndarray
    betas: np.ndarray
    actions: list

    def __len__(self):
        return len(self.knots)

    def supports(self) -> list[np.ndarray]:
        return [np.flatnonzero(b) for b in self.betas]

    def scaled(self, scale: np.ndarray) -> "LarsPath":
        """Path expressed in original units when it was run on ``X * scale``."""
        return LarsPath(self.knots, self.betas * scale, self.actions)


def _check_collinear(X: np.ndarray, norms: np.ndarray, active: list[int], j: int) -> None:
    cos = np.abs(X[:, active].T @ X[:, j]) / (norms[active] * norms[j])
    if np.any(1.0 - cos < COLLINEAR_TOL):
        k = active[int(np.argmax(cos))]
        raise DegenerateDesignError(f"columns {k} and {j} are collinear")


def lars_path(
    y,
    X,
    max_steps: int | None = None,
    max_active: int | None = None,
    usable=None,
) -> LarsPath:
    """Compute the LASSO path of ``||y - X b||^2 + lam ||b||_1``.

    Parameters
    ----------
    y : array_like, shape (n,)
    X : array_like, shape (n, d)
        Columns should be on comparable scales; the algorithm itself does
        not rescale them.
    max_steps : int, optional
        Maximum number of knots after the first; defaults to
        ``min(n - 1, d)``.
    max_active : int, optional
        No variable enters once this many are active; defaults to
        ``min(n, d)``.  Pass the residual rank when unpenalized columns have
        been projected out of ``y`` and ``X``.
    usable : array_like of bool, optional
        Columns allowed to enter.  Zero columns are never usable.

    Returns
    -------
    LarsPath

    Raises
    ------
    DegenerateDesignError
        If an entering column is collinear with an active one.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X has shape {X.shape}, expected ({y.size}, d)")
    n, d = X.shape
    if max_steps is None:
        max_steps = min(n - 1, d)
    if max_active is None:
        max_active = min(n, d)
    norms = np.linalg.norm(X, axis=0)
    ok = norms > 0
    if usable is not None:
        ok &= np.asarray(usable, dtype=bool)

    beta = np.zeros(d)
    c = X.T @ y
    cand = np.where(ok, np.abs(c), -1.0)
    if d == 0 or not ok.any() or cand.max() <= 0.0:
        return LarsPath(np.zeros(1), np.zeros((1, d)), [[]])

    j0 = int(np.argmax(cand))
    C = float(cand[j0])
    active = [j0]
    knots, betas, actions = [2.0 * C], [beta.copy()], [[("add", j0)]]
    just_dropped = -1
    steps = 0
    # events closer than this to the previous knot share its record
    eps = 1e-14 * C

    while steps < max_steps and C > eps:
        A = np.array(active)
        XA = X[:, A]
        s = np.sign(c[A])
        G = XA.T @ XA
        try:
            w = np.linalg.solve(G, s)
        except np.linalg.LinAlgError:
            raise DegenerateDesignError("active Gram matrix is singular") from None
        a = X.T @ (XA @ w)

        gamma, event, who = C, "end", -1
        if len(active) < max_active:
            inactive = ok.copy()
            inactive[A] = False
            if just_dropped >= 0:
                inactive[just_dropped] = False
            idx = np.flatnonzero(inactive)
            if idx.size:
                cj, aj = c[idx], a[idx]
                with np.errstate(divide="ignore", invalid="ignore"):
                    g_pos = np.where(1.0 - aj > 1e-12, (C - cj) / (1.0 - aj), np.inf)
                    g_neg = np.where(1.0 + aj > 1e-12, (C + cj) / (1.0 + aj), np.inf)
                g = np.minimum(np.where(g_pos > 0, g_pos, np.inf), np.where(g_neg > 0, g_neg, np.inf))
                k = int(np.argmin(g))
                if g[k] < gamma:
                    gamma, event, who = float(g[k]), "add", int(idx[k])
        with np.errstate(divide="ignore", invalid="ignore"):
            g_drop = np.where(w != 0, -beta[A] / w, np.inf)
        g_drop = np.where(g_drop > 0, g_drop, np.inf)
        k = int(np.argmin(g_drop))
        if g_drop[k] < gamma:
            gamma, event, who = float(g_drop[k]), "drop", int(A[k])

        beta[A] += gamma * w
        C = C - gamma
        just_dropped = -1
        if event == "drop":
            beta[who] = 0.0
            active.remove(who)
            just_dropped = who
        elif event == "add":
            _check_collinear(X, norms, active, who)
            active.append(who)
        else:
            C = 0.0
        c = X.T @ (y - X @ beta)

        record = [(event, who)] if event != "end" else []
        if gamma <= eps:
            if len(knots) > 1:
                betas[-1] = beta.copy()
            actions[-1].extend(record)
        else:
            knots.append(2.0 * max(C, 0.0))
            betas.append(beta.copy())
            actions.append(record)
            steps += 1
        if not active:
            break

    return LarsPath(np.array(knots), np.array(betas), actions)
