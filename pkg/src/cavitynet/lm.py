"""Damped least squares (Levenberg-Marquardt) with a finite-difference Jacobian."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    residual: np.ndarray
    jacobian: np.ndarray
    n_iter: int
    converged: bool
    message: str

    def covariance(self) -> np.ndarray:
        """Parameter covariance ``s^2 (J^T J)^-1`` with ``s^2`` from the residual."""
        n, p = self.jacobian.shape
        dof = max(n - p, 1)
        s2 = float(self.residual @ self.residual) / dof
        return s2 * np.linalg.pinv(self.jacobian.T @ self.jacobian)


def numerical_jacobian(fun, x, f0=None, rel_step=1e-7, abs_step=1e-9):
    """Forward-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), 1.0) + abs_step
        xp = x.copy()
        xp[j] += h
        J[:, j] = (fun(xp) - f0) / h
    return J


def levenberg_marquardt(fun: Callable[[np.ndarray], np.ndarray], x0, *,
                        jac: Optional[Callable] = None, max_iter: int = 200,
                        ftol: float = 1e-14, xtol: float = 1e-12, gtol: float = 1e-14,
                        damping: float = 1e-3) -> LMResult:
    """Minimise ``0.5 * ||fun(x)||^2``.

    Marquardt's scaling is used: the damping term is ``lambda * diag(J^T J)``,
    so the method is invariant to rescaling individual parameters. A trial
    step is only accepted if it lowers the cost.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(fun(x), dtype=float)
    cost = 0.5 * float(r @ r)
    lam = damping
    jac_fn = jac or (lambda z, f0: numerical_jacobian(fun, z, f0))
    J = jac_fn(x, r)
    message = "maximum iterations reached"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) <= gtol * max(cost, 1e-300) ** 0.5 or cost == 0.0:
            converged, message = True, "gradient below tolerance"
            break
        diag = np.diag(A).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        for _ in range(30):
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = x + step
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= 4
        if not accepted:
            converged, message = True, "no downhill step; at a minimum to working precision"
            break
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
        small_gain = (cost - cost_new) <= ftol * cost
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 3, 1e-12)
        J = jac_fn(x, r)
        if small_step or small_gain:
            converged, message = True, "relative change below tolerance"
            break
    return LMResult(x, cost, r, J, it, converged, message)
