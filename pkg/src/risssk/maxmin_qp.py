"""Max-min of affine functions under a common quadratic penalty.

Two variants are provided. :func:`solve_maxmin` solves, for complex ``d`` of
length L,

    maximize  -rho * ||d||^2 + min_k ( 2 Re{c_k d} + g_k )

which is the epigraph QP

    maximize  -rho * ||d||^2 + s   s.t.  s <= 2 Re{c_k d} + g_k  for all k.

The Lagrange dual is a K-variable QP on the probability simplex,

    minimize  ||sum_k lam_k c_k||^2 / rho + g . lam   s.t.  lam >= 0, sum(lam) = 1,

and the primal point is recovered in closed form as ``d = (lam C)^H / rho``.
K is the number of antenna pairs (at most a few dozen), so the dual is solved
densely with a Mehrotra predictor-corrector interior-point method.

:func:`solve_maxmin_disk` adds the per-element bound ``|v_l| <= 1`` on
``v = u + d`` and is solved by a primal-dual interior-point method whose
Newton system collapses to (K+1) x (K+1) through the block-diagonal disk
Hessian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SubproblemError(RuntimeError):
    """Raised when the certificate fails; ``best`` holds the last iterate."""

    def __init__(self, message: str, best: "MaxMinSolution"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class MaxMinSolution:
    d: np.ndarray
    weights: np.ndarray
    value: float
    kkt_residual: float
    iterations: int


def simplex_qp(q_mat: np.ndarray, g: np.ndarray, tol: float = 1e-14, max_iter: int = 200):
    """Minimize ``0.5 x'Qx + g'x`` over the probability simplex (Q PSD).

    Returns ``(x, iterations)``. The problem is shifted and scaled internally;
    ``tol`` applies to the scaled complementarity and residuals.
    """
    k = g.shape[0]
    if k == 1:
        return np.ones(1), 0
    g = g - g.min()
    scale = max(float(np.abs(q_mat).max()), float(g.max()), 1e-300)
    q_mat = q_mat / scale
    g = g / scale

    x = np.full(k, 1.0 / k)
    grad = q_mat @ x + g
    y = grad.min() - 1.0
    s = grad - y
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, k] = -1.0
    kkt[k, :k] = 1.0
    rhs = np.empty(k + 1)

    it = 0
    for it in range(1, max_iter + 1):
        r_d = q_mat @ x + g - y - s
        r_p = x.sum() - 1.0
        mu = x @ s / k
        if mu < tol and np.abs(r_d).max() < tol and abs(r_p) < tol:
            break
        kkt[:k, :k] = q_mat
        kkt[np.arange(k), np.arange(k)] += s / x

        # Predictor (affine scaling) direction.
        rhs[:k] = -r_d - s
        rhs[k] = -r_p
        sol = np.linalg.solve(kkt, rhs)
        dx_a = sol[:k]
        ds_a = (-x * s - s * dx_a) / x
        a_p = min(1.0, _max_step(x, dx_a))
        a_d = min(1.0, _max_step(s, ds_a))
        mu_aff = (x + a_p * dx_a) @ (s + a_d * ds_a) / k
        sigma = (mu_aff / mu) ** 3

        # Corrector with centering.
        r_c = -x * s - dx_a * ds_a + sigma * mu
        rhs[:k] = -r_d + r_c / x
        sol = np.linalg.solve(kkt, rhs)
        dx, dy = sol[:k], sol[k]
        ds = (r_c - s * dx) / x
        alpha = min(1.0, 0.995 * min(_max_step(x, dx), _max_step(s, ds)))
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds

    x = np.maximum(x, 0.0)
    return x / x.sum(), it


def _max_step(z, dz):
    neg = dz < 0
    if not neg.any():
        return np.inf
    return float(np.min(-z[neg] / dz[neg]))


def affine_values(c_rows: np.ndarray, g: np.ndarray, d: np.ndarray) -> np.ndarray:
    return 2.0 * np.real(c_rows @ d) + g


def kkt_residual(c_rows, g, rho, d, weights) -> float:
    """Scaled KKT residual of the epigraph QP at ``(d, s = min_k affine_k, weights)``.

    Primal feasibility holds by the choice of ``s``. The residual is the max of
    the stationarity error in ``d``, the simplex (dual feasibility) error and
    the complementary slackness sum, which equals the duality gap.
    """
    aff = affine_values(c_rows, g, d)
    s = aff.min()
    scale = 1.0 + abs(s) + rho * float(np.real(np.vdot(d, d)))
    grad_scale = 1.0 + float(np.abs(c_rows).max()) + rho * float(np.abs(d).max())
    stationarity = float(np.abs(rho * d - np.conj(weights @ c_rows)).max()) / grad_scale
    feasibility = max(abs(weights.sum() - 1.0), float(max(0.0, -weights.min())))
    slackness = float(weights @ (aff - s)) / scale
    return max(stationarity, feasibility, slackness)


def solve_maxmin(c_rows, g, rho: float, tol: float = 1e-10) -> MaxMinSolution:
    """Solve the max-min problem above; raises SubproblemError if uncertified."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    c_rows = np.atleast_2d(np.asarray(c_rows, dtype=complex))
    g = np.asarray(g, dtype=float).reshape(-1)
    if c_rows.shape[0] != g.shape[0] or g.shape[0] == 0:
        raise ValueError("need one offset per affine function and at least one function")
    gram = np.real(c_rows @ c_rows.conj().T)
    weights, iterations = simplex_qp(2.0 * gram / rho, g)
    d = np.conj(weights @ c_rows) / rho
    value = -rho * float(np.real(np.vdot(d, d))) + float(affine_values(c_rows, g, d).min())
    res = kkt_residual(c_rows, g, rho, d, weights)
    sol = MaxMinSolution(d, weights, value, res, iterations)
    if not res <= tol:
        raise SubproblemError(f"KKT residual {res:.3e} above tolerance {tol:.1e}", sol)
    return sol


def _disk_kkt_residual(c_rows, g, rho, u, v, lam, mu) -> float:
    aff = affine_values(c_rows, g, v)
    s = aff.min()
    d = v - u
    scale = 1.0 + abs(s) + rho * float(np.real(np.vdot(d, d)))
    grad_scale = 1.0 + 2.0 * float(np.abs(c_rows).max()) + 2.0 * rho * float(np.abs(d).max())
    # d/dv of the Lagrangian in conjugate-gradient form, per element.
    grad = 2.0 * rho * d - 2.0 * np.conj(lam @ c_rows) + 2.0 * mu * v
    stationarity = float(np.abs(grad).max()) / grad_scale
    feasibility = max(abs(lam.sum() - 1.0), float(max(0.0, -lam.min())), float(max(0.0, -mu.min())),
                      float(max(0.0, np.abs(v).max() - 1.0)))
    slackness = (float(lam @ (aff - s)) + float(mu @ (1.0 - np.abs(v) ** 2))) / scale
    return max(stationarity, feasibility, slackness)


class _DiskNewton:
    """Primal-dual Newton system of the disk-constrained epigraph problem.

    Unknowns are (dv, dt, dlam, dmu); the equations are

        H dz + sum_i J_i' dlam_i = b_z,    -lam_i J_i dz - f_i dlam_i = b_i,

    with J_k = (-alpha_k, 1) for the pair constraints and J_l = (2 v_l e_l, 0)
    for the disks. ``solve`` eliminates the multipliers, then v through the
    2x2 block-diagonal part, leaving a (K+1) x (K+1) dense system.
    """

    def __init__(self, alpha, rs, v, lam, mu, f_lin, f_disk):
        self.alpha, self.rs, self.v = alpha, rs, v
        self.lam, self.mu, self.f_lin, self.f_disk = lam, mu, f_lin, f_disk
        k = alpha.shape[0]
        self.gamma = 2.0 * rs + 2.0 * mu
        beta = 4.0 * mu / -f_disk
        radius = np.abs(v)
        self.unit = np.where(radius > 0, v / np.where(radius > 0, radius, 1.0), 1.0)
        self.radial_gain = 1.0 / (self.gamma + beta * radius ** 2)
        w = lam / -f_lin
        kkt = np.empty((k + 1, k + 1))
        kkt[:k, :k] = np.real(np.conj(alpha) @ self.dinv(alpha).T)
        kkt[np.arange(k), np.arange(k)] += 1.0 / w
        kkt[:k, k] = -1.0
        kkt[k, :k] = 1.0
        kkt[k, k] = 0.0
        self.kkt = kkt

    def dinv(self, y):
        # Radial and tangential parts kept apart: the radial curvature blows
        # up as |v_l| -> 1 and must not cancel against y / gamma.
        y_rad = self.unit * np.real(np.conj(self.unit) * y)
        return (y - y_rad) / self.gamma + y_rad * self.radial_gain

    def solve(self, b_x, b_t, b_lin, b_disk):
        alpha, v, k = self.alpha, self.v, self.alpha.shape[0]
        rhs_x = b_x + (b_lin / -self.f_lin) @ alpha - 2.0 * v * (b_disk / -self.f_disk)
        rhs_t = b_t - float(np.sum(b_lin / -self.f_lin))
        rhs = np.empty(k + 1)
        rhs[:k] = -np.real(np.conj(alpha) @ self.dinv(rhs_x))
        rhs[k] = rhs_t
        sol = np.linalg.solve(self.kkt, rhs)
        dv = self.dinv(rhs_x + sol[:k] @ alpha)
        dt = sol[k]
        dlam = (-b_lin - self.lam * (dt - np.real(np.conj(alpha) @ dv))) / self.f_lin
        dmu = (-b_disk - self.mu * 2.0 * np.real(np.conj(v) * dv)) / self.f_disk
        return dv, dt, dlam, dmu

    def residual(self, step, rhs):
        dv, dt, dlam, dmu = step
        b_x, b_t, b_lin, b_disk = rhs
        alpha, v = self.alpha, self.v
        jlin = dt - np.real(np.conj(alpha) @ dv)
        jdisk = 2.0 * np.real(np.conj(v) * dv)
        r_x = b_x - (self.gamma * dv - dlam @ alpha + 2.0 * dmu * v)
        r_t = b_t - float(dlam.sum())
        r_lin = b_lin - (-self.lam * jlin - self.f_lin * dlam)
        r_disk = b_disk - (-self.mu * jdisk - self.f_disk * dmu)
        return r_x, r_t, r_lin, r_disk


def solve_maxmin_disk(c_rows, g, rho: float, u, tol: float = 1e-8,
                      max_iter: int = 100) -> MaxMinSolution:
    """maximize -rho ||v - u||^2 + min_k (2 Re{c_k v} + g_k)  s.t. |v_l| <= 1.

    Here the offsets ``g`` apply to ``v`` itself, not to ``d = v - u``. The
    returned ``d`` is ``v - u``; ``weights`` are the pair multipliers.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    c_rows = np.atleast_2d(np.asarray(c_rows, dtype=complex))
    g = np.asarray(g, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=complex).reshape(-1)
    k, n = c_rows.shape
    scale = max(rho, float(np.abs(c_rows).max()), 1e-300)
    cs, rs = c_rows / scale, rho / scale
    gs = (g - g.min()) / scale
    alpha = 2.0 * np.conj(cs)                 # 2 Re{c v} = <alpha, v>

    # Primal variables (v, t) for: minimize rs ||v - u||^2 - t subject to
    # f_lin = t - <alpha_k, v> - gs_k <= 0 and f_disk = |v_l|^2 - 1 <= 0.
    v = 0.5 * u / np.maximum(np.abs(u), 1.0)
    t = float((np.real(np.conj(alpha) @ v) + gs).min()) - 1.0
    lam = np.full(k, 1.0 / k)
    mu = np.full(n, 1.0)
    m_total = k + n

    def state(v, t, lam, mu, tau):
        f_lin = t - np.real(np.conj(alpha) @ v) - gs
        f_disk = v.real ** 2 + v.imag ** 2 - 1.0
        r_x = 2.0 * rs * (v - u) - lam @ alpha + 2.0 * mu * v
        r_t = lam.sum() - 1.0
        c_lin = -lam * f_lin - tau
        c_disk = -mu * f_disk - tau
        return f_lin, f_disk, r_x, r_t, c_lin, c_disk

    def norm(r_x, r_t, c_lin, c_disk):
        return np.sqrt(np.sum(r_x.real ** 2 + r_x.imag ** 2) + r_t ** 2
                       + c_lin @ c_lin + c_disk @ c_disk)

    it = 0
    for it in range(1, max_iter + 1):
        f_lin, f_disk, r_x, r_t, _, _ = state(v, t, lam, mu, 0.0)
        gap = -(lam @ f_lin + mu @ f_disk)
        res_dual = max(float(np.abs(r_x).max()), abs(r_t))
        if gap < tol * (1.0 + abs(t)) and res_dual < 0.1 * tol:
            break
        tau = 0.1 * gap / m_total
        c_lin = -lam * f_lin - tau
        c_disk = -mu * f_disk - tau

        newton = _DiskNewton(alpha, rs, v, lam, mu, f_lin, f_disk)
        rhs = (-r_x, -r_t, -c_lin, -c_disk)
        try:
            step_dir = newton.solve(*rhs)
            for _ in range(2):
                res = newton.residual(step_dir, rhs)
                step_dir = tuple(a + b for a, b in zip(step_dir, newton.solve(*res)))
        except np.linalg.LinAlgError:
            break
        dv, dt, dlam, dmu = step_dir

        step = min(1.0, 0.99 * _max_step(lam, dlam), 0.99 * _max_step(mu, dmu))
        norm0 = norm(r_x, r_t, c_lin, c_disk)
        while True:
            cand = (v + step * dv, t + step * dt, lam + step * dlam, mu + step * dmu)
            fl, fd, rx, rt, cl, cd = state(*cand, tau)
            if fl.max() < 0 and fd.max() < 0 and norm(rx, rt, cl, cd) <= (1.0 - 0.01 * step) * norm0:
                break
            step *= 0.5
            if step < 1e-14:
                break
        v, t, lam, mu = cand
        if step < 1e-10:
            break

    lam = np.maximum(lam, 0.0)
    lam = lam / lam.sum()
    mu = np.maximum(mu, 0.0)
    d = v - u
    value = -rho * float(np.real(np.vdot(d, d))) + float(affine_values(c_rows, g, v).min())
    res = _disk_kkt_residual(cs, gs, rs, u, v, lam, mu)
    sol = MaxMinSolution(d, lam, value, res, it)
    if not res <= tol:
        raise SubproblemError(f"KKT residual {res:.3e} above tolerance {tol:.1e}", sol)
    return sol
