"""Comparison regularizers on the gradient, all solved with the same ADMM splitting.

``d = grad u`` is split off and handled by a proximal map (soft shrinkage
for TV, half thresholding for Lp), ``u`` by CG, and an optional box via
``v = u`` with multiplier ``e``.  L1-L2 wraps the TV iteration in a
difference-of-convex loop that linearizes ``-||grad u||_2``.
"""

from dataclasses import dataclass
import math
import time

import numpy as np

from ..assess import rmse as rmse_metric
from ..grid import divergence_adjoint, gradient, l1_norm, l2_norm
from ..prox import lp_prox, shrink
from .cg import cg_solve
from .config import (ConvergenceTrace, Fidelity, SolverConfig, rel_change, resolve_weights,
                     system_operator)


@dataclass
class AdmmState:
    u: np.ndarray
    d: np.ndarray
    b1: np.ndarray
    v: np.ndarray | None
    e: np.ndarray | None


class _GradientAdmm:
    """One ADMM step for ``R(d) + lam/2 ||Au-f||_W^2 - <q, grad u>`` s.t. ``d = grad u`` [, ``u = v in box``]."""

    def __init__(self, A, f, cfg, weights, prox):
        self.cfg = cfg
        self.fid = Fidelity(A, f, cfg.lam, resolve_weights(cfg, f, weights))
        self.box = cfg.box
        self.beta = cfg.beta if self.box else 0.0
        self.apply_M = system_operator(self.fid, cfg.rho1, self.beta)
        self.lam_atf = cfg.lam * self.fid.atwf
        self.prox = prox
        shape = self.fid.shape
        zf = np.zeros((2,) + shape)
        self.state = AdmmState(np.zeros(shape), zf, zf.copy(),
                               np.zeros(shape) if self.box else None,
                               np.zeros(shape) if self.box else None)

    def step(self, tol, linear=None):
        """Advance one iteration; ``linear`` is an extra ``G^T q`` term on the right-hand side."""
        s, cfg = self.state, self.cfg
        rhs = self.lam_atf + cfg.rho1 * divergence_adjoint(s.d - s.b1)
        if linear is not None:
            rhs = rhs + linear
        if self.box:
            rhs += self.beta * (s.v - s.e)
        u, _, its = cg_solve(self.apply_M, rhs, s.u, tol, cfg.cg_max_iters)
        gu = gradient(u)
        s.d = self.prox(gu + s.b1, 1.0 / cfg.rho1)
        if self.box:
            s.v = np.clip(u + s.e, *self.box)
            s.e = s.e + u - s.v
        s.b1 = s.b1 + gu - s.d
        change = rel_change(u, s.u)
        s.u = u
        return gu, change, its

    def output(self):
        u = self.state.u
        return np.clip(u, *self.box) if self.box else u.copy()


def _single_loop(A, f, cfg, ground_truth, weights, prox, penalty, callback):
    cfg = cfg or SolverConfig()
    k_max = cfg.k_max or 500
    admm = _GradientAdmm(A, f, cfg, weights, prox)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    for k in range(1, k_max + 1):
        gu, change, its = admm.step(cfg.cg_tolerance(k))
        u = admm.state.u
        trace.record(iteration=k, objective=penalty(gu) + admm.fid.value(u), rel_change=change,
                     rmse=rmse_metric(u, ground_truth) if ground_truth is not None else math.nan,
                     seconds=time.perf_counter() - t0, grad_l1=l1_norm(gu),
                     feasible=float(admm.box is None or bool(np.all((u >= admm.box[0]) & (u <= admm.box[1])))),
                     cg_iters=its)
        if callback is not None:
            callback(k, admm.state)
        if change <= cfg.eps_rel:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "k_max"
    return admm.output(), trace


def reconstruct_tv(A, f, cfg=None, ground_truth=None, *, weights=None, callback=None):
    """Anisotropic TV: ``||grad u||_1 + lam/2 ||Au - f||^2`` (500 iterations by default)."""
    return _single_loop(A, f, cfg, ground_truth, weights, shrink, l1_norm, callback)


def _half_power(gu):
    return float(np.sum(np.sqrt(np.abs(gu))))


def reconstruct_lp(A, f, cfg=None, ground_truth=None, *, weights=None, callback=None):
    """``sum |grad u|^(1/2) + lam/2 ||Au - f||^2`` with half thresholding in place of shrinkage."""
    return _single_loop(A, f, cfg, ground_truth, weights, lp_prox, _half_power, callback)


def l1_minus_l2(gu):
    return l1_norm(gu) - l2_norm(gu)


def reconstruct_l1_minus_l2(A, f, cfg=None, ground_truth=None, *, weights=None, callback=None):
    """``||grad u||_1 - ||grad u||_2 + lam/2 ||Au - f||^2`` by DCA.

    Each outer step fixes ``q = grad u / ||grad u||_2`` (0 when the gradient
    vanishes) and runs ``cfg.j_max`` TV-ADMM iterations on the convex
    majorant ``||grad u||_1 - <q, grad u>``; ADMM variables carry over.
    """
    cfg = cfg or SolverConfig()
    k_max = cfg.k_max or 300
    admm = _GradientAdmm(A, f, cfg, weights, shrink)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    gu = gradient(admm.state.u)
    for k in range(1, k_max + 1):
        n2 = l2_norm(gu)
        q = gu / n2 if n2 > 0 else np.zeros_like(gu)
        linear = divergence_adjoint(q)
        u_outer = admm.state.u
        its_total = 0
        for _ in range(cfg.j_max):
            gu, inner_change, its = admm.step(cfg.cg_tolerance(k), linear)
            its_total += its
            if inner_change <= cfg.eps_rel:
                break
        u = admm.state.u
        change = rel_change(u, u_outer)
        trace.record(iteration=k, objective=l1_minus_l2(gu) + admm.fid.value(u), rel_change=change,
                     rmse=rmse_metric(u, ground_truth) if ground_truth is not None else math.nan,
                     seconds=time.perf_counter() - t0, grad_l1=l1_norm(gu),
                     feasible=float(admm.box is None or bool(np.all((u >= admm.box[0]) & (u <= admm.box[1])))),
                     cg_iters=its_total)
        if callback is not None:
            callback(k, admm.state)
        if change <= cfg.eps_rel:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "k_max"
    return admm.output(), trace
