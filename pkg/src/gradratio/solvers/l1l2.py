"""ADMM for ``||grad u||_1 / ||grad u||_2 + lam/2 ||Au - f||^2``, optionally with ``u in [c, d]``.

Outer loop: ``u`` (inexact, via an inner ADMM), ``h`` (closed form), ``b2``.
Inner loop: ``u`` (CG), ``d`` (shrinkage), and with a box ``v`` (clamp)
plus its multiplier ``e``; ``d, b1, v, e`` carry over between outer
iterations.
"""

from dataclasses import dataclass
import logging
import math
import time

import numpy as np

from ..assess import rmse as rmse_metric
from ..errors import DivergenceDetected, InvalidState
from ..grid import divergence_adjoint, gradient, l1_norm, l2_norm
from ..prox import h_update, shrink
from .cg import cg_solve
from .config import (ConvergenceTrace, Fidelity, SolverConfig, rel_change, resolve_weights,
                     system_operator)

log = logging.getLogger(__name__)


@dataclass
class L1L2State:
    u: np.ndarray
    h: np.ndarray
    b2: np.ndarray
    d: np.ndarray
    b1: np.ndarray
    v: np.ndarray | None = None
    e: np.ndarray | None = None

    def copy(self):
        return L1L2State(*(None if x is None else x.copy() for x in
                           (self.u, self.h, self.b2, self.d, self.b1, self.v, self.e)))


def initial_h(shape):
    """Unit-norm field on the Neumann boundary slots, where ``grad u`` is always zero.

    Those entries lie in the null space of ``G^T``, so the arbitrary
    starting ``h`` exerts no pull on the first u-update.
    """
    h = np.zeros((2,) + tuple(shape))
    h[0, :, -1] = 1.0
    h[1, -1, :] = 1.0
    return h / l2_norm(h)


def zero_state(shape, box):
    z = np.zeros(shape)
    zf = np.zeros((2,) + tuple(shape))
    return L1L2State(u=z.copy(), h=initial_h(shape), b2=zf.copy(), d=zf.copy(), b1=zf.copy(),
                     v=z.copy() if box else None, e=z.copy() if box else None)


def ratio_term(gu):
    n2 = l2_norm(gu)
    return l1_norm(gu) / n2 if n2 > 0 else 0.0


def evaluate_lagrangian(u, h, b2, fidelity, rho2, box=None):
    """Augmented Lagrangian of the ratio splitting.

    ``||grad u||_1/||h|| + lam/2 ||Au - f||_W^2 + rho2 <b2, grad u - h> + rho2/2 ||h - grad u||^2``.

    Returns
    -------
    value : float
        The finite part.
    feasible : bool
        False when a box is given and ``u`` leaves it (the indicator term
        would be ``+inf``).
    """
    hn = l2_norm(h)
    if hn == 0.0:
        raise InvalidState("Lagrangian undefined for h = 0")
    gu = gradient(u)
    r = gu - h
    value = (l1_norm(gu) / hn + fidelity.value(u)
             + rho2 * float(np.vdot(b2, r)) + 0.5 * rho2 * float(np.vdot(r, r)))
    feasible = True
    if box is not None:
        feasible = bool(np.all((u >= box[0]) & (u <= box[1])))
    return value, feasible


def reconstruct_l1l2(A, f, cfg=None, ground_truth=None, *, weights=None, init=None,
                     callback=None):
    """L1/L2-on-the-gradient reconstruction; box-constrained when ``cfg.box`` is set.

    Parameters
    ----------
    A : SparseProjector
    f : Sinogram or ndarray of shape (detectors, angles)
    cfg : SolverConfig
    ground_truth : ndarray, optional
        Enables the RMSE column of the trace.
    weights : ndarray or WlsWeights, optional
        Overrides ``exp(-f)`` when ``cfg.fidelity == "wls"``.
    init : L1L2State, optional
        Starting point (defaults to zeros with a unit-norm ``h``).
    callback : callable, optional
        ``callback(k, state)`` after every outer iteration.

    Returns
    -------
    u : ndarray
    trace : ConvergenceTrace

    Raises
    ------
    DivergenceDetected
        If ``||h||_2`` falls below ``cfg.eps_h_min``.
    """
    cfg = cfg or SolverConfig()
    k_max = cfg.k_max or 300
    fid = Fidelity(A, f, cfg.lam, resolve_weights(cfg, f, weights))
    shape = fid.shape
    box = cfg.box
    rho1, rho2 = cfg.rho1, cfg.rho2
    beta = cfg.beta if box else 0.0
    apply_M = system_operator(fid, rho1 + rho2, beta)
    rng = np.random.default_rng(cfg.rng_seed)

    st = init.copy() if init is not None else zero_state(shape, box)
    if box and (st.v is None or st.e is None):
        st.v, st.e = st.u.copy(), np.zeros(shape)
    u, h, b2, d, b1, v, e = st.u, st.h, st.b2, st.d, st.b1, st.v, st.e
    lam_atf = cfg.lam * fid.atwf

    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    for k in range(1, k_max + 1):
        hn = l2_norm(h)
        tol = cfg.cg_tolerance(k)
        fixed = lam_atf + rho2 * divergence_adjoint(h - b2)
        u_outer = u
        cg_total = 0
        for _ in range(cfg.j_max):
            rhs = fixed + rho1 * divergence_adjoint(d - b1)
            if box:
                rhs += beta * (v - e)
            u_new, _, its = cg_solve(apply_M, rhs, u, tol, cfg.cg_max_iters)
            cg_total += its
            gu = gradient(u_new)
            d = shrink(gu + b1, 1.0 / (rho1 * hn))
            if box:
                v = np.clip(u_new + e, box[0], box[1])
                e = e + u_new - v
            b1 = b1 + gu - d
            inner_change = rel_change(u_new, u)
            u = u_new
            if inner_change <= cfg.eps_rel:
                break

        gu = gradient(u)
        a = l1_norm(gu)
        g = gu + b2
        degenerate = a == 0.0 and not np.any(g)
        if degenerate:
            # constant image with b2 = 0: the ratio term vanishes identically
            trace.stop_reason = "constant-image"
        else:
            h = h_update(g, a, rho2, rng).field
            b2 = b2 + gu - h
        hn = l2_norm(h)

        lag, feasible = evaluate_lagrangian(u, h, b2, fid, rho2, box) if hn > 0 else (math.nan, False)
        change = rel_change(u, u_outer)
        trace.record(
            iteration=k,
            objective=ratio_term(gu) + fid.value(u),
            lagrangian=lag,
            rel_change=change,
            h_norm=hn,
            rmse=rmse_metric(u, ground_truth) if ground_truth is not None else math.nan,
            seconds=time.perf_counter() - t0,
            grad_l1=a,
            feasible=float(feasible),
            cg_iters=cg_total,
        )
        st = L1L2State(u, h, b2, d, b1, v, e)
        if callback is not None:
            callback(k, st)
        if hn < cfg.eps_h_min:
            trace.stop_reason = "divergence"
            out = np.clip(u, *box) if box else u
            raise DivergenceDetected(
                f"||h||_2 = {hn:.3e} fell below {cfg.eps_h_min:g} at iteration {k}", trace, out)
        if degenerate:
            break
        if change <= cfg.eps_rel:
            trace.stop_reason = "converged"
            break
        log.debug("k=%d obj=%.6g L=%.6g rel=%.3e |h|=%.4g cg=%d", k, trace.objective[-1],
                  lag, change, hn, cg_total)
    else:
        trace.stop_reason = "k_max"

    if box:
        u = np.clip(u, box[0], box[1])
    return u, trace
