"""Solver configuration, convergence traces and the data-fidelity operator."""

from dataclasses import dataclass, field, fields
import csv
import io
import math

import numpy as np

from ..errors import InvalidArgument
from ..grid import divergence_adjoint, gradient


@dataclass
class SolverConfig:
    """Tunables shared by the ADMM-type solvers.

    ``k_max=None`` picks the solver's own default (300 outer iterations for
    the L1/L2 and L1-L2 solvers, 500 for TV and Lp).  ``rho`` sets
    ``rho1 = rho2`` in one go.
    """

    lam: float = 0.1
    rho1: float = 1.0
    rho2: float = 1.0
    beta: float = 1.0
    box: tuple | None = None
    fidelity: str = "ls"
    k_max: int | None = None
    j_max: int = 5
    eps_rel: float = 1e-5
    cg_tol: float = 1e-8
    cg_max_iters: int = 50
    cg_tol_decay: float | None = None
    eps_h_min: float = 1e-12
    rng_seed: int = 0
    rho: float | None = None

    def __post_init__(self):
        if self.rho is not None:
            self.rho1 = self.rho2 = self.rho
        for name in ("lam", "rho1", "rho2", "beta", "eps_rel", "cg_tol", "eps_h_min"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive, got {getattr(self, name)}")
        if self.box is not None:
            lo, hi = self.box
            if not lo < hi:
                raise InvalidArgument(f"box requires lo < hi, got {self.box}")
            self.box = (float(lo), float(hi))
        if self.fidelity not in ("ls", "wls"):
            raise InvalidArgument(f"fidelity must be 'ls' or 'wls', got {self.fidelity!r}")
        for name in ("j_max", "cg_max_iters"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        if self.k_max is not None and self.k_max < 1:
            raise InvalidArgument("k_max must be >= 1")
        if self.cg_tol_decay is not None and not 0 < self.cg_tol_decay <= 1:
            raise InvalidArgument("cg_tol_decay must lie in (0, 1]")

    def cg_tolerance(self, k):
        if self.cg_tol_decay is None:
            return self.cg_tol
        return self.cg_tol * self.cg_tol_decay ** k

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


TRACE_COLUMNS = ("iter", "objective", "lagrangian", "rel_change", "h_norm", "rmse", "seconds")


@dataclass
class ConvergenceTrace:
    """Per-outer-iteration diagnostics.  ``lagrangian`` and ``h_norm`` are NaN
    for solvers without the ratio splitting; ``rmse`` is NaN without ground truth."""

    iteration: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    lagrangian: list = field(default_factory=list)
    rel_change: list = field(default_factory=list)
    h_norm: list = field(default_factory=list)
    rmse: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    grad_l1: list = field(default_factory=list)
    feasible: list = field(default_factory=list)
    cg_iters: list = field(default_factory=list)
    stop_reason: str = ""

    def record(self, **values):
        for name in ("iteration", "objective", "lagrangian", "rel_change", "h_norm",
                     "rmse", "seconds", "grad_l1", "feasible", "cg_iters"):
            getattr(self, name).append(values.get(name, math.nan))

    def __len__(self):
        return len(self.iteration)

    def series(self):
        """Numeric columns as arrays, excluding wall time."""
        return {name: np.asarray(getattr(self, name), dtype=np.float64)
                for name in ("iteration", "objective", "lagrangian", "rel_change", "h_norm",
                             "rmse", "grad_l1", "feasible", "cg_iters")}

    def to_csv(self, fh=None):
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(self.iteration, self.objective, self.lagrangian, self.rel_change,
                       self.h_norm, self.rmse, self.seconds):
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return out.getvalue() if fh is None else None


@dataclass
class WlsWeights:
    w: np.ndarray


def flat_measurements(f):
    """Sinogram (object or ``(detectors, angles)`` array) as a vector in matrix-row order."""
    if isinstance(f, np.ndarray):
        return f.T.ravel() if f.ndim == 2 else f.ravel()
    return f.ravel()


def wls_weights(f):
    """``W = diag(exp(-f))`` as a flat weight vector in matrix-row order."""
    data = flat_measurements(f)
    if not np.all(np.isfinite(data)):
        raise InvalidArgument("sinogram contains non-finite values")
    return WlsWeights(np.exp(-data))


def rel_change(new, old):
    """``||new - old|| / ||new||`` with ``0/0 = 0``."""
    num = float(np.linalg.norm(new - old))
    den = float(np.linalg.norm(new))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


class Fidelity:
    """``lam/2 (Au - f)^T W (Au - f)`` and the pieces the u-updates need."""

    def __init__(self, A, f, lam, weights=None):
        if A.grid_size is None:
            raise InvalidArgument("projector must act on a square image grid")
        self.A = A
        self.shape = (A.grid_size, A.grid_size)
        self.f = flat_measurements(f)
        if self.f.size != A.shape[0]:
            raise InvalidArgument(f"sinogram has {self.f.size} bins, projector has {A.shape[0]} rows")
        self.lam = lam
        self.w = None if weights is None else np.asarray(weights, dtype=np.float64).ravel()
        if self.w is not None and self.w.size != self.f.size:
            raise InvalidArgument("weight vector does not match the sinogram")
        wf = self.f if self.w is None else self.w * self.f
        self.atwf = A.rmatvec(wf).reshape(self.shape)

    def normal(self, u):
        """``A^T W A u``."""
        r = self.A.matvec(u.ravel())
        if self.w is not None:
            r = self.w * r
        return self.A.rmatvec(r).reshape(self.shape)

    def value(self, u):
        r = self.A.matvec(u.ravel()) - self.f
        wr = r if self.w is None else self.w * r
        return 0.5 * self.lam * float(np.dot(r, wr))


def resolve_weights(cfg, f, weights):
    if cfg.fidelity == "ls":
        return None
    if weights is not None:
        return weights.w if isinstance(weights, WlsWeights) else weights
    return wls_weights(f).w


def system_operator(fid, rho_grad, beta=0.0):
    """``u -> lam A^T W A u + rho_grad G^T G u + beta u``."""
    lam = fid.lam

    def apply(u):
        out = lam * fid.normal(u)
        out += rho_grad * divergence_adjoint(gradient(u))
        if beta:
            out += beta * u
        return out

    return apply
