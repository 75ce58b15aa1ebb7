"""L1/L2 gradient regularization for limited-angle CT, with comparison solvers."""

from .assess import NoiseSpec, add_noise, circular_roi, rms_error, rmse, ssim
from .errors import (DivergenceDetected, InvalidArgument, InvalidState, NumericalBreakdown,
                     Unsupported)
from .grid import divergence_adjoint, gradient, laplacian, norms
from .phantom import shepp_logan
from .projector import Geometry, Sinogram, SparseProjector, adjoint, build_projector, forward
from .prox import box_project, h_update, lp_prox, shrink
from .solvers import (SolverConfig, reconstruct_l1_minus_l2, reconstruct_l1l2, reconstruct_lp,
                      reconstruct_sart, reconstruct_tv)

__version__ = "0.1.0"
