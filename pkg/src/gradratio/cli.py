"""Command-line driver: phantom, project, noise, reconstruct, evaluate, profile.

Exit codes: 0 success, 2 invalid input, 3 numerical divergence, 4 I/O error.
"""

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys

import numpy as np

from . import imageio
from .assess import NoiseSpec, add_noise, circular_roi, rmse, ssim
from .errors import DivergenceDetected, InvalidArgument, InvalidState, NumericalBreakdown, Unsupported
from .phantom import shepp_logan
from .projector import Geometry, Sinogram, build_projector, forward, load_matrix, save_matrix
from .solvers import SOLVERS, SolverConfig, reconstruct_sart

log = logging.getLogger("gradratio")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

SOLVER_NAMES = sorted(SOLVERS) + ["sart"]

# reconstruct options that may come from a JSON config; flags win over file values
RECON_DEFAULTS = {
    "sinogram": None,
    "matrix": None,
    "truth": None,
    "out": None,
    "trace": None,
    "outdir": None,
    "pgm": None,
    "window": (0.0, 1.0),
    "solver": "l1l2",
    "lam": 0.1,
    "rho": None,
    "rho1": 1.0,
    "rho2": 1.0,
    "beta": 1.0,
    "box": None,
    "fidelity": "ls",
    "k_max": None,
    "j_max": 5,
    "eps_rel": 1e-5,
    "cg_tol": 1e-8,
    "cg_max_iters": 50,
    "eps_h_min": 1e-12,
    "seed": 0,
    "omega": 1.0,
    "sart_iters": 100,
    "sweep_lambda": None,
    "sweep_rho": None,
    "sweep_beta": None,
    "size": None,
    "beam": "parallel",
    "theta_max": 180.0,
    "angles": 31,
    "detectors": None,
    "pixel_size": 1.0,
    "source_radius": None,
    "detector_radius": None,
    "detector_span": None,
    "include_endpoint": False,
}
CONFIG_ALIASES = {"lambda": "lam"}


def _pair(text):
    if isinstance(text, (list, tuple)):
        vals = text
    else:
        vals = str(text).split(",")
    if len(vals) != 2:
        raise InvalidArgument(f"expected 'lo,hi', got {text!r}")
    try:
        return float(vals[0]), float(vals[1])
    except ValueError:
        raise InvalidArgument(f"expected two numbers, got {text!r}") from None


def _float_list(text):
    if isinstance(text, (list, tuple)):
        vals = list(text)
    else:
        vals = [v for v in str(text).split(",") if v.strip()]
    if not vals:
        raise InvalidArgument("parameter grid list must be nonempty")
    try:
        return [float(v) for v in vals]
    except ValueError:
        raise InvalidArgument(f"expected comma-separated numbers, got {text!r}") from None


def _require_file(path, what):
    if path is None:
        raise InvalidArgument(f"{what} is required")
    if not os.path.isfile(path):
        raise InvalidArgument(f"{what} {path!r} does not exist")
    return path


def _add_geometry_args(p, with_size):
    g = p.add_argument_group("geometry")
    sup = argparse.SUPPRESS if with_size else None
    if with_size:
        g.add_argument("--size", type=int, default=sup, help="grid size N (needed without --matrix)")
    g.add_argument("--beam", choices=("parallel", "fan"), default=sup or "parallel")
    g.add_argument("--theta-max", type=float, default=sup or 180.0, help="angular range in degrees")
    g.add_argument("--angles", type=int, default=sup or 31, help="number of projection angles")
    g.add_argument("--detectors", type=int, default=sup, help="detector bins (default round(sqrt2 N))")
    g.add_argument("--pixel-size", type=float, default=sup or 1.0)
    g.add_argument("--source-radius", type=float, default=sup, help="fan beam, pixel units")
    g.add_argument("--detector-radius", type=float, default=sup, help="fan beam, pixel units")
    g.add_argument("--detector-span", type=float, default=sup,
                   help="detector width (parallel) or fan angle in degrees (fan)")
    g.add_argument("--include-endpoint", action="store_true", default=sup or False,
                   help="place the last angle exactly at theta-max")


def _geometry(opts, size):
    return Geometry(kind=opts["beam"], grid_size=size, detector_count=opts["detectors"],
                    angle_count=opts["angles"], theta_max=opts["theta_max"],
                    source_radius=opts["source_radius"], detector_radius=opts["detector_radius"],
                    detector_span=opts["detector_span"], pixel_size=opts["pixel_size"],
                    include_endpoint=opts["include_endpoint"])


def build_parser():
    parser = argparse.ArgumentParser(prog="gradratio", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="write a Shepp-Logan phantom")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--variant", default="high", choices=("high", "low", "high_contrast", "low_contrast"))
    p.add_argument("--out", required=True)
    p.add_argument("--pgm", help="also write a 16-bit PGM preview")
    p.add_argument("--window", type=_pair, default=(0.0, 1.0), help="PGM display window lo,hi")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("project", help="forward-project an image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True, help="sinogram file (detectors x angles)")
    p.add_argument("--matrix-out", help="also export the system matrix (SPARSEPROJ)")
    _add_geometry_args(p, with_size=False)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("noise", help="add measurement noise to a sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--kind", choices=("gaussian", "poisson", "none"), default="gaussian")
    p.add_argument("--level", type=float, default=0.005, help="Gaussian sigma relative to max")
    p.add_argument("--i0", type=float, default=1e5, help="Poisson incident photon count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_noise)

    S = argparse.SUPPRESS
    p = sub.add_parser("reconstruct", help="reconstruct from a sinogram",
                       argument_default=S)
    p.add_argument("--config", help="flat JSON file with option values; flags take precedence")
    p.add_argument("--sinogram")
    p.add_argument("--matrix", help="SPARSEPROJ system matrix; otherwise built from geometry flags")
    p.add_argument("--truth", help="ground truth image; enables the rmse trace column")
    p.add_argument("--out", help="reconstruction image file")
    p.add_argument("--trace", help="trace CSV (default: <out>.trace.csv)")
    p.add_argument("--outdir", help="output directory for parameter sweeps")
    p.add_argument("--pgm", help="also write a 16-bit PGM preview")
    p.add_argument("--window", type=_pair, help="PGM display window lo,hi")
    p.add_argument("--solver", choices=SOLVER_NAMES)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--rho", type=float, help="sets rho1 and rho2 together")
    p.add_argument("--rho1", type=float)
    p.add_argument("--rho2", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--box", type=_pair, help="intensity bounds lo,hi")
    p.add_argument("--fidelity", choices=("ls", "wls"))
    p.add_argument("--k-max", type=int)
    p.add_argument("--j-max", type=int)
    p.add_argument("--eps-rel", type=float)
    p.add_argument("--cg-tol", type=float)
    p.add_argument("--cg-max-iters", type=int)
    p.add_argument("--eps-h-min", type=float, help="divergence sentinel for ||h||_2")
    p.add_argument("--seed", type=int)
    p.add_argument("--omega", type=float, help="SART relaxation")
    p.add_argument("--sart-iters", type=int)
    p.add_argument("--sweep-lambda", type=_float_list, help="comma-separated lambda grid")
    p.add_argument("--sweep-rho", type=_float_list, help="comma-separated rho grid")
    p.add_argument("--sweep-beta", type=_float_list, help="comma-separated beta grid")
    _add_geometry_args(p, with_size=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="RMSE and SSIM against a reference")
    p.add_argument("--recon", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--roi-radius", type=float, help="restrict metrics to a disc (pixels)")
    p.add_argument("--roi-center", type=_pair, help="disc centre as row,col")
    p.add_argument("--csv", help="append-free CSV with one metrics row")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("profile", help="extract a row or column profile as CSV")
    p.add_argument("--image", required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--row", type=int)
    which.add_argument("--col", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)
    return parser


def _write_csv(path, header, rows):
    with imageio.atomic_open(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_phantom(args):
    img = shepp_logan(args.size, args.variant)
    imageio.write_image(args.out, img)
    if args.pgm:
        imageio.write_pgm(args.pgm, img, args.window)
    log.info("wrote %s (%dx%d)", args.out, *img.shape)
    return EXIT_OK


def cmd_project(args):
    img = imageio.read_image(_require_file(args.image, "--image"))
    if img.shape[0] != img.shape[1]:
        raise InvalidArgument(f"image must be square, got {img.shape}")
    geom = _geometry(vars(args), img.shape[0])
    A = build_projector(geom)
    sino = forward(A, img)
    imageio.write_image(args.out, sino.data)
    if args.matrix_out:
        with imageio.atomic_open(args.matrix_out) as fh:
            save_matrix(fh, A)
    log.info("wrote sinogram %s of shape %s", args.out, sino.shape)
    return EXIT_OK


def cmd_noise(args):
    sino = imageio.read_image(_require_file(args.sinogram, "--sinogram"))
    spec = NoiseSpec(kind=args.kind, gaussian_level=args.level, i0=args.i0, seed=args.seed)
    imageio.write_image(args.out, add_noise(Sinogram(sino), spec).data)
    return EXIT_OK


def load_config(path):
    """Flat JSON object; keys use flag names with dashes or underscores."""
    _require_file(path, "--config")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise InvalidArgument(f"{path}: config must be a JSON object")
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        name = CONFIG_ALIASES.get(name, name)
        if name not in RECON_DEFAULTS:
            raise InvalidArgument(f"{path}: unknown config key {key!r}")
        out[name] = value
    return out


def resolve_reconstruct_options(args):
    opts = dict(RECON_DEFAULTS)
    given = vars(args)
    if given.get("config"):
        cfg = load_config(given["config"])
        for name in ("box", "window"):
            if cfg.get(name) is not None:
                cfg[name] = _pair(cfg[name])
        for name in ("sweep_lambda", "sweep_rho", "sweep_beta"):
            if cfg.get(name) is not None:
                cfg[name] = _float_list(cfg[name])
        opts.update(cfg)
    opts.update({k: v for k, v in given.items() if k in RECON_DEFAULTS})
    if opts["solver"] not in SOLVER_NAMES:
        raise InvalidArgument(f"unknown solver {opts['solver']!r}; choose from {SOLVER_NAMES}")
    return opts


def _solver_config(opts, lam=None, rho=None, beta=None):
    rho = opts["rho"] if rho is None else rho
    return SolverConfig(
        lam=opts["lam"] if lam is None else lam,
        rho1=opts["rho1"], rho2=opts["rho2"], rho=rho,
        beta=opts["beta"] if beta is None else beta,
        box=opts["box"], fidelity=opts["fidelity"], k_max=opts["k_max"], j_max=opts["j_max"],
        eps_rel=opts["eps_rel"], cg_tol=opts["cg_tol"], cg_max_iters=opts["cg_max_iters"],
        eps_h_min=opts["eps_h_min"], rng_seed=opts["seed"])


def _run_solver(opts, A, sino, truth, cfg):
    if opts["solver"] == "sart":
        return reconstruct_sart(A, sino, omega=opts["omega"], iters=opts["sart_iters"],
                                box=opts["box"], ground_truth=truth)
    return SOLVERS[opts["solver"]](A, sino, cfg, truth)


def _write_result(image_path, trace_path, u, trace, opts):
    if image_path:
        imageio.write_image(image_path, u)
        if opts["pgm"]:
            imageio.write_pgm(opts["pgm"], u, opts["window"])
    if trace_path:
        with imageio.atomic_open(trace_path, "w") as fh:
            trace.to_csv(fh)


def _system(opts, sino, truth):
    n_det, n_ang = sino.shape
    if opts["matrix"]:
        return load_matrix(_require_file(opts["matrix"], "--matrix"), n_det, n_ang)
    size = opts["size"] or (truth.shape[0] if truth is not None else None)
    if size is None:
        raise InvalidArgument("give --matrix, --size or --truth to fix the reconstruction grid")
    geom = _geometry(opts, size)
    if geom.shape != sino.shape:
        raise InvalidArgument(f"sinogram shape {sino.shape} does not match geometry {geom.shape}")
    return build_projector(geom)


def cmd_reconstruct(args):
    opts = resolve_reconstruct_options(args)
    sino = Sinogram(imageio.read_image(_require_file(opts["sinogram"], "--sinogram")))
    truth = imageio.read_image(_require_file(opts["truth"], "--truth")) if opts["truth"] else None
    A = _system(opts, sino, truth)
    if truth is not None and truth.size != A.shape[1]:
        raise InvalidArgument(f"truth has {truth.size} pixels, system expects {A.shape[1]}")

    sweep = any(opts[k] is not None for k in ("sweep_lambda", "sweep_rho", "sweep_beta"))
    if sweep:
        return _sweep(opts, A, sino, truth)

    if not opts["out"]:
        raise InvalidArgument("--out is required")
    trace_path = opts["trace"] or opts["out"] + ".trace.csv"
    cfg = _solver_config(opts) if opts["solver"] != "sart" else None
    try:
        u, trace = _run_solver(opts, A, sino, truth, cfg)
    except DivergenceDetected as exc:
        _write_result(opts["out"] if exc.image is not None else None, trace_path, exc.image,
                      exc.trace, opts)
        raise
    _write_result(opts["out"], trace_path, u, trace, opts)
    log.info("%s: %d iterations (%s)", opts["solver"], len(trace), trace.stop_reason)
    return EXIT_OK


def _tag(value):
    return f"{value:g}".replace("+", "")


def _sweep(opts, A, sino, truth):
    if opts["solver"] == "sart":
        raise InvalidArgument("parameter sweeps apply to the ADMM solvers only")
    if truth is None:
        raise InvalidArgument("a parameter sweep needs --truth to rank results")
    outdir = opts["outdir"]
    if not outdir:
        raise InvalidArgument("a parameter sweep needs --outdir")
    os.makedirs(outdir, exist_ok=True)
    lams = opts["sweep_lambda"] or [opts["lam"]]
    rhos = opts["sweep_rho"] or [opts["rho"]]
    betas = opts["sweep_beta"] or [opts["beta"]]
    rows = []
    for lam, rho, beta in itertools.product(lams, rhos, betas):
        stem = f"lam{_tag(lam)}"
        if rho is not None:
            stem += f"_rho{_tag(rho)}"
        stem += f"_beta{_tag(beta)}"
        cfg = _solver_config(opts, lam, rho, beta)
        try:
            u, trace = _run_solver(opts, A, sino, truth, cfg)
            status = trace.stop_reason
        except DivergenceDetected as exc:
            u, trace, status = exc.image, exc.trace, "divergence"
        _write_result(os.path.join(outdir, stem + ".img"),
                      os.path.join(outdir, stem + ".trace.csv"), u, trace, opts)
        err = rmse(truth, u.reshape(truth.shape)) if u is not None else math.inf
        sim = ssim(truth, u.reshape(truth.shape)) if u is not None else math.nan
        rows.append((err, lam, cfg.rho1, cfg.rho2, beta, sim, len(trace), status, stem))
        log.info("%s rmse=%.4g ssim=%.4f", stem, err, sim)
    rows.sort(key=lambda r: r[0])
    _write_csv(os.path.join(outdir, "summary.csv"),
               ["lambda", "rho1", "rho2", "beta", "rmse", "ssim", "iterations", "stop_reason", "trace"],
               [(r[1], r[2], r[3], r[4], repr(r[0]), repr(r[5]), r[6], r[7], r[8] + ".trace.csv")
                for r in rows])
    return EXIT_OK


def cmd_evaluate(args):
    recon = imageio.read_image(_require_file(args.recon, "--recon"))
    truth = imageio.read_image(_require_file(args.truth, "--truth"))
    roi = None
    if args.roi_radius is not None:
        roi = circular_roi(truth.shape, args.roi_radius, args.roi_center)
    err = rmse(truth, recon, roi)
    sim = ssim(truth, recon, roi)
    print(f"rmse={err!r} ssim={sim!r}")
    if args.csv:
        _write_csv(args.csv, ["rmse", "ssim"], [(repr(err), repr(sim))])
    return EXIT_OK


def cmd_profile(args):
    img = imageio.read_image(_require_file(args.image, "--image"))
    if args.row is not None:
        axis_len, idx = img.shape[0], args.row
        line = lambda: img[idx, :]  # noqa: E731
    else:
        axis_len, idx = img.shape[1], args.col
        line = lambda: img[:, idx]  # noqa: E731
    if not 0 <= idx < axis_len:
        raise InvalidArgument(f"index {idx} outside [0, {axis_len})")
    _write_csv(args.out, ["index", "value"], [(i, repr(float(v))) for i, v in enumerate(line())])
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DivergenceDetected as exc:
        print(f"error: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidArgument, InvalidState, Unsupported) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalBreakdown as exc:
        print(f"error: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
