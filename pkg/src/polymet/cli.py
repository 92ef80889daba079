"""Command-line front end: reproducible experiments driven by a JSON config.

Exit codes: 0 success, 1 config/IO error, 2 assertion threshold violated
(with --assert), 3 weakly-incoming verdict false (check command).
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import diagnostics, spectral
from .chain import ChainConfig, embed_trajectory, run_chain
from .config import load_config, resolution_rule
from .errors import PolymetError
from .geometry import is_weakly_incoming, span_check


def _summary(out_dir, name, config_path, outputs, started, extra=None):
    if out_dir is None:
        return
    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    doc = {
        "command": name,
        "config": os.path.abspath(config_path),
        "config_sha256": digest,
        "outputs": outputs,
        "wall_time_s": time.monotonic() - started,
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(out_dir, f"{name}_summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def cmd_check(cfg, args):
    verdict = is_weakly_incoming(cfg.polytope, cfg.family)
    spans = span_check(cfg.family)
    print(f"weakly_incoming: {verdict.ok}")
    print(f"span_check: {spans}")
    if not verdict.ok:
        face = verdict.witness_face
        coords = ",".join(repr(float(v)) for v in face.witness)
        print(f"witness_face: active={list(face.active)} point=({coords})")
        return 3
    return 0


def cmd_sample(cfg, args):
    params = cfg.chain_params()
    h = float(params["h"])
    steps = int(params["steps"])
    seed = int(params.get("seed", cfg.seed))
    config = ChainConfig(h=h, seed=seed,
                         thinning=int(params.get("thinning", 1)),
                         burn_in=int(params.get("burn_in", 0)))
    start = params.get("start")
    x0 = cfg.polytope.interior_point if start is None else np.array(start, float)
    traj = run_chain(cfg.polytope, cfg.family, config, x0, steps)
    out = args.out or "."
    path = os.path.join(out, "trajectory.csv")
    traj.to_csv(path)
    states = embed_trajectory(cfg.polytope, traj)
    means = states.mean(axis=0)
    print(f"acceptance_rate: {traj.acceptance_rate!r}")
    print("coordinate_means: " + " ".join(repr(float(v)) for v in means))
    return 0, [path]


def cmd_spectrum(cfg, args):
    params = cfg.spectral_params()
    h = float(params.get("h", (params.get("h_list") or [0.2])[0]))
    rule = resolution_rule(params.get("resolution"))
    grid = spectral.discretize(cfg.polytope, rule(h))
    op = spectral.assemble_metropolis(cfg.polytope, cfg.family, h, grid)
    rep = spectral.spectrum(op, k=int(params.get("eigen_count", 16)))
    out = args.out or "."
    path = os.path.join(out, "spectrum.csv")
    rep.export_csv(path)
    print(f"gap: {float(rep.gap)!r} rescaled_gap: {float(rep.gap / h ** 2)!r}")
    code = 0
    if args.assert_mode:
        lap = spectral.assemble_laplacian(cfg.polytope, cfg.family, grid)
        vals, clusters = spectral.neumann_spectrum(lap, k=4)
        nu1 = next((c for c, _ in clusters if c > 1e-8), None)
        if nu1 is None or abs(rep.gap / h ** 2 - nu1) > args.tol * nu1:
            code = 2
        print(f"nu1_reference: {nu1!r}")
    return code, [path]


def cmd_tv(cfg, args):
    params = cfg.diagnostics_params()
    spec_params = cfg.spectral_params()
    h = float(spec_params.get("h", 0.2))
    rule = resolution_rule(spec_params.get("resolution"))
    grid = spectral.discretize(cfg.polytope, rule(h))
    op = spectral.assemble_metropolis(cfg.polytope, cfg.family, h, grid)
    start_cell = int(params.get("start_cell", 0))
    n_max = int(params.get("n_max", 200))
    curve = diagnostics.tv_exact(op, start_cell, n_max)
    out = args.out or "."
    path = os.path.join(out, "tv.csv")
    curve.export_csv(path)
    rate, c_fit = diagnostics.fit_rate(curve)
    rep = spectral.spectrum(op, k=4)
    print(f"fitted_rate: {rate!r} fitted_C: {c_fit!r} gap: {float(rep.gap)!r}")
    code = 0
    if args.assert_mode:
        ref = -math.log(rep.eigenvalues[1])
        if abs(rate - ref) > args.tol * ref:
            code = 2
    return code, [path]


def cmd_sweep(cfg, args):
    params = cfg.spectral_params()
    h_list = [float(h) for h in params.get("h_list", [0.4, 0.2, 0.1])]
    rule = resolution_rule(params.get("resolution"))
    table = diagnostics.gap_sweep(cfg.polytope, cfg.family, h_list,
                                  resolution_rule=rule,
                                  k=int(params.get("eigen_count", 8)))
    out = args.out or "."
    path = os.path.join(out, "sweep.csv")
    table.export_csv(path)
    last = table.rows[-1]
    print(f"gap: {last.gap!r} gap_over_h2: {last.gap_over_h2!r} "
          f"nu1_reference: {table.nu1_reference!r}")
    code = 0
    if args.assert_mode:
        nu1 = table.nu1_reference
        if nu1 is None or abs(last.gap_over_h2 - nu1) > args.tol * nu1:
            code = 2
    return code, [path]


_COMMANDS = {
    "check": cmd_check,
    "sample": cmd_sample,
    "spectrum": cmd_spectrum,
    "tv": cmd_tv,
    "sweep": cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polymet",
        description="Local Metropolis chains on convex polytopes: "
                    "geometry checks, sampling, spectra, mixing diagnostics.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--assert", dest="assert_mode", action="store_true",
                        help="exit 2 if the command's criterion is violated")
    parser.add_argument("--tol", type=float, default=0.10)
    parser.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
    started = time.monotonic()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.doc["seed"] = args.seed
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        result = _COMMANDS[args.command](cfg, args)
    except PolymetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, tuple):
        code, outputs = result
    else:
        code, outputs = result, []
    _summary(args.out, args.command, args.config, outputs, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
