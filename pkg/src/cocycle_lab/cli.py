"""Command-line front end: deterministic runs, CSV/JSON emission.

Every CSV body is preceded by a single '#'-prefixed JSON header carrying
the effective configuration, the package version and a config hash, so
each output file is self-describing.  Floats are printed with 17
significant digits and rows in a fixed order, so identical configs give
byte-identical bodies.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .linalg import DomainError, rzr_decompose
from .rotation import (RotationNumber, TruncationError, brjuno_sum,
                       check_condition_A, convergents)
from .model import ModelError, StepProfile, model_from_file, verify_hypotheses
from .dynamics import certify_uh, lyapunov, validate_lemma2
from .collisions import collision_table, dominance
from .resonance import (PreconditionError, find_resonance, lemma3_validate,
                        lemma4_validate, lemma5_validate)

USAGE_EXIT = 64
REFUSAL_EXIT = 2


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def _header(config: dict) -> str:
    payload = {k: v for k, v in sorted(config.items()) if v is not None}
    blob = json.dumps(payload, sort_keys=True, default=str)
    digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
    head = {"version": __version__, "config": payload, "config_hash": digest}
    return "# " + json.dumps(head, sort_keys=True, default=str)


def _emit(args, name: str, columns, rows, config: dict):
    lines = [_header(config), ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _emit_json(args, name: str, obj, config: dict):
    payload = {"version": __version__, "config": config, "result": obj}
    text = json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _parse_omega(spec: str, depth: int) -> RotationNumber:
    if spec.startswith("golden"):
        # keep a couple of spare quotients beyond the report depth
        d = int(spec.split(":", 1)[1]) if ":" in spec else max(40, depth + 2)
        return RotationNumber.golden(d)
    if "," in spec or " " in spec.strip():
        quotients = [int(tok) for tok in spec.replace(",", " ").split()]
        return RotationNumber.from_quotients(quotients)
    value = float(spec)
    if value.is_integer() and value >= 1:
        raise DomainError("omega must be a float in (0,1), 'golden', or a quotient list")
    return RotationNumber.from_float(value, depth)


def _cmd_decompose(args) -> int:
    d = rzr_decompose(args.l2, args.phi, args.l1)
    cfg = {"command": "decompose", "l1": args.l1, "l2": args.l2, "phi": args.phi}
    _emit(args, "decompose.csv", ["psi", "chi", "mu", "a", "b", "beta"],
          [[d.psi, d.chi, d.mu, d.a, d.b, d.beta]], cfg)
    return 0


def _cmd_rotation(args) -> int:
    omega = _parse_omega(args.omega, args.depth)
    cfg = {"command": f"rotation {args.mode}", "omega": args.omega,
           "depth": args.depth, "h": args.h, "ct": args.ct, "cdelta": args.cdelta}
    if args.mode == "cf":
        rows = [[n + 1, p, q] for n, (p, q) in enumerate(convergents(omega, args.depth))]
        _emit(args, "rotation_cf.csv", ["n", "p_n", "q_n"], rows, cfg)
        return 0
    if args.mode == "brjuno":
        rep = brjuno_sum(omega, args.depth)
        conv = convergents(omega, args.depth)
        rows = [[n + 1, conv[n][0], conv[n][1], rep.partial_sums[n]]
                for n in range(args.depth)]
        _emit(args, "rotation_brjuno.csv", ["n", "p_n", "q_n", "partial_sum"], rows, cfg)
        return 0
    rep = check_condition_A(omega, args.h, args.ct, args.cdelta, args.depth)
    conv = convergents(omega, args.depth)
    sub = set(rep.subsequence_indices)
    chain_pos = {rep.subsequence_indices[j] for j in rep.chain} if rep.chain else set()
    deltas = dict(zip(rep.subsequence_indices, rep.delta_sequence))
    rows = []
    for n in range(1, args.depth):
        rows.append([n, conv[n - 1][0], conv[n - 1][1],
                     rep.passes_a1[n - 1], n in chain_pos,
                     deltas.get(n)])
    _emit(args, "rotation_conda.csv",
          ["n", "p_n", "q_n", "pass_A1", "pass_A2", "delta_j"], rows, cfg)
    return 0


def _cmd_model_check(args) -> int:
    model = model_from_file(args.config)
    rep = verify_hypotheses(model, args.grid)
    cfg = {"command": "model-check", "config": args.config, "grid": args.grid}
    _emit_json(args, "model_check.json", {
        "zeros": list(rep.zeros), "h1": rep.h1_pass,
        "slope_min": rep.slope_min, "slope_max": rep.slope_max, "h2": rep.h2_pass,
        "c3_witness": rep.c3_witness, "h3": rep.h3_pass,
        "winding": rep.winding, "h4": rep.h4_pass,
        "lambda_min": rep.lambda_min, "h5": rep.h5_pass,
        "dist_derivative": rep.dist_derivative, "h6": rep.h6_pass,
        "all_pass": rep.all_pass(),
    }, cfg)
    return 0


def _cmd_lyapunov(args) -> int:
    model = model_from_file(args.config)
    est = lyapunov(model, n_steps=args.steps, grid=args.grid)
    cfg = {"command": "lyapunov", "config": args.config,
           "steps": args.steps, "grid": args.grid}
    rows = [[x, v] for x, v in zip(est.sample_points, est.pointwise)]
    rows.append(["integrated", est.integrated])
    _emit(args, "lyapunov.csv", ["x", "lambda"], rows, cfg)
    return 0


def _cmd_certify(args) -> int:
    model = model_from_file(args.config)
    window = None
    if args.window:
        n, nm, npl, delta = args.window.split(",")
        window = (int(n), int(nm), int(npl), float(delta))
    cert = certify_uh(model, args.steps, args.grid, window=window)
    cfg = {"command": "certify", "config": args.config, "steps": args.steps,
           "grid": args.grid, "window": args.window}
    _emit_json(args, "certificate.json", {
        "status": cert.status, "block_length": cert.block_length,
        "grid_size": cert.grid_size, "min_log_norm": cert.min_log_norm,
        "min_norm_margin": cert.min_norm_margin,
        "lipschitz_slack": cert.lipschitz_slack,
        "lambda0_estimate": cert.lambda0_estimate,
        "c_estimate": cert.c_estimate,
        "direction_separation": cert.direction_separation,
        "equivariance_residual": cert.equivariance_residual,
        "window_margin": cert.window_margin,
        "window_floor": cert.window_floor,
    }, cfg)
    return 0


def _cmd_collisions(args) -> int:
    model = model_from_file(args.config)
    verdict = dominance(model, args.delta, args.horizon)
    cfg = {"command": "collisions", "config": args.config,
           "delta": args.delta, "horizon": args.horizon}
    rows = [[j, jp, tau, args.delta]
            for (j, jp), tau in sorted(verdict.table.tau.items())]
    _emit(args, "collisions.csv", ["j", "jp", "tau", "delta"], rows, cfg)
    _emit_json(args, "dominance.json",
               {"verdict": verdict.verdict, "tau0": verdict.table.tau0}, cfg)
    return 0


def _cmd_resonance_scan(args) -> int:
    model = model_from_file(args.config)
    lo, hi = (float(s) for s in args.t_range.split(","))
    win = find_resonance(model, args.order, (lo, hi), args.delta,
                         certify_steps=args.steps or None,
                         grid_size=args.grid)
    cfg = {"command": "resonance-scan", "config": args.config,
           "order": args.order, "t_range": args.t_range, "delta": args.delta}
    _emit_json(args, "resonance_window.json", {
        "n": win.n, "t0": win.t0, "t_res": win.t_res,
        "delta_n_res": win.delta_n_res,
        "delta_n_res_formula": win.delta_n_res_formula,
        "h": win.h, "h_minus": win.h_minus, "h_plus": win.h_plus,
        "x1": win.x1, "x2": win.x2,
        "n_minus": win.n_minus, "n_plus": win.n_plus,
        "certified_at_tres": win.certified_at_tres,
        "tau0": win.diagnostics.get("tau0"),
    }, cfg)
    return 0


def _cmd_validate_lemma(args) -> int:
    cfg = {"command": f"validate-lemma {args.which}"}
    if args.which == 2:
        model = model_from_file(args.config)
        rep = verify_hypotheses(model)
        out = validate_lemma2(model, c3=rep.c3_witness)
        cfg["config"] = args.config
        _emit_json(args, "lemma2.json", out, cfg)
        return 0
    if args.which == 3:
        out = lemma3_validate(args.l1, args.l2)
        cfg.update({"l1": args.l1, "l2": args.l2})
        _emit_json(args, "lemma3.json", out, cfg)
        return 0
    p1 = StepProfile(args.lm1, args.lp1, args.k1)
    p2 = StepProfile(args.lm2, args.lp2, args.k2)
    if args.which == 4:
        out = lemma4_validate(args.l1, args.l2, p1, p2, args.delta_shift)
        cfg.update({"l1": args.l1, "l2": args.l2, "delta_shift": args.delta_shift})
        _emit_json(args, "lemma4.json", out, cfg)
        return 0
    l3s = np.geomspace(args.l3_min, args.l3_max, args.l3_count)
    out = lemma5_validate(args.l1, args.l2, l3s, p1, p2)
    out["rows"] = out["rows"]
    cfg.update({"l1": args.l1, "l2": args.l2,
                "l3_min": args.l3_min, "l3_max": args.l3_max})
    _emit_json(args, "lemma5.json", out, cfg)
    return 0


def _sweep_cell(payload):
    (config_path, t, lam, steps, grid) = payload
    model = model_from_file(config_path)
    kwargs = dict(model.builder_kwargs)
    kwargs["t"] = t
    kwargs["lambda0"] = lam
    try:
        m = model.builder(**kwargs)
    except ModelError:
        return (t, lam, "inadmissible", math.nan, math.nan)
    cert = certify_uh(m, steps, grid)
    return (t, lam, cert.status, cert.min_log_norm, cert.direction_separation)


def _cmd_sweep(args) -> int:
    t_lo, t_hi, t_n = args.t_grid.split(",")
    l_lo, l_hi, l_n = args.lambda_grid.split(",")
    ts = np.linspace(float(t_lo), float(t_hi), int(t_n))
    lams = np.geomspace(float(l_lo), float(l_hi), int(l_n))
    cells = [(args.config, float(t), float(lam), args.steps, args.grid)
             for t in ts for lam in lams]
    workers = args.workers or int(os.environ.get("COCYCLE_LAB_WORKERS", "1"))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    rows.sort(key=lambda r: (r[0], r[1]))
    cfg = {"command": "sweep", "config": args.config, "t_grid": args.t_grid,
           "lambda_grid": args.lambda_grid, "steps": args.steps,
           "grid": args.grid, "workers": workers}
    _emit(args, "sweep.csv",
          ["t", "lambda0", "status", "min_log_norm", "separation"], rows, cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cocycle-lab",
        description="Numerical lab for SL(2,R) cocycles over circle rotations")
    ap.add_argument("--out", default=None, help="output directory (default stdout)")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("decompose", help="closed-form R.Z.R of Z(l2)R(phi)Z(l1)")
    p.add_argument("--l1", type=float, required=True)
    p.add_argument("--l2", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("rotation", help="continued-fraction reports")
    p.add_argument("mode", choices=["cf", "brjuno", "conda"])
    p.add_argument("--omega", required=True,
                   help="'golden[:depth]', quotient list '1,2,3', or float")
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--h", default="log1p")
    p.add_argument("--ct", type=float, default=3.0)
    p.add_argument("--cdelta", type=float, default=0.5)
    p.set_defaults(func=_cmd_rotation)

    p = sub.add_parser("model-check", help="verify the structural hypotheses")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", type=int, default=1 << 14)
    p.set_defaults(func=_cmd_model_check)

    p = sub.add_parser("lyapunov", help="Lyapunov exponent estimates")
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=_cmd_lyapunov)

    p = sub.add_parser("certify", help="finite uniform-hyperbolicity certificate")
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--grid", type=int, default=1 << 14)
    p.add_argument("--window", default=None,
                   help="collision window 'n,n_minus,n_plus,delta'")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("collisions", help="collision table and dominance verdict")
    p.add_argument("--config", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--horizon", type=int, default=1_000_000)
    p.set_defaults(func=_cmd_collisions)

    p = sub.add_parser("resonance-scan", help="resonant window in the parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--t-range", default="-0.01,0.01")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--grid", type=int, default=1 << 14)
    p.set_defaults(func=_cmd_resonance_scan)

    p = sub.add_parser("validate-lemma", help="asymptotic product validators")
    p.add_argument("which", type=int, choices=[2, 3, 4, 5])
    p.add_argument("--config", default=None, help="model file (lemma 2)")
    p.add_argument("--l1", type=float, default=1e4)
    p.add_argument("--l2", type=float, default=1e2)
    p.add_argument("--lm1", type=float, default=-2.0 / 3.0)
    p.add_argument("--lp1", type=float, default=0.75)
    p.add_argument("--k1", type=float, default=1.0)
    p.add_argument("--lm2", type=float, default=2.0 / 3.0)
    p.add_argument("--lp2", type=float, default=-0.5)
    p.add_argument("--k2", type=float, default=-1.0)
    p.add_argument("--delta-shift", type=float, default=0.0)
    p.add_argument("--l3-min", type=float, default=10.0)
    p.add_argument("--l3-max", type=float, default=1000.0)
    p.add_argument("--l3-count", type=int, default=25)
    p.set_defaults(func=_cmd_validate_lemma)

    p = sub.add_parser("sweep", help="certificate grid over t x lambda0")
    p.add_argument("--config", required=True)
    p.add_argument("--t-grid", required=True, help="lo,hi,count")
    p.add_argument("--lambda-grid", required=True, help="lo,hi,count")
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--grid", type=int, default=1 << 12)
    p.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on unknown commands or malformed flags; that is a
        # usage error here, not a validation refusal
        return USAGE_EXIT if exc.code else 0
    if not getattr(args, "func", None):
        ap.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        return args.func(args)
    except (PreconditionError, DomainError, ModelError, TruncationError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return REFUSAL_EXIT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
