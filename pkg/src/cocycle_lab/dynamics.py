"""Cocycle evaluation, Lyapunov estimates and finite hyperbolicity certificates.

All grid evaluations are vectorized over the base points as (n, 2, 2)
stacks; norms never overflow because running products are rescaled every
few steps with the logs accumulated separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DomainError, Mat2, operator_norm_arrays
from .model import CocycleModel

RENORM_EVERY = 32
MAX_COCYCLE_STEPS = 10_000_000
_LOG_HUGE = 600.0  # stay clear of the double overflow threshold ~709


class OverflowStepError(OverflowError):
    """Cocycle entries left the double range despite renormalization."""


def _fiber_entries(model: CocycleModel, xs: np.ndarray):
    """Entries of A(x) = R(phi).Z(lambda) for an array of base points."""
    p = model.phi(xs)
    lv = model.lam(xs)
    c, s = np.cos(p), np.sin(p)
    a = np.empty(xs.shape + (2, 2))
    a[..., 0, 0] = lv * c
    a[..., 0, 1] = s / lv
    a[..., 1, 0] = -lv * s
    a[..., 1, 1] = c / lv
    return a


def cocycle_scaled(model: CocycleModel, x: float, n: int):
    """Ordered product over n rotation steps as (unit-scale matrix, log scale).

    Negative n returns the inverse of the product over the backward window,
    matching M(x, -n) = [A(x - n w) ... A(x - w)]^(-1).
    """
    if abs(n) > MAX_COCYCLE_STEPS:
        raise DomainError(f"|n| exceeds the configured maximum {MAX_COCYCLE_STEPS}")
    w = model.omega.value
    if n == 0:
        return np.eye(2), 0.0
    if n < 0:
        unit, logs = cocycle_scaled(model, x - (-n) * w, -n)
        # the true product has determinant 1, so its inverse is exactly the
        # adjugate: (e^L U)^(-1) = e^L adj(U); never divide by the computed
        # determinant of the unit part (it underflows for large L)
        adj = np.array([[unit[1, 1], -unit[0, 1]], [-unit[1, 0], unit[0, 0]]])
        return adj, logs
    prod = np.eye(2)
    logs = 0.0
    for start in range(0, n, RENORM_EVERY):
        count = min(RENORM_EVERY, n - start)
        ks = start + np.arange(count)
        mats = _fiber_entries(model, (x + ks * w) % 1.0)
        for i in range(count):
            prod = mats[i] @ prod
        scale = math.sqrt(float(np.sum(prod * prod)) / 2.0)
        if not math.isfinite(scale) or scale == 0.0:
            raise OverflowStepError(f"renormalization failed at step {start + count}")
        prod = prod / scale
        logs += math.log(scale)
    return prod, logs


def cocycle(model: CocycleModel, x: float, n: int) -> Mat2:
    """The cocycle matrix M(x, n); raises when the entries exceed doubles."""
    unit, logs = cocycle_scaled(model, x, n)
    if logs > _LOG_HUGE:
        raise OverflowStepError(
            f"cocycle norm e^{logs:.1f} at step {n} does not fit a double")
    m = unit * math.exp(logs)
    return Mat2(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))


def product_grid(model: CocycleModel, xs: np.ndarray, n_steps: int):
    """Batched cocycle products: (unit-scale (n,2,2) stack, per-point log scale)."""
    xs = np.asarray(xs, dtype=float)
    w = model.omega.value
    prod = np.broadcast_to(np.eye(2), xs.shape + (2, 2)).copy()
    logs = np.zeros(xs.shape)
    for start in range(0, n_steps, RENORM_EVERY):
        count = min(RENORM_EVERY, n_steps - start)
        for k in range(start, start + count):
            a = _fiber_entries(model, (xs + k * w) % 1.0)
            prod = a @ prod
        scale = np.sqrt(np.einsum("...ij,...ij->...", prod, prod) / 2.0)
        prod /= scale[..., None, None]
        logs += np.log(scale)
    return prod, logs


def log_norm_grid(model: CocycleModel, xs: np.ndarray, n_steps: int) -> np.ndarray:
    """log ||M(x, N)|| for every grid point, batched and renormalized."""
    prod, logs = product_grid(model, xs, n_steps)
    return logs + np.log(operator_norm_arrays(prod))


def psi_angles_grid(units: np.ndarray) -> np.ndarray:
    """Angle sum psi = Phi + chi of each matrix in an (n, 2, 2) stack.

    With M = R(Phi) Z(mu) R(chi), the rotation part of the polar form has
    angle Phi + chi = atan2(m21 - m12, m11 + m22); it is scale-free.
    """
    e = units[..., 0, 0] + units[..., 1, 1]
    h = units[..., 1, 0] - units[..., 0, 1]
    return np.arctan2(-h, e)


def window_angle_margin(model: CocycleModel, n: int, n_minus: int, n_plus: int,
                        delta: float, grid_size: int = 4096) -> float:
    """min over the collision neighborhood of dist(psi_H(x), pi/2 mod pi).

    psi_H is the left rotation angle of the collision-window product
    M(x - n_minus w, n_minus + n + n_plus).  A resonant alignment keeps it
    uniformly away from pi/2 mod pi (the two critical crossings compose to
    0 mod pi); a misaligned crossing drags it through pi/2 at some x.
    """
    c0 = model.bumps[0].center if model.bumps else 0.0
    w = model.omega.value
    xs = (c0 - delta) + 2.0 * delta * (np.arange(grid_size) + 0.5) / grid_size
    units, _ = product_grid(model, (xs - n_minus * w) % 1.0, n_minus + n + n_plus)
    psi = psi_angles_grid(units)
    dist = np.abs((psi % math.pi) - 0.5 * math.pi)
    return float(np.min(dist))


@dataclass(frozen=True)
class LyapunovEstimate:
    pointwise: tuple[float, ...]
    sample_points: tuple[float, ...]
    integrated: float
    n_steps: int
    renorm_count: int
    norm_checkpoints: tuple[tuple[int, float], ...]


def lyapunov(model: CocycleModel, x0=None, n_steps: int = 100_000,
             burn_in: int = 0, grid: int = 64) -> LyapunovEstimate:
    """Top Lyapunov exponent by tracked-vector growth, averaged over a grid.

    x0 may be a single point, an array of starting points, or None for a
    uniform grid.  The estimate is (1/N) sum log ||A v|| with per-step
    renormalization of v; norm-based block estimates at N/4, N/2, N are
    recorded as a cross-check on one sample point.
    """
    if n_steps < 1000:
        raise DomainError("lyapunov needs n_steps >= 1000")
    if x0 is None:
        xs = (np.arange(grid) + 0.5) / grid
    else:
        xs = np.atleast_1d(np.asarray(x0, dtype=float))
    w = model.omega.value
    v = np.zeros(xs.shape + (2,))
    v[..., 0] = 1.0
    v[..., 1] = 0.5  # generic direction, not an axis
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    pos = xs % 1.0
    for _ in range(burn_in):
        a = _fiber_entries(model, pos)
        v = np.einsum("...ij,...j->...i", a, v)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        pos = (pos + w) % 1.0
    acc = np.zeros(xs.shape)
    for _ in range(n_steps):
        a = _fiber_entries(model, pos)
        v = np.einsum("...ij,...j->...i", a, v)
        nrm = np.linalg.norm(v, axis=-1)
        acc += np.log(nrm)
        v /= nrm[..., None]
        pos = (pos + w) % 1.0
    pointwise = acc / n_steps
    checkpoints = []
    for frac_n in (n_steps // 4, n_steps // 2, n_steps):
        if frac_n >= 1:
            ln = float(log_norm_grid(model, np.array([xs.flat[0]]), frac_n)[0])
            checkpoints.append((frac_n, ln / frac_n))
    return LyapunovEstimate(
        pointwise=tuple(float(p) for p in pointwise.flat),
        sample_points=tuple(float(p) for p in xs.flat),
        integrated=float(np.mean(pointwise)),
        n_steps=n_steps, renorm_count=n_steps,
        norm_checkpoints=tuple(checkpoints),
    )


def _push_angles_forward(model: CocycleModel, xs: np.ndarray, n_iter: int):
    """Projective forward pushforward: direction of M(x - n w, n) v0 at x."""
    w = model.omega.value
    v = np.zeros(xs.shape + (2,))
    v[..., 0] = math.cos(0.7)
    v[..., 1] = math.sin(0.7)
    pos = (xs - n_iter * w) % 1.0
    for _ in range(n_iter):
        a = _fiber_entries(model, pos)
        v = np.einsum("...ij,...j->...i", a, v)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        pos = (pos + w) % 1.0
    return np.arctan2(v[..., 1], v[..., 0]) % math.pi


def _push_angles_backward(model: CocycleModel, xs: np.ndarray, n_iter: int):
    """Projective backward pushforward: direction of M(x, n)^(-1) v0 at x."""
    w = model.omega.value
    v = np.zeros(xs.shape + (2,))
    v[..., 0] = math.cos(0.7)
    v[..., 1] = math.sin(0.7)
    for k in range(n_iter - 1, -1, -1):
        a = _fiber_entries(model, (xs + k * w) % 1.0)
        # inverse of SL(2): adjugate (determinant 1 up to rounding)
        inv = np.empty_like(a)
        inv[..., 0, 0] = a[..., 1, 1]
        inv[..., 0, 1] = -a[..., 0, 1]
        inv[..., 1, 0] = -a[..., 1, 0]
        inv[..., 1, 1] = a[..., 0, 0]
        v = np.einsum("...ij,...j->...i", inv, v)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return np.arctan2(v[..., 1], v[..., 0]) % math.pi


def _proj_dist(a, b):
    """Distance between directions (angles mod pi)."""
    d = np.abs(a - b) % math.pi
    return np.minimum(d, math.pi - d)


def oseledets_directions(model: CocycleModel, grid_size: int = 1024,
                         n_iter: int = 200, residual_tol: float = 1e-6):
    """Unstable/stable direction fields with their equivariance residuals.

    Returns (xs, eu_angles, es_angles, eu_residual, es_residual, converged).
    The residual at x is the projective distance between A(x) E(x) and
    E(x + w), with E evaluated fresh at the shifted point.
    """
    if n_iter < 100:
        raise DomainError("oseledets_directions needs n_iter >= 100")
    xs = (np.arange(grid_size) + 0.5) / grid_size
    w = model.omega.value
    eu = _push_angles_forward(model, xs, n_iter)
    es = _push_angles_backward(model, xs, n_iter)
    eu_shift = _push_angles_forward(model, (xs + w) % 1.0, n_iter)
    es_shift = _push_angles_backward(model, (xs + w) % 1.0, n_iter)

    a = _fiber_entries(model, xs)
    def mapped(angles):
        v = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        av = np.einsum("...ij,...j->...i", a, v)
        return np.arctan2(av[..., 1], av[..., 0]) % math.pi

    eu_res = float(np.max(_proj_dist(mapped(eu), eu_shift)))
    es_res = float(np.max(_proj_dist(mapped(es), es_shift)))
    converged = eu_res <= residual_tol and es_res <= residual_tol
    return xs, eu, es, eu_res, es_res, converged


@dataclass(frozen=True)
class HyperbolicityCertificate:
    status: str                    # "certified" | "refuted" | "inconclusive"
    block_length: int
    grid_size: int
    min_log_norm: float
    min_norm_margin: float         # min ||M(x,N)|| / e^(Lambda0 N), minus 1
    lipschitz_slack: float         # max adjacent-cell jump of log ||M(.,N)||
    lambda0_estimate: float
    c_estimate: float
    direction_separation: float
    equivariance_residual: float
    window_margin: float | None = None
    window_floor: float | None = None
    eu_angles: tuple = ()
    es_angles: tuple = ()


def certify_uh(model: CocycleModel, n_steps: int, grid_size: int = 1 << 14,
               kappa: float = 0.5, refute_tol: float = 0.05,
               separation_tol: float = 1e-4, residual_tol: float = 1e-6,
               direction_iter: int = 150, window: tuple | None = None,
               window_floor_coef: float = 1.0, window_grid: int = 4096,
               keep_fields: bool = False) -> HyperbolicityCertificate:
    """Finite certificate of uniform norm growth at time N on a grid.

    Certified requires the grid minimum of log ||M(x, N)|| to exceed its
    target kappa-fraction by more than the measured discretization slack,
    together with uniformly separated and equivariant projective direction
    fields.  Refuted requires a grid norm at the trivial floor with the two
    direction fields collapsing somewhere.  Everything else is inconclusive.

    When the cocycle carries a collision structure, pass
    window = (n, n_minus, n_plus, delta): certification then additionally
    requires the collision-window angle margin to clear the floor
    window_floor_coef / lambda_min^n, the finite witness that every
    critical passage is absorbed by a uniformly hyperbolic block.  A bare
    norm grid cannot see the loss of hyperbolicity (the failure lives in
    dips far narrower than any feasible grid), so this clause carries the
    discriminating power near a resonance.
    """
    xs = (np.arange(grid_size) + 0.5) / grid_size
    logs = log_norm_grid(model, xs, n_steps)
    m = float(np.min(logs))
    jumps = np.abs(np.diff(np.concatenate([logs, logs[:1]])))
    slack = float(np.max(jumps))
    lambda0_est = kappa * m / n_steps
    margin_log = m - lambda0_est * n_steps  # = (1 - kappa) m
    dg = max(256, grid_size // 16)
    xs_d, eu, es, eu_res, es_res, _ = oseledets_directions(
        model, grid_size=dg, n_iter=direction_iter, residual_tol=residual_tol)
    sep = float(np.min(_proj_dist(eu, es)))
    residual = max(eu_res, es_res)

    wmargin = wfloor = None
    window_ok = True
    if window is not None:
        n, n_minus, n_plus, delta = window
        wmargin = window_angle_margin(model, n, n_minus, n_plus, delta,
                                      grid_size=window_grid)
        wfloor = window_floor_coef / model.lambda_min ** n
        window_ok = wmargin > wfloor

    status = "inconclusive"
    if (m > 0.0 and margin_log > slack and sep > separation_tol
            and residual <= residual_tol and window_ok):
        status = "certified"
    elif m <= math.log(1.0 + refute_tol) and sep <= separation_tol:
        status = "refuted"
    return HyperbolicityCertificate(
        status=status, block_length=n_steps, grid_size=grid_size,
        min_log_norm=m,
        min_norm_margin=float(math.expm1(margin_log)) if margin_log < 300 else float("inf"),
        lipschitz_slack=slack,
        lambda0_estimate=lambda0_est if m > 0 else 0.0,
        c_estimate=1.0,
        direction_separation=sep,
        equivariance_residual=residual,
        window_margin=wmargin,
        window_floor=wfloor,
        eu_angles=tuple(eu) if keep_fields else (),
        es_angles=tuple(es) if keep_fields else (),
    )


def validate_lemma2(model: CocycleModel, c3: float, n_lengths=(2, 4, 8),
                    grid_size: int = 2048, c_m: float | None = None):
    """Norm growth (C_M lambda_min)^n on orbit segments avoiding the dips.

    Scans for base points whose next n angles all satisfy |cos phi| >= c3
    and checks ||M(x, n)|| >= (c_m * lambda_min)^n there, with c_m = c3/2
    by default.  Returns a dict with the worst margins per length.
    """
    if c_m is None:
        c_m = 0.5 * c3
    w = model.omega.value
    xs = (np.arange(grid_size) + 0.5) / grid_size
    out = {"c_m": c_m, "lengths": {}}
    lam_min = model.lambda_min
    for n in n_lengths:
        ok = np.ones(grid_size, dtype=bool)
        for k in range(n):
            ok &= np.abs(np.cos(model.phi((xs + k * w) % 1.0))) >= c3
        if not ok.any():
            out["lengths"][n] = {"segments": 0, "worst_ratio": None, "pass": None}
            continue
        logs = log_norm_grid(model, xs[ok], n)
        bound = n * math.log(c_m * lam_min)
        worst = float(np.min(logs - bound))
        out["lengths"][n] = {
            "segments": int(ok.sum()),
            "worst_ratio": math.exp(worst / n),
            "pass": bool(worst >= 0.0),
        }
    return out
