"""Concrete cocycle families A(x) = R(phi(x)).Z(lambda(x)) from step-angle bumps.

phi is a continuous 1-periodic piecewise-linear function: near each bump
center it crosses +-pi/2 with a steep slope r/eps, away from the bumps it
sits on plateaus (joined by gentle linear ramps when adjacent plateau
levels differ).  lambda is constant by default; a tabulated positive
function is supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import DomainError, Mat2
from .rotation import RotationNumber, circle_dist

LEVEL_TOL = 1e-9


class ModelError(ValueError):
    """Inadmissible model construction."""


@dataclass(frozen=True)
class StepProfile:
    """Clamped-linear step: value k*y between the knees, levels outside.

    l_minus is the level as y -> -inf and l_plus as y -> +inf, so the
    orientation rule sign(l_plus - l_minus) = sign(k) must hold, and the
    two levels have opposite signs so the step crosses 0 at y = 0.
    """

    l_minus: float
    l_plus: float
    k: float

    def __post_init__(self):
        if self.l_minus * self.l_plus >= 0.0:
            raise ModelError("plateau levels must have opposite signs")
        if self.k == 0.0 or math.copysign(1.0, self.l_plus - self.l_minus) != math.copysign(1.0, self.k):
            raise ModelError("slope sign must match the level orientation")

    @property
    def lo(self) -> float:
        return min(self.l_minus, self.l_plus)

    @property
    def hi(self) -> float:
        return max(self.l_minus, self.l_plus)

    # knee offsets in y; left knee < 0 < right knee
    @property
    def y_left(self) -> float:
        return self.l_minus / self.k

    @property
    def y_right(self) -> float:
        return self.l_plus / self.k


def theta_eval(profile: StepProfile, y):
    """The clamped-linear step value at y (array-safe)."""
    return np.clip(profile.k * np.asarray(y, dtype=float), profile.lo, profile.hi)


@dataclass(frozen=True)
class BumpSpec:
    """A +-pi/2 crossing of the angle function at a given center."""

    center: float
    sign: int
    profile: StepProfile

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ModelError("bump sign must be +1 or -1")


def phi_hat_eval(bump: BumpSpec, x):
    """sign*pi/2 + step(y) with y the circle lift of x - center nearest 0."""
    y = np.asarray(x, dtype=float) - bump.center
    y = y - np.round(y)
    return bump.sign * 0.5 * math.pi + theta_eval(bump.profile, y)


@dataclass(frozen=True, eq=False)
class CocycleModel:
    """Immutable cocycle model: x -> (phi(x), lambda(x)) over rotation omega.

    knots_x / knots_v tabulate the piecewise-linear angle on one period
    (knots_x strictly increasing in [0, 1), closed by periodicity).
    """

    omega: RotationNumber
    bumps: tuple[BumpSpec, ...]
    knots_x: np.ndarray
    knots_v: np.ndarray
    lambda0: float
    eps: float
    t: float
    lambda_fn: object = None      # optional callable x -> lambda(x)
    builder: object = None        # set for parametric families, enables with_t
    builder_kwargs: dict = None

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.knots_x, self.knots_v, period=1.0)

    def phi_prime(self, x):
        x = np.asarray(x, dtype=float) % 1.0
        xs = np.concatenate([self.knots_x, [self.knots_x[0] + 1.0]])
        vs = np.concatenate([self.knots_v, [self.knots_v[0]]])
        slopes = np.diff(vs) / np.diff(xs)
        shifted = np.where(x < xs[0], x + 1.0, x)
        idx = np.searchsorted(xs, shifted, side="right") - 1
        idx = np.clip(idx, 0, len(slopes) - 1)
        return slopes[idx]

    def lam(self, x):
        if self.lambda_fn is None:
            return np.full_like(np.asarray(x, dtype=float), self.lambda0)
        return np.asarray(self.lambda_fn(np.asarray(x, dtype=float)), dtype=float)

    @property
    def lambda_min(self) -> float:
        if self.lambda_fn is None:
            return self.lambda0
        grid = np.linspace(0.0, 1.0, 4096, endpoint=False)
        return float(np.min(self.lam(grid)))

    @property
    def lambda_max(self) -> float:
        if self.lambda_fn is None:
            return self.lambda0
        grid = np.linspace(0.0, 1.0, 4096, endpoint=False)
        return float(np.max(self.lam(grid)))

    def a_of_x(self, x: float) -> Mat2:
        """The fiber matrix R(phi(x)).Z(lambda(x))."""
        p = float(self.phi(x))
        lv = float(self.lam(np.asarray(x, dtype=float)))
        c, s = math.cos(p), math.sin(p)
        return Mat2(lv * c, s / lv, -lv * s, c / lv)

    def with_t(self, t: float) -> "CocycleModel":
        if self.builder is None:
            raise ModelError("model has no parametric family attached")
        kwargs = dict(self.builder_kwargs)
        kwargs["t"] = t
        return self.builder(**kwargs)


def a_of_x(model: CocycleModel, x: float) -> Mat2:
    return model.a_of_x(x)


def _check_level(level: float, what: str):
    # phi = level on a plateau; H3 needs |cos(level)| bounded away from 0,
    # i.e. level not congruent to pi/2 mod pi
    if abs(math.cos(level)) < LEVEL_TOL:
        raise ModelError(f"{what} puts the angle at pi/2 mod pi (H3 violation)")


def build_two_bump_model(omega: RotationNumber, c0: float, c1_0: float,
                         sign: int, r0: float, r1: float, eps: float,
                         lambda0: float, t: float,
                         lm0: float = -2.0 / 3.0, lp0: float = 0.75,
                         lm1: float = 2.0 / 3.0, lp1: float = -0.5,
                         lambda_fn=None) -> CocycleModel:
    """Two steep bumps of opposite slope through sign*pi/2, plateaus between.

    The first bump sits at c0, the second at c1(t) = c1_0 + t.  Slopes are
    k_j = r_j/eps with r0 > 0 > r1.  Between the bumps phi is constant at
    the adjacent plateau level, or a gentle linear ramp when the two
    adjacent levels differ.
    """
    if not (r0 > 0.0 > r1):
        raise ModelError("need r0 > 0 and r1 < 0 (opposite slopes)")
    if not (lambda0 > 1.0):
        raise ModelError("lambda0 must exceed 1")
    if not (0.0 < eps < 0.25):
        raise ModelError("eps must be small and positive")
    base = sign * 0.5 * math.pi
    prof0 = StepProfile(lm0, lp0, r0 / eps)
    prof1 = StepProfile(lm1, lp1, r1 / eps)
    c1 = (c1_0 + t) % 1.0
    c0 = c0 % 1.0
    bumps = (BumpSpec(c0, sign, prof0), BumpSpec(c1, sign, prof1))

    # knee knots around the circle; each bump contributes (left knee, right knee)
    knots = []
    for b in bumps:
        _check_level(base + b.profile.l_minus, "left plateau level")
        _check_level(base + b.profile.l_plus, "right plateau level")
        knots.append(((b.center + b.profile.y_left) % 1.0, base + b.profile.l_minus, b))
        knots.append(((b.center + b.profile.y_right) % 1.0, base + b.profile.l_plus, b))

    knots.sort(key=lambda kv: kv[0])
    xs = [kv[0] for kv in knots]
    vs = [kv[1] for kv in knots]

    # each bump's two knees must be circularly adjacent (supports disjoint),
    # and every inter-bump ramp must stay on one branch of cos (no pi/2
    # mod pi crossing between its endpoint levels)
    order = [kv[2] for kv in knots]
    ramps = [(i, (i + 1) % len(knots)) for i in range(len(knots))
             if order[i] is not order[(i + 1) % len(knots)]]
    if len(ramps) != 2:
        raise ModelError("bump supports overlap on the circle")
    for i, j in ramps:
        u, v = vs[i], vs[j]
        if math.floor((u - 0.5 * math.pi) / math.pi) != math.floor((v - 0.5 * math.pi) / math.pi):
            raise ModelError("ramp between plateaus would cross pi/2 mod pi")

    model = CocycleModel(
        omega=omega, bumps=bumps,
        knots_x=np.array(xs), knots_v=np.array(vs),
        lambda0=float(lambda0), eps=float(eps), t=float(t),
        lambda_fn=lambda_fn, builder=build_two_bump_model,
        builder_kwargs=dict(omega=omega, c0=c0, c1_0=c1_0, sign=sign, r0=r0,
                            r1=r1, eps=eps, lambda0=lambda0, t=t,
                            lm0=lm0, lp0=lp0, lm1=lm1, lp1=lp1,
                            lambda_fn=lambda_fn),
    )
    return model


def constant_angle_model(omega: RotationNumber, phi0: float, lambda0: float) -> CocycleModel:
    """Degenerate model with phi constant (no critical set); for baselines."""
    xs = np.array([0.0, 0.5])
    vs = np.array([phi0, phi0])
    return CocycleModel(omega=omega, bumps=(), knots_x=xs, knots_v=vs,
                        lambda0=float(lambda0), eps=0.01, t=0.0)


@dataclass(frozen=True)
class HypothesisReport:
    zeros: tuple[float, ...]
    h1_pass: bool
    slope_min: float
    slope_max: float
    h2_pass: bool
    c3_witness: float
    h3_pass: bool
    winding: float
    h4_pass: bool
    lambda_min: float
    h5_pass: bool
    dist_derivative: float | None
    h6_pass: bool

    def all_pass(self) -> bool:
        return (self.h1_pass and self.h2_pass and self.h3_pass
                and self.h4_pass and self.h5_pass and self.h6_pass)


def _bisect_zero(f, a, b, iters=80):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def find_cos_zeros(model: CocycleModel, grid_size: int = 1 << 14):
    """All zeros of cos(phi) located by sign change plus bisection."""
    xs = np.linspace(0.0, 1.0, grid_size, endpoint=False)
    vals = np.cos(model.phi(xs))
    zeros = []
    f = lambda x: float(np.cos(model.phi(x)))
    for i in range(grid_size):
        a, b = xs[i], xs[i] + (1.0 / grid_size)
        va, vb = vals[i], vals[(i + 1) % grid_size]
        if va == 0.0:
            zeros.append(a)
        elif va * vb < 0.0:
            zeros.append(_bisect_zero(f, a, b) % 1.0)
    return zeros


def verify_hypotheses(model: CocycleModel, grid_size: int = 1 << 14,
                      dt: float = 1e-6) -> HypothesisReport:
    """Machine check of the six structural hypotheses with witnesses."""
    if grid_size < 1000:
        raise DomainError("grid_size must be at least 1000")
    xs = np.linspace(0.0, 1.0, grid_size, endpoint=False)
    eps = model.eps

    zeros = find_cos_zeros(model, grid_size)
    h1 = len(zeros) == len(model.bumps)
    if h1:
        for z in zeros:
            # zeros must be simple: the slope through the crossing is nonzero
            if abs(float(model.phi_prime(z))) < 1e-9:
                h1 = False

    # H2: each center's eps-neighborhood must contain the steep transition
    # (peak slope ~ |r|/eps) and carry an O(1) variation |L+ - L-|; the
    # plateau tails inside U_eps have near-zero slope by construction, so
    # the witnesses C1, C2 are the eps-scaled peak slopes per bump
    in_u = np.zeros(grid_size, dtype=bool)
    peak_scaled = []
    h2 = True
    slopes = np.abs(model.phi_prime(xs))
    for b in model.bumps:
        d = np.abs((xs - b.center + 0.5) % 1.0 - 0.5)
        mask = d < eps
        in_u |= mask
        if not mask.any():
            h2 = False
            continue
        peak = float(slopes[mask].max()) * eps
        peak_scaled.append(peak)
        var = float(model.phi(xs[mask]).max() - model.phi(xs[mask]).min())
        var_target = abs(b.profile.l_plus - b.profile.l_minus)
        nominal = abs(b.profile.k) * eps
        if not (0.5 * nominal <= peak <= 2.0 * nominal):
            h2 = False
        if abs(var - var_target) > 0.05 * var_target:
            h2 = False
    smin = min(peak_scaled) / eps if peak_scaled else 0.0
    smax = max(peak_scaled) / eps if peak_scaled else 0.0

    cosv = np.abs(np.cos(model.phi(xs)))
    outside = ~in_u
    c3 = float(cosv[outside].min()) if outside.any() else float(cosv.min())
    h3 = c3 > 0.0

    dphi = np.diff(np.concatenate([model.phi(xs), model.phi(xs[:1])]))
    winding = float(np.sum(dphi)) / (2.0 * math.pi)
    h4 = abs(winding) < 1e-9

    lmin = model.lambda_min
    h5 = lmin > 1.0

    dist_d = None
    h6 = True
    if model.builder is not None and len(model.bumps) == 2:
        m_plus = model.with_t(model.t + dt)
        m_minus = model.with_t(model.t - dt)
        rho_p = circle_dist(m_plus.bumps[0].center, m_plus.bumps[1].center)
        rho_m = circle_dist(m_minus.bumps[0].center, m_minus.bumps[1].center)
        dist_d = (rho_p - rho_m) / (2.0 * dt)
        h6 = abs(dist_d) > 0.0

    return HypothesisReport(
        zeros=tuple(zeros), h1_pass=bool(h1),
        slope_min=smin, slope_max=smax, h2_pass=bool(h2),
        c3_witness=c3, h3_pass=bool(h3),
        winding=winding, h4_pass=bool(h4),
        lambda_min=lmin, h5_pass=bool(h5),
        dist_derivative=dist_d, h6_pass=bool(h6),
    )


def envelope_check(model: CocycleModel, bump_index: int, delta: float,
                   l_min_pair, l_max_pair, n_samples: int = 2001) -> bool:
    """|phi_hat(.; L_min)| <= |phi| <= |phi_hat(.; L_max)| near one bump."""
    b = model.bumps[bump_index]
    lo = BumpSpec(b.center, b.sign, StepProfile(l_min_pair[0], l_min_pair[1], b.profile.k))
    hi = BumpSpec(b.center, b.sign, StepProfile(l_max_pair[0], l_max_pair[1], b.profile.k))
    xs = b.center + np.linspace(-delta, delta, n_samples)
    v = np.abs(model.phi(xs))
    return bool(np.all(np.abs(phi_hat_eval(lo, xs)) <= v + 1e-12)
                and np.all(v <= np.abs(phi_hat_eval(hi, xs)) + 1e-12))


# ---------------------------------------------------------------------------
# flat key-value model files

_MODEL_KEYS = ("c0", "c1_0", "sign", "r0", "r1", "lm0", "lp0", "lm1", "lp1",
               "eps", "lambda0", "t", "omega")


def parse_model_file(path) -> dict:
    """Flat `key = value` text; omega is 'golden[:depth]' or a quotient list."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ModelError(f"bad model-file line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            raw[key.lower()] = val
    missing = [k for k in _MODEL_KEYS if k not in raw]
    if missing:
        raise ModelError(f"model file missing keys: {missing}")
    out = {k: float(raw[k]) for k in _MODEL_KEYS if k not in ("omega", "sign")}
    out["sign"] = int(raw["sign"])
    om = raw["omega"]
    if om.startswith("golden"):
        depth = int(om.split(":", 1)[1]) if ":" in om else 40
        out["omega"] = RotationNumber.golden(depth)
    else:
        quotients = [int(tok) for tok in om.replace(",", " ").split()]
        out["omega"] = RotationNumber.from_quotients(quotients)
    return out


def model_from_file(path) -> CocycleModel:
    kw = parse_model_file(path)
    return build_two_bump_model(**kw)
