"""Continued-fraction arithmetic for the rotation number.

Rotation numbers are preferentially specified by their partial quotients
[a1, a2, ...] (the continued fraction of omega in (0,1)); float input is
expanded with a guarded depth because float continued fractions become
unreliable once q_n^2 approaches 1/eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .linalg import DomainError

# beyond this denominator the quotients of a float no longer reflect the
# intended real number (q_n * q_{n+1} ~ 1/ulp)
SAFE_FLOAT_Q = 1 << 26


class TruncationError(ValueError):
    """Requested depth exceeds what float precision supports."""


def circle_dist(x: float, y: float) -> float:
    """Distance on the circle R/Z: min over integers m of |x - y + m|."""
    d = (x - y) % 1.0
    return min(d, 1.0 - d)


def circle_diff(x: float, y: float) -> float:
    """Signed circle difference x - y wrapped into (-1/2, 1/2]."""
    d = (x - y) % 1.0
    return d if d <= 0.5 else d - 1.0


def frac(x: float) -> float:
    return x % 1.0


def _convergents_from_quotients(quotients):
    ps, qs = [], []
    p0, p1 = 1, 0  # p_{-1}, p_0
    q0, q1 = 0, 1  # q_{-1}, q_0
    for a in quotients:
        if a < 1:
            raise DomainError(f"partial quotients must be >= 1, got {a}")
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        ps.append(p1)
        qs.append(q1)
    return list(zip(ps, qs))


@dataclass(frozen=True)
class RotationNumber:
    """An irrational rotation number omega in (0,1).

    quotients are the partial quotients a_1..a_D; value is the float
    representative used by orbit computations; convergents are the exact
    integer best approximations p_n/q_n.
    """

    quotients: tuple[int, ...]
    value: float
    convergents: tuple[tuple[int, int], ...] = field(repr=False, default=())

    @staticmethod
    def from_quotients(quotients, value: float | None = None) -> "RotationNumber":
        qs = tuple(int(a) for a in quotients)
        conv = tuple(_convergents_from_quotients(qs))
        if value is None:
            p, q = conv[-1]
            value = p / q
        return RotationNumber(qs, float(value), conv)

    @staticmethod
    def from_float(x: float, depth: int) -> "RotationNumber":
        """Expand the continued fraction of x in (0,1) to `depth` terms.

        Raises TruncationError naming the safe depth when the requested
        depth would produce denominators beyond float reliability.
        """
        if not 0.0 < x < 1.0:
            raise DomainError(f"rotation number must lie in (0,1), got {x}")
        r = Fraction(x)
        quotients = []
        q_prev, q_cur = 0, 1
        while len(quotients) < depth:
            r = 1 / r
            a = int(r)
            r = r - a
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            if q_cur > SAFE_FLOAT_Q:
                raise TruncationError(
                    f"float precision exhausted at depth {len(quotients)}: "
                    f"denominator {q_cur} exceeds {SAFE_FLOAT_Q}; "
                    f"safe depth is {len(quotients)}"
                )
            quotients.append(a)
            if r == 0:
                break
        return RotationNumber.from_quotients(quotients, value=x)

    @staticmethod
    def golden(depth: int = 40) -> "RotationNumber":
        """(sqrt(5)-1)/2, all partial quotients equal to 1."""
        return RotationNumber.from_quotients(
            [1] * depth, value=(math.sqrt(5.0) - 1.0) / 2.0
        )

    @property
    def depth(self) -> int:
        return len(self.quotients)


def convergents(omega: RotationNumber, depth: int):
    """Exact integer convergents (p_n, q_n), n = 1..depth."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if depth > omega.depth:
        raise TruncationError(
            f"only {omega.depth} partial quotients available; "
            f"safe depth is {omega.depth}"
        )
    return list(omega.convergents[:depth])


def qnorm(omega: RotationNumber, q: int) -> float:
    """Distance of q*omega to the nearest integer."""
    return circle_dist(frac(q * omega.value), 0.0)


@dataclass(frozen=True)
class BrjunoReport:
    partial_sums: tuple[float, ...]
    increments: tuple[float, ...]
    c_b_estimate: float
    depth: int
    converged: bool


def brjuno_sum(omega: RotationNumber, depth: int) -> BrjunoReport:
    """Partial sums of sum_n log(2 q_{n+1}) / q_n up to n = depth.

    The tail estimate extrapolates the last increment geometrically; the
    convergence flag is the heuristic that increments decay geometrically
    over the computed range.
    """
    if depth < 2:
        raise DomainError("brjuno_sum needs depth >= 2")
    conv = convergents(omega, depth + 1)
    qs = [q for _, q in conv]
    increments = [math.log(2.0 * qs[n + 1]) / qs[n] for n in range(depth)]
    sums, acc = [], 0.0
    for inc in increments:
        acc += inc
        sums.append(acc)
    # geometric tail bound from the median decay ratio of late increments
    tail = 0.0
    ratios = [increments[i + 1] / increments[i]
              for i in range(max(0, depth - 6), depth - 1)
              if increments[i] > 0.0]
    converged = bool(ratios) and max(ratios) < 0.95
    if converged:
        r = max(ratios)
        tail = increments[-1] * r / (1.0 - r)
    return BrjunoReport(tuple(sums), tuple(increments), sums[-1] + tail,
                        depth, converged)


# gauge set: strictly increasing sublinear functions on (0, inf)
def _gauge(h_id: str):
    if h_id == "log1p":
        return lambda x: math.log1p(x)
    if h_id.startswith("pow:"):
        g = float(h_id.split(":", 1)[1])
        if not 0.0 < g < 1.0:
            raise DomainError(f"power gauge exponent must be in (0,1), got {g}")
        return lambda x: x ** g
    raise DomainError(f"unknown gauge '{h_id}'; use 'log1p' or 'pow:<gamma>'")


def gauge_is_admissible(h_id: str, samples=(2.0, 10.0, 1e3, 1e6, 1e9)) -> bool:
    """Sampled membership test: strictly increasing and h(x)/x decreasing."""
    h = _gauge(h_id)
    vals = [h(x) for x in samples]
    incr = all(b > a for a, b in zip(vals, vals[1:]))
    subl = all(h(b) / b < h(a) / a for a, b in zip(samples, samples[1:]))
    return incr and subl


@dataclass(frozen=True)
class ConditionAReport:
    h_id: str
    c_t: float
    c_delta: float
    depth: int
    passes_a1: tuple[bool, ...]            # per n = 1..depth-1
    subsequence_indices: tuple[int, ...]   # n_j with (A1) true
    delta_sequence: tuple[float, ...]      # 1/(q_{n_j} h(q_{n_j}))
    chain: tuple[int, ...]                 # chosen J_k as positions into n_j
    passes_a2: tuple[bool, ...]            # per chain link k


def check_condition_A(omega: RotationNumber, h_id: str, c_t: float,
                      c_delta: float, depth: int) -> ConditionAReport:
    """Point check of the two growth inequalities for a gauge h.

    (A1) selects all n <= depth-1 with q_{n+1} > q_n h(q_n) (greedy maximal
    subsequence).  (A2) builds a strictly increasing chain J_1 < J_2 < ...
    through that subsequence, where each link requires
        L_{J_{k+1}} > L_{J_k} + log(1/c_delta)   and
        L_{J_{k+1}} < c_t * q_{n_{J_k}},
    with L_j = log(q_{n_j} h(q_{n_j})).  Empty subsequence is reported, not
    raised.
    """
    if not 0.0 < c_delta < 1.0:
        raise DomainError("c_delta must lie in (0,1)")
    if c_t <= 0.0:
        raise DomainError("c_t must be positive")
    h = _gauge(h_id)
    conv = convergents(omega, depth)
    qs = [q for _, q in conv]
    passes_a1 = []
    sub = []
    for n in range(1, depth):  # 1-based index n, needs q_{n+1}
        ok = qs[n] > qs[n - 1] * h(qs[n - 1])
        passes_a1.append(bool(ok))
        if ok:
            sub.append(n)
    lvals = [math.log(qs[j - 1] * h(qs[j - 1])) for j in sub]
    deltas = [1.0 / (qs[j - 1] * h(qs[j - 1])) for j in sub]

    chain, passes_a2 = [], []
    if sub:
        chain.append(0)
        while True:
            k = chain[-1]
            lo = lvals[k] + math.log(1.0 / c_delta)
            hi = c_t * qs[sub[k] - 1]
            nxt = next((j for j in range(k + 1, len(sub))
                        if lo < lvals[j] < hi), None)
            if nxt is None:
                passes_a2.append(False)
                break
            passes_a2.append(True)
            chain.append(nxt)
    return ConditionAReport(
        h_id=h_id, c_t=c_t, c_delta=c_delta, depth=depth,
        passes_a1=tuple(passes_a1), subsequence_indices=tuple(sub),
        delta_sequence=tuple(deltas), chain=tuple(chain),
        passes_a2=tuple(passes_a2),
    )
