"""Critical-set dynamics: collision times, dominance, and word coding.

Positions along the rotation orbit are computed directly as frac(c + k w)
(never by cumulative summation) so the collision search matches a naive
loop bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DomainError
from .model import CocycleModel, ModelError, find_cos_zeros

DEFAULT_HORIZON = 10_000_000
_CHUNK = 1 << 20


def critical_set(model: CocycleModel, grid_size: int = 1 << 14):
    """Zeros of cos(phi), refined to ~1e-12; errors on a double root."""
    zeros = find_cos_zeros(model, grid_size)
    for z in zeros:
        if abs(float(model.phi_prime(z))) < 1e-9:
            raise ModelError(f"double root of cos(phi) at x = {z}")
    return sorted(zeros)


def collision_time(omega, cj: float, cjp: float, delta: float,
                   horizon: int = DEFAULT_HORIZON):
    """First k in [1, horizon] with dist(cj + k w, cjp) < delta, else None."""
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    w = float(getattr(omega, "value", omega))
    base = (cj - cjp) % 1.0
    for start in range(1, horizon + 1, _CHUNK):
        ks = np.arange(start, min(start + _CHUNK, horizon + 1), dtype=float)
        pos = (base + ks * w) % 1.0
        dist = np.minimum(pos, 1.0 - pos)
        hits = np.nonzero(dist < delta)[0]
        if hits.size:
            return int(ks[hits[0]])
    return None


@dataclass(frozen=True)
class CollisionTable:
    delta: float
    horizon: int
    critical_points: tuple[float, ...]
    tau: dict                     # (j, j') -> int | None
    tau0: int | None              # primary collision time

    def secondary_times(self):
        return {k: v for k, v in self.tau.items() if k[0] != k[1]}


def collision_table(model: CocycleModel, delta: float,
                    horizon: int = DEFAULT_HORIZON) -> CollisionTable:
    pts = critical_set(model)
    if not pts:
        raise ModelError("critical set is empty")
    tau = {}
    primaries = []
    for j, cj in enumerate(pts):
        for jp, cjp in enumerate(pts):
            t = collision_time(model.omega, cj, cjp, delta, horizon)
            tau[(j, jp)] = t
            if j == jp:
                primaries.append(t)
    tau0 = primaries[0]
    # the primary time is a property of omega and delta alone
    if any(p != tau0 for p in primaries):
        raise AssertionError(f"primary collision times differ across points: {primaries}")
    return CollisionTable(delta=delta, horizon=horizon,
                          critical_points=tuple(pts), tau=tau, tau0=tau0)


@dataclass(frozen=True)
class DominanceVerdict:
    verdict: str                  # "PRIMARY" | "SECONDARY" | "INCONCLUSIVE"
    table: CollisionTable


def dominance(model: CocycleModel, delta: float,
              horizon: int = DEFAULT_HORIZON) -> DominanceVerdict:
    """Primary collisions dominate iff every secondary time exceeds tau0."""
    table = collision_table(model, delta, horizon)
    if table.tau0 is None:
        return DominanceVerdict("INCONCLUSIVE", table)
    secondary = table.secondary_times().values()
    if any(t is not None and t <= table.tau0 for t in secondary):
        return DominanceVerdict("SECONDARY", table)
    if any(t is None for t in secondary):
        # no secondary hit within the horizon still means primaries come first
        return DominanceVerdict("PRIMARY", table)
    return DominanceVerdict("PRIMARY", table)


@dataclass(frozen=True)
class FactorizedWord:
    raw: str                      # letters B/G, length l
    letters: str                  # letters B/G/H, length j
    h_spans: tuple[tuple[int, int], ...]   # per H: (raw start, raw length)
    k1: int
    k2: int
    n: int
    n_minus: int
    n_plus: int
    tau0: int

    @property
    def length(self) -> int:
        return len(self.letters)

    def truncated(self) -> str:
        # letters strictly between the boundary markers (1-based k1 < i < k2)
        return self.letters[self.k1:self.k2 - 1]

    def expand(self) -> str:
        """Rebuild the raw word; every H restores the letters it replaced."""
        out = []
        pos = 0
        span_iter = iter(self.h_spans)
        for ch in self.letters:
            if ch == "H":
                start, length = next(span_iter)
                out.append(self.raw[start:start + length])
                pos = start + length
            else:
                out.append(ch)
                pos += 1
        return "".join(out)


class WordError(ValueError):
    """Inadmissible word construction (overlapping resonant blocks)."""


def word(model: CocycleModel, x: float, length: int, delta: float,
         n: int | None = None, n_minus: int | None = None,
         n_plus: int | None = None, horizon: int = DEFAULT_HORIZON) -> FactorizedWord:
    """Letter coding of the orbit with resonant-block factorization.

    Raw letter i is B when x + i w lies in the delta-neighborhood of the
    critical set, else G.  Any full window of length n_minus + n + n_plus
    whose offset-n_minus point lies in the delta-neighborhood of the first
    critical point is replaced (greedily, left to right) by one H.  When
    (n, n_minus, n_plus) are omitted they are derived from the collision
    table and the block-selection rule.
    """
    pts = critical_set(model)
    if n is None or n_minus is None or n_plus is None:
        from .resonance import select_n_pm
        table = collision_table(model, delta, horizon)
        if n is None:
            n = table.tau[(0, 1)] if len(pts) > 1 else table.tau0
        picked = select_n_pm(model, n, delta, table=table)
        if picked is None:
            raise WordError("no admissible (n_minus, n_plus) for this delta")
        if n_minus is None:
            n_minus = picked[0]
        if n_plus is None:
            n_plus = picked[1]
    table = collision_table(model, delta, horizon)
    tau0 = table.tau0 if table.tau0 is not None else length + 1

    w = model.omega.value
    ks = np.arange(length, dtype=float)
    pos = (x + ks * w) % 1.0
    in_any = np.zeros(length, dtype=bool)
    for c in pts:
        d = np.abs((pos - c + 0.5) % 1.0 - 0.5)
        in_any |= d < delta
    c0 = pts[0]
    d0 = np.abs((pos - c0 + 0.5) % 1.0 - 0.5)
    in_c0 = d0 < delta

    window = n_minus + n + n_plus
    if window > tau0:
        raise WordError(f"window {window} exceeds the primary return time {tau0}")

    letters = []
    spans = []
    i = 0
    hit_list = np.nonzero(in_c0)[0]
    while i < length:
        # next c0 visit that could anchor a window starting at or after i
        anchor = None
        for hv in hit_list:
            if hv - n_minus >= i:
                anchor = hv
                break
            if hv - n_minus >= 0 and hv >= i and hv - n_minus < i and spans:
                # a window would start inside the previously emitted block
                raise WordError(
                    f"resonant blocks overlap near step {hv}; "
                    f"the primary return time is too small for these margins")
        hit_list = hit_list[hit_list >= (anchor if anchor is not None else length)]
        if anchor is None or anchor - n_minus + window > length:
            for j in range(i, length):
                letters.append("B" if in_any[j] else "G")
            break
        start = anchor - n_minus
        for j in range(i, start):
            letters.append("B" if in_any[j] else "G")
        letters.append("H")
        spans.append((start, window))
        hit_list = hit_list[hit_list >= start + window]
        i = start + window

    word_f = "".join(letters)
    j_len = len(word_f)
    # boundary indices, 1-based; generalized to the last B of the first half
    # and the first B of the second half
    half = j_len // 2
    k1 = 0
    for idx in range(half, 0, -1):
        if word_f[idx - 1] == "B":
            k1 = idx
            break
    k2 = j_len + 1
    for idx in range(half + 1, j_len + 1):
        if word_f[idx - 1] == "B":
            k2 = idx
            break
    raw = "".join("B" if b else "G" for b in in_any)
    return FactorizedWord(raw=raw, letters=word_f, h_spans=tuple(spans),
                          k1=k1, k2=k2, n=n, n_minus=n_minus, n_plus=n_plus,
                          tau0=tau0)
