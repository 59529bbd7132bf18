"""Periodic-orbit pressure, Bowen-Ruelle roots, entropy and a hyperbolicity heuristic.

Pressure at period k is estimated from the saddle fixed points of ``f^k``
(each cycle of period q contributes q equal terms):

    P_k(t) = (1/k) log sum_x exp(-t log|Lambda(x)|)

where ``Lambda`` is the product of the expanding multipliers of ``Df^k`` at x
(unstable weight) or the reciprocal of the product of its contracting
multipliers (stable weight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maps import MapSpec, as_points, eval_forward, is_escaped
from .orbits import PeriodicCensus

ROOT_TOL = 1e-10
WEIGHTS = ("unstable", "stable")


class ThermoError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# pressure


@dataclass(frozen=True)
class OrbitWeights:
    """Per-cycle data entering the pressure sum, in canonical order."""

    k: int
    periods: tuple[int, ...]
    log_lambda: tuple[float, ...]  # log|Lambda| for one full period of the cycle
    excluded: int = 0  # fixed points of f^k left out (non-saddles)

    @property
    def fix_count(self) -> int:
        return sum(self.periods)


def orbit_weights(census: PeriodicCensus, weight: str = "unstable") -> OrbitWeights:
    if weight not in WEIGHTS:
        raise ThermoError(f"weight must be one of {WEIGHTS}, got {weight!r}")
    saddles = census.saddles()
    if not saddles:
        raise ThermoError(f"census for period {census.k} has no saddle orbits")
    q, logs = [], []
    for o in saddles:
        L = o.expanding_product() if weight == "unstable" else 1.0 / o.contracting_product()
        q.append(o.period)
        logs.append(math.log(L))
    return OrbitWeights(census.k, tuple(q), tuple(logs),
                        census.fix_count - census.saddle_fix_count)


def _as_weights(obj, weight) -> OrbitWeights:
    return obj if isinstance(obj, OrbitWeights) else orbit_weights(obj, weight)


def pressure(census, t: float, weight: str = "unstable") -> float:
    """P_k(t) from a census (or precomputed :class:`OrbitWeights`).

    The sum runs over fixed points of f^k, so a cycle of period q is counted
    q times.  Terms are combined with a max shift and ``math.fsum`` in the
    census order, which keeps the result independent of how the census was
    computed.  At t=0 this reduces to ``log(#fixed points)/k``.
    """
    w = _as_weights(census, weight)
    k = w.k
    expo = [t * (-(k / q) * L) for q, L in zip(w.periods, w.log_lambda)]
    shift = max(expo)
    total = math.fsum(q * math.exp(e - shift) for q, e in zip(w.periods, expo))
    return (shift + math.log(total)) / k


@dataclass
class PressureCurve:
    k: int
    weight: str
    t: np.ndarray
    values: np.ndarray
    orbit_count: int
    excluded: int = 0

    def rows(self):
        return [{"t": float(a), "P": float(b)} for a, b in zip(self.t, self.values)]

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) < 0))


def pressure_curve(census, t_grid, weight: str = "unstable") -> PressureCurve:
    w = _as_weights(census, weight)
    t = np.asarray(t_grid, dtype=float)
    vals = np.array([pressure(w, float(s)) for s in t])
    return PressureCurve(w.k, weight, t, vals, w.fix_count, w.excluded)


# ---------------------------------------------------------------------------
# Bowen-Ruelle roots


def _bisect(fn, lo, hi, tol=ROOT_TOL):
    flo, fhi = fn(lo), fn(hi)
    if not (flo > 0 > fhi):
        raise ThermoError(f"pressure has no root in [{lo:g},{hi:g}]")
    mid, fm = lo, flo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm) < tol or hi - lo < 4e-16 * max(1.0, abs(mid)):
            break
        if fm > 0:
            lo = mid
        else:
            hi = mid
    return mid, abs(fm), (lo, hi)


@dataclass
class BowenRuelleRoot:
    t: float
    bracket: tuple[float, float]
    k: int
    residual: float
    weight: str
    table: list[tuple[int, float]] = field(default_factory=list)

    @property
    def last_delta(self) -> float | None:
        if len(self.table) < 2:
            return None
        return abs(self.table[-1][1] - self.table[-2][1])

    def rows(self):
        return [{"k": k, "t": t} for k, t in self.table]


def root_at(census, weight: str = "unstable", bracket=(0.0, 2.0)) -> tuple[float, float]:
    """Zero of P_k for a single census: (t, |P_k(t)|)."""
    w = _as_weights(census, weight)
    t, res, _ = _bisect(lambda s: pressure(w, s), *bracket)
    return t, res


def bowen_ruelle_root(censuses, weight: str = "unstable", k_max: int | None = None,
                      bracket=(0.0, 2.0)) -> BowenRuelleRoot:
    """Root of P_k(t) = 0 for k = 2..k_max; the answer is the k_max value.

    ``censuses`` maps period to census (a single census is also accepted).
    The default bracket [0, 2] fits unstable index one; pass a wider one for
    stable weights in higher dimension.
    """
    if isinstance(censuses, (PeriodicCensus, OrbitWeights)):
        censuses = {censuses.k: censuses}
    ks = sorted(k for k in censuses if k_max is None or k <= k_max)
    if not ks:
        raise ThermoError("no census available for the root search")
    table_ks = [k for k in ks if k >= 2] or ks
    table = []
    t = res = None
    br = tuple(bracket)
    for k in table_ks:
        w = _as_weights(censuses[k], weight)
        t, res, _ = _bisect(lambda s: pressure(w, s), *bracket)
        table.append((k, t))
    return BowenRuelleRoot(t, br, table_ks[-1], res, weight, table)


# ---------------------------------------------------------------------------
# entropy and derived dimensions


@dataclass
class EntropyEstimate:
    ks: list[int]
    counts: list[int]
    h: list[float]
    target: float | None

    def rows(self):
        return [{"k": k, "count": c, "h": h} for k, c, h in zip(self.ks, self.counts, self.h)]


def entropy_estimate(m: MapSpec, censuses, k_max: int) -> EntropyEstimate:
    """h_k = (1/k) log #(saddle fixed points of f^k) for k = 1..k_max.

    Computed through :func:`pressure` at t=0 so both agree bit for bit.
    """
    ks, counts, hs = [], [], []
    for k in range(1, k_max + 1):
        c = censuses[k]
        n_saddle = c.saddle_fix_count
        ks.append(k)
        counts.append(n_saddle)
        hs.append(pressure(c, 0.0) if n_saddle else 0.0)
    target = None
    if m.regularity_index is not None:
        target = m.regularity_index * math.log(m.degree)
    return EntropyEstimate(ks, counts, hs, target)


def stable_set_dimension(m: MapSpec, t_u: float, census: PeriodicCensus | None = None) -> float:
    """Dimension of the stable set of an index-one basic set: t_u + 2n - 2."""
    if census is not None:
        idx = {o.unstable_index for o in census.saddles()}
        if idx != {1}:
            raise ThermoError(f"unstable index must be 1 on the census, found {sorted(idx)}")
    n = m.n
    value = t_u + 2 * n - 2
    if not (2 * n - 2 < value < 2 * n):
        raise ThermoError(f"stable-set dimension {value} outside ({2*n-2}, {2*n})")
    return value


@dataclass
class JpmBound:
    b_plus: float
    b_minus: float
    s_plus: float
    s_minus: float
    t_weight: float
    n: int

    @property
    def bound_plus(self) -> float:
        return 2 * self.n + self.b_plus / self.s_plus

    @property
    def bound_minus(self) -> float:
        return 2 * self.n + self.b_minus / self.s_minus

    @property
    def value(self) -> float:
        return max(self.bound_plus, self.bound_minus)


def upper_bound_jpm(m: MapSpec, census: PeriodicCensus, s_plus: float, s_minus: float,
                    real_jacobian: bool = True) -> JpmBound:
    """Upper bound 2n + max(b+/s+, b-/s-) for the dimension of J+ and J-.

    ``b`` is the pressure of minus the log of the unstable (stable) Jacobian.
    On a complex line the real Jacobian is the squared modulus of the
    multiplier, so by default the pressure is taken at t=2 in the modulus
    weights used here; ``real_jacobian=False`` evaluates it at t=1.
    """
    t = 2.0 if real_jacobian else 1.0
    b_plus = pressure(census, t, "unstable")
    b_minus = pressure(census, t, "stable")
    for name, b in (("b+", b_plus), ("b-", b_minus)):
        if not b < 0:
            raise ThermoError(f"{name} = {b:.6g} is not negative; hyperbolicity hypothesis failed")
    if not (s_plus > 0 and s_minus > 0):
        raise ThermoError("growth rates must be positive")
    return JpmBound(b_plus, b_minus, s_plus, s_minus, t, m.n)


# ---------------------------------------------------------------------------
# hyperbolicity heuristic


@dataclass
class HyperbolicityDiagnostic:
    """Heuristic only: a finite-time singular-value gap test, not a proof."""

    k: int
    gap_threshold: float
    index: int | None
    per_orbit_index: np.ndarray
    per_orbit_gap: np.ndarray  # per-step log gap at the majority index
    passed: np.ndarray

    @property
    def worst_gap(self) -> float:
        return float(self.per_orbit_gap.min()) if len(self.per_orbit_gap) else math.nan

    @property
    def ok(self) -> bool:
        return bool(len(self.passed)) and bool(self.passed.all())

    label = "heuristic"


def log_singular_values(m: MapSpec, P, k: int) -> np.ndarray:
    """Finite-time log stretches of Df^k along each orbit, via repeated QR.

    Returns an array (N, n) sorted in decreasing order.  Orbits that escape
    give NaN rows.
    """
    P = as_points(P, m.n).reshape(-1, m.n)
    N, n = P.shape
    Q = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    acc = np.zeros((N, n))
    X = P.copy()
    for _ in range(k):
        D = m.family.jacobian(X)
        Q, R = np.linalg.qr(D @ Q)
        acc += np.log(np.abs(np.diagonal(R, axis1=1, axis2=2)))
        X = eval_forward(m, X)
        if is_escaped(X).any():
            bad = is_escaped(X)
            X[bad] = 0.0
            acc[bad] = np.nan
    return -np.sort(-acc, axis=1)


def hyperbolicity_heuristic(m: MapSpec, points, k: int = 20,
                            gap_threshold: float = 0.1) -> HyperbolicityDiagnostic:
    """Check a uniform splitting along orbit segments started at ``points``.

    For each orbit the k-step log singular values l_1 >= ... >= l_n are
    computed and the unstable index u is the number of positive l_i.  The
    gap is ``min(l_u, -l_{u+1}) / k``: how far, per step, the singular values
    on either side of the split stay away from 1.  (The plain ratio
    l_u - l_{u+1} is useless for dissipative maps, where it is bounded below
    by -log|det Df| even at a saddle-node.)  An orbit passes when its index
    matches the majority index, which must lie in 1..n-1, and its gap
    reaches ``gap_threshold``.
    """
    L = log_singular_values(m, points, k)
    finite = np.isfinite(L).all(axis=1)
    idx = np.where(finite, (L > 0).sum(axis=1), -1)
    vals, cnt = np.unique(idx[finite], return_counts=True)
    u = int(vals[np.argmax(cnt)]) if len(vals) else None
    gap = np.full(len(L), -np.inf)
    if u is not None and 1 <= u <= m.n - 1:
        gap[finite] = np.minimum(L[finite, u - 1], -L[finite, u]) / k
        passed = finite & (idx == u) & (gap >= gap_threshold)
    else:
        passed = np.zeros(len(L), dtype=bool)
    return HyperbolicityDiagnostic(k, gap_threshold, u, idx, gap, passed)
