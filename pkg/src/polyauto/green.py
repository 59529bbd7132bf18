"""Green functions G+ and G- with a Hoelder-exponent diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filtration import Region, default_regions
from .maps import ESCAPE_RADIUS, MapSpec, as_points, eval_forward, eval_inverse
from .parallel import chunk_bounds, pmap

BIG_RADIUS = 1e10
DEFAULT_BUDGET = 200
RETURN_TOL = 1e-9


class GreenError(ValueError):
    pass


@dataclass(frozen=True)
class GreenEval:
    value: float
    k: int
    escaped: bool
    error: float
    budget_limited: bool = False
    periodic: bool = False


@dataclass
class GreenBatch:
    value: np.ndarray
    k: np.ndarray
    escaped: np.ndarray
    error: np.ndarray
    periodic: np.ndarray

    def __len__(self):
        return len(self.value)

    def __getitem__(self, i) -> GreenEval:
        esc = bool(self.escaped[i])
        per = bool(self.periodic[i])
        return GreenEval(float(self.value[i]), int(self.k[i]), esc, float(self.error[i]),
                         not esc and not per, per)


def _green_chunk(args):
    m, P, budget, big, forward = args
    step = eval_forward if forward else eval_inverse
    d = m.degree if forward else m.inverse_degree
    fs = default_regions(m, big)
    far = Region.VMINUS if forward else Region.VPLUS
    group = list(fs.minus_group if forward else fs.plus_group)
    N = len(P)
    value = np.zeros(N)
    err = np.zeros(N)
    kk = np.full(N, budget, dtype=np.int64)
    escaped = np.zeros(N, dtype=bool)
    periodic = np.zeros(N, dtype=bool)
    live = np.ones(N, dtype=bool)
    X = P.copy()
    start = P.copy()
    saved = P.copy()
    scale = 1.0 + np.abs(P).max(axis=1)
    power = 1

    def settle(idx, j):
        # orbit is far out in the escaping region: d^-j log|.| refined by one step
        Y = X[idx]
        v0 = np.log(np.abs(Y[:, group]).max(axis=1)) / float(d) ** j
        Z = step(m, Y)
        v1 = np.log(np.abs(Z[:, group]).max(axis=1)) / float(d) ** (j + 1)
        value[idx] = v1
        err[idx] = np.maximum(np.abs(v1 - v0), 8 * np.finfo(float).eps * np.abs(v1))
        kk[idx] = j + 1
        escaped[idx] = True
        live[idx] = False

    idx = np.flatnonzero(fs.regions(X) == far)
    settle(idx, 0)
    for j in range(1, budget + 1):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        X[idx] = step(m, X[idx])
        settle(idx[fs.regions(X[idx]) == far], j)
        idx = np.flatnonzero(live)
        # returns to the start or to a Brent checkpoint mark bounded (periodic) orbits;
        # without this, rounding drives saddle orbits off J and they slowly escape
        tol = RETURN_TOL * scale[idx]
        back = (np.abs(X[idx] - start[idx]).max(axis=1) < tol) | \
               (np.abs(X[idx] - saved[idx]).max(axis=1) < tol)
        periodic[idx[back]] = True
        kk[idx[back]] = j
        live[idx[back]] = False
        if j == power:
            saved[live] = X[live]
            power *= 2
    return value, kk, escaped, err, periodic


def green_batch(m: MapSpec, P, budget: int = DEFAULT_BUDGET, big_radius: float = BIG_RADIUS,
                forward: bool = True, workers: int = 1) -> GreenBatch:
    """Vectorized G+ (``forward=True``) or G- over an array of points."""
    if budget < 1:
        raise GreenError("budget must be at least 1")
    d = max(m.degree, m.inverse_degree)
    if not big_radius > 1 or d * math.log(big_radius) >= math.log(ESCAPE_RADIUS):
        raise GreenError(f"big_radius must lie in (1, {ESCAPE_RADIUS ** (1 / d):.3g})")
    P = as_points(P, m.n).reshape(-1, m.n)
    tasks = [(m, P[lo:hi], budget, big_radius, forward) for lo, hi in chunk_bounds(len(P))]
    parts = pmap(_green_chunk, tasks, workers)
    if not parts:
        e = np.empty(0)
        return GreenBatch(e, e.astype(np.int64), e.astype(bool), e, e.astype(bool))
    return GreenBatch(*(np.concatenate([p[i] for p in parts]) for i in range(5)))


def green_plus(m: MapSpec, p, budget: int = DEFAULT_BUDGET,
               big_radius: float = BIG_RADIUS) -> GreenEval:
    """G+(p) = lim d^-k log+ |f^k(p)|.

    The orbit is followed until it lies beyond ``big_radius`` in the forward
    escaping region; the value is taken one iterate later and the change over
    that step is reported as the truncation error.  Orbits that stay bounded
    for the whole budget (or return to an earlier point) give 0.
    """
    return green_batch(m, as_points(p, m.n)[None], budget, big_radius, True)[0]


def green_minus(m: MapSpec, p, budget: int = DEFAULT_BUDGET,
                big_radius: float = BIG_RADIUS) -> GreenEval:
    return green_batch(m, as_points(p, m.n)[None], budget, big_radius, False)[0]


# ---------------------------------------------------------------------------
# Hoelder diagnostic


@dataclass
class HolderFit:
    slope: float
    intercept: float
    r_squared: float
    boundary: np.ndarray
    distances: np.ndarray
    values: np.ndarray
    dropped: int

    def rows(self):
        return [{"distance": float(a), "G": float(b)} for a, b in zip(self.distances, self.values)]


def _escapes(m, P, budget, forward):
    return green_batch(m, P, budget, forward=forward).value > 0


def holder_exponent_estimate(m: MapSpec, a, b, samples: int = 40, decades=(-11.0, -3.0),
                             budget: int = DEFAULT_BUDGET, forward: bool = True) -> HolderFit:
    """Fit log G against log(distance to J) along the segment from ``a`` to ``b``.

    One endpoint must have G = 0 and the other G > 0.  The crossing is found
    by bisection; ``samples`` points at log-spaced distances (``decades``
    relative to the segment length) on the escaping side are then evaluated.
    Samples that land in another piece of K are dropped from the fit.
    """
    a = as_points(a, m.n)
    b = as_points(b, m.n)
    ea, eb = _escapes(m, np.stack([a, b]), budget, forward)
    if ea == eb:
        raise GreenError("segment does not cross J: both endpoints "
                         + ("escape" if ea else "stay bounded"))
    lo, hi = (a, b) if eb else (b, a)  # lo bounded, hi escaping
    s_lo, s_hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (s_lo + s_hi)
        if mid in (s_lo, s_hi):
            break
        if _escapes(m, (lo + mid * (hi - lo))[None], budget, forward)[0]:
            s_hi = mid
        else:
            s_lo = mid
    length = float(np.abs(hi - lo).max())
    dist = 10.0 ** np.linspace(decades[0], decades[1], samples)
    P = lo[None] + (s_hi + dist[:, None] / length) * (hi - lo)[None]
    G = green_batch(m, P, budget, forward=forward).value
    keep = G > 0
    if keep.sum() < 3:
        raise GreenError("too few escaping samples near the crossing")
    x, y = np.log(dist[keep]), np.log(G[keep])
    (slope, icept), res, *_ = np.polyfit(x, y, 1, full=True)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(res[0]) / ss if len(res) and ss > 0 else 1.0
    return HolderFit(float(slope), float(icept), r2, lo + s_hi * (hi - lo),
                     dist[keep], G[keep], int((~keep).sum()))


# ---------------------------------------------------------------------------
# distance estimates


def green_with_gradient(m: MapSpec, P, budget: int = 80, big_radius: float = BIG_RADIUS,
                        forward: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """G+- and the norm of its real gradient, per point.

    With w = f^k(p) far out and w_i its dominant escaping coordinate,
    G ~ d^-k log|w_i| and |grad G| ~ d^-k |grad w_i| / |w_i|.  Orbits still
    bounded after ``budget`` steps give (0, 0).
    """
    P = as_points(P, m.n).reshape(-1, m.n)
    N, n = P.shape
    fam = m.family
    d = float(m.degree if forward else m.inverse_degree)
    fs = default_regions(m, big_radius)
    far = Region.VMINUS if forward else Region.VPLUS
    group = np.array(fs.minus_group if forward else fs.plus_group)
    G = np.zeros(N)
    grad = np.zeros(N)
    X = P.copy()
    M = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    live = np.arange(N)
    for j in range(budget + 1):
        if live.size == 0:
            break
        out = fs.regions(X[live]) == far
        if out.any():
            idx = live[out]
            # one more step before reading off the value
            Y = X[idx]
            if forward:
                D = fam.jacobian(Y)
                W = fam.forward(Y)
            else:
                W = fam.inverse(Y)
                D = np.linalg.inv(fam.jacobian(W))
            Mi = D @ M[idx]
            sub = np.abs(W[:, group])
            i = group[sub.argmax(axis=1)]
            wi = np.abs(W[np.arange(len(idx)), i])
            row = Mi[np.arange(len(idx)), i, :]
            scale = d ** (j + 1)
            G[idx] = np.log(wi) / scale
            grad[idx] = np.linalg.norm(row, axis=1) / (wi * scale)
            live = live[~out]
        if j == budget or live.size == 0:
            break
        Y = X[live]
        if forward:
            D = fam.jacobian(Y)
            X[live] = fam.forward(Y)
        else:
            X[live] = fam.inverse(Y)
            D = np.linalg.inv(fam.jacobian(X[live]))
        M[live] = D @ M[live]
    return G, grad


def distance_estimate(m: MapSpec, P, forward: bool = True, budget: int = 80) -> np.ndarray:
    """Approximate distance to K+ (``forward``) or K-, as G / |grad G|; 0 on bounded orbits."""
    G, grad = green_with_gradient(m, P, budget, forward=forward)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(G > 0, G / grad, 0.0)
