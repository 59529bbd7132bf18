"""Periodic orbits, orbit classification and basins of attraction."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .filtration import FiltrationSpec, Region
from .maps import HenonComposition, MapSpec, as_points, eval_forward, eval_inverse, is_escaped
from .parallel import chunk_bounds, pmap, rng_for

NEWTON_TOL = 1e-10
NEWTON_MAXIT = 60
DEDUPE_RADIUS = 1e-6
UNIT_TOL = 1e-4
ATTRACT_DIST = 1e-6
ATTRACT_STEPS = 10


class Stability(str, enum.Enum):
    ATTRACTING = "attracting"
    SADDLE = "saddle"
    REPELLING = "repelling"
    INDETERMINATE = "indeterminate"


@dataclass
class PeriodicOrbit:
    """A cycle of minimal period ``period``; ``points[0]`` is the canonical
    (lexicographically smallest) representative and ``points[i] = f^i(points[0])``."""

    points: np.ndarray
    multipliers: np.ndarray
    stability: Stability
    unstable_index: int
    residual: float

    @property
    def period(self) -> int:
        return len(self.points)

    @property
    def rep(self) -> np.ndarray:
        return self.points[0]

    def expanding_product(self) -> float:
        """|product of multipliers outside the unit circle| for one period."""
        mods = np.abs(self.multipliers)
        return float(np.prod(mods[mods > 1 + UNIT_TOL]))

    def contracting_product(self) -> float:
        mods = np.abs(self.multipliers)
        return float(np.prod(mods[mods < 1 - UNIT_TOL]))


@dataclass
class PeriodicCensus:
    """All cycles whose points are fixed by ``f^k`` (minimal periods divide k)."""

    k: int
    orbits: list[PeriodicOrbit]
    splits: list[int] = field(default_factory=list)
    target: int | None = None

    @property
    def fix_count(self) -> int:
        return sum(o.period for o in self.orbits)

    def saddles(self) -> list[PeriodicOrbit]:
        return [o for o in self.orbits if o.stability == Stability.SADDLE]

    @property
    def saddle_fix_count(self) -> int:
        return sum(o.period for o in self.saddles())

    @property
    def indeterminate(self) -> int:
        return sum(o.period for o in self.orbits if o.stability == Stability.INDETERMINATE)

    def points(self) -> np.ndarray:
        if not self.orbits:
            return np.empty((0, 0), dtype=complex)
        return np.concatenate([o.points for o in self.orbits])


# ---------------------------------------------------------------------------
# Newton machinery


def _products(fam, P, steps, forward):
    n = P.shape[-1]
    J = np.broadcast_to(np.eye(n, dtype=complex), P.shape[:-1] + (n, n)).copy()
    for _ in range(steps):
        if forward:
            D = fam.jacobian(P)
            P = fam.forward(P)
        else:
            P = fam.inverse(P)
            D = np.linalg.inv(fam.jacobian(P))
        J = D @ J
    return P, J


def _solve(J, g):
    try:
        return np.linalg.solve(J, g[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(g.shape, np.nan, dtype=complex)
        for i in range(len(g)):
            try:
                out[i] = np.linalg.solve(J[i], g[i])
            except np.linalg.LinAlgError:
                pass  # singular Jacobian: seed abandoned
        return out


def _newton_chunk(args):
    """Newton on ``g(p) = f^h(p) - f^-(k-h)(p)``.

    Since f is a bijection the zeros of g are exactly the fixed points of
    f^k; ``h = k`` is the one-sided residual ``f^k(p) - p``.  Splitting the
    orbit keeps both Jacobian factors moderate for saddle-type roots.
    """
    fam, k, h, P, bound, maxit = args
    P = P.copy()
    active = np.ones(len(P), dtype=bool)
    done = np.zeros(len(P), dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(maxit):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            X = P[idx]
            F, JF = _products(fam, X, h, True)
            B, JB = _products(fam, X, k - h, False)
            step = _solve(JF - JB, F - B)
            Xn = X - step
            bad = ~np.isfinite(Xn).all(-1) | (np.abs(Xn).max(-1) > bound)
            small = np.abs(step).max(-1) <= 1e-13 * (1 + np.abs(Xn).max(-1))
            P[idx] = Xn
            active[idx[bad]] = False
            P[idx[bad]] = np.nan
            conv = small & ~bad
            done[idx[conv]] = True
            active[idx[conv]] = False
    keep = done | active
    Q = P[keep]
    Q = Q[np.isfinite(Q).all(-1)]
    if len(Q) == 0:
        return Q
    with np.errstate(all="ignore"):
        R, _ = _products(fam, Q, k, True)
        res = np.abs(R - Q).max(-1)
    return Q[res < 1e-6 * (1 + np.abs(Q).max(-1))]


def _lex_key(P):
    cols = []
    for j in range(P.shape[1]):
        cols += [P[:, j].real, P[:, j].imag]
    return np.lexsort(cols[::-1])


def _dedupe(P, radius=DEDUPE_RADIUS):
    """Deterministic greedy merge of points closer than ``radius``."""
    if len(P) == 0:
        return P
    P = P[_lex_key(P)]
    keep: list[np.ndarray] = []
    for p in P:
        if keep:
            K = np.asarray(keep)
            if (np.abs(K - p).max(-1) < radius).any():
                continue
        keep.append(p)
    return np.asarray(keep)


def _polish_cycle(fam, Z, iters=8):
    """Multiple-shooting Newton on ``f(z_i) = z_{i+1 mod q}``."""
    q, n = Z.shape
    Z = Z.copy()
    res = np.inf
    for _ in range(iters):
        FZ = fam.forward(Z)
        Fres = FZ - np.roll(Z, -1, axis=0)
        res = float(np.abs(Fres).max())
        if res < 1e-15 * (1 + np.abs(Z).max()):
            break
        D = fam.jacobian(Z)
        A = np.zeros((q * n, q * n), dtype=complex)
        for i in range(q):
            A[i * n:(i + 1) * n, i * n:(i + 1) * n] = D[i]
            j = (i + 1) % q
            A[i * n:(i + 1) * n, j * n:(j + 1) * n] -= np.eye(n)
        try:
            dz = np.linalg.solve(A, Fres.reshape(-1))
        except np.linalg.LinAlgError:
            break
        Z = Z - dz.reshape(q, n)
    FZ = fam.forward(Z)
    res = float(np.abs(FZ - np.roll(Z, -1, axis=0)).max())
    return Z, res


def cycle_multipliers(m: MapSpec, Z: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``Df^q`` at ``Z[0]``, sorted by decreasing modulus.

    Expanding eigenvalues come from the forward product and contracting ones
    as reciprocals of the expanding eigenvalues of the backward product,
    which keeps tiny multipliers accurate.
    """
    fam = m.family
    n = m.n
    D = fam.jacobian(Z)
    Mf = np.eye(n, dtype=complex)
    for i in range(len(Z)):
        Mf = D[i] @ Mf
    Mb = np.eye(n, dtype=complex)
    for i in range(len(Z)):
        Mb = np.linalg.inv(D[(-1 - i) % len(Z)]) @ Mb
    ef = np.linalg.eigvals(Mf)
    eb = np.linalg.eigvals(Mb)
    big = ef[np.abs(ef) >= 1]
    small = 1 / eb[np.abs(eb) > 1]
    lam = np.concatenate([big, small]) if len(big) + len(small) == n else ef
    return lam[np.argsort(-np.abs(lam), kind="stable")]


def classify_multipliers(lam, tol=UNIT_TOL) -> tuple[Stability, int]:
    mods = np.abs(lam)
    u = int((mods > 1 + tol).sum())
    s = int((mods < 1 - tol).sum())
    if u + s < len(lam):
        return Stability.INDETERMINATE, u
    if u == 0:
        return Stability.ATTRACTING, 0
    if s == 0:
        return Stability.REPELLING, u
    return Stability.SADDLE, u


def _make_orbit(m: MapSpec, p: np.ndarray, k: int) -> PeriodicOrbit | None:
    fam = m.family
    Z = [p]
    for _ in range(k - 1):
        Z.append(fam.forward(Z[-1]))
    Z = np.asarray(Z)
    scale = 1 + np.abs(Z).max()
    back = fam.forward(Z[-1])
    q = k
    for d in range(1, k + 1):
        if k % d:
            continue
        nxt = back if d == k else Z[d]
        if np.abs(nxt - Z[0]).max() < 1e-7 * scale:
            q = d
            break
    Z, res = _polish_cycle(fam, Z[:q])
    Z = np.roll(Z, -int(_lex_key(Z)[0]), axis=0)
    if not np.isfinite(Z).all() or res > NEWTON_TOL * scale:
        return None
    lam = cycle_multipliers(m, Z)
    stab, u = classify_multipliers(lam)
    return PeriodicOrbit(Z, lam, stab, u, res)


def seed_grid(m: MapSpec, radius: float, grid: int = 200) -> np.ndarray:
    """Real lattice over ``[-radius, radius]^n`` with about ``grid**2`` nodes."""
    n = m.n
    per_axis = grid if n == 2 else max(2, int(round(grid ** (2 / n))))
    g = np.linspace(-radius, radius, per_axis)
    mesh = np.meshgrid(*([g] * n), indexing="ij")
    return np.stack([c.ravel() for c in mesh], axis=-1).astype(complex)


def random_seeds(m: MapSpec, radius: float, count: int, seed: int) -> np.ndarray:
    rng = rng_for(seed, 7)
    r = radius * np.sqrt(rng.random((count, m.n)))
    return r * np.exp(2j * np.pi * rng.random((count, m.n)))


def expected_fix_count(m: MapSpec, k: int) -> int | None:
    """Number of fixed points of f^k with multiplicity, where known (Henon: d^k)."""
    if isinstance(m.family, HenonComposition):
        return m.degree**k
    return None


def _split_order(k):
    return sorted(range(k + 1), key=lambda h: (abs(2 * h - k), -h))


def find_periodic_points(m: MapSpec, k: int, radius: float, seeds=None, *,
                         grid: int = 200, complex_seeds: int = 0, seed: int = 0,
                         max_splits: int | None = None, target="auto",
                         workers: int = 1) -> PeriodicCensus:
    """Census of the fixed points of ``f^k`` found by Newton from ``seeds``.

    ``radius`` bounds the search region (the filtration radius); seeds leaving
    the box of twice that size are abandoned.  By default seeds are the real
    lattice of :func:`seed_grid` plus ``complex_seeds`` random points of the
    polydisk.  The Newton residual is rerun over the orbit split points
    ``f^h(p) - f^-(k-h)(p)`` until ``target`` distinct points are found
    (``"auto"``: d^k for Henon maps) or the splits are exhausted.
    """
    if k < 1:
        raise ValueError("period must be at least 1")
    if seeds is None:
        seeds = seed_grid(m, radius, grid)
        if complex_seeds:
            seeds = np.concatenate([seeds, random_seeds(m, radius, complex_seeds, seed)])
    seeds = as_points(seeds, m.n).reshape(-1, m.n)
    if target == "auto":
        target = expected_fix_count(m, k)
    bound = 2.0 * radius
    splits = _split_order(k)[:max_splits]
    found = np.empty((0, m.n), dtype=complex)
    used = []
    for h in splits:
        tasks = [(m.family, k, h, seeds[lo:hi], bound, NEWTON_MAXIT)
                 for lo, hi in chunk_bounds(len(seeds))]
        parts = pmap(_newton_chunk, tasks, workers)
        found = _dedupe(np.concatenate([found] + [p for p in parts if len(p)]))
        used.append(h)
        if target is not None and len(found) >= target:
            break
    return _census_from_roots(m, k, found, used, target)


def _census_from_roots(m, k, roots, splits, target) -> PeriodicCensus:
    orbits: list[PeriodicOrbit] = []
    reps = np.empty((0, m.n), dtype=complex)
    for p in roots:
        if len(reps) and (np.abs(reps - p).max(-1) < DEDUPE_RADIUS).any():
            continue
        orb = _make_orbit(m, p, k)
        if orb is None:
            continue
        if len(reps) and (np.abs(reps - orb.rep).max(-1) < DEDUPE_RADIUS).any():
            continue
        orbits.append(orb)
        reps = np.concatenate([reps, orb.points])
    orbits.sort(key=lambda o: tuple(v for z in o.rep for v in (z.real, z.imag)))
    return PeriodicCensus(k, orbits, list(splits), target)


def census_through(m: MapSpec, k_max: int, radius: float, **kw) -> dict[int, PeriodicCensus]:
    return {k: find_periodic_points(m, k, radius, **kw) for k in range(1, k_max + 1)}


def find_attracting_cycles(m: MapSpec, k_max: int, seeds, *, settle: int = 300,
                           radius: float | None = None) -> list[PeriodicOrbit]:
    """Attracting cycles of period <= k_max reached from ``seeds``.

    Seeds are iterated forward; bounded orbits settle near attractors and the
    settled points start Newton at each period.  Only cycles with every
    multiplier inside ``1 - UNIT_TOL`` are kept, each reported once at its
    minimal period.
    """
    P = as_points(seeds, m.n).reshape(-1, m.n)
    for _ in range(settle):
        P = eval_forward(m, P)
    P = P[~is_escaped(P)]
    if len(P) == 0:
        return []
    P = _dedupe(P, 1e-4)
    if radius is None:
        radius = float(np.abs(P).max()) + 1.0
    out: list[PeriodicOrbit] = []
    for k in range(1, k_max + 1):
        roots = _newton_chunk((m.family, k, k, P, 2 * radius + 10, NEWTON_MAXIT))
        census = _census_from_roots(m, k, _dedupe(roots), [k], None)
        for orb in census.orbits:
            if orb.stability != Stability.ATTRACTING:
                continue
            if any(np.abs(o.points - orb.rep).max(-1).min() < DEDUPE_RADIUS for o in out):
                continue
            out.append(orb)
    out.sort(key=lambda o: (o.period, tuple(v for z in o.rep for v in (z.real, z.imag))))
    return out


# ---------------------------------------------------------------------------
# classification


class Verdict(enum.IntEnum):
    UNDECIDED = 0
    ESCAPES_FORWARD = 1
    ESCAPES_BACKWARD = 2
    CONVERGES_TO_CYCLE = 3
    BOUNDED_NON_ATTRACTED = 4


@dataclass
class OrbitClassification:
    verdict: Verdict
    k: int  # step at which the verdict was reached (budget for bounded/undecided)
    cycle: int = -1
    steps_used: int = 0
    distance: float = math.inf

    def __str__(self):
        name = self.verdict.name.title().replace("_", "")
        arg = f"{self.cycle}, {self.k}" if self.verdict == Verdict.CONVERGES_TO_CYCLE else str(self.k)
        return f"{name}({arg})"


@dataclass
class ClassificationBatch:
    verdict: np.ndarray
    k: np.ndarray
    cycle: np.ndarray
    distance: np.ndarray

    def __len__(self):
        return len(self.verdict)

    def __getitem__(self, i) -> OrbitClassification:
        v = Verdict(int(self.verdict[i]))
        return OrbitClassification(v, int(self.k[i]), int(self.cycle[i]), int(self.k[i]),
                                   float(self.distance[i]))


def _classify_chunk(args):
    m, fs, P, budget, cyc_pts, cyc_id, cyc_period, forward = args
    N = len(P)
    verdict = np.zeros(N, dtype=np.int8)
    kk = np.full(N, budget, dtype=np.int64)
    cid = np.full(N, -1, dtype=np.int64)
    dist = np.full(N, np.inf)
    if budget <= 0:
        return verdict, np.zeros(N, dtype=np.int64), cid, dist
    step = eval_forward if forward else eval_inverse
    escape_region = Region.VMINUS if forward else Region.VPLUS
    escape_verdict = Verdict.ESCAPES_FORWARD if forward else Verdict.ESCAPES_BACKWARD
    maxq = int(cyc_period.max()) if len(cyc_period) else 1
    hist = np.full((maxq + 1, N), np.inf)  # recent distances, ring buffer
    streak = np.zeros(N, dtype=np.int64)
    live = np.ones(N, dtype=bool)
    X = P.copy()
    for j in range(1, budget + 1):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        Y = step(m, X[idx])
        X[idx] = Y
        esc = fs.regions(Y, escaped_as=escape_region) == escape_region
        verdict[idx[esc]] = escape_verdict
        kk[idx[esc]] = j
        live[idx[esc]] = False
        if len(cyc_pts):
            rest = idx[~esc]
            Yr = X[rest]
            D = np.abs(Yr[:, None, :] - cyc_pts[None, :, :]).max(-1)
            near = D.argmin(1)
            d = D[np.arange(len(rest)), near]
            q = cyc_period[near]
            prev = hist[(j - q) % (maxq + 1), rest]
            contracting = (d < prev) | (d < 1e-13)
            streak[rest] = np.where(contracting, streak[rest] + 1, 0)
            hist[j % (maxq + 1), rest] = d
            dist[rest] = d
            hit = (d < ATTRACT_DIST) & (streak[rest] >= ATTRACT_STEPS)
            verdict[rest[hit]] = Verdict.CONVERGES_TO_CYCLE
            kk[rest[hit]] = j
            cid[rest[hit]] = cyc_id[near[hit]]
            live[rest[hit]] = False
    idx = np.flatnonzero(live)
    inV = fs.regions(X[idx]) == Region.V
    verdict[idx[inV]] = Verdict.BOUNDED_NON_ATTRACTED
    return verdict, kk, cid, dist


def _cycle_arrays(cycles):
    if not cycles:
        return np.empty((0, 0), dtype=complex), np.empty(0, int), np.empty(0, int)
    pts = np.concatenate([c.points for c in cycles])
    ids = np.concatenate([[i] * c.period for i, c in enumerate(cycles)])
    per = np.concatenate([[c.period] * c.period for c in cycles])
    return pts, ids, per


def classify_points(m: MapSpec, fs: FiltrationSpec, P, budget: int,
                    cycles: list[PeriodicOrbit] = (), forward: bool = True,
                    workers: int = 1) -> ClassificationBatch:
    """Vectorized orbit trichotomy.

    Escape is declared only once an iterate enters V- (V+ for backward
    orbits), after which escape is guaranteed by the filtration.  Convergence
    needs distance < 1e-6 to a registered cycle after 10 consecutive
    contracting steps (distance compared one cycle period back).  Orbits
    still in V at the end of the budget are bounded-non-attracted.
    """
    P = as_points(P, m.n).reshape(-1, m.n)
    pts, ids, per = _cycle_arrays(list(cycles))
    tasks = [(m, fs, P[lo:hi], budget, pts, ids, per, forward)
             for lo, hi in chunk_bounds(len(P))]
    parts = pmap(_classify_chunk, tasks, workers)
    if not parts:
        e = np.empty(0, dtype=np.int64)
        return ClassificationBatch(e.astype(np.int8), e, e, e.astype(float))
    return ClassificationBatch(*(np.concatenate([p[i] for p in parts]) for i in range(4)))


def classify_point(m: MapSpec, fs: FiltrationSpec, p, budget: int,
                   cycles: list[PeriodicOrbit] = (), forward: bool = True) -> OrbitClassification:
    return classify_points(m, fs, as_points(p, m.n)[None], budget, cycles, forward)[0]


@dataclass
class BasinGrid:
    xs: np.ndarray
    ys: np.ndarray
    batch: ClassificationBatch
    axes: tuple[int, int]

    @property
    def shape(self):
        return (len(self.ys), len(self.xs))

    def verdicts(self) -> np.ndarray:
        return self.batch.verdict.reshape(self.shape)

    def counts(self) -> dict[str, int]:
        v = self.batch.verdict
        return {Verdict(c).name: int((v == c).sum()) for c in Verdict}

    def rows(self):
        k = self.batch.k.reshape(self.shape)
        v = self.verdicts()
        cyc = self.batch.cycle.reshape(self.shape)
        for i, y in enumerate(self.ys):
            for j, x in enumerate(self.xs):
                yield {"x": x, "y": y, "class": Verdict(int(v[i, j])).name,
                       "cycle": int(cyc[i, j]), "k": int(k[i, j])}

    def image(self) -> np.ndarray:
        """8-bit gray levels, top row = largest y."""
        levels = {Verdict.UNDECIDED: 128, Verdict.ESCAPES_FORWARD: 255,
                  Verdict.ESCAPES_BACKWARD: 200, Verdict.CONVERGES_TO_CYCLE: 0,
                  Verdict.BOUNDED_NON_ATTRACTED: 80}
        v = self.verdicts()
        img = np.zeros(v.shape, dtype=np.uint8)
        for c, g in levels.items():
            img[v == c] = g
        return img[::-1]


def basin_map(m: MapSpec, fs: FiltrationSpec, window=(-2.0, 2.0, -2.0, 2.0),
              resolution: int = 256, budget: int = 200,
              cycles: list[PeriodicOrbit] = (), axes=(0, 1), base=None,
              workers: int = 1) -> BasinGrid:
    """Classify the cell centers of a real grid in the plane spanned by ``axes``."""
    x0, x1, y0, y1 = window
    hx = (x1 - x0) / resolution
    hy = (y1 - y0) / resolution
    xs = x0 + hx * (np.arange(resolution) + 0.5)
    ys = y0 + hy * (np.arange(resolution) + 0.5)
    X, Y = np.meshgrid(xs, ys)
    P = np.zeros((X.size, m.n), dtype=complex)
    if base is not None:
        P[:] = as_points(base, m.n)
    P[:, axes[0]] = X.ravel()
    P[:, axes[1]] = Y.ravel()
    batch = classify_points(m, fs, P, budget, cycles, workers=workers)
    return BasinGrid(xs, ys, batch, tuple(axes))
