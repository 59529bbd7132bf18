"""Box counting, Julia-set samples, growth rates s+/s- and the dimension-bound report."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .filtration import FiltrationSpec, Region
from .maps import MapSpec, as_points, eval_forward, eval_inverse, is_escaped
from .orbits import PeriodicCensus, Verdict, classify_points

TOL = 0.1
JUMP = 0.05


class DimensionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# box counting


def real_coords(P) -> np.ndarray:
    """(N, n) complex -> (N, 2n) real, interleaving real and imaginary parts."""
    P = np.asarray(P)
    if not np.iscomplexobj(P):
        return np.asarray(P, dtype=float)
    out = np.empty(P.shape[:-1] + (2 * P.shape[-1],))
    out[..., 0::2] = P.real
    out[..., 1::2] = P.imag
    return out


@dataclass
class BoxCountResult:
    target: str
    eps: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    residual: float
    fit_window: tuple[int, int]  # inclusive indices into eps
    source: str

    def rows(self):
        return [{"scale": float(e), "count": int(c)} for e, c in zip(self.eps, self.counts)]


def _default_window(X):
    lo = X.min(axis=0)
    side = float((X.max(axis=0) - lo).max())
    if side == 0.0:
        side = 1.0
    return lo, side * (1 + 1e-9)


def box_counts(X: np.ndarray, lower, side: float, levels) -> np.ndarray:
    """Occupied dyadic boxes of side ``side * 2**-j`` for each level j."""
    lower = np.asarray(lower, dtype=float)
    counts = []
    for j in levels:
        eps = side * 2.0 ** -j
        cells = np.floor((X - lower) / eps).astype(np.int64)
        counts.append(len(np.unique(cells, axis=0)))
    return np.array(counts)


def _indicator_counts(indicator, lower, side, levels, max_boxes=4_000_000, chunk=1 << 16):
    """Adaptive counts: only children of occupied boxes are tested.

    ``indicator(centers, half_side)`` must return True for boxes that meet
    the set (a conservative answer is fine).
    """
    lower = np.asarray(lower, dtype=float)
    D = len(lower)
    offsets = np.array(np.meshgrid(*([[0, 1]] * D), indexing="ij")).reshape(D, -1).T
    occ = np.zeros((1, D), dtype=np.int64)
    counts = {}
    for level in range(1, max(levels) + 1):
        kids = (occ[:, None, :] * 2 + offsets[None]).reshape(-1, D)
        if len(kids) > max_boxes:
            raise DimensionError(f"adaptive box count exceeds {max_boxes} boxes at level {level}")
        h = side / 2**level
        keep = []
        for lo in range(0, len(kids), chunk):
            K = kids[lo:lo + chunk]
            keep.append(np.asarray(indicator(lower + (K + 0.5) * h, 0.5 * h), dtype=bool))
        occ = kids[np.concatenate(keep)] if keep else kids[:0]
        counts[level] = len(occ)
    return np.array([counts.get(j, 1) for j in levels])


def box_dimension(points=None, *, indicator: Callable | None = None, window=None,
                  scales: Sequence[int] = range(3, 10), fit: tuple[int, int] | None = None,
                  target: str = "set") -> BoxCountResult:
    """Box-counting dimension from a point cloud or a membership indicator.

    ``scales`` are dyadic levels j (box side = window side * 2**-j).
    ``window`` is ``(lower_corner, side)``; for points it defaults to the
    bounding cube.  In indicator mode boxes are refined adaptively, testing
    only children of occupied boxes.  ``fit`` selects an inclusive range of levels for the
    least-squares slope.  By default the first and last levels are dropped
    when at least five are available; for point clouds the window also stops
    at the last level whose count is at most a quarter of the sample size,
    since finer counts only measure how many points there are.
    """
    levels = [int(j) for j in scales]
    if len(levels) < 3:
        raise DimensionError("box counting needs at least 3 scales")
    if (points is None) == (indicator is None):
        raise DimensionError("give exactly one of points or indicator")
    if points is not None:
        X = real_coords(points).reshape(len(points), -1)
        if len(X) == 0:
            raise DimensionError("empty point set")
        if len(X) < 1000:
            warnings.warn(f"box counting on only {len(X)} points", stacklevel=2)
        lower, side = window if window is not None else _default_window(X)
        counts = box_counts(X, lower, side, levels)
        source = f"points:{len(X)}"
    else:
        if window is None:
            raise DimensionError("indicator mode needs a window")
        lower, side = window
        counts = _indicator_counts(indicator, lower, side, levels)
        source = "indicator"
    if fit is None:
        i0, i1 = (1, len(levels) - 2) if len(levels) >= 5 else (0, len(levels) - 1)
        if points is not None:
            fine = [i for i in range(i0, i1 + 1) if counts[i] <= len(X) / 4]
            if fine and fine[-1] - i0 >= 1:
                i1 = fine[-1]
            else:
                warnings.warn("box counts are sample-limited at every fitted scale", stacklevel=2)
    else:
        i0, i1 = levels.index(fit[0]), levels.index(fit[1])
        if i1 - i0 < 1:
            raise DimensionError("fit window needs at least 2 scales")
    eps = float(side) * 2.0 ** -np.array(levels, dtype=float)
    x = np.log(1.0 / eps[i0:i1 + 1])
    y = np.log(np.maximum(counts[i0:i1 + 1], 1))
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return BoxCountResult(target, eps, counts, float(slope), float(icept), resid,
                          (i0, i1), source)


# ---------------------------------------------------------------------------
# samples of J and indicators of K+- n V


@dataclass
class JuliaSample:
    points: np.ndarray
    strategy: str
    detail: dict = field(default_factory=dict)


def dedupe_lattice(P: np.ndarray, cell: float = 1e-9) -> np.ndarray:
    X = real_coords(P)
    keys = np.round(X / cell).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return P[np.sort(first)]


def _escape_mask(m, fs, P, budget, forward):
    v = classify_points(m, fs, P, budget, forward=forward).verdict
    return v == (Verdict.ESCAPES_FORWARD if forward else Verdict.ESCAPES_BACKWARD)


def _slice_boundary(m, fs, forward, lines, per_line, budget, tol, base):
    """Points of J+ (forward) or J- on a complex line, by bisection along grid lines."""
    coord = (fs.minus_group if forward else fs.plus_group)[0]
    R = fs.radius
    g = np.linspace(-R, R, lines)
    t = np.linspace(-R, R, per_line)
    # horizontal lines (vary real part) and vertical lines (vary imaginary part)
    Z = np.concatenate([t[None, :] + 1j * g[:, None], g[:, None] + 1j * t[None, :]])
    P = np.broadcast_to(base, Z.shape + (m.n,)).copy()
    P[..., coord] = Z
    esc = _escape_mask(m, fs, P.reshape(-1, m.n), budget, forward).reshape(Z.shape)
    r, c = np.nonzero(esc[:, 1:] != esc[:, :-1])
    if r.size == 0:
        return np.empty((0, m.n), dtype=complex)
    A = P[r, c]  # bounded side kept in A
    B = P[r, c + 1]
    swap = esc[r, c]
    A[swap], B[swap] = B[swap], A[swap].copy()
    span = float(t[1] - t[0])
    for _ in range(max(1, int(math.ceil(math.log2(span / tol))))):
        M = 0.5 * (A + B)
        e = _escape_mask(m, fs, M, budget, forward)
        B[e] = M[e]
        A[~e] = M[~e]
    return A


def sample_julia(m: MapSpec, fs: FiltrationSpec, strategy: str = "saddles", *,
                 censuses: dict[int, PeriodicCensus] | None = None, k_max: int | None = None,
                 budget: int = 200, lines: int = 1024, per_line: int = 256, tol: float = 1e-8,
                 push: Sequence[int] = range(3, 9), base=None) -> JuliaSample:
    """Point samples of J.

    ``"saddles"``: all saddle periodic points of period <= k_max from
    ``censuses``.  ``"boundary"``: points of J+ on a complex line located by
    bisecting between escaping and bounded grid points (to ``tol``), pushed
    forward by each step count in ``push``, together with the symmetric
    construction for J- pulled back.  This needs a bounded set with interior
    on the line (a basin); for horseshoes the grid sees only escaping points.
    The union is deduplicated on a fine lattice.
    """
    if strategy == "saddles":
        if not censuses:
            raise DimensionError("saddle strategy needs periodic censuses")
        ks = [k for k in sorted(censuses) if k_max is None or k <= k_max]
        pts = [o.points for k in ks for o in censuses[k].saddles()]
        P = np.concatenate(pts) if pts else np.empty((0, m.n), dtype=complex)
        detail = {"k_max": max(ks) if ks else 0}
    elif strategy == "boundary":
        b = np.zeros(m.n, dtype=complex) if base is None else as_points(base, m.n)
        parts = []
        for forward in (True, False):
            A = _slice_boundary(m, fs, forward, lines, per_line, budget, tol, b)
            step = eval_forward if forward else eval_inverse
            keep = set(push)
            for j in range(1, max(keep, default=0) + 1):
                A = step(m, A)
                A = A[~is_escaped(A)]
                if j in keep:
                    parts.append(A[fs.regions(A) == Region.V])
        P = np.concatenate(parts) if parts else np.empty((0, m.n), dtype=complex)
        detail = {"lines": lines, "per_line": per_line, "tol": tol, "push": list(push)}
    else:
        raise DimensionError(f"unknown sampling strategy {strategy!r}")
    if len(P) == 0:
        raise DimensionError("no Julia samples found")
    return JuliaSample(dedupe_lattice(P), strategy, detail)


def complex_coords(X: np.ndarray) -> np.ndarray:
    return X[..., 0::2] + 1j * X[..., 1::2]


def filled_indicator(m: MapSpec, fs: FiltrationSpec, which: str = "minus",
                     budget: int = 80, slack: float = 4.0) -> Callable:
    """Box indicator for K- n V, K+ n V or K n V (``which="both"``).

    A box is kept when the distance estimate G/|grad G| at its center is
    below ``slack`` times the half diagonal and the box meets V.  The
    estimate is only good up to a bounded factor, so the default slack errs
    on the side of keeping boxes: pruning a box also prunes its children.
    """
    from .green import distance_estimate

    if which not in ("minus", "plus", "both"):
        raise DimensionError("which must be 'minus', 'plus' or 'both'")
    R = fs.radius

    def indicator(C, h):
        P = complex_coords(C)
        reach = slack * h * math.sqrt(C.shape[1])
        ok = (np.abs(P) <= R + reach).all(axis=1)
        idx = np.flatnonzero(ok)
        if which in ("minus", "both"):
            e = distance_estimate(m, P[idx], forward=False, budget=budget)
            idx = idx[e <= reach]
        if which in ("plus", "both") and idx.size:
            e = distance_estimate(m, P[idx], forward=True, budget=budget)
            idx = idx[e <= reach]
        out = np.zeros(len(C), dtype=bool)
        out[idx] = True
        return out

    return indicator


def v_window(m: MapSpec, fs: FiltrationSpec):
    """Cube enclosing V in real coordinates."""
    R = fs.radius
    return np.full(2 * m.n, -R), 2.0 * R


# ---------------------------------------------------------------------------
# growth rates


@dataclass
class GrowthRate:
    direction: str
    ks: np.ndarray
    s_k: np.ndarray
    s: float
    samples: str
    dropped: int = 0

    def rows(self):
        return [{"k": int(k), "s_k": float(s)} for k, s in zip(self.ks, self.s_k)]


def log_norms(m: MapSpec, P, k_max: int, direction: str = "plus",
              fs: FiltrationSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """log ||Df^{+-k}(p)|| (operator 2-norm) for k = 1..k_max, per point.

    Products are renormalized every step: the largest modulus is factored out
    and its log accumulated.  Returns (values (N, k_max), alive mask); points
    whose orbit leaves V (or escapes) are marked dead.
    """
    if direction not in ("plus", "minus"):
        raise DimensionError("direction must be 'plus' or 'minus'")
    P = as_points(P, m.n).reshape(-1, m.n)
    N, n = P.shape
    fam = m.family
    M = np.broadcast_to(np.eye(n, dtype=complex), (N, n, n)).copy()
    acc = np.zeros(N)
    out = np.full((N, k_max), np.nan)
    alive = np.ones(N, dtype=bool)
    X = P.copy()
    for k in range(k_max):
        if direction == "plus":
            D = fam.jacobian(X)
            X = eval_forward(m, X)
        else:
            X = eval_inverse(m, X)
            D = np.linalg.inv(fam.jacobian(X))
        bad = is_escaped(X)
        if fs is not None:
            bad |= fs.regions(X) != Region.V
        alive &= ~bad
        X[bad] = 0.0
        M = D @ M
        scale = np.abs(M).max(axis=(1, 2))
        scale[scale == 0] = 1.0
        M /= scale[:, None, None]
        acc += np.log(scale)
        out[:, k] = acc + np.log(np.linalg.norm(M, ord=2, axis=(1, 2)))
    return out, alive


def growth_rate(m: MapSpec, points, k_max: int = 12, direction: str = "plus",
                fs: FiltrationSpec | None = None, samples: str = "points") -> GrowthRate:
    """s+ (or s-) from the per-k maxima of log ||Df^{+-k}|| over the sample set.

    The limit is the slope of k*s_k against k over the last third of k.
    """
    L, alive = log_norms(m, points, k_max, direction, fs)
    dropped = int((~alive).sum())
    if dropped:
        warnings.warn(f"{dropped} sample orbits left V and were dropped", stacklevel=2)
    if not alive.any():
        raise DimensionError("every sample orbit left V")
    ks = np.arange(1, k_max + 1)
    top = L[alive].max(axis=0)
    s_k = top / ks
    tail = max(2, int(math.ceil(k_max / 3)))
    if k_max >= 2:
        s = float(np.polyfit(ks[-tail:], top[-tail:], 1)[0])
    else:
        s = float(s_k[-1])
    return GrowthRate(direction, ks, s_k, s, samples, dropped)


# ---------------------------------------------------------------------------
# report


@dataclass
class Bound:
    name: str
    value: float | None
    hypothesis: str
    holds: bool


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    passed: bool


@dataclass
class DimensionReport:
    measured: dict[str, float]
    bounds: list[Bound]
    checks: list[Check]
    s_plus: float
    s_minus: float

    def bound(self, name: str) -> Bound:
        return next(b for b in self.bounds if b.name == name)

    def rows(self):
        rows = [{"key": f"measured.boxdim_{k}", "value": v, "flag": ""} for k, v in self.measured.items()]
        rows += [{"key": "s_plus", "value": self.s_plus, "flag": ""},
                 {"key": "s_minus", "value": self.s_minus, "flag": ""}]
        for b in self.bounds:
            rows.append({"key": f"bound.{b.name}", "value": "" if b.value is None else b.value,
                         "flag": f"{b.hypothesis}={'true' if b.holds else 'false'}"})
        for c in self.checks:
            rows.append({"key": f"check.{c.name}", "value": f"{c.lhs:.6g}<={c.rhs:.6g}",
                         "flag": "PASS" if c.passed else "FAIL"})
        return rows

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def bound_report(m: MapSpec, measured: dict[str, float], s_plus: float, s_minus: float,
                 jpm=None, hyperbolic: bool = False, tol: float = TOL) -> DimensionReport:
    """Analytic dimension bounds with hypothesis flags, plus consistency checks.

    ``measured`` may hold box dimensions under the keys ``J``, ``K``,
    ``Kminus``, ``Jplus`` and ``Jminus``.  ``jpm`` is the
    :class:`~polyauto.thermo.JpmBound` (only used when ``hyperbolic``).
    """
    n, d, l = m.n, m.degree, m.regularity_index
    vol = m.volume_decreasing
    ind = m.indeterminacy.minus
    dim_im0 = ind is not None and ind.dim == 0
    regular = m.regular and l is not None
    b = [
        Bound("upper_Kminus", 2 * n + 2 * math.log(abs(m.det)) / s_minus if vol else None,
              "volume_decreasing", vol),
        Bound("lower_J", max(l * math.log(d) / s_plus, l * math.log(d) / s_minus) if regular else None,
              "regular", regular),
        Bound("lower_Jplus", 2 * n - 2 + math.log(d) / s_plus if dim_im0 else None,
              "dim_I_minus_0", dim_im0),
        Bound("upper_Jpm", jpm.value if (hyperbolic and jpm is not None) else None,
              "hyperbolic_heuristic", bool(hyperbolic and jpm is not None)),
        Bound("measure_lower", l * math.log(d) * (1 / s_plus + 1 / s_minus)
              if (hyperbolic and regular) else None, "hyperbolic_heuristic",
              bool(hyperbolic and regular)),
    ]
    vals = {x.name: x.value for x in b if x.holds}
    checks = []

    def le(name, lhs, rhs):
        if lhs is not None and rhs is not None:
            checks.append(Check(name, float(lhs), float(rhs), lhs <= rhs + tol))

    J = measured.get("J")
    le("lower_J<=boxdim_J", vals.get("lower_J"), J)
    le("measure_lower<=boxdim_J", vals.get("measure_lower"), J)
    le("boxdim_Kminus<=upper_Kminus", measured.get("Kminus"), vals.get("upper_Kminus"))
    le("boxdim_K<=upper_Kminus", measured.get("K"), vals.get("upper_Kminus"))
    le("lower_Jplus<=boxdim_Jplus", vals.get("lower_Jplus"), measured.get("Jplus"))
    for key in ("Jplus", "Jminus"):
        le(f"boxdim_{key}<=upper_Jpm", measured.get(key), vals.get("upper_Jpm"))
    if "upper_Jpm" in vals:
        checks.append(Check("upper_Jpm<2n", vals["upper_Jpm"], 2 * n, vals["upper_Jpm"] < 2 * n))
    return DimensionReport(dict(measured), b, checks, s_plus, s_minus)


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass
class SweepStep:
    param: float
    t_u: float
    t_s: float
    boxdim_J: float
    hyperbolic: bool
    flagged: bool = False
    note: str = ""


@dataclass
class SweepResult:
    steps: list[SweepStep]
    differences: list[float]  # adjacent-step changes of t^u
    second_differences: list[float]

    def rows(self):
        return [{"param": s.param, "t_u": s.t_u, "t_s": s.t_s, "boxdim_J": s.boxdim_J,
                 "hyperbolic": s.hyperbolic, "flagged": s.flagged, "note": s.note}
                for s in self.steps]


def smoothness(values: Sequence[float], jump: float = JUMP):
    """Adjacent differences, second differences and indices of jumps above ``jump``."""
    v = np.asarray(values, dtype=float)
    d1 = np.diff(v)
    d2 = np.diff(v, 2)
    bad = [i + 1 for i in np.flatnonzero(np.abs(d1) > jump)]
    return d1, d2, bad


def dimension_sweep(build: Callable[[float], MapSpec], params: Sequence[float], k_max: int, *,
                    radius: Callable[[MapSpec], FiltrationSpec], census: Callable,
                    scales=range(3, 10), gap_threshold: float = 0.1) -> SweepResult:
    """t^u, t^s and boxdim(J) along a parameter path.

    ``radius(m)`` returns the filtration for a map and ``census(m, fs)`` a
    dict of censuses through ``k_max``.  Steps where the hyperbolicity
    heuristic fails, or whose t^u or t^s jumps by more than 0.05 from the
    previous step, are flagged; the sweep always continues.
    """
    from .thermo import ThermoError, bowen_ruelle_root, hyperbolicity_heuristic

    steps = []
    for c in params:
        m = build(c)
        fs = radius(m)
        cs = census(m, fs)
        note = ""
        try:
            tu = bowen_ruelle_root(cs, "unstable", k_max).t
            ts = bowen_ruelle_root(cs, "stable", k_max).t
        except ThermoError as e:
            tu = ts = math.nan
            note = str(e)
        pts = sample_julia(m, fs, "saddles", censuses=cs, k_max=k_max).points
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bd = box_dimension(pts, scales=scales).slope
        hyp = hyperbolicity_heuristic(m, pts, gap_threshold=gap_threshold).ok
        steps.append(SweepStep(float(c), tu, ts, bd, hyp, not hyp or bool(note), note))
    for key in ("t_u", "t_s"):
        _, _, bad = smoothness([getattr(s, key) for s in steps])
        for i in bad:
            steps[i].flagged = True
            steps[i].note = (steps[i].note + f" {key} jump").strip()
    d1, d2, _ = smoothness([s.t_u for s in steps])
    return SweepResult(steps, [float(x) for x in d1], [float(x) for x in d2])
