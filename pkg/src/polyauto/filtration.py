"""Concrete filtration regions V, V+, V- and their Monte Carlo verification.

Coordinates are split into a "minus" group, which dominates along forward
escaping orbits, and a "plus" group, which dominates along backward escaping
orbits.  With ``gm`` and ``gp`` the max-moduli over the two groups:

* ``V-`` : ``gm > R`` and ``gm >= gp``
* ``V+`` : ``gp > R`` and ``gp > gm``
* ``V``  : everything else (the closed polydisk of radius R).

For Henon maps this is the bidisk partition with ``V- = {|y| > R, |y| >= |x|}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .maps import MapSpec, as_points, eval_forward, eval_inverse, is_escaped
from .parallel import chunk_bounds, pmap, rng_for


class FiltrationError(RuntimeError):
    pass


class Region(enum.IntEnum):
    V = 0
    VPLUS = 1
    VMINUS = 2


@dataclass(frozen=True)
class FiltrationSpec:
    radius: float
    minus_group: tuple[int, ...]
    plus_group: tuple[int, ...]
    margin: float = 1.0

    def regions(self, p, escaped_as: Region | None = None) -> np.ndarray:
        """Region code of each point.  Escaped rows get ``escaped_as``."""
        P = np.asarray(p)
        with np.errstate(invalid="ignore"):
            A = np.abs(P)
            gm = A[..., list(self.minus_group)].max(axis=-1)
            gp = A[..., list(self.plus_group)].max(axis=-1)
        out = np.full(P.shape[:-1], Region.V, dtype=np.int8)
        R = self.radius
        out[(gp > R) & (gp > gm)] = Region.VPLUS
        out[(gm > R) & (gm >= gp)] = Region.VMINUS
        if escaped_as is not None:
            out[is_escaped(P)] = escaped_as
        return out


def default_regions(m: MapSpec, R: float, margin: float = 1.0) -> FiltrationSpec:
    if not R > 0:
        raise FiltrationError(f"filtration radius must be positive, got {R}")
    return FiltrationSpec(float(R), tuple(m.family.minus_group),
                          tuple(m.family.plus_group), margin)


# ---------------------------------------------------------------------------
# verification

PROPERTIES = (
    "i: f(V-) in V-",
    "ii: f(V- u V) in V- u V",
    "iii: f^-1(V+) in V+",
    "iv: f^-1(V+ u V) in V+ u V",
    "escape: V- orbits stay in V- and escape",
    "escape: V+ backward orbits stay in V+ and escape",
    "K-invariance: f(K+ n V) in V",
    "K-invariance: f^-1(K- n V) in V",
)


@dataclass
class PropertyCheck:
    name: str
    samples: int = 0
    violations: int = 0
    witness_index: int | None = None
    witness: np.ndarray | None = None

    def merge(self, other: "PropertyCheck") -> None:
        self.samples += other.samples
        self.violations += other.violations
        if other.witness_index is not None and (
                self.witness_index is None or other.witness_index < self.witness_index):
            self.witness_index = other.witness_index
            self.witness = other.witness


@dataclass
class FiltrationReport:
    radius: float
    checks: list[PropertyCheck]
    max_escape_steps: int | None = None
    samples: int = 0

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def rows(self) -> list[dict]:
        out = []
        for c in self.checks:
            w = "" if c.witness is None else " ".join(
                f"{z.real:.17g}{z.imag:+.17g}j" for z in c.witness)
            out.append({"property": c.name, "samples": c.samples,
                        "violations": c.violations, "witness": w})
        return out


def _sample_points(rng: np.random.Generator, count: int, n: int, R: float) -> np.ndarray:
    """Half uniform in the polydisk of radius 2R, half log-radial out to 1e3 R."""
    half = count // 2
    r = 2 * R * np.sqrt(rng.random((half, n)))
    r2 = R * 10.0 ** rng.uniform(-3.0, 3.0, (count - half, n))
    mod = np.concatenate([r, r2])
    ang = rng.uniform(0.0, 2 * np.pi, (count, n))
    return mod * np.exp(1j * ang)


def _check(name, mask_tested, mask_bad, P, offset) -> PropertyCheck:
    pc = PropertyCheck(name, int(mask_tested.sum()), int((mask_tested & mask_bad).sum()))
    bad = np.flatnonzero(mask_tested & mask_bad)
    if bad.size:
        pc.witness_index = offset + int(bad[0])
        pc.witness = P[bad[0]].copy()
    return pc


def _orbit_stays(m, fs, P, iters, forward):
    """(stayed-in-region-until-escape, escaped, steps-to-escape) for each row."""
    step = eval_forward if forward else eval_inverse
    target = Region.VMINUS if forward else Region.VPLUS
    stay = np.ones(len(P), dtype=bool)
    esc_step = np.full(len(P), -1)
    Q = P
    for k in range(1, iters + 1):
        Q = step(m, Q)
        esc = is_escaped(Q)
        newly = esc & (esc_step < 0)
        esc_step[newly] = k
        live = ~esc
        stay[live] &= fs.regions(Q[live]) == target
    return stay, esc_step >= 0, esc_step


# Orbits that stay bounded this many steps stand in for points of K+ or K-.
# Longer segments lose every approximant: a point at distance r from K+
# escapes after about log(1/r)/log|lambda| steps, and r is at least rounding.
K_DEPTH = 12


def _bounded(m, P, iters, forward):
    step = eval_forward if forward else eval_inverse
    Q = P
    ok = np.ones(len(P), dtype=bool)
    for _ in range(iters):
        Q = step(m, Q)
        ok &= ~is_escaped(Q)
    return ok


def _verify_chunk(args):
    m, fs, P, offset, iters = args
    reg = fs.regions(P)
    fP = eval_forward(m, P)
    bP = eval_inverse(m, P)
    rf = fs.regions(fP, escaped_as=Region.VMINUS)
    rb = fs.regions(bP, escaped_as=Region.VPLUS)
    inm, inp, inv = reg == Region.VMINUS, reg == Region.VPLUS, reg == Region.V
    checks = [
        _check(PROPERTIES[0], inm, rf != Region.VMINUS, P, offset),
        _check(PROPERTIES[1], inm | inv, rf == Region.VPLUS, P, offset),
        _check(PROPERTIES[2], inp, rb != Region.VPLUS, P, offset),
        _check(PROPERTIES[3], inp | inv, rb == Region.VMINUS, P, offset),
    ]
    esc_steps = []
    for name, mask, fwd in ((PROPERTIES[4], inm, True), (PROPERTIES[5], inp, False)):
        idx = np.flatnonzero(mask)
        stay, esc, steps = _orbit_stays(m, fs, P[idx], iters, fwd)
        bad = np.zeros(len(P), dtype=bool)
        bad[idx] = ~(stay & esc)
        checks.append(_check(name, mask, bad, P, offset))
        if fwd and esc.any():
            esc_steps.append(int(steps[esc].max()))
    depth = min(iters, K_DEPTH)
    kplus = inv & _bounded(m, P, depth, True)
    kminus = inv & _bounded(m, P, depth, False)
    checks.append(_check(PROPERTIES[6], kplus, rf != Region.V, P, offset))
    checks.append(_check(PROPERTIES[7], kminus, rb != Region.V, P, offset))
    return checks, (max(esc_steps) if esc_steps else None)


def _anchor_points(m, anchors, count, seed, depth):
    """Points near K+ and K- obtained by pulling back / pushing forward
    small perturbations of points of K (for instance saddle periodic points)."""
    A = as_points(anchors, m.n).reshape(-1, m.n)
    rng = rng_for(seed, 2**32 + 1)
    base = A[rng.integers(0, len(A), count)]
    eps = 1e-6 * np.exp(1j * rng.uniform(0, 2 * np.pi, base.shape))
    start = base + eps
    steps = rng.integers(0, depth + 1, count)
    plus, minus = start.copy(), start.copy()
    for k in range(depth):
        go = steps > k
        plus[go] = eval_inverse(m, plus[go])
        minus[go] = eval_forward(m, minus[go])
    pts = np.concatenate([plus, minus])
    return pts[~is_escaped(pts)]


def verify_filtration(m: MapSpec, fs: FiltrationSpec, samples: int = 100_000,
                      iters: int = 40, seed: int = 0, anchors=None,
                      workers: int = 1) -> FiltrationReport:
    """Monte Carlo check of the four filtration inclusions, escape along V-/V+
    and invariance of bounded-orbit approximants of K+ and K- inside V.

    ``anchors`` optionally supplies points of K; perturbations of them are
    transported along stable/unstable directions to populate K+- n V, which
    plain uniform samples essentially never hit.
    """
    tasks = []
    for ci, (lo, hi) in enumerate(chunk_bounds(samples)):
        P = _sample_points(rng_for(seed, ci), hi - lo, m.n, fs.radius)
        tasks.append((m, fs, P, lo, iters))
    if anchors is not None and len(anchors):
        extra = _anchor_points(m, anchors, max(samples // 10, 1), seed, iters // 2)
        for lo, hi in chunk_bounds(len(extra)):
            tasks.append((m, fs, extra[lo:hi], samples + lo, iters))
    results = pmap(_verify_chunk, tasks, workers)
    checks = [PropertyCheck(name) for name in PROPERTIES]
    max_steps = None
    for chunk_checks, steps in results:
        for acc, c in zip(checks, chunk_checks):
            acc.merge(c)
        if steps is not None:
            max_steps = steps if max_steps is None else max(max_steps, steps)
    total = sum(len(t[2]) for t in tasks)
    return FiltrationReport(fs.radius, checks, max_steps, total)


def choose_radius(m: MapSpec, samples: int = 20_000, iters: int = 40, seed: int = 0,
                  r0: float = 1.0, rmax: float = 1e6, rel_tol: float = 1e-2,
                  margin: float = 1.25, anchors=None, workers: int = 1) -> FiltrationSpec:
    """Smallest verified radius from a doubling-then-bisection search.

    The returned spec uses ``margin`` times the accepted radius (itself
    re-verified), which keeps larger acceptance budgets from finding
    violations in the thin shell just above the search threshold.
    """
    if not r0 > 0:
        raise FiltrationError("initial radius must be positive")

    def ok(R):
        return verify_filtration(m, default_regions(m, R), samples, iters, seed,
                                 anchors, workers).ok

    R = r0
    if ok(R):
        lo, hi = 0.0, R
    else:
        while not ok(R):
            if R * 2 > rmax:
                raise FiltrationError("filtration radius search failed")
            R *= 2
        lo, hi = R / 2, R
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    R = hi * margin
    while not ok(R):
        if R * 2 > rmax:
            raise FiltrationError("filtration radius search failed")
        R *= 2
    return default_regions(m, R, margin)
