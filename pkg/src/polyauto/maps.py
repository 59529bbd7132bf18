"""Built-in regular polynomial automorphisms of C^n.

Three families are supported:

* ``HenonComposition``: finite compositions of generalized Henon stages
  ``h(x, y) = (y, p(y) - a*x)`` in C^2, applied first stage first.
* ``FornaessWu``: the quadratic maps of C^3
  ``H1 = (P(x,y) + a z, Q(y) + x, y)`` and ``H2 = (P(x,y) + a z, Q(x) + b y, x)``.
* ``ShiftLike``: ``(z_1, ..., z_n) -> (z_2, ..., z_n, p(z_n) + a z_1)``.

Points are complex arrays whose last axis has length ``n``; every evaluation
routine is vectorized over the leading axes.  Degrees and indeterminacy loci
are computed with exact rational arithmetic in sympy, never by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
import sympy as sp

ESCAPE_RADIUS = 1e100
ESCAPED = complex(np.inf, 0.0)


class MapError(ValueError):
    """Raised for invalid map parameters."""


# ---------------------------------------------------------------------------
# points


def as_points(p, n: int | None = None) -> np.ndarray:
    arr = np.asarray(p, dtype=np.complex128)
    if arr.ndim == 0:
        raise MapError("a point needs at least one coordinate")
    if n is not None and arr.shape[-1] != n:
        raise MapError(f"expected points in C^{n}, got trailing axis {arr.shape[-1]}")
    return arr


def is_escaped(p) -> np.ndarray:
    """Mask of points flagged as escaped (non-finite or beyond ESCAPE_RADIUS)."""
    arr = np.asarray(p)
    with np.errstate(invalid="ignore", over="ignore"):
        big = np.abs(arr) > ESCAPE_RADIUS
    return (~np.isfinite(arr) | big).any(axis=-1)


def max_norm(p) -> np.ndarray:
    return np.abs(np.asarray(p)).max(axis=-1)


def _to_sympy(c: complex):
    c = complex(c)
    return sp.Rational(c.real) + sp.I * sp.Rational(c.imag)


# ---------------------------------------------------------------------------
# one-variable polynomials


@dataclass(frozen=True)
class Poly1:
    """Polynomial ``c_0 + c_1 z + ... + c_m z^m`` with complex coefficients."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise MapError("polynomial degree must be at least 1")
        if coeffs[-1] == 0:
            raise MapError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        acc = np.full(z.shape, self.coeffs[-1], dtype=np.complex128)
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def deriv(self, z):
        z = np.asarray(z, dtype=np.complex128)
        m = self.degree
        acc = np.full(z.shape, m * self.coeffs[-1], dtype=np.complex128)
        for j in range(m - 1, 0, -1):
            acc = acc * z + j * self.coeffs[j]
        return acc

    def sym(self, z):
        return sum(_to_sympy(c) * z**j for j, c in enumerate(self.coeffs))

    def scaled(self, s: complex) -> "Poly1":
        return Poly1(tuple(c * s for c in self.coeffs))


def quadratic(c: complex) -> Poly1:
    """``z^2 + c``."""
    return Poly1((c, 0.0, 1.0))


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class HenonStage:
    p: Poly1
    a: complex


@dataclass(frozen=True)
class HenonComposition:
    stages: tuple[HenonStage, ...]
    n: int = field(default=2, init=False)
    name: str = field(default="henon", init=False)

    def forward(self, P):
        x, y = P[..., 0], P[..., 1]
        for st in self.stages:
            x, y = y, st.p(y) - st.a * x
        return np.stack([x, y], axis=-1)

    def inverse(self, P):
        x, y = P[..., 0], P[..., 1]
        for st in reversed(self.stages):
            x, y = (st.p(x) - y) / st.a, x
        return np.stack([x, y], axis=-1)

    def jacobian(self, P):
        x, y = P[..., 0], P[..., 1]
        J = np.broadcast_to(np.eye(2, dtype=np.complex128), P.shape[:-1] + (2, 2)).copy()
        for st in self.stages:
            D = np.zeros(P.shape[:-1] + (2, 2), dtype=np.complex128)
            D[..., 0, 1] = 1.0
            D[..., 1, 0] = -st.a
            D[..., 1, 1] = st.p.deriv(y)
            J = D @ J
            x, y = y, st.p(y) - st.a * x
        return J

    def det(self) -> complex:
        # Df of one stage is [[0, 1], [-a, p'(y)]], whose determinant is +a
        return complex(np.prod([st.a for st in self.stages]))

    def sym_forward(self, z):
        x, y = z
        for st in self.stages:
            x, y = y, st.p.sym(y) - _to_sympy(st.a) * x
        return [x, y]

    def sym_inverse(self, z):
        x, y = z
        for st in reversed(self.stages):
            x, y = (st.p.sym(x) - y) / _to_sympy(st.a), x
        return [x, y]

    # coordinate groups dominating near I^- (forward escape) and I^+
    minus_group = (1,)
    plus_group = (0,)


@dataclass(frozen=True)
class FornaessWu:
    variant: str  # "H1" or "H2"
    P: tuple[tuple[int, int, complex], ...]  # (i, j, c) for c x^i y^j
    Q: Poly1
    a: complex
    b: complex = 1.0
    n: int = field(default=3, init=False)
    name: str = field(default="fornaess_wu", init=False)

    minus_group = (0, 1)
    plus_group = (2,)

    def _P(self, x, y):
        return sum(c * x**i * y**j for i, j, c in self.P) + 0 * x

    def _Px(self, x, y):
        return sum(i * c * x ** (i - 1) * y**j for i, j, c in self.P if i > 0) + 0 * x

    def _Py(self, x, y):
        return sum(j * c * x**i * y ** (j - 1) for i, j, c in self.P if j > 0) + 0 * x

    def forward(self, P):
        x, y, z = P[..., 0], P[..., 1], P[..., 2]
        u = self._P(x, y) + self.a * z
        if self.variant == "H1":
            return np.stack([u, self.Q(y) + x, y], axis=-1)
        return np.stack([u, self.Q(x) + self.b * y, x], axis=-1)

    def inverse(self, P):
        u, v, w = P[..., 0], P[..., 1], P[..., 2]
        if self.variant == "H1":
            y = w
            x = v - self.Q(w)
        else:
            x = w
            y = (v - self.Q(w)) / self.b
        z = (u - self._P(x, y)) / self.a
        return np.stack([x, y, z], axis=-1)

    def jacobian(self, P):
        x, y = P[..., 0], P[..., 1]
        J = np.zeros(P.shape[:-1] + (3, 3), dtype=np.complex128)
        J[..., 0, 0] = self._Px(x, y)
        J[..., 0, 1] = self._Py(x, y)
        J[..., 0, 2] = self.a
        if self.variant == "H1":
            J[..., 1, 0] = 1.0
            J[..., 1, 1] = self.Q.deriv(y)
            J[..., 2, 1] = 1.0
        else:
            J[..., 1, 0] = self.Q.deriv(x)
            J[..., 1, 1] = self.b
            J[..., 2, 0] = 1.0
        return J

    def det(self) -> complex:
        # cofactor expansion along the last row of the Jacobian above
        if self.variant == "H1":
            return complex(self.a)
        return complex(-self.a * self.b)

    def _symP(self, x, y):
        return sum(_to_sympy(c) * x**i * y**j for i, j, c in self.P)

    def sym_forward(self, z):
        x, y, w = z
        u = self._symP(x, y) + _to_sympy(self.a) * w
        if self.variant == "H1":
            return [u, self.Q.sym(y) + x, y]
        return [u, self.Q.sym(x) + _to_sympy(self.b) * y, x]

    def sym_inverse(self, z):
        u, v, w = z
        if self.variant == "H1":
            y, x = w, v - self.Q.sym(w)
        else:
            x, y = w, (v - self.Q.sym(w)) / _to_sympy(self.b)
        return [x, y, (u - self._symP(x, y)) / _to_sympy(self.a)]


@dataclass(frozen=True)
class ShiftLike:
    n: int
    p: Poly1
    a: complex
    name: str = field(default="shift_like", init=False)

    @property
    def minus_group(self):
        return (self.n - 1,)

    @property
    def plus_group(self):
        return tuple(range(self.n - 1))

    def forward(self, P):
        last = self.p(P[..., -1]) + self.a * P[..., 0]
        return np.concatenate([P[..., 1:], last[..., None]], axis=-1)

    def inverse(self, P):
        first = (P[..., -1] - self.p(P[..., -2])) / self.a
        return np.concatenate([first[..., None], P[..., :-1]], axis=-1)

    def jacobian(self, P):
        n = self.n
        J = np.zeros(P.shape[:-1] + (n, n), dtype=np.complex128)
        for i in range(n - 1):
            J[..., i, i + 1] = 1.0
        J[..., n - 1, 0] = self.a
        J[..., n - 1, n - 1] += self.p.deriv(P[..., -1])
        return J

    def det(self) -> complex:
        return complex((-1) ** (self.n + 1) * self.a)

    def sym_forward(self, z):
        return list(z[1:]) + [self.p.sym(z[-1]) + _to_sympy(self.a) * z[0]]

    def sym_inverse(self, z):
        return [(z[-1] - self.p.sym(z[-2])) / _to_sympy(self.a)] + list(z[:-1])


# ---------------------------------------------------------------------------
# degree and indeterminacy bookkeeping


@dataclass(frozen=True)
class IndeterminacySet:
    """Vanishing conditions of the leading homogeneous parts at T = 0."""

    conditions: tuple[str, ...]
    dim: int  # projective dimension; -1 means empty

    def __str__(self):
        return "T=0, " + ", ".join(f"{c} = 0" for c in self.conditions)


@dataclass(frozen=True)
class IndeterminacyReport:
    plus: IndeterminacySet | None
    minus: IndeterminacySet | None
    disjoint: bool | None

    @property
    def known(self) -> bool:
        return self.plus is not None


def _symbols(n):
    return sp.symbols(f"z1:{n + 1}")


def _leading_forms(exprs, zs):
    polys = [sp.Poly(sp.expand(e), *zs) for e in exprs]
    deg = max(p.total_degree() for p in polys)
    forms = []
    for p in polys:
        if p.total_degree() != deg:
            continue
        form = sum(c * sp.prod([z**e for z, e in zip(zs, mon)])
                   for mon, c in p.terms() if sum(mon) == deg)
        forms.append(sp.expand(form))
    return deg, forms


def _projective_dim(forms, zs) -> int:
    """Dimension of the projective zero set of homogeneous ``forms``.

    Krull dimension of the cone from the leading monomials of a grevlex
    Groebner basis (largest independent set of variables), minus one.
    """
    G = sp.groebner(forms, *zs, order="grevlex")
    exprs = list(G.exprs)
    if any(e.is_number and e != 0 for e in exprs):
        return -1
    lms = [sp.Poly(g, *zs).monoms(order="grevlex")[0] for g in exprs]
    idx = range(len(zs))
    for r in range(len(zs), -1, -1):
        for S in combinations(idx, r):
            if all(any(e > 0 and i not in S for i, e in enumerate(lm)) for lm in lms):
                return r - 1
    return -1


def _describe(forms, zs) -> tuple[str, ...]:
    out = []
    for f in forms:
        lc = sp.Poly(f, *zs).LC(order="grevlex")
        out.append(str(sp.N(sp.expand(f / lc), 8)).replace("1.0*", ""))
    return tuple(out)


def _symbolic_data(fam):
    zs = _symbols(fam.n)
    d, fplus = _leading_forms(fam.sym_forward(zs), zs)
    dinv, fminus = _leading_forms(fam.sym_inverse(zs), zs)
    plus = IndeterminacySet(_describe(fplus, zs), _projective_dim(fplus, zs))
    minus = IndeterminacySet(_describe(fminus, zs), _projective_dim(fminus, zs))
    disjoint = _projective_dim(fplus + fminus, zs) < 0
    return d, dinv, IndeterminacyReport(plus, minus, disjoint)


def regularity_index(d: int, dinv: int, n: int) -> int | None:
    """Smallest ``l`` in ``1..n-1`` with ``d**l == dinv**(n-l)``, else None."""
    for l in range(1, n):
        if d**l == dinv ** (n - l):
            return l
    return None


@dataclass(frozen=True)
class MapSpec:
    family: HenonComposition | FornaessWu | ShiftLike
    degree: int
    inverse_degree: int
    regularity_index: int | None
    det: complex
    indeterminacy: IndeterminacyReport
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def name(self) -> str:
        return self.family.name

    @property
    def regular(self) -> bool:
        return (self.degree > 1 and self.regularity_index is not None
                and bool(self.indeterminacy.disjoint))

    @property
    def volume_decreasing(self) -> bool:
        return abs(self.det) < 1.0

    def summary(self) -> dict:
        ind = self.indeterminacy
        return {
            "family": self.name,
            "n": self.n,
            "d": self.degree,
            "d_inverse": self.inverse_degree,
            "l": self.regularity_index if self.regularity_index is not None else "none",
            "det_re": self.det.real,
            "det_im": self.det.imag,
            "abs_det": abs(self.det),
            "I_plus": str(ind.plus) if ind.plus else "unknown",
            "dim_I_plus": ind.plus.dim if ind.plus else "unknown",
            "I_minus": str(ind.minus) if ind.minus else "unknown",
            "dim_I_minus": ind.minus.dim if ind.minus else "unknown",
            "I_disjoint": ind.disjoint if ind.disjoint is not None else "unknown",
            "regular": self.regular,
        }


def _finish(fam, warnings=()) -> MapSpec:
    d, dinv, ind = _symbolic_data(fam)
    l = regularity_index(d, dinv, fam.n)
    warnings = list(warnings)
    if l is None:
        warnings.append(f"degree relation d^l = d_inv^(n-l) has no solution (d={d}, d_inv={dinv})")
    if ind.disjoint is False:
        warnings.append("I+ and I- intersect: map is not regular")
    return MapSpec(fam, d, dinv, l, fam.det(), ind, tuple(warnings))


def _coerce_poly(p) -> Poly1:
    return p if isinstance(p, Poly1) else Poly1(tuple(p))


def build_henon_composition(stages: Sequence[tuple]) -> MapSpec:
    """Compose Henon stages ``(p_i, a_i)``; stage 0 is applied first."""
    if len(stages) == 0:
        raise MapError("at least one stage is required")
    built = []
    for i, (p, a) in enumerate(stages):
        p = _coerce_poly(p)
        if p.degree < 2:
            raise MapError(f"stage {i}: deg p = {p.degree} < 2")
        if complex(a) == 0:
            raise MapError(f"stage {i}: a = 0 makes the stage non-invertible")
        built.append(HenonStage(p, complex(a)))
    return _finish(HenonComposition(tuple(built)))


def henon(c: complex, a: complex = 1.0) -> MapSpec:
    """Single quadratic stage ``(x, y) -> (y, y^2 + c - a x)``."""
    return build_henon_composition([(quadratic(c), a)])


def _normalize_P(P) -> tuple[tuple[int, int, complex], ...]:
    if isinstance(P, dict):
        items = [(i, j, c) for (i, j), c in P.items()]
    else:
        items = [tuple(t) for t in P]
    acc: dict[tuple[int, int], complex] = {}
    for i, j, c in items:
        if i < 0 or j < 0:
            raise MapError("P exponents must be nonnegative")
        acc[(int(i), int(j))] = acc.get((int(i), int(j)), 0) + complex(c)
    return tuple((i, j, c) for (i, j), c in sorted(acc.items()) if c != 0)


def build_fornaess_wu(which: str, P, Q, a: complex, b: complex = 1.0) -> MapSpec:
    """Quadratic Fornaess-Wu map ``H1`` or ``H2`` of C^3.

    ``P`` maps exponent pairs ``(i, j)`` to the coefficient of ``x^i y^j``.
    It must be quadratic with degree two in ``x`` and degree two in ``y``
    separately (both ``x^2`` and ``y^2`` present, no term above total degree 2).
    """
    which = which.upper()
    if which not in ("H1", "H2"):
        raise MapError(f"unknown Fornaess-Wu variant {which!r}")
    a, b = complex(a), complex(b)
    if a == 0:
        raise MapError("a = 0 makes the map non-invertible")
    if which == "H2" and b == 0:
        raise MapError("b = 0 makes H2 non-invertible")
    terms = _normalize_P(P)
    if any(i + j > 2 for i, j, _ in terms):
        raise MapError("P must have total degree at most 2")
    powers = {(i, j) for i, j, _ in terms}
    if (2, 0) not in powers or (0, 2) not in powers:
        raise MapError("P must have degree two in each variable (x^2 and y^2 terms)")
    Q = _coerce_poly(Q)
    if Q.degree != 2:
        raise MapError("Q must have degree two")
    return _finish(FornaessWu(which, terms, Q, a, b if which == "H2" else 1.0))


def build_shift_like(n: int, p, a: complex) -> MapSpec:
    if n < 2:
        raise MapError("shift-like maps need n >= 2")
    p = _coerce_poly(p)
    if p.degree < 2:
        raise MapError("deg p must be at least 2")
    if complex(a) == 0:
        raise MapError("a = 0 makes the map non-invertible")
    return _finish(ShiftLike(n, p, complex(a)))


def swap_inverse(m: MapSpec) -> MapSpec:
    """Henon composition conjugate to ``f^-1`` by the swap ``(x, y) -> (y, x)``.

    The swap conjugates the inverse of ``(y, p(y) - a x)`` to the stage
    ``(y, p(y)/a - x/a)``; stages are taken in reverse order.
    """
    if not isinstance(m.family, HenonComposition):
        raise MapError("swap_inverse is only defined for Henon compositions")
    stages = [(st.p.scaled(1 / st.a), 1 / st.a) for st in reversed(m.family.stages)]
    return build_henon_composition(stages)


# ---------------------------------------------------------------------------
# evaluation


def _apply(fn, m: MapSpec, p) -> np.ndarray:
    P = as_points(p, m.n)
    out = np.full(P.shape, ESCAPED, dtype=np.complex128)
    live = ~is_escaped(P)
    with np.errstate(all="ignore"):
        out[live] = fn(P[live])
    out[is_escaped(out)] = ESCAPED
    return out


def eval_forward(m: MapSpec, p) -> np.ndarray:
    """Image ``f(p)``; escaped points come back as rows of ``inf``."""
    return _apply(m.family.forward, m, p)


def eval_inverse(m: MapSpec, p) -> np.ndarray:
    return _apply(m.family.inverse, m, p)


def iterate(m: MapSpec, p, k: int) -> np.ndarray:
    """``f^k(p)`` for integer ``k`` (negative means the inverse)."""
    step = eval_forward if k >= 0 else eval_inverse
    P = as_points(p, m.n)
    for _ in range(abs(k)):
        P = step(m, P)
    return P


def jacobian(m: MapSpec, p) -> np.ndarray:
    P = as_points(p, m.n)
    return m.family.jacobian(P)


def jacobian_inverse(m: MapSpec, p) -> np.ndarray:
    """``D(f^-1)(p) = Df(f^-1(p))^-1``."""
    P = as_points(p, m.n)
    return np.linalg.inv(m.family.jacobian(m.family.inverse(P)))


def det_df(m: MapSpec) -> complex:
    return m.det


def indeterminacy_sets(m: MapSpec) -> IndeterminacyReport:
    return m.indeterminacy
