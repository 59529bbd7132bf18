import numpy as np
import pytest

from polyauto.filtration import Region, default_regions
from polyauto.maps import build_fornaess_wu, eval_forward, henon, iterate
from polyauto.orbits import (
    Stability,
    Verdict,
    basin_map,
    classify_multipliers,
    classify_point,
    classify_points,
    find_attracting_cycles,
    find_periodic_points,
)


def quadratic_fixed_points(c, a):
    # x = y and x^2 - (1 + a) x + c = 0
    return np.roots([1.0, -(1.0 + a), c])


def shooting_oracle(c, a, k, seeds=4000, seed=0):
    """Fixed points of f^k from Newton on the cyclic recurrence
    z[i+1] + a z[i-1] = z[i]^2 + c, solved for all k unknowns at once."""
    rng = np.random.default_rng(seed)
    Z = rng.uniform(-4, 4, (seeds, k)) + 1j * rng.uniform(-0.5, 0.5, (seeds, k))
    idx = np.arange(k)
    for _ in range(80):
        zp, zm = np.roll(Z, -1, 1), np.roll(Z, 1, 1)
        F = zp + a * zm - Z**2 - c
        J = np.zeros((seeds, k, k), dtype=complex)
        J[:, idx, idx] = -2 * Z
        J[:, idx, (idx + 1) % k] += 1.0
        J[:, idx, (idx - 1) % k] += a
        with np.errstate(all="ignore"):
            step = np.linalg.solve(J, F[..., None])[..., 0]
        Z = Z - np.nan_to_num(step, nan=1e6)
        Z[np.abs(Z) > 1e3] = 1e3
    F = np.roll(Z, -1, 1) + a * np.roll(Z, 1, 1) - Z**2 - c
    good = Z[np.abs(F).max(1) < 1e-10]
    pts = np.stack([np.roll(good, 1, 1)[:, 0], good[:, 0]], axis=1)  # (z[-1], z[0])
    out = []
    for p in pts:
        if not any(np.abs(p - q).max() < 1e-7 for q in out):
            out.append(p)
    return np.array(out)


def test_fixed_points_match_closed_form(horseshoe_census):
    roots = np.sort_complex(quadratic_fixed_points(-6.0, 1.0))
    got = np.sort_complex(np.array([o.rep[0] for o in horseshoe_census[1].orbits]))
    assert np.abs(got - roots).max() < 1e-9
    for o in horseshoe_census[1].orbits:
        assert abs(o.rep[0] - o.rep[1]) < 1e-12


def test_period_two_closed_form(horseshoe01):
    m, fs = horseshoe01
    a, c = 0.1, -6.0
    # two-cycles satisfy z0 + z1 = -(1 + a), z0 z1 = (1 + a)^2 + c
    z = np.roots([1.0, 1.0 + a, (1.0 + a) ** 2 + c])
    census = find_periodic_points(m, 2, fs.radius, grid=120)
    two = [o for o in census.orbits if o.period == 2]
    assert len(two) == 1 and census.fix_count == 4
    got = np.sort_complex(two[0].points[:, 0])
    assert np.abs(got - np.sort_complex(z)).max() < 1e-9


@pytest.mark.parametrize("k", [3, 4, 5])
def test_census_matches_shooting_oracle(horseshoe01_census, k):
    oracle = shooting_oracle(-6.0, 0.1, k)
    pts = horseshoe01_census[k].points()
    assert len(oracle) == len(pts) == 2**k
    for p in pts:
        assert np.abs(oracle - p).max(axis=1).min() < 1e-8


def test_horseshoe_census_counts(horseshoe_census):
    for k, c in horseshoe_census.items():
        assert c.fix_count == c.saddle_fix_count == 2**k
        assert {o.unstable_index for o in c.orbits} == {1}


def test_orbit_points_are_consecutive_iterates(horseshoe_census):
    for o in horseshoe_census[6].orbits:
        img = eval_forward(henon(-6.0, 1.0), o.points)
        assert np.abs(img - np.roll(o.points, -1, axis=0)).max() < 1e-8
        assert o.residual < 1e-8


def test_census_without_known_target():
    m = build_fornaess_wu("H1", [(2, 0, 1), (0, 2, 1)], [-1, 0, 1], 0.5)
    c = find_periodic_points(m, 1, 2.96875, grid=0, complex_seeds=3000, seed=1)
    assert c.target is None
    assert c.fix_count == 4
    for o in c.orbits:
        assert np.abs(eval_forward(m, o.rep) - o.rep).max() < 1e-9


def test_census_is_independent_of_workers(horseshoe):
    m, fs = horseshoe
    a = find_periodic_points(m, 4, fs.radius, grid=80)
    b = find_periodic_points(m, 4, fs.radius, grid=80, workers=2)
    assert [o.rep.tobytes() for o in a.orbits] == [o.rep.tobytes() for o in b.orbits]


def test_multiplier_classification():
    assert classify_multipliers(np.array([0.5, 0.2])) == (Stability.ATTRACTING, 0)
    assert classify_multipliers(np.array([3.0, 0.1])) == (Stability.SADDLE, 1)
    assert classify_multipliers(np.array([3.0, 2.0])) == (Stability.REPELLING, 2)
    assert classify_multipliers(np.array([1.0, 0.1]))[0] == Stability.INDETERMINATE


def test_attracting_cycle_is_closed_form_fixed_point(attracting):
    m, fs = attracting
    seeds = np.random.default_rng(0).uniform(-1, 1, (200, 2))
    cycles = find_attracting_cycles(m, 4, seeds)
    assert len(cycles) == 1 and cycles[0].period == 1
    x = quadratic_fixed_points(-0.1, 0.3)
    sink = x[np.argmin(np.abs(x))]
    assert np.abs(cycles[0].rep - sink).max() < 1e-9
    assert np.abs(cycles[0].multipliers) == pytest.approx([0.3**0.5] * 2, abs=1e-9)


def test_classification_verdicts(attracting):
    m, fs = attracting
    cycles = find_attracting_cycles(m, 2, np.zeros((1, 2)))
    P = np.array([[0.0, 0.0], [5.0, 5.0], [0.0, 50.0], [50.0, 0.0]], dtype=complex)
    b = classify_points(m, fs, P, 200, cycles=cycles)
    assert list(b.verdict[:3]) == [Verdict.CONVERGES_TO_CYCLE, Verdict.ESCAPES_FORWARD,
                                   Verdict.ESCAPES_FORWARD]
    assert b.cycle[0] == 0
    back = classify_points(m, fs, P[3:], 200, forward=False)
    assert back.verdict[0] == Verdict.ESCAPES_BACKWARD


def test_zero_budget_is_undecided(attracting):
    m, fs = attracting
    v = classify_point(m, fs, [0.1, 0.1], 0)
    assert v.verdict == Verdict.UNDECIDED


def test_saddle_is_bounded_without_cycles(horseshoe_census, horseshoe):
    m, fs = horseshoe
    p = horseshoe_census[1].orbits[0].rep
    # rounding error grows like |lambda|^k on a saddle, so keep the budget short
    v = classify_point(m, fs, p, 10)
    assert v.verdict == Verdict.BOUNDED_NON_ATTRACTED
    assert str(v) == "BoundedNonAttracted(10)"
    assert classify_point(m, fs, p, 200).verdict == Verdict.ESCAPES_FORWARD


def test_escape_step_is_first_entry_into_minus_region(horseshoe):
    m, fs = horseshoe
    p = np.array([0.5, 3.0])
    v = classify_point(m, fs, p, 100)
    assert v.verdict == Verdict.ESCAPES_FORWARD
    assert fs.regions(iterate(m, p, v.k)) == Region.VMINUS
    assert all(fs.regions(iterate(m, p, j)) != Region.VMINUS for j in range(v.k))


def test_basin_grid_partition(attracting):
    m, fs = attracting
    cycles = find_attracting_cycles(m, 2, np.zeros((1, 2)))
    bg = basin_map(m, fs, (-2, 2, -2, 2), 32, 200, cycles=cycles)
    counts = bg.counts()
    assert sum(counts.values()) == 32 * 32
    assert counts["UNDECIDED"] == 0
    assert bg.image().shape == (32, 32)
    assert len(list(bg.rows())) == 32 * 32


def test_basin_map_small_radius_window(attracting):
    m, _ = attracting
    bg = basin_map(m, default_regions(m, 1.62109375), (-0.2, 0.2, -0.2, 0.2), 8, 200,
                   cycles=find_attracting_cycles(m, 1, np.zeros((1, 2))))
    assert bg.counts()["CONVERGES_TO_CYCLE"] == 64
