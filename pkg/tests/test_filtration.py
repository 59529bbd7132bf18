import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyauto.filtration import (
    FiltrationError,
    Region,
    choose_radius,
    default_regions,
    verify_filtration,
)
from polyauto.maps import build_fornaess_wu, eval_forward, eval_inverse, henon


def test_region_codes_for_henon():
    fs = default_regions(henon(-6.0, 1.0), 4.0)
    P = np.array([[0, 0], [1, 5], [5, 1], [5, 5], [5, 5j], [4, 4]], dtype=complex)
    assert list(fs.regions(P)) == [Region.V, Region.VMINUS, Region.VPLUS,
                                   Region.VMINUS, Region.VMINUS, Region.V]


def test_region_groups_for_fornaess_wu():
    m = build_fornaess_wu("H1", [(2, 0, 1), (0, 2, 1)], [-1, 0, 1], 0.5)
    fs = default_regions(m, 2.0)
    P = np.array([[3, 0, 1], [0, 1, 3], [1, 1, 1]], dtype=complex)
    assert list(fs.regions(P)) == [Region.VMINUS, Region.VPLUS, Region.V]


def test_nonpositive_radius_is_rejected():
    with pytest.raises(FiltrationError):
        default_regions(henon(-6.0), 0.0)


def test_horseshoe_radius_passes(horseshoe):
    m, fs = horseshoe
    rep = verify_filtration(m, fs, samples=5000, seed=7)
    assert rep.ok, rep.rows()
    assert rep.samples == 5000
    assert rep.max_escape_steps is not None


def test_small_radius_reports_witness(horseshoe):
    m, _ = horseshoe
    rep = verify_filtration(m, default_regions(m, 0.1), samples=2000, seed=7)
    assert rep.violations > 0
    bad = [c for c in rep.checks if c.violations]
    assert all(c.witness is not None and c.witness.shape == (2,) for c in bad)
    assert any(r["witness"] for r in rep.rows())


def test_verification_is_seeded(horseshoe):
    m, _ = horseshoe
    fs = default_regions(m, 1.0)
    a = verify_filtration(m, fs, samples=3000, seed=3)
    b = verify_filtration(m, fs, samples=3000, seed=3, workers=2)
    assert a.rows() == b.rows()


def test_choose_radius_returns_verified_radius():
    m = henon(-1.0, 0.5)
    fs = choose_radius(m, samples=2000, iters=30, seed=1)
    assert verify_filtration(m, fs, samples=4000, seed=2).ok


R = 4.140625
big = st.floats(R * 1.0001, 50.0)
phase = st.floats(0.0, 2 * np.pi)


@settings(max_examples=200, deadline=None)
@given(r=big, t=phase, s=st.floats(0.0, 0.999), u=phase)
def test_minus_region_maps_into_itself(r, t, s, u):
    m = henon(-6.0, 1.0)
    fs = default_regions(m, R)
    p = np.array([s * r * np.exp(1j * u), r * np.exp(1j * t)])
    assert fs.regions(p) == Region.VMINUS
    q = eval_forward(m, p)
    assert fs.regions(q) == Region.VMINUS
    assert abs(q[1]) > abs(p[1])


@settings(max_examples=200, deadline=None)
@given(r=big, t=phase, s=st.floats(0.0, 0.999), u=phase)
def test_plus_region_maps_into_itself_backward(r, t, s, u):
    m = henon(-6.0, 1.0)
    fs = default_regions(m, R)
    p = np.array([r * np.exp(1j * t), s * r * np.exp(1j * u)])
    assert fs.regions(p) == Region.VPLUS
    assert fs.regions(eval_inverse(m, p)) == Region.VPLUS
