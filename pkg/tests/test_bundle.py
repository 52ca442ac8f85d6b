import math

import numpy as np
import pytest

from discbundle import models
from discbundle.bundle import (
    CalabiProfile,
    LineBundleWeight,
    ball_bundle_chart,
    calibrate_sectional_scale,
    closed_form_det,
    closed_form_metric,
    disc_bundle_chart,
    domination_residual,
    fiber_ray_length,
    fiber_sampler,
    general_calabi_chart,
    hsc_formula_residual,
    hsc_formula_terms,
    iterated_chart,
    restriction_residual,
    ricci_identity_residual,
    sectional_formula_terms,
    sectional_identity_residual,
)
from discbundle.errors import OutOfRange, OutsideDisc, ProfileInadmissible, WeightNotPositive
from discbundle.kahler import KahlerChart, RealTwoPlane, curvature_at, metric_at, ricci_form_at, ricci_ratio_range
from discbundle.pinch import estimate_sectional_bounds, sect_bound_transfer
from discbundle.polarized import const, log, parse, w, z

from .conftest import random_direction

BASES = {
    "ch1": models.complex_hyperbolic(1),
    "ch2": models.complex_hyperbolic(2),
    "pert1": models.perturbed_ball(1, 0.03),
    "pert2": models.perturbed_ball(2, 0.05, seed=4),
    "flat1": models.flat(1),
    "poly2": models.polydisc_like(2),
}


def disc(name):
    return disc_bundle_chart(models.weight_for(BASES[name]))


def samples(b, count, seed=0):
    rng = np.random.default_rng(seed)
    return [b.total.sample(rng) for _ in range(count)]


def test_point_base_is_the_disc(rng):
    b = disc_bundle_chart(models.get_model("point"))
    assert b.total.m == 1
    for p in samples(b, 10):
        assert curvature_at(b.total, p).hsc([1]) == pytest.approx(-2, abs=1e-12)
        assert metric_at(b.total, p)[0, 0] == pytest.approx(1 / (1 - abs(p[0]) ** 2) ** 2, rel=1e-13)


def test_metric_over_ball_at_center():
    b = disc("ch1")
    for v in (0.0, 0.3, 0.7j):
        r = abs(v) ** 2
        g = metric_at(b.total, [v, 0])
        assert np.allclose(g, np.diag([1 / (1 - r) ** 2, 1 / (1 - r)]), atol=1e-14)


def test_flat_base_direction_on_zero_section(rng):
    b = disc_bundle_chart(models.flat_weight(1))
    for _ in range(5):
        zpt = b.base.sample(rng)
        assert curvature_at(b.total, b.join([0], zpt)).hsc([0, 1]) == pytest.approx(0, abs=1e-12)


def test_domain_and_sampler():
    b = disc("ch1")
    assert b.total.contains([0.5, 0])
    assert not b.total.contains([1.0, 0])
    assert not b.total.contains([0.1, 1.2])
    for p in samples(b, 50):
        assert b.total.contains(p)
        assert b.fiber_norm2(p) <= 0.95


def test_log_sampler_reaches_zero_section():
    b = disc("ch1")
    smp = fiber_sampler(b, floor=1e-8)
    xs = [b.fiber_norm2(smp(np.random.default_rng([1, i]))) for i in range(200)]
    assert min(xs) < 1e-6 and max(xs) > 0.5 and max(xs) <= 0.95


def test_weight_positivity_check():
    wt = LineBundleWeight(models.complex_hyperbolic(1), phi=-(z(0) * w(0)))
    with pytest.raises(WeightNotPositive):
        disc_bundle_chart(wt)


def test_calabi_standard_profile_is_disc_bundle(rng):
    wt = models.weight_for(BASES["pert1"])
    a = general_calabi_chart(wt, CalabiProfile(parse("(neg (log (sub 1 z1)))")))
    b = disc_bundle_chart(wt)
    assert a.total.potential == b.total.potential
    for p in samples(b, 20):
        assert np.array_equal(metric_at(a.total, p), metric_at(b.total, p))


def test_calabi_profiles():
    wt = models.weight_for(BASES["ch1"])
    flat_profile = general_calabi_chart(wt, CalabiProfile(z(0)))
    assert flat_profile.kind == "calabi"
    with pytest.raises(ProfileInadmissible) as err:
        general_calabi_chart(wt, CalabiProfile(-z(0)))
    assert err.value.x == 0.0
    with pytest.raises(ValueError):
        general_calabi_chart(wt, CalabiProfile(z(0) * w(0)))


def test_ball_bundle_rank_one_is_disc():
    wt = models.weight_for(BASES["ch1"])
    for p in samples(disc("ch1"), 10):
        assert np.allclose(metric_at(ball_bundle_chart(wt, 1).total, p), metric_at(disc("ch1").total, p), rtol=0, atol=0)


def test_ball_bundle_identity_at_origin():
    b = ball_bundle_chart(models.weight_for(BASES["ch1"]), 2)
    assert np.allclose(metric_at(b.total, [0, 0, 0]), np.eye(3), atol=1e-15)


@pytest.mark.parametrize("k", [2, 3])
def test_ball_over_point_has_constant_hsc(k, rng):
    b = ball_bundle_chart(models.get_model("point"), k)
    for p in samples(b, 10):
        assert curvature_at(b.total, p).hsc(random_direction(rng, k)) == pytest.approx(-2, abs=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("base", ["ch1", "pert1", "flat1"])
def test_telescoping(k, base):
    wt = models.weight_for(BASES[base])
    direct, it = ball_bundle_chart(wt, k), iterated_chart(wt, k)
    for p in samples(direct, 50):
        assert np.max(np.abs(metric_at(direct.total, p) - metric_at(it.total, p))) < 1e-10


def test_iterated_over_point_is_ch3(rng):
    b = iterated_chart(models.get_model("point"), 3)
    for p in samples(b, 10):
        assert curvature_at(b.total, p).hsc(random_direction(rng, 3)) == pytest.approx(-2, abs=1e-10)


@pytest.mark.parametrize("base", BASES)
def test_restriction(base):
    b = disc(base)
    rng = np.random.default_rng(7)
    for _ in range(10):
        assert restriction_residual(b, b.base.sample(rng)) < 1e-12


@pytest.mark.parametrize("base", BASES)
def test_closed_forms_match_ad(base):
    b = disc(base)
    for p in samples(b, 30):
        v, zpt = b.split(p)
        g = metric_at(b.total, p)
        cf = closed_form_metric(b.weight, zpt, v)
        assert np.max(np.abs(cf - g)) <= 1e-10 * np.max(np.abs(g))
        assert closed_form_det(b.weight, zpt, v) / np.linalg.det(g).real == pytest.approx(1, abs=1e-10)


def test_closed_form_examples():
    pt = models.get_model("point")
    assert closed_form_metric(pt, [], math.sqrt(0.5))[0, 0] == pytest.approx(4.0)
    assert closed_form_det(pt, [], math.sqrt(0.5)) == pytest.approx(4.0)
    ch = models.weight_for(BASES["ch1"])
    assert closed_form_det(ch, [0], 0.5) == pytest.approx(0.75**-3)
    assert np.allclose(closed_form_metric(ch, [0], 0.5), np.diag([1 / 0.75**2, 1 / 0.75]))
    with pytest.raises(OutsideDisc):
        closed_form_metric(ch, [0], 1.0)
    with pytest.raises(OutsideDisc):
        closed_form_det(ch, [0.5], 0.9)


@pytest.mark.parametrize("base", BASES)
def test_domination(base):
    b = disc(base)
    for p in samples(b, 40):
        r = domination_residual(b, p)
        assert r >= -1e-12
        if b.fiber_norm2(p) > 1e-6:
            assert r > 0
    zpt = b.base.sample(np.random.default_rng(3))
    assert abs(domination_residual(b, b.join([0], zpt))) < 1e-12


@pytest.mark.parametrize("base", BASES)
def test_ricci_identity(base):
    b = disc(base)
    for p in samples(b, 20):
        assert ricci_identity_residual(b, p) < 1e-8


@pytest.mark.parametrize("m", [1, 2])
def test_einstein_over_ch(m):
    b = disc("ch1" if m == 1 else "ch2")
    for p in samples(b, 10):
        assert np.allclose(ricci_form_at(b.total, p), -(m + 2) * metric_at(b.total, p), atol=1e-8)
        assert ricci_ratio_range(b.total, p) == pytest.approx((-(m + 2), -(m + 2)), abs=1e-8)


def test_ricci_over_flat_weight():
    b = disc_bundle_chart(models.flat_weight(1))
    for p in samples(b, 10):
        _, zpt = b.split(p)
        gm = np.zeros((2, 2), dtype=complex)
        gm[1:, 1:] = metric_at(b.base, zpt)
        assert np.allclose(ricci_form_at(b.total, p), -3 * metric_at(b.total, p) + 2 * gm, atol=1e-8)


def test_ricci_identity_needs_rank_one():
    b = ball_bundle_chart(models.weight_for(BASES["ch1"]), 2)
    with pytest.raises(ValueError):
        ricci_identity_residual(b, [0, 0, 0])


@pytest.mark.parametrize("base", BASES)
def test_hsc_formula(base):
    b = disc(base)
    rng = np.random.default_rng(11)
    for p in samples(b, 30):
        assert hsc_formula_residual(b, p, random_direction(rng, b.total.m)) < 1e-8


def test_hsc_formula_special_directions():
    b = disc("pert2")
    p = samples(b, 1)[0]
    direct, rhs = hsc_formula_terms(b, p, [1, 0, 0])
    assert direct == pytest.approx(-2, abs=1e-12) and rhs == -2.0
    _, zpt = b.split(p)
    on_m = b.join([0], zpt)
    X = np.array([0.3, -1j])
    direct, _ = hsc_formula_terms(b, on_m, np.concatenate([[0], X]))
    assert direct == pytest.approx(curvature_at(b.base, zpt).hsc(X), abs=1e-12)


@pytest.mark.parametrize("base", BASES)
def test_corrected_sectional_identity(base):
    b = disc(base)
    rng = np.random.default_rng(12)
    n = b.total.m
    for p in samples(b, 30):
        plane = RealTwoPlane(random_direction(rng, n), random_direction(rng, n))
        assert sectional_identity_residual(b, p, plane) < 1e-8


def test_uncorrected_sectional_formula_holds_on_complex_lines(rng):
    b = disc("pert1")
    for p in samples(b, 10):
        U = random_direction(rng, 2)
        direct, rhs = sectional_formula_terms(b, p, RealTwoPlane(U, 1j * U))
        assert direct == pytest.approx(rhs, abs=1e-10)


def test_uncorrected_sectional_formula_fails_on_mixed_totally_real_plane():
    # fiber vector and base vector spanning a totally real plane at the origin:
    # the base projection of the first vector vanishes, yet the curvature is -1/2
    b = disc("ch1")
    direct, rhs = sectional_formula_terms(b, [0, 0], RealTwoPlane([1, 0], [0, 1]))
    assert direct == pytest.approx(-0.5, abs=1e-14)
    assert rhs == pytest.approx(-2.0, abs=1e-14)
    assert sectional_identity_residual(b, [0, 0], RealTwoPlane([1, 0], [0, 1])) < 1e-14


def test_uncorrected_sectional_formula_has_no_calibration():
    b = disc("ch1")
    rng = np.random.default_rng(13)
    cal = [(p, RealTwoPlane(random_direction(rng, 2), random_direction(rng, 2))) for p in samples(b, 20)]
    s, worst = calibrate_sectional_scale(b, cal)
    assert s in (0.5, 1.0, 2.0)
    assert min(worst.values()) > 1e-2


def test_sectional_range_over_ch1_base():
    # CH^1 has sectional curvature -2, so the transferred interval is
    # [-3.5, -2]; the total space reaches -1/2 on fiber-base totally real planes
    b = disc("ch1")
    est = estimate_sectional_bounds(b, points=10, starts=16, seed=1)
    assert est.lower == pytest.approx(-2, abs=1e-6)
    assert est.upper == pytest.approx(-0.5, abs=1e-6)
    lo, hi = sect_bound_transfer(-2, -2)
    assert (lo, hi) == (-3.5, -2)
    assert est.upper > hi + 1


def test_fiber_ray():
    assert fiber_ray_length(0.0) == 0.0
    assert fiber_ray_length(math.tanh(1.0)) == pytest.approx(1.0, abs=1e-10)
    assert fiber_ray_length(1 - 1e-6) > 7
    assert fiber_ray_length(0.5) < fiber_ray_length(0.6)
    b = disc("pert1")
    assert fiber_ray_length(0.5, b, [0.3 + 0.2j]) == pytest.approx(math.atanh(0.5), abs=1e-10)
    with pytest.raises(OutOfRange):
        fiber_ray_length(1.0)


def test_weight_curvature_residual():
    wt = models.weight_for(BASES["pert2"])
    pts = [BASES["pert2"].sample(np.random.default_rng(i)) for i in range(5)]
    assert wt.check(pts) < 1e-10
    assert wt.h_at(np.zeros(2)) == pytest.approx(1.0)


def test_calabi_requires_single_slot():
    wt = LineBundleWeight(KahlerChart(1, z(0) * w(0)))
    with pytest.raises(ValueError):
        general_calabi_chart(wt, CalabiProfile(z(1)))
