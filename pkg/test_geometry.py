#!/usr/bin/env python3
"""
Tests for the hyperbolic-plane kernel: angles, distances, measures, levels.
"""

import math

import numpy as np
import pytest

from errors import DegenerateLevelsError, DomainError
from geometry import (TWO_PI, ModelParams, PolarPoint, angle_threshold, angle_threshold_approx,
                      angular_gap, annulus_measure, annulus_measure_asymptotic,
                      ball_intersection_measure, ball_intersection_monte_carlo,
                      ball_measure_asymptotic, ball_measure_exact, band_index, c_alpha,
                      derive_levels, distance_polar, expected_band_size, expected_degree,
                      hyperbolic_distance, normalize_angle, radius_from_uniform, sector_measure,
                      tilde_level)


def test_normalize_angle():
    assert normalize_angle(TWO_PI) == 0.0
    assert normalize_angle(-0.1) == pytest.approx(TWO_PI - 0.1)
    wrapped = normalize_angle(np.array([-TWO_PI, 7.0]))
    assert wrapped[0] == 0.0
    assert wrapped[1] == pytest.approx(7.0 - TWO_PI)


def test_angular_gap_wraps():
    assert angular_gap(0.1, TWO_PI - 0.1) == pytest.approx(0.2)
    assert angular_gap(0.0, math.pi) == pytest.approx(math.pi)
    assert angular_gap(1.0, 1.0) == 0.0


def test_band_index():
    assert band_index(0.0) == 1
    assert band_index(1.0) == 1
    assert band_index(1.0001) == 2
    assert list(band_index(np.array([0.0, 2.5, 3.0]))) == [1, 3, 3]


def test_distance_special_cases():
    assert distance_polar(3.0, 1.0, 3.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert distance_polar(0.0, 0.0, 3.0, 1.0) == pytest.approx(3.0)
    # antipodal points: the geodesic runs through the origin
    assert distance_polar(2.0, 0.0, 3.0, math.pi) == pytest.approx(5.0)
    assert hyperbolic_distance(PolarPoint(2.0, 0.0), PolarPoint(3.0, math.pi)) == pytest.approx(5.0)


def test_distance_large_radii():
    assert distance_polar(400.0, 0.0, 400.0, math.pi) == pytest.approx(800.0, rel=1e-9)
    d = distance_polar(np.array([400.0, 1.0]), 0.0, np.array([400.0, 1.0]), math.pi)
    assert d[0] == pytest.approx(800.0, rel=1e-9)
    assert d[1] == pytest.approx(2.0)


def test_angle_threshold_inverts_distance():
    R, r1, r2 = 10.0, 6.0, 7.0
    theta = angle_threshold(R, r1, r2)
    assert 0.0 < theta < math.pi
    assert distance_polar(r1, 0.0, r2, theta) == pytest.approx(R, rel=1e-10)


def test_angle_threshold_clamps():
    assert angle_threshold(1.0, 3.0, 5.0) == 0.0
    assert angle_threshold(10.0, 3.0, 5.0) == math.pi
    assert angle_threshold(2.0, 0.0, 3.0) == 0.0


def test_angle_threshold_approximation():
    exact = angle_threshold(30.0, 20.0, 20.0)
    assert angle_threshold_approx(30.0, 20.0, 20.0) == pytest.approx(exact, rel=1e-3)
    with pytest.raises(DomainError):
        angle_threshold_approx(50.0, 20.0, 20.0)


def test_ball_measure_bounds():
    params = ModelParams(0.75, 0.0, 1000)
    assert abs(ball_measure_exact(params.R, params) - 1.0) < 1e-12
    assert ball_measure_exact(0.0, params) == 0.0
    values = ball_measure_exact(np.linspace(0.0, params.R, 50), params)
    assert np.all(np.diff(values) >= 0.0)
    with pytest.raises(DomainError):
        ball_measure_exact(params.R + 1.0, params)


def test_ball_measure_asymptotics():
    params = ModelParams(0.75, 0.0, 10 ** 6)
    assert params.R >= 25.0
    for rho in np.linspace(params.R - 5.0, params.R, 11):
        exact = ball_measure_exact(rho, params)
        assert abs(ball_measure_asymptotic(rho, params) / exact - 1.0) < 0.1


def test_radius_from_uniform_inverts_cdf():
    params = ModelParams(0.6, 1.0, 500)
    u = np.linspace(0.01, 0.99, 25)
    r = radius_from_uniform(u, params.alpha, params.R)
    assert np.all(r < params.R)
    np.testing.assert_allclose(ball_measure_exact(r, params), u, rtol=1e-9)


def test_annulus_and_sector():
    params = ModelParams(0.75, 0.0, 1000)
    assert sector_measure(TWO_PI, params.R, 0.0, params) == pytest.approx(1.0)
    assert sector_measure(math.pi, params.R, 0.0, params) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        annulus_measure(1.0, 2.0, params)


def test_expected_band_sizes_sum_to_n():
    params = ModelParams(0.75, 0.0, 1000)
    top = int(math.ceil(params.R))
    total = sum(expected_band_size(ell, params, exact=True) for ell in range(1, top + 1))
    assert total == pytest.approx(params.n)


def test_expected_degree():
    params = ModelParams(0.75, 0.0, 1000)
    assert expected_degree(4.0, params) == pytest.approx(1000 * c_alpha(0.75) * math.exp(-2.0))


def test_monte_carlo_ball_from_origin():
    params = ModelParams(0.75, 0.0, 1000)
    estimate, stderr = ball_intersection_monte_carlo(0.0, 5.0, 5.0, params, samples=200_000, seed=3)
    assert stderr > 0.0
    assert abs(estimate - ball_measure_exact(5.0, params)) < 6 * stderr + 1e-4


def test_intersection_with_disk_matches_monte_carlo():
    params = ModelParams(0.75, 0.0, 10 ** 6)
    predicted = ball_intersection_measure(15.0, params.R, params.R, params)
    assert predicted == pytest.approx(c_alpha(0.75) * math.exp(-7.5))
    estimate, _ = ball_intersection_monte_carlo(15.0, params.R, params.R, params,
                                                samples=400_000, seed=5)
    assert abs(estimate / predicted - 1.0) < 0.25
    with pytest.raises(DomainError):
        ball_intersection_measure(15.0, 10.0, params.R, params)


def test_annulus_asymptotics():
    params = ModelParams(0.75, 0.0, 10 ** 6)
    for width in (0.5, 1.0, 3.0):
        exact = annulus_measure(params.R, params.R - width, params)
        assert annulus_measure_asymptotic(params.R, params.R - width, params) == pytest.approx(exact, rel=0.1)


def test_model_params_validation():
    params = ModelParams(0.75, 1.0, 100)
    assert params.R == pytest.approx(2.0 * math.log(100) + 1.0)
    assert params.delta == pytest.approx(math.exp(-0.5))
    assert params.with_seed(5).seed == 5
    for bad in (0.5, 1.0, 0.2):
        with pytest.raises(DomainError):
            ModelParams(bad, 0.0, 100)
    with pytest.raises(ValueError):
        ModelParams(0.75, 0.0, 1)
    with pytest.raises(DomainError):
        ModelParams(0.75, 0.0, 100, mode="grid")


def test_levels_at_desk_scale():
    params = ModelParams(0.75, 0.0, 1000)
    # the asymptotic slack pushes l_min past l_mid at this size
    with pytest.raises(DegenerateLevelsError) as info:
        derive_levels(params)
    assert info.value.levels.degenerate
    loose = derive_levels(params, strict=False)
    assert loose.degenerate and loose.violations

    levels = derive_levels(params, nu_prime=0.0)
    assert (levels.ell_min, levels.ell_mid, levels.ell_max) == (4, 6, 10)
    assert not levels.degenerate
    assert not levels.low_band_ok


def test_tilde_level():
    levels = derive_levels(ModelParams(0.75, 0.0, 1000), nu_prime=0.0)
    assert tilde_level(3, levels) == levels.ell_max
    assert tilde_level(5, levels) == 2 * levels.ell_mid - 5 + 1
    assert tilde_level(8, levels) == levels.ell_mid
    with pytest.raises(DomainError):
        tilde_level(levels.ell_max + 1, levels)




@pytest.mark.parametrize("n", [100, 300, 1000, 10_000, 100_000, 10 ** 6])
@pytest.mark.parametrize("alpha", [0.55, 0.6, 0.65, 0.75, 0.9])
def test_tilde_level_stays_in_the_upper_layer(alpha, n):
    params = ModelParams(alpha, 0.0, n)
    levels = derive_levels(params, nu_prime=0.0, strict=False)
    flagged = any(v.startswith("tilde_level") for v in levels.violations)
    top = min(levels.ell_mid, levels.ell_max)
    inside = all(levels.ell_mid < tilde_level(ell, levels) <= levels.ell_max
                 for ell in range(levels.ell_min, top + 1))
    assert inside or flagged
    if flagged:
        assert levels.degenerate
        with pytest.raises(DegenerateLevelsError):
            derive_levels(params, nu_prime=0.0)


@pytest.mark.parametrize("alpha", [0.6, 0.75])
def test_tilde_level_overflow_is_refused(alpha):
    params = ModelParams(alpha, 0.0, 10_000)
    loose = derive_levels(params, nu_prime=0.0, strict=False)
    assert tilde_level(loose.ell_min, loose) == loose.ell_max + 1
    with pytest.raises(DegenerateLevelsError):
        derive_levels(params, nu_prime=0.0)


def test_outer_levels_add_up_to_the_radius():
    for alpha in (0.55, 0.6, 0.75, 0.9):
        for n in (100, 1000, 10 ** 5, 10 ** 7):
            for nu_prime in (0.0, 0.4, None):
                levels = derive_levels(ModelParams(alpha, 0.0, n), nu_prime=nu_prime, strict=False)
                assert abs(levels.ell_min + levels.ell_max - levels.R) < 1.0


def test_middle_level_for_a_million_points():
    levels = derive_levels(ModelParams(0.75, 0.0, 10 ** 6), strict=False)
    assert levels.R == pytest.approx(12 * math.log(10))
    assert levels.ell_mid == 13


def test_distance_is_symmetric_and_satisfies_the_triangle_inequality():
    rng = np.random.default_rng(17)
    r = rng.uniform(0.0, 20.0, size=(3, 2000))
    theta = rng.uniform(0.0, TWO_PI, size=(3, 2000))
    dpq = distance_polar(r[0], theta[0], r[1], theta[1])
    dqp = distance_polar(r[1], theta[1], r[0], theta[0])
    np.testing.assert_allclose(dpq, dqp, rtol=1e-12, atol=1e-9)
    dqs = distance_polar(r[1], theta[1], r[2], theta[2])
    dps = distance_polar(r[0], theta[0], r[2], theta[2])
    assert np.all(dps <= dpq + dqs + 1e-6)


def test_ball_measure_is_strictly_increasing():
    params = ModelParams(0.75, 0.0, 1000)
    rho = np.linspace(0.0, params.R, 2001)
    values = np.array([ball_measure_exact(x, params) for x in rho])
    assert values[0] == 0.0 and values[-1] == pytest.approx(1.0)
    assert np.all(np.diff(values) > 0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
