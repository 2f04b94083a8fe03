#!/usr/bin/env python3
"""
Tests for cuts, conductance, the Cheeger sandwich and bisection heuristics.
"""

import math

import numpy as np
import pytest

from components import ComponentView, center_component, connected_components
from conductance import (brute_force_conductance, cheeger_check, cut_report,
                         half_disk_conductance, max_bisection_heuristic, min_bisection_heuristic,
                         min_cut_and_max_cut, probe_small_sets)
from conftest import hyperbolic, make_graph
from errors import DomainError, GuardExceededError
from spectral import dense_gap


def test_cut_report(p4):
    report = cut_report(p4, [0, 1])
    assert (report.set_size, report.vol_S, report.vol_complement, report.boundary_edges) == (2, 3, 3, 1)
    assert report.conductance == pytest.approx(1 / 3)
    mask = np.array([True, True, False, False])
    assert cut_report(p4, mask).members == report.members
    with pytest.raises(DomainError):
        cut_report(p4, [])
    with pytest.raises(DomainError):
        cut_report(p4, [0, 1, 2, 3])
    with pytest.raises(DomainError):
        cut_report(p4, [7])


def test_brute_force_conductance(k4, c4, p4):
    assert brute_force_conductance(k4)[0] == pytest.approx(2 / 3)
    assert brute_force_conductance(c4)[0] == pytest.approx(1 / 2)
    value, report = brute_force_conductance(p4)
    assert value == pytest.approx(1 / 3)
    assert report.conductance == pytest.approx(value)
    assert report.witness == "brute_force"
    with pytest.raises(GuardExceededError):
        brute_force_conductance(k4, cap=3)


def test_half_disk_is_canonical(c4):
    report = half_disk_conductance(c4, 0.0)
    assert report.members == (0, 1)
    assert report.boundary_edges == 2
    assert report.conductance == pytest.approx(0.5)
    assert half_disk_conductance(c4, math.pi) == report


def test_half_disk_needs_two_sides():
    h = ComponentView(make_graph(3, [(0, 1), (1, 2)], theta=[0.1, 0.2, 0.3]), [0, 1, 2])
    with pytest.raises(DomainError):
        half_disk_conductance(h, 0.0)


def test_cheeger_sandwich_on_small_components():
    checked = 0
    for seed in range(50):
        for h in connected_components(hyperbolic(0.75, 120, seed=seed)):
            if not 2 <= h.k <= 12:
                continue
            lam = dense_gap(h).lambda1
            report = cheeger_check(h, lambda1=lam)
            assert report.exact and report.ok
            checked += 1
    assert checked > 0


def test_cheeger_upper_bound_with_half_disk(small_hrg):
    h = center_component(small_hrg)
    report = cheeger_check(h, cap=10)
    assert not report.exact
    assert report.upper_ok and report.ok


def test_probe_small_sets(small_hrg):
    h = center_component(small_hrg)
    probe = probe_small_sets(h, 0.5, seed=1)
    assert probe.volume_cap == pytest.approx(math.sqrt(small_hrg.n))
    assert probe.evaluated > 0
    if not probe.empty:
        assert probe.best.vol_S <= probe.volume_cap
        assert probe.as_row()["method"] == "probe"
    with pytest.raises(DomainError):
        probe_small_sets(h, 1.5)


def test_probe_with_nothing_small_enough(k4):
    probe = probe_small_sets(k4, 0.1, n=4)
    assert probe.empty
    assert math.isnan(probe.as_row()["value"])


def test_min_bisection_of_path(p4):
    result = min_bisection_heuristic(p4)
    assert result.crossing_edges == 1
    assert result.parts == (2, 2)
    assert result.evaluations <= result.evaluation_cap


def test_max_bisection_of_complete_graph(k4):
    result = max_bisection_heuristic(k4)
    assert result.crossing_edges == 4
    assert result.as_row("max_bisection")["value"] == 4


def test_bisections_are_balanced(small_hrg):
    h = center_component(small_hrg)
    low = min_bisection_heuristic(h)
    high = max_bisection_heuristic(h)
    assert abs(low.parts[0] - low.parts[1]) <= 1
    assert abs(high.parts[0] - high.parts[1]) <= 1
    assert low.crossing_edges <= high.crossing_edges


def test_min_and_max_cut(tree, k4):
    cuts = min_cut_and_max_cut(tree)
    assert (cuts.min_cut, cuts.min_cut_method) == (1, "leaf")
    # a single-flip local optimum cuts at least half of the edges
    assert cuts.max_cut >= 3
    cuts = min_cut_and_max_cut(k4)
    assert (cuts.min_cut, cuts.min_cut_method) == (3, "stoer_wagner")
    assert cuts.max_cut == 4
    g = make_graph(4, [(0, 1), (2, 3)])
    assert min_cut_and_max_cut(ComponentView(g, [0, 1, 2, 3])).min_cut == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
