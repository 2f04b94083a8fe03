#!/usr/bin/env python3
"""
Tests for canonical-path routing, the aggregated flow and its certificate.
"""

import csv
import dataclasses

import numpy as np
import pytest

from components import center_component, diameter
from conftest import hyperbolic, make_view
from errors import CertificateError, DegenerateLevelsError, DomainError, GuardExceededError, HRGError
from flowcert import (Routing, brute_force_flow, build_flow, certificate_levels, check_demands,
                      check_end_segment_structure, end_segment_loads, path_weights,
                      classify_edge, end_segment, end_segments, path_class, qprime_path_count,
                      qprime_paths, sinclair_bound)
from geometry import Levels
from spectral import spectral_gap

# l_min = 2, l_mid = 3, l_max = 5
LEVELS = Levels(R=20.0, ell_low=0, ell_min=2, ell_mid=3, ell_max=5, ell_bdr=0, nu=0.0, nu_prime=0.0)


@pytest.fixture
def routed():
    """Two core vertices joined through band 5, plus two outer vertices.

    0, 1: band 1        2, 3: band 5 (l_max)
    5: band 6 (ring)    4: band 8, hangs off 5
    """
    r = [0.5, 0.5, 4.5, 4.5, 7.5, 5.5]
    theta = [0.0, 3.0, 1.05, 2.0, 1.0, 1.1]
    edges = [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 5), (5, 2)]
    return make_view(6, edges, r=r, theta=theta)


def test_classify_edge():
    levels = Levels(R=14.0, ell_low=4, ell_min=4, ell_mid=6, ell_max=10, ell_bdr=0, nu=0.0, nu_prime=0.0)
    assert classify_edge(11.5, 3.0, levels) == "remote"
    assert classify_edge(5.5, 5.5, levels) == "belt"
    assert classify_edge(5.5, 7.5, levels) == "belt_incident"
    assert classify_edge(3.5, 7.5, levels) == "spread_out"
    assert classify_edge(7.5, 8.5, levels) == "middle"
    assert classify_edge(2.5, 5.5, levels) == "core"


def test_path_class(routed):
    assert path_class(routed, 0, 1, LEVELS) == ("I", (1, 1), (5, 5))
    assert path_class(routed, 0, 2, LEVELS).type == "III"
    assert path_class(routed, 2, 3, LEVELS).type == "II"
    with pytest.raises(DomainError):
        path_class(routed, 4, 0, LEVELS)


def test_qprime_paths(routed):
    assert sorted(qprime_paths(routed, 0, 1, LEVELS)) == [(0, 2, 3, 1), (0, 3, 2, 1)]
    assert qprime_path_count(routed, 0, 1, LEVELS) == 2
    # band-5 endpoints need a first hop in band l_mid = 3, which is empty
    assert qprime_path_count(routed, 0, 2, LEVELS) == 0
    with pytest.raises(DomainError):
        qprime_paths(routed, 1, 1, LEVELS)
    with pytest.raises(DomainError):
        qprime_path_count(routed, 4, 1, LEVELS)


def test_end_segments(routed):
    seg = end_segment(routed, 4, LEVELS)
    assert seg.path == (4, 5, 2) and not seg.fallback
    assert (seg.length, seg.target) == (2, 2)
    segments = end_segments(routed, LEVELS)
    assert set(segments) == {4, 5}
    assert segments[5].path == (5, 2) and segments[5].fallback
    stats = check_end_segment_structure(routed, segments, LEVELS, diameter(routed).value)
    assert stats == (2, 1.0, 2, 1, True)
    with pytest.raises(DomainError):
        end_segment(routed, 0, LEVELS)


def _assert_same_flows(cert, oracle):
    flows = cert.edge_flows()
    for key, value in oracle.items():
        assert flows[key] == pytest.approx(value, rel=1e-10, abs=1e-12)
    for key, value in flows.items():
        assert oracle.get(key, 0.0) == pytest.approx(value, rel=1e-10, abs=1e-12)


def test_flow_matches_enumeration_on_hand_graph(routed):
    cert = build_flow(routed, LEVELS)
    _assert_same_flows(cert, brute_force_flow(routed, LEVELS))
    assert cert.qprime_pairs == 2
    assert cert.qdoubleprime_pairs == 0
    assert cert.fallback_pairs == 28
    assert cert.end_segment_fallbacks == 1
    assert cert.demand_checked


def _tables(h, levels):
    deg = np.asarray(h.degree, dtype=float)
    R = Routing(h, levels)
    ceff, dv, ev = path_weights(R, deg, float(h.vol))
    return R, ceff, end_segment_loads(R, deg, float(h.vol), dv, ev)


def test_demand_check_rebuilds_pair_flows(routed):
    R, ceff, loads = _tables(routed, LEVELS)
    assert R.count[0, 1] == 2 and R.routed[0, 1]
    # vertex 0 gives 3 * 2 * 2 / 14 of elongated flow to each of its two paths
    assert ceff[0, 1] == pytest.approx(3 * 2 * 2 / 14 / 2)
    assert check_demands(routed, LEVELS, R, ceff, loads, samples=1000)


def test_demand_check_rejects_corrupted_weights(routed):
    R, ceff, loads = _tables(routed, LEVELS)
    assert not check_demands(routed, LEVELS, R, ceff * 1.01, loads, samples=1000)


def test_demand_check_rejects_corrupted_counts(routed):
    R, ceff, loads = _tables(routed, LEVELS)
    R.count[0, 1] += 1
    assert not check_demands(routed, LEVELS, R, ceff, loads, samples=1000)
    # a count that still matches the weights but not the enumerated paths
    R.count[0, 1] = 1
    ceff[0, 1] *= 2
    assert not check_demands(routed, LEVELS, R, ceff, loads, samples=1000)


def test_demand_check_rejects_corrupted_segment_loads(routed):
    R, ceff, loads = _tables(routed, LEVELS)
    loads[4] += 1.0
    assert not check_demands(routed, LEVELS, R, ceff, loads, samples=1000)


def test_demand_check_on_hyperbolic_component(medium_hrg):
    h = center_component(medium_hrg)
    if h.k > 1500:
        pytest.skip("component too large for the exact tables")
    levels = certificate_levels(h, nu_prime=0.0)
    R, ceff, loads = _tables(h, levels)
    assert check_demands(h, levels, R, ceff, loads, samples=1000, seed=3)
    assert not check_demands(h, levels, R, ceff * (1 + 1e-6), loads, samples=1000, seed=3)


def test_triangle_certificate(k3):
    cert = build_flow(k3, LEVELS)
    assert cert.rho_bar == pytest.approx(2 / 3)
    assert cert.fallback_pairs == 6
    assert sinclair_bound(cert) == pytest.approx(1.5)
    assert sinclair_bound(cert) <= spectral_gap(k3).lambda1 * (1 + 1e-6)
    assert cert.max_path_length == 1 and cert.length_ok
    assert cert.class_max == {"core": pytest.approx(2 / 3)}


def test_certificate_outputs(k3, tmp_path):
    cert = build_flow(k3, LEVELS)
    names = [row["measurement"] for row in cert.summary_rows()]
    assert names[:2] == ["rho_bar", "sinclair_lower_bound"]
    assert "fbar_max_core" in names
    path = tmp_path / "edges.csv"
    cert.write_edge_dump(path)
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["u", "v", "fbar"]
    assert [(int(u), int(v)) for u, v, _ in rows[1:]] == [(0, 1), (0, 2), (1, 2)]


def test_unchecked_flow_is_not_a_certificate(k3):
    cert = dataclasses.replace(build_flow(k3, LEVELS), demand_checked=False)
    with pytest.raises(CertificateError):
        sinclair_bound(cert)


def test_guards(k3, routed):
    with pytest.raises(GuardExceededError):
        build_flow(k3, LEVELS, cap=2)
    with pytest.raises(GuardExceededError):
        brute_force_flow(routed, LEVELS, cap=5)


def test_asymptotic_slack_is_degenerate(small_hrg):
    h = center_component(small_hrg)
    with pytest.raises(DegenerateLevelsError):
        certificate_levels(h, nu_prime=None)
    assert not certificate_levels(h, nu_prime=0.0).degenerate


def test_certificates_on_hyperbolic_components():
    checked = 0
    for seed in range(10):
        g = hyperbolic(0.6, 120, seed=seed)
        try:
            h = center_component(g)
        except HRGError:
            continue
        if not 3 <= h.k <= 200:
            continue
        levels = certificate_levels(h, nu_prime=0.0)
        cert = build_flow(h, levels, seed=seed)
        assert cert.demand_checked
        assert cert.qprime_pairs + cert.qdoubleprime_pairs + cert.fallback_pairs == h.k * (h.k - 1)
        _assert_same_flows(cert, brute_force_flow(h, levels))
        assert sinclair_bound(cert) <= spectral_gap(h).lambda1 * (1 + 1e-6)
        checked += 1
        if checked == 3:
            break
    assert checked > 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
