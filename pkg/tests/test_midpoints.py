"""Midpoint predicates, search, lens/strip geometry, compatibility."""

import math
from fractions import Fraction

import pytest

from causalgeo import (CausalSetSpace, MidpointQuery, PiecewiseCausalCurve,
                       approximate_midpoint_from_curve, certify_compatibility,
                       find_midpoint, is_eps_tau_midpoint, lens_in_strip_epsilon,
                       lens_strip_geometry, midpoint_from_realizer, replay)
from causalgeo.core import make_rng
from causalgeo.errors import (CurveTooShort, DegenerateStrip,
                              MidpointBoundsViolated, NotARealizer,
                              NotChronological, UnsupportedBackend)

P, Q = (0.0, 0.0), (2.0, 0.0)


class TestIsEpsMidpoint:
    def test_exact_center(self, mink):
        assert is_eps_tau_midpoint(mink, P, Q, (1.0, 0.0), 0.0)

    def test_off_axis_point_is_not_exact(self, mink):
        y = (1.0, 0.5)
        assert mink.tau(P, y) == pytest.approx(math.sqrt(0.75))
        assert not is_eps_tau_midpoint(mink, P, Q, y, 0.0)

    def test_off_axis_point_within_eps(self, mink):
        y = (1.0, 0.3)
        half_gap = abs(mink.tau(P, y) - 1.0)
        assert half_gap == pytest.approx(1.0 - math.sqrt(0.91), abs=1e-12)
        assert half_gap < 0.1
        assert is_eps_tau_midpoint(mink, P, Q, y, 0.1)
        assert not is_eps_tau_midpoint(mink, P, Q, y, 0.01)

    def test_exact_implies_every_eps(self, mink, diamond):
        for eps in (1e-6, 0.01, 0.3):
            assert is_eps_tau_midpoint(mink, P, Q, (1.0, 0.0), eps)
            assert is_eps_tau_midpoint(diamond, "p", "q", "a", eps)


class TestFindMidpoint:
    def test_minkowski_exact(self, mink, mink_bundle):
        found = find_midpoint(mink, mink_bundle, MidpointQuery(p=P, q=Q))
        assert found == (1.0, 0.0)

    def test_boosted_exact(self, mink, mink_bundle):
        found = find_midpoint(mink, mink_bundle, MidpointQuery(p=P, q=(2.0, 1.0)))
        assert found == pytest.approx((1.0, 0.5), abs=1e-9)

    def test_punctured_exact_not_found(self, punctured, punctured_bundle):
        found = find_midpoint(punctured, punctured_bundle, MidpointQuery(p=P, q=Q))
        assert found is None

    def test_punctured_approximate_found(self, punctured, punctured_bundle):
        found = find_midpoint(punctured, punctured_bundle,
                              MidpointQuery(p=P, q=Q, epsilon=0.01))
        assert found is not None
        assert found != (1.0, 0.0)
        assert is_eps_tau_midpoint(punctured, P, Q, found, 0.01)
        # Feasible offsets delta obey sqrt(1 - delta^2) > 1 - eps.
        assert abs(found[1]) < math.sqrt(1 - 0.99 ** 2)

    def test_diamond_tie_break_prefers_smaller_id(self, diamond, diamond_bundle):
        found = find_midpoint(diamond, diamond_bundle, MidpointQuery(p="p", q="q"))
        assert found == "a"

    def test_discrete_not_found_is_definitive(self, diamond, diamond_bundle):
        found = find_midpoint(diamond, diamond_bundle, MidpointQuery(p="p", q="a"))
        assert found is None

    def test_not_chronological(self, mink, mink_bundle):
        with pytest.raises(NotChronological):
            find_midpoint(mink, mink_bundle, MidpointQuery(p=P, q=(0.0, 1.0)))

    def test_query_validation(self):
        with pytest.raises(ValueError):
            MidpointQuery(p=P, q=Q, c=0.6)
        with pytest.raises(ValueError):
            MidpointQuery(p=P, q=Q, epsilon=0.1, epsilon_hat=0.1)
        with pytest.raises(ValueError):
            MidpointQuery(p=P, q=Q, epsilon=-1.0)

    def test_relative_epsilon_resolves_against_tau(self, punctured, punctured_bundle):
        found = find_midpoint(punctured, punctured_bundle,
                              MidpointQuery(p=P, q=Q, epsilon_hat=0.005))
        assert found is not None
        assert is_eps_tau_midpoint(punctured, P, Q, found, 0.01)


class TestLensStrip:
    def test_exact_lens_degenerates_to_midpoint(self, mink, mink_bundle):
        lens = lens_strip_geometry(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.0, 0.4)
        assert lens.in_lens((2.0, 0.0))
        assert not lens.in_lens((2.0, 0.1))

    def test_strip_levels_and_width(self, mink, mink_bundle):
        lens = lens_strip_geometry(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.1, 0.4)
        assert lens.strip_levels == (pytest.approx(1.6), pytest.approx(2.4))
        assert lens.strip_width == pytest.approx(0.2 * 4.0)
        assert lens.in_strip((2.0, 1.7))
        assert not lens.in_strip((1.5, 0.0))

    def test_half_strip_degenerates_to_line(self, mink, mink_bundle):
        lens = lens_strip_geometry(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.1, 0.5)
        assert lens.strip_levels[0] == pytest.approx(lens.strip_levels[1])
        assert lens.in_strip((2.0, 0.3))
        assert not lens.in_strip((2.1, 0.0))

    def test_boundary_points_lie_on_hyperbolas(self, mink, mink_bundle):
        p, q = (0.0, 0.0), (4.0, 0.0)
        eps = 0.25
        lens = lens_strip_geometry(mink, mink_bundle, p, q, eps, 0.4)
        radius = 2.0 - eps
        polys = dict(lens.boundary_polylines(101))
        assert len(polys["lens_upper"]) == 101
        for y in polys["lens_upper"]:
            assert mink.tau(p, y) == pytest.approx(radius, abs=1e-9)
            assert mink.tau(y, q) >= radius - 1e-9
        for y in polys["lens_lower"]:
            assert mink.tau(y, q) == pytest.approx(radius, abs=1e-9)

    def test_boundary_needs_flat_1plus1(self, diamond, diamond_bundle):
        lens = lens_strip_geometry(diamond, diamond_bundle, "p", "q", 0.5, 0.25)
        assert lens.in_lens("a")
        with pytest.raises(UnsupportedBackend):
            lens.boundary_polylines()

    def test_lens_monotone_in_eps(self, mink, mink_bundle):
        rng = make_rng(13)
        p, q = (0.0, 0.0), (2.0, 0.0)
        small = lens_strip_geometry(mink, mink_bundle, p, q, 0.05, 0.4)
        large = lens_strip_geometry(mink, mink_bundle, p, q, 0.2, 0.4)
        hits = 0
        for _ in range(500):
            y = (rng.uniform(0.0, 2.0), rng.uniform(-1.0, 1.0))
            if small.in_lens(y):
                hits += 1
                assert large.in_lens(y)
        assert hits > 0

    def test_strip_antitone_in_c(self, mink, mink_bundle):
        rng = make_rng(14)
        p, q = (0.0, 0.0), (2.0, 0.0)
        loose = lens_strip_geometry(mink, mink_bundle, p, q, 0.1, 0.1)
        tight = lens_strip_geometry(mink, mink_bundle, p, q, 0.1, 0.45)
        hits = 0
        for _ in range(500):
            y = (rng.uniform(0.0, 2.0), rng.uniform(-1.0, 1.0))
            if tight.in_strip(y):
                hits += 1
                assert loose.in_strip(y)
        assert hits > 0


class TestLensInStrip:
    def test_vertical_pair_matches_closed_form(self, mink, mink_bundle):
        # For this layout the sharp threshold is (1/2 - c) * tau = 0.4.
        eps = lens_in_strip_epsilon(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.4,
                                    rejection_samples=2000)
        assert eps > 0
        assert eps <= 0.4 + 1e-9
        assert eps == pytest.approx(0.4, rel=1e-6)

    def test_grows_as_strip_widens(self, mink, mink_bundle):
        tight = lens_in_strip_epsilon(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.4,
                                      rejection_samples=500)
        wide = lens_in_strip_epsilon(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.1,
                                     rejection_samples=500)
        assert wide > tight

    def test_boosted_pair_containment_verifies(self, mink, mink_bundle):
        # Off-axis pairs put the lens extrema at hyperbola-hyperbola
        # intersections; the search still has to verify containment there.
        from causalgeo import lens_strip_geometry
        p, q = (0.0, 0.0), (4.0, 1.5)
        eps = lens_in_strip_epsilon(mink, mink_bundle, p, q, 0.4,
                                    rejection_samples=2000)
        assert eps > 0
        lens = lens_strip_geometry(mink, mink_bundle, p, q, eps, 0.4, tol=0.0)
        for _, poly in lens.boundary_polylines(301):
            assert all(lens.in_strip(y) for y in poly)

    def test_degenerate_strip(self, mink, mink_bundle):
        with pytest.raises(DegenerateStrip):
            lens_in_strip_epsilon(mink, mink_bundle, (0.0, 0.0), (4.0, 0.0), 0.5)

    def test_spacelike_pair_rejected(self, mink, mink_bundle):
        with pytest.raises(NotChronological):
            lens_in_strip_epsilon(mink, mink_bundle, (0.0, 0.0), (0.0, 4.0), 0.4)


class TestCompatibility:
    def test_minkowski_affine_midpoints_give_half(self, mink, mink_bundle):
        cert = certify_compatibility(mink, mink_bundle, c=0.5, epsilon_hat=0.0,
                                     sample_budget=50, seed=3)
        assert cert.passed
        assert cert.data["best_c_min"] == pytest.approx(0.5)

    def test_diamond_passes_at_half(self, diamond, diamond_bundle):
        cert = certify_compatibility(diamond, diamond_bundle, c=0.5, epsilon_hat=0.0,
                                     sample_budget=64)
        assert cert.passed
        assert cert.data["best_c_min"] == Fraction(1, 2)
        assert cert.data["pairs_without_midpoint"] == 4

    def test_skewed_diamond_threshold_is_exact(self, skewed_diamond, skewed_bundle):
        passing = certify_compatibility(skewed_diamond, skewed_bundle, c=0.1,
                                        epsilon_hat=0.0, sample_budget=64)
        assert passing.passed
        assert passing.data["best_c_min"] == Fraction(0.2) / 2
        failing = certify_compatibility(skewed_diamond, skewed_bundle, c=0.11,
                                        epsilon_hat=0.0, sample_budget=64)
        assert not failing.passed
        a, b, best_c, midpoint = failing.witness
        assert (a, b) == ("p", "q")
        assert best_c == Fraction(0.2) / 2
        assert midpoint in ("a", "b")
        assert replay(failing, skewed_diamond, skewed_bundle)

    def test_validation(self, mink, mink_bundle):
        with pytest.raises(ValueError):
            certify_compatibility(mink, mink_bundle, c=0.0, epsilon_hat=0.0)


class TestMidpointFromRealizer:
    def test_straight_segment(self, mink):
        curve = PiecewiseCausalCurve.future_chain(mink, ((0.0, 0.0), (2.0, 0.0)))
        assert midpoint_from_realizer(mink, curve) == pytest.approx((1.0, 0.0))

    def test_boosted_segment_halves_tau(self, mink):
        curve = PiecewiseCausalCurve.future_chain(mink, ((0.0, 0.0), (2.0, 1.0)))
        y = midpoint_from_realizer(mink, curve)
        assert y == pytest.approx((1.0, 0.5), abs=1e-9)
        whole = mink.tau((0.0, 0.0), (2.0, 1.0))
        assert mink.tau((0.0, 0.0), y) == pytest.approx(whole / 2, abs=2e-9)
        assert mink.tau(y, (2.0, 1.0)) == pytest.approx(whole / 2, abs=2e-9)

    def test_multi_joint_realizer(self, mink):
        joints = tuple((0.5 * i, 0.25 * i) for i in range(5))
        curve = PiecewiseCausalCurve.future_chain(mink, joints)
        y = midpoint_from_realizer(mink, curve)
        assert y == pytest.approx((1.0, 0.5), abs=1e-9)

    def test_causet_chain_lands_on_cumulative_half(self):
        ids = ["v0", "v1", "v2", "v3", "v4"]
        space = CausalSetSpace(
            [(v, i) for i, v in enumerate(ids)],
            [(a, b, 1) for a, b in zip(ids, ids[1:])])
        curve = PiecewiseCausalCurve.future_chain(space, ids)
        assert midpoint_from_realizer(space, curve) == "v2"

    def test_not_a_realizer(self, mink):
        curve = PiecewiseCausalCurve.future_chain(
            mink, ((0.0, 0.0), (1.0, 0.5), (2.0, 0.0)))
        with pytest.raises(NotARealizer):
            midpoint_from_realizer(mink, curve)


class TestApproximateMidpointFromCurve:
    def _near_realizer(self, mink, eps):
        # Two-segment polyline with tau-length exactly tau - eps/2.
        w = math.sqrt(1.0 - (1.0 - eps / 4.0) ** 2)
        curve = PiecewiseCausalCurve.future_chain(
            mink, ((0.0, 0.0), (1.0, w), (2.0, 0.0)))
        return curve, w

    def test_realizer_input_gives_exact_midpoint(self, mink):
        curve = PiecewiseCausalCurve.future_chain(mink, ((0.0, 0.0), (2.0, 0.0)))
        y = approximate_midpoint_from_curve(mink, (0.0, 0.0), (2.0, 0.0), curve, 0.5)
        assert y == pytest.approx((1.0, 0.0))

    def test_near_realizer_meets_bounds(self, mink):
        eps = 0.4
        curve, w = self._near_realizer(mink, eps)
        assert curve.tau_length() == pytest.approx(2.0 - eps / 2, abs=1e-12)
        y = approximate_midpoint_from_curve(mink, (0.0, 0.0), (2.0, 0.0), curve, eps)
        assert y == pytest.approx((1.0, w), abs=1e-9)
        assert is_eps_tau_midpoint(mink, (0.0, 0.0), (2.0, 0.0), y, eps)

    def test_too_short_curve(self, mink):
        eps = 0.1
        w = math.sqrt(1.0 - (1.0 - eps) ** 2)  # length = 2 - 2 eps < tau - eps
        curve = PiecewiseCausalCurve.future_chain(
            mink, ((0.0, 0.0), (1.0, w), (2.0, 0.0)))
        with pytest.raises(CurveTooShort):
            approximate_midpoint_from_curve(mink, (0.0, 0.0), (2.0, 0.0), curve, eps)

    def test_endpoint_mismatch(self, mink):
        curve = PiecewiseCausalCurve.future_chain(mink, ((0.0, 0.0), (2.0, 0.0)))
        with pytest.raises(ValueError):
            approximate_midpoint_from_curve(mink, (0.0, 0.0), (2.0, 0.1), curve, 0.1)

    def test_coarse_discrete_curve_can_miss_the_bounds(self):
        # A chain whose cumulative weights only offer a lopsided half point:
        # the curve is long enough, but no joint bisects it within eps.
        space = CausalSetSpace(
            [("v0", 0.0), ("v1", 1.9), ("v2", 2.0)],
            [("v0", "v1", 1.9), ("v1", "v2", 0.1)])
        curve = PiecewiseCausalCurve.future_chain(space, ("v0", "v1", "v2"))
        with pytest.raises(MidpointBoundsViolated):
            approximate_midpoint_from_curve(space, "v0", "v2", curve, 0.5)
