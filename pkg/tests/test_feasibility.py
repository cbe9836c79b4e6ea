import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anchorex import geometry
from anchorex.bases import CoefficientVector, legendre_affine
from anchorex.errors import EmptyIntersectionSuspected, NonConvergence, ValidationError
from anchorex.feasibility import (Anchor, FeasibleSet, anchors_from_dicts, create_anchors, diameter_bound,
                                  improvement_bounds, lemma_bounds, lemma_minimizer, membership, project_ball,
                                  project_intersection, two_circle_gap, xi_distance, xi_inner)
from anchorex.fitting import fit_ls, synthesize_noisy_samples
from anchorex.geometry import Region

B2 = legendre_affine(2)
I2 = np.eye(2)


def anchor(center, delta, basis=B2):
    return Anchor(CoefficientVector(center, basis), delta)


def random_spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + 0.1 * np.eye(d)


class TestDistance:
    def test_zero_and_euclid(self):
        assert xi_distance([1, 2], [1, 2], I2) == 0
        assert xi_distance([0, 0], [3, 4], I2) == 5

    def test_basis_mismatch(self):
        with pytest.raises(ValidationError):
            xi_distance(CoefficientVector([1, 2], B2), CoefficientVector([1, 2], legendre_affine(2, (-1, 0))), I2)
        with pytest.raises(ValidationError):
            xi_distance([1, 2, 3], [1, 2], I2)

    def test_matches_quadrature(self, rng):
        b = legendre_affine(6, (-1, 0.3))
        xi = Region.interval(0.3, 1, 401)
        g = geometry.build_grid(xi)
        G = geometry.gram_matrix(g, b.evaluate(g.points))
        x, y = rng.normal(size=6), rng.normal(size=6)
        ref = geometry.error_norm(g, x @ b.evaluate(g.points), y @ b.evaluate(g.points))
        assert xi_distance(x, y, G) == pytest.approx(ref, rel=1e-8)

    @given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
    def test_triangle(self, v):
        G = random_spd(np.random.default_rng(0), 3)
        a, b, c = np.array(v[:3]), np.array(v[3:6]), np.array(v[6:])
        assert xi_distance(a, c, G) <= xi_distance(a, b, G) + xi_distance(b, c, G) + 1e-10
        assert xi_distance(a, b, G) == pytest.approx(xi_distance(b, a, G))


class TestBall:
    def test_inside(self):
        r = project_ball([0.3, 0.1], anchor([0, 0], 1), I2)
        assert np.array_equal(r.h, [0.3, 0.1]) and r.delta_dist == 0
        assert (r.improvement_lower, r.improvement_upper) == (0, 0)

    def test_boundary_is_inside(self):
        r = project_ball([1.0, 0.0], anchor([0, 0], 1), I2)
        assert not r.active

    def test_unit_circle(self):
        r = project_ball([2.0, 0.0], anchor([0, 0], 1), I2)
        assert np.allclose(r.h, [1, 0]) and r.delta_dist == pytest.approx(1)
        assert r.improvement_lower == pytest.approx(math.sqrt(0.5))
        assert r.improvement_upper == pytest.approx(1)

    def test_bounds_formula(self):
        assert improvement_bounds(0.0, 2.0) == (0.0, 0.0)
        lo, hi = improvement_bounds(3.0, 1.0)
        assert lo == pytest.approx(3 * math.sqrt(3 / 4)) and hi == 3

    def test_negative_radius(self):
        with pytest.raises(ValidationError):
            anchor([0, 0], -1)

    def test_guarantees_random(self, rng):
        # f inside the ball: projection never worsens and the gain sits in its interval
        for _ in range(300):
            d = int(rng.integers(1, 6))
            G = random_spd(rng, d)
            a = rng.normal(size=d)
            f = a + rng.normal(size=d) * 0.3
            delta = xi_distance(f, a, G) * (1 + rng.random())
            g = a + rng.normal(size=d) * 3
            r = project_ball(g, Anchor(CoefficientVector(a, legendre_affine(d)), delta), G)
            eg, eh = xi_distance(f, g, G), xi_distance(f, r.h, G)
            assert eh <= eg + 1e-9
            gain = eg - eh
            assert r.improvement_lower - 1e-9 <= gain <= r.improvement_upper + 1e-9
            if r.active:
                assert eh < eg
                assert xi_distance(r.h, a, G) == pytest.approx(delta, rel=1e-10)

    def test_idempotent(self, rng):
        G = random_spd(rng, 4)
        A = Anchor(CoefficientVector(np.zeros(4), legendre_affine(4)), 0.5)
        h = project_ball(rng.normal(size=4) * 5, A, G).h
        assert np.allclose(project_ball(h, A, G).h, h, atol=1e-9)


class TestIntersection:
    def test_single_anchor_closed_form(self):
        fs = FeasibleSet((anchor([0, 0], 1),), I2)
        a = project_intersection([3.0, 4.0], fs)
        b = project_ball([3.0, 4.0], fs.anchors[0], I2)
        assert np.allclose(a.h, b.h, atol=1e-10) and a.iterations == 0
        assert a.improvement_lower == b.improvement_lower

    def test_concentric(self):
        fs = FeasibleSet((anchor([0, 0], 2), anchor([0, 0], 1)), I2)
        r = project_intersection([3.0, 4.0], fs)
        assert np.allclose(r.h, [0.6, 0.8], atol=1e-9)
        assert r.improvement_lower is None

    def test_lens_against_grid_search(self):
        fs = FeasibleSet((anchor([0, 0], 1), anchor([1, 0], 1)), I2)
        g = np.array([0.5, 5.0])
        r = project_intersection(g, fs)
        assert r.converged
        assert np.allclose(r.h, [0.5, math.sqrt(3) / 2], atol=1e-8)
        # dense grid over the lens, spacing 1e-3
        x = np.arange(0, 1 + 1e-9, 1e-3)
        y = np.arange(-1, 1 + 1e-9, 1e-3)
        X, Y = np.meshgrid(x, y, indexing="ij")
        inside = (X ** 2 + Y ** 2 <= 1) & ((X - 1) ** 2 + Y ** 2 <= 1)
        D = np.hypot(X - g[0], Y - g[1])
        D[~inside] = np.inf
        i = np.unravel_index(np.argmin(D), D.shape)
        assert np.hypot(X[i] - r.h[0], Y[i] - r.h[1]) <= 2e-3
        assert np.hypot(*(g - r.h)) <= D[i] + 1e-12

    def test_feasible_start_unchanged(self):
        fs = FeasibleSet((anchor([0, 0], 1), anchor([0.5, 0], 1)), I2)
        r = project_intersection([0.2, 0.1], fs)
        assert np.array_equal(r.h, [0.2, 0.1]) and r.delta_dist == 0

    def test_empty_intersection(self):
        fs = FeasibleSet((anchor([0, 0], 1), anchor([5, 0], 1)), I2)
        with pytest.raises(EmptyIntersectionSuspected):
            project_intersection([2.5, 3.0], fs, max_iter=200)

    def test_obtuse_angle_and_nonexpansive(self, rng):
        d = 3
        G = random_spd(rng, d)
        b = legendre_affine(d)
        for _ in range(30):
            f = rng.normal(size=d)
            anchors = []
            for _ in range(3):
                a = f + rng.normal(size=d)
                anchors.append(Anchor(CoefficientVector(a, b), xi_distance(f, a, G) * (1 + 0.2 * rng.random())))
            fs = FeasibleSet(tuple(anchors), G)
            g1, g2 = rng.normal(size=d) * 4, rng.normal(size=d) * 4
            p1, p2 = project_intersection(g1, fs), project_intersection(g2, fs)
            for p, g in ((p1, g1), (p2, g2)):
                assert membership(p.h, fs, slack=1e-8)
                assert xi_distance(f, p.h, G) <= xi_distance(f, g, G) + 1e-9
                assert xi_inner(g - p.h, f - p.h, G) <= 1e-7
            assert xi_distance(p1.h, p2.h, G) <= xi_distance(g1, g2, G) + 1e-7


class TestMembershipAndDiameter:
    def test_examples(self):
        fs = FeasibleSet((anchor([0, 0], 3),), I2)
        assert membership([0, 0], fs)
        assert not membership([4.0, 0.0], fs)
        assert diameter_bound(fs) == 6
        assert diameter_bound(FeasibleSet(tuple(anchor([0, 0], r) for r in (5, 2, 7)), I2)) == 4

    def test_shrinks_with_anchors(self, rng):
        fs = FeasibleSet((anchor([0, 0], 5),), I2)
        prev = diameter_bound(fs)
        for delta in (4.0, 4.5, 2.0, 3.0, 1.0):
            fs = fs.with_anchor(anchor(rng.normal(size=2) * 0.1, delta))
            assert diameter_bound(fs) <= prev
            prev = diameter_bound(fs)

    def test_convexity(self, rng):
        fs = FeasibleSet((anchor([0, 0], 1), anchor([0.8, 0.3], 1)), I2)
        for _ in range(200):
            g1 = project_intersection(rng.normal(size=2) * 3, fs).h
            g2 = project_intersection(rng.normal(size=2) * 3, fs).h
            t = rng.random()
            assert membership(t * g1 + (1 - t) * g2, fs, slack=1e-8)

    def test_empty_set_rejected(self):
        with pytest.raises(ValidationError):
            FeasibleSet((), I2)


OM = Region.interval(-1, 0.6, 801)
XI = Region.interval(0.6, 1, 401)


class TestCreateAnchors:
    basis = legendre_affine(6, (-1, 0.6))
    truth = CoefficientVector(np.linspace(1, 0.2, 6), basis)

    def samples(self, seed=0):
        return synthesize_noisy_samples(self.truth, OM, 80, {"sigma": 0.05}, seed)

    def test_full_subset_is_ls(self):
        from anchorex.bases import orthonormalize_on
        from anchorex.conditioning import kappa_spec
        s = self.samples()
        (a,) = create_anchors(self.basis, OM, XI, s, m=6, M=1)
        ls = fit_ls(self.basis, s)
        assert np.allclose(a.center, ls.beta, atol=1e-10)
        k = kappa_spec(orthonormalize_on(self.basis, OM, XI))
        assert a.delta == pytest.approx(math.sqrt(k) * ls.e_omega_empirical, rel=1e-8)

    def test_distinct_and_deterministic(self):
        s = self.samples()
        A = create_anchors(self.basis, OM, XI, s, m=3, M=5, seed=4)
        B = create_anchors(self.basis, OM, XI, s, m=3, M=5, seed=4)
        idx = [tuple(a.provenance["indices"]) for a in A]
        assert len(set(idx)) == 5
        assert idx == [tuple(b.provenance["indices"]) for b in B]
        for a in A:
            off = [i for i in range(6) if i not in a.provenance["indices"]]
            assert np.all(a.center[off] == 0)

    def test_more_anchors_smaller_set(self, rng):
        s = self.samples()
        A = create_anchors(self.basis, OM, XI, s, m=4, M=6, seed=1)
        gp = geometry.gram_matrices(self.basis, OM, XI)
        small, big = FeasibleSet(tuple(A), gp.g_xi), FeasibleSet(tuple(A[:-1]), gp.g_xi)
        center = A[0].center
        for _ in range(100):
            g = center + rng.normal(size=6) * A[0].delta * 0.02
            if membership(g, small):
                assert membership(g, big)

    def test_truth_feasible_under_certified_radii(self):
        gp = geometry.gram_matrices(self.basis, OM, XI)
        hits = 0
        for seed in range(20):
            A = create_anchors(self.basis, OM, XI, self.samples(seed), m=6, M=1, seed=seed)
            hits += membership(self.truth, FeasibleSet(tuple(A), gp.g_xi))
        assert hits == 20

    def test_errors(self):
        s = self.samples()
        with pytest.raises(ValidationError):
            create_anchors(self.basis, OM, XI, s, m=7, M=1)
        with pytest.raises(ValidationError):
            create_anchors(self.basis, OM, XI, s, m=6, M=2)
        with pytest.raises(ValidationError):
            create_anchors(self.basis, OM, XI, s, m=2, M=1, certificate="magic")
        with pytest.raises(NonConvergence):
            # a wide Xi makes the inner-domain condition fail for every subset
            create_anchors(self.basis, OM, XI, s, m=5, M=2, certificate="inner")

    def test_inner_certificate(self):
        om, xi = Region.interval(-1, 0.97, 2001), Region.interval(0.97, 1, 201)
        b = legendre_affine(3)
        s = synthesize_noisy_samples(CoefficientVector([1, 0.5, 0.2], b), om, 60, {"sigma": 0.01}, 0)
        A = create_anchors(b, om, xi, s, m=2, M=2, certificate="inner")
        assert all(a.provenance["certificate"] == "inner" for a in A)

    def test_from_dicts(self):
        items = [{"coeffs": [1, 2], "delta": 0.5, "provenance": {"kind": "prior_bound"}}]
        (a,) = anchors_from_dicts(items, B2)
        assert a.to_dict() == {"coeffs": [1.0, 2.0], "delta": 0.5, "provenance": {"kind": "prior_bound"}}
        with pytest.raises(ValidationError):
            anchors_from_dicts([{"coeffs": [1, 2]}], B2)


class TestTwoCircleGap:
    def test_diameter(self):
        x = np.linspace(-1, 1, 11)
        assert np.allclose(two_circle_gap(2.0, 1.0, x, 0 * x), 1.0, atol=1e-15)

    def test_minimizer_value(self):
        xs, ys = lemma_minimizer(2.0, 1.0)
        assert (xs, ys) == pytest.approx((0.75, math.sqrt(7) / 4))
        assert two_circle_gap(2.0, 1.0, xs, ys) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    @given(st.floats(0.01, 10), st.floats(1.001, 20))
    def test_minimizer_attains_lower(self, R, ratio):
        p = R * ratio
        lo, _ = lemma_bounds(p, R)
        assert abs(two_circle_gap(p, R, *lemma_minimizer(p, R)) - lo) <= 1e-10 * max(1, p)

    def test_domain(self):
        with pytest.raises(ValidationError):
            two_circle_gap(1.0, 2.0, 0, 0)
        with pytest.raises(ValidationError):
            two_circle_gap(2.0, 1.0, 1.0, 1.0)


def test_gain_bounds_scale_homogeneously():
    # doubling every length doubles the bounds
    A = anchor([0, 0], 1)
    r1 = project_ball([3.0, 0.0], A, I2)
    r2 = project_ball([6.0, 0.0], anchor([0, 0], 2), I2)
    assert r2.improvement_lower == pytest.approx(2 * r1.improvement_lower)
