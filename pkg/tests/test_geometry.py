import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from anchorex import geometry
from anchorex.bases import legendre_affine
from anchorex.errors import ValidationError
from anchorex.geometry import QuadratureGrid, Region, build_grid


class TestRegion:
    def test_interval_measure(self):
        assert Region.interval(-1, 0.8).measure == pytest.approx(1.8)

    def test_sphere_patch_measure(self):
        r = Region.sphere_patch((0, math.pi / 2), (0, math.pi))
        assert r.measure == pytest.approx(math.pi)

    @pytest.mark.parametrize("bad", [
        dict(kind="interval", bounds=(1, 0), resolution=5),
        dict(kind="interval", bounds=(0, 1), resolution=4),
        dict(kind="interval", bounds=(0, 1), resolution=1),
        dict(kind="interval_union", bounds=((0, 2), (1, 3)), resolution=5),
        dict(kind="sphere_patch", bounds=((0, 4), (0, 1)), resolution=(5, 5)),
        dict(kind="rect2d", bounds=((0, 0), (0, 1)), resolution=(5, 5)),
        dict(kind="rect2d_minus_patch", bounds=(((0, 1), (0, 1)), ((-1, 2), (-1, 2))), resolution=(5, 5)),
        dict(kind="torus", bounds=(0, 1), resolution=5),
    ])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValidationError):
            Region(**bad)

    def test_contains_sphere(self):
        r = Region.sphere_patch((0, math.pi / 2))
        assert r.contains(np.array([[0, 0, 1.0], [0, 0, -1.0]])).tolist() == [True, False]

    def test_minus_patch_contains(self):
        r = Region.rect2d_minus_patch(((0, 1), (0, 1)), ((0.8, 1), (0.7, 1)))
        assert r.contains(np.array([[0.5, 0.5], [0.9, 0.9], [0.8, 0.9]])).tolist() == [True, False, True]

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError):
            geometry.check_disjoint(Region.interval(0, 1), Region.interval(0.5, 2))
        geometry.check_disjoint(Region.interval(0, 1), Region.interval(1, 2))


class TestBuildGrid:
    def test_unit_interval(self):
        assert build_grid(Region.interval(0, 1, 101)).measure == pytest.approx(1.0, abs=1e-12)

    def test_full_sphere(self):
        g = build_grid(Region.sphere_patch(resolution=(181, 361)))
        assert abs(g.measure - 4 * math.pi) <= 1e-6

    def test_omega_of_geomag(self):
        assert build_grid(Region.interval(-1, 0.8, 361)).measure == pytest.approx(1.8, abs=1e-12)

    @pytest.mark.parametrize("region", [
        Region.interval_union(((0, 1), (2, 3.5)), 11),
        Region.rect2d((0, 2), (1, 3), (21, 31)),
    ])
    def test_weights_sum_to_measure(self, region):
        g = build_grid(region)
        assert np.all(g.weights > 0)
        assert abs(g.measure - region.measure) <= 1e-10 * region.measure

    def test_sphere_patch_weights_converge(self):
        # Simpson in theta is fourth order for the sin(theta) Jacobian, not exact
        r = Region.sphere_patch((0.3, 2.0), (0.5, 4.0), (201, 61))
        g = build_grid(r)
        assert np.all(g.weights > 0)
        assert abs(g.measure - r.measure) <= 1e-8 * r.measure
        errs = [abs(build_grid(Region.sphere_patch((0.3, 2.0), (0.5, 4.0), (n, 61))).measure - r.measure)
                for n in (21, 41, 81)]
        assert errs[0] > errs[1] > errs[2]

    def test_minus_patch_drops_nodes(self):
        outer = Region.rect2d((0, 1), (0, 1), (21, 21))
        punct = Region.rect2d_minus_patch(((0, 1), (0, 1)), ((0.5, 1), (0.5, 1)), (21, 21))
        g_out, g_p = build_grid(outer), build_grid(punct)
        assert len(g_p) < len(g_out)
        # kept nodes carry their original weights
        W = dict(zip(map(tuple, g_out.points), g_out.weights))
        assert all(W[tuple(p)] == w for p, w in zip(g_p.points, g_p.weights))

    def test_even_resolution_rejected(self):
        with pytest.raises(ValidationError):
            geometry.simpson_weights(0, 1, 10)

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            QuadratureGrid(np.zeros(3), np.array([1.0, 0.0, 1.0]))
        with pytest.raises(ValidationError):
            QuadratureGrid(np.zeros(3), np.ones(2))


class TestInnerProducts:
    grid = build_grid(Region.interval(0, 1, 101))

    def test_one_one(self):
        x = self.grid.points[:, 0]
        assert geometry.inner_product(self.grid, np.ones_like(x), np.ones_like(x)) == pytest.approx(1.0)

    def test_sine_squared(self):
        s = np.sin(math.pi * self.grid.points[:, 0])
        assert abs(geometry.inner_product(self.grid, s, s) - 0.5) <= 1e-8

    def test_legendre_orthogonal(self):
        g = build_grid(Region.interval(-1, 1, 201))
        x = g.points[:, 0]
        p1, p2 = npleg.legval(x, [0, 1]), npleg.legval(x, [0, 0, 1])
        assert abs(geometry.inner_product(g, p1, p2)) <= 1e-10

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            geometry.inner_product(self.grid, np.ones(3), np.ones(3))

    def test_error_norm_examples(self):
        g = build_grid(Region.interval(0, 4, 41))
        one = np.ones(len(g))
        assert geometry.error_norm(g, one, one) == 0.0
        assert geometry.error_norm(g, one, 0 * one) == pytest.approx(2.0, abs=1e-10)

    def test_error_norm_refinement(self):
        # smooth integrand: coarse and fine grids agree (Richardson-style check)
        f = lambda x: np.exp(x) * np.cos(3 * x)  # noqa: E731
        h = lambda x: x ** 3 - x  # noqa: E731
        coarse = build_grid(Region.interval(-1, 2, 201))
        fine = build_grid(Region.interval(-1, 2, 3201))
        ec = geometry.error_norm(coarse, f(coarse.points[:, 0]), h(coarse.points[:, 0]))
        ef = geometry.error_norm(fine, f(fine.points[:, 0]), h(fine.points[:, 0]))
        assert abs(ec - ef) <= 1e-6 * ef

    def test_polynomial_resolution_consistency(self, rng):
        c = rng.normal(size=6)  # p^2 has degree 10
        vals = []
        for n in (401, 801):  # default resolution and its refinement
            g = build_grid(Region.interval(-1.0, 1.0, n))
            p = np.polyval(c, g.points[:, 0])
            vals.append(geometry.inner_product(g, p, p))
        assert abs(vals[0] - vals[1]) <= 1e-8 * abs(vals[1])


@given(st.lists(st.floats(-5, 5), min_size=21, max_size=21),
       st.lists(st.floats(-5, 5), min_size=21, max_size=21))
def test_cauchy_schwarz(f, g):
    grid = build_grid(Region.interval(0, 2, 21))
    lhs = abs(geometry.inner_product(grid, f, g))
    assert lhs <= geometry.norm(grid, f) * geometry.norm(grid, g) * (1 + 1e-12) + 1e-12


def test_disjoint_union_additivity(rng):
    om, xi = build_grid(Region.interval(-1, 0.3, 51)), build_grid(Region.interval(0.3, 1, 31))
    A = om.union(xi)
    f = lambda g: np.sin(4 * g.points[:, 0])  # noqa: E731
    e2 = lambda g: geometry.error_norm(g, f(g), 0 * f(g)) ** 2  # noqa: E731
    assert e2(A) == pytest.approx(e2(om) + e2(xi), rel=1e-12)


class TestGram:
    def test_same_region_orthonormal_identity(self):
        from anchorex.bases import orthonormalize_on
        om = Region.interval(-1, 0.5, 401)
        onb = orthonormalize_on(legendre_affine(5, (-1, 0.5)), om, Region.interval(0.5, 1, 101))
        g = build_grid(om)
        G = geometry.gram_matrix(g, onb.evaluate(g.points))
        assert np.allclose(G, np.eye(5), atol=1e-10)

    def test_constant_function(self):
        from anchorex.bases import legendre_affine
        gp = geometry.gram_matrices(legendre_affine(1), Region.interval(0, 1, 11), Region.interval(1, 2, 11))
        assert np.allclose(gp.g_omega, [[1.0]]) and np.allclose(gp.g_xi, [[1.0]])

    def test_affine_legendre_diagonal(self):
        gp = geometry.gram_matrices(legendre_affine(5, (-1, 0.5)), Region.interval(-1, 0.5, 2001),
                                    Region.interval(0.5, 1, 101))
        off = gp.g_omega - np.diag(np.diag(gp.g_omega))
        assert np.max(np.abs(off)) <= 1e-8
        # ||P_k||^2 on the mapped interval is alpha * 2 / (2k + 1)
        alpha = 0.75
        assert np.allclose(np.diag(gp.g_omega), alpha * 2 / (2 * np.arange(5) + 1), rtol=1e-10)

    def test_symmetric_psd(self):
        gp = geometry.gram_matrices(legendre_affine(12, (-1, 0.2)), Region.interval(-1, 0.2, 201),
                                    Region.interval(0.2, 1, 201))
        for G in (gp.g_omega, gp.g_xi):
            assert np.array_equal(G, G.T)
            lam = np.linalg.eigvalsh(G)
            assert lam[0] >= -1e-10 * lam[-1]

    def test_non_finite_rejected(self):
        g = build_grid(Region.interval(0, 1, 5))
        with pytest.raises(ValidationError):
            geometry.gram_matrix(g, np.array([[1, 2, np.nan, 4, 5.0]]))
