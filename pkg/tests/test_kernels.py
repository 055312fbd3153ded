import json
import math

import numpy as np
import pytest

from greenlab.errors import InvalidInputError, SingularityError
from greenlab.geometry import (PointConfiguration, flat_torus, grid_torus,
                               sphere, uniform_sample)
from greenlab.kernels import (cd_constant, coulomb_sphere,
                              coulomb_sphere_kernel, green_sphere2,
                              green_sphere2_kernel, green_t1, green_t1_kernel,
                              green_torus_spectral,
                              green_torus_spectral_kernel,
                              green_torus_spectral_tail_bound,
                              log_sphere2_kernel, log_sphere2_mean,
                              pair_energy, pair_values, riesz_kernel,
                              riesz_mean_on_sphere)

# Monte-Carlo oracle for c_3: 10^6 chordal inverse distances on S^3,
# seed 2024 (frozen; standard error of the mean alongside).
MC_C3 = 0.848149605685574
MC_C3_SE = 0.0005135111542045966


class TestGreenT1:
    def test_at_zero(self):
        assert abs(green_t1(0.0) - 1.0 / 12.0) < 1e-15

    def test_at_half(self):
        assert abs(green_t1(0.5) - (-1.0 / 24.0)) < 1e-15

    def test_mean_zero_analytic(self):
        # antiderivative u^3/6 - u^2/4 + u/12 vanishes at both endpoints
        u = np.linspace(0.0, 1.0, 20001)
        integral = np.trapezoid(green_t1(u), u)
        assert abs(integral) < 1e-9

    def test_domain_check(self):
        with pytest.raises(InvalidInputError):
            green_t1(1.5)
        with pytest.raises(InvalidInputError):
            green_t1(-0.1)


class TestGreenTorusSpectral:
    def test_brute_force_fourier_oracle_d2(self):
        K = 400
        r = np.arange(-K, K + 1)
        kx, ky = np.meshgrid(r, r, indexing="ij")
        mask = (kx != 0) | (ky != 0)
        lam = 4.0 * math.pi ** 2 * (kx[mask] ** 2 + ky[mask] ** 2)
        brute = float(np.sum(np.cos(math.pi * (kx[mask] + ky[mask])) / lam))
        ours = green_torus_spectral(np.array([0.5, 0.5]), 2)
        assert abs(ours - brute) < 1e-6

    def test_symmetry_in_z(self):
        rng = np.random.default_rng(1)
        z = rng.random((10, 3))
        assert np.allclose(green_torus_spectral(z, 3),
                           green_torus_spectral(-z, 3), atol=1e-12)

    def test_split_independence(self):
        z = np.array([0.3, 0.17, 0.41])
        vals = [green_torus_spectral(z, 3, K=K, T=T)
                for K, T in [(0, 0.02), (8, 0.02), (0, 0.05), (12, 0.01)]]
        assert max(vals) - min(vals) < 1e-12

    def test_singularity_at_origin(self):
        with pytest.raises(SingularityError):
            green_torus_spectral(np.zeros(2), 2)

    def test_grid_displacement_mean(self):
        # derived oracle: mean of G over the 64^2 - 1 nonzero grid
        # displacements on T^2 is -1.61638e-4 (midpoint-rule error of the
        # mean-zero integral, driven by the log singularity at 0)
        m = 64
        ij = np.array([(i, j) for i in range(m) for j in range(m)
                       if (i, j) != (0, 0)], dtype=float) / m
        mean = float(np.mean(green_torus_spectral(ij, 2)))
        assert abs(mean - (-1.6163780231e-4)) < 1e-9
        assert abs(mean) < 2e-4

    def test_tail_bound_decreasing(self):
        bounds = [green_torus_spectral_tail_bound(K, 0.02, 3) for K in (4, 6, 8)]
        assert bounds[0] > bounds[1] > bounds[2] > 0.0

    def test_d1_rejected(self):
        with pytest.raises(InvalidInputError):
            green_torus_spectral(np.array([0.3]), 1)


class TestGreenSphere2:
    def test_antipodal_truncation_convergence(self):
        x = np.array([0.0, 0.0, 1.0])
        coarse = green_sphere2(x, -x, 2000)
        fine = green_sphere2(x, -x, 4000)
        # the Legendre series alternates at the antipode; the truncation
        # error is Theta(1/L) there, so 1e-6 agreement needs the closed form
        assert abs(coarse - fine) < 5e-5
        closed = (-math.log(2.0) + math.log(2.0) - 1.0) / (4.0 * math.pi)
        assert abs(fine - closed) < 5e-5

    def test_matches_log_closed_form(self):
        # G(t) = (1/4pi)(-ln(1-t) + ln 2 - 1) away from the poles
        rng = np.random.default_rng(2)
        for _ in range(5):
            g = rng.standard_normal((2, 3))
            x, y = g / np.linalg.norm(g, axis=1, keepdims=True)
            t = float(np.dot(x, y))
            closed = (-math.log(1.0 - t) + math.log(2.0) - 1.0) / (4.0 * math.pi)
            assert abs(green_sphere2(x, y, 4000) - closed) < 1e-5

    def test_mean_zero_by_quadrature(self):
        # integral over S^2 reduces to (1/2) int_{-1}^{1} G(t) dt
        nodes, weights = np.polynomial.legendre.leggauss(200)
        x = np.array([0.0, 0.0, 1.0])
        vals = [green_sphere2(x, np.array([math.sqrt(1 - t * t), 0.0, t]), 2000)
                for t in nodes]
        # the Gauss rule itself misses ~1.25e-6 of the log singularity at t=1
        assert abs(0.5 * float(np.dot(weights, vals))) < 3e-6

    def test_rotational_invariance(self):
        th = 1.1
        pairs = [(np.array([0.0, 0.0, 1.0]),
                  np.array([math.sin(th), 0.0, math.cos(th)])),
                 (np.array([1.0, 0.0, 0.0]),
                  np.array([math.cos(th), math.sin(th), 0.0]))]
        vals = [green_sphere2(x, y, 2000) for x, y in pairs]
        assert abs(vals[0] - vals[1]) < 1e-12

    def test_coincident_rejected(self):
        x = np.array([0.0, 1.0, 0.0])
        with pytest.raises(SingularityError):
            green_sphere2(x, x, 2000)


class TestCoulomb:
    def test_d3_antipodal(self):
        x = np.array([1.0, 0, 0, 0])
        assert abs(coulomb_sphere(x, -x, 3) - 0.5) < 1e-15

    def test_d4_orthogonal(self):
        x = np.zeros(5)
        y = np.zeros(5)
        x[0] = 1.0
        y[1] = 1.0
        assert abs(coulomb_sphere(x, y, 4) - 0.5) < 1e-15

    def test_coincident(self):
        x = np.array([1.0, 0, 0, 0])
        with pytest.raises(SingularityError):
            coulomb_sphere(x, x, 3)

    def test_kernel_requires_d3(self):
        with pytest.raises(InvalidInputError):
            coulomb_sphere_kernel(2)


class TestConstants:
    def test_c3_against_monte_carlo(self):
        assert abs(cd_constant(3) - MC_C3) <= 3.0 * MC_C3_SE

    def test_c3_closed_form(self):
        # c_3 = 8/(3 pi), from the polar-angle integral in closed form
        assert abs(cd_constant(3) - 8.0 / (3.0 * math.pi)) < 1e-12

    def test_positive(self):
        for d in (3, 4, 5):
            assert cd_constant(d) > 0.0

    def test_log_sphere_mean(self):
        # int -ln||x-y|| dsigma(y) = 1/2 - ln 2 for fixed x on S^2
        assert abs(log_sphere2_mean() - (0.5 - math.log(2.0))) < 1e-10

    def test_riesz_mean_s1_s2(self):
        # int ||x-y||^{-1} dsigma(y) on S^2 = 1 (electrostatics of a shell)
        assert abs(riesz_mean_on_sphere(1.0, 2) - 1.0) < 1e-10

    def test_normalized_energy_lln(self):
        # 20 seeds of n=2000 on S^3: the mean-zero normalized energy has
        # expectation 0; check the empirical mean against 2 standard errors
        kernel = coulomb_sphere_kernel(3, normalization="mean_zero")
        vals = []
        for seed in range(20):
            cfg = uniform_sample(sphere(3), 2000, seed=seed)
            vals.append(pair_energy(cfg, kernel).normalized)
        vals = np.array(vals)
        se = float(vals.std(ddof=1)) / math.sqrt(len(vals))
        assert abs(float(vals.mean())) <= 2.0 * se


class TestPairEnergy:
    def test_two_point_t1(self):
        cfg = PointConfiguration(flat_torus(1), np.array([[0.0], [0.5]]))
        rep = pair_energy(cfg, green_t1_kernel())
        assert abs(rep.total - (-1.0 / 12.0)) < 1e-15

    def test_single_point(self):
        cfg = PointConfiguration(sphere(3), np.array([[1.0, 0, 0, 0]]))
        rep = pair_energy(cfg, coulomb_sphere_kernel(3))
        assert rep.total == 0.0

    def test_antipodal_coulomb_raw(self):
        cfg = PointConfiguration(sphere(3),
                                 np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]]))
        rep = pair_energy(cfg, coulomb_sphere_kernel(3))
        assert abs(rep.total - 1.0) < 1e-15

    def test_coincident_named_indices(self):
        pts = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 1.0, 0, 0]])
        cfg = PointConfiguration(sphere(3), pts)
        with pytest.raises(SingularityError) as err:
            pair_energy(cfg, coulomb_sphere_kernel(3))
        assert err.value.indices == (1, 2)

    def test_reorder_invariance(self):
        cfg = uniform_sample(sphere(2), 12, seed=3)
        perm = np.random.default_rng(0).permutation(12)
        shuffled = PointConfiguration(cfg.manifold, cfg.points[perm])
        k = riesz_kernel(1.0, 2)
        assert abs(pair_energy(cfg, k).total
                   - pair_energy(shuffled, k).total) < 1e-10

    def test_rotation_invariance(self):
        cfg = uniform_sample(sphere(2), 10, seed=4)
        q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((3, 3)))
        rotated = PointConfiguration(cfg.manifold, cfg.points @ q.T)
        for k in (green_sphere2_kernel(), log_sphere2_kernel(), riesz_kernel(1.0, 2)):
            assert abs(pair_energy(cfg, k).total
                       - pair_energy(rotated, k).total) < 1e-10

    def test_translation_invariance(self):
        cfg = uniform_sample(flat_torus(2), 10, seed=5)
        shifted = PointConfiguration(cfg.manifold,
                                     np.mod(cfg.points + [0.37, 0.81], 1.0))
        k = green_torus_spectral_kernel(2)
        assert abs(pair_energy(cfg, k).total
                   - pair_energy(shifted, k).total) < 1e-10

    def test_normalized_consistency(self):
        cfg = uniform_sample(flat_torus(1), 9, seed=6)
        rep = pair_energy(cfg, green_t1_kernel())
        assert abs(rep.normalized * 81 - rep.total) <= 1e-12 * max(1.0, abs(rep.total))

    def test_fast_path_matches_matrix_sum(self):
        # the structure-factor energy must equal the per-pair matrix sum
        cfg = uniform_sample(flat_torus(3), 30, seed=7)
        k = green_torus_spectral_kernel(3)
        fast = pair_energy(cfg, k).total
        slow = float(pair_values(cfg, k).sum())
        assert abs(fast - slow) <= 1e-10 * max(1.0, abs(slow))

    def test_min_separation_positive_when_finite(self):
        cfg = uniform_sample(sphere(2), 8, seed=8)
        rep = pair_energy(cfg, riesz_kernel(1.0, 2))
        assert rep.min_separation > 0.0

    def test_json_fields(self):
        cfg = uniform_sample(flat_torus(1), 4, seed=9)
        rep = pair_energy(cfg, green_t1_kernel())
        data = json.loads(rep.to_json())
        assert set(data) == {"kernel", "n", "total", "normalized", "min_separation"}

    def test_wrong_manifold_rejected(self):
        cfg = uniform_sample(flat_torus(2), 4, seed=10)
        with pytest.raises(InvalidInputError):
            pair_energy(cfg, riesz_kernel(1.0, 2))
