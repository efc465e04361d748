"""Tests for mixture construction, evaluation, and serialization."""

import math

import pytest

from mixmodes import (
    BoundBox,
    Mixture,
    PrecisionContext,
    default_outer_weight_scale,
    density,
    density_gradient,
    make_faN,
    make_gamma,
    make_Gamma,
    make_lattice_d,
    mixing_variance,
    mixture_from_json,
    mixture_to_json,
)

DOUBLE = PrecisionContext()
ULP = math.ldexp(1.0, -52)


def phi(r2: float, d: int = 1) -> float:
    return math.exp(-0.5 * r2) * (2.0 * math.pi) ** (-d / 2.0)


class TestConstruction:
    def test_gamma_dyadic_spacing(self):
        m = make_gamma(0.5, 2)
        assert m.dim == 1
        assert m.normalized
        assert [float(c[0]) for c in m.centers] == [-1.0, -0.5, 0.0, 0.5, 1.0]
        assert m.weights == (0.2,) * 5
        assert m.bound.half_width == 1.0

    def test_gamma_default_figure_layout(self):
        a = 2.0 * math.sqrt(math.pi / 5.0)
        m = make_gamma(a, 5)
        assert m.n_components == 11
        assert float(m.centers[-1][0]) == pytest.approx(7.9266545952120211, rel=1e-15)
        assert float(m.centers[0][0]) == -float(m.centers[-1][0])

    def test_faN_is_unit_weight_gamma(self):
        m = make_faN(1.3, 4)
        g = make_gamma(1.3, 4)
        assert m.centers == g.centers
        assert m.weights == (1.0,) * 9
        assert not m.normalized
        for x in (-2.0, 0.0, 0.37, 5.0):
            assert density(m, x) == pytest.approx(9.0 * density(g, x), rel=4 * ULP)

    def test_Gamma_small_cases(self):
        m = make_Gamma(1)
        assert m.n_components == 7
        assert default_outer_weight_scale(1) == pytest.approx(
            1.0 / (48.0 * math.pi), rel=1e-15
        )
        m2 = make_Gamma(2, alpha=0.25)
        w = sorted(set(m2.weights))
        assert w[0] == pytest.approx(0.05, rel=1e-15)
        assert w[1] == pytest.approx(0.5, rel=1e-15)

    def test_Gamma_shell_geometry(self):
        N = 3
        m = make_Gamma(N)
        a = 2.0 * math.sqrt(math.pi) / math.sqrt(N)
        xs = sorted(float(c[0]) for c in m.centers)
        assert xs[0] == pytest.approx(-3 * N * a, rel=1e-15)
        assert 0.0 in xs
        inner = [x for x in xs if 0 < abs(x) < N * a * (1 - 1e-9)]
        assert inner == []

    def test_lattice_d_shapes(self):
        m = make_lattice_d(1.1, 2, 2)
        assert m.dim == 2
        assert m.n_components == 25
        m3 = make_lattice_d(0.9, 1, 3)
        assert m3.n_components == 27
        assert all(len(c) == 3 for c in m3.centers)

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            make_gamma(0.0, 3)
        with pytest.raises(ValueError):
            make_gamma(1.0, -1)
        with pytest.raises(ValueError):
            make_Gamma(0)
        with pytest.raises(ValueError):
            make_Gamma(2, alpha=0.5)
        with pytest.raises(ValueError):
            make_lattice_d(1.0, 2, 4)
        with pytest.raises(ValueError):
            make_lattice_d(1.0, 200, 3)  # component guard

    def test_mixture_validation(self):
        with pytest.raises(ValueError):
            Mixture(1, ((0.0,),), (0.0,), False)
        with pytest.raises(ValueError):
            Mixture(1, ((0.0, 1.0),), (1.0,), False)
        with pytest.raises(ValueError):
            Mixture(1, ((0.0,), (1.0,)), (0.9, 0.9), True)
        with pytest.raises(ValueError):
            Mixture(1, ((2.0,),), (1.0,), False, BoundBox(1.0))
        with pytest.raises(ValueError):
            BoundBox(-0.5)


class TestDensity:
    def test_isolated_bumps(self):
        m = make_gamma(10.0, 1)
        want = (phi(0.0) + 2.0 * phi(100.0)) / 3.0
        assert density(m, 0.0) == pytest.approx(want, rel=4 * ULP)

    def test_single_gaussian_gradient(self):
        m = Mixture(1, ((0.0,),), (1.0,), True)
        g = density_gradient(m, 1.5)[0]
        assert g == pytest.approx(-1.5 * phi(1.5**2), rel=1e-14)

    def test_gradient_vanishes_at_symmetric_origin(self):
        m = make_gamma(1.7, 3)
        assert abs(density_gradient(m, 0.0)[0]) < 1e-18

    def test_symmetry(self):
        m = make_gamma(1.3, 5)
        for x in (0.4, 1.9, 3.3):
            assert density(m, x) == pytest.approx(density(m, -x), rel=1e-15)

    def test_extended_matches_double_at_double_scale(self):
        m = make_gamma(2.0, 4)
        ctx = PrecisionContext.for_bits(160)
        for x in (-3.1, 0.0, 0.77, 6.5):
            assert float(density(m, x, ctx)) == pytest.approx(
                density(m, x), rel=8 * ULP
            )
            gd = density_gradient(m, x)[0]
            ge = float(density_gradient(m, x, ctx)[0])
            assert ge == pytest.approx(gd, rel=8 * ULP, abs=1e-17)

    def test_multivariate_product_structure(self):
        # a single 2-D unit-weight bump factorizes into 1-D bumps
        m = Mixture(2, ((0.0, 0.0),), (1.0,), True)
        x, y = 0.6, -1.1
        assert density(m, (x, y)) == pytest.approx(
            phi(x * x) * phi(y * y), rel=4 * ULP
        )
        gx, gy = density_gradient(m, (x, y))
        assert gx == pytest.approx(-x * phi(x * x) * phi(y * y), rel=1e-13)
        assert gy == pytest.approx(-y * phi(x * x) * phi(y * y), rel=1e-13)

    def test_dim_mismatch_raises(self):
        m = make_lattice_d(1.0, 1, 2)
        with pytest.raises(ValueError):
            density(m, (0.0, 0.0, 0.0))


class TestExactLatticePeriodicity:
    """The stored lattice must be exactly periodic: center products kept
    at double-rounded values would jitter the density by ~1e-16 of the
    carrier, drowning oscillations of order exp(-pi*N/2) once N > 20."""

    def test_large_N_gradient_matches_fourier_series(self):
        N = 32
        a = 2.0 * math.sqrt(math.pi) / math.sqrt(N)
        m = make_faN(a, N)
        ctx = PrecisionContext.for_size(N)
        beta = 2.0 * math.pi**2 / (a * a)
        for t in (0.1, 0.25, 0.6, 0.9):
            got = float(density_gradient(m, t * a, ctx)[0])
            want = (
                -(4.0 * math.pi / (a * a))
                * math.fsum(
                    n * math.exp(-beta * n * n) * math.sin(2.0 * math.pi * n * t)
                    for n in range(1, 5)
                )
            )
            assert got == pytest.approx(want, rel=1e-9)

    def test_large_N_oscillation_resolved(self):
        N = 32
        a = 2.0 * math.sqrt(math.pi) / math.sqrt(N)
        m = make_faN(a, N)
        ctx = PrecisionContext.for_size(N)
        drop = float(density(m, 0.0, ctx) - density(m, 0.5 * a, ctx))
        want = (4.0 / a) * math.exp(-2.0 * math.pi**2 / (a * a))
        assert drop == pytest.approx(want, rel=1e-3)


class TestMixingVariance:
    def test_gamma_closed_form(self):
        for a, N in ((0.7, 3), (1.9, 6), (2.0 * math.sqrt(math.pi), 1)):
            m = make_gamma(a, N)
            want = a * a * N * (N + 1) / 3.0
            assert mixing_variance(m) == pytest.approx(want, rel=4 * ULP)

    def test_Gamma_closed_form(self):
        for N in (1, 2, 3, 5, 8, 13):
            m = make_Gamma(N)
            a2 = 4.0 * math.pi / N
            alpha = default_outer_weight_scale(N)
            s = sum(n * n for n in range(N, 3 * N + 1))
            want = 2.0 * (alpha / (2 * N + 1)) * a2 * s
            assert mixing_variance(m) == pytest.approx(want, rel=8 * ULP)

    def test_Gamma_variance_stays_below_one(self):
        for N in range(1, 101):
            assert mixing_variance(make_Gamma(N)) <= 1.0

    def test_Gamma_variance_reference_values(self):
        assert mixing_variance(make_Gamma(1)) == pytest.approx(
            7.0 / 9.0, rel=4 * ULP
        )
        assert mixing_variance(make_Gamma(2)) == pytest.approx(
            6.0 / 7.0, rel=4 * ULP
        )

    def test_requires_probability_weights(self):
        with pytest.raises(ValueError):
            mixing_variance(make_faN(1.0, 2))


class TestSerialization:
    def test_round_trip_double_fidelity(self):
        m = make_gamma(1.37, 3)
        m2 = mixture_from_json(mixture_to_json(m))
        assert m2.dim == m.dim
        assert m2.weights == m.weights
        assert all(
            float(c2[0]) == float(c1[0])
            for c1, c2 in zip(m.centers, m2.centers)
        )
        for x in (-1.0, 0.0, 0.4):
            assert density(m2, x) == density(m, x)

    def test_round_trip_multidim(self):
        m = make_lattice_d(0.75, 1, 2)
        m2 = mixture_from_json(mixture_to_json(m))
        assert m2.dim == 2
        assert m2.n_components == 9

    def test_rejects_malformed(self):
        with pytest.raises((ValueError, KeyError)):
            mixture_from_json("{}")
