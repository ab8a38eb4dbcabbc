import math

import numpy as np
import pytest

import oracles
from mercer_kit import basis as B
from mercer_kit.errors import InvalidArgument, ResolutionError

# psi^(i)(s) / 1j at a few points, from scipy quad of the sine transform (tests/oracles.py)
MOTHER_REFERENCE = {
    0.0: [0.6541690908570241, -3.9356727425089493, -10.872071535290333, 124.61459102932588],
    0.25: [-0.3490721334439176, -2.950190594096501, 15.626820543511188, 53.37659013735571],
    1.0: [0.08130653893574083, -0.010953958205404823, -4.862999570593393, 33.299642075506405],
    3.0: [-0.02620539214452603, 0.09559969125882078, 0.16100386814469414, 1.0689762806021301],
}


class TestBell:
    def test_standard_plateau_values(self):
        b = B.build_meyer_bell()
        assert b(0.0) == 0.0
        # nu(1/2) = 1/2 exactly, so the ramp midpoint sits at sin(pi/4)
        assert b(math.pi) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert b(4 * math.pi / 3) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("xi", [0.0, 3.0, -1.5, 0.999])
    def test_outside_support(self, xi):
        assert B.build_meyer_bell((1.0, 2.0))(xi) == 0.0

    def test_knee_and_partition(self):
        b = B.build_meyer_bell()
        assert b.knee == pytest.approx(4 * math.pi / 3)
        # Meyer partition: b(xi)^2 + b(2 xi)^2 = 1 across the rising ramp
        xi = np.linspace(2 * math.pi / 3, 4 * math.pi / 3, 101)
        assert np.abs(b(xi) ** 2 + b(2 * xi) ** 2 - 1).max() < 1e-14

    def test_matches_oracle_profile(self):
        b = B.build_meyer_bell()
        xi = np.linspace(0, 10, 257)
        ref = [oracles.bell(x) for x in xi]
        assert np.abs(b(xi) - ref).max() < 1e-14

    @pytest.mark.parametrize("edges", [(0.0, 1.0), (2.0, 1.0), (-1.0, 2.0), (1.0, math.inf)])
    def test_rejects_bad_edges(self, edges):
        with pytest.raises(InvalidArgument):
            B.build_meyer_bell(edges)


class TestMotherWavelet:
    def test_zero_bell(self):
        zero = B.BellFunction((2 * math.pi / 3, 8 * math.pi / 3), amplitude=0.0)
        psi = B.synthesize_mother_wavelet(zero)
        assert np.all(psi.evaluate(np.linspace(-5, 5, 11), 0) == 0)

    def test_unit_norm_by_plancherel(self, mother):
        spec = mother.spectrum
        # ||psi||^2 = (1/2pi) * 2 * int b^2 dxi, Riemann sum vs quad oracle
        riemann = np.sum(spec.weights**2) / spec.dxi / np.pi
        assert riemann == pytest.approx(1.0, abs=1e-6)
        assert oracles.bell_energy() / math.pi == pytest.approx(1.0, abs=1e-12)

    def test_integer_shift_orthogonal(self, mother):
        grid = B.gauss_legendre_grid(40.0, 12)
        u0 = mother.evaluate(grid.nodes)
        u1 = mother.evaluate(grid.nodes - 1.0)
        assert abs(grid.integrate(u0 * u0.conj())) == pytest.approx(1.0, abs=1e-6)
        assert abs(grid.integrate(u0 * u1.conj())) < 1e-6

    @pytest.mark.parametrize("s", sorted(MOTHER_REFERENCE))
    def test_values_against_quadrature_oracle(self, mother, s):
        got = mother.evaluate_upto(np.array([s]), 3)[:, 0]
        ref = np.array(MOTHER_REFERENCE[s])
        assert np.all(got.real == 0)
        assert np.abs(got.imag - ref).max() < 1e-9 * (1 + np.abs(ref).max())

    def test_fft_route_agrees_with_trig_sum(self, mother):
        spec = mother.spectrum
        for i in range(4):
            s, vals = spec.fft_samples(i)
            keep = np.abs(s + 0.5) < 20
            direct = mother.evaluate(s[keep], i)
            assert np.abs(direct - vals[keep]).max() < 1e-10 * (1 + np.abs(vals).max())

    def test_zero_outside_central_period(self, mother):
        p = mother.spectrum.period
        far = np.array([0.6 * p, -0.7 * p])
        assert np.all(mother.evaluate(far) == 0)

    def test_fft_size_validation(self):
        bell = B.build_meyer_bell()
        with pytest.raises(InvalidArgument):
            B.synthesize_mother_wavelet(bell, 3000)
        with pytest.raises(ResolutionError):
            B.synthesize_mother_wavelet(bell, 512)

    def test_coarse_ramp_is_resolution_error(self):
        # a band that is narrow relative to its upper edge leaves few ramp samples
        with pytest.raises(ResolutionError):
            B.synthesize_mother_wavelet(B.build_meyer_bell((10.0, 12.0)), 1024)


class TestEnumeration:
    def test_index_order_head(self):
        gen = B.wavelet_indices()
        head = [next(gen) for _ in range(9)]
        assert head == [(0, 0), (0, -1), (0, 1), (-1, 0), (-1, -1), (-1, 1),
                        (1, 0), (1, -1), (1, 1)]

    def test_shells_are_contiguous(self):
        gen = B.wavelet_indices()
        radii = [max(abs(a), abs(b)) for a, b in (next(gen) for _ in range(49))]
        assert radii == sorted(radii)
        assert radii.count(3) == 24

    def test_count_one(self, mother):
        basis = B.enumerate_wavelet_basis(mother, 1)
        assert basis.functions[0].index == (0, 0)
        s = np.linspace(-3, 3, 13)
        assert np.array_equal(basis.evaluate(s), mother.evaluate(s)[None, :])

    def test_norm_factors(self, wavelet16):
        for f in wavelet16.functions:
            a = f.index[0]
            expected = 2.0 ** (a / 2) if a <= 0 else 2.0 ** (a * a)
            assert f.norm_factor == expected

    def test_dilation_identity(self, wavelet16, mother):
        s = np.linspace(-6, 6, 97)
        vals = wavelet16.evaluate(s)
        for n, f in enumerate(wavelet16.functions):
            a, b = f.index
            ref = 2.0 ** (a / 2) * mother.evaluate(2.0**a * s - b)
            assert np.abs(vals[n] - ref).max() <= 1e-12

    def test_gram_count16(self, wavelet16):
        g = B.gram_matrix(wavelet16)
        assert np.abs(g - np.eye(16)).max() <= 1e-6

    def test_sup_norm_bounds(self, wavelet16):
        tab = np.abs(wavelet16.evaluate_upto(wavelet16.grid.nodes, 3)).max(axis=2)
        bounds = np.array([f.derivative_bounds for f in wavelet16.functions]).T
        assert np.all(tab <= 1.05 * bounds)

    def test_rejects_bad_count(self, mother):
        with pytest.raises(InvalidArgument):
            B.enumerate_wavelet_basis(mother, 0)


class TestHermite:
    def test_h0_at_origin(self, hermite10):
        assert hermite10.evaluate(np.array([0.0]))[0, 0] == pytest.approx(math.pi**-0.25,
                                                                          abs=1e-15)

    def test_normalization_and_parity(self, hermite10):
        g = B.gram_matrix(hermite10)
        assert np.abs(np.diag(g) - 1).max() <= 1e-10
        assert abs(g[0, 1]) <= 1e-12

    def test_gram_count8(self):
        g = B.gram_matrix(B.build_hermite_basis(8))
        assert np.abs(g - np.eye(8)).max() <= 1e-10

    @pytest.mark.parametrize("i", range(4))
    def test_derivatives_against_polynomial_oracle(self, hermite10, i):
        x = np.linspace(-5, 5, 41)
        ref = np.array([oracles.hermite_function(n, x, i) for n in range(10)])
        assert np.abs(hermite10.evaluate(x, i) - ref).max() < 1e-12

    def test_sup_norm_bounds(self, hermite16):
        tab = np.abs(hermite16.evaluate_upto(hermite16.grid.nodes, 3)).max(axis=2)
        bounds = np.array([f.derivative_bounds for f in hermite16.functions]).T
        assert np.all(tab <= 1.05 * bounds)

    def test_single_function_gram(self):
        g = B.gram_matrix(B.build_hermite_basis(1))
        assert g.shape == (1, 1) and abs(g[0, 0] - 1) <= 1e-12

    def test_narrow_grid_rejected(self):
        with pytest.raises(ResolutionError):
            B.build_hermite_basis(16, grid=B.gauss_legendre_grid(2.0))


@pytest.mark.parametrize("name", ["hermite10", "wavelet16"])
def test_finite_difference_consistency(request, name):
    basis = request.getfixturevalue(name)
    h = 1e-4
    s = np.linspace(-0.8 * basis.grid.L, 0.8 * basis.grid.L, 31)
    for i in range(basis.i_max):
        fd = (basis.evaluate(s + h, i) - basis.evaluate(s - h, i)) / (2 * h)
        exact = basis.evaluate(s, i + 1)
        sup = np.abs(basis.evaluate_upto(basis.grid.nodes, i + 1)[i + 1]).max(axis=1)
        tol = np.maximum(1e-5, 1e-3 * sup)[:, None]
        assert np.all(np.abs(fd - exact) <= tol)


def test_grid_integrates_polynomials():
    grid = B.gauss_legendre_grid(3.0, 8)
    assert grid.weight_sum_error() < 1e-13
    assert grid.integrate(grid.nodes**6) == pytest.approx(2 * 3.0**7 / 7, rel=1e-13)


def test_grid_validation():
    with pytest.raises(InvalidArgument):
        B.gauss_legendre_grid(0.0)
    with pytest.raises(InvalidArgument):
        B.QuadratureGrid(np.array([1.0, 0.0]), np.array([1.0, 1.0]), 1.0)


def test_project_synthesize_roundtrip(hermite10, rng):
    c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    values = hermite10.synthesize(c, hermite10.grid.nodes)
    assert np.abs(hermite10.project(values) - c).max() < 1e-12
