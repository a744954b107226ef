import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrolim.spectral import (
    GridError,
    GridSpec,
    ScalarField,
    build_grid,
    dealias,
    derivative,
    fft3,
    forward_transform,
    inverse_transform,
    parity_symmetrize,
    product,
)

from conftest import dense_product, from_physical


def random_real_field(grid, rng, parity=None, band=None):
    c = fft3(rng.standard_normal(grid.shape))
    if band is not None:
        keep = (np.abs(grid.k1) <= band) & (np.abs(grid.k2) <= band) & (np.abs(grid.k3) <= band)
        c = c * keep
    f = ScalarField(grid, c)
    return parity_symmetrize(f, parity) if parity else f


class TestGrid:
    def test_index_range_and_wavenumbers(self, grid8):
        assert sorted(grid8.k1.ravel()) == list(range(-4, 4))
        np.testing.assert_array_equal(grid8.kz.ravel(), np.pi * grid8.k3.ravel())
        np.testing.assert_array_equal(grid8.kx.ravel(), 2 * np.pi * grid8.k1.ravel())

    def test_dealias_mask_for_six_modes(self):
        g = build_grid(GridSpec(6, 8, 8))
        kept = sorted(set(g.k1[g.dealias_mask.any(axis=(1, 2)), 0, 0]))
        assert kept == [-2, -1, 0, 1, 2]

    @pytest.mark.parametrize("n", [3, 5, 2, 0, 7])
    def test_rejects_bad_counts(self, n):
        with pytest.raises(GridError):
            GridSpec(8, 8, n)

    def test_collocation_is_mirror_symmetric(self, grid8):
        z = grid8.coords()[2][0, 0]
        # z -> -z taken modulo the period 2 (z = -1 is its own mirror image)
        np.testing.assert_allclose(z[grid8.z_mirror], (1.0 - z) % 2.0 - 1.0, atol=1e-15)
        assert z.min() == -1.0 and z.max() < 1.0


class TestTransforms:
    def test_constant_maps_to_mean(self, grid8):
        f = forward_transform(grid8, np.ones(grid8.shape))
        expected = np.zeros(grid8.shape)
        expected[0, 0, 0] = 1.0
        np.testing.assert_allclose(f.coeffs, expected, atol=1e-15)

    @pytest.mark.parametrize("shape", [(4, 4, 4), (8, 6, 10), (16, 16, 16), (12, 8, 32)])
    def test_round_trip(self, shape, rng):
        g = build_grid(GridSpec(*shape))
        s = rng.standard_normal(shape)
        back = inverse_transform(forward_transform(g, s))
        assert np.max(np.abs(back - s)) / np.max(np.abs(s)) < 1e-12

    def test_cosine_coefficients(self, grid8):
        c = from_physical(grid8, lambda x, y, z: np.cos(2 * np.pi * x))
        expected = np.zeros(grid8.shape, dtype=complex)
        expected[1, 0, 0] = expected[-1, 0, 0] = 0.5
        np.testing.assert_allclose(c, expected, atol=1e-15)

    def test_zero_mode_is_mean(self, grid8, rng):
        s = rng.standard_normal(grid8.shape)
        assert forward_transform(grid8, s).coeffs[0, 0, 0] == pytest.approx(s.mean(), abs=1e-15)

    def test_shape_mismatch(self, grid8):
        with pytest.raises(GridError):
            forward_transform(grid8, np.zeros((8, 8, 4)))


class TestDerivative:
    def test_constant(self, grid8):
        f = forward_transform(grid8, 3.0 * np.ones(grid8.shape), "even")
        for ax in range(3):
            assert np.max(np.abs(derivative(f, ax).coeffs)) == 0.0

    def test_sine(self, grid8):
        x = grid8.coords()[0]
        f = forward_transform(grid8, np.sin(2 * np.pi * x))
        np.testing.assert_allclose(derivative(f, "x").samples(), 2 * np.pi * np.cos(2 * np.pi * x), atol=1e-13)

    def test_z_derivative_flips_parity(self, grid8, rng):
        f = random_real_field(grid8, rng, "even")
        d = derivative(f, "z")
        assert d.parity == "odd"
        assert d.parity_defect() < 1e-15
        assert derivative(d, 2).parity == "even"
        assert derivative(f, "x").parity == "even"

    def test_commutes_with_dealias(self, grid16, rng):
        f = random_real_field(grid16, rng, band=6)
        for ax in range(3):
            a = derivative(dealias(f), ax).coeffs
            b = dealias(derivative(f, ax)).coeffs
            np.testing.assert_allclose(a, b, atol=1e-14)


class TestDealias:
    def test_band_limited_unchanged(self, grid8, rng):
        f = random_real_field(grid8, rng, band=2)
        np.testing.assert_array_equal(dealias(f).coeffs, f.coeffs)

    def test_idempotent(self, grid8, rng):
        f = random_real_field(grid8, rng)
        once = dealias(f)
        np.testing.assert_array_equal(dealias(once).coeffs, once.coeffs)

    def test_product_matches_dense_convolution(self, grid8, rng):
        a = random_real_field(grid8, rng, band=2)
        b = random_real_field(grid8, rng, band=2)
        got = product(a, b).coeffs
        ref = dense_product(grid8, a.coeffs, b.coeffs)
        assert np.max(np.abs(got - ref)) < 1e-14

    def test_product_matches_refined_grid(self, grid8, rng):
        # the same band-limited fields multiplied on a 2x grid, then truncated
        a = random_real_field(grid8, rng, band=2)
        b = random_real_field(grid8, rng, band=2)
        fine = build_grid(GridSpec(16, 16, 16))

        def embed(c):
            out = fine.zeros()
            idx = np.ix_(*[np.arange(-2, 3) % n for n in fine.shape])
            out[idx] = c[np.ix_(*[np.arange(-2, 3) % n for n in grid8.shape])]
            return out

        prod = fft3(np.fft.ifftn(embed(a.coeffs)).real * np.fft.ifftn(embed(b.coeffs)).real * fine.size**2)
        coarse = product(a, b).coeffs
        sel = np.arange(-2, 3)
        np.testing.assert_allclose(
            coarse[np.ix_(*[sel % 8] * 3)], prod[np.ix_(*[sel % 16] * 3)], atol=1e-14
        )

    def test_product_parity(self, grid8, rng):
        e = random_real_field(grid8, rng, "even", band=2)
        o = random_real_field(grid8, rng, "odd", band=2)
        assert product(e, o).parity == "odd"
        assert product(o, o).parity == "even"
        assert product(e, o).parity_defect() < 1e-15


class TestParity:
    def test_even_input_even_target_unchanged(self, grid8, rng):
        f = random_real_field(grid8, rng, "even")
        np.testing.assert_allclose(parity_symmetrize(f, "even").coeffs, f.coeffs, atol=1e-16)

    def test_even_input_odd_target_is_zero(self, grid8, rng):
        f = random_real_field(grid8, rng, "even")
        assert np.max(np.abs(parity_symmetrize(f, "odd").coeffs)) < 1e-16

    def test_matches_pointwise_mirror_average(self, grid8, rng):
        s = rng.standard_normal(grid8.shape)
        f = forward_transform(grid8, s)
        mirrored = s[..., grid8.z_mirror]
        np.testing.assert_allclose(parity_symmetrize(f, "even").samples(), 0.5 * (s + mirrored), atol=1e-14)
        np.testing.assert_allclose(parity_symmetrize(f, "odd").samples(), 0.5 * (s - mirrored), atol=1e-14)

    def test_split_is_identity(self, grid8, rng):
        f = random_real_field(grid8, rng)
        total = parity_symmetrize(f, "even").coeffs + parity_symmetrize(f, "odd").coeffs
        np.testing.assert_allclose(total, f.coeffs, atol=1e-16)

    def test_odd_field_vanishes_at_mirror_planes(self, grid8, rng):
        f = random_real_field(grid8, rng, "odd")
        s = f.samples()
        z = grid8.coords()[2][0, 0]
        for z0 in (-1.0, 0.0):
            assert np.max(np.abs(s[..., np.argmin(np.abs(z - z0))])) < 1e-14

    def test_bad_target(self, grid8, rng):
        with pytest.raises(ValueError):
            parity_symmetrize(random_real_field(grid8, rng), "neither")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), axis=st.sampled_from([0, 1, 2]), parity=st.sampled_from(["even", "odd"]))
def test_operations_preserve_hermitian_symmetry(seed, axis, parity):
    g = build_grid(GridSpec(8, 8, 8))
    rng = np.random.default_rng(seed)
    f = random_real_field(g, rng, parity)
    h = random_real_field(g, rng)
    for out in (derivative(f, axis), dealias(f), product(f, h), parity_symmetrize(h, parity)):
        assert out.hermitian_defect() < 1e-14
