import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrolim.fields import (
    BarotropicDivergence,
    HorizontalField,
    VelocityField,
    divergence,
    horizontal_divergence,
    hydrostatic_w,
    make_initial_data,
    project_barotropic,
    read_snapshot,
    read_velocity,
    vertical_mean,
    write_snapshot,
)
from hydrolim.spectral import GridSpec, ScalarField, build_grid, fft3, parity_symmetrize

from conftest import from_physical


def even(grid, fn):
    return ScalarField(grid, from_physical(grid, fn), "even")


def random_even_pair(grid, rng):
    return tuple(
        parity_symmetrize(ScalarField(grid, fft3(rng.standard_normal(grid.shape))), "even") for _ in range(2)
    )


class TestDivergence:
    def test_constant(self, grid8):
        one = even(grid8, lambda x, y, z: 1.0 + 0 * x)
        u = VelocityField(one, one, ScalarField.zeros(grid8, "odd"))
        assert np.max(np.abs(divergence(u).coeffs)) == 0.0

    def test_single_mode(self, grid8):
        x = grid8.coords()[0]
        u = VelocityField(even(grid8, lambda x, y, z: np.sin(2 * np.pi * x)),
                          ScalarField.zeros(grid8, "even"), ScalarField.zeros(grid8, "odd"))
        d = divergence(u)
        assert d.parity == "even"
        np.testing.assert_allclose(d.samples(), 2 * np.pi * np.cos(2 * np.pi * x), atol=1e-13)

    def test_horizontal_single_mode(self, grid8):
        y = grid8.coords()[1]
        v = (ScalarField.zeros(grid8, "even"), even(grid8, lambda x, y, z: np.cos(2 * np.pi * y)))
        d = horizontal_divergence(v)
        assert d.parity == "even"
        np.testing.assert_allclose(d.samples(), -2 * np.pi * np.sin(2 * np.pi * y), atol=1e-13)


class TestVerticalMean:
    def test_z_independent_is_fixed(self, grid8):
        f = even(grid8, lambda x, y, z: np.sin(2 * np.pi * x) + np.cos(2 * np.pi * y) + 0 * z)
        np.testing.assert_allclose(vertical_mean(f)[0].coeffs, f.coeffs, atol=1e-16)

    def test_cosine_profile_has_zero_mean(self, grid8):
        f = even(grid8, lambda x, y, z: np.cos(np.pi * z) + 0 * x)
        assert np.max(np.abs(vertical_mean(f)[0].coeffs)) < 1e-16

    def test_matches_quadrature(self, grid8):
        # sin(2 pi x) cos(pi z): half the z-integral vanishes pointwise in x
        f = even(grid8, lambda x, y, z: np.sin(2 * np.pi * x) * np.cos(np.pi * z))
        assert np.max(np.abs(vertical_mean(f)[0].samples())) < 1e-15
        g = even(grid8, lambda x, y, z: (2 + np.cos(np.pi * z)) * np.sin(2 * np.pi * x))
        x = grid8.coords()[0]
        np.testing.assert_allclose(vertical_mean(g)[0].samples(), 2 * np.sin(2 * np.pi * x), atol=1e-14)

    def test_horizontal_field_rejects_z_dependence(self, grid8):
        with pytest.raises(ValueError):
            HorizontalField((even(grid8, lambda x, y, z: np.cos(np.pi * z) + 0 * x),))


class TestProjectBarotropic:
    def test_solenoidal_mean_unchanged(self, grid8):
        v = (even(grid8, lambda x, y, z: np.sin(2 * np.pi * y) + 0 * x),
             even(grid8, lambda x, y, z: np.sin(2 * np.pi * x) * np.cos(np.pi * z)))
        p = project_barotropic(v)
        for a, b in zip(p, v):
            np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-16)

    def test_gradient_mean_annihilated(self, grid8):
        # v = grad_H phi with phi = cos(2 pi x) sin(2 pi y)
        v = (even(grid8, lambda x, y, z: -2 * np.pi * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)),
             even(grid8, lambda x, y, z: 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y)))
        p = project_barotropic(v)
        assert max(np.max(np.abs(c.coeffs)) for c in p) < 1e-14

    def test_random_mean_becomes_solenoidal(self, grid8, rng):
        p = project_barotropic(random_even_pair(grid8, rng))
        mean = vertical_mean(p)
        assert np.max(np.abs(horizontal_divergence((mean[0], mean[1])).coeffs)) < 1e-12


class TestHydrostaticW:
    def test_divergence_free_gives_zero(self, grid8):
        v = (even(grid8, lambda x, y, z: np.sin(2 * np.pi * y) * np.cos(np.pi * z)),
             even(grid8, lambda x, y, z: np.cos(2 * np.pi * x) * np.cos(2 * np.pi * z)))
        w = hydrostatic_w(v)
        assert w.parity == "odd"
        assert np.max(np.abs(w.coeffs)) < 1e-15

    def test_closed_form_antiderivative(self, grid8):
        x, _, z = grid8.coords()
        v = (even(grid8, lambda x, y, z: np.sin(2 * np.pi * x) * np.cos(np.pi * z)), ScalarField.zeros(grid8, "even"))
        np.testing.assert_allclose(hydrostatic_w(v).samples(), -2 * np.cos(2 * np.pi * x) * np.sin(np.pi * z), atol=1e-14)

    def test_barotropic_divergence_rejected(self, grid8):
        v = (even(grid8, lambda x, y, z: np.sin(2 * np.pi * x) + 0 * z), ScalarField.zeros(grid8, "even"))
        with pytest.raises(BarotropicDivergence):
            hydrostatic_w(v)

    def test_k3_zero_plane_is_exactly_zero(self, grid8, rng):
        w = hydrostatic_w(project_barotropic(random_even_pair(grid8, rng)))
        assert np.all(w.coeffs[..., 0] == 0)

    def test_full_divergence_vanishes(self, grid16, rng):
        v = project_barotropic(random_even_pair(grid16, rng))
        u = VelocityField(v[0], v[1], hydrostatic_w(v))
        scale = max(np.max(np.abs(c.coeffs)) for c in v)
        assert np.max(np.abs(divergence(u).coeffs)) < 1e-12 * scale

    def test_linearity(self, grid8, rng):
        a = project_barotropic(random_even_pair(grid8, rng))
        b = project_barotropic(random_even_pair(grid8, rng))
        combo = (2.0 * a[0] - 0.5 * b[0], 2.0 * a[1] - 0.5 * b[1])
        lhs = hydrostatic_w(combo).coeffs
        rhs = 2.0 * hydrostatic_w(a).coeffs - 0.5 * hydrostatic_w(b).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestInitialData:
    def test_deterministic(self, grid16):
        a = make_initial_data(grid16, 3, 4, 4.0, 1.0).stack()
        b = make_initial_data(grid16, 3, 4, 4.0, 1.0).stack()
        np.testing.assert_array_equal(a, b)

    def test_admissible(self, grid16):
        u = make_initial_data(grid16, 5, 5, 4.0, 10.0)
        assert np.max(np.abs(divergence(u).coeffs)) < 1e-12 * np.max(np.abs(u.stack()))
        assert (u.v1.parity, u.v2.parity, u.w.parity) == ("even", "even", "odd")
        assert u.parity_defect() == 0.0
        assert u.v1.coeffs[0, 0, 0] == 0 and u.v2.coeffs[0, 0, 0] == 0
        assert max(c.hermitian_defect() for c in u.components()) < 1e-14

    def test_same_field_on_finer_grid(self):
        g1, g2 = build_grid(GridSpec(16, 16, 16)), build_grid(GridSpec(24, 24, 24))
        u1 = make_initial_data(g1, 9, 4, 4.0, 1.0)
        u2 = make_initial_data(g2, 9, 4, 4.0, 1.0)
        sel = np.arange(-4, 5)
        np.testing.assert_allclose(
            u1.stack()[(slice(None),) + np.ix_(*[sel % 16] * 3)],
            u2.stack()[(slice(None),) + np.ix_(*[sel % 24] * 3)],
            atol=1e-15,
        )

    def test_band_limit_outside_mask(self, grid16):
        with pytest.raises(ValueError):
            make_initial_data(grid16, 0, 6, 4.0, 1.0)
        with pytest.raises(ValueError):
            make_initial_data(grid16, 0, 0, 4.0, 1.0)

    def test_decay_exponent(self):
        # shell-averaged |c| against |kappa| on a log-log scale, fitted independently
        g = build_grid(GridSpec(24, 24, 24))
        u = make_initial_data(g, 11, 8, 4.0, 1.0)
        mag = np.sqrt(np.abs(u.v1.coeffs) ** 2 + np.abs(u.v2.coeffs) ** 2)
        kap = np.sqrt(g.ksq)
        edges = np.geomspace(2 * np.pi, kap[mag > 0].max() * 1.0001, 9)
        xs, ys = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (kap >= lo) & (kap < hi) & (mag > 0)
            if sel.sum() >= 4:
                xs.append(np.log(np.sqrt(1 + kap[sel] ** 2).mean()))
                ys.append(np.log(np.sqrt(np.mean(mag[sel] ** 2))))
        slope = np.polyfit(xs, ys, 1)[0]
        assert abs(-slope - 4.0) <= 0.5


class TestSnapshots:
    def test_round_trip(self, tmp_path, grid8):
        u = make_initial_data(grid8, 1, 2, 4.0, 1.0)
        write_snapshot(tmp_path / "u.bin", u)
        back = read_velocity(tmp_path / "u.bin")
        np.testing.assert_array_equal(back.stack(), u.stack())

    def test_header_layout(self, tmp_path, grid8):
        u = make_initial_data(grid8, 1, 2, 4.0, 1.0)
        path = tmp_path / "u.bin"
        write_snapshot(path, u)
        data = path.read_bytes()
        assert data[:9] == b"HYDROLIM1"
        assert np.frombuffer(data[9:25], dtype="<u4").tolist() == [8, 8, 8, 3]
        body = np.frombuffer(data[25:], dtype="<f8").reshape(3, 8, 8, 8, 2)
        np.testing.assert_array_equal(body[..., 0], u.stack().real)
        np.testing.assert_array_equal(body[..., 1], u.stack().imag)

    def test_bad_magic_and_size(self, tmp_path, grid8):
        (tmp_path / "bad.bin").write_bytes(b"NOTMAGIC!" + bytes(16))
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / "bad.bin")
        u = make_initial_data(grid8, 1, 2, 4.0, 1.0)
        write_snapshot(tmp_path / "u.bin", u)
        (tmp_path / "short.bin").write_bytes((tmp_path / "u.bin").read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / "short.bin")
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / "u.bin", build_grid(GridSpec(8, 8, 16)))

    def test_scalar_snapshot(self, tmp_path, grid8):
        u = make_initial_data(grid8, 1, 2, 4.0, 1.0)
        write_snapshot(tmp_path / "s.bin", [u.w])
        _, arr = read_snapshot(tmp_path / "s.bin")
        assert arr.shape == (1, 8, 8, 8)
        with pytest.raises(ValueError):
            read_velocity(tmp_path / "s.bin")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_projected_fields_reconstruct_divergence_free(seed):
    g = build_grid(GridSpec(8, 8, 8))
    v = project_barotropic(random_even_pair(g, np.random.default_rng(seed)))
    u = VelocityField(v[0], v[1], hydrostatic_w(v))
    scale = max(np.max(np.abs(c.coeffs)) for c in v)
    assert np.max(np.abs(divergence(u).coeffs)) < 1e-12 * scale
    assert u.w.parity_defect() == 0.0
