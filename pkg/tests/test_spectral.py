import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pilotwave.spectral import (
    FourierBasis,
    Grid,
    ShapeError,
    cell_source,
    eval_at,
    forward,
    grad_at,
    hermitian_defect,
    inverse,
    laplacian_cd2,
    point_source,
)


@pytest.fixture
def basis():
    return FourierBasis(Grid(8.0, 32))


class TestGrid:
    @pytest.mark.parametrize("N", [4, 12, 100])
    def test_rejects_bad_sizes(self, N):
        with pytest.raises(ValueError):
            Grid(1.0, N)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            Grid(0.0, 16)


class TestTransforms:
    def test_round_trip(self, basis):
        f = np.random.default_rng(1).standard_normal((32, 32))
        assert np.allclose(inverse(forward(f)), f, atol=1e-14)

    def test_zero_mode_is_mean(self, basis):
        f = np.random.default_rng(2).standard_normal((32, 32))
        assert forward(f)[0, 0].real == pytest.approx(f.mean(), abs=1e-15)

    def test_shape_errors(self, basis):
        with pytest.raises(ShapeError):
            forward(np.zeros((4, 8)))
        with pytest.raises(ShapeError):
            forward(np.zeros((16, 16)), basis)

    @settings(max_examples=25, deadline=None)
    @given(arrays(np.float64, (16, 16), elements=st.floats(-1e3, 1e3)))
    def test_real_fields_are_hermitian(self, f):
        assert hermitian_defect(forward(f)) < 1e-12


class TestPointEvaluation:
    def test_eval_at_nodes(self, basis):
        f = np.random.default_rng(3).standard_normal((32, 32))
        c = forward(f)
        for i, j in [(0, 0), (5, 17), (31, 2)]:
            assert eval_at(c, basis, (i * basis.grid.dx, j * basis.grid.dx)) == pytest.approx(f[i, j], abs=1e-12)

    def test_gradient_against_finite_difference(self, basis):
        x = basis.grid.x
        X, Y = np.meshgrid(x, x, indexing="ij")
        c = forward(np.sin(2 * np.pi * X / 8.0 * 3) * np.cos(2 * np.pi * Y / 8.0 * 2) + np.cos(2 * np.pi * X / 8.0))
        p = np.array([1.234, 5.678])
        h = 1e-5
        fd = np.array([
            (eval_at(c, basis, p + [h, 0]) - eval_at(c, basis, p - [h, 0])) / (2 * h),
            (eval_at(c, basis, p + [0, h]) - eval_at(c, basis, p - [0, h])) / (2 * h),
        ])
        assert np.allclose(grad_at(c, basis, p), fd, atol=1e-8)


class TestSources:
    def test_point_source_unit_mass(self, basis):
        s = point_source(basis, (1.3, 2.9))
        assert (s[0, 0] * basis.L**2).real == pytest.approx(1.0)

    def test_point_source_at_origin_is_flat(self, basis):
        s = point_source(basis, (0.0, 0.0))
        vals = s[basis.resolved]
        assert np.allclose(vals, 1.0 / basis.L**2, atol=0)

    def test_point_source_hermitian(self, basis):
        assert hermitian_defect(point_source(basis, (1.3, 2.9))) < 1e-14

    def test_cell_source_is_single_spike(self, basis):
        s = inverse(cell_source(basis, (1.3, 2.9)))
        i, j = np.unravel_index(np.argmax(s), s.shape)
        assert (i, j) == (5, 12)
        assert s[i, j] == pytest.approx(1.0 / basis.grid.dx**2)
        s[i, j] = 0
        assert np.max(np.abs(s)) < 1e-9


class TestLaplacians:
    def test_cd2_symbol_equals_stencil(self, basis):
        f = np.random.default_rng(4).standard_normal((32, 32))
        lhs = forward(laplacian_cd2(f, basis.grid.dx))
        rhs = basis.cd2_symbol * forward(f)
        assert np.max(np.abs(lhs - rhs)) < 1e-11

    def test_dealias_mask(self):
        b = FourierBasis(Grid(8.0, 32), dealias=True)
        assert not b.resolved[11, 0] and b.resolved[10, 0]
        assert not FourierBasis(Grid(8.0, 32)).resolved[16, 0]
