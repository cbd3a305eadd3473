import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecontrol import geometry, spectral


def test_analytic_backend_eigenvalues(interval_domain):
    basis = spectral.eigensolve(interval_domain, 8, backend="analytic")
    k = np.arange(1, 9)
    np.testing.assert_allclose(basis.lambdas, (k * np.pi) ** 2, rtol=1e-12)
    assert basis.backend == "analytic"


def test_auto_backend_picks_analytic_for_constant(interval_domain):
    basis = spectral.eigensolve(interval_domain, 4)
    assert basis.backend == "analytic"


def test_auto_backend_picks_fd_for_variable():
    dom = geometry.interval(n=65, a=lambda x: 1.0 + 0.5 * x)
    basis = spectral.eigensolve(dom, 4)
    assert basis.backend == "fd"


def test_fd_matches_analytic_1d(interval_domain, interval_basis):
    exact = spectral.eigensolve(interval_domain, 64, backend="analytic")
    rel = np.abs(interval_basis.lambdas - exact.lambdas) / exact.lambdas
    # second-order stencil: relative error ~ (k pi h)^2 / 12
    assert rel[0] <= 1e-5
    assert rel[-1] <= 2e-2
    # eigenvectors agree up to sign
    overlaps = [
        abs(interval_basis.h_inner(interval_basis.modes[k], exact.modes[k]))
        for k in (0, 1, 7, 31)
    ]
    assert min(overlaps) >= 0.999


def test_gram_identity(interval_basis, square_basis):
    for basis in (interval_basis, square_basis):
        gram = basis.gram()
        off = np.abs(gram - np.eye(basis.n_modes)).max()
        assert off <= 1e-10


def test_mode_ordering_2d(square_basis):
    lam = square_basis.lambdas
    assert np.all(np.diff(lam) >= -1e-9 * lam[-1])
    # unit square spectrum: pi^2 (m^2 + n^2)
    assert lam[0] == pytest.approx(2 * np.pi**2, rel=1e-3)
    assert lam[1] == pytest.approx(5 * np.pi**2, rel=1e-3)
    assert lam[2] == pytest.approx(5 * np.pi**2, rel=1e-3)


def test_separable_2d_matches_dense():
    # 4 modes avoids splitting a degenerate pair across the truncation
    dom = geometry.rectangle(shape=(17, 17))
    fast = spectral.eigensolve(dom, 4, backend="fd")
    lam_dense, modes_dense = spectral._fd_modes_2d_general(dom, 4)
    np.testing.assert_allclose(fast.lambdas, lam_dense, rtol=1e-10)
    # degenerate eigenspaces may differ by a rotation; the cross-Gram of the
    # two bases must still be orthogonal
    flat_f = fast.modes.reshape(4, -1) * fast.mass_weights.ravel()
    flat_d = modes_dense.reshape(4, -1)
    cross = flat_f @ flat_d.T
    np.testing.assert_allclose(cross @ cross.T, np.eye(4), atol=1e-8)


def test_variable_coefficient_2d_dense_path():
    a = geometry.radial_bump_coefficient(1.0, 0.5, (0.5, 0.5), 0.25)
    dom = geometry.rectangle(shape=(21, 21), a11=a, a22=a)
    basis = spectral.eigensolve(dom, 5, backend="fd")
    assert basis.backend == "fd"
    assert np.all(basis.lambdas > 0)
    # faster medium raises the spectrum above the unit-coefficient one
    assert basis.lambdas[0] > 2 * np.pi**2


def test_dense_2d_size_guard():
    a = geometry.radial_bump_coefficient(1.0, 0.5, (0.5, 0.5), 0.25)
    dom = geometry.rectangle(shape=(129, 129), a11=a, a22=a)
    with pytest.raises(ValueError, match="unknowns"):
        spectral.eigensolve(dom, 4, backend="fd")


def test_mixed_derivative_not_implemented():
    dom = geometry.rectangle(shape=(17, 17), a11=1.0, a12=0.1, a22=1.0)
    with pytest.raises(NotImplementedError):
        spectral.eigensolve(dom, 4)


def test_n_modes_guard(small_domain):
    with pytest.raises(ValueError, match="modes"):
        spectral.eigensolve(small_domain, 64)  # only 63 interior nodes


def test_modes_vanish_on_boundary(interval_basis, square_basis):
    for basis in (interval_basis, square_basis):
        b = basis.domain.boundary_mask
        assert np.abs(basis.modes[:, b]).max() == 0.0


def test_conormal_traces_1d_analytic(interval_domain):
    basis = spectral.eigensolve(interval_domain, 8, backend="fd")
    k = np.arange(1, 9)
    left = -np.sqrt(2.0) * k * np.pi
    right = np.sqrt(2.0) * k * np.pi * np.cos(k * np.pi)
    np.testing.assert_allclose(basis.conormal_traces[:, 0], left, rtol=2e-3)
    np.testing.assert_allclose(basis.conormal_traces[:, 1], right, rtol=2e-3)


def test_conormal_traces_2d_corners_zero(square_basis):
    nodes = square_basis.domain.boundary_nodes()
    nx, ny = square_basis.domain.shape
    corner_rows = [
        m
        for m, (i, j) in enumerate(nodes)
        if (i in (0, nx - 1)) and (j in (0, ny - 1))
    ]
    assert len(corner_rows) == 4
    assert np.abs(square_basis.conormal_traces[:, corner_rows]).max() == 0.0


def test_project_reconstruct_roundtrip(interval_basis, rng):
    alphas = rng.standard_normal(interval_basis.n_modes)
    field = spectral.reconstruct(alphas, interval_basis)
    back = spectral.project(field, interval_basis)
    np.testing.assert_allclose(back.alphas, alphas, atol=1e-12)


def test_project_shape_guard(interval_basis):
    with pytest.raises(ValueError, match="grid mismatch"):
        spectral.project(np.zeros(7), interval_basis)


def test_ds_inner_validation(interval_basis):
    a = np.ones(interval_basis.n_modes)
    with pytest.raises(ValueError, match="nonnegative"):
        spectral.ds_inner(a, a, -1.0, interval_basis)
    with pytest.raises(ValueError, match="length"):
        spectral.ds_inner(a, np.ones(3), 1.0, interval_basis)


def test_ds_norm_weights(interval_basis):
    e0 = np.zeros(interval_basis.n_modes)
    e0[0] = 1.0
    lam0 = interval_basis.lambdas[0]
    assert spectral.ds_norm(e0, 2.0, interval_basis) == pytest.approx(lam0)
    assert spectral.ds_norm(e0, 0.0, interval_basis) == pytest.approx(1.0)


def test_rescaled_mode_unit_ds_norm(interval_basis):
    for s in (1.0, 2.0):
        for k in (0, 13):
            m = spectral.rescaled_mode(interval_basis, k, s)
            coeffs = spectral.project(m, interval_basis).alphas
            assert spectral.ds_norm(coeffs, s, interval_basis) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_ds_inner_cauchy_schwarz(seed, small_basis):
    r = np.random.default_rng(seed)
    a = r.standard_normal(small_basis.n_modes)
    b = r.standard_normal(small_basis.n_modes)
    s = float(r.uniform(0, 3))
    lhs = abs(spectral.ds_inner(a, b, s, small_basis))
    rhs = spectral.ds_norm(a, s, small_basis) * spectral.ds_norm(b, s, small_basis)
    assert lhs <= rhs * (1 + 1e-12)


def test_spectrum_csv(tmp_path, interval_basis):
    path = tmp_path / "spectrum.csv"
    spectral.write_spectrum_csv(path, interval_basis)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,lambda"
    assert len(lines) == 1 + 64
    k, lam = lines[1].split(",")
    assert k == "1"
    assert float(lam) == pytest.approx(np.pi**2, rel=1e-3)
