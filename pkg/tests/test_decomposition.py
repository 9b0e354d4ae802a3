"""Orthogonal splittings: slab Helmholtz-type and planar Hessian projections."""

import numpy as np
import numpy.testing as npt
import pytest

from platecell import (
    ConfigError,
    MixedField,
    RVEGrid,
    cof_sym_grad,
    decompose_mixed,
    decompose_second_order,
    div_cof_residual,
    gradient_field,
    hessian_pairing,
    mixed_inner,
    mixed_norm,
    orthogonality_report,
    random_mixed_field,
)

GRID = RVEGrid(6, 6, 4, 1.0, 1.0)


# ---------------------------------------------------------------------------
# Mixed (slab) splitting
# ---------------------------------------------------------------------------

def test_mixed_field_validation():
    with pytest.raises(ConfigError):
        MixedField(np.zeros((6, 6, 4, 3)), GRID)            # needs n3+1
    with pytest.raises(ConfigError):
        MixedField(np.zeros((6, 6, 5, 3)), GRID, layout="cells")
    with pytest.raises(ConfigError):
        MixedField(np.zeros((10, 8, 3)), GRID, layout="gauss")


def test_random_field_deterministic():
    a = random_mixed_field(GRID, 7)
    b = random_mixed_field(GRID, 7)
    npt.assert_array_equal(a.values, b.values)
    c = random_mixed_field(GRID, 8)
    assert not np.array_equal(c.values, a.values)


def test_inner_product_grid_mismatch():
    other = RVEGrid(4, 4, 4, 1.0, 1.0)
    with pytest.raises(ConfigError):
        mixed_inner(random_mixed_field(GRID, 0), random_mixed_field(other, 0))


@pytest.mark.parametrize("seed", range(10))
def test_splitting_orthogonality(seed):
    f = random_mixed_field(GRID, seed)
    rep = orthogonality_report(f, tol=1e-10)
    for key, val in rep.items():
        assert val <= 1e-8, "%s = %g" % (key, val)


def test_constant_field_is_pure_mean():
    vals = np.zeros((GRID.n1, GRID.n2, GRID.n3 + 1, 3))
    vals[:] = [0.3, -1.2, 0.7]
    dec = decompose_mixed(MixedField(vals, GRID))
    npt.assert_allclose(dec.mean, [0.3, -1.2, 0.7], atol=1e-14)
    assert mixed_norm(dec.potential) <= 1e-12
    assert mixed_norm(dec.solenoidal) <= 1e-12


def test_gradient_input_has_no_remainder():
    rng = np.random.default_rng(3)
    psi = rng.standard_normal((GRID.n1, GRID.n2, GRID.n3 + 1))
    f = gradient_field(GRID, psi)
    dec = decompose_mixed(f, tol=1e-12)
    scale = mixed_norm(f)
    # in-plane means vanish by periodicity; the vertical mean is genuine
    # (free ends), and subtracting it keeps the rest a gradient
    assert np.max(np.abs(dec.mean[:2])) <= 1e-12 * scale
    assert mixed_norm(dec.solenoidal) <= 1e-8 * scale


def test_curl_input_has_no_potential():
    # (-d2 w, d1 w, 0) pairs to zero against every discrete gradient
    rng = np.random.default_rng(4)
    w = rng.standard_normal((GRID.n1, GRID.n2, GRID.n3 + 1))
    gw = gradient_field(GRID, w).values
    vals = np.stack([-gw[..., 1], gw[..., 0], np.zeros_like(gw[..., 0])],
                    axis=-1)
    f = MixedField(vals, GRID, layout="gauss")
    dec = decompose_mixed(f, tol=1e-12)
    scale = mixed_norm(f)
    assert np.max(np.abs(dec.mean)) <= 1e-10 * scale
    assert mixed_norm(dec.potential) <= 1e-8 * scale


def test_splitting_idempotent():
    f = random_mixed_field(GRID, 12)
    dec = decompose_mixed(f, tol=1e-11)
    again_p = decompose_mixed(dec.potential, tol=1e-11)
    scale = max(mixed_norm(dec.potential), 1e-30)
    assert np.max(np.abs(again_p.mean)) <= 1e-9 * scale
    assert mixed_norm(again_p.solenoidal) <= 1e-7 * scale
    diff = MixedField(again_p.potential.values - dec.potential.values,
                      GRID, layout="gauss")
    assert mixed_norm(diff) <= 1e-7 * scale

    again_s = decompose_mixed(dec.solenoidal, tol=1e-11)
    s_scale = max(mixed_norm(dec.solenoidal), 1e-30)
    assert np.max(np.abs(again_s.mean)) <= 1e-9 * s_scale
    assert mixed_norm(again_s.potential) <= 1e-7 * s_scale


def test_pythagoras_explicit():
    f = random_mixed_field(GRID, 21)
    dec = decompose_mixed(f, tol=1e-11)
    volume = GRID.box_side ** 2
    total = mixed_inner(f, f)
    parts = (float(dec.mean @ dec.mean) * volume
             + mixed_inner(dec.potential, dec.potential)
             + mixed_inner(dec.solenoidal, dec.solenoidal))
    assert abs(total - parts) <= 1e-8 * total


def test_decompose_mixed_rejects_bad_tol():
    with pytest.raises(ConfigError):
        decompose_mixed(random_mixed_field(GRID, 0), tol=0.0)


# ---------------------------------------------------------------------------
# Second-order (planar Hessian) splitting
# ---------------------------------------------------------------------------

def spectral_hessian(psi, box_side=1.0):
    n = psi.shape[0]
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=box_side / n)
    kx, ky = np.meshgrid(k1, k1, indexing="ij")
    ph = np.fft.fft2(psi)
    H = np.empty((n, n, 2, 2), dtype=complex)
    H[..., 0, 0] = -kx * kx * ph
    H[..., 0, 1] = -kx * ky * ph
    H[..., 1, 0] = H[..., 0, 1]
    H[..., 1, 1] = -ky * ky * ph
    return np.fft.ifft2(H, axes=(0, 1)).real


def band_limited_scalar(n, seed, modes=5):
    rng = np.random.default_rng(seed)
    psi = np.zeros((n, n))
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    for _ in range(modes):
        kx, ky = rng.integers(-4, 5, size=2)
        psi += rng.standard_normal() * np.cos(
            2 * np.pi * (kx * X + ky * Y) + rng.uniform(0, 2 * np.pi))
    return psi


def test_hessian_input_leaves_no_remainder():
    psi = band_limited_scalar(32, 0)
    A = spectral_hessian(psi)
    split = decompose_second_order(A)
    scale = np.max(np.abs(A))
    assert np.max(np.abs(split.remainder)) <= 1e-10 * scale
    assert np.max(np.abs(split.mean)) <= 1e-12 * scale
    npt.assert_allclose(spectral_hessian(split.psi), split.hessian,
                        atol=1e-10 * scale)


def test_constant_input_is_pure_mean():
    A = np.zeros((16, 16, 2, 2))
    A[:] = [[1.0, 0.25], [0.25, -2.0]]
    split = decompose_second_order(A)
    npt.assert_allclose(split.mean, [[1.0, 0.25], [0.25, -2.0]], atol=1e-14)
    assert np.max(np.abs(split.hessian)) <= 1e-13
    assert np.max(np.abs(split.remainder)) <= 1e-13


def test_second_order_split_reconstructs_and_projects():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((24, 24, 2, 2))
    A = 0.5 * (A + np.swapaxes(A, 2, 3))
    split = decompose_second_order(A)
    npt.assert_allclose(split.mean + split.hessian + split.remainder, A,
                        atol=1e-12)
    # remainder is orthogonal to the Hessian component
    ip = float(np.sum(split.hessian * split.remainder))
    hn = float(np.sum(split.hessian ** 2))
    rn = float(np.sum(split.remainder ** 2))
    assert abs(ip) <= 1e-10 * np.sqrt(hn * rn)
    # projecting twice changes nothing
    again = decompose_second_order(split.hessian)
    npt.assert_allclose(again.hessian, split.hessian, atol=1e-12)
    assert np.max(np.abs(again.remainder)) <= 1e-12


def test_cofactor_fields_have_no_hessian_part():
    n = 32
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    b = np.stack([np.sin(2 * np.pi * Y) + 0.3 * np.cos(2 * np.pi * (X + Y)),
                  np.cos(2 * np.pi * X)], axis=-1)
    C = cof_sym_grad(b)
    split = decompose_second_order(C)
    assert np.max(np.abs(split.hessian)) <= 1e-10 * np.max(np.abs(C))
    # and the structural pairing against an unrelated field's Hessian part
    other = decompose_second_order(
        spectral_hessian(band_limited_scalar(n, 9)))
    assert hessian_pairing(other, C) <= 1e-8


def test_second_order_validation():
    with pytest.raises(ConfigError):
        decompose_second_order(np.zeros((8, 6, 2, 2)))
    bad = np.zeros((8, 8, 2, 2))
    bad[..., 0, 1] = 1.0
    with pytest.raises(ConfigError):
        decompose_second_order(bad)
    with pytest.raises(ConfigError):
        decompose_second_order(np.zeros((8, 8, 2, 2)), box_side=0.0)


# ---------------------------------------------------------------------------
# div(cof grad b) = 0
# ---------------------------------------------------------------------------

def test_div_cof_affine_exactly_zero():
    b = np.zeros((16, 16, 2))
    assert div_cof_residual(b, grad=np.array([[1.0, 2.0], [3.0, 4.0]])) == 0.0
    assert div_cof_residual(b, grad=np.array([[1.0, 2.0], [3.0, 4.0]]),
                            method="fd2") == 0.0


def test_div_cof_spectral_rounding_level():
    n = 64
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    b = np.stack([np.sin(2 * np.pi * Y), np.zeros_like(X)], axis=-1)
    assert div_cof_residual(b) <= 1e-10
    rng = np.random.default_rng(6)
    smooth = np.stack([band_limited_scalar(n, 61), band_limited_scalar(n, 62)],
                      axis=-1)
    assert div_cof_residual(smooth, grad=rng.standard_normal((2, 2))) <= 1e-10


def test_div_cof_fd2_second_order():
    # needs genuinely anisotropic modes: for axis-aligned or diagonal modes
    # the centered-difference divergence of a cofactor cancels identically
    res = []
    for n in (32, 64, 128):
        x = np.arange(n) / n
        X, Y = np.meshgrid(x, x, indexing="ij")
        b = np.stack([np.sin(2 * np.pi * (X + 2 * Y)),
                      np.cos(2 * np.pi * (2 * X - Y))], axis=-1)
        res.append(div_cof_residual(b, method="fd2"))
    r1 = res[0] / res[1]
    r2 = res[1] / res[2]
    assert 3.4 <= r1 <= 4.6
    assert 3.4 <= r2 <= 4.6


def test_div_cof_validation():
    b = np.zeros((8, 8, 2))
    with pytest.raises(ConfigError):
        div_cof_residual(b, method="fd4")
    with pytest.raises(ConfigError):
        div_cof_residual(b, grad=np.zeros((3, 3)))
    with pytest.raises(ConfigError):
        div_cof_residual(np.zeros((8, 6, 2)))
