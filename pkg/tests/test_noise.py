import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from galerkin_nls import Field, NoiseModel, WienerDriver, apply_Bm, build_basis, mu, mu_n, noise_drift_cancellation
from galerkin_nls.noise import apply_SBS, keyed_normals
from galerkin_nls.spectral import inner, norm

from conftest import KINDS, random_coeffs


def torus_plane_wave(b, k):
    j = 2 * k - 1 if k > 0 else -2 * k
    return j


def test_zero_amplitude_gives_zero():
    b = build_basis("torus1d", 16)
    f = Field(b, np.arange(16) + 1j)
    z = NoiseModel(b, M=3, gamma=0.0)
    assert z.is_zero
    assert np.all(apply_Bm(f, 2, z).coeffs == 0)


def test_cos_product_to_sum():
    b = build_basis("torus1d", 32)
    nz = NoiseModel(b, M=1, gamma=1.0, profile="cos")
    for k in (-3, 0, 2, 5):
        f = Field.mode(b, torus_plane_wave(b, k))
        expect = np.zeros(b.N, complex)
        expect[torus_plane_wave(b, k + 1)] += 0.5
        expect[torus_plane_wave(b, k - 1)] += 0.5
        np.testing.assert_allclose(apply_Bm(f, 1, nz).coeffs, expect, atol=1e-14)


def test_mode_index_checked():
    b = build_basis("torus1d", 16)
    nz = NoiseModel(b, M=2)
    with pytest.raises(ValueError):
        apply_Bm(Field.zeros(b), 0, nz)
    with pytest.raises(ValueError):
        apply_Bm(Field.zeros(b), 3, nz)


def test_bad_profiles():
    with pytest.raises(ValueError):
        NoiseModel(build_basis("sphere_zonal", 8), profile="cos")
    with pytest.raises(ValueError):
        NoiseModel(build_basis("torus1d", 8), profile="legendre")
    with pytest.raises(ValueError):
        NoiseModel(build_basis("torus1d", 8), profile="wavelet")
    with pytest.raises(ValueError):
        NoiseModel(build_basis("torus1d", 8), gamma=-1)


def test_mu_constant_profile():
    b = build_basis("interval_neumann", 16)
    nz = NoiseModel(b, M=1, gamma=0.3, profile="constant")
    f = Field(b, np.linspace(0, 1, 16) * (1 + 2j))
    np.testing.assert_allclose(mu(f, nz).coeffs, -0.045 * f.coeffs, atol=1e-15)
    assert np.all(mu(Field.zeros(b), nz).coeffs == 0)
    # the cancellation residual is pure scalar algebra here
    assert abs(noise_drift_cancellation(f, 4, nz)) < 1e-15 * norm(f) ** 2


def test_mu_of_constant_with_cos():
    b = build_basis("torus1d", 32)
    nz = NoiseModel(b, M=1, gamma=1.0, profile="cos")
    one = Field.from_samples(b, np.ones(b.n_grid))
    expect = -0.25 - 0.25 * np.cos(2 * b.nodes)
    np.testing.assert_allclose(mu(one, nz).samples, expect, atol=1e-14)


@pytest.mark.parametrize("kind", KINDS)
def test_selfadjoint_operators(kind, bases, rng):
    b = bases[kind]
    nz = NoiseModel(b, M=4)
    # keep inputs inside half the band so products stay resolved
    half = np.arange(b.N) < b.N // 4
    f = Field(b, random_coeffs(rng, b.N) * half)
    g = Field(b, random_coeffs(rng, b.N) * half)
    scale = norm(f) * norm(g)
    for m in range(1, 5):
        assert abs(inner(apply_Bm(f, m, nz), g) - inner(f, apply_Bm(g, m, nz))) < 1e-12 * scale
        for n in (1, 3):
            lhs = inner(apply_SBS(f, m, n, nz), g)
            assert abs(lhs - inner(f, apply_SBS(g, m, n, nz))) < 1e-12 * scale


@pytest.mark.parametrize("kind", KINDS)
def test_mu_n_collapses_to_mu(kind, rng):
    b = build_basis(kind, 64)
    nz = NoiseModel(b, M=3)
    c = random_coeffs(rng, b.N)
    c[5:] = 0.0
    f = Field(b, c)
    # S_n is the identity on every mode reached by e_m e_m f once 2^n clears them
    ref = mu(f, nz)
    gaps = [float(norm(mu_n(f, n, nz) - ref)) for n in range(1, 13)]
    assert gaps[-1] == pytest.approx(0.0, abs=1e-14)
    assert gaps[0] > gaps[-1]


@pytest.mark.parametrize("kind", KINDS)
def test_cancellation_and_gauge(kind, bases, rng):
    b = bases[kind]
    nz = NoiseModel(b, M=6, gamma=0.8)
    for _ in range(5):
        f = Field(b, random_coeffs(rng, b.N, decay=0.0))
        for n in range(0, b.max_level() + 1):
            assert abs(noise_drift_cancellation(f, n, nz)) < 1e-11 * norm(f) ** 2
            for m in (1, 6):
                g = inner(f, -1j * apply_SBS(f, m, n, nz))
                assert abs(g.real) < 1e-12 * norm(f) ** 2


def test_cancellation_zero_field():
    b = build_basis("sphere_zonal", 16)
    assert noise_drift_cancellation(Field.zeros(b), 2, NoiseModel(b, M=3)) == 0


def test_summability_is_cauchy():
    b = build_basis("torus1d", 256)
    s = NoiseModel(b, M=64).summability()
    tails = s[-1] - s
    # tail of sum m^2 * m^-4 behaves like 1/M
    assert tails[15] < 0.1 * s[-1]
    assert np.all(np.diff(s) > 0)
    assert tails[31] < tails[15] < tails[7]


def test_lp_opnorm_sum_matches_sup_norms():
    b = build_basis("torus1d", 32)
    nz = NoiseModel(b, M=5, gamma=0.5)
    assert nz.lp_opnorm_sum() == pytest.approx(np.sum(nz.sup_norms() ** 2))
    assert nz.lp_opnorm_sum() == pytest.approx(np.sum((0.5 * np.arange(1, 6) ** -2.0) ** 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 1000), st.integers(0, 10**6), st.integers(1, 20))
def test_driver_reproducible(seed, path, step, M):
    a = WienerDriver(seed, path, 1e-3).increments(step, M)
    b = WienerDriver(seed, path, 1e-3).increments(step, M)
    assert a.tobytes() == b.tobytes()
    # a mode's increment does not depend on how many modes are drawn
    longer = WienerDriver(seed, path, 1e-3).increments(step, M + 3)
    assert longer[:M].tobytes() == a.tobytes()


def test_keyed_normals_match_driver():
    z = keyed_normals(99, [0, 5, 7], 12, 9)
    for i, p in enumerate((0, 5, 7)):
        assert z[i].tobytes() == WienerDriver(99, p).standard_normals(12, 9).tobytes()


def test_seed_range():
    with pytest.raises(ValueError):
        keyed_normals(2**64, [0], 0, 2)
    with pytest.raises(ValueError):
        keyed_normals(-1, [0], 0, 2)


def test_increments_are_standard_normal():
    # oracle: Kolmogorov-Smirnov against N(0,1), moments, and cross-mode correlation
    z = np.concatenate([keyed_normals(7, range(200), s, 8) for s in range(50)])
    flat = z.ravel()
    assert stats.kstest(flat, "norm").pvalue > 1e-3
    assert abs(flat.mean()) < 4 / np.sqrt(flat.size)
    assert abs(flat.var() - 1) < 5 * np.sqrt(2 / flat.size)
    corr = np.corrcoef(z.T)
    assert np.max(np.abs(corr - np.eye(8))) < 5 / np.sqrt(z.shape[0])
    dt = 4e-3
    inc = WienerDriver(7, 3, dt).increments(11, 8)
    np.testing.assert_allclose(inc, np.sqrt(dt) * keyed_normals(7, [3], 11, 8)[0])
