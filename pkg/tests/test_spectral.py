import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from galerkin_nls import Field, GeometryKind, apply_operator_power, build_basis, norm
from galerkin_nls.spectral import inner, lp_norm

from conftest import KINDS, random_coeffs


def test_torus_eigenvalues_first_modes():
    b = build_basis("torus1d", 8)
    assert list(b.wavenumbers[:5]) == [0, 1, -1, 2, -2]
    np.testing.assert_array_equal(b.lambda_S[:3], [1, 2, 2])
    np.testing.assert_array_equal(b.lambda_A[:3], [0, 1, 1])


def test_dirichlet_eigenvalues():
    b = build_basis("interval_dirichlet", 8)
    np.testing.assert_array_equal(b.lambda_S[:3], [1, 4, 9])
    np.testing.assert_array_equal(b.lambda_A, b.lambda_S)


def test_sphere_eigenvalues():
    b = build_basis("sphere_zonal", 8)
    np.testing.assert_array_equal(b.lambda_S[:3], [1, 3, 7])


def test_neumann_shift_and_fractional_power():
    b = build_basis("interval_neumann", 6, beta=0.5, eps_shift=0.25)
    k = np.arange(6)
    np.testing.assert_allclose(b.lambda_S, 0.25 + k**2)
    np.testing.assert_allclose(b.lambda_A, (k**2.0) ** 0.5)


@pytest.mark.parametrize("bad", [dict(N=1), dict(beta=0.0), dict(eps_shift=-1.0)])
def test_build_basis_rejects(bad):
    kw = dict(kind="torus1d", N=8, beta=1.0, eps_shift=1.0) | bad
    with pytest.raises(ValueError):
        build_basis(**kw)


def test_build_basis_rejects_unknown_kind():
    with pytest.raises(ValueError):
        build_basis("klein_bottle", 8)


@pytest.mark.parametrize("kind", KINDS)
def test_spectra_positive_nondecreasing_and_padded(kind):
    b = build_basis(kind, 24)
    assert np.all(b.lambda_S > 0)
    assert np.all(np.diff(b.lambda_S) >= 0)
    assert np.all(b.lambda_A >= 0)
    assert b.n_grid >= 2 * b.N
    assert GeometryKind(kind).dim == b.dim


@pytest.mark.parametrize("kind", KINDS)
def test_unit_vector_synthesizes_eigenfunction(kind, bases):
    b = bases[kind]
    for j in (0, 1, 5, b.N - 1):
        f = Field.mode(b, j)
        np.testing.assert_allclose(f.samples, b.eigenfunction(j), atol=1e-12)
        np.testing.assert_allclose(b.analyze(f.samples), f.coeffs, atol=1e-13)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_coeffs_give_zero_samples(kind, bases):
    assert np.all(Field.zeros(bases[kind]).samples == 0)


@pytest.mark.parametrize("kind", KINDS)
def test_quadrature_gram_matrix_is_identity(kind, bases):
    # oracle: closed-form eigenfunctions integrated by the node rule
    b = bases[kind]
    H = np.stack([b.eigenfunction(j) for j in range(b.N)])
    gram = (H * b.weights) @ H.conj().T
    np.testing.assert_allclose(gram, np.eye(b.N), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_and_parseval(kind, bases, rng):
    b = bases[kind]
    c = random_coeffs(rng, b.N, (5,))
    u = b.synthesize(c)
    back = b.analyze(u)
    assert np.max(np.abs(back - c)) / np.max(np.abs(c)) < 1e-12
    np.testing.assert_allclose(b.integrate(np.abs(u) ** 2), np.sum(np.abs(c) ** 2, axis=-1), rtol=1e-12)


def test_size_mismatch_raises(bases):
    b = bases["torus1d"]
    with pytest.raises(ValueError):
        b.synthesize(np.zeros(b.N + 1))
    with pytest.raises(ValueError):
        b.analyze(np.zeros(b.n_grid - 1))
    with pytest.raises(ValueError):
        Field(b, np.zeros(3))


def test_operator_power_examples():
    b = build_basis("torus1d", 8)
    j = 3  # k = 2, lambda_A = 4
    f = Field.mode(b, j)
    np.testing.assert_allclose(apply_operator_power(f, "S", 1).coeffs, b.lambda_S[j] * f.coeffs)
    np.testing.assert_allclose(apply_operator_power(f, "A", 0.5).coeffs, 2 * f.coeffs)
    g = Field(b, np.arange(8) + 1j)
    np.testing.assert_array_equal(apply_operator_power(g, "A", 0).coeffs, g.coeffs)
    with pytest.raises(ValueError):
        apply_operator_power(g, "A", -0.5)
    np.testing.assert_allclose(apply_operator_power(g, "S", -1).coeffs, g.coeffs / b.lambda_S)


def test_norm_single_mode():
    b = build_basis("torus1d", 8)
    f = Field.mode(b, 3)
    assert norm(f, "H") == pytest.approx(1.0)
    assert norm(f, "E_A") == pytest.approx(np.sqrt(5))
    assert norm(f, "E_A_dual") == pytest.approx(1 / np.sqrt(5))


@pytest.mark.parametrize("which", ["H", "E_A", "E_A_dual"])
def test_zero_norms(which):
    b = build_basis("sphere_zonal", 8)
    assert norm(Field.zeros(b), which) == 0
    assert norm(Field.zeros(b), "Lp", p=3) == 0


def test_torus_L4_of_exp_2ix():
    # |e^{2ix}|^4 = 1 integrates to 2 pi
    b = build_basis("torus1d", 16)
    f = Field.mode(b, 3, np.sqrt(2 * np.pi))
    np.testing.assert_allclose(f.samples, np.exp(2j * b.nodes), atol=1e-13)
    assert norm(f, "Lp", p=4) ** 4 == pytest.approx(2 * np.pi, rel=1e-13)


def test_sphere_lp_matches_direct_integral():
    # oracle: adaptive quadrature of 2 pi int (c P_2(x))^4 dx; a polynomial, so the node rule is exact
    from scipy.integrate import quad
    from scipy.special import eval_legendre

    b = build_basis("sphere_zonal", 16)
    f = Field.mode(b, 2)
    c = np.sqrt(5 / (4 * np.pi))
    ref = 2 * np.pi * quad(lambda x: (c * eval_legendre(2, x)) ** 4, -1, 1, epsabs=0, epsrel=1e-13)[0]
    assert norm(f, "Lp", p=4) ** 4 == pytest.approx(ref, rel=1e-12)
    # sup is taken over nodes, which exclude the poles
    assert lp_norm(b, f.samples, np.inf) == pytest.approx(np.max(np.abs(c * eval_legendre(2, b.nodes))), rel=1e-13)


def test_lp_rejects_small_p(bases):
    with pytest.raises(ValueError):
        norm(Field.zeros(bases["torus1d"]), "Lp", p=0.5)


coeff_strategy = st.lists(
    st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=16, max_size=16
).map(lambda xs: np.array([a + 1j * b for a, b in xs]))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KINDS), coeff_strategy, coeff_strategy)
def test_gelfand_triple_and_duality_pairing(kind, c, d):
    b = build_basis(kind, 16)
    f, g = Field(b, c), Field(b, d)
    h, ea, dual = norm(f, "H"), norm(f, "E_A"), norm(f, "E_A_dual")
    assert dual <= h * (1 + 1e-12) + 1e-300
    assert h <= ea * (1 + 1e-12) + 1e-300
    assert abs(inner(f, g)) <= dual * norm(g, "E_A") * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), coeff_strategy)
def test_parseval_property(kind, c):
    b = build_basis(kind, 16)
    f = Field(b, c)
    assert b.integrate(np.abs(f.samples) ** 2) == pytest.approx(np.sum(np.abs(c) ** 2), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(KINDS), st.integers(0, 15))
def test_half_power_squared_is_full_power(kind, j):
    b = build_basis(kind, 16)
    f = Field.mode(b, j)
    twice = apply_operator_power(apply_operator_power(f, "A", 0.5), "A", 0.5)
    np.testing.assert_allclose(twice.coeffs, apply_operator_power(f, "A", 1).coeffs, rtol=1e-14, atol=0)
