import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from galerkin_nls import (
    DyadicPartition,
    Field,
    ProjectorKind,
    apply_operator_power,
    apply_projector,
    build_basis,
    norm,
    opnorm_lower_bound,
    psi,
    rho_dot,
    rho_m,
)
from galerkin_nls.littlewood_paley import band_mask, projector_weights
from galerkin_nls.spectral import inner

from conftest import KINDS, random_coeffs


def test_psi_examples():
    assert psi(0.7) == 1.0
    assert psi(1.5) == pytest.approx(0.5, abs=1e-15)
    assert psi(3.0) == 0.0
    assert psi(1.0) == 1.0 and psi(2.0) == 0.0


def test_psi_closed_form():
    # oracle: direct evaluation of g(2-t)/(g(2-t)+g(t-1)), g(s) = exp(-1/s)
    t = np.linspace(1.01, 1.99, 50)
    g = lambda s: np.exp(-1 / s)
    np.testing.assert_allclose(psi(t), g(2 - t) / (g(2 - t) + g(t - 1)), rtol=1e-14)


def test_rho_examples():
    assert rho_dot(1.0) == 1.0
    assert rho_m(3, 12.0) == pytest.approx(0.5, abs=1e-15)
    assert DyadicPartition.partial_sum(20, 1000.0) == 1.0
    assert rho_m(0, 0.3) == psi(0.3)


@pytest.mark.parametrize("f", [psi, rho_dot, lambda t: rho_m(2, t)])
def test_nonpositive_argument_raises(f):
    with pytest.raises(ValueError):
        f(0.0)
    with pytest.raises(ValueError):
        f(np.array([1.0, -2.0]))


def test_rho_dot_support():
    t = np.concatenate([np.linspace(1e-4, 0.5, 200), np.linspace(2.0, 50, 200)])
    assert np.all(rho_dot(t) == 0.0)
    # near the edges the bump underflows below double precision
    inside = np.linspace(0.55, 1.95, 200)
    assert np.all(rho_dot(inside) > 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 6), st.integers(0, 40))
def test_partition_of_unity(logt, extra):
    t = 10.0**logt
    M = max(0, int(np.ceil(np.log2(t)))) + extra
    assert abs(DyadicPartition.partial_sum(M, t) - 1.0) < 1e-12
    # telescoping closed form
    assert DyadicPartition.partial_sum(M, t) == pytest.approx(psi(t * 2.0**-M), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e6), st.integers(0, 12))
def test_values_in_unit_interval(t, m):
    for v in (psi(t), rho_dot(t), rho_m(m, t)):
        assert 0.0 <= v <= 1.0


def test_projector_kind_validation():
    with pytest.raises(ValueError):
        ProjectorKind.sharp(-1)
    assert ProjectorKind("smooth", 2) == ProjectorKind.smooth(2)


def test_sharp_edges_on_torus():
    b = build_basis("torus1d", 8)
    w = projector_weights(b, ProjectorKind.sharp(0))
    assert w[0] == 1.0 and w[1] == 0.0 and w[2] == 0.0


def test_smooth_edges_and_midband():
    b = build_basis("torus1d", 16)
    w0 = projector_weights(b, ProjectorKind.smooth(0))
    assert w0[0] == 1.0 and w0[1] == 0.0
    s = build_basis("sphere_zonal", 8)  # lambda_S = 1 + l(l+1): 1, 3, 7, 13, ...
    w3 = projector_weights(s, ProjectorKind.smooth(3))
    np.testing.assert_allclose(w3, [1, 1, 1, rho_m(3, 13.0), 0, 0, 0, 0])
    # the mode with lambda_S = 12 would carry weight 0.5; check via a shifted Neumann basis
    nb = build_basis("interval_neumann", 8, eps_shift=3.0)  # 3, 4, 7, 12, ...
    assert projector_weights(nb, ProjectorKind.smooth(3))[3] == pytest.approx(0.5, abs=1e-15)


def test_threshold_eigenvalue_excluded():
    # Neumann with eps = 4 hits lambda_S = 8 = 2^(2+1) exactly at k = 2
    b = build_basis("interval_neumann", 8, eps_shift=4.0)
    assert b.lambda_S[2] == 8.0
    assert not band_mask(b, 2)[2]
    assert projector_weights(b, ProjectorKind.sharp(2))[2] == 0.0


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("tag", ["sharp", "smooth"])
def test_projector_invariants(kind, tag, bases, rng):
    b = bases[kind]
    for n in range(0, b.max_level() + 1):
        P = lambda f: apply_projector(f, ProjectorKind(tag, n))
        f = Field(b, random_coeffs(rng, b.N))
        g = Field(b, random_coeffs(rng, b.N))
        pf = P(f)
        # lands in H_n with the upper coefficients bitwise zero
        assert np.all(pf.coeffs[~band_mask(b, n)] == 0)
        assert abs(inner(pf, g) - inner(f, P(g))) < 1e-12 * norm(f) * norm(g)
        for X in ("H", "E_A"):
            assert norm(pf, X) <= norm(f, X) * (1 + 1e-15)
        half = lambda h: apply_operator_power(h, "A", 0.5)
        # two real multipliers: order only changes the last rounding
        np.testing.assert_allclose(P(half(f)).coeffs, half(P(f)).coeffs, rtol=4e-16, atol=0)
        if tag == "sharp":
            np.testing.assert_array_equal(P(pf).coeffs, pf.coeffs)


@pytest.mark.parametrize("kind", KINDS)
def test_smooth_projection_converges_in_energy(kind, bases, rng):
    b = bases[kind]
    c = random_coeffs(rng, b.N)
    c[8:] = 0.0
    f = Field(b, c)
    errs = [float(norm(f - apply_projector(f, ProjectorKind.smooth(n)), "E_A")) for n in range(0, 14)]
    assert all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))
    top = b.lambda_S[7]
    n_clear = int(np.floor(np.log2(top))) + 1  # 2^n > top
    assert errs[n_clear] == 0.0


def test_opnorm_p2_bound_is_contraction():
    b = build_basis("sphere_zonal", 32)
    for tag in ("sharp", "smooth"):
        for n in (2, 4):
            v = opnorm_lower_bound(ProjectorKind(tag, n), 2.0, b, trials=4, seed=7)
            assert v <= 1 + 1e-10


def test_opnorm_identity_regime():
    b = build_basis("torus1d", 16)
    n = b.max_level() + 3
    assert opnorm_lower_bound(ProjectorKind.sharp(n), 4.0, b, trials=4, seed=1) == pytest.approx(1.0, abs=1e-12)


def test_opnorm_rejects_p_le_1():
    b = build_basis("torus1d", 16)
    with pytest.raises(ValueError):
        opnorm_lower_bound(ProjectorKind.sharp(1), 1.0, b, trials=2, seed=0)
    with pytest.raises(ValueError):
        opnorm_lower_bound(ProjectorKind.sharp(1), 3.0, b, trials=0, seed=0)


def test_opnorm_is_a_lower_bound_for_exact_l_infinity_norm():
    # oracle: on L^inf the norm equals the l1 norm of the kernel, maximized over nodes;
    # a finite-p probe on the same grid never exceeds the exact L^1/L^inf bound
    b = build_basis("torus1d", 32)
    proj = ProjectorKind.sharp(3)
    w = projector_weights(b, proj)
    H = np.stack([b.eigenfunction(j) for j in range(b.N)])
    K = (H.T * w) @ H.conj()
    exact_inf = np.max(np.abs(K) @ b.weights)
    est = opnorm_lower_bound(proj, 40.0, b, trials=4, seed=3)
    assert 1.0 <= est <= exact_inf * 1.05


def test_opnorm_reproducible():
    b = build_basis("sphere_zonal", 24)
    a = opnorm_lower_bound(ProjectorKind.sharp(3), 6.0, b, trials=4, seed=11)
    c = opnorm_lower_bound(ProjectorKind.sharp(3), 6.0, b, trials=4, seed=11)
    assert a == c
