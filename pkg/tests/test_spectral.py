"""Spectral scalars, Green fields, projections, decompositions."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import k0 as scipy_k0

from pideq import (
    AlphaParams,
    DecomposedField,
    Field,
    Grid,
    c_lambda,
    eigenvalue,
    euler_gamma,
    gaussian_field,
    green_field,
    green_gradient_field,
    green_gradient_lp_norm,
    green_lp_norm,
    h1_alpha_norm,
    krein_resolvent,
    lp_norm,
    project_ac,
    project_d,
    psi_alpha_field,
)
from pideq.errors import BranchCutError, NoEigenfunctionError
from pideq.fields import fourier
from pideq.spectral import reference_lambda


def test_eigenvalue_2d_formula():
    e0 = eigenvalue(0.0, 2)
    assert abs(e0 - 4.0 * math.exp(-2.0 * euler_gamma())) < 1e-14
    for alpha in (-1.0, 0.0, 1.0):
        ev = eigenvalue(alpha, 2)
        assert abs(alpha + c_lambda(ev, 2).real) < 1e-12


def test_eigenvalue_3d():
    assert abs(eigenvalue(-1.0, 3) - (4.0 * math.pi) ** 2) < 1e-10
    assert eigenvalue(0.5, 3) is None
    assert eigenvalue(0.0, 3) is None
    # 3D normalization constant ||G_E||_2 = (8 pi sqrt(E))^(-1/2)
    p3 = AlphaParams.for_alpha(-1.0, 3)
    assert abs(p3.psi_norm - math.sqrt(1.0 / (32.0 * math.pi**2))) < 1e-12
    assert AlphaParams.for_alpha(0.5, 3).psi_norm is None


def test_c_lambda_values():
    assert abs(c_lambda(4.0, 3) - 1.0 / (2.0 * math.pi)) < 1e-14
    expected = (euler_gamma() - math.log(2.0)) / (2 * math.pi) + 1.0 / (2 * math.pi)
    assert abs(c_lambda(math.e**2, 2) - expected) < 1e-14
    # principal branch: conjugate symmetry and cut rejection
    assert abs(c_lambda(1 + 1j, 2) - c_lambda(1 - 1j, 2).conjugate()) < 1e-15
    with pytest.raises(BranchCutError):
        c_lambda(-2.0, 2)


def test_alpha_params_psi_norm_oracle(params):
    # oracle: int_0^inf x K0(x)^2 dx = 1/2 by quadrature, then rescale
    moment, _ = quad(lambda s: s * scipy_k0(s) ** 2, 0, 40, limit=300)
    assert abs(moment - 0.5) < 1e-10
    oracle = math.sqrt(2 * math.pi * moment / (4 * math.pi**2) / params.eigenvalue)
    assert abs(params.psi_norm - oracle) < 1e-6
    closed = 1.0 / math.sqrt(4.0 * math.pi * params.eigenvalue)
    assert abs(params.psi_norm - closed) < 1e-4 * closed


def test_alpha_params_rejects_inconsistent_eigenvalue():
    with pytest.raises(ValueError):
        AlphaParams(2, 0.0, 2.0, 0.3)


def test_green_rescaling_law():
    # ||G_lam||_p = lam^(-1/p) ||G_1||_p in 2D
    for p in (1.5, 2.0, 3.0):
        base = green_lp_norm(1.0, p)
        for lam in (0.25, 4.0, 16.0):
            ratio = green_lp_norm(lam, p) / base
            assert abs(ratio - lam ** (-1.0 / p)) < 1e-3 * ratio
    assert abs(green_lp_norm(4.0, 2) / green_lp_norm(1.0, 2) - 0.5) < 1e-4


def test_green_l2_closed_form():
    assert abs(green_lp_norm(1.0, 2) - 1.0 / (2.0 * math.sqrt(math.pi))) < 1e-6


def test_green_field_direct_positive_and_grid_norm(grid256):
    g = green_field(1.0, grid256, method="direct")
    assert np.all(g.values.real > 0)
    # grid Riemann sums of the log-singular profile converge slowly;
    # they approach the quadrature norm from below at O(h^2 log^2 h)
    coarse = lp_norm(green_field(1.0, Grid(40.0, 128), method="direct"), 2)
    fine = lp_norm(g, 2)
    exact = green_lp_norm(1.0, 2)
    assert abs(fine - exact) < abs(coarse - exact)
    assert abs(fine - exact) < 0.05 * exact


def test_green_field_fourier_helmholtz_identity(grid128):
    lam = 2.0
    g = green_field(lam, grid128, method="fourier")
    F = fourier(g)
    nu = F.grid.axis()
    NU1, NU2 = np.meshgrid(nu, nu, indexing="ij")
    xi2 = (2 * np.pi) ** 2 * (NU1**2 + NU2**2)
    resid = (lam + xi2) * F.values - 1.0
    n = grid128.n
    interior = np.ones((n, n), dtype=bool)
    # Nyquist lines are zeroed by convention; fftshifted layout puts them first
    interior[0, :] = False
    interior[:, 0] = False
    assert np.abs(resid[interior]).max() < 1e-8


def test_green_field_paths_agree_at_band_limit_accuracy():
    # pointwise sampling vs band-limited multiplier: the difference is the
    # band-limiting of the log singularity and shrinks under refinement
    errs = []
    for n in (128, 256):
        grid = Grid(40.0, n)
        direct = green_field(1.0, grid, method="direct")
        mult = green_field(1.0, grid, method="fourier")
        errs.append(lp_norm(direct - mult, 2) / lp_norm(direct, 2))
    assert errs[1] < errs[0]
    assert errs[1] < 0.1


def test_green_field_branch_and_grid_errors(grid128):
    with pytest.raises(BranchCutError):
        green_field(-1.0, grid128)
    with pytest.raises(ValueError):
        green_field(1.0, Grid(40.0, 128, offset=False), method="direct")


def test_green_gradient_radial_symmetry(grid128):
    gx, gy = green_gradient_field(1.0, grid128)
    vals = np.hypot(np.abs(gx.values), np.abs(gy.values))
    n = grid128.n
    # reflection symmetry of the modulus on the offset grid
    assert np.abs(vals - vals[::-1, :]).max() < 1e-12
    assert np.abs(vals - vals[:, ::-1]).max() < 1e-12
    assert np.abs(vals - vals.T).max() < 1e-12


def test_green_gradient_rescaling():
    # ||grad G_lam||_p = lam^(1/2 - 1/p) ||grad G_1||_p; p = 3/2, lam = 4
    ratio = green_gradient_lp_norm(4.0, 1.5) / green_gradient_lp_norm(1.0, 1.5)
    assert abs(ratio - 2.0 ** (2 * (0.5 - 2.0 / 3.0))) < 1e-3


def test_green_gradient_integrability_window():
    # grid L^p norms: divergent under refinement for p = 2, stable for p = 3/2
    norms2, norms32 = [], []
    for n in (128, 256, 512):
        grid = Grid(40.0, n)
        gx, gy = green_gradient_field(1.0, grid)
        mag = Field(grid, np.hypot(np.abs(gx.values), np.abs(gy.values)))
        norms2.append(lp_norm(mag, 2.0))
        norms32.append(lp_norm(mag, 1.5))
    assert norms2[0] < norms2[1] < norms2[2]
    assert norms2[2] - norms2[0] > 0.05 * norms2[0]
    rel_drift = abs(norms32[2] - norms32[1]) / norms32[2]
    assert rel_drift < abs(norms32[1] - norms32[0]) / norms32[1]
    # Riemann sums crawl up towards the quadrature value from below
    exact = green_gradient_lp_norm(1.0, 1.5)
    assert norms32[0] < norms32[1] < norms32[2] < exact
    with pytest.raises(ValueError):
        green_gradient_lp_norm(1.0, 2.0)


def test_psi_field_unit_norm_and_positivity(params, grid128):
    psi = psi_alpha_field(params, grid128)
    assert abs(lp_norm(psi, 2) - 1.0) < 1e-12
    assert np.all(psi.values.real > 0)


def test_psi_field_absent_eigenvalue():
    p3 = AlphaParams.for_alpha(0.5, 3)
    with pytest.raises(NoEigenfunctionError):
        psi_alpha_field(p3, Grid(40.0, 128))


def test_projections_rank_one(params, grid128):
    psi = psi_alpha_field(params, grid128)
    assert lp_norm(project_d(psi, params) - psi, 2) < 1e-10
    assert lp_norm(project_ac(psi, params), 2) < 1e-10


def test_projections_idempotent_complementary(params, grid128, rng):
    f = Field(grid128, rng.standard_normal((128, 128)))
    pd = project_d(f, params)
    pac = project_ac(f, params)
    assert lp_norm(project_d(pd, params) - pd, 2) < 1e-12 * max(lp_norm(pd, 2), 1e-30)
    assert lp_norm((pd + pac) - f, 2) < 1e-12 * lp_norm(f, 2)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_projection_lp_bound_with_constant(params, grid128, rng, p):
    psi = psi_alpha_field(params, grid128)
    pprime = p / (p - 1.0)
    const = 1.0 + lp_norm(psi, p) * lp_norm(psi, pprime)
    for _ in range(3):
        f = Field(grid128, rng.standard_normal((128, 128)))
        assert lp_norm(project_ac(f, params), p) <= const * lp_norm(f, p) * (1 + 1e-12)


def test_projection_absent_eigenvalue_convention(grid128, rng):
    p3 = AlphaParams.for_alpha(0.5, 3)
    f = Field(grid128, rng.standard_normal((128, 128)))
    assert lp_norm(project_d(f, p3), 2) == 0.0
    assert project_ac(f, p3) is f


def test_projection_commutes_with_resolvent(params, grid128, rng):
    f = Field(grid128, rng.standard_normal((128, 128)))
    a = project_ac(krein_resolvent(2.0, f, params), params)
    b = krein_resolvent(2.0, project_ac(f, params), params)
    assert lp_norm(a - b, 2) <= 1e-8 * lp_norm(f, 2)


def test_decomposed_field_validation(params, grid128):
    f = gaussian_field(grid128)
    with pytest.raises(ValueError):
        DecomposedField(f, 0.0, params.eigenvalue, params)
    u = DecomposedField.from_field(f, params)
    assert u.lambda_ref == reference_lambda(params)


def test_h1_norm_special_cases(params, grid128):
    f = gaussian_field(grid128, sigma=1.0)
    u = DecomposedField(f, 0.0, 1.0 + params.eigenvalue, params)
    from pideq import gradient

    gx, gy = gradient(f)
    plain = math.sqrt(lp_norm(f, 2) ** 2 + lp_norm(gx, 2) ** 2 + lp_norm(gy, 2) ** 2)
    assert abs(h1_alpha_norm(u) - plain) < 1e-12 * plain
    zero = Field(grid128, np.zeros((128, 128)))
    v = DecomposedField(zero, 1.0, 1.0 + params.eigenvalue, params)
    assert abs(h1_alpha_norm(v) - 1.0) < 1e-14


def test_h1_norm_triangle_inequality(params, grid128, rng):
    lam = 1.0 + params.eigenvalue
    for _ in range(3):
        a = DecomposedField(
            Field(grid128, rng.standard_normal((128, 128))), complex(*rng.standard_normal(2)), lam, params
        )
        b = DecomposedField(
            Field(grid128, rng.standard_normal((128, 128))), complex(*rng.standard_normal(2)), lam, params
        )
        ab = DecomposedField(a.regular + b.regular, a.coeff + b.coeff, lam, params)
        assert h1_alpha_norm(ab) <= h1_alpha_norm(a) + h1_alpha_norm(b) + 1e-12


def test_sobolev_embedding_ratio_stable(params):
    # ||u||_q <= C(q) * h1-proxy with C stable under refinement
    for q in (2.0, 4.0, 8.0):
        ratios = []
        for n in (128, 256):
            grid = Grid(40.0, n)
            f = gaussian_field(grid, sigma=1.3, amplitude=0.7)
            u = DecomposedField(f, 0.35, 1.0 + params.eigenvalue, params)
            from pideq import total_field

            tot = total_field(u)
            ratios.append(lp_norm(tot, q) / h1_alpha_norm(u))
        assert 0.75 < ratios[1] / ratios[0] < 1.3
