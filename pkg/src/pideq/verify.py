"""Quantitative self-checks behind the `pideq verify` subcommand.

Each check returns (name, passed, detail).  The set covers the spectral
scalars, the resolvent algebra, eigenmode growth, the semigroup law, the
backward-Euler cross-validation, the two linear decay rates, contour
independence, and the convolution bound; together they form the fast part
of the package's acceptance gate (the nonlinear solver checks live in the
test-suite because of their runtime).
"""

import math
import time
from dataclasses import dataclass

from .decay import ExperimentSpec, run_gradient_decay, run_semigroup_decay, verify_convolution_lemma
from .fields import Grid, gaussian_field, lp_norm
from .semigroup import ContourSpec, backward_euler_oracle, krein_resolvent, semigroup_full, semigroup_pac
from .spectral import AlphaParams, c_lambda, eigenvalue, euler_gamma, psi_alpha_field

__all__ = ["CheckResult", "run_checks", "DEFAULT_GRID"]

DEFAULT_GRID = Grid(40.0, 512)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _check(name, fn, results):
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crashed check is a failed check
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    results.append(CheckResult(name, passed, detail, time.perf_counter() - t0))


def check_spectral_scalars():
    eg = euler_gamma()
    e0 = eigenvalue(0.0, 2)
    ref = 4.0 * math.exp(-2.0 * eg)
    err_e = abs(e0 - ref) / ref
    worst_root = 0.0
    for alpha in (-1.0, 0.0, 1.0):
        ev = eigenvalue(alpha, 2)
        worst_root = max(worst_root, abs(alpha + c_lambda(ev, 2).real))
    params = AlphaParams.for_alpha(0.0, 2)
    oracle = 1.0 / math.sqrt(4.0 * math.pi * params.eigenvalue)
    err_n = abs(params.psi_norm - oracle) / oracle
    ok = err_e <= 1e-12 and worst_root <= 1e-12 and err_n <= 1e-4
    return ok, (
        f"eigenvalue rel err {err_e:.2e}, root residual {worst_root:.2e}, "
        f"kernel-norm rel err {err_n:.2e}"
    )


def check_resolvent(grid=DEFAULT_GRID):
    params = AlphaParams.for_alpha(0.0, 2)
    g = gaussian_field(grid, sigma=2.0)
    lam, mu = 2.0, 5.0
    r_lam = krein_resolvent(lam, g, params)
    r_mu = krein_resolvent(mu, g, params)
    comp = krein_resolvent(lam, r_mu, params)
    resid = lp_norm(r_lam - r_mu - (mu - lam) * comp, 2) / lp_norm(g, 2)
    psi = psi_alpha_field(params, grid)
    shift = params.eigenvalue + 1.0
    r_psi = krein_resolvent(shift, psi, params)
    err_eig = lp_norm(r_psi - (1.0 / (shift - params.eigenvalue)) * psi, 2)
    ok = resid <= 1e-6 and err_eig <= 1e-3
    return ok, f"identity residual {resid:.2e}, eigenvector error {err_eig:.2e}"


def check_eigenmode_growth(grid=DEFAULT_GRID):
    params = AlphaParams.for_alpha(0.0, 2)
    psi = psi_alpha_field(params, grid)
    evolved = semigroup_full(1.0, psi, params)
    growth = math.exp(params.eigenvalue)
    err = lp_norm(evolved - growth * psi, 2) / growth
    return err <= 1e-3, f"relative eigenmode error {err:.2e}"


def check_semigroup_law(grid=DEFAULT_GRID):
    params = AlphaParams.for_alpha(0.0, 2)
    g = gaussian_field(grid, sigma=2.0)
    one = semigroup_full(1.0, g, params)
    half = semigroup_full(0.5, semigroup_full(0.5, g, params), params)
    err = lp_norm(one - half, 2) / lp_norm(g, 2)
    return err <= 1e-3, f"composition error {err:.2e}"


def check_backward_euler(grid=DEFAULT_GRID):
    params = AlphaParams.for_alpha(0.0, 2)
    g = gaussian_field(grid, sigma=2.0)
    ref = semigroup_pac(1.0, g, params).field
    nref = lp_norm(ref, 2)
    err1 = lp_norm(backward_euler_oracle(1.0, g, params, 1000) - ref, 2) / nref
    err2 = lp_norm(backward_euler_oracle(1.0, g, params, 2000) - ref, 2) / nref
    gain = err1 / err2 if err2 > 0 else math.inf
    ok = err1 <= 1e-2 and gain >= 1.5
    return ok, f"error(1000) {err1:.2e}, error(2000) {err2:.2e}, gain {gain:.2f}x"


def check_semigroup_decay(grid=DEFAULT_GRID):
    spec = ExperimentSpec(kind="semigroup", grid=grid, q=2.0, p=4.0)
    fit = run_semigroup_decay(spec)
    ok = abs(fit.slope - fit.theoretical) <= 0.05 and fit.r_squared >= 0.98
    return ok, (
        f"slope {fit.slope:.4f} vs {fit.theoretical:.4f}, r2 {fit.r_squared:.4f}"
    )


def check_gradient_decay(grid=DEFAULT_GRID):
    spec = ExperimentSpec(kind="gradient", grid=grid, q=4.0 / 3.0, p=1.5)
    fit = run_gradient_decay(spec)
    ok = abs(fit.slope - fit.theoretical) <= 0.05 and fit.r_squared >= 0.98
    return ok, (
        f"slope {fit.slope:.4f} vs {fit.theoretical:.4f}, r2 {fit.r_squared:.4f}"
    )


def check_contour_independence(grid=DEFAULT_GRID):
    params = AlphaParams.for_alpha(0.0, 2)
    g = gaussian_field(grid, sigma=2.0)
    ev = params.eigenvalue
    trunc = max(50.0, 2.0 * ev)
    res_a = semigroup_pac(1.0, g, params, ContourSpec(ev / 2.0, trunc))
    res_b = semigroup_pac(1.0, g, params, ContourSpec(ev / 4.0, trunc))
    err = lp_norm(res_a.field - res_b.field, 2) / lp_norm(res_a.field, 2)
    return err <= 1e-6, f"radius-halving difference {err:.2e}"


def check_convolution_bound():
    t_grid = (2.0, 10.0, 100.0)
    worst = 0.0
    drift = 0.0
    for a in (0.25, 0.5, 0.75):
        for b in (-0.5, 0.0, 0.5):
            coarse = verify_convolution_lemma(a, b, t_grid, epsrel=1e-6)
            fine = verify_convolution_lemma(a, b, t_grid, epsrel=1e-11)
            worst = max(worst, fine)
            if fine > 0:
                drift = max(drift, abs(fine - coarse) / fine)
    ok = math.isfinite(worst) and drift < 0.10
    return ok, f"max ratio {worst:.3f}, refinement drift {drift:.2e}"


def run_checks(grid=DEFAULT_GRID):
    """Run the fast acceptance checks; returns a list of CheckResult."""
    results = []
    _check("spectral scalars", check_spectral_scalars, results)
    _check("resolvent algebra", lambda: check_resolvent(grid), results)
    _check("eigenmode growth", lambda: check_eigenmode_growth(grid), results)
    _check("semigroup law", lambda: check_semigroup_law(grid), results)
    _check("backward-Euler oracle", lambda: check_backward_euler(grid), results)
    _check("L2->L4 decay rate", lambda: check_semigroup_decay(grid), results)
    _check("gradient decay rate", lambda: check_gradient_decay(grid), results)
    _check("contour independence", lambda: check_contour_independence(grid), results)
    _check("convolution bound", check_convolution_bound, results)
    return results
