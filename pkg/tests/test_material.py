"""Tests for the constitutive constants and maps"""

import numpy as np
import pytest

from phasonsim import AdmissibilityMode
from phasonsim.errors import AsymmetricStrainError, IncompleteInputError
from phasonsim.material import (
    MaterialParams,
    SmallStrainInputs,
    check_admissibility,
    derive_coefficients,
    dissipation_power,
    energy_density,
    phason_stress,
    quadratic_form_matrix,
    self_action,
    stress_sigma,
    symmetrized_strain,
)

ADMISSIBLE = MaterialParams(
    lam=0.0, mu=1.0, k0=1.0, k1=1.0, k2=0.5, k2p=0.25, k3=0.0, k3p=0.2
)


def random_inputs(seed: int = 0) -> SmallStrainInputs:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 3))
    return SmallStrainInputs(
        eps_strain=0.5 * (a + a.T),
        N=rng.standard_normal((3, 3)),
        nu=rng.standard_normal(3),
    )


def test_derived_coefficients():
    c = derive_coefficients(ADMISSIBLE)
    assert c.xi == pytest.approx(1.0)
    assert c.xibar == pytest.approx(0.1)
    assert c.zeta == pytest.approx(0.75)
    assert c.gamma == pytest.approx(1.25)
    assert c.kappa == pytest.approx(0.1)
    assert c.kappa0 == pytest.approx(1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        MaterialParams(rho=0.0)
    with pytest.raises(ValueError):
        MaterialParams(varsigma=-1.0)
    with pytest.raises(ValueError):
        MaterialParams(ell=-0.1)
    with pytest.raises(ValueError):
        MaterialParams(mu=float("nan"))
    assert ADMISSIBLE.replace(ell=2.0).ell == 2.0


def test_admissible_set_passes_every_mode():
    for mode in AdmissibilityMode:
        report = check_admissibility(ADMISSIBLE, mode)
        assert report.passed, str(report)


def test_negative_mu_names_inequalities():
    report = check_admissibility(ADMISSIBLE.replace(mu=-1.0), "theorem_linear")
    assert not report.passed
    assert "μ>−λ" in report.violated_names
    assert "μ,ζ>2κ" in report.violated_names


def test_zero_kappa_fails_theorem():
    report = check_admissibility(ADMISSIBLE.replace(k3p=0.0, k3=0.1), "theorem_linear")
    assert report.violated_names == ["κ>0"]


def test_zero_k0_is_marginal():
    report = check_admissibility(ADMISSIBLE.replace(k0=0.0), "theorem_gyro")
    assert report.passed
    assert [v.name for v in report.marginal] == ["κ₀≥0"]


def test_energy_mode_checks_coupling_block():
    # k3' too large for the deviatoric block to stay positive semidefinite
    report = check_admissibility(ADMISSIBLE.replace(k3p=2.0), "energy")
    assert "4μk₂≥(k₃′)²" in report.violated_names


@pytest.mark.parametrize(
    "changes, name",
    [
        ({"k2": -0.1}, "k₂≥0"),
        ({"k2p": -0.1}, "k₂′≥0"),
        ({"k3p": 2.0}, "4μk₂≥(k₃′)²"),
        ({"lam": -0.9}, "3λ+2μ≥0"),
        ({"k3": 1.0}, "(3λ+2μ)(3k₁+2k₂)≥(3k₃+k₃′)²"),
    ],
)
def test_energy_block_conditions_detect_indefinite_energy(changes, name):
    p = ADMISSIBLE.replace(**changes)
    assert name in check_admissibility(p, "energy").violated_names
    assert np.min(np.linalg.eigvalsh(quadratic_form_matrix(p))) < -1e-12


def test_energy_mode_nonnegative_energy():
    h = quadratic_form_matrix(ADMISSIBLE)
    assert np.allclose(h, h.T)
    assert np.min(np.linalg.eigvalsh(h)) >= -1e-12
    for seed in range(5):
        assert energy_density(ADMISSIBLE, random_inputs(seed)) >= 0.0


def test_energy_density_pure_shear():
    p = MaterialParams(lam=0.0, mu=1.0)
    s = 0.3
    eps = np.array([[0.0, s, 0.0], [s, 0.0, 0.0], [0.0, 0.0, 0.0]])
    inputs = SmallStrainInputs(eps, np.zeros((3, 3)), np.zeros(3))
    assert energy_density(p, inputs) == pytest.approx(2.0 * s * s)


def test_stresses_are_energy_derivatives():
    inputs = random_inputs(3)
    rng = np.random.default_rng(7)
    a = rng.standard_normal((3, 3))
    d_eps = 0.5 * (a + a.T)
    d_n = rng.standard_normal((3, 3))
    step = 1e-3

    def psi(t_eps: float, t_n: float) -> float:
        return energy_density(
            ADMISSIBLE,
            SmallStrainInputs(
                inputs.eps_strain + t_eps * d_eps, inputs.N + t_n * d_n, inputs.nu
            ),
        )

    # Central differences are exact for a quadratic up to round-off
    d_psi_eps = (psi(step, 0.0) - psi(-step, 0.0)) / (2 * step)
    d_psi_n = (psi(0.0, step) - psi(0.0, -step)) / (2 * step)
    assert d_psi_eps == pytest.approx(
        np.sum(stress_sigma(ADMISSIBLE, inputs) * d_eps), rel=1e-8, abs=1e-10
    )
    assert d_psi_n == pytest.approx(
        np.sum(phason_stress(ADMISSIBLE, inputs) * d_n), rel=1e-8, abs=1e-10
    )


def test_symmetrized_strain_rejects_gradients():
    with pytest.raises(AsymmetricStrainError):
        symmetrized_strain(np.triu(np.ones((3, 3)), 1))
    tiny = np.eye(3)
    tiny[0, 1] += 1e-15
    assert np.allclose(symmetrized_strain(tiny), np.eye(3))
    with pytest.raises(ValueError):
        symmetrized_strain(np.eye(2))


def test_dissipative_stress_needs_rates():
    p = ADMISSIBLE.replace(eps_visc=0.1, delta_visc=0.2)
    inputs = random_inputs(1)
    with pytest.raises(IncompleteInputError):
        stress_sigma(p, inputs, dissipative=True)
    with pytest.raises(IncompleteInputError):
        phason_stress(p, inputs, dissipative=True)
    grad_ut = np.eye(3)
    with_rates = SmallStrainInputs(
        inputs.eps_strain, inputs.N, inputs.nu, grad_ut=grad_ut, grad_nut=grad_ut
    )
    assert np.allclose(
        stress_sigma(p, with_rates) - stress_sigma(p, inputs), 0.1 * grad_ut
    )
    assert np.allclose(
        phason_stress(p, with_rates) - phason_stress(p, inputs), 0.2 * grad_ut
    )


def test_self_action_and_dissipation():
    p = ADMISSIBLE.replace(varsigma=2.0, eps_visc=0.5, delta_visc=0.25)
    nu = np.array([1.0, 0.0, 0.0])
    nu_t = np.array([0.0, 1.0, 0.0])
    assert np.allclose(self_action(p, nu, nu_t), [1.0, 2.0, 0.0])
    power = dissipation_power(p, np.eye(3), nu_t, np.eye(3))
    assert power == pytest.approx(0.5 * 3 + 2.0 * 1 + 0.25 * 3)


def test_derived_coefficient_examples():
    assert derive_coefficients(MaterialParams(lam=2.0, mu=3.0)).xi == 5.0
    c = derive_coefficients(MaterialParams(k3=1.0, k3p=2.0))
    assert (c.xibar, c.kappa) == (2.0, 1.0)
    c = derive_coefficients(MaterialParams(k1=1.0, k2=0.5, k2p=0.1))
    assert c.zeta == pytest.approx(0.6)
    assert c.gamma == pytest.approx(1.4)


def test_admissibility_examples():
    p = MaterialParams(mu=1.0, lam=0.0, k1=1.0)
    assert check_admissibility(p, "energy").passed
    p = MaterialParams(mu=1.0, lam=-2.0, k1=1.0)
    assert "λ+μ>0" in check_admissibility(p, "energy").violated_names
    # μ = ζ = 1, κ = 0.6, ξ̄ = 0.1, ξ = γ = 1
    p = MaterialParams(lam=0.0, mu=1.0, k1=1.0, k2=0.5, k2p=0.5, k3=-0.5, k3p=1.2)
    assert check_admissibility(p, "theorem_linear").violated_names == ["μ,ζ>2κ"]


@pytest.mark.parametrize(
    "params, inputs, sigma, phason",
    [
        (
            MaterialParams(lam=1.0, mu=1.0),
            SmallStrainInputs(np.eye(3), np.zeros((3, 3)), np.zeros(3)),
            5.0 * np.eye(3),
            np.zeros((3, 3)),
        ),
        (
            MaterialParams(k3=1.0, k3p=2.0),
            SmallStrainInputs(np.zeros((3, 3)), np.eye(3), np.zeros(3)),
            5.0 * np.eye(3),
            np.zeros((3, 3)),
        ),
        (
            MaterialParams(k1=1.0, k2=1.0, k2p=1.0),
            SmallStrainInputs(np.zeros((3, 3)), np.eye(3), np.zeros(3)),
            np.zeros((3, 3)),
            5.0 * np.eye(3),
        ),
        (
            MaterialParams(k3=2.0, k3p=1.0),
            SmallStrainInputs(np.eye(3), np.zeros((3, 3)), np.zeros(3)),
            2.0 * np.eye(3),  # 2μ with the default μ = 1
            7.0 * np.eye(3),
        ),
    ],
)
def test_stress_examples(params, inputs, sigma, phason):
    assert np.allclose(stress_sigma(params, inputs), sigma)
    assert np.allclose(phason_stress(params, inputs), phason)


def test_pointwise_examples():
    p = MaterialParams(lam=1.0, mu=1.0)
    assert energy_density(
        p, SmallStrainInputs(np.eye(3), np.zeros((3, 3)), np.zeros(3))
    ) == pytest.approx(7.5)
    assert energy_density(
        MaterialParams(k0=2.0),
        SmallStrainInputs(np.zeros((3, 3)), np.zeros((3, 3)), np.array([1.0, 0, 0])),
    ) == pytest.approx(1.0)
    skew = np.zeros((3, 3))
    skew[0, 1], skew[1, 0] = 1.0, -1.0
    assert np.allclose(
        phason_stress(
            MaterialParams(k2p=1.0),
            SmallStrainInputs(np.zeros((3, 3)), skew, np.zeros(3)),
        ),
        2.0 * skew,
    )
    visc = SmallStrainInputs(
        np.zeros((3, 3)), np.zeros((3, 3)), np.zeros(3), grad_ut=np.eye(3)
    )
    viscous = stress_sigma(MaterialParams(eps_visc=0.5), visc)
    assert np.allclose(viscous, 0.5 * np.eye(3))
    assert np.allclose(
        self_action(MaterialParams(k0=1.0), np.ones(3), np.ones(3)), [2.0, 2.0, 2.0]
    )


@pytest.mark.parametrize("seed", range(100))
def test_energy_gradients_on_random_samples(seed):
    rng = np.random.default_rng(1000 + seed)
    p = ADMISSIBLE.replace(
        lam=rng.uniform(0.0, 1.0), mu=rng.uniform(0.8, 2.0), k0=rng.uniform(0.0, 1.0)
    )
    inputs = random_inputs(seed)
    step = 1e-4
    sigma = stress_sigma(p, inputs)
    phason = phason_stress(p, inputs)
    for i in range(3):
        for j in range(3):
            # symmetric perturbation of ε, so compare with the symmetric part of σ
            d_eps = np.zeros((3, 3))
            d_eps[i, j] += 0.5
            d_eps[j, i] += 0.5
            d_n = np.zeros((3, 3))
            d_n[i, j] = 1.0
            eps, n_grad, nu = inputs.eps_strain, inputs.N, inputs.nu
            plus = SmallStrainInputs(eps + step * d_eps, n_grad, nu)
            minus = SmallStrainInputs(eps - step * d_eps, n_grad, nu)
            fd = (energy_density(p, plus) - energy_density(p, minus)) / (2 * step)
            assert fd == pytest.approx(np.sum(sigma * d_eps), rel=1e-6, abs=1e-8)
            plus = SmallStrainInputs(eps, n_grad + step * d_n, nu)
            minus = SmallStrainInputs(eps, n_grad - step * d_n, nu)
            fd = (energy_density(p, plus) - energy_density(p, minus)) / (2 * step)
            assert fd == pytest.approx(phason[i, j], rel=1e-6, abs=1e-8)
    for i in range(3):
        d_nu = np.zeros(3)
        d_nu[i] = step
        plus = SmallStrainInputs(inputs.eps_strain, inputs.N, inputs.nu + d_nu)
        minus = SmallStrainInputs(inputs.eps_strain, inputs.N, inputs.nu - d_nu)
        fd = (energy_density(p, plus) - energy_density(p, minus)) / (2 * step)
        assert fd == pytest.approx(p.k0 * inputs.nu[i], rel=1e-6, abs=1e-8)
    assert np.allclose(self_action(p, inputs.nu, np.zeros(3)), p.k0 * inputs.nu)
