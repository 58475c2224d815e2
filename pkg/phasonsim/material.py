"""
Constitutive constants and pointwise constitutive maps for a homogeneous,
isotropic quasicrystal in the small-strain, phason-locked regime.

The free energy is quadratic in the small strain ε = Sym∇u, the phason gradient
N = ∇ν and the phason field ν.  Stresses and the phason self-action are its
derivatives, plus optional viscous parts linear in the rates.

Two names clash with the usual notation: the Lamé modulus λ is ``lam`` (``lambda``
is a Python keyword; the config key stays ``material.lambda``), and the viscous
regularizer ε is ``eps_visc`` so it cannot be confused with the strain
``eps_strain``.
"""

import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np
import numpy.typing as npt

from phasonsim import MARGINAL_TOL, SYMMETRY_TOL, AdmissibilityMode

from .errors import AsymmetricStrainError, IncompleteInputError

LOGGER = logging.getLogger(__name__)

IDENTITY = np.eye(3)

Tensor = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]


@dataclass(frozen=True)
class MaterialParams:
    """Raw physical constants.  Units are whatever the caller uses, consistently."""

    lam: float = 0.0
    mu: float = 1.0
    k0: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    k2p: float = 0.0
    k3: float = 0.0
    k3p: float = 0.0
    rho: float = 1.0
    varsigma: float = 1.0
    ell: float = 0.0
    eps_visc: float = 0.0
    delta_visc: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, not {value}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, not {self.rho}")
        if self.varsigma <= 0:
            raise ValueError(f"varsigma must be > 0, not {self.varsigma}")
        for name in ("ell", "eps_visc", "delta_visc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, not {getattr(self, name)}")

    def replace(self, **changes: float) -> "MaterialParams":
        """Return a copy with some constants changed."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return MaterialParams(**values)


@dataclass(frozen=True)
class DerivedCoefficients:
    """The reduced constants that appear in the balance equations."""

    xi: float
    xibar: float
    zeta: float
    gamma: float
    kappa: float
    kappa0: float


@dataclass(frozen=True)
class SmallStrainInputs:
    """Pointwise state (and optionally rates) fed to the constitutive maps."""

    eps_strain: Tensor
    N: Tensor
    nu: Vector
    grad_ut: Tensor | None = None
    grad_nut: Tensor | None = None
    nu_t: Vector | None = None


@dataclass(frozen=True)
class Violation:
    """One inequality that does not hold (or holds only marginally)."""

    name: str
    lhs: float
    rhs: float
    marginal: bool = False

    def __str__(self) -> str:
        flag = " (marginal)" if self.marginal else ""
        return f"{self.name}: {self.lhs:.6g} vs {self.rhs:.6g}{flag}"


@dataclass
class AdmissibilityReport:
    """Outcome of checking a parameter set against one inequality set."""

    mode: AdmissibilityMode
    violations: list[Violation] = field(default_factory=list)
    marginal: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def violated_names(self) -> list[str]:
        return [v.name for v in self.violations]

    def __str__(self) -> str:
        if self.passed:
            status = "pass"
        else:
            status = "fail [" + "; ".join(str(v) for v in self.violations) + "]"
        if self.marginal:
            status += " marginal [" + "; ".join(str(v) for v in self.marginal) + "]"
        return f"{self.mode}: {status}"


def derive_coefficients(p: MaterialParams) -> DerivedCoefficients:
    """Reduced constants ξ, ξ̄, ζ, γ, κ, κ₀ of the balance equations."""
    return DerivedCoefficients(
        xi=p.lam + p.mu,
        xibar=p.k3 + 0.5 * p.k3p,
        zeta=p.k2 + p.k2p,
        gamma=p.k1 + p.k2 - p.k2p,
        kappa=0.5 * p.k3p,
        kappa0=p.k0,
    )


def _is_marginal(a: float, b: float) -> bool:
    return abs(a - b) < MARGINAL_TOL * max(abs(a), abs(b), 1.0)


class _Checker:
    """Collects named inequality outcomes into a report."""

    def __init__(self, mode: AdmissibilityMode) -> None:
        self.report = AdmissibilityReport(mode)

    def strict(self, name: str, lhs: float, rhs: float) -> None:
        # Open conditions: a > b in floating point, no tolerance.
        if not lhs > rhs:
            self.report.violations.append(
                Violation(name, lhs, rhs, marginal=_is_marginal(lhs, rhs))
            )

    def weak(self, name: str, lhs: float, rhs: float) -> None:
        if not lhs >= rhs:
            self.report.violations.append(
                Violation(name, lhs, rhs, marginal=_is_marginal(lhs, rhs))
            )
        elif _is_marginal(lhs, rhs):
            self.report.marginal.append(Violation(name, lhs, rhs, marginal=True))


def check_admissibility(
    p: MaterialParams, mode: AdmissibilityMode | str
) -> AdmissibilityReport:
    """
    Check the constants against an inequality set.  Violations are reported by
    name, never raised.

    Energy mode holds the classical list (μ>0, λ+μ>0, k₁>0, k₁>|k₂|,
    |k₃|<√(½μ(k₁+k₂)), k₀≥0) plus the conditions under which the implemented
    quadratic energy is actually nonnegative.  The classical list alone does
    not constrain k₂′ or k₃′.  Splitting ε = ε_d + (e/3)I and SymN = S_d + (n/3)I
    into deviatoric parts and traces e = tr ε, n = tr N, with W = SkwN, gives

        ψ − ½k₀|ν|² = μ|ε_d|² + k₃′ ε_d·S_d + k₂|S_d|²          (deviatoric)
                    + k₂′|W|²                                  (skew)
                    + [(3λ+2μ)e² + 2(3k₃+k₃′)en + (3k₁+2k₂)n²]/6 (volumetric)

    and ψ ≥ 0 exactly when each block is positive semidefinite:

    * deviatoric: μ ≥ 0, k₂ ≥ 0 and 4μk₂ ≥ (k₃′)²
    * skew: k₂′ ≥ 0
    * volumetric: 3λ+2μ ≥ 0, 3k₁+2k₂ ≥ 0 and (3λ+2μ)(3k₁+2k₂) ≥ (3k₃+k₃′)²

    μ ≥ 0 is implied by μ > 0, so six conditions are added, checked as weak
    inequalities.

    The theorem modes hold the hypotheses of the existence results: μ>−λ, κ>0,
    ξ̄>0, μ,ζ>2κ, ξ,γ>2ξ̄.  k₀ = 0 is allowed there but reported as marginal.
    """
    mode = AdmissibilityMode(mode)
    check = _Checker(mode)
    if mode == AdmissibilityMode.ENERGY:
        check.strict("μ>0", p.mu, 0.0)
        check.strict("λ+μ>0", p.lam + p.mu, 0.0)
        check.strict("k₁>0", p.k1, 0.0)
        check.strict("k₁>|k₂|", p.k1, abs(p.k2))
        check.strict(
            "|k₃|<√(½μ(k₁+k₂))",
            math.sqrt(max(0.5 * p.mu * (p.k1 + p.k2), 0.0)),
            abs(p.k3),
        )
        check.weak("k₀≥0", p.k0, 0.0)
        check.weak("k₂≥0", p.k2, 0.0)
        check.weak("k₂′≥0", p.k2p, 0.0)
        check.weak("4μk₂≥(k₃′)²", 4.0 * p.mu * p.k2, p.k3p**2)
        check.weak("3λ+2μ≥0", 3.0 * p.lam + 2.0 * p.mu, 0.0)
        check.weak("3k₁+2k₂≥0", 3.0 * p.k1 + 2.0 * p.k2, 0.0)
        check.weak(
            "(3λ+2μ)(3k₁+2k₂)≥(3k₃+k₃′)²",
            (3.0 * p.lam + 2.0 * p.mu) * (3.0 * p.k1 + 2.0 * p.k2),
            (3.0 * p.k3 + p.k3p) ** 2,
        )
    else:
        c = derive_coefficients(p)
        check.strict("μ>−λ", p.mu, -p.lam)
        check.strict("κ>0", c.kappa, 0.0)
        check.strict("ξ̄>0", c.xibar, 0.0)
        check.strict("μ,ζ>2κ", min(p.mu, c.zeta), 2.0 * c.kappa)
        check.strict("ξ,γ>2ξ̄", min(c.xi, c.gamma), 2.0 * c.xibar)
        check.weak("κ₀≥0", c.kappa0, 0.0)
    if check.report.marginal:
        LOGGER.warning(f"Marginal admissibility: {check.report}")
    return check.report


def _sym(a: Tensor) -> Tensor:
    return 0.5 * (a + a.T)


def _skw(a: Tensor) -> Tensor:
    return 0.5 * (a - a.T)


def symmetrized_strain(eps_strain: Tensor) -> Tensor:
    """
    Return the strain with its round-off asymmetry removed.  Asymmetry beyond
    1e-12 (relative to the largest entry, floored at 1) is rejected.
    """
    eps_strain = np.asarray(eps_strain, dtype=float)
    if eps_strain.shape != (3, 3):
        raise ValueError(f"strain must be 3x3, not {eps_strain.shape}")
    asym = float(np.max(np.abs(_skw(eps_strain))))
    scale = max(float(np.max(np.abs(eps_strain))), 1.0)
    if asym > SYMMETRY_TOL * scale:
        raise AsymmetricStrainError(
            f"strain asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}; "
            "pass Sym(grad u), not grad u"
        )
    return _sym(eps_strain)


def energy_density(p: MaterialParams, s: SmallStrainInputs) -> float:
    """Free energy per unit volume ψ(ε, N, ν)."""
    eps = symmetrized_strain(s.eps_strain)
    n_grad = np.asarray(s.N, dtype=float)
    nu = np.asarray(s.nu, dtype=float)
    tr_eps = float(np.trace(eps))
    tr_n = float(np.trace(n_grad))
    sym_n = _sym(n_grad)
    skw_n = _skw(n_grad)
    return float(
        0.5 * p.lam * tr_eps**2
        + p.mu * np.sum(eps * eps)
        + 0.5 * p.k1 * tr_n**2
        + p.k2 * np.sum(sym_n * sym_n)
        + p.k2p * np.sum(skw_n * skw_n)
        + p.k3 * tr_eps * tr_n
        + p.k3p * np.sum(sym_n * eps)
        + 0.5 * p.k0 * np.dot(nu, nu)
    )


def stress_sigma(
    p: MaterialParams, s: SmallStrainInputs, dissipative: bool = False
) -> Tensor:
    """
    Cauchy stress σ.  The viscous part ε_visc·∇u_t is added whenever ∇u_t is
    supplied; asking for a dissipative evaluation without it is an error when
    ε_visc > 0.
    """
    eps = symmetrized_strain(s.eps_strain)
    n_grad = np.asarray(s.N, dtype=float)
    sigma = (
        p.lam * np.trace(eps) * IDENTITY
        + 2.0 * p.mu * eps
        + p.k3 * np.trace(n_grad) * IDENTITY
        + p.k3p * _sym(n_grad)
    )
    if s.grad_ut is not None:
        sigma = sigma + p.eps_visc * np.asarray(s.grad_ut, dtype=float)
    elif dissipative and p.eps_visc > 0:
        raise IncompleteInputError("dissipative stress needs grad_ut when eps_visc > 0")
    return sigma


def phason_stress(
    p: MaterialParams, s: SmallStrainInputs, dissipative: bool = False
) -> Tensor:
    """Phason stress 𝒮ₐ, conjugate to ∇ν; viscous part δ·∇ν_t as for σ."""
    eps = symmetrized_strain(s.eps_strain)
    n_grad = np.asarray(s.N, dtype=float)
    stress = (
        p.k1 * np.trace(n_grad) * IDENTITY
        + 2.0 * p.k2 * _sym(n_grad)
        + 2.0 * p.k2p * _skw(n_grad)
        + p.k3 * np.trace(eps) * IDENTITY
        + p.k3p * eps
    )
    if s.grad_nut is not None:
        stress = stress + p.delta_visc * np.asarray(s.grad_nut, dtype=float)
    elif dissipative and p.delta_visc > 0:
        raise IncompleteInputError(
            "dissipative phason stress needs grad_nut when delta_visc > 0"
        )
    return stress


def self_action(p: MaterialParams, nu: Vector, nu_t: Vector) -> Vector:
    """Phason self-action zₐ = k₀ν + ςν_t."""
    return p.k0 * np.asarray(nu, dtype=float) + p.varsigma * np.asarray(
        nu_t, dtype=float
    )


def dissipation_power(
    p: MaterialParams, grad_ut: Tensor, nu_t: Vector, grad_nut: Tensor
) -> float:
    """
    Viscous power ε|∇u_t|² + ς|ν_t|² + δ|∇ν_t|², the dissipative part of
    σ·∇u_t + zₐ·ν_t + 𝒮ₐ·∇ν_t.  Nonnegative for admissible constants.
    """
    grad_ut = np.asarray(grad_ut, dtype=float)
    grad_nut = np.asarray(grad_nut, dtype=float)
    nu_t = np.asarray(nu_t, dtype=float)
    return float(
        p.eps_visc * np.sum(grad_ut * grad_ut)
        + p.varsigma * np.dot(nu_t, nu_t)
        + p.delta_visc * np.sum(grad_nut * grad_nut)
    )


def _sym_basis() -> list[Tensor]:
    """Orthonormal basis of symmetric 3x3 tensors (6 elements)."""
    basis = []
    for i in range(3):
        e = np.zeros((3, 3))
        e[i, i] = 1.0
        basis.append(e)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        e = np.zeros((3, 3))
        e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
        basis.append(e)
    return basis


def _full_basis() -> list[Tensor]:
    basis = []
    for i in range(3):
        for j in range(3):
            e = np.zeros((3, 3))
            e[i, j] = 1.0
            basis.append(e)
    return basis


def quadratic_form_matrix(p: MaterialParams) -> npt.NDArray[np.float64]:
    """
    Matrix H of the strain/phason-gradient part of ψ, so that ψ = ½xᵀHx + ½k₀|ν|²
    with x the coordinates of (ε, N) in an orthonormal basis: 6 for symmetric ε,
    9 for N.  Built by polarization of ψ itself.
    """
    zero_t = np.zeros((3, 3))
    zero_v = np.zeros(3)
    elements = [(e, zero_t) for e in _sym_basis()] + [
        (zero_t, n) for n in _full_basis()
    ]

    def psi(eps: Tensor, n_grad: Tensor) -> float:
        return energy_density(p, SmallStrainInputs(eps, n_grad, zero_v))

    size = len(elements)
    h = np.zeros((size, size))
    for a in range(size):
        ea, na = elements[a]
        h[a, a] = 2.0 * psi(ea, na)
        for b in range(a + 1, size):
            eb, nb = elements[b]
            value = psi(ea + eb, na + nb) - psi(ea, na) - psi(eb, nb)
            h[a, b] = h[b, a] = value
    return h
