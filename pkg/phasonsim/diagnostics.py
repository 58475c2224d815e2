"""
Energy bookkeeping along trajectories.

The discrete energy

    E = ½ρ‖u_t‖² + ½κ₀‖ν‖² + ½μ‖∇u‖² + ½ζ‖∇ν‖² + ½ξ‖div u‖² + ½γ‖div ν‖²
        + κ⟨∇u, ∇ν⟩ + ξ̄⟨div u, div ν⟩

satisfies, per midpoint step and without body forces,

    E(tⁿ⁺¹) − E(tⁿ) = −dt [ς‖ν_t^½‖² + ε‖∇u_t^½‖² + δ‖∇ν_t^½‖²]

because the gyroscopic term ((curl u_t) × ν_t)·ν_t vanishes pointwise.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from phasonsim import Model

from .grid import (
    VectorField,
    curl,
    divergence,
    gradient,
    inner,
    norm_h1,
    pointwise_cross,
)
from .material import DerivedCoefficients, MaterialParams

if TYPE_CHECKING:
    from .dynamics import FieldState, Trajectory

LOGGER = logging.getLogger(__name__)

# Slack on ratios that equal 1 in exact arithmetic
RATIO_SLACK = 1e-12


@dataclass(frozen=True)
class EnergyReport:
    """
    One value per term of E.  ``dissipated_step`` and ``gyro_power`` are set
    only on reports produced inside a step.
    """

    kinetic: float
    phason_potential: float
    grad_u: float
    grad_nu: float
    div_u: float
    div_nu: float
    cross_grad: float
    cross_div: float
    total: float
    dissipated_step: float = 0.0
    gyro_power: float = 0.0

    @property
    def young_lower_bound(self) -> float:
        """
        Lower bound on ``total`` after absorbing the cross terms with Young's
        inequality; nonnegative whenever μ, ζ > 2κ and ξ, γ > 2ξ̄.
        """
        return (
            self.kinetic
            + self.phason_potential
            + 0.5 * (self.grad_u + self.grad_nu + self.div_u + self.div_nu)
            - abs(self.cross_grad)
            - abs(self.cross_div)
        )


def total_energy(
    state: "FieldState", p: MaterialParams, coeffs: DerivedCoefficients
) -> EnergyReport:
    grad_u = gradient(state.u)
    grad_nu = gradient(state.nu)
    div_u = divergence(state.u)
    div_nu = divergence(state.nu)
    kinetic = 0.5 * p.rho * inner(state.ut, state.ut)
    phason_potential = 0.5 * coeffs.kappa0 * inner(state.nu, state.nu)
    e_grad_u = 0.5 * p.mu * inner(grad_u, grad_u)
    e_grad_nu = 0.5 * coeffs.zeta * inner(grad_nu, grad_nu)
    e_div_u = 0.5 * coeffs.xi * inner(div_u, div_u)
    e_div_nu = 0.5 * coeffs.gamma * inner(div_nu, div_nu)
    cross_grad = coeffs.kappa * inner(grad_u, grad_nu)
    cross_div = coeffs.xibar * inner(div_u, div_nu)
    total = (
        kinetic
        + phason_potential
        + e_grad_u
        + e_grad_nu
        + e_div_u
        + e_div_nu
        + cross_grad
        + cross_div
    )
    return EnergyReport(
        kinetic=kinetic,
        phason_potential=phason_potential,
        grad_u=e_grad_u,
        grad_nu=e_grad_nu,
        div_u=e_div_u,
        div_nu=e_div_nu,
        cross_grad=cross_grad,
        cross_div=cross_div,
        total=total,
    )


@dataclass(frozen=True)
class BalanceReport:
    residuals: tuple[float, ...]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


def energy_balance_residual(traj: "Trajectory") -> BalanceReport:
    """|E(tⁿ⁺¹) − E(tⁿ) + dissipated_step| / max(E(tⁿ), 1) for every step."""
    energies = traj.energies
    residuals = tuple(
        abs(energies[k + 1] - energies[k] + rec.dissipated_step)
        / max(energies[k], 1.0)
        for k, rec in enumerate(traj.records)
    )
    report = BalanceReport(residuals)
    LOGGER.info(f"Energy balance: max residual {report.max_residual:.3e}")
    return report


def gyro_power_scale(ut_half: VectorField, nut_half: VectorField) -> float:
    """‖curl u_t^½‖·‖ν_t^½‖², the scale the gyroscopic power is measured against."""
    c = curl(ut_half)
    return math.sqrt(inner(c, c)) * inner(nut_half, nut_half)


@dataclass(frozen=True)
class BoundReport:
    cbar: float
    lhs: tuple[float, ...]
    ratios: tuple[float, ...]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def violated(self) -> bool:
        return self.max_ratio > 1.0 + RATIO_SLACK


def bound_constant(
    state0: "FieldState", p: MaterialParams, coeffs: DerivedCoefficients
) -> float:
    """
    c̄ = ρ‖u̇₀‖² + κ₀‖ν₀‖² + (μ+|κ|)‖∇u₀‖² + (ζ+|κ|)‖∇ν₀‖² + (ξ+|ξ̄|)‖div u₀‖²
    + (γ+|ξ̄|)‖div ν₀‖², an upper bound of 2E(0) by Young's inequality.
    """
    grad_u = gradient(state0.u)
    grad_nu = gradient(state0.nu)
    div_u = divergence(state0.u)
    div_nu = divergence(state0.nu)
    return (
        p.rho * inner(state0.ut, state0.ut)
        + coeffs.kappa0 * inner(state0.nu, state0.nu)
        + (p.mu + abs(coeffs.kappa)) * inner(grad_u, grad_u)
        + (coeffs.zeta + abs(coeffs.kappa)) * inner(grad_nu, grad_nu)
        + (coeffs.xi + abs(coeffs.xibar)) * inner(div_u, div_u)
        + (coeffs.gamma + abs(coeffs.xibar)) * inner(div_nu, div_nu)
    )


def apriori_bound_monitor(
    traj: "Trajectory",
    p: MaterialParams | None = None,
    coeffs: DerivedCoefficients | None = None,
) -> BoundReport:
    """
    Left-hand side of the a priori estimate at step 0 and after every step,

        ρ‖u_t‖² + κ₀‖ν‖² + ½(μ‖∇u‖² + ζ‖∇ν‖²) + ∫(2ς‖ν_t‖² + ε‖∇u_t‖² + δ‖∇ν_t‖²)

    against c̄ from the initial data.  The time integral uses the midpoint rates,
    the same quadrature as the stepper.  A ratio above 1 is logged, not raised.
    """
    p = p or traj.params
    coeffs = coeffs or traj.coeffs
    cbar = bound_constant(traj.initial_state, p, coeffs)
    dt = traj.cfg.dt

    def instantaneous(e: "EnergyReport") -> float:
        # 2·kinetic = ρ‖u_t‖², 2·phason_potential = κ₀‖ν‖², grad terms are ½μ‖∇u‖²
        return 2.0 * e.kinetic + 2.0 * e.phason_potential + e.grad_u + e.grad_nu

    lhs = [instantaneous(traj.initial_energy)]
    integral = 0.0
    for rec in traj.records:
        grad_v = gradient(rec.ut_half)
        grad_w = gradient(rec.nut_half)
        integral += dt * (
            2.0 * p.varsigma * inner(rec.nut_half, rec.nut_half)
            + p.eps_visc * inner(grad_v, grad_v)
            + p.delta_visc * inner(grad_w, grad_w)
        )
        lhs.append(instantaneous(rec.energy) + integral)
    ratios = tuple(x / cbar if cbar > 0 else 0.0 for x in lhs)
    report = BoundReport(cbar, tuple(lhs), ratios)
    if report.violated:
        LOGGER.warning(
            f"A priori bound exceeded: max LHS/c̄ = {report.max_ratio:.6g} (c̄={cbar:.6g})"
        )
    else:
        LOGGER.info(f"A priori bound holds: max LHS/c̄ = {report.max_ratio:.6g}")
    return report


@dataclass(frozen=True)
class WeakFormReport:
    momentum: tuple[float, ...]
    phason: tuple[float, ...]

    @property
    def max_relative(self) -> float:
        return max(self.momentum + self.phason, default=0.0)


def _relative(terms: list[float]) -> float:
    scale = sum(abs(t) for t in terms)
    return abs(sum(terms)) / scale if scale > 0 else 0.0


def weak_form_residual(
    traj: "Trajectory", tests: Sequence[tuple[VectorField, VectorField]]
) -> WeakFormReport:
    """
    Tests every step against the discrete weak form, for each pair (w, h) of
    test fields (boundary values are ignored and taken as zero).  The residual of
    each equation is reported relative to the sum of its term magnitudes.  Needs
    a trajectory recorded at every step and without body forces.
    """
    if traj.cfg.record_every != 1:
        raise ValueError("weak_form_residual needs record_every = 1")
    p = traj.params
    c = traj.coeffs
    dt = traj.cfg.dt
    zero = np.zeros((3, *traj.grid.node_shape))
    pairs = [(w.with_boundary(zero), h.with_boundary(zero)) for w, h in tests]
    gyroscopic = traj.model == Model.GYRO and p.ell != 0.0
    momentum: list[float] = []
    phason: list[float] = []
    for k, rec in enumerate(traj.records):
        before, after = traj.states[k], traj.states[k + 1]
        u_half = 0.5 * (before.u + after.u)
        nu_half = 0.5 * (before.nu + after.nu)
        accel = (1.0 / dt) * (after.ut - before.ut)
        gu, gn = gradient(u_half), gradient(nu_half)
        du, dn = divergence(u_half), divergence(nu_half)
        gv, gw = gradient(rec.ut_half), gradient(rec.nut_half)
        source = c.kappa0 * nu_half + p.varsigma * rec.nut_half
        if gyroscopic:
            source = source + p.ell * pointwise_cross(curl(rec.ut_half), rec.nut_half)
        for w, h in pairs:
            gwt, dwt = gradient(w), divergence(w)
            ght, dht = gradient(h), divergence(h)
            momentum.append(
                _relative(
                    [
                        p.rho * inner(accel, w),
                        p.mu * inner(gu, gwt),
                        c.kappa * inner(gn, gwt),
                        c.xi * inner(du, dwt),
                        c.xibar * inner(dn, dwt),
                        p.eps_visc * inner(gv, gwt),
                    ]
                )
            )
            phason.append(
                _relative(
                    [
                        inner(source, h),
                        c.zeta * inner(gn, ght),
                        c.kappa * inner(gu, ght),
                        c.gamma * inner(dn, dht),
                        c.xibar * inner(du, dht),
                        p.delta_visc * inner(gw, ght),
                    ]
                )
            )
    report = WeakFormReport(tuple(momentum), tuple(phason))
    LOGGER.info(f"Weak form: max relative residual {report.max_relative:.3e}")
    return report


@dataclass(frozen=True)
class InitialRateReport:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def initial_rate_monitor(
    traj: "Trajectory", p: MaterialParams | None = None
) -> InitialRateReport:
    """
    min(ς/2, δ)·‖ν_t^½‖₁,₂ over the first step against ‖u₀‖₁,₂ + ‖ν₀‖₁,₂.
    The rate ν_t is never data, so its initial bound is only checked after the fact.
    """
    p = p or traj.params
    state0 = traj.initial_state
    rhs = norm_h1(state0.u) + norm_h1(state0.nu)
    if not traj.records:
        return InitialRateReport(0.0, rhs)
    lhs = min(0.5 * p.varsigma, p.delta_visc) * norm_h1(traj.records[0].nut_half)
    report = InitialRateReport(lhs, rhs)
    LOGGER.info(f"Initial phason rate: {lhs:.6g} vs {rhs:.6g}")
    return report
