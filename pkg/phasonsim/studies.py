"""
Study protocols built on repeated runs: the vanishing-viscosity ladder,
manufactured-solution convergence and the uniqueness and superposition checks.

Independent runs of a study execute in a thread pool unless the solver
configuration asks for deterministic execution, in which case they run one
after another.  Each run is deterministic either way.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence, TypeVar

import numpy as np
import sympy

from phasonsim import Model

from .diagnostics import total_energy
from .dynamics import (
    FieldState,
    Forcing,
    SolverConfig,
    Trajectory,
    project_initial_data,
    run,
)
from .errors import ManufacturedSolutionError
from .grid import Grid, VectorField, gradient, inner, norm_l2
from .material import MaterialParams

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _map(fn: Callable[[T], R], items: Sequence[T], deterministic: bool) -> list[R]:
    if deterministic or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor() as pool:
        return list(pool.map(fn, items))


def l2_in_time(
    a: Trajectory, b: Trajectory, field: Callable[[FieldState], VectorField]
) -> float:
    """
    Rectangle-rule L²(0,T; L²) norm of the difference of one field over the
    recorded states, weight dt·record_every.
    """
    if a.state_steps != b.state_steps:
        raise ValueError("trajectories were recorded at different steps")
    weight = a.cfg.dt * a.cfg.record_every
    total = sum(
        weight * norm_l2(field(sa) - field(sb)) ** 2
        for sa, sb in zip(a.states, b.states)
    )
    return math.sqrt(total)


@dataclass(frozen=True)
class LadderRung:
    eps_visc: float
    delta_visc: float
    diff_u: float
    diff_nu: float


@dataclass(frozen=True)
class ConvergenceTable:
    reference: tuple[float, float]
    rungs: tuple[LadderRung, ...]

    def decreasing(self, slack: float = 0.0) -> bool:
        """Every difference at most (1 + slack) times the previous one, for u and ν."""
        for prev, cur in zip(self.rungs, self.rungs[1:]):
            if cur.diff_u > (1.0 + slack) * prev.diff_u:
                return False
            if cur.diff_nu > (1.0 + slack) * prev.diff_nu:
                return False
        return True

    def strictly_decreasing(self) -> bool:
        return all(
            cur.diff_u < prev.diff_u and cur.diff_nu < prev.diff_nu
            for prev, cur in zip(self.rungs, self.rungs[1:])
        )


def viscosity_continuation(
    grid: Grid,
    p: MaterialParams,
    state0: FieldState,
    cfg: SolverConfig,
    ladder: Sequence[tuple[float, float]],
    model: Model | str = Model.LINEAR,
    override_gate: bool = False,
) -> ConvergenceTable:
    """
    Run every (ε, δ) rung and compare it with a reference in the L²-in-time norm.
    The reference is the (0, 0) run when ℓ plays no part (linear model or ℓ = 0);
    otherwise it is the last (finest) rung, which is then dropped from the table.
    """
    model = Model(model)
    if not ladder:
        raise ValueError("the viscosity ladder needs at least one rung")
    gyroscopic = model == Model.GYRO and p.ell != 0.0
    if gyroscopic:
        reference = ladder[-1]
        rungs = list(ladder[:-1])
    else:
        reference = (0.0, 0.0)
        rungs = list(ladder)

    def go(pair: tuple[float, float]) -> Trajectory:
        q = p.replace(eps_visc=pair[0], delta_visc=pair[1])
        LOGGER.info(f"Viscosity rung ε={pair[0]:g}, δ={pair[1]:g}")
        return run(grid, q, state0, cfg, model, override_gate=override_gate)

    trajectories = _map(go, [reference] + rungs, cfg.deterministic)
    base = trajectories[0]
    table = ConvergenceTable(
        reference=reference,
        rungs=tuple(
            LadderRung(
                eps_visc=pair[0],
                delta_visc=pair[1],
                diff_u=l2_in_time(traj, base, lambda s: s.u),
                diff_nu=l2_in_time(traj, base, lambda s: s.nu),
            )
            for pair, traj in zip(rungs, trajectories[1:])
        ),
    )
    for rung in table.rungs:
        LOGGER.info(
            f"ε={rung.eps_visc:g} δ={rung.delta_visc:g}: "
            f"|u diff|={rung.diff_u:.6e} |ν diff|={rung.diff_nu:.6e}"
        )
    if not table.decreasing(0.1):
        LOGGER.warning("Viscosity ladder differences are not decreasing")
    return table


# Manufactured solutions

X = sympy.symbols("x1 x2 x3", real=True)
TIME = sympy.Symbol("t", real=True)

_NON_SMOOTH = (
    sympy.Abs,
    sympy.sign,
    sympy.Heaviside,
    sympy.DiracDelta,
    sympy.Piecewise,
    sympy.Max,
    sympy.Min,
    sympy.floor,
    sympy.ceiling,
)


def _laplacian(f: sympy.Expr, dim: int) -> sympy.Expr:
    return sum((sympy.diff(f, X[a], 2) for a in range(dim)), sympy.Integer(0))


def _grad_div(vec: list[sympy.Expr], dim: int) -> list[sympy.Expr]:
    div = sum((sympy.diff(vec[a], X[a]) for a in range(dim)), sympy.Integer(0))
    return [sympy.diff(div, X[a]) if a < dim else sympy.Integer(0) for a in range(3)]


def _curl(vec: list[sympy.Expr], dim: int) -> list[sympy.Expr]:
    def d(f: sympy.Expr, a: int) -> sympy.Expr:
        return sympy.diff(f, X[a]) if a < dim else sympy.Integer(0)

    return [
        d(vec[2], 1) - d(vec[1], 2),
        d(vec[0], 2) - d(vec[2], 0),
        d(vec[1], 0) - d(vec[0], 1),
    ]


class ManufacturedSolution:
    """
    Exact fields u*(t, x), ν*(t, x) given as sympy expressions (or strings) in
    t, x1, x2, x3, plus the body forces that make them solve the balance
    equations.  Boundary values must not depend on time.
    """

    dim: int
    u: list[sympy.Expr]
    nu: list[sympy.Expr]

    def __init__(
        self,
        u: Sequence[sympy.Expr | str | float],
        nu: Sequence[sympy.Expr | str | float],
        dim: int = 2,
    ) -> None:
        if len(u) != 3 or len(nu) != 3:
            raise ManufacturedSolutionError("u and ν need three components each")
        self.dim = dim
        locals_ = {"t": TIME, "x1": X[0], "x2": X[1], "x3": X[2]}
        try:
            self.u = [sympy.sympify(c, locals=locals_) for c in u]
            self.nu = [sympy.sympify(c, locals=locals_) for c in nu]
        except (sympy.SympifyError, TypeError) as e:
            raise ManufacturedSolutionError(f"cannot parse manufactured field: {e}")
        allowed = {TIME, *X[:dim]}
        for expr in self.u + self.nu:
            if expr.free_symbols - allowed:
                raise ManufacturedSolutionError(
                    f"{expr} depends on {expr.free_symbols - allowed}"
                )
            if expr.has(*_NON_SMOOTH):
                raise ManufacturedSolutionError(f"{expr} is not smooth")

    def forcing_expressions(
        self, p: MaterialParams, model: Model
    ) -> tuple[list[sympy.Expr], list[sympy.Expr]]:
        """f_u and f_ν such that u*, ν* solve the forced equations."""
        mu, rho = p.mu, p.rho
        xi = p.lam + p.mu
        xibar = p.k3 + 0.5 * p.k3p
        zeta = p.k2 + p.k2p
        gamma = p.k1 + p.k2 - p.k2p
        kappa = 0.5 * p.k3p
        u_t = [sympy.diff(c, TIME) for c in self.u]
        nu_t = [sympy.diff(c, TIME) for c in self.nu]
        gd_u = _grad_div(self.u, self.dim)
        gd_nu = _grad_div(self.nu, self.dim)
        f_u = [
            rho * sympy.diff(self.u[i], TIME, 2)
            - mu * _laplacian(self.u[i], self.dim)
            - xi * gd_u[i]
            - kappa * _laplacian(self.nu[i], self.dim)
            - xibar * gd_nu[i]
            - p.eps_visc * _laplacian(u_t[i], self.dim)
            for i in range(3)
        ]
        gyro = [sympy.Integer(0)] * 3
        if model == Model.GYRO and p.ell != 0.0:
            c = _curl(u_t, self.dim)
            gyro = [
                p.ell * (c[1] * nu_t[2] - c[2] * nu_t[1]),
                p.ell * (c[2] * nu_t[0] - c[0] * nu_t[2]),
                p.ell * (c[0] * nu_t[1] - c[1] * nu_t[0]),
            ]
        f_nu = [
            p.varsigma * nu_t[i]
            + gyro[i]
            - zeta * _laplacian(self.nu[i], self.dim)
            - gamma * gd_nu[i]
            + p.k0 * self.nu[i]
            - kappa * _laplacian(self.u[i], self.dim)
            - xibar * gd_u[i]
            - p.delta_visc * _laplacian(nu_t[i], self.dim)
            for i in range(3)
        ]
        return f_u, f_nu

    def _evaluator(
        self, exprs: list[sympy.Expr]
    ) -> Callable[[float, Grid], np.ndarray]:
        fns = [sympy.lambdify((TIME, *X), e, modules="numpy") for e in exprs]

        def evaluate(t: float, grid: Grid) -> np.ndarray:
            coords = list(grid.coordinates())
            while len(coords) < 3:
                coords.append(np.zeros(grid.node_shape))
            out = np.empty((3, *grid.node_shape))
            for i, fn in enumerate(fns):
                out[i] = np.broadcast_to(fn(t, *coords), grid.node_shape)
            return out

        return evaluate

    def fields(self) -> tuple[Callable, Callable, Callable]:
        """Evaluators (t, grid) -> (3, *node_shape) for u*, ∂ₜu*, ν*."""
        u_t = [sympy.diff(c, TIME) for c in self.u]
        return self._evaluator(self.u), self._evaluator(u_t), self._evaluator(self.nu)

    def forcing(self, p: MaterialParams, model: Model, grid: Grid) -> Forcing | None:
        f_u, f_nu = self.forcing_expressions(p, model)
        zero = all(sympy.simplify(e) == 0 for e in f_u + f_nu)
        if zero:
            return None
        eval_u = self._evaluator(f_u)
        eval_nu = self._evaluator(f_nu)
        return lambda t: (eval_u(t, grid), eval_nu(t, grid))


@dataclass(frozen=True)
class MmsRung:
    h: float
    dt: float
    err_u: float
    err_nu: float


@dataclass(frozen=True)
class OrdersTable:
    rungs: tuple[MmsRung, ...]

    def _order(self, errors: list[float]) -> float:
        hs = [r.h for r in self.rungs]
        if len(hs) < 2 or min(errors) <= 0.0:
            return math.nan
        slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
        return float(-slope)

    @property
    def order_u(self) -> float:
        return self._order([r.err_u for r in self.rungs])

    @property
    def order_nu(self) -> float:
        return self._order([r.err_nu for r in self.rungs])


def mms_convergence(
    p: MaterialParams,
    solution: ManufacturedSolution,
    ladder: Sequence[int],
    t_end: float,
    dt_per_h: float = 0.5,
    extent: float = 1.0,
    model: Model | str = Model.LINEAR,
    cfg: SolverConfig | None = None,
    override_gate: bool = False,
) -> OrdersTable:
    """
    Solve the forced problem on grids with ``n`` interior nodes per axis for each
    ``n`` in ``ladder`` and dt = dt_per_h·h, and report interior L² errors at
    ``t_end``.  The observed order is the negated least-squares slope of
    log(error) against log(h).
    """
    model = Model(model)
    eval_u, eval_ut, eval_nu = solution.fields()

    def go(n: int) -> MmsRung:
        geometry = Grid.uniform(solution.dim, n, extent)
        h = geometry.h[0]
        u0, nu0 = eval_u(0.0, geometry), eval_nu(0.0, geometry)
        mask = geometry.boundary_mask
        u_end, nu_end = eval_u(t_end, geometry), eval_nu(t_end, geometry)
        if not (
            np.allclose(u_end[:, mask], u0[:, mask], rtol=0, atol=1e-12)
            and np.allclose(nu_end[:, mask], nu0[:, mask], rtol=0, atol=1e-12)
        ):
            raise ManufacturedSolutionError("boundary values must not depend on time")
        grid = geometry.with_boundary(u0, nu0)
        state0 = project_initial_data(grid, u0, eval_ut(0.0, grid), nu0)
        dt = dt_per_h * h
        steps = max(1, round(t_end / dt))
        base = cfg or SolverConfig(dt=t_end / steps, t_end=t_end)
        rung_cfg = replace(base, dt=t_end / steps, t_end=t_end, record_every=steps)
        traj = run(
            grid,
            p,
            state0,
            rung_cfg,
            model,
            forcing=solution.forcing(p, model, grid),
            override_gate=override_gate,
        )
        final = traj.final_state
        exact_u = VectorField(grid, eval_u(final.t, grid))
        exact_nu = VectorField(grid, eval_nu(final.t, grid))
        rung = MmsRung(
            h=h,
            dt=rung_cfg.dt,
            err_u=norm_l2(final.u - exact_u),
            err_nu=norm_l2(final.nu - exact_nu),
        )
        LOGGER.info(
            f"MMS h={h:.4g}: |u err|={rung.err_u:.3e} |ν err|={rung.err_nu:.3e}"
        )
        return rung

    deterministic = cfg.deterministic if cfg is not None else True
    table = OrdersTable(tuple(_map(go, list(ladder), deterministic)))
    LOGGER.info(f"MMS orders: u {table.order_u:.3f}, ν {table.order_nu:.3f}")
    return table


# Uniqueness


@dataclass(frozen=True)
class DifferenceReport:
    """Difference of two linear trajectories and its energy ledger."""

    energies: tuple[float, ...]
    ledger_residuals: tuple[float, ...]
    max_abs_difference: float

    @property
    def identical(self) -> bool:
        return self.max_abs_difference == 0.0

    @property
    def max_ledger_residual(self) -> float:
        return max(self.ledger_residuals, default=0.0)

    def energy_non_increasing(self, slack: float = 1e-12) -> bool:
        return all(
            b <= a + slack * max(a, 1.0)
            for a, b in zip(self.energies, self.energies[1:])
        )


def _zero_boundary_state(state: FieldState, grid: Grid) -> FieldState:
    return FieldState(
        state.t,
        VectorField(grid, state.u.values),
        VectorField(grid, state.ut.values),
        VectorField(grid, state.nu.values),
    )


def uniqueness_check(
    grid: Grid,
    p: MaterialParams,
    state_a: FieldState,
    state_b: FieldState,
    cfg: SolverConfig,
    override_gate: bool = False,
) -> DifferenceReport:
    """
    Run the linear model from two initial states and check that their difference
    obeys the dissipation identity of the homogeneous system:

        E_d(tⁿ⁺¹) − E_d(tⁿ) = −dt [ς‖Δν_t^½‖² + ε‖∇Δu_t^½‖² + δ‖∇Δν_t^½‖²]

    with E_d the energy of the difference.  Needs record_every = 1.
    """
    if cfg.record_every != 1:
        raise ValueError("uniqueness_check needs record_every = 1")
    traj_a, traj_b = _map(
        lambda s: run(grid, p, s, cfg, Model.LINEAR, override_gate=override_gate),
        [state_a, state_b],
        cfg.deterministic,
    )
    zero_grid = grid.with_zero_boundary()
    coeffs = traj_a.coeffs
    energies = []
    max_abs = 0.0
    for sa, sb in zip(traj_a.states, traj_b.states):
        diff = _zero_boundary_state(sa - sb, zero_grid)
        energies.append(total_energy(diff, p, coeffs).total)
        max_abs = max(
            max_abs,
            float(
                max(
                    np.max(np.abs(diff.u.values)),
                    np.max(np.abs(diff.ut.values)),
                    np.max(np.abs(diff.nu.values)),
                )
            ),
        )
    residuals = []
    for k, (ra, rb) in enumerate(zip(traj_a.records, traj_b.records)):
        v = ra.ut_half - rb.ut_half
        w = ra.nut_half - rb.nut_half
        dissipated = cfg.dt * (
            p.varsigma * inner(w, w)
            + p.eps_visc * inner(gradient(v), gradient(v))
            + p.delta_visc * inner(gradient(w), gradient(w))
        )
        residuals.append(
            abs(energies[k + 1] - energies[k] + dissipated) / max(energies[k], 1.0)
        )
    report = DifferenceReport(tuple(energies), tuple(residuals), max_abs)
    LOGGER.info(
        f"Uniqueness check: max |difference| {max_abs:.3e}, "
        f"ledger residual {report.max_ledger_residual:.3e}"
    )
    return report


def superposition_error(
    grid: Grid,
    p: MaterialParams,
    state_a: FieldState,
    state_b: FieldState,
    cfg: SolverConfig,
    override_gate: bool = False,
) -> float:
    """
    max over recorded states of |traj(a) − traj(b) − traj(a − b)| relative to the
    largest entry of traj(a − b); traj(a − b) runs with homogeneous boundary data.
    """
    zero_grid = grid.with_zero_boundary()
    diff0 = _zero_boundary_state(state_a - state_b, zero_grid)
    traj_a, traj_b, traj_d = _map(
        lambda job: run(
            job[0], p, job[1], cfg, Model.LINEAR, override_gate=override_gate
        ),
        [(grid, state_a), (grid, state_b), (zero_grid, diff0)],
        cfg.deterministic,
    )
    worst = 0.0
    scale = 0.0
    for sa, sb, sd in zip(traj_a.states, traj_b.states, traj_d.states):
        triples = ((sa.u, sb.u, sd.u), (sa.ut, sb.ut, sd.ut), (sa.nu, sb.nu, sd.nu))
        for fa, fb, fd in triples:
            worst = max(worst, float(np.max(np.abs(fa.values - fb.values - fd.values))))
            scale = max(scale, float(np.max(np.abs(fd.values))))
    error = worst / scale if scale > 0 else worst
    LOGGER.info(f"Superposition error {error:.3e}")
    return error
