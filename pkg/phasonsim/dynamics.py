"""
Time stepping of the coupled displacement / phason system.

The displacement u obeys a damped wave equation and the phason field ν a
diffusion equation; they couple through κ∇²  and ξ̄∇div terms:

    ρ u_tt = μΔu + ξ∇div u + κΔν + ξ̄∇div ν + εΔu_t
    ς ν_t + ℓ (curl u_t) × ν_t = ζΔν + γ∇div ν − κ₀ν + κΔu + ξ̄∇div u + δΔν_t

with time-independent Dirichlet data on u and ν.  The gyroscopic term
ℓ (curl u_t) × ν_t models the local spin of the deformation rotating the
quasi-periodic structure; being a cross product with ν_t it does no work on
ν_t, so it changes the dynamics but not the energy balance.

The scheme is the implicit midpoint rule.  With v = u_t^½ and w = ν_t^½ as
unknowns (both zero on the boundary) each step solves

    [ρI − aL_uu − bR_u      −aL_cross        ] [v]   [ρu_tⁿ + b(L_uu uⁿ + L_cross νⁿ + f_u)        ]
    [−aL_cross              bςI − aL_nn − bR_n] [w] = [b(L_nn νⁿ + L_cross uⁿ + f_ν) − bℓ c × w' ]

with a = dt²/4, b = dt/2 and c = curl v'.  The matrix is symmetric, so it is
solved with MINRES (or CG).  With the gyroscopic term lagged at w' = 0 that
solve is the predictor; the fixed point (v', w') = (v, w) is then reached by
Newton's method on the full midpoint system, whose Jacobian adds the sparse
blocks bℓ(c × ·) and −bℓ(w × curl ·) to the w rows.  Midpoint conserves
every quadratic invariant of the conservative part exactly, which turns the
energy identity into a round-off level check.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import numpy.typing as npt
import scipy.sparse as sparse
from scipy.sparse.linalg import LinearOperator, cg, gmres, minres, spilu, splu

from phasonsim import (
    DEFAULT_DETERMINISTIC,
    DEFAULT_KRYLOV_MAX,
    DEFAULT_KRYLOV_TOL,
    DEFAULT_LINEAR_SOLVER,
    DEFAULT_PICARD_MAX,
    DEFAULT_PICARD_TOL,
    DEFAULT_RECORD_EVERY,
    DIRECT_SOLVE_MAX_NODES,
    AdmissibilityMode,
    LinearSolver,
    Model,
)

from . import diagnostics
from .errors import (
    GateError,
    GridMismatchError,
    KrylovConvergenceError,
    NumericalError,
    PicardConvergenceError,
    StepFailure,
)
from .grid import (
    Grid,
    VectorField,
    cross_matrix,
    curl,
    curl_matrix,
    grad_div_matrix,
    gradient,
    inner,
    interior_rows,
    max_norm,
    norm_h1,
    norm_l2,
    pack_all,
    pack_interior,
    pointwise_cross,
    unpack_interior,
    vec_laplacian_matrix,
)
from .material import (
    AdmissibilityReport,
    DerivedCoefficients,
    MaterialParams,
    check_admissibility,
    derive_coefficients,
)
from .profiles import ProfileSpec, sample

LOGGER = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

# Body forces at a given time: full node arrays (3, *node_shape) for u and ν,
# or None where there is no force.
Forcing = Callable[[float], tuple[Array | None, Array | None]]


@dataclass(frozen=True)
class FieldState:
    """u and ν carry the Dirichlet data on the boundary; u_t is zero there."""

    t: float
    u: VectorField
    ut: VectorField
    nu: VectorField

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.ut.is_finite() and self.nu.is_finite()

    def __sub__(self, other: "FieldState") -> "FieldState":
        return FieldState(
            self.t, self.u - other.u, self.ut - other.ut, self.nu - other.nu
        )


@dataclass(frozen=True)
class SolverConfig:
    """
    Time step, end time and solver controls.  A run takes ``n_steps`` steps of
    exactly ``dt``; when ``t_end`` is not a multiple of ``dt`` the last state is at
    ``n_steps * dt``, up to one step past ``t_end``.  ``picard_tol`` bounds the
    residual of the gyroscopic iteration relative to the size of the system.
    """

    dt: float
    t_end: float
    picard_tol: float = DEFAULT_PICARD_TOL
    picard_max: int = DEFAULT_PICARD_MAX
    krylov_tol: float = DEFAULT_KRYLOV_TOL
    krylov_max: int = DEFAULT_KRYLOV_MAX
    deterministic: bool = DEFAULT_DETERMINISTIC
    record_every: int = DEFAULT_RECORD_EVERY
    linear_solver: LinearSolver = DEFAULT_LINEAR_SOLVER

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, not {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, not {self.t_end}")
        if not self.picard_tol > 0 or not self.krylov_tol > 0:
            raise ValueError("tolerances must be > 0")
        if self.picard_max < 1 or self.krylov_max < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, not {self.record_every}")

    @property
    def n_steps(self) -> int:
        # t_end that is a multiple of dt up to round-off does not gain a step
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True)
class DiscreteOperators:
    """
    Sparse maps with interior rows and all-node columns (component-major), so
    applying them to a full state includes the boundary data.  The ``*_ii``
    properties give the symmetric interior blocks acting on zero-boundary fields.
    """

    grid: Grid
    L_uu: sparse.csr_matrix
    L_cross: sparse.csr_matrix
    L_nn: sparse.csr_matrix
    R_u: sparse.csr_matrix
    R_n: sparse.csr_matrix

    def interior_block(self, name: str) -> sparse.csr_matrix:
        matrix = getattr(self, name)
        return sparse.csr_matrix(matrix[:, interior_rows(self.grid)])

    def apply(self, name: str, f: VectorField) -> VectorField:
        """Operator applied to a full field; result is zero on the boundary."""
        if not f.grid.matches(self.grid):
            raise GridMismatchError(f"field on {f.grid}, operators on {self.grid}")
        return unpack_interior(self.grid, getattr(self, name) @ pack_all(f))


OPERATOR_NAMES = ("L_uu", "L_cross", "L_nn", "R_u", "R_n")


def assemble_operators(
    grid: Grid, coeffs: DerivedCoefficients, p: MaterialParams
) -> DiscreteOperators:
    lap = vec_laplacian_matrix(grid)
    gd = grad_div_matrix(grid)
    nodes = int(np.prod(grid.node_shape))
    restrict = sparse.eye(3 * nodes, format="csr")[interior_rows(grid), :]
    ops = DiscreteOperators(
        grid=grid,
        L_uu=sparse.csr_matrix(p.mu * lap + coeffs.xi * gd),
        L_cross=sparse.csr_matrix(coeffs.kappa * lap + coeffs.xibar * gd),
        L_nn=sparse.csr_matrix(
            coeffs.zeta * lap + coeffs.gamma * gd - coeffs.kappa0 * restrict
        ),
        R_u=sparse.csr_matrix(p.eps_visc * lap),
        R_n=sparse.csr_matrix(p.delta_visc * lap),
    )
    LOGGER.debug(f"Assembled operators on {grid}: {3 * grid.interior_count} rows each")
    return ops


def dense_operator_matrix(ops: DiscreteOperators, name: str) -> Array:
    """Dense interior block of one assembled operator, for small-grid oracles."""
    if name not in OPERATOR_NAMES:
        raise ValueError(f"unknown operator {name}, expected one of {OPERATOR_NAMES}")
    if ops.grid.interior_count > DIRECT_SOLVE_MAX_NODES:
        raise ValueError(
            f"dense matrices are limited to {DIRECT_SOLVE_MAX_NODES} interior nodes"
        )
    return ops.interior_block(name).toarray()


@dataclass(frozen=True)
class GateReport:
    model: Model
    admissibility: AdmissibilityReport
    h1_u0: float
    l2_dot_u0: float
    h1_nu0: float
    h1_dot_u0: float
    smallness_lhs: float | None = None
    smallness_rhs: float | None = None

    @property
    def data_finite(self) -> bool:
        return all(
            math.isfinite(x)
            for x in (self.h1_u0, self.l2_dot_u0, self.h1_nu0, self.h1_dot_u0)
        )

    @property
    def smallness_holds(self) -> bool:
        if self.smallness_lhs is None or self.smallness_rhs is None:
            return True
        return self.smallness_lhs < self.smallness_rhs

    @property
    def passed(self) -> bool:
        return self.admissibility.passed and self.data_finite and self.smallness_holds

    @property
    def failures(self) -> list[str]:
        out = list(self.admissibility.violated_names)
        if not self.data_finite:
            out.append("finite initial data")
        if not self.smallness_holds:
            out.append(
                f"ℓ‖u̇₀‖₁,₂<ς/2 ({self.smallness_lhs:.6g} ≥ {self.smallness_rhs:.6g})"
            )
        return out

    def __str__(self) -> str:
        if self.passed:
            return f"{self.model} gate passed"
        return f"{self.model} gate failed: {', '.join(self.failures)}"


def check_theorem_hypotheses(
    p: MaterialParams, grid: Grid, state0: FieldState, mode: Model | str
) -> GateReport:
    """
    Linear mode: theorem admissibility of the constants and finite initial norms.
    Gyro mode additionally requires ℓ·‖u̇₀‖₁,₂ < ς/2; both sides are reported.
    """
    mode = Model(mode)
    if not state0.grid.matches(grid):
        raise GridMismatchError(f"initial state on {state0.grid}, run on {grid}")
    adm_mode = (
        AdmissibilityMode.THEOREM_GYRO
        if mode == Model.GYRO
        else AdmissibilityMode.THEOREM_LINEAR
    )
    h1_dot_u0 = norm_h1(state0.ut)
    report = GateReport(
        model=mode,
        admissibility=check_admissibility(p, adm_mode),
        h1_u0=norm_h1(state0.u),
        l2_dot_u0=norm_l2(state0.ut),
        h1_nu0=norm_h1(state0.nu),
        h1_dot_u0=h1_dot_u0,
        smallness_lhs=p.ell * h1_dot_u0 if mode == Model.GYRO else None,
        smallness_rhs=0.5 * p.varsigma if mode == Model.GYRO else None,
    )
    LOGGER.info(str(report))
    return report


FieldInput = ProfileSpec | VectorField | Array


def _as_values(grid: Grid, data: FieldInput, name: str) -> Array:
    if isinstance(data, ProfileSpec):
        return sample(grid, data)
    if isinstance(data, VectorField):
        if not data.grid.matches(grid):
            raise GridMismatchError(f"{name} lives on {data.grid}, not {grid}")
        return data.values.copy()
    values = np.asarray(data, dtype=float)
    if values.shape != (3, *grid.node_shape):
        raise GridMismatchError(
            f"{name} must have shape {(3, *grid.node_shape)}, not {values.shape}"
        )
    return values.copy()


def project_initial_data(
    grid: Grid, u0: FieldInput, dot_u0: FieldInput, nu0: FieldInput
) -> FieldState:
    """
    Sample the initial data at the nodes and overwrite boundary nodes with the
    Dirichlet data (u̇₀ is zeroed there).
    """
    u = VectorField(grid, _as_values(grid, u0, "u0")).with_boundary(grid.bc_u)
    ut = VectorField(grid, _as_values(grid, dot_u0, "dot_u0")).with_boundary(
        np.zeros((3, *grid.node_shape))
    )
    nu = VectorField(grid, _as_values(grid, nu0, "nu0")).with_boundary(grid.bc_nu)
    return FieldState(0.0, u, ut, nu)


@dataclass(frozen=True)
class StepInfo:
    """Midpoint rates and solver effort of one step."""

    ut_half: VectorField
    nut_half: VectorField
    picard_iterations: int
    krylov_iterations: int
    gyro_power: float


# Round-off floor of the gyroscopic residual test, relative to the system size
RESIDUAL_FLOOR = 100.0 * float(np.finfo(float).eps)


class MidpointStepper:
    """
    Holds the step matrix (it depends on dt and the constants only) and advances
    states one step at a time.
    """

    ops: DiscreteOperators
    p: MaterialParams
    cfg: SolverConfig
    model: Model
    forcing: Forcing | None

    def __init__(
        self,
        ops: DiscreteOperators,
        p: MaterialParams,
        cfg: SolverConfig,
        model: Model | str = Model.LINEAR,
        forcing: Forcing | None = None,
    ) -> None:
        self.ops = ops
        self.p = p
        self.cfg = cfg
        self.model = Model(model)
        self.forcing = forcing
        self.grid = ops.grid
        self.size = 3 * self.grid.interior_count
        self.rows = interior_rows(self.grid)
        dt = cfg.dt
        a = 0.25 * dt * dt
        b = 0.5 * dt
        self.b = b
        eye = sparse.eye(self.size, format="csr")
        blk = ops.interior_block
        self.matrix = sparse.bmat(
            [
                [p.rho * eye - a * blk("L_uu") - b * blk("R_u"), -a * blk("L_cross")],
                [
                    -a * blk("L_cross"),
                    b * p.varsigma * eye - a * blk("L_nn") - b * blk("R_n"),
                ],
            ],
            format="csr",
        )
        self._lu = None
        if cfg.linear_solver == LinearSolver.DIRECT:
            self._lu = self._factorize()
        self._curl = curl_matrix(self.grid) if self.gyroscopic else None
        self._warn_on_dt()

    def _warn_on_dt(self) -> None:
        speed2 = (self.p.mu + self.p.lam + self.p.mu) / self.p.rho
        if speed2 <= 0:
            return
        limit = min(self.grid.h) / math.sqrt(speed2)
        if self.cfg.dt > limit:
            LOGGER.warning(
                f"dt={self.cfg.dt:.3g} exceeds h/c={limit:.3g}; the scheme is "
                "stable but waves will be poorly resolved"
            )

    def _factorize(self):  # type: ignore[no-untyped-def]
        if self.grid.interior_count > DIRECT_SOLVE_MAX_NODES:
            raise ValueError(
                f"direct solves are limited to {DIRECT_SOLVE_MAX_NODES} interior "
                f"nodes, grid has {self.grid.interior_count}"
            )
        return splu(sparse.csc_matrix(self.matrix))

    @property
    def gyroscopic(self) -> bool:
        return self.model == Model.GYRO and self.p.ell != 0.0

    def _solve(self, rhs: Array, guess: Array) -> tuple[Array, int]:
        if self._lu is not None:
            return self._lu.solve(rhs), 1
        count = 0

        def tick(_x: Array) -> None:
            nonlocal count
            count += 1

        solver = cg if self.cfg.linear_solver == LinearSolver.CG else minres
        x, info = solver(
            self.matrix,
            rhs,
            x0=guess,
            rtol=self.cfg.krylov_tol,
            maxiter=self.cfg.krylov_max,
            callback=tick,
        )
        if info != 0:
            LOGGER.error(
                f"{self.cfg.linear_solver} stopped after {count} iterations "
                f"with info={info}"
            )
            raise KrylovConvergenceError(str(self.cfg.linear_solver), int(info), count)
        LOGGER.debug(f"{self.cfg.linear_solver}: {count} iterations")
        return x, count

    def _fields(self, x: Array) -> tuple[VectorField, VectorField]:
        v = unpack_interior(self.grid, x[: self.size])
        w = unpack_interior(self.grid, x[self.size :])
        return v, w

    def _residual(self, x: Array, base: Array) -> Array:
        """Midpoint system residual, gyroscopic term bℓ (curl v) × w included."""
        assert self._curl is not None
        c = (self._curl @ x[: self.size]).reshape(3, -1)
        w = x[self.size :].reshape(3, -1)
        r = self.matrix @ x - base
        r[self.size :] += self.b * self.p.ell * np.cross(c, w, axis=0).reshape(-1)
        return r

    def _jacobian(self, x: Array) -> sparse.csc_matrix:
        assert self._curl is not None
        scale = self.b * self.p.ell
        c = self._curl @ x[: self.size]
        w = x[self.size :]
        gyro_rows = sparse.hstack(
            [-scale * (cross_matrix(w) @ self._curl), scale * cross_matrix(c)]
        )
        upper = sparse.csr_matrix((self.size, 2 * self.size))
        return sparse.csc_matrix(self.matrix + sparse.vstack([upper, gyro_rows]))

    def _newton_correction(self, x: Array, residual: Array) -> tuple[Array, int]:
        jac = self._jacobian(x)
        if self.grid.interior_count <= DIRECT_SOLVE_MAX_NODES:
            return splu(jac).solve(-residual), 1
        ilu = spilu(jac)
        count = 0

        def tick(_norm: float) -> None:
            nonlocal count
            count += 1

        dx, info = gmres(
            jac,
            -residual,
            rtol=self.cfg.krylov_tol,
            maxiter=self.cfg.krylov_max,
            M=LinearOperator(jac.shape, ilu.solve),
            callback=tick,
            callback_type="pr_norm",
        )
        if info != 0:
            LOGGER.error(f"gmres stopped after {count} iterations with info={info}")
            raise KrylovConvergenceError("gmres", int(info), count)
        return dx, count

    def advance(self, state: FieldState) -> tuple[FieldState, StepInfo]:
        p = self.p
        b = self.b
        dt = self.cfg.dt
        u_all = pack_all(state.u)
        nu_all = pack_all(state.nu)
        rhs_u = p.rho * pack_interior(state.ut) + b * (
            self.ops.L_uu @ u_all + self.ops.L_cross @ nu_all
        )
        rhs_n = b * (self.ops.L_nn @ nu_all + self.ops.L_cross @ u_all)
        if self.forcing is not None:
            f_u, f_nu = self.forcing(state.t + b)
            if f_u is not None:
                rhs_u = rhs_u + b * f_u.reshape(-1)[self.rows]
            if f_nu is not None:
                rhs_n = rhs_n + b * f_nu.reshape(-1)[self.rows]
        base = np.concatenate([rhs_u, rhs_n])

        x, krylov = self._solve(base, np.zeros_like(base))
        iterations = 1
        if self.gyroscopic:
            history: list[float] = []
            tol = self.cfg.picard_tol + RESIDUAL_FLOOR
            while True:
                residual = self._residual(x, base)
                size = max(
                    float(np.linalg.norm(base)),
                    float(np.linalg.norm(self.matrix @ x)),
                )
                norm = float(np.linalg.norm(residual))
                history.append(norm)
                LOGGER.debug(f"Gyroscopic iterate {iterations}: residual {norm:.3e}")
                if norm <= tol * size:
                    break
                if iterations >= self.cfg.picard_max:
                    raise PicardConvergenceError(history)
                dx, its = self._newton_correction(x, residual)
                x = x + dx
                krylov += its
                iterations += 1

        v, w = self._fields(x)
        u_new = state.u + dt * v
        nu_new = state.nu + dt * w
        ut_new = 2.0 * v - state.ut
        new_state = FieldState(state.t + dt, u_new, ut_new, nu_new)
        if not new_state.is_finite():
            raise NumericalError("non-finite values after step")
        gyro_power = inner(pointwise_cross(curl(v), w), w)
        return new_state, StepInfo(v, w, iterations, krylov, gyro_power)


def step(
    state: FieldState,
    ops: DiscreteOperators,
    p: MaterialParams,
    cfg: SolverConfig,
    model: Model | str = Model.LINEAR,
    forcing: Forcing | None = None,
) -> FieldState:
    """One implicit midpoint step."""
    new_state, _ = MidpointStepper(ops, p, cfg, model, forcing).advance(state)
    return new_state


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    energy: "diagnostics.EnergyReport"
    balance_residual: float
    nu_t_maxnorm: float
    ut_half: VectorField
    nut_half: VectorField
    picard_iterations: int
    krylov_iterations: int

    @property
    def dissipated_step(self) -> float:
        return self.energy.dissipated_step

    @property
    def gyro_power(self) -> float:
        return self.energy.gyro_power


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    params: MaterialParams
    coeffs: DerivedCoefficients
    cfg: SolverConfig
    model: Model
    gate: GateReport
    initial_energy: "diagnostics.EnergyReport"
    states: tuple[FieldState, ...]
    state_steps: tuple[int, ...]
    records: tuple[StepRecord, ...]

    @property
    def initial_state(self) -> FieldState:
        return self.states[0]

    @property
    def final_state(self) -> FieldState:
        return self.states[-1]

    @property
    def energies(self) -> list[float]:
        """E at step 0 and after every step."""
        return [self.initial_energy.total] + [r.energy.total for r in self.records]


def run(
    grid: Grid,
    p: MaterialParams,
    state0: FieldState,
    cfg: SolverConfig,
    model: Model | str = Model.LINEAR,
    forcing: Forcing | None = None,
    override_gate: bool = False,
) -> Trajectory:
    """
    Advance ``state0`` to ``cfg.t_end``.  States are kept at step 0, every
    ``record_every`` steps and at the last step; a StepRecord is kept for every
    step.  Raises GateError if the hypotheses fail (unless overridden) and
    StepFailure carrying the step index if a step cannot be solved.
    """
    model = Model(model)
    gate = check_theorem_hypotheses(p, grid, state0, model)
    if not gate.passed:
        if not override_gate:
            raise GateError(gate)
        LOGGER.warning(f"Running despite failed gate: {', '.join(gate.failures)}")
    coeffs = derive_coefficients(p)
    ops = assemble_operators(grid, coeffs, p)
    stepper = MidpointStepper(ops, p, cfg, model, forcing)
    n_steps = cfg.n_steps
    LOGGER.info(
        f"Running {model} model on {grid}: {n_steps} steps of dt={cfg.dt:g}"
    )

    energy = diagnostics.total_energy(state0, p, coeffs)
    initial_energy = energy
    states = [state0]
    state_steps = [0]
    records: list[StepRecord] = []
    state = state0
    for k in range(n_steps):
        try:
            new_state, info = stepper.advance(state)
        except NumericalError as e:
            LOGGER.error(f"Step {k} failed at t={state.t:g}: {e}")
            raise StepFailure(k, e) from e
        # t from the step count, so long runs do not accumulate round-off
        new_state = replace(new_state, t=(k + 1) * cfg.dt)
        dissipated = cfg.dt * (
            p.varsigma * inner(info.nut_half, info.nut_half)
            + p.eps_visc * inner(gradient(info.ut_half), gradient(info.ut_half))
            + p.delta_visc * inner(gradient(info.nut_half), gradient(info.nut_half))
        )
        new_energy = replace(
            diagnostics.total_energy(new_state, p, coeffs),
            dissipated_step=dissipated,
            gyro_power=info.gyro_power,
        )
        residual = abs(new_energy.total - energy.total + dissipated) / max(
            energy.total, 1.0
        )
        records.append(
            StepRecord(
                step=k + 1,
                t=new_state.t,
                energy=new_energy,
                balance_residual=residual,
                nu_t_maxnorm=max_norm(info.nut_half),
                ut_half=info.ut_half,
                nut_half=info.nut_half,
                picard_iterations=info.picard_iterations,
                krylov_iterations=info.krylov_iterations,
            )
        )
        if (k + 1) % cfg.record_every == 0 or k + 1 == n_steps:
            states.append(new_state)
            state_steps.append(k + 1)
            LOGGER.debug(
                f"step {k + 1}: E={new_energy.total:.12g} residual={residual:.2e}"
            )
        state = new_state
        energy = new_energy

    LOGGER.info(f"Finished {n_steps} steps, E={energy.total:.12g}")
    return Trajectory(
        grid=grid,
        params=p,
        coeffs=coeffs,
        cfg=cfg,
        model=model,
        gate=gate,
        initial_energy=initial_energy,
        states=tuple(states),
        state_steps=tuple(state_steps),
        records=tuple(records),
    )
