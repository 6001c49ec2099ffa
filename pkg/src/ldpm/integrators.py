"""Time integration and equilibrium solvers.

All solvers advance M q'' + f_int(q) = f_ext with prescribed DoFs eliminated
from the solved system and driven directly by the load program; reactions
are recovered on the eliminated rows.  The implicit solver is the
generalized-alpha family (HHT and Newmark as special cases) with modified
Newton iterations on the initial elastic stiffness, factorized once per
simulation.  The static solver drops the inertia terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SystemOperators, DiagMass, internal_forces
from .geometry import Constraint, ConstraintKind, ConstraintSet, Mesh
from .material import FacetStateArray


class DivergenceError(Exception):
    """Non-finite state detected during explicit integration."""

    def __init__(self, step, message="non-finite state"):
        super().__init__(f"step {step}: {message}")
        self.step = step


class NonConvergenceError(Exception):
    def __init__(self, step, iterations):
        super().__init__(f"step {step}: no convergence in {iterations} iterations")
        self.step = step
        self.iterations = iterations


@dataclass(frozen=True)
class GenAlphaParams:
    alpha_m: float
    alpha_f: float
    gamma: float
    beta: float


def genalpha_from_rho(rho_inf: float) -> GenAlphaParams:
    """Spectral-radius parameterization giving second-order accuracy with
    high-frequency damping controlled by rho_inf."""
    if not 0.0 <= rho_inf <= 1.0:
        raise ValueError("rho_inf must lie in [0, 1]")
    a_m = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0)
    a_f = rho_inf / (rho_inf + 1.0)
    gamma = 0.5 - a_m + a_f
    beta = ((1.0 - a_m + a_f) / 2.0) ** 2
    return GenAlphaParams(a_m, a_f, gamma, beta)


def hht_params(alpha: float) -> GenAlphaParams:
    """HHT alpha-method: alpha_m = 0, alpha_f = -alpha, gamma = 1/2 - alpha,
    beta = (1 - alpha)^2 / 4."""
    if not -1.0 / 3.0 - 1e-12 <= alpha <= 0.0:
        raise ValueError("HHT alpha must lie in [-1/3, 0]")
    return GenAlphaParams(0.0, -alpha, 0.5 - alpha, 0.25 * (1.0 - alpha) ** 2)


def newmark_params(gamma: float = 0.5, beta: float = 0.25) -> GenAlphaParams:
    return GenAlphaParams(0.0, 0.0, gamma, beta)


@dataclass(frozen=True)
class ConvergenceSpec:
    criteria: tuple = ("residual", "increment", "energy")
    tolerance: float = 1e-4
    r_tol: float = 1e-4           # wrms relative weight
    a_tol: float = 1e-6           # wrms absolute weight
    max_iter: int = 100
    on_fail: str = "accept"       # accept | abort

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("at least one convergence criterion required")
        bad = set(self.criteria) - {"residual", "increment", "energy", "wrms"}
        if bad:
            raise ValueError(f"unknown criteria {sorted(bad)}")
        if self.tolerance <= 0 or self.r_tol <= 0 or self.a_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.on_fail not in ("accept", "abort"):
            raise ValueError("on_fail must be accept or abort")


def check_convergence(residual, dq, q, f_ext, f_int, f_inertia,
                      energy_ref, spec: ConvergenceSpec):
    """Disjunctive convergence test: the step passes when ANY selected
    criterion is below its tolerance.  A criterion whose normalizer is zero
    is skipped (flagged in the values) unless its numerator is zero too.
    """
    values = {}
    passed = False

    def norm(v):
        return float(np.linalg.norm(v))

    def judge(name, num, den, tol):
        nonlocal passed
        if den == 0.0:
            if num == 0.0:
                values[name] = 0.0
                passed = True
            else:
                values[name] = float("nan")  # skipped: zero normalizer
            return
        values[name] = num / den
        if values[name] < tol:
            passed = True

    if "residual" in spec.criteria:
        judge("residual", norm(residual),
              max(norm(f_ext), norm(f_int), norm(f_inertia)), spec.tolerance)
    if "increment" in spec.criteria:
        judge("increment", norm(dq), norm(q), spec.tolerance)
    if "energy" in spec.criteria:
        judge("energy", abs(float(np.dot(dq, residual))), energy_ref,
              spec.tolerance)
    if "wrms" in spec.criteria:
        w = 1.0 / (spec.r_tol * np.abs(q) + spec.a_tol)
        val = float(np.sqrt(np.mean((np.asarray(dq) * w) ** 2))) if len(q) \
            else 0.0
        values["wrms"] = val
        if val < 1.0:
            passed = True
    return passed, values


@dataclass
class StepReport:
    time: float
    iterations: int
    converged: bool
    criteria: dict = field(default_factory=dict)
    reactions: np.ndarray = field(default_factory=lambda: np.zeros(3))


class LoadProgram:
    """Compiled loading: prescribed displacement/velocity/acceleration
    histories for kinematic constraints and piecewise-linear force
    histories, all as functions of time."""

    def __init__(self, constraints: ConstraintSet, n_dofs: int):
        self.n_dofs = n_dofs
        idx, vel, ramp = [], [], []
        for c in constraints:
            idx.append(6 * c.node + c.comp)
            if c.kind is ConstraintKind.VELOCITY:
                vel.append(c.velocity)
                ramp.append(c.t_ramp)
            else:
                vel.append(0.0)
                ramp.append(0.0)
        order = np.argsort(idx)
        self.prescribed = np.array(idx, dtype=int)[order]
        self._vel = np.array(vel)[order]
        self._ramp = np.array(ramp)[order]
        free = np.ones(n_dofs, dtype=bool)
        free[self.prescribed] = False
        self.free = np.nonzero(free)[0]
        # loaded set: DoFs with nonzero target velocity, else all prescribed
        driven = self.prescribed[self._vel != 0.0]
        self.driven = driven if len(driven) else self.prescribed
        self._forces = []
        for c in constraints.forces:
            hist = np.array(c.history, float).reshape(-1, 2)
            self._forces.append((6 * c.node + c.comp, hist))

    def displacement(self, t: float) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            ramped = np.where(
                self._ramp > 0,
                np.where(t <= self._ramp,
                         self._vel * t * t / (2.0 * np.where(self._ramp > 0,
                                                             self._ramp, 1.0)),
                         self._vel * (t - self._ramp / 2.0)),
                self._vel * t)
        return ramped

    def velocity(self, t: float) -> np.ndarray:
        return np.where((self._ramp > 0) & (t <= self._ramp),
                        self._vel * t / np.where(self._ramp > 0, self._ramp, 1.0),
                        self._vel)

    def acceleration(self, t: float) -> np.ndarray:
        return np.where((self._ramp > 0) & (t <= self._ramp),
                        self._vel / np.where(self._ramp > 0, self._ramp, 1.0),
                        0.0)

    def external_force(self, t: float) -> np.ndarray:
        f = np.zeros(self.n_dofs)
        for dof, hist in self._forces:
            f[dof] += np.interp(t, hist[:, 0], hist[:, 1])
        return f

    def apply(self, q, v, a, t) -> None:
        q[self.prescribed] = self.displacement(t)
        v[self.prescribed] = self.velocity(t)
        a[self.prescribed] = self.acceleration(t)


def perturb(q, free_idx, eta: float, rng: np.random.Generator) -> np.ndarray:
    """Add an independent uniform(-eta/2, eta/2) draw to every free DoF."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    out = np.array(q, float, copy=True)
    if eta > 0:
        out[free_idx] += rng.uniform(-eta / 2.0, eta / 2.0, size=len(free_idx))
    return out


class _SolverBase:
    """State shared by all solvers: DoF vectors, facet history, load
    program, and the last internal-force evaluation (for energy work)."""

    def __init__(self, ops: SystemOperators, program: LoadProgram,
                 elastic_only: bool = False):
        self.ops = ops
        self.program = program
        self.elastic_only = elastic_only
        n = ops.mesh.n_dofs
        self.q = np.zeros(n)
        self.v = np.zeros(n)
        self.a = np.zeros(n)
        self.t = 0.0
        self.step_index = 0
        self.states = FacetStateArray.virgin(ops.mesh.n_facets)
        self.f_int = np.zeros(n)
        self.tractions = np.zeros((ops.mesh.n_facets, 3))
        self.strains = np.zeros((ops.mesh.n_facets, 3))
        self.reaction_forces = np.zeros(n)

    def evaluate(self, q, commit=False):
        f, trial, t, e = internal_forces(q, self.ops, self.states,
                                         self.elastic_only)
        if commit:
            self.states = trial
            self.f_int = f
            self.tractions = t
            self.strains = e
        return f, trial, t, e

    def reaction_sum(self) -> np.ndarray:
        """Resultant of reactions over the driven translational DoFs,
        reported per global axis."""
        out = np.zeros(3)
        for d in self.program.driven:
            comp = d % 6
            if comp < 3:
                out[comp] += self.reaction_forces[d]
        return out


class ExplicitIntegrator(_SolverBase):
    """Central difference with half-stepped velocities and a diagonal mass
    matrix; facet states commit every step.  After every step() the public
    state (q, v, a, forces, reactions) is consistent at the current time.
    """

    def __init__(self, ops, program, mass: DiagMass, dt: float,
                 elastic_only=False):
        super().__init__(ops, program, elastic_only)
        mass.require_positive(program.free)
        self.mass = mass
        self.dt = dt
        self._minv = np.zeros(ops.mesh.n_dofs)
        self._minv[program.free] = 1.0 / mass.values[program.free]
        self.program.apply(self.q, self.v, self.a, 0.0)
        self._refresh()
        # second-order startup: v_{+1/2} = v_0 + dt/2 a_0
        self._v_half = self.v + 0.5 * dt * self.a

    def _refresh(self):
        """Evaluate and commit forces/acceleration/reactions at (t, q)."""
        p = self.program
        f_int, trial, t_k, e_k = self.evaluate(self.q)
        f_ext = p.external_force(self.t)
        accel = (f_ext - f_int) * self._minv
        accel[p.prescribed] = p.acceleration(self.t)
        self.a = accel
        self.states, self.f_int = trial, f_int
        self.tractions, self.strains = t_k, e_k
        self.reaction_forces = np.zeros_like(self.q)
        pres = p.prescribed
        self.reaction_forces[pres] = (self.mass.values[pres] * accel[pres]
                                      + f_int[pres] - f_ext[pres])

    def step(self) -> StepReport:
        p, dt = self.program, self.dt
        if self.step_index:
            self._v_half = self._v_half + dt * self.a
        q_new = self.q + dt * self._v_half
        if not np.all(np.isfinite(q_new)):
            raise DivergenceError(self.step_index)
        self.t += dt
        self.step_index += 1
        self.q = q_new
        self.q[p.prescribed] = p.displacement(self.t)
        self._refresh()
        self.v = self._v_half + 0.5 * dt * self.a
        self.v[p.prescribed] = p.velocity(self.t)
        if not np.all(np.isfinite(self.f_int)):
            raise DivergenceError(self.step_index)
        return StepReport(self.t, 0, True, {}, self.reaction_sum())


class GeneralizedAlphaIntegrator(_SolverBase):
    """Implicit generalized-alpha with modified Newton on the initial
    elastic stiffness; the effective matrix is factorized once and only
    refactorized when the step size changes."""

    def __init__(self, ops, program, mass: DiagMass, ga: GenAlphaParams,
                 dt: float, conv: ConvergenceSpec, elastic_only=False):
        super().__init__(ops, program, elastic_only)
        self.mass = mass
        self.ga = ga
        self.conv = conv
        self.dt = None
        self._lu = None
        self.set_dt(dt)
        self.energy_ref = 0.0  # external/internal/kinetic scale, set by runner

    def set_dt(self, dt: float) -> None:
        if dt == self.dt:
            return
        self.dt = dt
        ga = self.ga
        free = self.program.free
        c_m = (1.0 - ga.alpha_m) / (ga.beta * dt * dt)
        K_eff = ((1.0 - ga.alpha_f) * self.ops.K
                 + sp.diags(c_m * self.mass.values))
        K_ff = K_eff[free][:, free].tocsc()
        try:
            self._lu = spla.splu(K_ff)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular effective matrix: {exc}")

    def _newmark(self, q_new, q0, v0, a0):
        dt, ga = self.dt, self.ga
        b, g = ga.beta, ga.gamma
        a_new = (q_new - q0) / (b * dt * dt) - v0 / (b * dt) \
            - (0.5 / b - 1.0) * a0
        v_new = v0 + dt * ((1.0 - g) * a0 + g * a_new)
        return v_new, a_new

    def step(self) -> StepReport:
        p, ga, dt = self.program, self.ga, self.dt
        q0, v0, a0 = self.q.copy(), self.v.copy(), self.a.copy()
        t0, t1 = self.t, self.t + dt
        t_mid = t0 + (1.0 - ga.alpha_f) * dt

        q_new = q0.copy()
        p_disp = p.displacement(t1)
        q_new[p.prescribed] = p_disp
        v_new, a_new = self._newmark(q_new, q0, v0, a0)
        v_new[p.prescribed] = p.velocity(t1)
        a_new[p.prescribed] = p.acceleration(t1)

        f_ext_mid = (1.0 - ga.alpha_f) * p.external_force(t1) \
            + ga.alpha_f * p.external_force(t0)
        free = p.free

        def residual(qn, an):
            q_mid = (1.0 - ga.alpha_f) * qn + ga.alpha_f * q0
            a_mid = (1.0 - ga.alpha_m) * an + ga.alpha_m * a0
            f_int, _, _, _ = internal_forces(q_mid, self.ops, self.states,
                                             self.elastic_only)
            f_inertia = self.mass.values * a_mid
            return f_inertia + f_int - f_ext_mid, f_int, f_inertia

        r_full, f_int_mid, f_inertia = residual(q_new, a_new)
        iterations, converged, values = 0, False, {}
        while iterations < self.conv.max_iter:
            dq = np.zeros_like(q_new)
            dq[free] = self._lu.solve(-r_full[free])
            q_new += dq
            v_new, a_new = self._newmark(q_new, q0, v0, a0)
            v_new[p.prescribed] = p.velocity(t1)
            a_new[p.prescribed] = p.acceleration(t1)
            iterations += 1
            r_full, f_int_mid, f_inertia = residual(q_new, a_new)
            e_ref = max(self.energy_ref,
                        0.5 * float(np.dot(self.mass.values * v_new, v_new)))
            converged, values = check_convergence(
                r_full[free], dq[free], q_new[free], f_ext_mid[free],
                f_int_mid[free], f_inertia[free], e_ref, self.conv)
            if converged:
                break
        if not converged and self.conv.on_fail == "abort":
            raise NonConvergenceError(self.step_index, iterations)

        # commit at the end-of-step configuration
        f_int_end, trial, t_k, e_k = self.evaluate(q_new)
        self.states, self.f_int = trial, f_int_end
        self.tractions, self.strains = t_k, e_k
        self.reaction_forces = np.zeros_like(q_new)
        pres = p.prescribed
        self.reaction_forces[pres] = (self.mass.values[pres] * a_new[pres]
                                      + f_int_end[pres]
                                      - p.external_force(t1)[pres])
        self.q, self.v, self.a, self.t = q_new, v_new, a_new, t1
        self.step_index += 1
        return StepReport(self.t, iterations, converged, values,
                          self.reaction_sum())


class StaticSolver(_SolverBase):
    """Displacement-controlled Newton equilibrium on the factorized elastic
    stiffness; the pseudo-time step only advances the load program."""

    def __init__(self, ops, program, dt: float, conv: ConvergenceSpec,
                 elastic_only=False):
        super().__init__(ops, program, elastic_only)
        self.dt = dt
        self.conv = conv
        free = program.free
        K_ff = ops.K[free][:, free].tocsc()
        try:
            self._lu = spla.splu(K_ff)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular stiffness: {exc}")
        self.energy_ref = 0.0

    def step(self) -> StepReport:
        p = self.program
        t1 = self.t + self.dt
        q_new = self.q.copy()
        q_new[p.prescribed] = p.displacement(t1)
        f_ext = p.external_force(t1)
        free = p.free
        zeros = np.zeros(len(free))

        f_int, _, _, _ = internal_forces(q_new, self.ops, self.states,
                                         self.elastic_only)
        r_full = f_int - f_ext
        iterations, converged, values = 0, False, {}
        while iterations < self.conv.max_iter:
            dq = np.zeros_like(q_new)
            dq[free] = self._lu.solve(-r_full[free])
            q_new += dq
            iterations += 1
            f_int, _, _, _ = internal_forces(q_new, self.ops, self.states,
                                             self.elastic_only)
            r_full = f_int - f_ext
            converged, values = check_convergence(
                r_full[free], dq[free], q_new[free], f_ext[free],
                f_int[free], zeros, self.energy_ref, self.conv)
            if converged:
                break
        if not converged and self.conv.on_fail == "abort":
            raise NonConvergenceError(self.step_index, iterations)

        f_int_end, trial, t_k, e_k = self.evaluate(q_new)
        self.states, self.f_int = trial, f_int_end
        self.tractions, self.strains = t_k, e_k
        self.reaction_forces = np.zeros_like(q_new)
        pres = p.prescribed
        self.reaction_forces[pres] = f_int_end[pres] - f_ext[pres]
        self.q, self.t = q_new, t1
        self.step_index += 1
        return StepReport(self.t, iterations, converged, values,
                          self.reaction_sum())
