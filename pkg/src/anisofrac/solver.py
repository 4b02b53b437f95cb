"""Global staggered solution of the coupled displacement/damage problem.

Each load increment alternates a Newton solve of the displacement field at
frozen damage with a Newton solve of the damage field at frozen
displacement (and frozen directional data), until the combined increment
norm stagnates below tolerance.  History and directional caches are
committed only after the increment converges, so irreversibility is never
polluted by discarded intermediate states.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import czm, fem
from .czm import CzParams, CzPointState, cz_element
from .mesh import Mesh, boundary_dofs
from .model import MaterialParams, PhaseFieldKind

__all__ = [
    "SolverError", "SolverConfig", "LoadProgram", "BoundaryCondition",
    "StepRecord", "SimulationResult", "FieldState", "Simulation",
    "solve_linear", "run",
]


class SolverError(RuntimeError):
    """Linear or nonlinear solve failed."""


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet constraint: prescribed value = rate * applied displacement."""

    set_name: str
    component: str   # 'x', 'y' or 'both'
    rate: float


@dataclass(frozen=True)
class LoadProgram:
    """Monotone displacement-controlled loading."""

    conditions: tuple[BoundaryCondition, ...]
    n_increments: int
    du: float                      # applied-displacement increment
    reaction_set: str = "top"      # boundary set whose reaction is recorded
    stop_force_fraction: Optional[float] = None  # stop once |F| falls below
    #   this fraction of the running peak (post-failure cutoff); None = never

    def __post_init__(self):
        if self.n_increments < 1 or self.du <= 0.0:
            raise ValueError("need n_increments >= 1 and du > 0")


@dataclass(frozen=True)
class SolverConfig:
    newton_tol_rel: float = 1e-6
    newton_tol_abs: float = 1e-10
    max_newton: int = 25
    stagger_tol: float = 1e-5      # combined relative increment norm
    max_stagger: int = 200
    single_pass: bool = False      # one u/d sweep per increment (no fixed point)
    halve_on_fail: bool = False    # retry a failed increment with du/2, du/4
    max_halvings: int = 3
    stiffness_floor: float = 1e-10

    def __post_init__(self):
        if min(self.newton_tol_rel, self.newton_tol_abs, self.stagger_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StepRecord:
    step: int
    u_applied: float
    fx: float
    fy: float
    stagger_iters: int
    converged: bool


@dataclass
class SimulationResult:
    records: list[StepRecord] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def peak_force(self) -> float:
        return max((abs(r.fy) for r in self.records), default=0.0)

    def force_curve(self) -> np.ndarray:
        """(n, 2) array of applied displacement vs |F_y|."""
        return np.array([[r.u_applied, abs(r.fy)] for r in self.records])


@dataclass
class FieldState:
    u: np.ndarray                       # (2 n_nodes,)
    d: np.ndarray                       # (n_nodes,)
    gp: fem.GaussPointState
    cz: list[list[CzPointState]]        # per interface element, 2 points

    def copy(self) -> "FieldState":
        return FieldState(u=self.u.copy(), d=self.d.copy(), gp=self.gp.copy(),
                          cz=[[s.copy() for s in pair] for pair in self.cz])


def solve_linear(matrix, rhs: np.ndarray) -> np.ndarray:
    """Direct sparse factorisation with a residual sanity check."""
    a = sp.csc_matrix(matrix)
    try:
        lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A")
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorisation failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("sparse solve produced non-finite values "
                          "(singular or severely ill-conditioned system)")
    ref = float(np.linalg.norm(rhs))
    if ref > 0.0:
        res = float(np.linalg.norm(a @ x - rhs)) / ref
        if res > 1e-10:
            raise SolverError(f"linear solve residual {res:.2e} exceeds 1e-10")
    return x


class Simulation:
    """Assembled state of one boundary value problem.

    Parameters
    ----------
    mesh : Mesh
    materials : MaterialParams or sequence indexed by mesh.region_id
    load : LoadProgram
    config : SolverConfig, optional
    cz_params : CzParams, optional
        Law for the zero-thickness interface elements present in the mesh.
    """

    def __init__(self, mesh: Mesh, materials, load: LoadProgram,
                 config: Optional[SolverConfig] = None,
                 cz_params: Optional[CzParams] = None):
        if isinstance(materials, MaterialParams):
            materials = (materials,)
        self.mesh = mesh
        self.materials = tuple(materials)
        self.load = load
        self.config = config or SolverConfig()
        self.cz_params = cz_params
        if mesh.interfaces and cz_params is None:
            raise ValueError("mesh has interface elements but no cz_params given")

        n_regions = int(mesh.region_id.max()) + 1 if mesh.n_elements else 1
        if n_regions > len(self.materials):
            raise ValueError("fewer materials than mesh regions")

        self.qc = fem.QuadratureCache(mesh)
        self.ms = fem.MaterialSet(materials=self.materials, region=mesh.region_id)
        self.ms.stiffness_floor = self.config.stiffness_floor
        self.n_dof_u = 2 * mesh.n_nodes
        self.n_dof_d = mesh.n_nodes

        fixed, rates = [], []
        for bc in load.conditions:
            dofs = boundary_dofs(mesh, bc.set_name, bc.component)
            fixed.append(dofs)
            rates.append(np.full(len(dofs), bc.rate))
        self.fixed_dofs = np.concatenate(fixed) if fixed else np.empty(0, np.int64)
        self.fixed_rates = np.concatenate(rates) if rates else np.empty(0)
        self.fixed_dofs, keep = np.unique(self.fixed_dofs, return_index=True)
        self.fixed_rates = self.fixed_rates[keep]
        self.free_u = np.setdiff1d(np.arange(self.n_dof_u), self.fixed_dofs)

        self.state = FieldState(
            u=np.zeros(self.n_dof_u), d=np.zeros(self.n_dof_d),
            gp=fem.initial_state(self.ms),
            cz=[[CzPointState(), CzPointState()] for _ in mesh.interfaces])
        self.h_committed = self.state.gp.h.copy()

    # -- assembly ----------------------------------------------------------

    def _cz_contributions(self, u: np.ndarray, committed):
        """Interface residual/stiffness triplets at displacement u."""
        rows, cols, vals = [], [], []
        fint = np.zeros(self.n_dof_u)
        trial_states = []
        for iface, states in zip(self.mesh.interfaces, committed):
            ids = np.array([*iface.lower, *iface.upper])
            dofs = np.empty(8, dtype=np.int64)
            dofs[0::2] = 2 * ids
            dofs[1::2] = 2 * ids + 1
            out = cz_element(iface, u[dofs].reshape(4, 2), states, self.cz_params)
            trial_states.append(out.states)
            np.add.at(fint, dofs, out.r)
            rows.append(np.repeat(dofs, 8))
            cols.append(np.tile(dofs, 8))
            vals.append(out.k.ravel())
        return rows, cols, vals, fint, trial_states

    def assemble(self, field_name: str, *, eliminate: bool = True,
                 h_eff: Optional[np.ndarray] = None):
        """Global matrix and residual for 'u' or 'd'.

        With ``eliminate`` the Dirichlet rows/columns are removed (the
        prescribed values are already present in the state vector, so the
        residual of the free DOFs is complete).
        """
        st = self.state
        if field_name == "u":
            ke, fint_e = fem.batch_u_system(self.qc, self.ms, st.u, st.d, st.gp)
            rows, cols = self.qc.u_rows, self.qc.u_cols
            vals = ke.ravel()
            r = np.zeros(self.n_dof_u)
            np.add.at(r, self.qc.udofs.ravel(), fint_e.ravel())
            if self.mesh.interfaces:
                cr, cc, cv, cz_f, self._cz_trial = self._cz_contributions(st.u, st.cz)
                rows = np.concatenate([rows, *cr])
                cols = np.concatenate([cols, *cc])
                vals = np.concatenate([vals, *cv])
                r += cz_f
            k = sp.coo_matrix((vals, (rows, cols)),
                              shape=(self.n_dof_u, self.n_dof_u)).tocsc()
            if eliminate:
                free = self.free_u
                return k[free][:, free], r[free]
            return k, r
        if field_name == "d":
            if h_eff is None:
                h_eff = self._effective_history()
            kd, rd = fem.batch_d_system(self.qc, self.ms, st.d, st.gp, h_eff)
            r = np.zeros(self.n_dof_d)
            np.add.at(r, self.qc.ddofs.ravel(), rd.ravel())
            k = sp.coo_matrix((kd.ravel(), (self.qc.d_rows, self.qc.d_cols)),
                              shape=(self.n_dof_d, self.n_dof_d)).tocsc()
            return k, r
        raise ValueError("field_name must be 'u' or 'd'")

    def _effective_history(self) -> np.ndarray:
        psi0 = fem.batch_psi0(self.qc, self.ms, self.state.u)
        return np.maximum(self.h_committed,
                          np.maximum(psi0, self.state.gp.psi_th))

    # -- nonlinear sub-solves ------------------------------------------------

    def _newton_u(self) -> int:
        cfg = self.config
        free = self.free_u
        ref = 0.0
        for it in range(cfg.max_newton + 1):
            k, r = self.assemble("u", eliminate=False)
            rn = float(np.linalg.norm(r[free]))
            if it == 0:
                ref = rn
            if rn <= cfg.newton_tol_abs or rn <= cfg.newton_tol_rel * ref:
                return it
            if it == cfg.max_newton:
                break
            delta = solve_linear(k[free][:, free], -r[free])
            self.state.u[free] += delta
        raise SolverError(f"displacement Newton stalled at |r| = {rn:.3e}")

    @staticmethod
    def _active_bounds(d: np.ndarray, r: np.ndarray) -> np.ndarray:
        # nodes pinned at a bound with the residual pushing further out;
        # their equations are inactive (KKT complementarity)
        return ((d <= 0.0) & (r > 0.0)) | ((d >= 1.0) & (r < 0.0))

    def _newton_d(self, h_eff: np.ndarray) -> int:
        """Projected Newton on the damage subproblem with [0, 1] bounds.

        The linear term of the cohesive topology function makes the bound
        d >= 0 genuinely active around a damaged zone, so convergence is
        measured on the projected (free-node) residual.
        """
        cfg = self.config
        st = self.state
        k, r = self.assemble("d", h_eff=h_eff)
        active = self._active_bounds(st.d, r)
        rn = float(np.linalg.norm(r[~active]))
        ref = rn
        if ref <= cfg.newton_tol_abs:
            return 0
        for it in range(cfg.max_newton):
            free = np.flatnonzero(~active)
            delta = np.zeros_like(st.d)
            delta[free] = solve_linear(k[free][:, free], -r[free])
            # backtrack on the projected residual if the full step overshoots
            best = None
            scale = 1.0
            for _ in range(6):
                trial = np.clip(st.d + scale * delta, 0.0, 1.0)
                d_save = st.d
                st.d = trial
                k_t, r_t = self.assemble("d", h_eff=h_eff)
                st.d = d_save
                act_t = self._active_bounds(trial, r_t)
                rn_t = float(np.linalg.norm(r_t[~act_t]))
                if best is None or rn_t < best[0]:
                    best = (rn_t, trial, k_t, r_t, act_t)
                if rn_t <= rn:
                    break
                scale *= 0.5
            rn, st.d, k, r, active = best
            if rn <= cfg.newton_tol_abs or rn <= cfg.newton_tol_rel * ref:
                return it + 1
        raise SolverError(f"damage Newton stalled at |r| = {rn:.3e}")

    # -- staggered increment -------------------------------------------------

    def staggered_step(self, u_applied: float) -> tuple[int, bool]:
        """One load increment, staggered to a fixed point.

        Returns (stagger iterations, converged flag).  On convergence the
        history field, directional caches and interface states are
        committed from the converged fields.
        """
        cfg = self.config
        st = self.state
        st.u[self.fixed_dofs] = self.fixed_rates * u_applied

        iters = 0
        converged = False
        for it in range(cfg.max_stagger):
            iters = it + 1
            u_old = st.u.copy()
            d_old = st.d.copy()
            self._newton_u()
            h_eff = self._effective_history()
            self._newton_d(h_eff)
            np.clip(st.d, 0.0, 1.0, out=st.d)
            num = math.sqrt(float(np.sum((st.u - u_old) ** 2))
                            + float(np.sum((st.d - d_old) ** 2)))
            den = math.sqrt(float(np.sum(st.u ** 2)) + float(np.sum(st.d ** 2)))
            if cfg.single_pass or num <= cfg.stagger_tol * max(den, 1e-30):
                converged = True
                break
        # final displacement pass so equilibrium holds for the final damage
        self._newton_u()
        h_eff = self._effective_history()
        self.h_committed = np.maximum(self.h_committed, h_eff)
        st.gp.h = self.h_committed.copy()
        fem.refresh_directional(self.qc, self.ms, st.d, st.gp)
        if self.mesh.interfaces:
            _, _, _, _, trial = self._cz_contributions(st.u, st.cz)
            st.cz = trial
        return iters, converged

    # -- results -------------------------------------------------------------

    def reaction_force(self, set_name: str) -> np.ndarray:
        """Sum of internal nodal forces over a boundary set (no elimination)."""
        _, r = self.assemble("u", eliminate=False)
        fx = float(np.sum(r[boundary_dofs(self.mesh, set_name, "x")]))
        fy = float(np.sum(r[boundary_dofs(self.mesh, set_name, "y")]))
        return np.array([fx, fy])

    def run(self, *, snapshot_every: int = 0,
            on_increment: Optional[Callable[["Simulation", StepRecord], None]] = None
            ) -> SimulationResult:
        """March through the load program.

        A non-converged increment is recorded with its flag and the run
        stops there (optionally after retrying with halved increments),
        returning the partial result.
        """
        result = SimulationResult()
        t0 = time.perf_counter()
        u_applied = 0.0
        step = 0
        du = self.load.du
        halvings = 0
        peak = 0.0
        while step < self.load.n_increments:
            target = u_applied + du
            saved = self.state.copy()
            saved_h = self.h_committed.copy()
            try:
                iters, ok = self.staggered_step(target)
            except SolverError:
                iters, ok = self.config.max_stagger, False
            if not ok and self.config.halve_on_fail and halvings < self.config.max_halvings:
                self.state = saved
                self.h_committed = saved_h
                du *= 0.5
                halvings += 1
                continue
            step += 1
            u_applied = target
            f = self.reaction_force(self.load.reaction_set)
            rec = StepRecord(step=step, u_applied=u_applied, fx=f[0], fy=f[1],
                             stagger_iters=iters, converged=ok)
            result.records.append(rec)
            if snapshot_every and (step % snapshot_every == 0
                                   or step == self.load.n_increments):
                result.snapshots.append((step, self.state.u.copy(),
                                         self.state.d.copy()))
            if on_increment is not None:
                on_increment(self, rec)
            if not ok:
                break
            peak = max(peak, abs(rec.fy))
            frac = self.load.stop_force_fraction
            if frac is not None and peak > 0.0 and abs(rec.fy) < frac * peak:
                break
        result.wall_time = time.perf_counter() - t0
        return result


def run(mesh: Mesh, materials, load: LoadProgram,
        config: Optional[SolverConfig] = None,
        cz_params: Optional[CzParams] = None, *,
        snapshot_every: int = 0, on_increment=None) -> SimulationResult:
    """Convenience wrapper: build a Simulation and march the load program."""
    sim = Simulation(mesh, materials, load, config, cz_params)
    return sim.run(snapshot_every=snapshot_every, on_increment=on_increment)
