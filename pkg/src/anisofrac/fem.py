"""Bilinear quad element kernels for the coupled displacement/damage problem.

The module keeps two views of the same math: vectorised batch routines
operating on (n_elements, 4 gauss points, ...) arrays, used by the global
solver, and single-element wrappers (`element_u`, `element_d_structural`,
`element_d_arbitrary`) exposing the per-element residual and stiffness for
testing and inspection.  2x2 Gauss quadrature throughout.

Direction-dependent quantities (crack angle, fracture energy, strength,
softening coefficient, the gradient terms g_d / s_d and the crack density
value multiplying g_d) are frozen per Gauss point from the last converged
increment and refreshed in `refresh_directional`; the damage stiffness
therefore never differentiates them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import model
from .constitutive import VOL_PROJECTOR, build_stiffness
from .mesh import Mesh
from .model import (
    ArbitraryAnisotropy,
    MaterialParams,
    PhaseFieldKind,
    SplitKind,
    StructuralAnisotropy,
    structural_tensor,
)

__all__ = [
    "GP_POINTS", "ShapeData", "GaussPointState", "ElementKernelOutput",
    "QuadratureCache", "MaterialSet", "shape_eval",
    "element_u", "element_d_structural", "element_d_arbitrary",
    "update_history", "batch_u_system", "batch_d_system", "batch_psi0",
    "refresh_directional", "initial_state", "single_element_state",
]

_G = 1.0 / math.sqrt(3.0)
GP_POINTS = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])


def _shape_functions(xi: float, eta: float) -> np.ndarray:
    return 0.25 * np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                            (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)])


def _shape_derivs(xi: float, eta: float) -> np.ndarray:
    # dN_k/d(xi, eta), shape (4, 2)
    return 0.25 * np.array([
        [-(1 - eta), -(1 - xi)],
        [(1 - eta), -(1 + xi)],
        [(1 + eta), (1 + xi)],
        [-(1 + eta), (1 - xi)],
    ])


@dataclass
class ShapeData:
    """Shape matrices of one quad at one quadrature point."""

    n_u: np.ndarray    # (2, 8) displacement interpolation
    n_d: np.ndarray    # (4,) damage interpolation
    b_u: np.ndarray    # (3, 8) strain-displacement (engineering shear)
    b_d: np.ndarray    # (2, 4) damage gradient
    wdetj: float       # quadrature weight times det J


def shape_eval(coords, gauss_point) -> ShapeData:
    """Isoparametric bilinear shape data at one Gauss point.

    Raises on non-positive Jacobian determinant.
    """
    coords = np.asarray(coords, dtype=float)
    xi, eta = gauss_point
    n = _shape_functions(xi, eta)
    dn = _shape_derivs(xi, eta)
    jac = coords.T @ dn                       # J[i, j] = dx_i / dxi_j
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0.0:
        raise ValueError(f"non-positive Jacobian determinant {det:.3e}")
    jinv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    dndx = dn @ jinv                          # (4, 2): dN_k / dx_i
    n_u = np.zeros((2, 8))
    n_u[0, 0::2] = n
    n_u[1, 1::2] = n
    b_u = np.zeros((3, 8))
    b_u[0, 0::2] = dndx[:, 0]
    b_u[1, 1::2] = dndx[:, 1]
    b_u[2, 0::2] = dndx[:, 1]
    b_u[2, 1::2] = dndx[:, 0]
    return ShapeData(n_u=n_u, n_d=n, b_u=b_u, b_d=dndx.T, wdetj=float(det))


# ---------------------------------------------------------------------------
# Batched quadrature data
# ---------------------------------------------------------------------------

class QuadratureCache:
    """Precomputed shape data and scatter indices for a whole mesh."""

    def __init__(self, mesh: Mesh):
        ne = mesh.n_elements
        xy = mesh.nodes[mesh.quads]                    # (ne, 4, 2)
        self.b_u = np.zeros((ne, 4, 3, 8))
        self.b_d = np.zeros((ne, 4, 2, 4))
        self.wdetj = np.zeros((ne, 4))
        self.n_d = np.stack([_shape_functions(x, e) for x, e in GP_POINTS])  # (4 gp, 4)
        for g, (xi, eta) in enumerate(GP_POINTS):
            dn = _shape_derivs(xi, eta)
            jac = np.einsum("eki,kj->eij", xy, dn)
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            if np.any(det <= 0.0):
                bad = int(np.argmax(det <= 0.0))
                raise ValueError(f"non-positive Jacobian in element {bad}")
            jinv = np.empty_like(jac)
            jinv[:, 0, 0] = jac[:, 1, 1]
            jinv[:, 0, 1] = -jac[:, 0, 1]
            jinv[:, 1, 0] = -jac[:, 1, 0]
            jinv[:, 1, 1] = jac[:, 0, 0]
            jinv /= det[:, None, None]
            dndx = np.einsum("kj,eji->eki", dn, jinv)  # (ne, 4, 2)
            self.wdetj[:, g] = det
            self.b_d[:, g] = dndx.transpose(0, 2, 1)
            self.b_u[:, g, 0, 0::2] = dndx[:, :, 0]
            self.b_u[:, g, 1, 1::2] = dndx[:, :, 1]
            self.b_u[:, g, 2, 0::2] = dndx[:, :, 1]
            self.b_u[:, g, 2, 1::2] = dndx[:, :, 0]

        self.ddofs = mesh.quads.astype(np.int64)       # (ne, 4)
        self.udofs = np.empty((ne, 8), dtype=np.int64)
        self.udofs[:, 0::2] = 2 * self.ddofs
        self.udofs[:, 1::2] = 2 * self.ddofs + 1
        # COO scatter patterns, built once
        self.u_rows = np.repeat(self.udofs, 8, axis=1).ravel()
        self.u_cols = np.tile(self.udofs, (1, 8)).ravel()
        self.d_rows = np.repeat(self.ddofs, 4, axis=1).ravel()
        self.d_cols = np.tile(self.ddofs, (1, 4)).ravel()


@dataclass
class MaterialSet:
    """Per-element material arrays derived from region materials."""

    materials: tuple[MaterialParams, ...]
    region: np.ndarray
    model: PhaseFieldKind = field(init=False)
    c0: float = field(init=False)
    c_voigt: np.ndarray = field(init=False)    # (ne, 3, 3)
    k2d: np.ndarray = field(init=False)        # (ne,), 0 when split is NONE
    a_tensor: np.ndarray = field(init=False)   # (ne, 2, 2)
    gc0: np.ndarray = field(init=False)
    lc: np.ndarray = field(init=False)
    e_mod: np.ndarray = field(init=False)
    sigma0: np.ndarray = field(init=False)
    a1: np.ndarray = field(init=False)
    a2: np.ndarray = field(init=False)
    grad_threshold: np.ndarray = field(init=False)
    has_arbitrary: bool = field(init=False)
    stiffness_floor: float = 1e-10

    def __post_init__(self):
        mats = self.materials
        kinds = {m.model for m in mats}
        if len(kinds) != 1:
            raise ValueError("all regions must share one phase-field kind")
        self.model = kinds.pop()
        self.c0 = 2.0 if self.model is PhaseFieldKind.STANDARD else math.pi

        nr = len(mats)
        c_stack = np.stack([build_stiffness(m.elasticity) for m in mats])
        k2d = np.array([m.bulk_2d if m.split is SplitKind.VOLUMETRIC else 0.0
                        for m in mats])
        a_stack = np.stack([
            structural_tensor(m.anisotropy.alpha, m.anisotropy.phi)
            if isinstance(m.anisotropy, StructuralAnisotropy) else np.eye(2)
            for m in mats])
        per = lambda f: np.array([f(m) for m in mats])[self.region]
        self.c_voigt = c_stack[self.region]
        self.k2d = k2d[self.region]
        self.a_tensor = a_stack[self.region]
        self.gc0 = per(lambda m: m.gc0)
        self.lc = per(lambda m: m.lc)
        self.e_mod = per(lambda m: m.young)
        self.sigma0 = per(lambda m: m.sigma0)
        self.a2 = per(lambda m: m.a2)
        if self.model is PhaseFieldKind.COHESIVE:
            self.a1 = per(lambda m: m.a1)
        else:
            self.a1 = np.ones(len(self.region))
        self.grad_threshold = per(lambda m: m.grad_threshold)
        self.has_arbitrary = any(isinstance(m.anisotropy, ArbitraryAnisotropy)
                                 for m in mats)
        del nr


@dataclass
class GaussPointState:
    """History and frozen directional data, one entry per Gauss point.

    Arrays have shape (..., 4); the leading axis is the element index in
    the batched solver and absent in the single-element API.  For
    structural or isotropic runs the directional fields simply hold the
    constant material values.
    """

    h: np.ndarray          # history max(psi0, psi_th) over converged steps
    psi_th: np.ndarray     # damage threshold (0 for the standard model)
    gc: np.ndarray         # fracture energy at the frozen crack angle
    sigma_u: np.ndarray    # strength at the frozen crack angle
    a1: np.ndarray         # softening coefficient at the frozen crack angle
    theta: np.ndarray      # frozen crack angle
    g_d: np.ndarray        # (..., 4, 2)
    s_d: np.ndarray        # (..., 4, 2)
    gamma: np.ndarray      # frozen crack density value

    def copy(self) -> "GaussPointState":
        return GaussPointState(*(getattr(self, f).copy() for f in (
            "h", "psi_th", "gc", "sigma_u", "a1", "theta", "g_d", "s_d", "gamma")))


def initial_state(ms: MaterialSet) -> GaussPointState:
    """State before loading: H at the threshold (cohesive) or zero (standard),
    directional data at the below-threshold fallback values."""
    ne = len(ms.region)
    shape = (ne, 4)
    gc = np.broadcast_to(ms.gc0[:, None], shape).copy()
    sigma_u = np.broadcast_to(ms.sigma0[:, None], shape).copy()
    a1 = np.broadcast_to(ms.a1[:, None], shape).copy()
    if ms.has_arbitrary:
        for r, m in enumerate(ms.materials):
            spec = m.anisotropy
            if not isinstance(spec, ArbitraryAnisotropy):
                continue
            el = ms.region == r
            gc[el] = spec.gc_min
            sigma_u[el] = spec.sigma_u_min
            a1[el] = 4.0 * m.young * spec.gc_min / (
                math.pi * m.lc * spec.sigma_u_min ** 2)
    if ms.model is PhaseFieldKind.COHESIVE:
        psi_th = sigma_u ** 2 / (2.0 * ms.e_mod[:, None])
    else:
        psi_th = np.zeros(shape)
    return GaussPointState(
        h=psi_th.copy(), psi_th=psi_th,
        gc=gc, sigma_u=sigma_u, a1=a1,
        theta=np.zeros(shape),
        g_d=np.zeros(shape + (2,)), s_d=np.zeros(shape + (2,)),
        gamma=np.zeros(shape))


def single_element_state(params: MaterialParams, **overrides) -> GaussPointState:
    """Initial state for one element with selected fields overridden.

    Scalar overrides are broadcast over the four Gauss points; accepted
    keys are the GaussPointState field names.
    """
    ms = MaterialSet(materials=(params,), region=np.zeros(1, dtype=int))
    state = initial_state(ms)
    for name, value in overrides.items():
        arr = getattr(state, name)
        arr[...] = value
    return state


@dataclass
class ElementKernelOutput:
    r: np.ndarray
    k: np.ndarray


# ---------------------------------------------------------------------------
# Batched kernels
# ---------------------------------------------------------------------------

def batch_u_system(qc: QuadratureCache, ms: MaterialSet, u: np.ndarray,
                   d: np.ndarray, state: GaussPointState):
    """Displacement stiffness and internal force, all elements at once.

    The tangent uses the degradation evaluated at the current nodal damage
    (frozen during the displacement solve) plus a small stiffness floor so
    fully broken elements keep an invertible system.
    """
    u_el = u[qc.udofs]                                   # (ne, 8)
    d_el = d[qc.ddofs]                                   # (ne, 4)
    ne = u_el.shape[0]
    ke = np.zeros((ne, 8, 8))
    fint = np.zeros((ne, 8))
    for g in range(4):
        bu = qc.b_u[:, g]
        w = qc.wdetj[:, g]
        eps = np.einsum("eij,ej->ei", bu, u_el)
        d_gp = np.clip(d_el @ qc.n_d[g], 0.0, 1.0)
        if ms.model is PhaseFieldKind.COHESIVE:
            fd, _, _ = model.degradation_eval(d_gp, ms.model, state.a1[:, g], ms.a2)
        else:
            fd, _, _ = model.degradation_eval(d_gp, ms.model)
        fd = fd + ms.stiffness_floor
        comp = (eps[:, 0] + eps[:, 1]) < 0.0
        cgp = fd[:, None, None] * ms.c_voigt \
            + ((1.0 - fd) * ms.k2d * comp)[:, None, None] * VOL_PROJECTOR
        cb = np.einsum("ekl,elj->ekj", cgp, bu)
        ke += np.einsum("eki,ekj,e->eij", bu, cb, w)
        sig = np.einsum("ekl,el->ek", cgp, eps)
        fint += np.einsum("eki,ek,e->ei", bu, sig, w)
    return ke, fint


def batch_psi0(qc: QuadratureCache, ms: MaterialSet, u: np.ndarray) -> np.ndarray:
    """Undamaged tensile energy density psi0 at every Gauss point."""
    u_el = u[qc.udofs]
    psi0 = np.empty((u_el.shape[0], 4))
    for g in range(4):
        eps = np.einsum("eij,ej->ei", qc.b_u[:, g], u_el)
        tr = eps[:, 0] + eps[:, 1]
        e_c0_e = np.einsum("ek,ekl,el->e", eps, ms.c_voigt, eps)
        comp = tr < 0.0
        psi0[:, g] = 0.5 * (e_c0_e - comp * ms.k2d * tr * tr)
    np.maximum(psi0, 0.0, out=psi0)             # clip round-off negatives
    return psi0


def batch_d_system(qc: QuadratureCache, ms: MaterialSet, d: np.ndarray,
                   state: GaussPointState, h_eff: np.ndarray):
    """Damage stiffness and residual with frozen directional data.

    Residual per element:
        int (2 gc lc / c0) B_d^T A B_d d_e
            + N_d^T (omega' gc / (c0 lc) + f_D' H)
            + gamma B_d^T g_d + H B_d^T s_d  dV
    The stiffness differentiates only the first two groups (omega' ->
    omega'', f_D' -> f_D''); the directional terms are explicit.
    """
    d_el = d[qc.ddofs]
    ne = d_el.shape[0]
    kd = np.zeros((ne, 4, 4))
    rd = np.zeros((ne, 4))
    c0 = ms.c0
    for g in range(4):
        bd = qc.b_d[:, g]
        w = qc.wdetj[:, g]
        nd = qc.n_d[g]
        d_gp = np.clip(d_el @ nd, 0.0, 1.0)
        grad = np.einsum("eij,ej->ei", bd, d_el)
        _, omega_p, omega_pp, _ = model.topology_eval(d_gp, ms.model)
        if ms.model is PhaseFieldKind.COHESIVE:
            _, fd_p, fd_pp = model.degradation_eval(d_gp, ms.model, state.a1[:, g], ms.a2)
        else:
            _, fd_p, fd_pp = model.degradation_eval(d_gp, ms.model)
        gc = state.gc[:, g]
        h = h_eff[:, g]
        coef = 2.0 * gc * ms.lc / c0
        a_grad = np.einsum("ekl,el->ek", ms.a_tensor, grad)
        rd += np.einsum("eki,ek,e->ei", bd, a_grad, coef * w)
        rd += nd[None, :] * ((omega_p * gc / (c0 * ms.lc) + fd_p * h) * w)[:, None]
        bab = np.einsum("eki,ekl,elj->eij", bd, ms.a_tensor, bd)
        kd += bab * (coef * w)[:, None, None]
        kd += np.outer(nd, nd)[None] * (
            (omega_pp * gc / (c0 * ms.lc) + fd_pp * h) * w)[:, None, None]
        if ms.has_arbitrary:
            rd += np.einsum("eki,ek,e->ei", bd, state.g_d[:, g], state.gamma[:, g] * w)
            rd += np.einsum("eki,ek,e->ei", bd, state.s_d[:, g], h * w)
    return kd, rd


def refresh_directional(qc: QuadratureCache, ms: MaterialSet, d: np.ndarray,
                        state: GaussPointState) -> None:
    """Recompute the frozen directional data from a converged damage field.

    No-op unless some region uses arbitrary anisotropy.  Below the gradient
    threshold the directional minima are used and g_d = s_d = 0.
    """
    if not ms.has_arbitrary:
        return
    d_el = d[qc.ddofs]
    for r, m in enumerate(ms.materials):
        spec = m.anisotropy
        if not isinstance(spec, ArbitraryAnisotropy):
            continue
        el = np.flatnonzero(ms.region == r)
        if len(el) == 0:
            continue
        e_mod, lc, a2 = m.young, m.lc, m.a2
        a1_min = 4.0 * e_mod * spec.gc_min / (math.pi * lc * spec.sigma_u_min ** 2)
        for g in range(4):
            nd = qc.n_d[g]
            d_gp = np.clip(d_el[el] @ nd, 0.0, 1.0)
            grad = np.einsum("eij,ej->ei", qc.b_d[el, g], d_el[el])
            norm2 = grad[:, 0] ** 2 + grad[:, 1] ** 2
            norm = np.sqrt(norm2)
            above = norm >= m.grad_threshold

            theta = np.where(above,
                             np.arctan2(grad[:, 1], grad[:, 0]) - 0.5 * math.pi,
                             0.0)
            gc = np.where(above, model.gc_direction(theta, spec.terms), spec.gc_min)
            su = np.where(above, model.strength_direction(theta, spec.terms),
                          spec.sigma_u_min)
            a1 = np.where(above,
                          4.0 * e_mod * gc / (math.pi * lc * su ** 2), a1_min)

            dtheta = np.zeros_like(grad)
            safe = np.where(norm2 > 0.0, norm2, 1.0)
            dtheta[:, 0] = -grad[:, 1] / safe
            dtheta[:, 1] = grad[:, 0] / safe
            dgc = model.dgc_dtheta(theta, spec.terms)
            g_d = np.where(above[:, None], dgc[:, None] * dtheta, 0.0)
            if ms.model is PhaseFieldKind.COHESIVE:
                dsu = model.dstrength_dtheta(theta, spec.terms)
                da1 = (4.0 * e_mod / (math.pi * lc)) * (
                    dgc / su ** 2 - 2.0 * gc * dsu / su ** 3)
                dfd_da1 = model.degradation_da1(d_gp, ms.model, a1, a2)
                s_d = np.where(above[:, None], (dfd_da1 * da1)[:, None] * dtheta, 0.0)
            else:
                s_d = np.zeros_like(grad)

            omega, _, _, c0 = model.topology_eval(d_gp, ms.model)
            state.theta[el, g] = theta
            state.gc[el, g] = gc
            state.sigma_u[el, g] = su
            state.a1[el, g] = a1
            state.g_d[el, g] = g_d
            state.s_d[el, g] = s_d
            state.gamma[el, g] = omega / (c0 * lc) + (lc / c0) * norm2
            if ms.model is PhaseFieldKind.COHESIVE:
                state.psi_th[el, g] = su ** 2 / (2.0 * e_mod)


# ---------------------------------------------------------------------------
# Single-element API
# ---------------------------------------------------------------------------

class _SingleElement:
    """Adapter presenting one element as a one-element batch."""

    def __init__(self, coords, params: MaterialParams):
        m = Mesh(nodes=np.asarray(coords, dtype=float),
                 quads=np.array([[0, 1, 2, 3]]),
                 region_id=np.zeros(1, dtype=int))
        self.qc = QuadratureCache(m)
        self.ms = MaterialSet(materials=(params,), region=np.zeros(1, dtype=int))


def _expand_state(state: Optional[GaussPointState], ms: MaterialSet) -> GaussPointState:
    if state is None:
        return initial_state(ms)
    out = state.copy()
    for name in ("h", "psi_th", "gc", "sigma_u", "a1", "theta", "gamma"):
        arr = np.asarray(getattr(out, name), dtype=float)
        setattr(out, name, np.broadcast_to(arr, (1, 4)).copy()
                if arr.ndim <= 1 else arr)
    for name in ("g_d", "s_d"):
        arr = np.asarray(getattr(out, name), dtype=float)
        setattr(out, name, np.broadcast_to(arr, (1, 4, 2)).copy()
                if arr.ndim <= 2 else arr)
    return out


def element_u(coords, u_e, d_e, state: Optional[GaussPointState],
              params: MaterialParams) -> ElementKernelOutput:
    """Displacement residual (internal force) and stiffness of one quad."""
    se = _SingleElement(coords, params)
    st = _expand_state(state, se.ms)
    u = np.zeros(8)
    u[:] = np.asarray(u_e, dtype=float).ravel()
    d = np.asarray(d_e, dtype=float).ravel()
    ke, fint = batch_u_system(se.qc, se.ms, u, d, st)
    return ElementKernelOutput(r=fint[0], k=ke[0])


def _element_d(coords, d_e, state, params) -> ElementKernelOutput:
    se = _SingleElement(coords, params)
    st = _expand_state(state, se.ms)
    d = np.asarray(d_e, dtype=float).ravel()
    kd, rd = batch_d_system(se.qc, se.ms, d, st, st.h)
    return ElementKernelOutput(r=rd[0], k=kd[0])


def element_d_structural(coords, d_e, state: Optional[GaussPointState],
                         params: MaterialParams) -> ElementKernelOutput:
    """Damage residual and stiffness with an (optional) structural tensor."""
    if isinstance(params.anisotropy, ArbitraryAnisotropy):
        raise ValueError("use element_d_arbitrary for arbitrary anisotropy")
    return _element_d(coords, d_e, state, params)


def element_d_arbitrary(coords, d_e, state: Optional[GaussPointState],
                        params: MaterialParams) -> ElementKernelOutput:
    """Damage residual and stiffness with frozen direction-dependent data."""
    if not isinstance(params.anisotropy, ArbitraryAnisotropy):
        raise ValueError("element_d_arbitrary needs arbitrary anisotropy")
    return _element_d(coords, d_e, state, params)


def update_history(state: GaussPointState, psi0: np.ndarray) -> GaussPointState:
    """Commit the history field: H <- max(H, psi0, psi_th), monotone."""
    out = state.copy()
    out.h = np.maximum(out.h, np.maximum(psi0, out.psi_th))
    return out
