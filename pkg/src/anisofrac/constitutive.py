"""Tensor-level material response at a quadrature point.

Plane-strain Voigt convention throughout: strain = (eps_xx, eps_yy, gamma_xy)
with engineering shear, stress = (sig_xx, sig_yy, sig_xy).  The volumetric
split keeps the compressive in-plane volumetric response undamaged, which
leaves the damage driving energy psi0 non-negative for every strain state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    ArbitraryAnisotropy,
    AnisotropicVoigt,
    ElasticitySpec,
    Isotropic,
    MaterialParams,
    PhaseFieldKind,
    SplitKind,
    crack_angle,
    degradation_da1,
    dgc_dtheta,
    dstrength_dtheta,
    gc_direction,
    strength_direction,
)

__all__ = ["PointResponse", "DirectionalTerms", "build_stiffness",
           "point_response", "directional_terms", "VOL_PROJECTOR"]

# Voigt form of I (x) I restricted to the in-plane trace channel
VOL_PROJECTOR = np.array([[1.0, 1.0, 0.0],
                          [1.0, 1.0, 0.0],
                          [0.0, 0.0, 0.0]])


def build_stiffness(spec: ElasticitySpec) -> np.ndarray:
    """Undamaged plane-strain stiffness in Voigt form (3x3)."""
    if isinstance(spec, Isotropic):
        lam, mu = spec.lam, spec.mu
        return np.array([[lam + 2.0 * mu, lam, 0.0],
                         [lam, lam + 2.0 * mu, 0.0],
                         [0.0, 0.0, mu]])
    if isinstance(spec, AnisotropicVoigt):
        return spec.matrix()
    raise TypeError(f"unknown elasticity spec {type(spec).__name__}")


@dataclass
class PointResponse:
    """Stress, consistent tangent and damage driving energy at one point."""

    stress: np.ndarray      # Voigt 3-vector
    tangent: np.ndarray     # 3x3, d stress / d strain at fixed damage
    psi0: float             # undamaged tensile energy driving damage
    dpsi0_deps: np.ndarray  # Voigt 3-vector, d psi0 / d strain


def point_response(eps, d: float, f_d: float, params: MaterialParams) -> PointResponse:
    """Degraded stress and tangent under the volumetric split.

    With the split active, sigma = f_D C0 : eps + (1 - f_D) P : eps where
    P = k0 I(x)I acts only when tr(eps) < 0; the driving energy is
    psi0 = 1/2 eps : (C0 - P) : eps.  With split NONE, P vanishes.
    """
    eps = np.asarray(eps, dtype=float)
    c0 = build_stiffness(params.elasticity)
    if params.split is SplitKind.VOLUMETRIC:
        k0 = params.bulk_2d
        compressive = (eps[0] + eps[1]) < 0.0
        p = k0 * VOL_PROJECTOR if compressive else np.zeros((3, 3))
    else:
        p = np.zeros((3, 3))
    ch = c0 - p
    dpsi0 = ch @ eps
    psi0 = max(0.5 * float(eps @ dpsi0), 0.0)   # clip round-off negatives
    tangent = f_d * c0 + (1.0 - f_d) * p
    stress = tangent @ eps
    return PointResponse(stress=stress, tangent=tangent, psi0=psi0, dpsi0_deps=dpsi0)


@dataclass
class DirectionalTerms:
    """Directional quantities entering the arbitrary-anisotropy damage residual."""

    g_d: np.ndarray        # d G_c / d grad d (2-vector)
    s_d: np.ndarray        # d f_D / d grad d (2-vector)
    gc_theta: float        # fracture energy at the crack angle
    sigma_u_theta: float   # strength at the crack angle
    a1_theta: float        # softening coefficient at the crack angle
    theta: float = 0.0     # crack angle used (0 below threshold)


def directional_terms(grad_d, d: float, gamma: float,
                      params: MaterialParams) -> DirectionalTerms:
    """Evaluate the direction-dependent properties and their gradient terms.

    Above the gradient threshold the crack angle is extracted from grad d
    and the chain rule gives g_d = (dG_c/dtheta)(dtheta/dgrad d) and
    s_d = (df_D/da1)(da1/dtheta)(dtheta/dgrad d).  Below it, the terms
    vanish and the minima of G_c and sigma_u over all directions are used,
    so that damage nucleation is never blocked by an accidental gradient
    direction.  `gamma` is accepted for interface symmetry with the element
    kernels (the crack-density value multiplies g_d there, not here).
    """
    spec = params.anisotropy
    if not isinstance(spec, ArbitraryAnisotropy):
        raise TypeError("directional terms require arbitrary anisotropy")
    del gamma

    grad_d = np.asarray(grad_d, dtype=float)
    norm = float(np.hypot(grad_d[0], grad_d[1]))
    e = params.young

    if norm < params.grad_threshold:
        gc_min = spec.gc_min
        su_min = spec.sigma_u_min
        a1 = 4.0 * e * gc_min / (math.pi * params.lc * su_min ** 2)
        return DirectionalTerms(g_d=np.zeros(2), s_d=np.zeros(2),
                                gc_theta=gc_min, sigma_u_theta=su_min,
                                a1_theta=a1, theta=0.0)

    theta = crack_angle(grad_d)
    gc = float(gc_direction(theta, spec.terms))
    su = float(strength_direction(theta, spec.terms))
    a1 = 4.0 * e * gc / (math.pi * params.lc * su ** 2)

    # dtheta/dgrad d is perpendicular to grad d with norm 1/|grad d|
    dtheta_dgrad = np.array([-grad_d[1], grad_d[0]]) / (norm * norm)
    dgc = float(dgc_dtheta(theta, spec.terms))
    g_d = dgc * dtheta_dgrad

    if params.model is PhaseFieldKind.STANDARD:
        s_d = np.zeros(2)
    else:
        dsu = float(dstrength_dtheta(theta, spec.terms))
        da1_dtheta = (4.0 * e / (math.pi * params.lc)) * (
            dgc / su ** 2 - 2.0 * gc * dsu / su ** 3)
        dfd_da1 = float(degradation_da1(d, params.model, a1, params.a2))
        s_d = dfd_da1 * da1_dtheta * dtheta_dgrad

    return DirectionalTerms(g_d=g_d, s_d=s_d, gc_theta=gc,
                            sigma_u_theta=su, a1_theta=a1, theta=theta)
