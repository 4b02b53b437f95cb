"""Closed-form 1D oracles used to validate the field implementation.

Everything in this module is computed independently of the element
kernels: homogeneous-bar softening curves, the topology normalisation
constant by quadrature, localized damage profiles, the internal-length /
strength relation of the standard model, and the structural-tensor energy
identity.  The test suite and the ``verify`` CLI subcommand drive these
against the published constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad

from .model import (
    MaterialParams,
    PhaseFieldKind,
    degradation_eval,
    structural_tensor,
    topology_eval,
)

__all__ = ["BarResponse", "c0_numeric", "bar_response", "lc_from_strength",
           "aniso_energy_check", "damage_profile"]

_OMEGAS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "quadratic": lambda d: d * d,        # standard model
    "linear": lambda d: d,
    "cohesive": lambda d: 2.0 * d - d * d,
}


def _omega_callable(omega) -> Callable:
    if callable(omega):
        return omega
    if isinstance(omega, PhaseFieldKind):
        return _OMEGAS["quadratic" if omega is PhaseFieldKind.STANDARD
                       else "cohesive"]
    try:
        return _OMEGAS[omega]
    except KeyError:
        raise ValueError(f"unknown topology function '{omega}'") from None


def c0_numeric(omega) -> float:
    """Normalisation constant c0 = 4 * integral_0^1 sqrt(omega) by quadrature.

    `omega` may be a callable, a PhaseFieldKind, or one of the names
    'quadratic', 'linear', 'cohesive'.
    """
    fun = _omega_callable(omega)

    def integrand(s: float) -> float:
        v = float(fun(s))
        if v < 0.0:
            raise ValueError(f"omega({s}) = {v} < 0")
        return math.sqrt(v)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return 4.0 * val


@dataclass
class BarResponse:
    """Homogeneous 1D softening response sampled over the damage range."""

    strain: np.ndarray
    stress: np.ndarray
    damage: np.ndarray
    peak_stress: float
    peak_damage: float
    w_u: float   # ultimate crack opening (inf for the standard model)


def bar_response(params: MaterialParams, n: int = 1601) -> BarResponse:
    """Stress/strain of the uniform-damage bar, parameterised by d.

    The homogeneous damage balance sigma^2 g'(d) / (2E) =
    (G_c / (c0 lc)) omega'(d) is explicit in d, so the curve is sampled by
    sweeping d and evaluating sigma(d) and eps(d) = sigma (g(d) + 1) / E
    in closed form; no root finding is involved.  The grid contains
    d = 0.25 exactly, where the standard model peaks.
    """
    e_mod, gc, lc = params.young, params.gc0, params.lc
    kind = params.model
    # leave out d -> 1 where the parameterisation degenerates
    ds = np.linspace(0.0, 1.0, n)[:-1]
    if (n - 1) % 4 != 0:
        raise ValueError("n - 1 must be divisible by 4 so the grid hits 0.25")
    _, omega_p, _, c0 = topology_eval(ds, kind)
    if kind is PhaseFieldKind.COHESIVE:
        fd, fd_p, _ = degradation_eval(ds, kind, params.a1, params.a2)
    else:
        fd, fd_p, _ = degradation_eval(ds, kind)
    g_p = -fd_p / fd ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma2 = 2.0 * e_mod * gc * omega_p / (c0 * lc * g_p)
    sigma2 = np.where(g_p > 0.0, sigma2, 0.0)
    sigma = np.sqrt(np.maximum(sigma2, 0.0))
    eps = sigma * (1.0 / fd) / e_mod

    k = int(np.argmax(sigma))
    if kind is PhaseFieldKind.COHESIVE:
        w_u = 2.0 * math.pi * gc / (params.sigma0 * c0) * math.sqrt(
            2.0 * (1.0 + params.a2))
    else:
        w_u = math.inf

    # prepend the elastic branch up to crack initiation
    strain = np.concatenate([[0.0], eps])
    stress = np.concatenate([[0.0], sigma])
    damage = np.concatenate([[0.0], ds])
    return BarResponse(strain=strain, stress=stress, damage=damage,
                       peak_stress=float(sigma[k]), peak_damage=float(ds[k]),
                       w_u=w_u)


def lc_from_strength(e_mod: float, gc: float, sigma0: float) -> float:
    """Internal length at which the standard-model peak equals sigma0.

    Inverts sigma0 = (9/16) sqrt(E gc / (3 lc)).
    """
    if min(e_mod, gc, sigma0) <= 0.0:
        raise ValueError("inputs must be positive")
    return (81.0 / 256.0) * e_mod * gc / (3.0 * sigma0 ** 2)


def aniso_energy_check(grad_d, d: float, alpha: float, phi: float,
                       gc0: float, lc: float) -> tuple[float, float]:
    """Structural-tensor crack energy, quadratic-form route vs closed form.

    Both evaluate G_c0 [omega/(c0 lc) + (lc/c0) |grad d|^2 (1 + alpha
    sin^2(theta - phi))]; the first through grad d . A . grad d, the second
    through the crack angle.  They agree to round-off, which pins the
    angle convention of the structural tensor.
    """
    grad_d = np.asarray(grad_d, dtype=float)
    norm2 = float(grad_d @ grad_d)
    if norm2 == 0.0:
        raise ValueError("zero damage gradient")
    c0 = math.pi
    omega = 2.0 * d - d * d
    a = structural_tensor(alpha, phi)
    quad_form = gc0 * (omega / (c0 * lc) + (lc / c0) * float(grad_d @ a @ grad_d))
    theta = math.atan2(grad_d[1], grad_d[0]) - 0.5 * math.pi
    closed = gc0 * (omega / (c0 * lc)
                    + (lc / c0) * norm2 * (1.0 + alpha * math.sin(theta - phi) ** 2))
    return quad_form, closed


def damage_profile(x, omega, lc: float) -> np.ndarray:
    """Localised damage profile d_u(x) of the 1D optimal crack.

    x is the distance from the crack plane (>= 0).  The quadratic topology
    decays exponentially with unbounded support; the linear and cohesive
    ones have finite support 2 lc and (pi/2) lc respectively.
    """
    x = np.abs(np.asarray(x, dtype=float))
    if callable(omega):
        raise TypeError("damage_profile needs a named topology, not a callable")
    if isinstance(omega, PhaseFieldKind):
        omega = "quadratic" if omega is PhaseFieldKind.STANDARD else "cohesive"
    if omega == "quadratic":
        return np.exp(-x / lc)
    if omega == "linear":
        return np.where(x <= 2.0 * lc, (1.0 - x / (2.0 * lc)) ** 2, 0.0)
    if omega == "cohesive":
        return np.where(x <= 0.5 * math.pi * lc, 1.0 - np.sin(x / lc), 0.0)
    raise ValueError(f"unknown topology function '{omega}'")
