"""Bilinear cohesive-zone law and the zero-thickness interface element.

The traction-separation law couples the normal and shear gaps through the
effective separation lambda = sqrt(<g_n>^2 + (beta g_s)^2); damage follows
the bilinear envelope and is irreversible through the maximum separation
reached.  Compressive normal contact is penalised with the undamaged
stiffness so failed interfaces do not interpenetrate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mesh import InterfaceElement
from .model import StabilityWarning

__all__ = ["CzParams", "CzPointState", "tsl_eval", "cz_element",
           "CzElementOutput"]


@dataclass(frozen=True)
class CzParams:
    """Bilinear traction-separation parameters."""

    k0: float        # initial stiffness [GPa/um]
    t0: float        # interface strength [GPa]
    lambda_f: float  # separation at complete failure [um]
    beta: float = 1.0  # mode-mixity weight on the shear gap

    def __post_init__(self):
        if self.k0 <= 0.0 or self.t0 <= 0.0 or self.lambda_f <= 0.0:
            raise ValueError("k0, t0 and lambda_f must be positive")
        if not self.lambda0 < self.lambda_f:
            raise ValueError("need lambda0 = t0/k0 < lambda_f")
        if self.lambda0 / self.lambda_f < 1e-9:
            warnings.warn(
                f"lambda0/lambda_f = {self.lambda0 / self.lambda_f:.1e}: "
                "near-rigid initial stiffness, expect an ill-conditioned system",
                StabilityWarning, stacklevel=2)

    @property
    def lambda0(self) -> float:
        """Separation at damage onset (t0 = k0 * lambda0)."""
        return self.t0 / self.k0

    @property
    def gc_int(self) -> float:
        """Interface fracture energy, half the bilinear envelope area."""
        return 0.5 * self.t0 * self.lambda_f


@dataclass
class CzPointState:
    """Committed interface history at one integration point."""

    damage: float = 0.0
    lambda_max: float = 0.0

    def copy(self) -> "CzPointState":
        return CzPointState(damage=self.damage, lambda_max=self.lambda_max)


def _damage_of(lam: float, p: CzParams) -> float:
    if lam <= p.lambda0:
        return 0.0
    if lam >= p.lambda_f:
        return 1.0
    return (p.lambda_f / (p.lambda_f - p.lambda0)) * (lam - p.lambda0) / lam


def tsl_eval(g_n: float, g_s: float, state: CzPointState, params: CzParams):
    """Tractions, updated state and consistent 2x2 tangent.

    Returns ``(t_n, t_s, new_state, k)`` with k = d(t_n, t_s)/d(g_n, g_s).
    The tangent is consistent on the active softening branch and secant on
    unloading/reloading below the maximum separation reached.
    """
    p = params
    gn_pos = max(g_n, 0.0)
    lam = math.hypot(gn_pos, p.beta * g_s)
    lam_eff = max(lam, state.lambda_max)
    d = _damage_of(lam_eff, p)
    new_state = CzPointState(damage=d, lambda_max=lam_eff)

    k = np.zeros((2, 2))
    sec = p.k0 * (1.0 - d)
    if g_n >= 0.0:
        t_n = sec * g_n
        k[0, 0] = sec
    else:
        t_n = p.k0 * g_n          # undamaged compressive penalty
        k[0, 0] = p.k0
    t_s = p.beta ** 2 * sec * g_s
    k[1, 1] = p.beta ** 2 * sec

    softening = (p.lambda0 < lam < p.lambda_f) and lam >= state.lambda_max
    if softening and lam > 0.0:
        dd_dlam = (p.lambda_f / (p.lambda_f - p.lambda0)) * p.lambda0 / lam ** 2
        dlam = np.array([gn_pos / lam, p.beta ** 2 * g_s / lam])
        if g_n >= 0.0:
            k[0] -= p.k0 * g_n * dd_dlam * dlam
        k[1] -= p.beta ** 2 * p.k0 * g_s * dd_dlam * dlam
    return t_n, t_s, new_state, k


@dataclass
class CzElementOutput:
    r: np.ndarray                 # (8,) internal force, dofs [low0 low1 up0 up1] x (x, y)
    k: np.ndarray                 # (8, 8)
    states: list[CzPointState]    # trial states at the two integration points


def cz_element(iface: InterfaceElement, u_nodes, states, params: CzParams) -> CzElementOutput:
    """Residual and tangent of one zero-thickness interface element.

    `u_nodes` holds the displacements of (lower0, lower1, upper0, upper1)
    as a (4, 2) array.  Two-point Newton-Cotes (nodal) integration keeps
    the gap evaluation local to each node pair, which avoids spurious
    traction oscillations at high initial stiffness.
    """
    u = np.asarray(u_nodes, dtype=float).reshape(4, 2)
    t_hat, n_hat = iface.tangent, iface.normal
    q = np.column_stack([n_hat, t_hat])      # local (n, t) -> global
    w = 0.5 * iface.length

    r = np.zeros(8)
    k = np.zeros((8, 8))
    new_states = []
    for j in range(2):
        delta = u[2 + j] - u[j]
        g_n = float(n_hat @ delta)
        g_s = float(t_hat @ delta)
        t_n, t_s, st, k_loc = tsl_eval(g_n, g_s, states[j], params)
        new_states.append(st)
        f_glob = q @ np.array([t_n, t_s]) * w
        k_glob = q @ k_loc @ q.T * w
        lo = slice(2 * j, 2 * j + 2)
        up = slice(4 + 2 * j, 6 + 2 * j)
        r[up] += f_glob
        r[lo] -= f_glob
        k[up, up] += k_glob
        k[lo, lo] += k_glob
        k[up, lo] -= k_glob
        k[lo, up] -= k_glob
    return CzElementOutput(r=r, k=k, states=new_states)
