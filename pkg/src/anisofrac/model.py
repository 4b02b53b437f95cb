"""Scalar constitutive laws and material parameter containers.

Everything here is a pure function of its inputs: crack topology and
degradation functions, the softening coefficient a1, direction-dependent
fracture energy and strength, crack-angle extraction from the damage
gradient, the second-order structural tensor and the damage energy
threshold.  Units follow the GPa / micrometre convention used by the
bundled benchmarks, but nothing below depends on a particular unit
system as long as it is consistent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "PhaseFieldKind",
    "SplitKind",
    "Isotropic",
    "AnisotropicVoigt",
    "StructuralAnisotropy",
    "FrequencyTerm",
    "ArbitraryAnisotropy",
    "MaterialParams",
    "StabilityWarning",
    "DegenerateGradientError",
    "topology_eval",
    "degradation_eval",
    "degradation_da1",
    "a1_coefficient",
    "gc_direction",
    "dgc_dtheta",
    "strength_direction",
    "dstrength_dtheta",
    "crack_angle",
    "structural_tensor",
    "threshold_energy",
    "wrap_angle",
]


class StabilityWarning(UserWarning):
    """Raised as a warning when parameters leave the numerically stable range."""


class DegenerateGradientError(ValueError):
    """Damage gradient has zero norm; the crack direction is undefined."""


class PhaseFieldKind(Enum):
    STANDARD = "standard"   # quadratic topology, (1-d)^2 degradation
    COHESIVE = "cohesive"   # linear-term topology, rational degradation


class SplitKind(Enum):
    VOLUMETRIC = "volumetric"  # compressive volumetric strain kept undamaged
    NONE = "none"              # full stiffness degraded


# ---------------------------------------------------------------------------
# Elasticity specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Isotropic:
    """Isotropic elasticity given by the Lame constants (plane strain)."""

    lam: float  # first Lame constant [GPa]
    mu: float   # shear modulus [GPa]

    def __post_init__(self):
        if self.mu <= 0.0 or self.lam + self.mu <= 0.0:
            raise ValueError("Lame constants must give positive moduli")

    @property
    def young(self) -> float:
        return self.mu * (3.0 * self.lam + 2.0 * self.mu) / (self.lam + self.mu)

    @property
    def poisson(self) -> float:
        return self.lam / (2.0 * (self.lam + self.mu))

    @property
    def bulk_2d(self) -> float:
        # in-plane bulk modulus; the volumetric split must reproduce the
        # undamaged response for in-plane hydrostatic states, which in plane
        # strain requires lam + mu rather than the 3D lam + 2mu/3
        return self.lam + self.mu


@dataclass(frozen=True)
class AnisotropicVoigt:
    """Plane-strain stiffness given directly in Voigt form (xx, yy, xy)."""

    C11: float
    C12: float
    C16: float
    C22: float
    C26: float
    C66: float

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.C11, self.C12, self.C16],
             [self.C12, self.C22, self.C26],
             [self.C16, self.C26, self.C66]], dtype=float)

    def __post_init__(self):
        if np.linalg.eigvalsh(self.matrix()).min() <= 0.0:
            raise ValueError("anisotropic Voigt stiffness must be positive definite")

    @property
    def young(self) -> float:
        # effective axial modulus 1/S11 of the plane-strain compliance; used
        # where the scalar formulas (a1, energy threshold) need a modulus
        return 1.0 / np.linalg.inv(self.matrix())[0, 0]


ElasticitySpec = Union[Isotropic, AnisotropicVoigt]


# ---------------------------------------------------------------------------
# Anisotropy specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructuralAnisotropy:
    """Preferred crack direction enforced through I + alpha a (x) a."""

    alpha: float  # penalty weight, >= 0
    phi: float    # preferred crack direction [rad]

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")


@dataclass(frozen=True)
class FrequencyTerm:
    """One trigonometric term of the direction-dependent properties."""

    m: int                 # angular frequency, >= 1
    kappa: float           # fracture-energy amplitude [GPa um]
    sigma0m: float         # strength amplitude [GPa]
    alpha_m: float = 0.0   # modulation depth
    theta_prime: float = 0.0  # phase shift [rad]
    p_m: float = 0.0       # strength exponent

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("frequency number m must be >= 1")
        if self.kappa <= 0.0 or self.sigma0m <= 0.0:
            raise ValueError("kappa and sigma0m must be positive")


@dataclass(frozen=True)
class ArbitraryAnisotropy:
    """Direction-dependent fracture energy and strength from frequency terms."""

    terms: tuple[FrequencyTerm, ...]
    gc_min: float = field(init=False, repr=False, default=0.0)
    sigma_u_min: float = field(init=False, repr=False, default=0.0)

    def __init__(self, terms: Sequence[FrequencyTerm]):
        terms = tuple(terms)
        if not terms:
            raise ValueError("frequency term list must be non-empty")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "gc_min",
                           _directional_minimum(lambda t: gc_direction(t, terms)))
        object.__setattr__(self, "sigma_u_min",
                           _directional_minimum(lambda t: strength_direction(t, terms)))


AnisotropyKind = Union[None, StructuralAnisotropy, ArbitraryAnisotropy]


def _directional_minimum(fun, n_samples: int = 4096) -> float:
    """Minimum of a 2*pi-periodic direction function.

    Dense sampling locates the basin, a bounded scalar minimisation refines
    it.  Evaluated once per parameter set at construction time.
    """
    thetas = np.linspace(-math.pi, math.pi, n_samples, endpoint=False)
    vals = fun(thetas)
    k = int(np.argmin(vals))
    h = 2.0 * math.pi / n_samples
    res = minimize_scalar(fun, bounds=(thetas[k] - h, thetas[k] + h),
                          method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


# ---------------------------------------------------------------------------
# Material parameter aggregate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialParams:
    """All constitutive constants of one material region."""

    elasticity: ElasticitySpec
    gc0: float                 # fracture energy [GPa um]
    sigma0: float              # ultimate strength [GPa]
    lc: float                  # internal length [um]
    a2: float = -0.5           # second softening constant
    model: PhaseFieldKind = PhaseFieldKind.COHESIVE
    anisotropy: AnisotropyKind = None
    split: SplitKind = SplitKind.VOLUMETRIC
    grad_threshold: float = 0.2   # |grad d| below which directionality is frozen
    bulk_modulus: Optional[float] = None  # explicit k0 for anisotropic + volumetric

    def __post_init__(self):
        if self.gc0 <= 0.0 or self.sigma0 <= 0.0 or self.lc <= 0.0:
            raise ValueError("gc0, sigma0 and lc must be positive")
        if self.split is SplitKind.VOLUMETRIC and isinstance(self.elasticity, AnisotropicVoigt) \
                and self.bulk_modulus is None:
            raise ValueError("volumetric split with anisotropic elasticity "
                             "needs an explicit bulk_modulus")
        if self.model is PhaseFieldKind.COHESIVE:
            a1_coefficient(self.young, self.gc0, self.lc, self.sigma0)

    @property
    def young(self) -> float:
        return self.elasticity.young

    @property
    def a1(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            return a1_coefficient(self.young, self.gc0, self.lc, self.sigma0)

    @property
    def psi_th(self) -> float:
        """Damage energy threshold; zero for the standard model (no elastic stage)."""
        if self.model is PhaseFieldKind.STANDARD:
            return 0.0
        return threshold_energy(self.sigma0, self.young)

    @property
    def characteristic_length(self) -> float:
        return self.young * self.gc0 / self.sigma0 ** 2

    @property
    def bulk_2d(self) -> float:
        if self.bulk_modulus is not None:
            return self.bulk_modulus
        if isinstance(self.elasticity, Isotropic):
            return self.elasticity.bulk_2d
        raise ValueError("no bulk modulus available for anisotropic elasticity")


# ---------------------------------------------------------------------------
# Scalar laws
# ---------------------------------------------------------------------------

def topology_eval(d, kind: PhaseFieldKind):
    """Crack topology function omega(d), its derivatives and c0.

    Parameters
    ----------
    d : float or ndarray
        Damage in [0, 1].
    kind : PhaseFieldKind
        STANDARD gives omega = d^2 with c0 = 2, COHESIVE gives
        omega = 2d - d^2 with c0 = pi.

    Returns
    -------
    (omega, omega', omega'', c0)
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < -1e-12) or np.any(d > 1.0 + 1e-12):
        raise ValueError("damage must lie in [0, 1]")
    if kind is PhaseFieldKind.STANDARD:
        return d * d, 2.0 * d, np.full_like(d, 2.0), 2.0
    return 2.0 * d - d * d, 2.0 - 2.0 * d, np.full_like(d, -2.0), math.pi


def degradation_eval(d, kind: PhaseFieldKind, a1=0.0, a2=-0.5):
    """Stiffness degradation f_D(d) with first and second derivatives.

    The cohesive form is the rational function reproducing a bilinear
    traction-separation law; a1 must then be positive (it may be an array
    broadcastable against d).  The second derivative is obtained by exact
    differentiation of the quotient.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < -1e-12) or np.any(d > 1.0 + 1e-12):
        raise ValueError("damage must lie in [0, 1]")
    if kind is PhaseFieldKind.STANDARD:
        one = 1.0 - d
        return one * one, -2.0 * one, np.full_like(d, 2.0)
    a1 = np.asarray(a1, dtype=float)
    if np.any(a1 <= 0.0):
        raise ValueError("cohesive degradation needs a1 > 0")
    one = 1.0 - d
    p = one * one
    pp = -2.0 * one
    q = p + a1 * d + a1 * a2 * d * d
    qp = pp + a1 + 2.0 * a1 * a2 * d
    qpp = 2.0 + 2.0 * a1 * a2
    f = p / q
    n = pp * q - p * qp
    fp = n / (q * q)
    fpp = ((2.0 * q - p * qpp) * q - 2.0 * n * qp) / (q * q * q)
    return f, fp, fpp


def degradation_da1(d, kind: PhaseFieldKind, a1, a2=-0.5):
    """Sensitivity of f_D to the softening coefficient a1 (zero for STANDARD)."""
    d = np.asarray(d, dtype=float)
    if kind is PhaseFieldKind.STANDARD:
        return np.zeros_like(d)
    a1 = np.asarray(a1, dtype=float)
    one = 1.0 - d
    p = one * one
    q = p + a1 * d + a1 * a2 * d * d
    return -p * (d + a2 * d * d) / (q * q)


def a1_coefficient(E: float, gc: float, lc: float, sigma: float) -> float:
    """Softening coefficient a1 = 4 E gc / (pi lc sigma^2).

    Warns when a1 drops below 3/2, the limit below which the cohesive
    degradation function loses convexity at d = 0 and the damage solve
    becomes unstable (equivalently lc > (8/3pi) * E gc / sigma^2).
    """
    if E <= 0.0 or gc <= 0.0 or lc <= 0.0 or sigma <= 0.0:
        raise ValueError("a1 inputs must all be positive")
    a1 = 4.0 * E * gc / (math.pi * lc * sigma * sigma)
    if a1 < 1.5:
        warnings.warn(
            f"a1 = {a1:.4g} < 3/2: internal length exceeds the stable bound "
            f"0.85 * E*gc/sigma^2 = {8.0 * E * gc / (3.0 * math.pi * sigma**2):.4g}",
            StabilityWarning, stacklevel=2)
    return a1


def gc_direction(theta, terms: Sequence[FrequencyTerm]):
    """Direction-dependent fracture energy G_c(theta)."""
    terms = tuple(terms)
    if not terms:
        raise ValueError("frequency term list must be non-empty")
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for t in terms:
        s = np.sin(t.m * (theta + t.theta_prime))
        out = out + t.kappa * (1.0 + t.alpha_m * s * s)
    return out if out.ndim else float(out)


def dgc_dtheta(theta, terms: Sequence[FrequencyTerm]):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for t in terms:
        out = out + t.kappa * t.alpha_m * t.m * np.sin(2.0 * t.m * (theta + t.theta_prime))
    return out if out.ndim else float(out)


def strength_direction(theta, terms: Sequence[FrequencyTerm]):
    """Direction-dependent tensile strength sigma_u(theta)."""
    terms = tuple(terms)
    if not terms:
        raise ValueError("frequency term list must be non-empty")
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for t in terms:
        s = np.sin(t.m * (theta + t.theta_prime))
        out = out + t.sigma0m * (1.0 + t.alpha_m * s * s) ** t.p_m
    return out if out.ndim else float(out)


def dstrength_dtheta(theta, terms: Sequence[FrequencyTerm]):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for t in terms:
        s = np.sin(t.m * (theta + t.theta_prime))
        base = 1.0 + t.alpha_m * s * s
        out = out + (t.sigma0m * t.p_m * base ** (t.p_m - 1.0)
                     * t.alpha_m * t.m * np.sin(2.0 * t.m * (theta + t.theta_prime)))
    return out if out.ndim else float(out)


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(theta, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    elif w > math.pi:
        w -= 2.0 * math.pi
    return w


def crack_angle(grad_d) -> float:
    """Crack direction angle from the damage gradient.

    The crack runs perpendicular to grad d, so the angle of the crack line
    is atan2(dd/dy, dd/dx) - pi/2, wrapped to (-pi, pi].  All direction
    functions built on it are pi-periodic, so the wrap convention carries
    no physical content.
    """
    gx, gy = float(grad_d[0]), float(grad_d[1])
    if gx == 0.0 and gy == 0.0:
        raise DegenerateGradientError("zero damage gradient has no direction")
    return wrap_angle(math.atan2(gy, gx) - 0.5 * math.pi)


def structural_tensor(alpha: float, phi: float) -> np.ndarray:
    """Second-order structural tensor A = I + alpha a (x) a with a = (cos phi, sin phi)."""
    if alpha < 0.0:
        raise ValueError("alpha must be non-negative")
    c, s = math.cos(phi), math.sin(phi)
    a = np.array([c, s])
    return np.eye(2) + alpha * np.outer(a, a)


def threshold_energy(sigma: float, E: float) -> float:
    """Elastic energy density at damage onset, sigma^2 / (2 E)."""
    if E <= 0.0:
        raise ValueError("modulus must be positive")
    if sigma < 0.0:
        raise ValueError("strength must be non-negative")
    return sigma * sigma / (2.0 * E)
