"""Element kernels: shape functions, residual/stiffness consistency, history.

The central oracle throughout is central finite differences of each
residual with respect to its DOF vector, which every stiffness matrix must
reproduce.
"""

import math

import numpy as np
import pytest

from anisofrac import fem
from anisofrac.model import (
    ArbitraryAnisotropy,
    FrequencyTerm,
    Isotropic,
    MaterialParams,
    PhaseFieldKind,
    SplitKind,
    StructuralAnisotropy,
)

ISO = Isotropic(lam=132.6, mu=163.4)
UNIT_QUAD = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _params(**kw):
    base = dict(elasticity=ISO, gc0=0.04, sigma0=5.0, lc=0.05,
                model=PhaseFieldKind.COHESIVE)
    base.update(kw)
    return MaterialParams(**base)


def _arb_terms(alpha=3.0, theta_p_deg=-40.0):
    return ArbitraryAnisotropy([FrequencyTerm(
        m=1, kappa=0.04, sigma0m=5.0, alpha_m=alpha,
        theta_prime=math.radians(theta_p_deg), p_m=0.1)])


def _random_quad(rng):
    # unit square distorted by up to 15% of the edge length
    return UNIT_QUAD + rng.uniform(-0.15, 0.15, size=(4, 2))


# ---------------------------------------------------------------------------
# shape functions
# ---------------------------------------------------------------------------

def test_shape_nodal_interpolation():
    sd = fem.shape_eval(UNIT_QUAD, (-1.0, -1.0))
    assert np.allclose(sd.n_d, [1.0, 0.0, 0.0, 0.0])


def test_shape_partition_of_unity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        xi, eta = rng.uniform(-1, 1, size=2)
        sd = fem.shape_eval(_random_quad(rng), (xi, eta))
        assert sd.n_d.sum() == pytest.approx(1.0, rel=1e-14)
        # B_d of a constant field vanishes
        assert np.allclose(sd.b_d @ np.ones(4), 0.0, atol=1e-14)


def test_shape_constant_strain_patch():
    # nodal field u = (x, 0) must give strain (1, 0, 0) everywhere
    u = np.zeros(8)
    u[0::2] = UNIT_QUAD[:, 0]
    for gp in fem.GP_POINTS:
        sd = fem.shape_eval(UNIT_QUAD, gp)
        assert np.allclose(sd.b_u @ u, [1.0, 0.0, 0.0], atol=1e-14)


def test_shape_rejects_degenerate_element():
    bad = np.array([[0, 0], [1, 0], [0, 0], [0, 1.0]])
    with pytest.raises(ValueError):
        fem.shape_eval(bad, (0.3, -0.2))


def test_shape_rigid_modes_annihilated():
    rng = np.random.default_rng(1)
    coords = _random_quad(rng)
    rigid = [np.tile([1.0, 0.0], 4), np.tile([0.0, 1.0], 4)]
    rot = np.empty(8)
    rot[0::2] = -coords[:, 1]
    rot[1::2] = coords[:, 0]
    rigid.append(rot)
    sd = fem.shape_eval(coords, (0.2, -0.7))
    for mode in rigid:
        assert np.allclose(sd.b_u @ mode, 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# displacement kernel
# ---------------------------------------------------------------------------

def test_element_u_zero_state():
    out = fem.element_u(UNIT_QUAD, np.zeros(8), np.zeros(4), None, _params())
    assert np.allclose(out.r, 0.0)


def test_element_u_intact_stiffness_rigid_modes():
    p = _params()
    out = fem.element_u(UNIT_QUAD, np.zeros(8), np.zeros(4), None, p)
    w = np.linalg.eigvalsh(out.k)
    assert np.sum(np.abs(w) < 1e-8 * w.max()) == 3
    assert np.allclose(out.k, out.k.T, atol=1e-12 * w.max())


def test_element_u_stiffness_matches_residual_fd():
    rng = np.random.default_rng(2)
    p = _params()
    for _ in range(20):
        coords = _random_quad(rng)
        u = rng.normal(size=8) * 1e-3
        d = rng.uniform(0.0, 0.9, size=4)
        state = fem.single_element_state(p)
        out = fem.element_u(coords, u, d, state, p)
        h = 1e-8
        k_fd = np.empty((8, 8))
        for j in range(8):
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            rp = fem.element_u(coords, up, d, state, p).r
            rm = fem.element_u(coords, um, d, state, p).r
            k_fd[:, j] = (rp - rm) / (2 * h)
        assert np.linalg.norm(k_fd - out.k) <= 1e-5 * np.linalg.norm(out.k)


# ---------------------------------------------------------------------------
# damage kernels
# ---------------------------------------------------------------------------

def test_elastic_stage_identity_cohesive():
    # at d = 0 with H = psi_th the cohesive damage residual vanishes exactly
    p = _params()
    state = fem.single_element_state(p)   # initial H equals the threshold
    out = fem.element_d_structural(UNIT_QUAD, np.zeros(4), state, p)
    scale = 2.0 * p.gc0 / (math.pi * p.lc)
    assert np.linalg.norm(out.r) <= 1e-12 * scale


def test_standard_model_has_no_elastic_stage():
    p = _params(model=PhaseFieldKind.STANDARD)
    state = fem.single_element_state(p, h=1e-3)
    out = fem.element_d_structural(UNIT_QUAD, np.zeros(4), state, p)
    assert np.linalg.norm(out.r) > 1e-6


def test_structural_identity_tensor_is_isotropic():
    ps = _params(anisotropy=StructuralAnisotropy(alpha=0.0, phi=0.3))
    pn = _params()
    rng = np.random.default_rng(3)
    d = rng.uniform(0.1, 0.8, size=4)
    state = fem.single_element_state(pn, h=0.05)
    a = fem.element_d_structural(UNIT_QUAD, d, state, ps)
    b = fem.element_d_structural(UNIT_QUAD, d, state, pn)
    assert np.allclose(a.r, b.r, rtol=1e-14)
    assert np.allclose(a.k, b.k, rtol=1e-14)


@pytest.mark.parametrize("kind,aniso", [
    (PhaseFieldKind.COHESIVE, None),
    (PhaseFieldKind.STANDARD, None),
    (PhaseFieldKind.COHESIVE, StructuralAnisotropy(alpha=12.0,
                                                   phi=math.radians(40))),
])
def test_element_d_structural_stiffness_matches_fd(kind, aniso):
    rng = np.random.default_rng(4)
    p = _params(model=kind, anisotropy=aniso)
    for _ in range(20):
        coords = _random_quad(rng)
        d = rng.uniform(0.05, 0.9, size=4)
        state = fem.single_element_state(p, h=rng.uniform(0.0, 0.2))
        out = fem.element_d_structural(coords, d, state, p)
        h = 1e-7
        k_fd = np.empty((4, 4))
        for j in range(4):
            dp, dm = d.copy(), d.copy()
            dp[j] += h
            dm[j] -= h
            rp = fem.element_d_structural(coords, dp, state, p).r
            rm = fem.element_d_structural(coords, dm, state, p).r
            k_fd[:, j] = (rp - rm) / (2 * h)
        assert np.linalg.norm(k_fd - out.k) <= 1e-5 * np.linalg.norm(out.k)
        assert np.allclose(out.k, out.k.T, rtol=1e-12)


def test_element_d_arbitrary_stiffness_matches_fd():
    rng = np.random.default_rng(5)
    p = _params(anisotropy=_arb_terms(), lc=0.1)
    for _ in range(20):
        coords = _random_quad(rng)
        d = rng.uniform(0.05, 0.9, size=4)
        state = fem.single_element_state(
            p, h=rng.uniform(0.02, 0.2),
            gc=rng.uniform(0.04, 0.16), a1=rng.uniform(4.0, 16.0),
            gamma=rng.uniform(0.0, 2.0))
        state.g_d[...] = rng.normal(size=state.g_d.shape) * 0.01
        state.s_d[...] = rng.normal(size=state.s_d.shape) * 0.01
        out = fem.element_d_arbitrary(coords, d, state, p)
        h = 1e-7
        k_fd = np.empty((4, 4))
        for j in range(4):
            dp, dm = d.copy(), d.copy()
            dp[j] += h
            dm[j] -= h
            rp = fem.element_d_arbitrary(coords, dp, state, p).r
            rm = fem.element_d_arbitrary(coords, dm, state, p).r
            k_fd[:, j] = (rp - rm) / (2 * h)
        assert np.linalg.norm(k_fd - out.k) <= 1e-5 * np.linalg.norm(out.k)
        assert np.allclose(out.k, out.k.T, rtol=1e-12)


def test_arbitrary_isotropic_limit_equals_structural():
    # all alpha_m = 0: same residual as the structural kernel with A = I
    p_arb = _params(anisotropy=_arb_terms(alpha=0.0), lc=0.1)
    p_iso = _params(lc=0.1)
    rng = np.random.default_rng(6)
    d = rng.uniform(0.1, 0.9, size=4)
    sa = fem.single_element_state(p_arb, h=0.07)
    si = fem.single_element_state(p_iso, h=0.07)
    a = fem.element_d_arbitrary(UNIT_QUAD, d, sa, p_arb)
    b = fem.element_d_structural(UNIT_QUAD, d, si, p_iso)
    assert np.allclose(a.r, b.r, rtol=1e-12)
    assert np.allclose(a.k, b.k, rtol=1e-12)


def test_arbitrary_below_threshold_initial_state():
    p = _params(anisotropy=_arb_terms(), lc=0.1)
    spec = p.anisotropy
    state = fem.single_element_state(p)
    assert np.allclose(state.gc, spec.gc_min)
    assert np.allclose(state.sigma_u, spec.sigma_u_min)
    assert np.allclose(state.g_d, 0.0) and np.allclose(state.s_d, 0.0)
    # elastic-stage identity holds with the directional threshold too
    out = fem.element_d_arbitrary(UNIT_QUAD, np.zeros(4), state, p)
    assert np.linalg.norm(out.r) <= 1e-12 * 2.0 * p.gc0 / (math.pi * p.lc)


def test_a1_invariant_under_joint_scaling():
    # scaling kappa_m and sigma_0m^2 by the same factor leaves a1 unchanged
    base = ArbitraryAnisotropy([FrequencyTerm(
        m=1, kappa=0.04, sigma0m=5.0, alpha_m=3.0, theta_prime=0.3, p_m=0.1)])
    c = 2.0
    scaled = ArbitraryAnisotropy([FrequencyTerm(
        m=1, kappa=c * 0.04, sigma0m=math.sqrt(c) * 5.0, alpha_m=3.0,
        theta_prime=0.3, p_m=0.1)])
    from anisofrac.constitutive import directional_terms
    p1 = _params(anisotropy=base, lc=0.1)
    p2 = _params(anisotropy=scaled, lc=0.1, sigma0=math.sqrt(c) * 5.0,
                 gc0=c * 0.04)
    g = np.array([1.3, -2.0])
    t1 = directional_terms(g, 0.3, 0.0, p1)
    t2 = directional_terms(g, 0.3, 0.0, p2)
    assert t1.a1_theta == pytest.approx(t2.a1_theta, rel=1e-12)


# ---------------------------------------------------------------------------
# history update
# ---------------------------------------------------------------------------

def test_history_monotone_under_unloading():
    p = _params()
    state = fem.single_element_state(p, h=0.08)
    lower = fem.update_history(state, psi0=np.full((1, 4), 0.01))
    assert np.allclose(lower.h, 0.08)


def test_history_initialises_at_threshold():
    p = _params()
    state = fem.single_element_state(p)
    assert np.allclose(state.h, p.psi_th)
    updated = fem.update_history(state, psi0=np.zeros((1, 4)))
    assert np.allclose(updated.h, p.psi_th)


def test_history_standard_starts_at_zero():
    p = _params(model=PhaseFieldKind.STANDARD)
    state = fem.single_element_state(p)
    assert np.allclose(state.h, 0.0)
    up = fem.update_history(state, psi0=np.full((1, 4), 0.3))
    assert np.allclose(up.h, 0.3)
