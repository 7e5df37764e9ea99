import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import minimize

from hybridbell.bellchsh import (
    TSIRELSON,
    CorrelationMatrix,
    MeasurementSettings,
    bell_max_arrays,
    bell_value_at,
    chsh_from_matrix,
    correlation_arrays,
    correlation_matrix,
    horodecki_value,
    maximize_bell,
    recover_settings,
    smsv_closed_form,
    smsv_parameters,
)
from hybridbell.errors import DegenerateEigenspaceWarning, MatrixStructureMismatch, QRangeBoundaryWarning
from hybridbell.fockspace import (
    PAULI,
    SIGMA_MINUS,
    SIGMA_Z,
    FockVector,
    HybridMixedState,
    HybridState,
    QubitVector,
    make_fock,
    make_pseudospin,
    random_state,
)
from hybridbell.jcdynamics import Cat, FockProduct, JCParams, SmsvProduct, evolve

SQ2 = np.sqrt(2.0)


def fock_formula(k, lam, t):
    return 2 * np.sqrt(1 + np.sin(2 * lam * np.sqrt(1 + k) * t) ** 2)


# --- independent brute-force CHSH search --------------------------------------


def _dense_t(state, q):
    """T from full 2N x 2N Kronecker products (field (x) qubit)."""
    ps = make_pseudospin(q, state.cutoff).as_tuple()
    v = state.as_vector()
    return np.array([[np.vdot(v, np.kron(s, p) @ v).real for p in PAULI] for s in ps])


def _op_direction(theta, phi):
    # direction of cos(th) Z + sin(th) (e^{i ph} P + e^{-i ph} M) in (x, y, z)
    m = np.cos(theta) * SIGMA_Z + np.sin(theta) * (np.exp(1j * phi) * SIGMA_MINUS.conj().T + np.exp(-1j * phi) * SIGMA_MINUS)
    return np.array([0.5 * np.trace(m @ p).real for p in PAULI])


def _chsh_batch(t, ang):
    """|B| for rows of 8 angles (th_a, th_a', th_b, th_b', ph_a, ph_a', ph_b, ph_b')."""
    th, ph = ang[:, :4], ang[:, 4:]
    d = np.stack([np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    a, a2, b, b2 = d[:, 0], d[:, 1], d[:, 2], d[:, 3]
    ta, ta2 = a @ t.T, a2 @ t.T
    return np.abs(((ta + ta2) * b).sum(-1) + ((ta - ta2) * b2).sum(-1))


def brute_force_bell(t, rng, n_grid=24**3, n_refine=6):
    ang = rng.uniform(0, 2 * np.pi, size=(n_grid, 8))
    ang[:, :4] = rng.uniform(0, np.pi, size=(n_grid, 4))
    vals = _chsh_batch(t, ang)
    best = 0.0
    for i in np.argsort(vals)[-n_refine:]:
        res = minimize(lambda x: -_chsh_batch(t, x[None])[0], ang[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000, "maxfev": 20000})
        best = max(best, -res.fun)
    return best


def test_direction_convention_matches_operator():
    for th, ph in [(0.3, 0.0), (1.1, 2.0), (2.9, 5.5)]:
        s = MeasurementSettings((th,) * 4, (ph,) * 4, 0)
        assert np.allclose(s.directions()[0], _op_direction(th, ph), atol=1e-14)


@pytest.mark.parametrize("seed", range(25))
def test_horodecki_matches_brute_force_search(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(4, 9))
    state = random_state(n, rng)
    q = int(rng.integers(0, n - 2))
    t = _dense_t(state, q)
    value = horodecki_value(correlation_matrix(state, q)).value
    assert abs(brute_force_bell(t, rng) - value) < 1e-6


# --- correlation matrix --------------------------------------------------------


def test_product_ground_vacuum():
    s = HybridState.product(make_fock(0, 4), QubitVector.ground())
    assert np.allclose(correlation_matrix(s, 0).t, np.diag([0, 0, 1]))


@pytest.mark.parametrize("k", [0, 2, 5])
def test_fock_matrix_structure(k):
    t = (np.pi / 8) / np.sqrt(k + 1)
    s = evolve(FockProduct(k), JCParams(1.0), t)
    cm = correlation_matrix(s, k)
    x = 2 * np.sqrt(k + 1) * t
    # the pair (k, k+1) carries the whole state: xy block is sin(2x) times a rotation
    assert abs(np.linalg.norm(cm.t[:2, :2]) - np.sqrt(2) * abs(np.sin(x))) < 1e-12
    assert abs(abs(cm.t[2, 2]) - 1) < 1e-12
    assert abs(horodecki_value(cm).value - fock_formula(k, 1.0, t)) < 1e-12


def test_smsv_q0_pattern():
    s = evolve(SmsvProduct(0.6), JCParams(1.0), 0.9)
    t0 = correlation_matrix(s, 0).t
    eps = t0[0, 1]
    assert np.allclose(t0, [[0, eps, 0], [-eps, 0, 0], [0, 0, -1]], atol=1e-12)


def test_vectorized_matches_operator_route():
    rng = np.random.default_rng(3)
    for _ in range(30):
        s = random_state(int(rng.integers(4, 20)), rng)
        for q in range(min(6, s.cutoff - 2)):
            assert np.max(np.abs(correlation_arrays(s.psi_g, s.psi_e, q) - correlation_matrix(s, q).t)) < 1e-13
            assert np.max(np.abs(_dense_t(s, q) - correlation_matrix(s, q).t)) < 1e-13


def test_mixture_matrix_is_convex_combination():
    rng = np.random.default_rng(5)
    a, b = random_state(8, rng), random_state(8, rng)
    mix = HybridMixedState(((0.3, a), (0.7, b)))
    for q in range(4):
        ref = 0.3 * correlation_matrix(a, q).t + 0.7 * correlation_matrix(b, q).t
        assert np.array_equal(correlation_matrix(mix, q).t, ref)


# --- values --------------------------------------------------------------------


def test_horodecki_examples():
    assert abs(horodecki_value(np.diag([1.0, -1.0, 1.0])).value - 2 * SQ2) < 1e-15
    assert abs(horodecki_value(np.diag([0.0, 0.0, 1.0])).value - 2) < 1e-15
    eps = 0.6
    t = np.array([[0, eps, 0], [-eps, 0, 0], [0, 0, -1.0]])
    assert abs(horodecki_value(t).value - 2 * np.sqrt(1 + eps**2)) < 1e-14
    k1, k2, k3 = 0.3, 0.4, 0.9
    t1 = np.array([[k1, k2, 0], [k2, -k1, 0], [0, 0, k3]])
    assert abs(horodecki_value(t1).value - 2 * np.sqrt(0.81 + 0.25)) < 1e-14


def test_maximize_product_and_fock():
    s = HybridState.product(make_fock(0, 8), QubitVector.excited())
    assert abs(maximize_bell(s).value - 2) < 1e-12
    rng = np.random.default_rng(11)
    for _ in range(20):
        k, lam, t = int(rng.integers(0, 9)), rng.uniform(0.2, 2), rng.uniform(0, 10)
        v = maximize_bell(evolve(FockProduct(k), JCParams(lam), t), warn_boundary=False).value
        assert abs(v - fock_formula(k, lam, t)) < 1e-9


def test_cat_at_zero_is_below_tsirelson_and_increasing():
    vals = [maximize_bell(evolve(Cat(a), JCParams(1.0), 0.0), warn_boundary=False).value for a in (1.0, 2.0, 3.0, 5.0)]
    assert all(v < TSIRELSON for v in vals)
    assert vals[1] < vals[2] < vals[3]


def test_q_range_inclusion_monotone():
    s = evolve(Cat(1.2), JCParams(1.0), 2.0)
    small = maximize_bell(s, (0, 1), warn_boundary=False).value
    big = maximize_bell(s, (0, 1, 2, 3), warn_boundary=False).value
    assert big >= small


def test_boundary_warning():
    s = evolve(FockProduct(3), JCParams(1.0), 0.3)
    with pytest.warns(QRangeBoundaryWarning):
        maximize_bell(s, (0, 2, 3))


def test_batched_max_matches_scalar():
    s = evolve(Cat(0.9), JCParams(1.0), 1.4)
    vals, best_q = bell_max_arrays(s.psi_g, s.psi_e)
    res = maximize_bell(s, warn_boundary=False)
    assert abs(float(vals) - res.value) < 1e-13
    assert int(best_q) == res.settings.q


# --- settings recovery -------------------------------------------------------


def test_recover_settings_singlet_class():
    t = np.diag([1.0, -1.0, 1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEigenspaceWarning)
        s = recover_settings(t)
    assert abs(chsh_from_matrix(t, s) - 2 * SQ2) < 1e-12


def test_recover_settings_random_matrices():
    rng = np.random.default_rng(21)
    for _ in range(100):
        t = rng.uniform(-1, 1, size=(3, 3))
        s = recover_settings(t)
        assert abs(chsh_from_matrix(t, s) - horodecki_value(t).value) < 1e-8


def test_degenerate_warning():
    with pytest.warns(DegenerateEigenspaceWarning):
        recover_settings(np.diag([0.0, 0.0, 1.0]))


@pytest.mark.parametrize("spec,t", [(Cat(1.0), 0.8), (FockProduct(2), 0.4), (SmsvProduct(0.5), 1.1)])
def test_recovered_settings_attain_value_and_are_local_maxima(spec, t):
    state = evolve(spec, JCParams(1.0), t)
    res = maximize_bell(state, warn_boundary=False)
    assert abs(bell_value_at(state, res.settings) - res.value) < 1e-8
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = rng.choice([-0.01, 0.01], size=8)
        th = np.array(res.settings.theta) + d[:4]
        ph = np.array(res.settings.phi) + d[4:]
        pert = MeasurementSettings.from_any_angles(th, ph, res.settings.q)
        assert bell_value_at(state, pert) <= res.value + 1e-12


def test_all_polar_zero_settings():
    state = evolve(Cat(0.7), JCParams(1.0), 2.3)
    s = MeasurementSettings((0, 0, 0, 0), (0, 0, 0, 0), 1)
    assert abs(bell_value_at(state, s) - 2 * abs(correlation_matrix(state, 1).t[2, 2])) < 1e-12


# --- squeezed-vacuum closed forms -----------------------------------------------


def test_smsv_closed_form_trivial():
    s = evolve(SmsvProduct(0.4), JCParams(1.0), 0.0)
    assert abs(smsv_closed_form(s).value - 2) < 1e-12


def test_smsv_closed_form_grid_and_q0_angles():
    for r in np.linspace(0.05, 1.0, 6):
        for t in np.linspace(0.1, 10, 7):
            s = evolve(SmsvProduct(r), JCParams(1.0), t)
            cf = smsv_closed_form(s)
            assert abs(cf.value - maximize_bell(s, (0, 1), warn_boundary=False).value) < 1e-9
            eps = smsv_parameters(s)[0]
            ref = MeasurementSettings.from_any_angles(
                (np.pi, np.pi / 2, np.arctan(eps), -np.arctan(eps)), (0, 0, np.pi / 2, np.pi / 2), 0)
            t0 = correlation_matrix(s, 0)
            assert abs(chsh_from_matrix(t0, ref) - 2 * np.sqrt(1 + eps**2)) < 1e-9  # T_zz = -1 up to the tail mass
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateEigenspaceWarning)
                rec = recover_settings(t0)
            assert abs(chsh_from_matrix(t0, rec) - 2 * np.sqrt(1 + eps**2)) < 1e-9


def test_smsv_structure_mismatch():
    with pytest.raises(MatrixStructureMismatch):
        smsv_closed_form(evolve(Cat(0.8), JCParams(1.0), 0.5))


# --- properties ----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_tsirelson_ceiling(n, seed):
    s = random_state(n, np.random.default_rng(seed))
    assert maximize_bell(s, range(min(6, n - 1)), warn_boundary=False).value <= TSIRELSON + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_product_states_never_violate(n, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=n) + 1j * rng.normal(size=n)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    a /= np.linalg.norm(a)
    s = HybridState.product(FockVector(f / np.linalg.norm(f)), QubitVector(*a))
    assert maximize_bell(s, range(min(6, n - 1)), warn_boundary=False).value <= 2 + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_qubit_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    s = random_state(8, rng)
    u = expm(-1j * sum(c * p for c, p in zip(rng.normal(size=3), PAULI)))
    a = maximize_bell(s, range(5), warn_boundary=False).value
    b = maximize_bell(s.apply_local(qubit_op=u), range(5), warn_boundary=False).value
    assert abs(a - b) < 1e-9


def test_correlation_entries_bounded():
    rng = np.random.default_rng(9)
    for _ in range(50):
        s = random_state(10, rng)
        cm = correlation_matrix(s, int(rng.integers(0, 6)))
        assert np.abs(cm.t).max() <= 1 + 1e-9
        assert isinstance(cm, CorrelationMatrix)
