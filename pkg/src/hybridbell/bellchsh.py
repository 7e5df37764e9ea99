"""Hybrid correlation matrix and maximal CHSH violation.

Conventions
-----------
``T[k, l] = <S_k^q (x) sigma_l>``: rows are pseudospin (field) axes, columns
qubit Pauli axes, both in (x, y, z) order.

A measurement ``cos(th) Z + sin(th) (e^{i ph} P + e^{-i ph} M)`` with ``P``/``M``
the raising/lowering operators has Bloch direction
``(sin th cos ph, -sin th sin ph, cos th)``.

In :class:`MeasurementSettings` the ``a``/``a'`` angles act on the qubit and
``b``/``b'`` on the field, so ``E(a, b) = n_b . T n_a`` and

    B = E(a, b) + E(a', b) + E(a, b') - E(a', b').
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateEigenspaceWarning, MatrixStructureMismatch, QRangeBoundaryWarning
from .fockspace import (
    DEFAULT_Q_MAX,
    PAULI,
    SIGMA_MINUS,
    SIGMA_Z,
    HybridMixedState,
    HybridState,
    expectation,
    make_pseudospin,
    pseudospin_pairs,
)
from .symeig3 import eigh3, eigvalsh3

IMAG_TOL = 1e-9
DEGENERACY_TOL = 1e-10
STRUCTURE_TOL = 1e-8
TSIRELSON = 2.0 * np.sqrt(2.0)
DEFAULT_Q_RANGE = tuple(range(DEFAULT_Q_MAX + 1))


@dataclass(frozen=True)
class CorrelationMatrix:
    t: np.ndarray
    q: int
    imag_residue: float = 0.0

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.shape != (3, 3):
            raise ValueError(f"correlation matrix must be 3x3, got {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class MeasurementSettings:
    """Polar/azimuthal angles ``(a, a', b, b')``; ``a`` acts on the qubit."""

    theta: tuple
    phi: tuple
    q: int

    def __post_init__(self):
        th = tuple(float(x) for x in self.theta)
        ph = tuple(float(x) for x in self.phi)
        if len(th) != 4 or len(ph) != 4:
            raise ValueError("settings need four polar and four azimuthal angles")
        if any(not -1e-12 <= x <= np.pi + 1e-12 for x in th):
            raise ValueError(f"polar angles must lie in [0, pi], got {th}")
        if any(not -1e-12 <= x <= 2 * np.pi + 1e-12 for x in ph):
            raise ValueError(f"azimuthal angles must lie in [0, 2pi], got {ph}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", ph)
        object.__setattr__(self, "q", int(self.q))

    @classmethod
    def from_any_angles(cls, theta, phi, q) -> "MeasurementSettings":
        """Fold arbitrary real angles into the canonical ranges."""
        th, ph = zip(*(canonical_angles(t, p) for t, p in zip(theta, phi)))
        return cls(th, ph, q)

    @classmethod
    def from_directions(cls, dirs, q) -> "MeasurementSettings":
        """Settings from four unit Bloch vectors ``(a, a', b, b')``."""
        th, ph = zip(*(direction_angles(d) for d in dirs))
        return cls(th, ph, q)

    def directions(self) -> np.ndarray:
        """Unit vectors ``(a, a', b, b')`` as rows of a 4x3 array."""
        return np.array([bloch_direction(t, p) for t, p in zip(self.theta, self.phi)])


@dataclass(frozen=True)
class BellResult:
    value: float
    settings: MeasurementSettings | None
    eigen: tuple
    q_scanned: tuple = ()


# ---------------------------------------------------------------------------
# angle helpers


def bloch_direction(theta: float, phi: float) -> np.ndarray:
    s = np.sin(theta)
    return np.array([s * np.cos(phi), -s * np.sin(phi), np.cos(theta)])


def direction_angles(n) -> tuple:
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    theta = float(np.arccos(np.clip(n[2], -1.0, 1.0)))
    if np.hypot(n[0], n[1]) < 1e-14:
        return theta, 0.0
    return theta, float(np.mod(np.arctan2(-n[1], n[0]), 2 * np.pi))


def canonical_angles(theta: float, phi: float) -> tuple:
    """Same direction with theta in [0, pi] and phi in [0, 2pi)."""
    return direction_angles(bloch_direction(theta, phi))


def measurement_operator(theta, phi, z, lower):
    """``cos(th) z + sin(th) (e^{i ph} lower^dag + e^{-i ph} lower)``."""
    lower = np.asarray(lower)
    return np.cos(theta) * np.asarray(z) + np.sin(theta) * (
        np.exp(1j * phi) * lower.conj().T + np.exp(-1j * phi) * lower
    )


# ---------------------------------------------------------------------------
# correlation matrix


def _components(state):
    if isinstance(state, HybridMixedState):
        return state.components
    return ((1.0, state),)


def correlation_matrix(state: HybridState | HybridMixedState, q: int) -> CorrelationMatrix:
    """Nine expectation values ``<S_k^q (x) sigma_l>``; mixtures are weight-summed."""
    total = np.zeros((3, 3), dtype=complex)
    ops = None
    for p, branch in _components(state):
        if ops is None:
            ops = make_pseudospin(q, branch.cutoff).as_tuple()
        for k, s in enumerate(ops):
            for l, sig in enumerate(PAULI):
                total[k, l] += p * expectation(branch, s, sig)
    resid = float(np.abs(total.imag).max())
    if resid > IMAG_TOL:
        raise ValueError(f"correlation matrix has imaginary residue {resid:.2e}")
    return CorrelationMatrix(total.real, q, resid)


def correlation_arrays(psi_g, psi_e, q: int) -> np.ndarray:
    """Vectorized ``T`` for batches of pure states, shape ``(..., 3, 3)``.

    With ``z_k = <psi_g|S_k|psi_e>`` the columns are
    ``(2 Re z, -2 Im z, <psi_e|S|psi_e> - <psi_g|S|psi_g>)``.
    """
    return correlation_arrays_multi(psi_g, psi_e, (q,))[0]


def correlation_arrays_multi(psi_g, psi_e, q_range) -> np.ndarray:
    """``correlation_arrays`` for several shifts sharing one pass over the data.

    Returns shape ``(len(q_range), ..., 3, 3)``.
    """
    g = np.asarray(psi_g, dtype=complex)
    e = np.asarray(psi_e, dtype=complex)
    n_cut = g.shape[-1]
    for q in q_range:
        make_pseudospin(q, n_cut)  # validates q against the cutoff
    gc, ec = g.conj(), e.conj()
    # adjacent-level products <u|n><n+1|v>
    adj_ge = gc[..., :-1] * e[..., 1:]
    adj_eg = ec[..., :-1] * g[..., 1:]
    adj_ee = ec[..., :-1] * e[..., 1:]
    adj_gg = gc[..., :-1] * g[..., 1:]
    pop_e, pop_g, cross = (np.abs(e) ** 2, np.abs(g) ** 2, gc * e)
    out = []
    for q in q_range:
        lo = slice(q, n_cut - 1, 2)
        diag = np.zeros(n_cut)
        lo_idx, hi_idx, straddle = pseudospin_pairs(q, n_cut)
        diag[lo_idx], diag[hi_idx] = -1.0, 1.0
        if straddle is not None:
            diag[straddle] = -1.0
        down = adj_ge[..., lo].sum(-1)  # <g|S_-|e>
        up = adj_eg[..., lo].sum(-1).conj()  # <g|S_+|e>
        zx, zy = up + down, -1j * (up - down)
        # with w = <u|S_-|u>: <u|S_x|u> = 2 Re w, <u|S_y|u> = -2 Im w
        we = adj_ee[..., lo].sum(-1)
        wg = adj_gg[..., lo].sum(-1)
        ex, ey = 2 * we.real, -2 * we.imag
        gx, gy = 2 * wg.real, -2 * wg.imag
        zz = (cross * diag).sum(-1)
        dz = ((pop_e - pop_g) * diag).sum(-1)
        rows = [
            np.stack([2 * zx.real, -2 * zx.imag, ex - gx], axis=-1),
            np.stack([2 * zy.real, -2 * zy.imag, ey - gy], axis=-1),
            np.stack([2 * zz.real, -2 * zz.imag, dz], axis=-1),
        ]
        out.append(np.stack(rows, axis=-2))
    return np.stack(out)


# ---------------------------------------------------------------------------
# maximization


def _top_two(tt_eigs):
    return float(tt_eigs[..., 2]), float(tt_eigs[..., 1])


def horodecki_value(t) -> BellResult:
    """``2 sqrt(L1 + L2)`` from the two largest eigenvalues of ``T^T T``."""
    tm = t.t if isinstance(t, CorrelationMatrix) else np.asarray(t, dtype=float)
    lam = np.clip(eigvalsh3(tm.T @ tm), 0.0, None)
    l1, l2 = _top_two(lam)
    q = t.q if isinstance(t, CorrelationMatrix) else -1
    return BellResult(float(2.0 * np.sqrt(l1 + l2)), None, (l1, l2), (q,))


def horodecki_values(t_batch) -> np.ndarray:
    """Batched ``2 sqrt(L1 + L2)`` for an array of shape ``(..., 3, 3)``."""
    t_batch = np.asarray(t_batch, dtype=float)
    lam = np.clip(eigvalsh3(np.swapaxes(t_batch, -1, -2) @ t_batch), 0.0, None)
    return 2.0 * np.sqrt(lam[..., 1] + lam[..., 2])


def recover_settings(t, eigenpairs=None, q: int | None = None) -> MeasurementSettings:
    """Optimal settings from the top eigenvectors of ``T T^T``.

    The field pair is ``b, b' = cos(eta) d1 +- sin(eta) d2`` with
    ``tan(eta) = sqrt(L2 / L1)``; the qubit pair is ``a = T^T d1 / |.|`` and
    ``a' = T^T d2 / |.|``.  ``eigenpairs`` may supply ``(w, v)`` of ``T T^T``
    in ascending order.
    """
    tm = t.t if isinstance(t, CorrelationMatrix) else np.asarray(t, dtype=float)
    if q is None:
        q = t.q if isinstance(t, CorrelationMatrix) else 0
    w, v = eigenpairs if eigenpairs is not None else eigh3(tm @ tm.T)
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    if w[1] - w[0] <= DEGENERACY_TOL * max(1.0, w[2]):
        warnings.warn(
            "second and third eigenvalues of T T^T coincide; settings are one valid choice",
            DegenerateEigenspaceWarning,
            stacklevel=2,
        )
    d1, d2 = v[:, 2], v[:, 1]
    x1, x2 = tm.T @ d1, tm.T @ d2
    n1, n2 = np.linalg.norm(x1), np.linalg.norm(x2)
    a = x1 / n1 if n1 > 1e-14 else np.array([0.0, 0.0, 1.0])
    if n2 > 1e-14:
        a2 = x2 / n2
    else:
        # any direction orthogonal to a; the weight sin(eta) is zero anyway
        trial = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        a2 = trial - (trial @ a) * a
        a2 /= np.linalg.norm(a2)
    eta = np.arctan2(n2, n1)
    b = np.cos(eta) * d1 + np.sin(eta) * d2
    b2 = np.cos(eta) * d1 - np.sin(eta) * d2
    return MeasurementSettings.from_directions((a, a2, b, b2), q)


def chsh_from_matrix(t, settings: MeasurementSettings) -> float:
    """CHSH combination evaluated by contracting ``T`` with the directions."""
    tm = t.t if isinstance(t, CorrelationMatrix) else np.asarray(t, dtype=float)
    a, a2, b, b2 = settings.directions()
    return float(abs(b @ tm @ (a + a2) + b2 @ tm @ (a - a2)))


def maximize_bell(state, q_range: Sequence[int] = DEFAULT_Q_RANGE, warn_boundary: bool = True) -> BellResult:
    """Scan ``q`` and keep the largest Horodecki value (first wins on ties)."""
    q_range = tuple(int(q) for q in q_range)
    if not q_range:
        raise ValueError("q_range must not be empty")
    best = None
    best_t = None
    for q in q_range:
        cm = correlation_matrix(state, q)
        res = horodecki_value(cm)
        if best is None or res.value > best.value + 1e-14:
            best, best_t = res, cm
    if warn_boundary and len(q_range) > 1 and best_t.q == max(q_range) and best.value > 2.0:
        warnings.warn(
            f"optimal pseudospin shift q={best_t.q} is the largest scanned value",
            QRangeBoundaryWarning,
            stacklevel=2,
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEigenspaceWarning)
        settings = recover_settings(best_t)
    return BellResult(best.value, settings, best.eigen, q_range)


def bell_max_arrays(psi_g, psi_e, q_range: Sequence[int] = DEFAULT_Q_RANGE):
    """Batched ``|B|max`` over ``q``; returns ``(values, best_q)`` arrays."""
    vals = np.moveaxis(horodecki_values(correlation_arrays_multi(psi_g, psi_e, tuple(q_range))), 0, -1)
    idx = np.argmax(vals, axis=-1)
    return np.take_along_axis(vals, idx[..., None], -1)[..., 0], np.asarray(q_range)[idx]


def bell_value_at(state, settings: MeasurementSettings) -> float:
    """CHSH value from the four operator-level correlation functions."""
    n_cut = _components(state)[0][1].cutoff
    ps = make_pseudospin(settings.q, n_cut)
    th, ph = settings.theta, settings.phi
    qubit = [measurement_operator(th[i], ph[i], SIGMA_Z, SIGMA_MINUS) for i in (0, 1)]
    field = [measurement_operator(th[i], ph[i], ps.sz, ps.sminus) for i in (2, 3)]

    def corr(i, j):
        return sum(p * expectation(s, field[j], qubit[i]).real for p, s in _components(state))

    return float(abs(corr(0, 0) + corr(1, 0) + corr(0, 1) - corr(1, 1)))


# ---------------------------------------------------------------------------
# closed forms for the squeezed-vacuum family


def _check_pattern(tm, mask_zero, pairs, name):
    dev = max([float(np.abs(tm[mask_zero]).max())] + [abs(x) for x in pairs])
    if dev > STRUCTURE_TOL:
        raise MatrixStructureMismatch(f"{name} correlation matrix deviates from the expected pattern by {dev:.2e}")


_ZERO_Q0 = np.array([[1, 0, 1], [0, 1, 1], [1, 1, 0]], dtype=bool)
_ZERO_Q1 = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=bool)


def smsv_parameters(state) -> tuple:
    """``(eps, kappa1, kappa2, kappa3)`` read from the q=0 and q=1 matrices."""
    t0 = correlation_matrix(state, 0).t
    t1 = correlation_matrix(state, 1).t
    _check_pattern(t0, _ZERO_Q0, (t0[0, 1] + t0[1, 0], t0[2, 2] + 1.0), "q=0")
    _check_pattern(t1, _ZERO_Q1, (t1[0, 1] - t1[1, 0], t1[0, 0] + t1[1, 1]), "q=1")
    return float(t0[0, 1]), float(t1[0, 0]), float(t1[0, 1]), float(t1[2, 2])


def smsv_closed_form(state) -> BellResult:
    """Closed-form ``max(|B|_0, |B|_1)`` with the accompanying printed angles.

    The returned settings are the analytic angle sets: exact for the q=0
    branch and the planar q=1 branch; the polar angle of the q=1 axial branch
    is only optimal when ``kappa3 = 1``.  ``value`` is always the closed form.
    """
    eps, k1, k2, k3 = smsv_parameters(state)
    b0 = 2.0 * np.sqrt(1.0 + eps * eps)
    kr2 = k1 * k1 + k2 * k2
    kr = np.sqrt(kr2)
    if k3 * k3 > kr2:
        b1 = 2.0 * np.sqrt(k3 * k3 + kr2)
        th1 = (0.0, np.pi / 2, np.arctan(kr), -np.arctan(kr))
        ph1 = (0.0, np.arctan2(-k1, k2), np.pi / 2, np.pi / 2)
        eig1 = (k3 * k3, kr2)
    else:
        b1 = 2.0 * np.sqrt(2.0) * kr
        th1 = (np.pi / 2,) * 4
        ph1 = (np.arctan2(k2, k1), np.arctan2(-k1, k2), np.pi / 4, 7 * np.pi / 4)
        eig1 = (kr2, kr2)
    if b0 >= b1:
        settings = MeasurementSettings.from_any_angles(
            (np.pi, np.pi / 2, np.arctan(eps), -np.arctan(eps)), (0.0, 0.0, np.pi / 2, np.pi / 2), 0
        )
        return BellResult(float(b0), settings, (1.0, eps * eps), (0, 1))
    settings = MeasurementSettings.from_any_angles(th1, ph1, 1)
    return BellResult(float(b1), settings, eig1, (0, 1))


__all__ = [
    "BellResult",
    "CorrelationMatrix",
    "MeasurementSettings",
    "bell_max_arrays",
    "bell_value_at",
    "bloch_direction",
    "canonical_angles",
    "chsh_from_matrix",
    "correlation_arrays",
    "correlation_arrays_multi",
    "correlation_matrix",
    "direction_angles",
    "horodecki_value",
    "horodecki_values",
    "maximize_bell",
    "measurement_operator",
    "recover_settings",
    "smsv_closed_form",
    "smsv_parameters",
]
