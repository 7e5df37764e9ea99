"""Resonant Jaynes-Cummings evolution in closed form.

The interaction ``H_I = lam (a sigma_+ + a^dag sigma_-)`` couples only the
pairs ``{|n, e>, |n+1, g>}``, each rotating at ``lam * sqrt(n+1)``.  On a
truncated space the top level ``|N-1, e>`` has no partner and is stationary;
this is exactly ``exp(-i H_I t)`` with the truncated ladder operators, so the
closed form and the dense matrix exponential agree to rounding.  Initial
states must keep their excited-branch weight at level ``N-1`` below the tail
tolerance, otherwise :class:`CutoffTooSmall` is raised.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import CutoffTooSmall
from .fockspace import (
    DEFAULT_TAIL_TOL,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    FockVector,
    HybridMixedState,
    HybridState,
    QubitVector,
    annihilation,
    default_coherent_cutoff,
    make_coherent,
    make_fock,
    make_smsv,
)


class Picture(str, enum.Enum):
    INTERACTION = "interaction"
    SCHROEDINGER = "schroedinger"


@dataclass(frozen=True)
class JCParams:
    lam: float = 1.0
    omega0: float = 0.0
    picture: Picture = Picture.INTERACTION

    def __post_init__(self):
        if self.omega0 < 0:
            raise ValueError("omega0 must be non-negative")
        object.__setattr__(self, "picture", Picture(self.picture))
        object.__setattr__(self, "lam", float(self.lam))


# ---------------------------------------------------------------------------
# initial-state families


@dataclass(frozen=True)
class FockProduct:
    k: int
    atom: QubitVector = QubitVector.excited()

    def field(self, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> FockVector:
        return make_fock(self.k, cutoff if cutoff is not None else max(16, self.k + 2))


@dataclass(frozen=True)
class CoherentProduct:
    alpha: complex
    atom: QubitVector = QubitVector.excited()

    def field(self, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> FockVector:
        return make_coherent(self.alpha, cutoff, tail_tol)


@dataclass(frozen=True)
class SmsvProduct:
    r: float
    theta: float = 0.0
    atom: QubitVector = QubitVector.excited()

    def field(self, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> FockVector:
        return make_smsv(self.r, self.theta, cutoff, tail_tol)


@dataclass(frozen=True)
class Cat:
    """``a1 |alpha>|e> + a2 |-alpha>|g>``, renormalized after assembly."""

    alpha: complex
    a1: complex = 2**-0.5
    a2: complex = 2**-0.5


@dataclass(frozen=True)
class ClassicalMixture:
    """``p |e, alpha><e, alpha| + (1-p) |g, -alpha><g, -alpha|``."""

    alpha: complex
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("mixture weight p must lie in [0, 1]")


ProductSpec = Union[FockProduct, CoherentProduct, SmsvProduct]
InitialStateSpec = Union[FockProduct, CoherentProduct, SmsvProduct, Cat, ClassicalMixture]


def prepare_product(spec: ProductSpec, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> HybridState:
    return HybridState.product(spec.field(cutoff, tail_tol), spec.atom)


def prepare_cat(spec: Cat, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> HybridState:
    if cutoff is None:
        cutoff = default_coherent_cutoff(spec.alpha)
    plus = make_coherent(spec.alpha, cutoff, tail_tol).coeffs
    minus = make_coherent(-spec.alpha, cutoff, tail_tol).coeffs
    return HybridState(spec.a2 * minus, spec.a1 * plus, check_norm=False).normalized()


def prepare(spec: InitialStateSpec, cutoff=None, tail_tol=DEFAULT_TAIL_TOL):
    """Initial state for any family (a mixture for ``ClassicalMixture``)."""
    if isinstance(spec, Cat):
        return prepare_cat(spec, cutoff, tail_tol)
    if isinstance(spec, ClassicalMixture):
        return _mixture_branches(spec, cutoff, tail_tol)
    return prepare_product(spec, cutoff, tail_tol)


def _mixture_branches(spec: ClassicalMixture, cutoff, tail_tol) -> HybridMixedState:
    b1 = prepare_product(CoherentProduct(spec.alpha, QubitVector.excited()), cutoff, tail_tol)
    b2 = prepare_product(CoherentProduct(-spec.alpha, QubitVector.ground()), b1.cutoff, tail_tol)
    comps = [(spec.p, b1), (1.0 - spec.p, b2)]
    return HybridMixedState(tuple((p, s) for p, s in comps if p > 0.0))


# ---------------------------------------------------------------------------
# closed-form propagation


def _rabi_frequencies(cutoff: int):
    n = np.arange(cutoff, dtype=float)
    w_e = np.sqrt(n + 1.0)
    w_e[-1] = 0.0  # |N-1, e> has no partner inside the cutoff
    return w_e, np.sqrt(n)


def evolve_arrays(psi_g, psi_e, lam, t, omega0=0.0, picture=Picture.INTERACTION):
    """Propagate field components with broadcasting over leading axes.

    ``psi_g``/``psi_e`` have shape ``(..., N)``; ``lam`` and ``t`` broadcast
    against the leading shape.
    """
    psi_g = np.asarray(psi_g, dtype=complex)
    psi_e = np.asarray(psi_e, dtype=complex)
    n_cut = psi_g.shape[-1]
    phase = np.asarray(np.multiply(lam, t), dtype=float)[..., None]
    # level m rotates at sqrt(m): ground uses m = n, excited m = n + 1
    arg = phase * np.sqrt(np.arange(n_cut + 1.0))
    c, s = np.cos(arg), np.sin(arg)
    cg, sg = c[..., :-1], s[..., :-1]
    ce, se = c[..., 1:].copy(), s[..., 1:].copy()
    ce[..., -1], se[..., -1] = 1.0, 0.0  # |N-1, e> has no partner inside the cutoff

    g_up = np.zeros(np.broadcast_shapes(psi_g.shape, phase.shape[:-1] + (n_cut,)), dtype=complex)
    g_up[..., :-1] = psi_g[..., 1:]
    e_dn = np.zeros_like(g_up)
    e_dn[..., 1:] = psi_e[..., :-1]

    new_e = ce * psi_e - 1j * se * g_up
    new_g = cg * psi_g - 1j * sg * e_dn
    if Picture(picture) is Picture.SCHROEDINGER and omega0 != 0.0:
        n = np.arange(n_cut)
        tt = np.asarray(t, dtype=float)[..., None]
        new_g = new_g * np.exp(-1j * omega0 * (n - 0.5) * tt)
        new_e = new_e * np.exp(-1j * omega0 * (n + 0.5) * tt)
    return new_g, new_e


def _check_overflow(state: HybridState, tail_tol: float):
    top = abs(state.psi_e[-1]) ** 2
    if top > tail_tol:
        raise CutoffTooSmall(
            f"excited-branch weight {top:.3e} at level {state.cutoff - 1} would leave the cutoff",
            required=state.cutoff + 1,
        )


def evolve_state(state: HybridState, params: JCParams, t: float, tail_tol=DEFAULT_TAIL_TOL) -> HybridState:
    """Evolve an arbitrary pure hybrid state for time ``t``."""
    _check_overflow(state, tail_tol)
    g, e = evolve_arrays(state.psi_g, state.psi_e, params.lam, t, params.omega0, params.picture)
    return HybridState(g, e, check_norm=False)


def evolve_product(spec: ProductSpec, params: JCParams, t: float, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> HybridState:
    if isinstance(spec, (Cat, ClassicalMixture)):
        raise TypeError("evolve_product expects a product-state family")
    if t < 0:
        raise ValueError("t must be non-negative")
    return evolve_state(prepare_product(spec, cutoff, tail_tol), params, t, tail_tol)


def evolve_cat(spec: Cat, params: JCParams, t: float, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> HybridState:
    if t < 0:
        raise ValueError("t must be non-negative")
    return evolve_state(prepare_cat(spec, cutoff, tail_tol), params, t, tail_tol)


def evolve_mixture(spec: ClassicalMixture, params: JCParams, t: float, cutoff=None, tail_tol=DEFAULT_TAIL_TOL) -> HybridMixedState:
    if t < 0:
        raise ValueError("t must be non-negative")
    rho0 = _mixture_branches(spec, cutoff, tail_tol)
    return HybridMixedState(tuple((p, evolve_state(s, params, t, tail_tol)) for p, s in rho0.components))


def evolve(spec: InitialStateSpec, params: JCParams, t: float, cutoff=None, tail_tol=DEFAULT_TAIL_TOL):
    """Dispatch on the family of ``spec``."""
    if isinstance(spec, Cat):
        return evolve_cat(spec, params, t, cutoff, tail_tol)
    if isinstance(spec, ClassicalMixture):
        return evolve_mixture(spec, params, t, cutoff, tail_tol)
    return evolve_product(spec, params, t, cutoff, tail_tol)


# ---------------------------------------------------------------------------
# dense matrices (oracles and composition checks)


def hamiltonian_matrix(params: JCParams, cutoff: int) -> np.ndarray:
    """Dense ``H_I`` (plus ``H_0`` in the Schroedinger picture), hbar = 1."""
    a = annihilation(cutoff)
    h = params.lam * (np.kron(a, SIGMA_PLUS) + np.kron(a.conj().T, SIGMA_MINUS))
    if params.picture is Picture.SCHROEDINGER:
        num = np.diag(np.arange(cutoff, dtype=float))
        h = h + params.omega0 * (np.kron(num, np.eye(2)) + 0.5 * np.kron(np.eye(cutoff), SIGMA_Z))
    return h


def unitary_matrix(params: JCParams, cutoff: int, t: float) -> np.ndarray:
    """Closed-form propagator on the flattened ``(n, qubit)`` basis."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    dim = 2 * cutoff
    u = np.zeros((dim, dim), dtype=complex)
    w_e, w_g = _rabi_frequencies(cutoff)
    x = params.lam * t
    for n in range(cutoff):
        ie, ig = 2 * n + 1, 2 * n
        u[ie, ie] = np.cos(x * w_e[n])
        u[ig, ig] = np.cos(x * w_g[n])
        if n + 1 < cutoff:
            s = -1j * np.sin(x * w_e[n])
            u[2 * (n + 1), ie] = s  # |n, e> -> |n+1, g>
            u[ie, 2 * (n + 1)] = s  # |n+1, g> -> |n, e>
    if params.picture is Picture.SCHROEDINGER and params.omega0 != 0.0:
        n = np.repeat(np.arange(cutoff), 2).astype(float)
        sz = np.tile([-0.5, 0.5], cutoff)
        u = np.exp(-1j * params.omega0 * (n + sz) * t)[:, None] * u
    return u


def excitation_number(state: HybridState) -> float:
    """``<a^dag a + sigma_z / 2>``, conserved by the resonant dynamics."""
    n = np.arange(state.cutoff)
    pg = np.abs(state.psi_g) ** 2
    pe = np.abs(state.psi_e) ** 2
    return float((n * (pg + pe)).sum() + 0.5 * (pe.sum() - pg.sum()))


def time_grid(t_max: float, n_points: int = 400) -> np.ndarray:
    return np.linspace(0.0, t_max, n_points)
