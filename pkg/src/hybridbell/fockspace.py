"""Truncated Fock-space algebra for a single bosonic mode coupled to a qubit.

Conventions used throughout the package:

* Qubit basis order is ``(g, e)``: index 0 is the ground state, index 1 the
  excited state.  ``sigma_z = |e><e| - |g><g|`` and ``sigma_+ = |e><g|``.
* A hybrid pure state is stored as two field vectors, ``psi_g`` and
  ``psi_e``, so that ``|psi> = |psi_g>|g> + |psi_e>|e>``.
* The flattened (dense) representation orders the field index first:
  ``vec[2 * n + a]`` is the amplitude of ``|n>|a>``, matching
  ``np.kron(cv_op, qubit_op)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import CutoffExceeded, CutoffTooSmall, ShapeError

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_Q_MAX = 5

# Qubit operators in (g, e) order.
IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T.copy()
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS
SIGMA_Y = -1j * (SIGMA_PLUS - SIGMA_MINUS)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in (IDENTITY_2, SIGMA_PLUS, SIGMA_MINUS, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FockVector:
    """Field amplitudes ``C_n`` for ``n = 0 .. cutoff-1``.

    ``tail_mass`` is the probability weight the truncation discarded
    (zero for states that live exactly inside the truncated space).
    """

    coeffs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.ndim != 1 or c.size < 1:
            raise ShapeError("FockVector needs a non-empty 1-D coefficient array")
        object.__setattr__(self, "coeffs", c)
        nrm = self.norm()
        if nrm > 1 + 1e-12:
            raise ValueError(f"FockVector norm {nrm!r} exceeds 1")

    @property
    def cutoff(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.coeffs, self.coeffs).real))

    def renormalized(self) -> "FockVector":
        return FockVector(self.coeffs / self.norm(), 0.0)

    def padded(self, cutoff: int) -> "FockVector":
        if cutoff < self.cutoff:
            raise CutoffExceeded(f"cannot shrink cutoff {self.cutoff} -> {cutoff}")
        c = np.zeros(cutoff, dtype=complex)
        c[: self.cutoff] = self.coeffs
        return FockVector(c, self.tail_mass)


@dataclass(frozen=True)
class QubitVector:
    c_g: complex
    c_e: complex

    @classmethod
    def ground(cls) -> "QubitVector":
        return cls(1.0, 0.0)

    @classmethod
    def excited(cls) -> "QubitVector":
        return cls(0.0, 1.0)

    def norm(self) -> float:
        return math.sqrt(abs(self.c_g) ** 2 + abs(self.c_e) ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.c_g, self.c_e], dtype=complex)


@dataclass(frozen=True)
class HybridState:
    """Pure state ``|psi_g>|g> + |psi_e>|e>`` on a truncated mode."""

    psi_g: np.ndarray
    psi_e: np.ndarray
    check_norm: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        g, e = _frozen(self.psi_g), _frozen(self.psi_e)
        if g.ndim != 1 or g.shape != e.shape:
            raise ShapeError(f"field components must share one cutoff, got {g.shape} and {e.shape}")
        object.__setattr__(self, "psi_g", g)
        object.__setattr__(self, "psi_e", e)
        if self.check_norm and abs(self.norm_sq() - 1.0) > 1e-10:
            raise ValueError(f"HybridState is not normalized (norm^2 = {self.norm_sq()!r})")

    @classmethod
    def product(cls, fieldvec: FockVector, atom: QubitVector) -> "HybridState":
        return cls(atom.c_g * fieldvec.coeffs, atom.c_e * fieldvec.coeffs)

    @classmethod
    def from_vector(cls, vec, check_norm=True) -> "HybridState":
        vec = np.asarray(vec, dtype=complex)
        if vec.ndim != 1 or vec.size % 2:
            raise ShapeError("flattened hybrid state must have even length")
        return cls(vec[0::2], vec[1::2], check_norm=check_norm)

    @property
    def cutoff(self) -> int:
        return self.psi_g.size

    def norm_sq(self) -> float:
        return float(np.vdot(self.psi_g, self.psi_g).real + np.vdot(self.psi_e, self.psi_e).real)

    def normalized(self) -> "HybridState":
        s = math.sqrt(self.norm_sq())
        return HybridState(self.psi_g / s, self.psi_e / s)

    def as_vector(self) -> np.ndarray:
        out = np.empty(2 * self.cutoff, dtype=complex)
        out[0::2] = self.psi_g
        out[1::2] = self.psi_e
        return out

    def apply_local(self, cv_op=None, qubit_op=None) -> "HybridState":
        """Apply ``cv_op (x) qubit_op``; either factor may be omitted."""
        g, e = self.psi_g, self.psi_e
        if cv_op is not None:
            cv_op = np.asarray(cv_op)
            if cv_op.shape != (self.cutoff, self.cutoff):
                raise ShapeError(f"cv operator shape {cv_op.shape} != ({self.cutoff}, {self.cutoff})")
            g, e = cv_op @ g, cv_op @ e
        if qubit_op is not None:
            u = np.asarray(qubit_op)
            if u.shape != (2, 2):
                raise ShapeError("qubit operator must be 2x2")
            g, e = u[0, 0] * g + u[0, 1] * e, u[1, 0] * g + u[1, 1] * e
        return HybridState(g, e, check_norm=self.check_norm)


@dataclass(frozen=True)
class HybridMixedState:
    """Convex mixture ``sum_i p_i |psi_i><psi_i|``."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(p), s) for p, s in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        if any(p < 0 for p, _ in comps):
            raise ValueError("mixture weights must be non-negative")
        if abs(sum(p for p, _ in comps) - 1.0) > 1e-10:
            raise ValueError("mixture weights must sum to 1")
        if len({s.cutoff for _, s in comps}) != 1:
            raise ShapeError("all mixture components must share one cutoff")
        object.__setattr__(self, "components", comps)

    @property
    def cutoff(self) -> int:
        return self.components[0][1].cutoff

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.components])


@dataclass(frozen=True)
class PseudospinTriple:
    """Generalized pseudospin operators with shift ``q`` on ``cutoff`` levels."""

    q: int
    sz: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sminus: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.sz.shape[0]

    @property
    def splus(self) -> np.ndarray:
        return self.sminus.conj().T

    def as_tuple(self):
        """Operators in (x, y, z) order."""
        return (self.sx, self.sy, self.sz)


# ---------------------------------------------------------------------------
# state construction


def make_fock(k: int, cutoff: int) -> FockVector:
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if not 0 <= k < cutoff:
        raise CutoffExceeded(f"Fock level {k} not representable with cutoff {cutoff}")
    c = np.zeros(cutoff, dtype=complex)
    c[k] = 1.0
    return FockVector(c)


def coherent_tail_mass(alpha: complex, cutoff: int) -> float:
    """Poisson weight of levels ``n >= cutoff`` for ``|alpha>``."""
    mu = abs(alpha) ** 2
    if mu == 0.0:
        return 0.0
    # P(X >= N) for X ~ Poisson(mu) is the regularized lower incomplete gamma.
    return float(gammainc(cutoff, mu))


def default_coherent_cutoff(alpha: complex) -> int:
    a = abs(alpha)
    return max(16, math.ceil(a * a + 6 * a + 10))


def _required_cutoff(tail_fn, start, tail_tol, step=1, limit=4096):
    n = start
    while n <= limit:
        if tail_fn(n) < tail_tol:
            return n
        n += step
    return None


def make_coherent(alpha: complex, cutoff: int | None = None, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Glauber state ``C_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!)``.

    Coefficients are the exact (untruncated) values; the discarded weight is
    stored in ``tail_mass``.
    """
    alpha = complex(alpha)
    if cutoff is None:
        cutoff = default_coherent_cutoff(alpha)
    tail = coherent_tail_mass(alpha, cutoff)
    if tail >= tail_tol:
        need = _required_cutoff(lambda n: coherent_tail_mass(alpha, n), cutoff, tail_tol)
        raise CutoffTooSmall(
            f"coherent state |alpha|={abs(alpha):.4g} loses {tail:.3e} >= {tail_tol:.1e} at cutoff {cutoff}"
            + (f"; need cutoff >= {need}" if need else ""),
            required=need,
            tail_mass=tail,
        )
    n = np.arange(cutoff)
    if alpha == 0:
        c = (n == 0).astype(complex)
    else:
        mag = np.exp(-0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1))
        c = mag * np.exp(1j * n * np.angle(alpha))
    return FockVector(c, tail)


def _smsv_log_weights(r: float, n_even: np.ndarray) -> np.ndarray:
    """log |C_n|^2 for even n (r > 0)."""
    m = n_even // 2
    return (
        gammaln(n_even + 1)
        - n_even * math.log(2.0)
        - 2 * gammaln(m + 1)
        + n_even * math.log(math.tanh(r))
        - math.log(math.cosh(r))
    )


def smsv_tail_mass(r: float, cutoff: int) -> float:
    """Weight of levels ``n >= cutoff`` for the squeezed vacuum."""
    if r == 0:
        return 0.0
    start = cutoff + (cutoff % 2)
    total = 0.0
    block = 256
    while True:
        n = np.arange(start, start + 2 * block, 2)
        w = np.exp(_smsv_log_weights(r, n))
        total += float(w.sum())
        if w[-1] < 1e-30 * max(total, 1e-300) or w[-1] == 0.0 or start > 10**6:
            return total
        start += 2 * block


def make_smsv(r: float, theta: float = 0.0, cutoff: int | None = None, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Single-mode squeezed vacuum ``S(r e^{i theta})|0>`` in the Fock basis.

    With ``cutoff=None`` the smallest even cutoff >= 32 meeting ``tail_tol``
    is used.
    """
    if r < 0:
        raise ValueError("squeezing magnitude must be non-negative")
    if cutoff is None:
        cutoff = _required_cutoff(lambda n: smsv_tail_mass(r, n), 32, tail_tol, step=2)
        if cutoff is None:
            raise CutoffTooSmall(f"no cutoff up to 4096 reaches tail_tol for r={r}")
    if cutoff < 2:
        raise CutoffTooSmall("squeezed vacuum needs cutoff >= 2", required=2)
    tail = smsv_tail_mass(r, cutoff)
    if tail >= tail_tol:
        need = _required_cutoff(lambda n: smsv_tail_mass(r, n), cutoff + (cutoff % 2), tail_tol, step=2)
        raise CutoffTooSmall(
            f"squeezed vacuum r={r} loses {tail:.3e} >= {tail_tol:.1e} at cutoff {cutoff}"
            + (f"; need cutoff >= {need}" if need else ""),
            required=need,
            tail_mass=tail,
        )
    c = np.zeros(cutoff, dtype=complex)
    if r == 0:
        c[0] = 1.0
        return FockVector(c)
    n = np.arange(0, cutoff, 2)
    m = n // 2
    mag = np.exp(0.5 * _smsv_log_weights(r, n))
    c[n] = mag * (-1.0) ** m * np.exp(1j * theta * m)
    return FockVector(c, tail)


# ---------------------------------------------------------------------------
# operators


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def number_op(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def displacement(beta: complex, cutoff: int) -> np.ndarray:
    """Dense ``exp(beta a^dag - beta* a)`` on the truncated space (via expm)."""
    from scipy.linalg import expm

    a = annihilation(cutoff)
    return expm(beta * a.conj().T - np.conj(beta) * a)


def pseudospin_pairs(q: int, cutoff: int):
    """Lower/upper levels of complete pairs and the straddling level (or None).

    Pairs are ``(2n+q, 2n+q+1)``.  A pair whose upper member falls outside
    the cutoff keeps its lower level (``S_z = -1``) with no ladder coupling;
    levels below ``q`` are outside the operator's support.
    """
    lo = np.arange(q, cutoff - 1, 2)
    hi = lo + 1
    last = cutoff - 1
    straddle = last if (last >= q and (last - q) % 2 == 0) else None
    return lo, hi, straddle


def make_pseudospin(q: int, cutoff: int, q_max: int = DEFAULT_Q_MAX) -> PseudospinTriple:
    if not 0 <= q <= q_max:
        raise ValueError(f"pseudospin shift q={q} outside 0..{q_max}")
    if cutoff <= q + 1:
        raise CutoffTooSmall(f"pseudospin q={q} needs cutoff > {q + 1}", required=q + 2)
    lo, hi, straddle = pseudospin_pairs(q, cutoff)
    sz = np.zeros((cutoff, cutoff), dtype=complex)
    sm = np.zeros((cutoff, cutoff), dtype=complex)
    sz[lo, lo] = -1.0
    sz[hi, hi] = 1.0
    if straddle is not None:
        sz[straddle, straddle] = -1.0
    sm[lo, hi] = 1.0
    sp = sm.conj().T
    sx = sp + sm
    sy = -1j * (sp - sm)
    for m in (sz, sm, sx, sy):
        m.setflags(write=False)
    return PseudospinTriple(q, sz, sx, sy, sm)


# ---------------------------------------------------------------------------
# expectation values and entanglement


def expectation(state: HybridState, cvop, qop) -> complex:
    """``<psi| cvop (x) qop |psi>`` by the four-block expansion.

    The result is returned as a complex number; for Hermitian operators the
    imaginary part is a rounding residue and is left for the caller to check.
    """
    cvop = np.asarray(cvop)
    qop = np.asarray(qop)
    n = state.cutoff
    if cvop.shape != (n, n):
        raise ShapeError(f"cv operator shape {cvop.shape} does not match cutoff {n}")
    if qop.shape != (2, 2):
        raise ShapeError(f"qubit operator shape {qop.shape} is not (2, 2)")
    comps = (state.psi_g, state.psi_e)
    total = 0j
    for a in range(2):
        for b in range(2):
            if qop[a, b] != 0:
                total += np.vdot(comps[a], cvop @ comps[b]) * qop[a, b]
    return complex(total)


def reduced_qubit_density(state: HybridState) -> np.ndarray:
    """Qubit reduced state in (g, e) order: ``rho[a, b] = <psi_b|psi_a>``."""
    g, e = state.psi_g, state.psi_e
    return np.array(
        [[np.vdot(g, g), np.vdot(e, g)], [np.vdot(g, e), np.vdot(e, e)]],
        dtype=complex,
    )


def von_neumann_entropy(eigs: Sequence[float]) -> float:
    mu = np.clip(np.asarray(eigs, dtype=float), 0.0, None)
    mu = mu[mu > 0]
    return float(-(mu * np.log2(mu)).sum()) + 0.0


def entanglement_entropy(state: HybridState) -> float:
    """Entropy (bits) of the qubit marginal of a pure hybrid state."""
    rho = reduced_qubit_density(state)
    return min(max(von_neumann_entropy(np.linalg.eigvalsh(rho)), 0.0), 1.0)


def random_state(cutoff: int, rng: np.random.Generator) -> HybridState:
    """Haar-like random pure state, used by tests and demos."""
    v = rng.normal(size=2 * cutoff) + 1j * rng.normal(size=2 * cutoff)
    return HybridState.from_vector(v / np.linalg.norm(v))
