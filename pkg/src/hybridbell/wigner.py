"""Hybrid Wigner function on (qubit sphere) x (phase plane) and its negative volume.

Field kernel: ``(2/pi) D(b) P D(b)^dag`` with parity ``P``.  Because
``P D(b)^dag = D(b) P``, its Fock elements are
``(2/pi) (-1)^m <n|D(2b)|m>``, which is evaluated in closed form with
associated Laguerre polynomials and log-factorial prefactors.

Qubit kernel: ``(1/2) U (I - sqrt(3) sz) U^dag`` with
``U = exp(i sz phi) exp(i sy theta) exp(i sz chi)``; ``chi`` cancels because
it commutes with ``sz``.

Measure: ``(1/pi) sin(2 theta) d theta d phi d^2 beta`` with
``theta in [0, pi/2]``.  Substituting ``u = cos(2 theta)`` turns the polar
weight into ``du / 2`` so the qubit polar integral is plain Gauss-Legendre.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import NormalizationDrift
from .fockspace import SIGMA_Y, SIGMA_Z, HybridState

SQRT3 = np.sqrt(3.0)
QUBIT_PARITY = np.eye(2) - SQRT3 * SIGMA_Z
DEFAULT_QUAD_TOL = 1e-6


# ---------------------------------------------------------------------------
# field kernel


def displacement_elements(gamma, cutoff: int) -> np.ndarray:
    """``<n|D(gamma)|m>`` for ``n, m < cutoff``; ``gamma`` may be an array.

    Exact matrix elements of the untruncated operator (not ``expm`` of a
    truncated generator).  Returns shape ``gamma.shape + (cutoff, cutoff)``.
    """
    gamma = np.asarray(gamma, dtype=complex)
    x = np.abs(gamma) ** 2
    n = np.arange(cutoff)
    big, small = np.maximum.outer(n, n), np.minimum.outer(n, n)
    k = big - small
    xe = x[..., None, None]
    lag = eval_genlaguerre(small, k, xe)
    log_pref = 0.5 * (gammaln(small + 1) - gammaln(big + 1)) - 0.5 * xe
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = np.where(k > 0, k * np.log(np.abs(gamma))[..., None, None], 0.0)
    ph = np.exp(1j * np.angle(gamma))[..., None, None]
    lower = n[:, None] >= n[None, :]  # n >= m: gamma^(n-m); n < m: (-gamma*)^(m-n)
    phase = np.where(lower, ph**k, (-ph.conj()) ** k)
    return np.exp(log_pref + log_abs) * lag * phase


def displaced_parity_matrix(beta, cutoff: int) -> np.ndarray:
    """``<n|Delta_c(beta)|m>`` block, shape ``beta.shape + (cutoff, cutoff)``."""
    signs = (-1.0) ** np.arange(cutoff)
    return (2.0 / np.pi) * displacement_elements(2.0 * np.asarray(beta), cutoff) * signs


def displaced_parity_element(n: int, m: int, beta: complex) -> complex:
    """Single element ``<n|Delta_c(beta)|m>``."""
    size = max(n, m) + 1
    return complex(displaced_parity_matrix(beta, size)[n, m])


def displaced_parity_sum(n: int, m: int, beta: complex, n_sum: int = 200) -> complex:
    """Same element as an explicit parity-signed sum over intermediate levels.

    Uses the closed-form displacement elements on ``n_sum`` levels; the
    truncation error is the weight of ``D(beta)^dag |m>`` beyond ``n_sum``.
    """
    d = displacement_elements(beta, n_sum)
    signs = (-1.0) ** np.arange(n_sum)
    return complex((2.0 / np.pi) * np.sum(d[n, :] * signs * d[m, :].conj()))


# ---------------------------------------------------------------------------
# qubit kernel


def qubit_kernel(theta: float, phi: float) -> np.ndarray:
    """``(1/2) U (I - sqrt(3) sz) U^dag`` in (g, e) order, closed form."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    off = 0.5 * SQRT3 * s * np.exp(2j * phi)
    return np.array(
        [[0.5 * (1 + SQRT3 * c), np.conj(off)], [off, 0.5 * (1 - SQRT3 * c)]],
        dtype=complex,
    )


def qubit_kernel_from_rotation(theta: float, phi: float, chi: float = 0.0) -> np.ndarray:
    """Qubit kernel built from the rotation ``U``; oracle for :func:`qubit_kernel`."""
    u = expm(1j * phi * SIGMA_Z) @ expm(1j * theta * SIGMA_Y) @ expm(1j * chi * SIGMA_Z)
    return 0.5 * u @ QUBIT_PARITY @ u.conj().T


@dataclass(frozen=True)
class KernelPair:
    delta_c: np.ndarray
    delta_d: np.ndarray


def kernel_pair(theta: float, phi: float, beta: complex, cutoff: int) -> KernelPair:
    return KernelPair(displaced_parity_matrix(beta, cutoff), qubit_kernel(theta, phi))


# ---------------------------------------------------------------------------
# point evaluation


def _field_blocks(state: HybridState, beta) -> tuple:
    """``<psi_a|Delta_c(beta)|psi_b>`` for (gg, ee, eg), broadcast over ``beta``."""
    dc = displaced_parity_matrix(beta, state.cutoff)
    g, e = state.psi_g, state.psi_e
    dg, de = dc @ g, dc @ e
    gg = (g.conj() * dg).sum(-1).real
    ee = (e.conj() * de).sum(-1).real
    eg = (e.conj() * dg).sum(-1)
    return gg, ee, eg


def _combine(gg, ee, eg, u, s, phi):
    """Four-term qubit contraction with ``u = cos 2theta``, ``s = sin 2theta``."""
    return 0.5 * ((1 + SQRT3 * u) * gg + (1 - SQRT3 * u) * ee) + SQRT3 * s * np.real(np.exp(2j * phi) * eg)


def hybrid_wigner(state: HybridState, theta: float, phi: float, beta: complex) -> float:
    """``W(theta, phi, beta)`` from the four coefficient-product terms."""
    gg, ee, eg = _field_blocks(state, beta)
    return float(_combine(gg, ee, eg, np.cos(2 * theta), np.sin(2 * theta), phi))


def hybrid_wigner_direct(state: HybridState, theta: float, phi: float, beta: complex) -> float:
    """``<psi| Delta_c (x) Delta_d |psi>`` by dense Kronecker contraction."""
    op = np.kron(displaced_parity_matrix(beta, state.cutoff), qubit_kernel_from_rotation(theta, phi))
    v = state.as_vector()
    w = np.vdot(v, op @ v)
    if abs(w.imag) > 1e-9:
        raise ValueError(f"Wigner value has imaginary residue {w.imag:.2e}")
    return float(w.real)


# ---------------------------------------------------------------------------
# quadrature grid


@dataclass(frozen=True)
class WignerGridSpec:
    radius: float | None = None
    n_r: int = 96
    n_phi_beta: int = 96
    n_theta: int = 32
    n_phi: int = 32
    quad_tol: float = DEFAULT_QUAD_TOL
    center: complex = 0.0

    def __post_init__(self):
        if min(self.n_r, self.n_phi_beta, self.n_theta, self.n_phi) < 1:
            raise ValueError("grid sizes must be positive")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")

    def refined(self, factor: int = 2) -> "WignerGridSpec":
        return WignerGridSpec(
            self.radius, self.n_r * factor, self.n_phi_beta * factor,
            self.n_theta * factor, self.n_phi * factor, self.quad_tol, self.center,
        )


def default_radius(state: HybridState) -> float:
    """``sqrt(<n>) + 5``: covers Gaussian tails of width 1/2 below 1e-12."""
    n = np.arange(state.cutoff)
    mean_n = float((n * (np.abs(state.psi_g) ** 2 + np.abs(state.psi_e) ** 2)).sum())
    return np.sqrt(mean_n) + 5.0


@dataclass(frozen=True)
class WignerGrid:
    """Tensor-product nodes; ``values`` has shape ``(n_beta, n_theta, n_phi)``."""

    beta: np.ndarray
    beta_weights: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    qubit_weights: np.ndarray
    values: np.ndarray | None = None

    @property
    def weights(self) -> np.ndarray:
        return self.beta_weights[:, None, None] * self.qubit_weights[None, :, :]

    def integral(self) -> float:
        return float((self.weights * self.values).sum())

    def abs_integral(self) -> float:
        return float((self.weights * np.abs(self.values)).sum())

    def to_csv(self, path) -> None:
        """Dump ``(theta, phi, re_beta, im_beta, weight, W)`` rows."""
        b = np.broadcast_to(self.beta[:, None, None], self.values.shape)
        th = np.broadcast_to(self.theta[None, :, None], self.values.shape)
        ph = np.broadcast_to(self.phi[None, None, :], self.values.shape)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "re_beta", "im_beta", "weight", "W"])
            for row in zip(th.ravel(), ph.ravel(), b.real.ravel(), b.imag.ravel(), self.weights.ravel(), self.values.ravel()):
                w.writerow([f"{x:.12g}" for x in row])


def build_grid(spec: WignerGridSpec, radius: float) -> WignerGrid:
    """Nodes and weights; all weights are strictly positive."""
    xr, wr = np.polynomial.legendre.leggauss(spec.n_r)
    r = 0.5 * radius * (xr + 1.0)
    wr = 0.5 * radius * wr * r  # polar Jacobian
    ang = 2 * np.pi * np.arange(spec.n_phi_beta) / spec.n_phi_beta
    beta = spec.center + (r[:, None] * np.exp(1j * ang[None, :])).ravel()
    beta_w = (wr[:, None] * np.full(spec.n_phi_beta, 2 * np.pi / spec.n_phi_beta)[None, :]).ravel()

    xu, wu = np.polynomial.legendre.leggauss(spec.n_theta)
    theta = 0.5 * np.arccos(xu)
    phi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    # (1/pi) sin2t dt dphi = (1/(2 pi)) du dphi
    qw = (wu[:, None] / (2 * np.pi)) * np.full(spec.n_phi, 2 * np.pi / spec.n_phi)[None, :]
    return WignerGrid(beta, beta_w, theta, phi, qw)


def evaluate_grid(state: HybridState, spec: WignerGridSpec = WignerGridSpec(), chunk: int = 1024) -> WignerGrid:
    """Fill ``values`` with ``W`` at every node."""
    radius = spec.radius if spec.radius is not None else default_radius(state)
    grid = build_grid(spec, radius)
    u = np.cos(2 * grid.theta)[:, None]
    s = np.sin(2 * grid.theta)[:, None]
    phi = grid.phi[None, :]
    vals = np.empty((grid.beta.size, grid.theta.size, grid.phi.size))
    for lo in range(0, grid.beta.size, chunk):
        gg, ee, eg = _field_blocks(state, grid.beta[lo : lo + chunk])
        vals[lo : lo + chunk] = _combine(
            gg[:, None, None], ee[:, None, None], eg[:, None, None], u[None], s[None], phi[None]
        )
    return WignerGrid(grid.beta, grid.beta_weights, grid.theta, grid.phi, grid.qubit_weights, vals)


@dataclass(frozen=True)
class NegativityResult:
    volume: float
    integral: float
    residual: float


def negativity_volume(state: HybridState, spec: WignerGridSpec = WignerGridSpec()) -> NegativityResult:
    """``(1/2)(sum w|W| - sum w W)`` with the normalization residual."""
    grid = evaluate_grid(state, spec)
    total = grid.integral()
    resid = total - 1.0
    if abs(resid) > 10 * spec.quad_tol:
        raise NormalizationDrift(f"Wigner grid integrates to {total:.10f} (residual {resid:.2e})", residual=resid)
    return NegativityResult(0.5 * (grid.abs_integral() - total), total, resid)
