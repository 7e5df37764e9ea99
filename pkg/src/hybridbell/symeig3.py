"""Eigen-decomposition of real symmetric 3x3 matrices, batched.

Eigenvalues come from the trigonometric solution of the characteristic
cubic.  Where the cubic is close to a double root the arccos step loses half
the working precision, so those matrices (and, for eigenvectors, any matrix
with a small relative eigenvalue gap) are re-solved by cyclic Jacobi
rotations.
"""

from __future__ import annotations

import numpy as np

DISCRIMINANT_TOL = 1e-12
VECTOR_GAP_TOL = 1e-5
JACOBI_SWEEPS = 12


def _as_batch(a):
    a = np.asarray(a, dtype=float)
    if a.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) array, got {a.shape}")
    return a.reshape(-1, 3, 3), a.shape[:-2]


def _det3(m):
    return (
        m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
        - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
        + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0])
    )


def _trig_eigvals(a):
    """Return ascending eigenvalues and the normalized discriminant 1 - r^2."""
    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    b = a - q[:, None, None] * np.eye(3)
    p2 = (b * b).sum(axis=(-2, -1)) / 6.0
    p = np.sqrt(p2)
    safe = np.where(p > 0, p, 1.0)
    bn = b / safe[:, None, None]
    r = np.clip(_det3(bn) / 2.0, -1.0, 1.0)
    r = np.where(p > 0, r, 0.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2 * p * np.cos(phi)
    lo = q + 2 * p * np.cos(phi + 2 * np.pi / 3)
    mid = 3 * q - hi - lo
    w = np.stack([lo, mid, hi], axis=-1)
    w.sort(axis=-1)
    disc = np.where(p > 0, 1.0 - r * r, 1.0)
    return w, disc


def jacobi_eigh3(a, sweeps=JACOBI_SWEEPS):
    """Cyclic Jacobi for a batch of symmetric 3x3 matrices.

    Returns ascending eigenvalues and eigenvectors as columns.
    """
    a, shape = _as_batch(a)
    a = a.copy()
    m = a.shape[0]
    v = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    idx = np.arange(m)
    for _ in range(sweeps):
        off = a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2
        if not np.any(off > 1e-300):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[:, p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            tau = np.where(active, (a[:, q, q] - a[:, p, p]) / (2 * np.where(active, apq, 1.0)), 0.0)
            t = np.where(active, np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            t = np.where(active & (tau == 0), 1.0, t)
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            j = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
            j[idx, p, p] = c
            j[idx, q, q] = c
            j[idx, p, q] = s
            j[idx, q, p] = -s
            a = np.swapaxes(j, -1, -2) @ a @ j
            v = v @ j
    w = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, -1)
    v = np.take_along_axis(v, order[:, None, :], -1)
    return w.reshape(shape + (3,)), _fix_signs(v).reshape(shape + (3, 3))


def eigvalsh3(a):
    """Ascending eigenvalues of symmetric 3x3 matrices (batched)."""
    a, shape = _as_batch(a)
    w, disc = _trig_eigvals(a)
    bad = disc < DISCRIMINANT_TOL
    if bad.any():
        w[bad] = jacobi_eigh3(a[bad])[0]
    return w.reshape(shape + (3,))


def _fix_signs(v):
    """Make the first component of each eigenvector with |x| > 1e-12 positive."""
    big = np.abs(v) > 1e-12
    first = np.argmax(big, axis=-2)
    lead = np.take_along_axis(v, first[..., None, :], -2)[..., 0, :]
    sign = np.where(lead < 0, -1.0, 1.0)
    return v * sign[..., None, :]


def _null_vector(m):
    """Unit vector orthogonal to the rows of (near-)rank-2 matrices ``m``."""
    c = np.stack(
        [np.cross(m[:, 0], m[:, 1]), np.cross(m[:, 0], m[:, 2]), np.cross(m[:, 1], m[:, 2])],
        axis=1,
    )
    nrm = np.linalg.norm(c, axis=-1)
    best = np.argmax(nrm, axis=-1)
    idx = np.arange(m.shape[0])
    return c[idx, best] / nrm[idx, best][:, None]


def eigh3(a):
    """Ascending eigenvalues and column eigenvectors of symmetric 3x3 matrices.

    Eigenvectors follow a fixed sign convention (first non-negligible
    component positive) so results are deterministic.
    """
    a, shape = _as_batch(a)
    w, disc = _trig_eigvals(a)
    scale = np.maximum(np.abs(w).max(axis=-1), 1e-300)
    gap = np.minimum(w[:, 1] - w[:, 0], w[:, 2] - w[:, 1]) / scale
    bad = (disc < DISCRIMINANT_TOL) | (gap < VECTOR_GAP_TOL)
    v = np.empty_like(a)
    good = ~bad
    if good.any():
        ag, wg = a[good], w[good]
        eye = np.eye(3)
        v0 = _null_vector(ag - wg[:, 0, None, None] * eye)
        v2 = _null_vector(ag - wg[:, 2, None, None] * eye)
        v2 = v2 - (v2 * v0).sum(-1, keepdims=True) * v0
        v2 /= np.linalg.norm(v2, axis=-1, keepdims=True)
        v1 = np.cross(v2, v0)
        v[good] = np.stack([v0, v1, v2], axis=-1)
    if bad.any():
        w[bad], v[bad] = jacobi_eigh3(a[bad])
    return w.reshape(shape + (3,)), _fix_signs(v).reshape(shape + (3, 3))
