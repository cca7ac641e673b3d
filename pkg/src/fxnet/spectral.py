"""Cross-correlation matrix, deterministic eigendecomposition and random-matrix
reference quantities (Marchenko-Pastur bounds, Porter-Thomas density, shuffled
surrogates)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .market_data import ReturnPanel, PanelError

DEFAULT_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12
DEGENERACY_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Jacobi sweeps exhausted before reaching the off-diagonal tolerance."""


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray  # N x N

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def validate(self) -> None:
        c = self.values
        n = self.size
        if c.shape != (n, n):
            raise ValueError(f"correlation matrix must be square, got {c.shape}")
        asym = float(np.abs(c - c.T).max())
        if asym > SYMMETRY_TOL:
            raise ValueError(f"matrix asymmetry {asym:g} exceeds {SYMMETRY_TOL:g}")
        if np.abs(np.diag(c) - 1.0).max() > SYMMETRY_TOL:
            raise ValueError("diagonal deviates from 1")
        if c.min() < -1 - SYMMETRY_TOL or c.max() > 1 + SYMMETRY_TOL:
            raise ValueError("entries fall outside [-1, 1]")


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order; row j of `eigenvectors` is u_j, scaled
    so that sum_i u_ji^2 = N."""

    eigenvalues: np.ndarray  # length N, descending
    eigenvectors: np.ndarray  # N x N, row per eigenvector

    @property
    def size(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class RmtBounds:
    q: float
    lambda_min: float
    lambda_max: float


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def correlation_matrix(rp: ReturnPanel) -> CorrelationMatrix:
    """Pairwise correlations C_ij of the normalized return rows (1/T convention)."""
    if not rp.normalized:
        raise PanelError("correlation matrix requires a normalized return panel")
    r = rp.returns
    t = r.shape[1]
    if t < 2:
        raise PanelError("need at least 2 time steps")
    centered = r - r.mean(axis=1, keepdims=True)
    c = centered @ centered.T / t
    c = (c + c.T) / 2.0
    np.fill_diagonal(c, 1.0)
    cm = CorrelationMatrix(values=_freeze(c))
    cm.validate()
    return cm


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = 0.0
    a[q, p] = 0.0
    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt((off * off).sum()))


def eigendecompose(
    cm: CorrelationMatrix,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> SpectralDecomposition:
    """Cyclic Jacobi eigendecomposition with a fixed ordering and sign convention.

    Sweeps run until the off-diagonal Frobenius norm drops below 1e-12 * N.
    Eigenvalues are sorted descending; within a degenerate block eigenvectors
    are ordered by the index of their largest-magnitude component; each
    eigenvector is flipped so that component is positive, then scaled to
    sum_i u_ji^2 = N.
    """
    cm.validate()
    n = cm.size
    a = np.array(cm.values, dtype=float)
    v = np.eye(n)
    tol = 1e-12 * n
    skip = tol / (n * n)
    for _ in range(max_sweeps):
        if _off_norm(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > skip:
                    _jacobi_rotate(a, v, p, q)
    else:
        if _off_norm(a) >= tol:
            raise ConvergenceError(
                f"Jacobi did not converge within {max_sweeps} sweeps"
            )

    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order].T  # row per eigenvector

    # reorder degenerate blocks by the index of the dominant component
    i = 0
    while i < n:
        j = i + 1
        scale = max(1.0, abs(vals[i]))
        while j < n and abs(vals[j] - vals[i]) <= DEGENERACY_TOL * scale:
            j += 1
        if j - i > 1:
            block = vecs[i:j]
            dominant = [int(np.argmax(np.abs(row))) for row in block]
            perm = np.argsort(dominant, kind="stable")
            vecs[i:j] = block[perm]
            vals[i:j] = vals[i:j][perm]
        i = j

    for j in range(n):
        dom = int(np.argmax(np.abs(vecs[j])))
        if vecs[j, dom] < 0:
            vecs[j] = -vecs[j]
    vecs *= math.sqrt(n)

    return SpectralDecomposition(eigenvalues=_freeze(vals), eigenvectors=_freeze(vecs))


def rmt_bounds(n: int, t: int) -> RmtBounds:
    """Support bounds of the random (Wishart) eigenvalue spectrum at Q = T/N."""
    if n < 2 or t < n:
        raise ValueError(f"require t >= n >= 2 (Q >= 1), got n={n}, t={t}")
    q = t / n
    lo = (1.0 - 1.0 / math.sqrt(q)) ** 2
    hi = (1.0 + 1.0 / math.sqrt(q)) ** 2
    return RmtBounds(q=q, lambda_min=lo, lambda_max=hi)


def mp_density(lam: float, q: float) -> float:
    """Density of the random eigenvalue spectrum at Q = q; zero outside support."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    lo = (1.0 - 1.0 / math.sqrt(q)) ** 2
    hi = (1.0 + 1.0 / math.sqrt(q)) ** 2
    if lam <= lo or lam >= hi:
        return 0.0
    return q / (2.0 * math.pi) * math.sqrt((hi - lam) * (lam - lo)) / lam


def porter_thomas_density(u: float) -> float:
    """Standard-normal density expected for random eigenvector components."""
    return math.exp(-u * u / 2.0) / math.sqrt(2.0 * math.pi)


def shuffle_surrogate(rp: ReturnPanel, seed: int) -> ReturnPanel:
    """Independently permute each return row in time (seeded, reproducible).

    Each row gets its own stream derived from (seed, row index), so the
    output is identical for identical seeds regardless of row evaluation
    order.
    """
    if not rp.normalized:
        raise PanelError("surrogate shuffling expects a normalized return panel")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    t = rp.n_steps
    shuffled = np.empty_like(rp.returns)
    for i in range(rp.n_assets):
        rng = np.random.default_rng([seed, i])
        shuffled[i] = rp.returns[i, rng.permutation(t)]
    return replace(rp, returns=_freeze(shuffled))


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Deterministic child seeds for independent replicate streams."""
    state = np.random.SeedSequence(master_seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def eigenvector_component_sample(
    sd: SpectralDecomposition, which: list[int]
) -> np.ndarray:
    """Pool the components of the selected eigenvectors into one vector."""
    n = sd.size
    for j in which:
        if not 0 <= j < n:
            raise IndexError(f"eigenvalue index {j} out of range for N={n}")
    if not which:
        return np.empty(0)
    return np.concatenate([sd.eigenvectors[j] for j in which])
