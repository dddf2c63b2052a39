"""Metric multidimensional scaling by stress majorization (SMACOF).

The iteration starts from a classical (Torgerson) scaling solution, so a run
is a deterministic function of the dissimilarities; a seeded random start is
used only when classical scaling has no positive eigenvalue to work with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SYMMETRY_TOL = 1e-12
COINCIDENT_TOL = 1e-12


@dataclass(frozen=True)
class MDSResult:
    coordinates: np.ndarray
    raw_stress: float
    stress1: float
    n_iter: int
    history: tuple[float, ...]
    init: str


def check_dissimilarities(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise ValidationError(f"dissimilarities must be a square matrix, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise ValidationError("dissimilarities contain non-finite entries")
    if np.any(delta < 0):
        i, j = np.argwhere(delta < 0)[0]
        raise ValidationError(f"negative dissimilarity at ({i}, {j})")
    scale = max(1.0, float(np.max(delta))) if delta.size else 1.0
    asym = np.abs(delta - delta.T)
    if np.any(asym > SYMMETRY_TOL * scale):
        i, j = np.argwhere(asym > SYMMETRY_TOL * scale)[0]
        raise ValidationError(f"dissimilarities are not symmetric at ({i}, {j})")
    if np.any(np.diag(delta) != 0):
        raise ValidationError("dissimilarities must have a zero diagonal")
    return (delta + delta.T) / 2.0


def pairwise_distances(points) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def raw_stress(coords, delta) -> float:
    """Sum over pairs i < j of (d_ij - delta_ij)^2."""
    resid = pairwise_distances(coords) - delta
    return float(np.sum(np.triu(resid * resid, 1)))


def kruskal_stress1(coords, delta) -> float:
    """sqrt(sum (d - delta)^2 / sum d^2) over pairs i < j."""
    d = pairwise_distances(coords)
    num = float(np.sum(np.triu((d - delta) ** 2, 1)))
    den = float(np.sum(np.triu(d * d, 1)))
    if den == 0.0:
        return 0.0 if num == 0.0 else 1.0
    return float(np.sqrt(num / den))


def classical_scaling(delta, dim=2):
    """Torgerson scaling; returns (coordinates, eigenvalues in descending order)."""
    n = delta.shape[0]
    centring = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * centring @ (delta * delta) @ centring
    b = (b + b.T) / 2.0
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    coords = np.zeros((n, dim))
    for k in range(min(dim, n)):
        if evals[k] > 0:
            vec = evecs[:, k]
            # eigenvector sign is arbitrary; fix it so runs are reproducible
            pivot = np.argmax(np.abs(vec))
            if vec[pivot] < 0:
                vec = -vec
            coords[:, k] = vec * np.sqrt(evals[k])
    return coords, evals


def guttman_transform(coords, delta) -> np.ndarray:
    n = delta.shape[0]
    d = pairwise_distances(coords)
    # points closer than rounding noise count as coincident; dividing by a
    # 1e-16 distance would fling them apart
    tiny = COINCIDENT_TOL * float(np.max(d)) if d.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d > tiny, delta / d, 0.0)
    bmat = -ratio
    np.fill_diagonal(bmat, 0.0)
    np.fill_diagonal(bmat, -bmat.sum(axis=1))
    return bmat @ coords / n


def smacof_mds(distances, dim: int = 2, max_iter: int = 500, tol: float = 1e-8,
               seed: int = 0, init: str = "classical") -> MDSResult:
    """Embed ``distances`` in ``dim`` dimensions by iterated Guttman transforms.

    Iteration stops once the raw-stress decrease falls below ``tol`` or after
    ``max_iter`` transforms.  ``init="random"`` starts from a seeded Gaussian
    configuration instead of classical scaling.  A transform that would raise the stress (which
    only happens through rounding once converged) is discarded and ends the
    run, so ``history`` is non-increasing.
    """
    delta = check_dissimilarities(distances)
    n = delta.shape[0]
    if max_iter < 0:
        raise ValueError("max_iter must be non-negative")
    if n == 0:
        return MDSResult(np.zeros((0, dim)), 0.0, 0.0, 0, (0.0,), "empty")

    if init not in ("classical", "random"):
        raise ValueError("init must be 'classical' or 'random'")
    coords, evals = classical_scaling(delta, dim)
    if np.max(delta) > 0 and not evals[0] > 1e-12 * float(np.sum(delta * delta)):
        init = "random"
    if init == "random":
        coords = np.random.default_rng(seed).standard_normal((n, dim))

    stress = raw_stress(coords, delta)
    history = [stress]
    n_iter = 0
    while n_iter < max_iter and stress > 0.0:
        candidate = guttman_transform(coords, delta)
        new_stress = raw_stress(candidate, delta)
        if new_stress > stress:
            break
        n_iter += 1
        coords = candidate
        decrease = stress - new_stress
        stress = new_stress
        history.append(stress)
        if decrease < tol:
            break
    return MDSResult(coords, stress, kruskal_stress1(coords, delta), n_iter, tuple(history), init)


def squared_correlation(coords, delta) -> float:
    """RSQ: squared correlation between fitted and target distances (pairs i < j)."""
    n = delta.shape[0]
    iu = np.triu_indices(n, 1)
    d = pairwise_distances(coords)[iu]
    t = delta[iu]
    if d.size < 2 or np.ptp(d) == 0 or np.ptp(t) == 0:
        return 1.0 if np.allclose(d, t) else 0.0
    r = np.corrcoef(d, t)[0, 1]
    return float(r * r)
