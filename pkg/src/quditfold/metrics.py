"""Post-hoc evaluation of prepared distributions.

All functions take exact Born-rule probability vectors (no shot sampling).
Entropies are computed on the renormalized restriction of the distribution
to an event of interest (e.g. valid loops), so a distribution concentrated
uniformly on that event scores as maximally spread regardless of the event's
total probability.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostVector
from .errors import ArityError


def _restrict(probs: np.ndarray, mask) -> np.ndarray:
    sub = probs if mask is None else probs[mask]
    total = float(sub.sum())
    if sub.size == 0 or total <= 0.0:
        raise ArityError("the restriction carries no probability mass")
    return sub / total


def collision_entropy(probs: np.ndarray, mask=None) -> float:
    """Sum of squared renormalized probabilities: 1/N when uniform over the
    subset, 1 when deterministic."""
    q = _restrict(probs, mask)
    return float(np.dot(q, q))


def shannon_entropy(probs: np.ndarray, mask=None, bits: bool = False) -> float:
    """Entropy of the renormalized restriction, in nats (or bits); 0 log 0 = 0."""
    q = _restrict(probs, mask)
    q = q[q > 0.0]
    h = -float(np.dot(q, np.log(q)))
    return h / np.log(2.0) if bits else h


def dimensionless_energy(e: float, e_random: float, e_min: float) -> float:
    """(E - E_min) / (E_random - E_min): 1 at random assignment, 0 at optimum."""
    span = e_random - e_min
    if span == 0.0:
        return 0.0
    return (e - e_min) / span


def clash_probability(probs: np.ndarray, clashes: np.ndarray) -> float:
    """Probability mass on configurations with at least one clash."""
    return float(probs[clashes >= 1].sum())


@dataclass(frozen=True)
class CrossingDistribution:
    probs_by_k: np.ndarray  # P(crossings = k), k = 0..k_max
    tail: float  # P(crossings > k_max)
    non_loop: float  # P(endpoint != origin)
    zero_cross_loop: float  # P(crossings = 0 and loop)


def crossing_distribution(
    probs: np.ndarray, cost: CostVector, k_max: int = 5
) -> CrossingDistribution:
    """Marginal crossing-count distribution plus the open-walk probability."""
    if cost.crossings is None or cost.end_dist_sq is None:
        raise ArityError("cost vector carries no walk component arrays")
    crossings = cost.crossings
    by_k = np.array(
        [float(probs[crossings == k].sum()) for k in range(k_max + 1)]
    )
    tail = float(probs[crossings > k_max].sum())
    loop = cost.end_dist_sq == 0
    return CrossingDistribution(
        probs_by_k=by_k,
        tail=tail,
        non_loop=float(probs[~loop].sum()),
        zero_cross_loop=float(probs[(crossings == 0) & loop].sum()),
    )


def random_guess_quantile(probs: np.ndarray, q: float, p_queries: int) -> float:
    """Probability that ``p_queries`` uniform draws hit the smallest head of
    the descending-sorted distribution holding mass >= q.

    P_random(q) = 1 - (1 - (1 + x)/N)^p with x the minimal index at which the
    running sum of sorted probabilities reaches q.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if p_queries < 1:
        raise ValueError("p_queries must be >= 1")
    sorted_desc = np.sort(probs)[::-1]
    cum = np.cumsum(sorted_desc)
    n = sorted_desc.size
    x = int(np.searchsorted(cum, q * (1.0 - 1e-12), side="left"))
    x = min(x, n - 1)
    return float(1.0 - (1.0 - (1.0 + x) / n) ** p_queries)


def quantile_ratio(probs: np.ndarray, q: float, p_queries: int) -> float:
    """q / P_random(q): above 1 where sampling the trained state beats
    repeated uniform guessing."""
    return q / random_guess_quantile(probs, q, p_queries)


def fit_exponential(xs, ys) -> tuple[float, float, float]:
    """(intercept, slope, correlation) of the least-squares fit
    log10(y) = intercept + slope * x."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2:
        raise ValueError("need at least two points")
    if np.any(ys <= 0.0):
        raise ValueError("ys must be positive for a log fit")
    logy = np.log10(ys)
    slope, intercept = np.polyfit(xs, logy, 1)
    resid = logy - (intercept + slope * xs)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot == 0.0 or ss_res >= ss_tot:
        correlation = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        correlation = float(np.sqrt(1.0 - ss_res / ss_tot))
    return float(intercept), float(slope), correlation


# ---------------------------------------------------------------------------
# multidimensional scaling
# ---------------------------------------------------------------------------


def rms_distance_matrix(positions: np.ndarray) -> np.ndarray:
    """Pairwise root-mean-square atomic distance between conformations.

    ``positions`` has shape (n_conformations, n_atoms, 3); no superposition
    is applied, so rigid-motion-related conformations keep nonzero distance.
    """
    pos = np.asarray(positions, dtype=np.float64)
    diff = pos[:, None, :, :] - pos[None, :, :, :]
    return np.sqrt(np.mean(np.sum(diff**2, axis=-1), axis=-1))


def mds_embed(dist: np.ndarray, rank: int = 2) -> tuple[np.ndarray, np.ndarray, float]:
    """Classical multidimensional scaling of a symmetric distance matrix.

    Double-centers the squared distances, takes the top ``rank`` eigenpairs,
    and returns (points (n, rank), the descending eigenvalues used, relative
    stress sqrt(sum (d_emb - d)^2 / sum d^2)).  Negative eigenvalues
    contribute zero coordinates.
    """
    d = np.asarray(dist, dtype=np.float64)
    n = d.shape[0]
    if n == 1:
        return np.zeros((1, rank)), np.zeros(rank), 0.0
    d2 = d**2
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * (j @ d2 @ j)
    eigvals, eigvecs = np.linalg.eigh(b)
    idx = np.argsort(eigvals)[::-1][:rank]
    lam = eigvals[idx]
    vecs = eigvecs[:, idx]
    points = vecs * np.sqrt(np.clip(lam, 0.0, None))
    emb = np.sqrt(
        np.maximum(
            np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1), 0.0
        )
    )
    denom = float(np.sum(d2))
    stress = float(np.sqrt(np.sum((emb - d) ** 2) / denom)) if denom > 0 else 0.0
    return points, lam, stress
