"""Compact-graph evolution operator, secular equation and classical map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NumericalError, PreconditionError
from .graph import MetricGraph, edge_adjacency

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class EvolutionOperator:
    k: float
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class ClassicalMap:
    """Bond-to-bond transition probabilities ``|sigma|^2``.

    Column ``d'`` holds the probabilities of leaving incoming bond ``d'`` along
    each outgoing bond, so ``p(t+1) = matrix @ p(t)``.
    """

    matrix: np.ndarray
    is_open: bool


def _require_compact(g: MetricGraph):
    if g.is_open:
        raise PreconditionError("operation needs a compact graph (no leads)")


def evolution_operator(g: MetricGraph, k: float) -> EvolutionOperator:
    """``U(k) = diag(exp(i k L_d)) Sigma`` on the bond space."""
    _require_compact(g)
    phases = np.exp(1j * k * g.bond_lengths)
    return EvolutionOperator(float(k), phases[:, None] * g.bond_scattering)


def secular_value(g: MetricGraph, k: float) -> complex:
    """``det(I - U(k))``; vanishes on the spectrum."""
    u = evolution_operator(g, k).matrix
    return complex(np.linalg.det(np.eye(g.D) - u))


def secular_real(g: MetricGraph, k: float) -> float:
    """Real-valued secular function ``det(I - U) / sqrt(det(-U))``.

    For unitary ``U`` the ratio is real. The square-root branch is fixed
    through ``det U(k) = exp(i k sum L_d) det Sigma`` so the result is a
    continuous real function of ``k`` whose sign changes bracket roots.
    """
    _require_compact(g)
    det_sigma = np.linalg.det(-g.bond_scattering)
    root = np.sqrt(det_sigma) * np.exp(0.5j * k * g.bond_lengths.sum())
    return float((secular_value(g, k) / root).real)


def _eigenphase_sum(g: MetricGraph, k: float, snap: float = 1e-12) -> float:
    u = evolution_operator(g, k).matrix
    theta = np.mod(np.angle(np.linalg.eigvals(u)), TWO_PI)
    # eigenphases within snap of 2*pi count as sitting at zero
    theta[theta > TWO_PI - snap] -= TWO_PI
    return float(theta.sum())


def eigenphase_wraps(g: MetricGraph, k_a: float, k_b: float) -> int:
    """Number of roots of the secular equation in ``(k_a, k_b]``.

    Each eigenphase of ``U(k)`` increases monotonically with ``k`` and the sum
    of all of them advances by exactly ``(k_b - k_a) * sum_d L_d``. Comparing
    that with the change of the eigenphases reduced to ``[0, 2 pi)`` counts
    how many times an eigenphase passed through zero.
    """
    advance = (k_b - k_a) * g.bond_lengths.sum()
    raw = (advance - _eigenphase_sum(g, k_b) + _eigenphase_sum(g, k_a)) / TWO_PI
    n = round(raw)
    if abs(raw - n) > 1e-6:
        raise NumericalError(f"eigenphase winding mismatch on ({k_a}, {k_b}]: {raw}")
    return int(n)


def _refine(g, a, b, count, tol, out):
    if count == 0:
        return
    if b - a <= tol:
        out.extend([0.5 * (a + b)] * count)
        return
    mid = 0.5 * (a + b)
    left = eigenphase_wraps(g, a, mid)
    _refine(g, a, mid, left, tol, out)
    _refine(g, mid, b, count - left, tol, out)


def find_spectrum(
    g: MetricGraph,
    k_min: float,
    k_max: float,
    step: float | None = None,
    tol: float = 1e-10,
) -> list[float]:
    """Ascending roots of ``det(I - U(k)) = 0`` in ``(k_min, k_max]``.

    The interval is scanned on a grid (default step ``0.1 * pi / L_total``),
    roots are counted per cell by eigenphase winding and isolated by
    bisection to an absolute width ``tol``. Degenerate roots are repeated
    according to multiplicity.
    """
    _require_compact(g)
    if k_min < 0:
        raise PreconditionError("k_min must be non-negative")
    if k_max <= k_min:
        return []
    total = float(g.lengths.sum())
    if step is None:
        step = 0.1 * np.pi / total
    if step <= 0 or step * g.bond_lengths.max() >= np.pi:
        raise PreconditionError(
            f"grid step {step} too coarse: need step * max(L) < pi "
            f"(step < {np.pi / g.bond_lengths.max():.6g})"
        )
    n_cells = int(np.ceil((k_max - k_min) / step))
    grid = np.linspace(k_min, k_max, n_cells + 1)
    roots: list[float] = []
    for a, b in zip(grid[:-1], grid[1:]):
        count = eigenphase_wraps(g, a, b)
        _refine(g, a, b, count, tol, roots)
    return roots


def classical_map(g: MetricGraph) -> ClassicalMap:
    """Entrywise ``|sigma|^2`` on the bond space (doubly stochastic when compact)."""
    return ClassicalMap(np.abs(g.bond_scattering) ** 2, g.is_open)


def propagate_classical(p0, m: ClassicalMap, t: int) -> np.ndarray:
    """``M^t p0`` for a probability (or sub-probability) vector."""
    p = np.asarray(p0, dtype=float)
    if t < 0:
        raise PreconditionError("t must be non-negative")
    if np.any(p < 0) or p.sum() > 1 + 1e-12:
        raise PreconditionError("p0 must be non-negative with total mass <= 1")
    return np.linalg.matrix_power(m.matrix, int(t)) @ p


def is_irreducible(g: MetricGraph) -> bool:
    """Whether every bond can reach every other bond with non-zero probability.

    Transitions are allowed where the adjacency ``B`` and ``|sigma|^2`` are
    both non-zero. Convergence of ``M^t p`` to equidistribution needs an
    irreducible (and aperiodic) map; this is reported to callers, not enforced.
    """
    allowed = (edge_adjacency(g) > 0) & (classical_map(g).matrix > 0)
    n, _ = connected_components(allowed, directed=True, connection="strong")
    return n == 1
