"""Scattering matrix of open graphs: resolvent, path series, T-junction closed form."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import NearSingularWarning, NumericalError, PreconditionError
from .graph import TJUNCTION_CENTRE, MetricGraph

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class OpenEvolution:
    k: complex
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class SMatrix:
    k: float
    matrix: np.ndarray

    def __getitem__(self, item):
        return self.matrix[item]


def _require_open(g: MetricGraph):
    if not g.is_open:
        raise PreconditionError("operation needs a graph with at least one lead")


def open_evolution(g: MetricGraph, k) -> OpenEvolution:
    """``W(k)`` built from the lead-modified vertex matrices on interior bonds.

    ``k`` may be complex (used by the pole search).
    """
    _require_open(g)
    k = complex(k) if np.iscomplexobj(k) else float(k)
    return OpenEvolution(k, np.exp(1j * k * g.bond_lengths)[:, None] * g.bond_scattering)


def smatrix_resolvent(g: MetricGraph, k: float) -> SMatrix:
    """``S = diag(rho) + tau_out (I - W)^-1 diag(e^{ikL}) tau_in``.

    Emits :class:`NearSingularWarning` when ``cond(I - W) > 1e12``.
    """
    _require_open(g)
    w = open_evolution(g, k).matrix
    a = np.eye(g.D) - w
    if np.linalg.cond(a) > COND_LIMIT:
        warnings.warn(f"I - W(k) near singular at k={k}", NearSingularWarning, stacklevel=2)
    rhs = np.exp(1j * k * g.bond_lengths)[:, None] * g.lead_in
    s = np.diag(g.lead_reflection) + g.lead_out @ np.linalg.solve(a, rhs)
    return SMatrix(float(k), s)


def smatrix_values(g: MetricGraph, k, h: int = 0, h_in: int = 0, chunk: int = 1 << 16):
    """Vectorised ``S_{h, h_in}(k)`` over an array of wave numbers."""
    _require_open(g)
    k = np.asarray(k, dtype=float)
    flat = k.ravel()
    out = np.empty(flat.shape, dtype=complex)
    eye = np.eye(g.D)
    for start in range(0, flat.size, chunk):
        kk = flat[start : start + chunk]
        ph = np.exp(1j * kk[:, None] * g.bond_lengths[None, :])
        a = eye[None] - ph[:, :, None] * g.bond_scattering[None]
        rhs = ph * g.lead_in[:, h_in][None, :]
        x = np.linalg.solve(a, rhs[..., None])[..., 0]
        out[start : start + chunk] = g.lead_reflection[h] * (h == h_in) + x @ g.lead_out[h]
    return out.reshape(k.shape)


def smatrix_pathsum(g: MetricGraph, k: float, n_max: int) -> SMatrix:
    """Truncated multiple-scattering series ``sum_{n <= n_max} W^n``."""
    _require_open(g)
    if n_max < 0:
        raise PreconditionError("n_max must be non-negative")
    w = open_evolution(g, k).matrix
    vec = np.exp(1j * k * g.bond_lengths)[:, None] * g.lead_in
    acc = np.zeros_like(vec)
    for _ in range(n_max + 1):
        acc = acc + vec
        vec = w @ vec
    return SMatrix(float(k), np.diag(g.lead_reflection) + g.lead_out @ acc)


def pathsum_tail_bound(g: MetricGraph, k: float, n_max: int, block: int | None = None) -> float:
    """Rigorous bound on ``||S - smatrix_pathsum(g, k, n_max)||_2``.

    With ``q = ||W^m||_2 < 1`` every power satisfies
    ``||W^n|| <= c q^floor(n/m)`` where ``c = max_{j<m} ||W^j||``, and the
    tail of the series is summed blockwise. Unless ``block`` is given, block
    lengths ``m = D, 2D, ..., 16D`` are tried and the smallest bound is
    returned; ``inf`` means no block length gave a contraction.
    """
    w = open_evolution(g, k).matrix
    sizes = [block] if block else [g.D * 2**j for j in range(5)]
    powers = [np.eye(g.D, dtype=complex)]
    norms = [1.0]
    while len(powers) <= max(sizes):
        powers.append(w @ powers[-1])
        norms.append(np.linalg.norm(powers[-1], 2))
    scale = np.linalg.norm(g.lead_out, 2) * np.linalg.norm(g.lead_in, 2)
    best = float("inf")
    first = n_max + 1
    for m in sizes:
        q = norms[m]
        if q >= 1:
            continue
        c = max(norms[:m])
        a = first // m
        # remainder of the current block, then whole blocks
        tail = (m - first % m) * q**a + m * q ** (a + 1) / (1 - q)
        best = min(best, float(scale * c * tail))
    return best


def tjunction_smatrix(L1: float, L2: float, k):
    """Closed-form T-junction ``S(k)``; accepts scalar or array ``k``."""
    if L1 <= 0 or L2 <= 0:
        raise PreconditionError("edge lengths must be positive")
    k = np.asarray(k, dtype=float)
    p1 = np.exp(2j * k * L1)
    p2 = np.exp(2j * k * L2)
    mean = 0.5 * (p1 + p2)
    den = 1 - mean
    if np.any(np.abs(den) < 1e-14):
        raise NumericalError("T-junction S(k) denominator vanishes (degenerate phases)")
    s = (p1 * p2 - mean) / den
    return complex(s) if s.ndim == 0 else s


def tjunction_family_coefficient(t1: int, t2: int) -> Fraction:
    """Exact coefficient of ``phi1^t1 phi2^t2`` in the family expansion of S."""
    if t1 < 0 or t2 < 0 or t1 + t2 < 1:
        raise PreconditionError("need t1, t2 >= 0 with t1 + t2 >= 1")
    if t2 == 0:
        return -Fraction(1, 2**t1)
    if t1 == 0:
        return -Fraction(1, 2**t2)
    t = t1 + t2
    return Fraction(t - (t1 - t2) ** 2, 2**t * t1 * t2) * comb(t - 2, t1 - 1)


def _binom(n: int, r: int) -> int:
    return comb(n, r) if 0 <= r <= n else 0


def tjunction_family_coefficient_pascal(t1: int, t2: int) -> Fraction:
    """Same coefficient from the signed path count (first/last excursion).

    ``2 C(t-2, t1-1)`` paths start and end on different edges (positive sign),
    ``C(t-2, t1-2) + C(t-2, t2-2)`` start and end on the same edge. A single
    excursion (t = 1) is one negative path.
    """
    t = t1 + t2
    if t < 1 or t1 < 0 or t2 < 0:
        raise PreconditionError("need t1, t2 >= 0 with t1 + t2 >= 1")
    if t == 1:
        return Fraction(-1, 2)
    signed = 2 * _binom(t - 2, t1 - 1) - _binom(t - 2, t1 - 2) - _binom(t - 2, t2 - 2)
    return Fraction(signed, 2**t)


def tjunction_lengths(g: MetricGraph) -> tuple[float, float] | None:
    """``(L1, L2)`` if ``g`` is the T-junction model, else ``None``."""
    if g.vertex_count != 3 or g.E != 2 or g.leads != (0,):
        return None
    if [e[:2] for e in g.edges] != [(0, 1), (0, 2)]:
        return None
    if not np.allclose(g.vertex_matrices[0].entries, TJUNCTION_CENTRE, atol=1e-14, rtol=0):
        return None
    if any(g.vertex_matrices[v].entries.shape != (1, 1) for v in (1, 2)):
        return None
    if not all(np.isclose(g.vertex_matrices[v].entries[0, 0], 1.0) for v in (1, 2)):
        return None
    return float(g.edges[0][2]), float(g.edges[1][2])


def smatrix_function(g: MetricGraph, h: int = 0, h_in: int = 0):
    """Vectorised callable ``k -> S_{h, h_in}(k)``; closed form for the T-junction."""
    lengths = tjunction_lengths(g)
    if lengths is not None:
        L1, L2 = lengths
        return lambda k: tjunction_smatrix(L1, L2, k)
    return lambda k: smatrix_values(g, k, h, h_in)
