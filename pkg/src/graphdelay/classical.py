"""Classical (incoherent) delay distribution and its exponential tail.

A classical walker enters bond ``d`` with probability ``|tau_in[d]|^2``,
hops with the sub-Markov map ``|sigma|^2`` and leaves into lead ``h`` with
probability ``|tau_out[h, d]|^2``. Its delay is the total length travelled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy.optimize import brentq

from ._parallel import worker_count
from .errors import NumericalError, PreconditionError
from .evolution import classical_map
from .graph import MetricGraph
from .paths import _check_leads, _family_recursion, _real
from .wavepacket import DelayDistribution

MC_CHUNK = 1 << 16
STEP_CAP = 10**6


@dataclass(frozen=True, eq=False)
class ClassicalJumps:
    """Step function ``C(s) = sum_i w_i Theta(s - l_i)`` with ``Theta(0) = 1``."""

    lengths: np.ndarray
    weights: np.ndarray
    exact_weights: tuple
    s_max: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > self.s_max):
            raise PreconditionError(f"jumps are complete only up to s={self.s_max}")
        csum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return csum[np.searchsorted(self.lengths, s, side="right")]

    def exact_at(self, s: float):
        """Exact (rational when possible) ``C(s)``."""
        if s > self.s_max:
            raise PreconditionError(f"jumps are complete only up to s={self.s_max}")
        idx = int(np.searchsorted(self.lengths, s, side="right"))
        return sum(self.exact_weights[:idx], Fraction(0))


def classical_jumps(
    g: MetricGraph, h: int = 0, h_in: int = 0, s_max: float = 20.0, budget: int = 10**7
) -> ClassicalJumps:
    """Arrival lengths and exact weights of all classical paths with length ``<= s_max``."""
    _check_leads(g, h, h_in)
    fam = _family_recursion(g, h, h_in, length_max=s_max, coherent=False, budget=budget)
    items = sorted((float(np.dot(q, g.lengths)), _real(w)) for q, (_, w, _) in fam.items())
    lengths, exact = [], []
    for l, w in items:
        if lengths and l == lengths[-1]:
            exact[-1] = exact[-1] + w
        else:
            lengths.append(l)
            exact.append(w)
    return ClassicalJumps(
        np.array(lengths), np.array([float(w) for w in exact]), tuple(exact), float(s_max)
    )


def classical_cumulative_exact(
    g: MetricGraph, h: int = 0, h_in: int = 0, s_max: float = 20.0, s_values=None
) -> DelayDistribution:
    """Exact classical ``C(s)`` on ``s_values`` (default step 0.01 up to ``s_max``).

    ``density`` holds the jump mass per grid cell divided by the cell width;
    the jump set itself is kept in ``info``.
    """
    jumps = classical_jumps(g, h, h_in, s_max)
    if s_values is None:
        s_values = np.linspace(0.0, s_max, int(round(s_max / 0.01)) + 1)
    s = np.asarray(s_values, dtype=float)
    c = jumps(s)
    dens = np.zeros_like(c)
    if s.size > 1:
        dens[1:] = np.diff(c) / np.diff(s)
    return DelayDistribution(s, dens, c, "classical", {"jumps": jumps})


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    delays: np.ndarray
    channels: np.ndarray
    traversals: np.ndarray
    overflow: int
    seed: int
    info: dict = field(default_factory=dict)

    def empirical_cdf(self, s, h: int = 0):
        """Fraction of all walkers that left through ``h`` with delay ``<= s``."""
        d = np.sort(self.delays[self.channels == h])
        return np.searchsorted(d, np.asarray(s, dtype=float), side="right") / self.delays.size


def _walk_chunk(g, h_in, n, seed_seq, step_cap, cum, n_out):
    rng = np.random.default_rng(seed_seq)
    E, D = g.E, g.D
    counts = np.zeros((n, E), dtype=np.int64)
    channel = np.full(n, -1, dtype=np.int64)
    # entry outcome < D is a bond, == D is direct reflection into h_in
    p_refl = abs(g.lead_reflection[h_in]) ** 2
    probs = np.concatenate([np.abs(g.lead_in[:, h_in]) ** 2, [p_refl]])
    probs = np.cumsum(probs / probs.sum())
    first = np.searchsorted(probs, rng.random(n), side="right")
    first = np.minimum(first, D)
    channel[first == D] = h_in
    active = np.flatnonzero(first < D)
    bond = first[active]
    steps = 0
    while active.size and steps < step_cap:
        np.add.at(counts, (active, bond % E), 1)
        u = rng.random(active.size)
        outcome = (u[:, None] >= cum[bond]).sum(axis=1)
        outcome = np.minimum(outcome, D + n_out - 1)
        leave = outcome >= D
        channel[active[leave]] = outcome[leave] - D
        keep = ~leave
        active, bond = active[keep], outcome[keep]
        steps += 1
    return counts, channel, int(active.size)


def classical_delay_mc(
    g: MetricGraph,
    h_in: int = 0,
    samples: int = 10**5,
    seed: int = 0,
    step_cap: int = STEP_CAP,
    workers: int | None = None,
) -> MonteCarloResult:
    """Sample classical walkers entering from lead ``h_in``.

    Walkers are processed in fixed chunks of ``2^16`` with one child seed per
    chunk (``SeedSequence.spawn``), so the stream depends only on ``seed``
    and not on the number of workers. Walkers still inside after
    ``step_cap`` steps are counted in ``overflow`` and get channel ``-1``.
    """
    if not g.is_open:
        raise PreconditionError("Monte Carlo delays need an open graph")
    if samples < 1:
        raise PreconditionError("samples must be positive")
    D, H = g.D, g.H
    # column d' of [M; |tau_out|^2] is the exit distribution after bond d'
    table = np.vstack([np.abs(g.bond_scattering) ** 2, np.abs(g.lead_out) ** 2]).T
    cum = np.cumsum(table, axis=1)
    cum /= cum[:, -1:]
    sizes = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        sizes.append(samples % MC_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    n_workers = workers or worker_count()

    def job(i):
        return _walk_chunk(g, h_in, sizes[i], seeds[i], step_cap, cum, H)

    if n_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    counts = np.concatenate([p[0] for p in parts])
    channels = np.concatenate([p[1] for p in parts])
    overflow = sum(p[2] for p in parts)
    delays = counts @ g.lengths
    return MonteCarloResult(
        delays, channels, counts.sum(axis=1), overflow, seed, {"step_cap": step_cap}
    )


def ks_statistic(result: MonteCarloResult, jumps: ClassicalJumps, h: int = 0) -> float:
    """Kolmogorov-Smirnov distance between the sampled and exact ``C(s)``.

    Both are step functions with jumps on the same length set, so the
    supremum is attained at a jump (or just before one). Samples beyond
    ``jumps.s_max`` only enter through the value at ``s_max``.
    """
    pts = jumps.lengths
    emp = result.empirical_cdf(pts, h)
    exact = np.cumsum(jumps.weights)
    d_at = np.abs(emp - exact)
    # left limits: values just before each jump
    emp_left = np.concatenate([[0.0], emp[:-1]])
    exact_left = np.concatenate([[0.0], exact[:-1]])
    d_left = np.abs(emp_left - exact_left)
    extra = result.empirical_cdf(np.nextafter(pts, -np.inf), h)
    d_left = np.maximum(d_left, np.abs(extra - exact_left))
    return float(max(d_at.max(initial=0.0), d_left.max(initial=0.0)))


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (conservative for discrete CDFs)."""
    from scipy.stats import kstwobign

    return float(kstwobign.isf(alpha) / np.sqrt(n))


@dataclass(frozen=True, eq=False)
class LaplaceMap:
    """``M(z) = exp(-z L) M`` with ``L`` the diagonal bond-length matrix."""

    z: float
    matrix: np.ndarray


def laplace_map(g: MetricGraph, z: float) -> LaplaceMap:
    m = classical_map(g).matrix
    return LaplaceMap(float(z), np.exp(-z * g.bond_lengths)[:, None] * m)


def laplace_determinant(g: MetricGraph, z: float) -> float:
    """``det(I - M(z))``."""
    return float(np.linalg.det(np.eye(g.D) - laplace_map(g, z).matrix))


def _perron(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def decay_constant(g: MetricGraph, tol: float = 1e-15) -> float:
    """Classical decay rate ``xi > 0`` where ``det(I - M(-xi)) = 0``.

    Solved as the point where the Perron root of ``exp(xi L) M`` reaches 1;
    that root increases monotonically with ``xi``, so the zero is unique and
    is the largest real zero of the determinant in ``z``.
    """
    if not g.is_open:
        raise PreconditionError("closed graph: the classical map conserves probability (xi = 0)")
    m = classical_map(g).matrix
    if _perron(m) >= 1 - 1e-12:
        raise PreconditionError("no escape: spectral radius of the open map is 1 (xi = 0)")

    def f(x):
        return _perron(np.exp(x * g.bond_lengths)[:, None] * m) - 1

    hi = 1.0
    while f(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise NumericalError("could not bracket the decay constant")
    return float(brentq(f, 0.0, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate via the SVD, well defined for singular matrices.

    With ``a = U diag(s) V^H``, ``adj(a) = det(U) det(V^H) V diag(prod_{j != i} s_j) U^H``.
    """
    u, s, vh = np.linalg.svd(a)
    n = s.size
    prods = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    scale = np.linalg.det(u) * np.linalg.det(vh)
    adj = scale * (vh.conj().T * prods) @ u.conj().T
    return adj.real if np.isrealobj(a) else adj


def decay_prefactor(g: MetricGraph, h: int = 0, h_in: int = 0, xi: float | None = None) -> float:
    """Coefficient ``A`` of ``exp(-xi s)`` in the classical delay density.

    ``A = sum |tau_out|^2 adj(I - M(-xi)) e^{xi L} |tau_in|^2 / tr[adj(I - M(-xi)) L M(-xi)]``.
    """
    _check_leads(g, h, h_in)
    if xi is None:
        xi = decay_constant(g)
    mz = laplace_map(g, -xi).matrix
    adj = adjugate(np.eye(g.D) - mz)
    den = float(np.trace(adj @ np.diag(g.bond_lengths) @ mz))
    if abs(den) < 1e-14:
        raise NumericalError("degenerate zero: adjugate trace vanishes")
    t_out = np.abs(g.lead_out[h]) ** 2
    t_in = np.abs(g.lead_in[:, h_in]) ** 2 * np.exp(xi * g.bond_lengths)
    return float(t_out @ adj @ t_in / den)


@dataclass(frozen=True)
class DecayLaw:
    xi: float
    prefactor: float


def decay_law(g: MetricGraph, h: int = 0, h_in: int = 0) -> DecayLaw:
    xi = decay_constant(g)
    return DecayLaw(xi, decay_prefactor(g, h, h_in, xi))


def classical_asymptote(law: DecayLaw, s):
    """``C(s) ~ 1 - (A / xi) exp(-xi s)``."""
    return 1 - law.prefactor / law.xi * np.exp(-law.xi * np.asarray(s, dtype=float))


# T-junction closed forms ----------------------------------------------------


def tjunction_laplace_determinant(L1: float, L2: float, z):
    z = np.asarray(z, dtype=float)
    return 1 - np.exp(-2 * L1 * z) / 4 - np.exp(-2 * L2 * z) / 4


def tjunction_laplace_determinant_derivative(L1: float, L2: float, z):
    z = np.asarray(z, dtype=float)
    return L1 / 2 * np.exp(-2 * L1 * z) + L2 / 2 * np.exp(-2 * L2 * z)


def tjunction_decay_law(L1: float, L2: float) -> DecayLaw:
    """``xi`` from ``1 = (e^{2 xi L1} + e^{2 xi L2}) / 4`` and ``A = 2 / (L1 e^{2 xi L1} + L2 e^{2 xi L2})``."""
    f = lambda x: 1 - np.exp(2 * L1 * x) / 4 - np.exp(2 * L2 * x) / 4
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    xi = float(brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    a = 2 / (L1 * np.exp(2 * xi * L1) + L2 * np.exp(2 * xi * L2))
    return DecayLaw(xi, float(a))


def tjunction_classical_cumulative(L1: float, L2: float, s: float) -> Fraction:
    """``sum 4^{-(t1+t2)} C(t1+t2, t1)`` over excursion counts with ``2(t1 L1 + t2 L2) <= s``."""
    total = Fraction(0)
    t1 = 0
    while 2 * t1 * L1 <= s:
        t2 = 0
        while 2 * (t1 * L1 + t2 * L2) <= s:
            if t1 + t2:
                total += Fraction(comb(t1 + t2, t1), 4 ** (t1 + t2))
            t2 += 1
        t1 += 1
    return total
