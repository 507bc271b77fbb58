"""Resonance poles of the scattering matrix and the quantum long-time tail.

For the T-junction the poles are the complex zeros of
``D(k) = 1 - (exp(2ikL1) + exp(2ikL2)) / 2``. Narrow poles sit near wave
numbers where ``k L1`` and ``k L2`` are both close to multiples of ``pi``;
a two-level analysis of such a coincidence gives the seed position and width.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, RegimeWarning
from .graph import MetricGraph
from .scattering import open_evolution
from .wavepacket import Envelope

NEWTON_ITERATIONS = 50
RESIDUAL_TOL = 1e-12
POLISH_STEPS = 3  # extended-precision Newton steps after the fast double iteration
MAX_GRAPH_NORM = 1e6
MIN_WIDTH = 1e-10  # zeros closer to the real axis are real (bound) states
SEED_WIDTHS = (1e-3, 0.05, 0.2, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class DegeneratePair:
    k1: float
    k2: float
    m1: int
    m2: int
    commensurate: bool

    @property
    def delta_k(self) -> float:
        return abs(self.k1 - self.k2)


@dataclass(frozen=True)
class ResonancePole:
    """Pole of ``S`` at ``kappa - i gamma``."""

    kappa: float
    gamma: float
    k1: float
    k2: float
    refined: bool = False

    @property
    def position(self) -> complex:
        return complex(self.kappa, -self.gamma)

    @property
    def delta_k(self) -> float:
        return abs(self.k1 - self.k2)


def near_degenerate_pairs(
    L1: float, L2: float, k_range, threshold: float | None = None
) -> list[DegeneratePair]:
    """Pairs ``k1 = pi m1 / L1``, ``k2 = pi m2 / L2`` in ``k_range`` closer than ``threshold``.

    The default threshold is ``0.2 / (L1 + L2)``. Exact coincidences
    (commensurate lengths) are returned with ``commensurate=True``.
    """
    if not 0 < L1 < L2:
        raise PreconditionError("need 0 < L1 < L2")
    ka, kb = map(float, k_range)
    if kb <= ka:
        return []
    if threshold is None:
        threshold = 0.2 / (L1 + L2)
    found = {}
    for La, Lb, first in ((L1, L2, True), (L2, L1, False)):
        m_lo = max(1, int(np.ceil(ka * La / np.pi)))
        m_hi = int(np.floor(kb * La / np.pi))
        if m_hi < m_lo:
            continue
        m = np.arange(m_lo, m_hi + 1)
        ka_ = np.pi * m / La
        mb = np.maximum(1, np.rint(ka_ * Lb / np.pi)).astype(np.int64)
        kb_ = np.pi * mb / Lb
        close = np.abs(ka_ - kb_) < threshold
        for x, y, mx, my in zip(ka_[close], kb_[close], m[close], mb[close]):
            k1, k2, m1, m2 = (x, y, mx, my) if first else (y, x, my, mx)
            if not (ka <= k1 <= kb and ka <= k2 <= kb):
                continue
            found[(int(m1), int(m2))] = (float(k1), float(k2))
    out = []
    for (m1, m2), (k1, k2) in sorted(found.items(), key=lambda it: it[1][0]):
        comm = abs(k1 - k2) <= 1e-12 * max(k1, k2)
        out.append(DegeneratePair(k1, k2, m1, m2, comm))
    return out


def pole_from_pair(k1: float, k2: float, L1: float, L2: float) -> ResonancePole:
    """Two-level estimate ``kappa = (k1 L1 + k2 L2)/L``, ``gamma = 2 lambda^2 dk^2 / L``.

    Here ``L = L1 + L2`` and ``lambda = L1 L2 / L``.
    """
    L = L1 + L2
    lam = L1 * L2 / L
    dk = abs(k1 - k2)
    if dk * lam > 0.2:
        warnings.warn(
            f"delta_k * lambda = {dk * lam:.3g} is not small; seed is unreliable",
            RegimeWarning,
            stacklevel=2,
        )
    kappa = (k1 * L1 + k2 * L2) / L
    gamma = 2 * lam**2 * dk**2 / L
    return ResonancePole(float(kappa), float(gamma), float(k1), float(k2), False)


def residual_tolerance(z, scale: float, terms: float = 1.0):
    """Attainable residual: ``1e-12`` or the rounding level ``eps |z| L |terms|``."""
    return np.maximum(RESIDUAL_TOL, 64 * np.finfo(float).eps * np.abs(z) * scale * terms)


def tjunction_residual_tolerance(L1: float, L2: float, z):
    """Attainable T-junction residual: ``1e-12`` or what rounding ``z`` itself costs.

    With the phase reduced in extended precision the only rounding left is
    the representation of ``kappa``; its half spacing times ``|D'(z)|``
    exceeds ``1e-12`` only for ``kappa`` beyond a few thousand.
    """
    z = np.asarray(z, dtype=complex)
    terms = np.exp(-2 * z.imag * L1) + np.exp(-2 * z.imag * L2)
    slope = np.abs(_tjunction_derivative(L1, L2, z))
    floor = slope * np.spacing(np.abs(z.real)) + 8 * np.finfo(float).eps * terms
    return np.maximum(RESIDUAL_TOL, floor)


_TWO_PI = np.longdouble("6.28318530717958647692528676655900577")


def _phase(k, L):
    """``exp(2ikL)`` with the real phase reduced mod ``2 pi`` in extended precision.

    At ``k ~ 1e4`` the double product ``2 k L`` alone carries an error of
    order ``1e-12``, which would set the floor of the Newton residual.
    """
    k = np.asarray(k, dtype=complex)
    theta = 2 * k.real.astype(np.longdouble) * np.longdouble(L)
    theta = (theta - _TWO_PI * np.rint(theta / _TWO_PI)).astype(float)
    return np.exp(1j * theta - 2 * k.imag * L)


def tjunction_denominator(L1: float, L2: float, k):
    return 1 - 0.5 * (_phase(k, L1) + _phase(k, L2))


def _tjunction_derivative(L1, L2, k):
    return -1j * (L1 * _phase(k, L1) + L2 * _phase(k, L2))


def _graph_newton(g: MetricGraph, z: complex):
    """Residual, Newton step and rounding scale for ``det(I - W(z)) = 0``.

    The residual is the smallest singular value of ``I - W``; its rounding
    level grows with the largest one, which is returned as the scale. Deep
    in the lower half plane ``W`` is exponentially large and a small
    singular value no longer certifies a zero, so points with
    ``||I - W|| > 1e6`` report an infinite residual.
    """
    w = open_evolution(g, z).matrix
    if not np.all(np.isfinite(w)):
        return np.nan, np.nan, 1.0
    a = np.eye(g.D) - w
    sv = np.linalg.svd(a, compute_uv=False)
    # d/dk det(I - W) = -det(I - W) tr[(I - W)^-1 i L W]
    if sv[0] > MAX_GRAPH_NORM:
        return np.inf, np.nan, sv[0]
    try:
        t = np.trace(np.linalg.solve(a, 1j * g.bond_lengths[:, None] * w))
    except np.linalg.LinAlgError:
        return 0.0, 0.0, sv[0]  # exactly singular: already at a zero
    return sv[-1], -1 / t, sv[0]


def _tjunction_newton(L1, L2, z):
    f = tjunction_denominator(L1, L2, z)
    return abs(f), f / _tjunction_derivative(L1, L2, z), tjunction_residual_tolerance(L1, L2, z)


def refine_pole(target, seed: ResonancePole) -> ResonancePole:
    """Complex Newton iteration from the seed to a zero of the S-matrix denominator.

    ``target`` is ``(L1, L2)`` for the T-junction closed form or an open
    :class:`MetricGraph` (zero of ``det(I - W(k))``; the residual there is
    the smallest singular value of ``I - W``). Returns the seed unchanged
    with ``refined=False`` if the residual does not drop below ``1e-12`` (or
    the rounding floor of :func:`tjunction_residual_tolerance` or
    :func:`residual_tolerance`) within 50 iterations,
    or if the result is not strictly below the real axis.
    """
    z = seed.position
    if isinstance(target, MetricGraph):
        scale = float(target.bond_lengths.max())

        def step(z):
            res, dz, norm = _graph_newton(target, z)
            return res, dz, residual_tolerance(z, scale, norm)

    else:
        L1, L2 = target
        step = lambda z: _tjunction_newton(L1, L2, z)

    converged = False
    with np.errstate(all="ignore"):
        for _ in range(NEWTON_ITERATIONS):
            res, dz, tol = step(z)
            if not np.isfinite(dz):
                break
            if res < tol:
                converged = True
                break
            z = z - dz
    if converged and -z.imag > MIN_WIDTH:
        return ResonancePole(float(z.real), float(-z.imag), seed.k1, seed.k2, True)
    return ResonancePole(seed.kappa, seed.gamma, seed.k1, seed.k2, False)


def _nearest_pair(kappa, L1, L2):
    k1 = np.pi * np.rint(kappa * L1 / np.pi) / L1
    k2 = np.pi * np.rint(kappa * L2 / np.pi) / L2
    return k1, k2


def _dedupe(z: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    z = z[np.argsort(z.real)]
    keep = []
    for x in z:
        if not any(abs(x - y) < tol for y in keep[-8:]):
            keep.append(x)
    return np.array(keep, dtype=complex)


def find_poles(
    L1: float, L2: float, k_min: float, k_max: float, seed_step: float = 0.25
) -> list[ResonancePole]:
    """All T-junction poles with ``k_min <= kappa < k_max``.

    Newton runs from a grid of seeds (spacing ``seed_step`` in ``kappa``,
    several trial widths), converged roots are de-duplicated and sorted.
    The residual test allows for the rounding of ``kappa`` at large ``|k|``
    (see :func:`tjunction_residual_tolerance`); the real zero at ``k = 0`` is excluded.
    """
    if k_max <= k_min:
        return []
    kr = np.arange(k_min - 1.0, k_max + 1.0, seed_step)
    z = (kr[:, None] - 1j * np.array(SEED_WIDTHS)[None, :]).ravel()
    with np.errstate(all="ignore"):
        for _ in range(2 * NEWTON_ITERATIONS):
            p1, p2 = np.exp(2j * z * L1), np.exp(2j * z * L2)
            z = z - (1 - 0.5 * (p1 + p2)) / (-1j * (L1 * p1 + L2 * p2))
        ok = np.isfinite(z) & (np.abs(z.imag) < 2 * max(SEED_WIDTHS) + 10)
        z = z[ok]
        for _ in range(POLISH_STEPS):
            z = z - tjunction_denominator(L1, L2, z) / _tjunction_derivative(L1, L2, z)
        res = np.abs(tjunction_denominator(L1, L2, z))
        ok = np.isfinite(z) & (res < tjunction_residual_tolerance(L1, L2, z))
    z = z[ok & (z.imag < -MIN_WIDTH) & (z.real >= k_min) & (z.real < k_max)]
    z = _dedupe(z)
    out = []
    for x in z:
        k1, k2 = _nearest_pair(x.real, L1, L2)
        out.append(ResonancePole(float(x.real), float(-x.imag), float(k1), float(k2), True))
    return out


def find_poles_graph(
    g: MetricGraph,
    k_min: float,
    k_max: float,
    seed_step: float = 0.25,
    widths=SEED_WIDTHS,
) -> list[ResonancePole]:
    """Poles of a general open graph: zeros of ``det(I - W(k))`` below the real axis.

    Seeds sit on a grid in ``kappa`` at each trial width. Real zeros
    (``gamma <= 1e-10``, states that do not couple to the leads) are not poles
    of ``S`` and are dropped.
    """
    found = []
    for kr in np.arange(k_min, k_max, seed_step):
        for gw in widths:
            p = refine_pole(g, ResonancePole(float(kr), float(gw), np.nan, np.nan))
            if p.refined and k_min <= p.kappa < k_max:
                found.append(p.position)
    if not found:
        return []
    z = _dedupe(np.array(found))
    return [ResonancePole(float(x.real), float(-x.imag), np.nan, np.nan, True) for x in z]


def argument_principle_count(
    L1: float, L2: float, k_a: float, k_b: float, gamma_max: float = 6.0, n: int = 20000
) -> float:
    """Zeros of the T-junction denominator in ``(k_a, k_b) x (-gamma_max, 0)`` by winding."""
    pts = np.concatenate(
        [
            np.linspace(k_a, k_b, n),
            k_b - 1j * np.linspace(0, gamma_max, n),
            np.linspace(k_b, k_a, n) - 1j * gamma_max,
            k_a - 1j * np.linspace(gamma_max, 0, n),
        ]
    )
    ph = np.unwrap(np.angle(tjunction_denominator(L1, L2, pts)))
    return float(-(ph[-1] - ph[0]) / (2 * np.pi))


def resonance_density(gamma, L: float):
    """Poles per unit ``kappa`` per unit ``gamma``: ``sqrt(L^3 / (2 gamma)) / pi^2``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise PreconditionError("gamma must be positive")
    return np.sqrt(L**3 / (2 * gamma)) / np.pi**2


def resonance_cumulative_density(gamma, L: float):
    """Poles per unit ``kappa`` with width below ``gamma``: ``sqrt(2 gamma L^3) / pi^2``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise PreconditionError("gamma must be non-negative")
    return np.sqrt(2 * gamma * L**3) / np.pi**2


def width_histogram(poles, L: float, k_span: float, edges=None):
    """Counts of pole widths per logarithmic bin and the predicted counts.

    Returns ``(edges, counts, predicted)``; the default bins are decades
    from ``1e-6`` to ``1``.
    """
    if edges is None:
        edges = 10.0 ** np.arange(-6, 1)
    edges = np.asarray(edges, dtype=float)
    g = np.array([p.gamma for p in poles])
    counts = np.histogram(g, bins=edges)[0]
    cum = resonance_cumulative_density(edges, L) * k_span
    return edges, counts, np.diff(cum)


def tjunction_local_smatrix(pole: ResonancePole, k):
    """Isolated-resonance form ``-(k - (kappa + i gamma)) / (k - (kappa - i gamma))``."""
    k = np.asarray(k, dtype=float)
    return -(k - complex(pole.kappa, pole.gamma)) / (k - pole.position)


def longtime_cumulative_resonances(
    poles, env: Envelope, s, k_range: tuple[float, float] | None = None
):
    """``C(s) = 1 - 4 pi sum_n omega^2(kappa_n) gamma_n exp(-2 gamma_n s)``.

    ``k_range`` is the interval that was searched for poles; it must cover
    ``k0 +- 3 sigma``. Beyond ``s ~ sigma^2`` the sum is not expected to hold
    and a :class:`RegimeWarning` is emitted.
    """
    s = np.asarray(s, dtype=float)
    if k_range is not None:
        lo, hi = k_range
        if lo > env.k0 - 3 * env.sigma or hi < env.k0 + 3 * env.sigma:
            raise PreconditionError(
                f"pole search range {k_range} does not cover k0 +- 3 sigma "
                f"= ({env.k0 - 3 * env.sigma}, {env.k0 + 3 * env.sigma})"
            )
    if np.any(s > env.sigma**2):
        warnings.warn(
            f"s beyond sigma^2 = {env.sigma**2}: the resonance sum is outside its validity range",
            RegimeWarning,
            stacklevel=2,
        )
    kappa = np.array([p.kappa for p in poles])
    gamma = np.array([p.gamma for p in poles])
    w = env.squared(kappa) * gamma
    tail = 4 * np.pi * np.exp(-2 * np.multiply.outer(s, gamma)) @ w
    return 1 - tail


def longtime_cumulative_integral(L: float, s):
    """``C(s) = 1 - (s/L)^{-3/2} / sqrt(4 pi)``."""
    s = np.asarray(s, dtype=float)
    return 1 - (s / L) ** -1.5 / np.sqrt(4 * np.pi)
