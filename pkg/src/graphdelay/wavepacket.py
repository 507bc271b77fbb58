"""Gaussian wave packets and the delay-time distribution ``P(s)``.

The outgoing intensity at optical path length ``s`` is

    P(s) = |int omega(k) S(k) exp(-iks) dk|^2 / (2 pi),

computed here by trapezoidal quadrature on a uniform ``k`` grid, either
directly for arbitrary ``s`` values or with FFTs on a uniform ``s`` grid.
The family representation replaces ``S(k)`` by its path expansion and
performs the ``k`` integral analytically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ._parallel import worker_count
from .errors import PreconditionError, RegimeWarning

SUPPORT = 8.0  # envelope half-width in units of sigma


@dataclass(frozen=True)
class Envelope:
    """Normalised Gaussian ``omega(k) = (2/(pi sigma^2))^{1/4} exp(-(k-k0)^2/sigma^2)``."""

    k0: float
    sigma: float

    @property
    def peak(self) -> float:
        return (2 / (np.pi * self.sigma**2)) ** 0.25

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return self.peak * np.exp(-(((k - self.k0) / self.sigma) ** 2))

    def squared(self, k):
        return self(k) ** 2

    def k_grid(self, delta_k: float) -> np.ndarray:
        """Uniform grid over ``[k0 - 8 sigma, k0 + 8 sigma]`` clipped to ``k >= delta_k``."""
        ka, kb = self.support(delta_k)
        n = int(np.floor((kb - ka) / delta_k)) + 1
        return ka + delta_k * np.arange(n)

    def support(self, delta_k: float) -> tuple[float, float]:
        return max(self.k0 - SUPPORT * self.sigma, delta_k), self.k0 + SUPPORT * self.sigma


def gaussian_envelope(k0: float, sigma: float) -> Envelope:
    if not (sigma > 0 and k0 > 0):
        raise PreconditionError("k0 and sigma must be positive")
    if k0 <= 2 * sigma:
        warnings.warn(
            f"k0={k0} <= 2 sigma={2 * sigma}: the envelope reaches k <= 0",
            RegimeWarning,
            stacklevel=2,
        )
    return Envelope(float(k0), float(sigma))


@dataclass(frozen=True, eq=False)
class DelayDistribution:
    """Density ``P(s)`` and cumulative ``C(s)`` sampled on ``s``."""

    s: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray
    source: str
    info: dict = field(default_factory=dict)

    @property
    def tail(self) -> np.ndarray:
        return 1.0 - self.cumulative

    def cumulative_at(self, s):
        """Linear interpolation of ``C`` at ``s``."""
        return np.interp(s, self.s, self.cumulative)


def _sample(S, env: Envelope, delta_k: float):
    k = env.k_grid(delta_k)
    if callable(S):
        vals = np.empty(k.shape, dtype=complex)
        chunk = 1 << 21
        for i in range(0, k.size, chunk):
            vals[i : i + chunk] = S(k[i : i + chunk])
    else:
        vals = np.asarray(S, dtype=complex)
        if vals.shape != k.shape:
            raise PreconditionError(
                f"S has {vals.size} samples but the k grid has {k.size}; "
                "sample S on env.k_grid(delta_k)"
            )
    f = env(k) * vals * delta_k
    f[0] *= 0.5
    f[-1] *= 0.5
    return k, f


def aliasing_limit(delta_k: float) -> float:
    """Largest ``s`` a grid of spacing ``delta_k`` resolves: ``pi / (4 delta_k)``."""
    return np.pi / (4 * delta_k)


def _guard(delta_k: float, s_max: float):
    if delta_k <= 0:
        raise PreconditionError("delta_k must be positive")
    if s_max > aliasing_limit(delta_k):
        raise PreconditionError(
            f"delta_k={delta_k} too coarse for s_max={s_max}: "
            f"largest admissible s_max is {aliasing_limit(delta_k):.6g}"
        )


def _trapezoid_cumulative(s, p):
    c = np.zeros_like(p)
    c[1:] = np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(s))
    return c


def delay_density_fourier(s_values, S, env: Envelope, delta_k: float) -> DelayDistribution:
    """Direct quadrature of the Fourier integral at each requested ``s``.

    ``S`` is a vectorised callable or an array sampled on
    ``env.k_grid(delta_k)``. The cumulative is the trapezoid rule over the
    given (ascending) ``s`` values starting from zero at ``s_values[0]``.
    """
    s = np.asarray(s_values, dtype=float)
    if s.ndim != 1 or (s.size > 1 and np.any(np.diff(s) <= 0)):
        raise PreconditionError("s_values must be a strictly ascending 1-D array")
    _guard(delta_k, float(np.max(np.abs(s))) if s.size else 0.0)
    k, f = _sample(S, env, delta_k)
    ka = k[0]
    j = np.arange(k.size) * delta_k
    out = np.empty(s.size)
    for i, sv in enumerate(s):
        amp = np.dot(f, np.exp(-1j * j * sv)) * np.exp(-1j * ka * sv)
        out[i] = abs(amp) ** 2 / (2 * np.pi)
    return DelayDistribution(s, out, _trapezoid_cumulative(s, out), "fourier")


def delay_density_fft(
    S,
    env: Envelope,
    delta_k: float,
    s_max: float,
    ds: float | None = None,
    s_min: float | None = None,
) -> DelayDistribution:
    """``P(s)`` on a uniform grid up to ``s_max`` using interleaved FFTs.

    One FFT of length ``M >= N`` gives ``P`` at spacing ``2 pi / (M delta_k)``;
    ``p`` FFTs of frequency-shifted data interleave to spacing
    ``ds <= 1/(4 sigma)`` by default. The grid starts slightly below zero
    (``s_min``, default ``-10/sigma``) so that ``C`` includes the whole
    prompt peak; ``C`` is a left Riemann sum, which is exact over a full
    period of the band-limited ``P``.
    """
    _guard(delta_k, s_max)
    if ds is None:
        ds = 1 / (4 * env.sigma)
    if s_min is None:
        s_min = -10 / env.sigma
    k, f = _sample(S, env, delta_k)
    n = k.size
    del k
    m_len = sfft.next_fast_len(n)
    base = 2 * np.pi / (m_len * delta_k)
    p = max(1, int(np.ceil(base / ds - 1e-12)))
    step = base / p
    m_lo = int(np.floor(s_min / base))
    m_hi = int(np.ceil(s_max / base))
    m = np.arange(m_lo, m_hi + 1)
    workers = worker_count()
    grid = np.empty((m.size, p))
    dens = np.empty((m.size, p))
    j = np.arange(n)
    for r in range(p):
        shift = r * step
        g = f if r == 0 else f * np.exp(-1j * delta_k * shift * j)
        F = sfft.fft(g, m_len, workers=workers)[m % m_len]
        del g
        # the global phase exp(-i k_a s) drops out of |F|^2
        grid[:, r] = m * base + shift
        dens[:, r] = np.abs(F) ** 2 / (2 * np.pi)
    s = grid.ravel()
    P = dens.ravel()
    keep = (s >= s_min) & (s <= s_max)
    s, P = s[keep], P[keep]
    C = np.cumsum(P) * step
    info = {"delta_k": delta_k, "n_k": n, "fft_length": m_len, "shifts": p, "ds": step}
    return DelayDistribution(s, P, C, "fourier", info)


def fourier_delay_distribution(
    g_or_S,
    k0: float,
    sigma: float,
    delta_k: float = 1e-4,
    s_max: float = 5.0,
    ds: float | None = None,
) -> DelayDistribution:
    """Convenience wrapper: envelope + ``S(k)`` + :func:`delay_density_fft`."""
    from .graph import MetricGraph
    from .scattering import smatrix_function

    env = gaussian_envelope(k0, sigma)
    S = smatrix_function(g_or_S) if isinstance(g_or_S, MetricGraph) else g_or_S
    return delay_density_fft(S, env, delta_k, s_max, ds)


def _pairs(families, env: Envelope, cutoff: float):
    amps = np.array([complex(f.amplitude) for f in families])
    lens = np.array([f.length for f in families])
    order = np.argsort(lens)
    amps, lens = amps[order], lens[order]
    centres, weights = [], []
    hi = np.searchsorted(lens, lens + cutoff, side="right")
    for i in range(lens.size):
        js = np.arange(i, hi[i])
        dl = lens[i] - lens[js]
        w = np.real(amps[i] * np.conj(amps[js]) * np.exp(1j * env.k0 * dl))
        w *= np.exp(-(dl**2) * env.sigma**2 / 8)
        w[1:] *= 2  # (i, j) and (j, i) are conjugate
        centres.append(0.5 * (lens[i] + lens[js]))
        weights.append(w)
    c = np.concatenate(centres)
    w = np.concatenate(weights)
    o = np.argsort(c)
    return c[o], w[o]


def delay_density_families(
    families,
    env: Envelope,
    s_values,
    tail_tolerance: float = 0.05,
    reflection: float = 0.0,
    valid_until: float | None = None,
) -> DelayDistribution:
    """Smoothed double sum over path families.

    Each pair ``(alpha, beta)`` contributes
    ``A_a conj(A_b) e^{i k0 (l_a - l_b)} e^{-(l_a - l_b)^2 sigma^2 / 8}``
    times a normalised Gaussian of width ``1/sigma`` in ``s`` centred at
    ``(l_a + l_b)/2``. Pairs with ``|l_a - l_b| > 20/sigma`` are dropped
    (their weight is below ``e^{-50}``).

    The missing probability ``1 - |rho|^2 - sum p_q`` must not exceed
    ``tail_tolerance``. If ``valid_until`` (the length beyond which families
    may be missing) is given, ``s`` must stay ``6/sigma`` below it.
    """
    s = np.asarray(s_values, dtype=float)
    if not families:
        raise PreconditionError("no families given")
    missing = 1.0 - reflection - float(sum(float(f.probability) for f in families))
    if missing > tail_tolerance:
        raise PreconditionError(
            f"families miss probability {missing:.3g} > tolerance {tail_tolerance}"
        )
    if valid_until is not None and s.size and s.max() > valid_until - 6 / env.sigma:
        raise PreconditionError(
            f"s up to {s.max()} but families are complete only below {valid_until}"
        )
    sig = env.sigma
    centres, weights = _pairs(families, env, 20 / sig)
    reach = 10 / sig
    norm = sig / np.sqrt(2 * np.pi)
    out = np.zeros(s.size)
    chunk = 512
    for a in range(0, s.size, chunk):
        sv = s[a : a + chunk]
        lo = np.searchsorted(centres, sv.min() - reach)
        hi = np.searchsorted(centres, sv.max() + reach)
        c, w = centres[lo:hi], weights[lo:hi]
        prof = np.exp(-0.5 * sig**2 * (sv[:, None] - c[None, :]) ** 2)
        out[a : a + chunk] = norm * (prof @ w)
    info = {"families": len(families), "missing_probability": missing}
    return DelayDistribution(s, out, _trapezoid_cumulative(s, out), "family", info)
