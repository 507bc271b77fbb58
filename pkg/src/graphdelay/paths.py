"""Isometric path families, topological delay distributions and metric bounds.

Paths from lead ``h_in`` to lead ``h`` are sequences of bonds ``d_0 .. d_n``
with ``n`` vertex crossings. Their amplitudes (without the ``e^{ikl}``
phase) multiply the lead coupling on entry, the vertex matrix entries at each
crossing and the lead coupling on exit. Paths sharing the undirected
traversal-count vector ``q`` have the same length ``l_q = q . L`` and form a
family whose amplitudes interfere.

Families are built by a forward recursion over states ``(last bond, q)``:
coherent amplitude sums, incoherent weights ``sum |A|^2`` and path counts are
all linear in the paths, so they can be carried per state without listing
paths one by one. :func:`enumerate_paths` lists individual paths for small
cases and is kept as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor
from typing import Iterator

import numpy as np

from .errors import BudgetExceeded, PreconditionError
from .exact import Surd, abs2
from .graph import MetricGraph

PATH_BUDGET = 10**7


@dataclass(frozen=True)
class PathFamily:
    """All paths sharing the traversal code ``q``.

    ``amplitude`` is the coherent sum of the path amplitudes and
    ``diagonal`` the incoherent sum of their squared moduli. Both are exact
    (:class:`~graphdelay.exact.Surd` or ``Fraction``) when the graph's vertex
    matrices are exact.
    """

    code: tuple
    amplitude: object
    diagonal: object
    path_count: int
    length: float

    @property
    def n(self) -> int:
        # vertex crossings; sum(q) = n + 1
        return sum(self.code) - 1

    @property
    def traversals(self) -> int:
        return sum(self.code)

    @property
    def probability(self):
        return _real(abs2(self.amplitude))

    @property
    def nondiagonal(self):
        return self.probability - self.diagonal


def _real(x):
    """Collapse exact real values to Fraction, floats to float."""
    if isinstance(x, Surd):
        return x.to_fraction() if x.is_rational else float(x)
    if isinstance(x, complex):
        return x.real
    return x


def _couplings(g: MetricGraph, h: int, h_in: int):
    """Entry, transition and exit weights, exact when possible."""
    if g.exact is not None:
        ex = g.exact
        entry = {d: v for (d, hh), v in ex["lead_in"].items() if hh == h_in and v != 0}
        exit_ = {d: v for (hh, d), v in ex["lead_out"].items() if hh == h and v != 0}
        succ = {d: [] for d in range(g.D)}
        for (d, dp), v in ex["sigma"].items():
            succ[dp].append((d, v))
    else:
        entry = {d: complex(v) for d, v in enumerate(g.lead_in[:, h_in]) if v != 0}
        exit_ = {d: complex(v) for d, v in enumerate(g.lead_out[h]) if v != 0}
        succ = {d: [] for d in range(g.D)}
        for d, dp in zip(*np.nonzero(g.bond_scattering)):
            succ[int(dp)].append((int(d), complex(g.bond_scattering[d, dp])))
    for d in succ:
        succ[d].sort()
    return entry, succ, exit_


def _check_leads(g: MetricGraph, h: int, h_in: int):
    if not g.is_open:
        raise PreconditionError("path enumeration needs an open graph")
    for x in (h, h_in):
        if not 0 <= x < g.H:
            raise PreconditionError(f"lead index {x} out of range (H={g.H})")


def count_paths(g: MetricGraph, h: int, h_in: int, n_max: int) -> int:
    """Number of nonzero-amplitude paths with at most ``n_max`` crossings."""
    _check_leads(g, h, h_in)
    entry, succ, exit_ = _couplings(g, h, h_in)
    cnt = {d: 1 for d in entry}
    total = 0
    for n in range(n_max + 1):
        total += sum(c for d, c in cnt.items() if d in exit_)
        if n == n_max:
            break
        nxt: dict = {}
        for dp, c in cnt.items():
            for d, _ in succ[dp]:
                nxt[d] = nxt.get(d, 0) + c
        cnt = nxt
    return total


def _family_recursion(
    g: MetricGraph,
    h: int,
    h_in: int,
    n_max: int | None = None,
    length_max: float | None = None,
    coherent: bool = True,
    budget: int = PATH_BUDGET,
) -> dict:
    """Map ``q -> [amplitude, diagonal, count]`` over completed paths.

    Growth stops after ``n_max`` crossings or once the path length exceeds
    ``length_max``; at least one of the two must be given. ``budget`` caps
    the number of ``(bond, q)`` states visited.
    """
    if n_max is None and length_max is None:
        raise PreconditionError("need n_max or length_max")
    entry, succ, exit_ = _couplings(g, h, h_in)
    E = g.E
    L = g.lengths
    zero = Surd(0) if g.exact is not None else 0j

    def length(q):
        return float(np.dot(q, L))

    states: dict = {}
    for d, v in entry.items():
        q = [0] * E
        q[d % E] = 1
        q = tuple(q)
        if length_max is not None and length(q) > length_max:
            continue
        states[(d, q)] = [v if coherent else zero, abs2(v), 1]
    families: dict = {}
    visited = 0
    n = 0
    while states:
        visited += len(states)
        if visited > budget:
            raise BudgetExceeded(f"family recursion visited more than {budget} states")
        for (d, q), (a, w, c) in states.items():
            if d in exit_:
                v = exit_[d]
                fam = families.setdefault(q, [zero, zero, 0])
                if coherent:
                    fam[0] = fam[0] + a * v
                fam[1] = fam[1] + w * abs2(v)
                fam[2] += c
        if n_max is not None and n >= n_max:
            break
        nxt: dict = {}
        for (dp, q), (a, w, c) in states.items():
            for d, v in succ[dp]:
                e = d % E
                q2 = q[:e] + (q[e] + 1,) + q[e + 1 :]
                if length_max is not None and length(q2) > length_max:
                    continue
                st = nxt.get((d, q2))
                if st is None:
                    st = nxt[(d, q2)] = [zero, zero, 0]
                if coherent:
                    st[0] = st[0] + a * v
                st[1] = st[1] + w * abs2(v)
                st[2] += c
        states = nxt
        n += 1
    return families


def enumerate_families(
    g: MetricGraph, h: int = 0, h_in: int = 0, n_max: int = 10, budget: int = PATH_BUDGET
) -> list[PathFamily]:
    """Path families from lead ``h_in`` to lead ``h`` with at most ``n_max`` crossings.

    The direct reflection at the lead vertex is not a path and is excluded.
    Raises :class:`BudgetExceeded` when more than ``budget`` paths would be
    summed. Families are sorted by length, then code.
    """
    _check_leads(g, h, h_in)
    if n_max < 0:
        raise PreconditionError("n_max must be non-negative")
    total = count_paths(g, h, h_in, n_max)
    if total > budget:
        raise BudgetExceeded(f"{total} paths with n <= {n_max} exceed the budget of {budget}")
    raw = _family_recursion(g, h, h_in, n_max=n_max, budget=budget)
    out = [
        PathFamily(q, a, _real(w), c, float(np.dot(q, g.lengths))) for q, (a, w, c) in raw.items()
    ]
    out.sort(key=lambda f: (f.length, f.code))
    return out


def enumerate_paths(
    g: MetricGraph, h: int = 0, h_in: int = 0, n_max: int = 6
) -> Iterator[tuple[tuple, object]]:
    """Yield ``(bonds, amplitude)`` for every individual path, depth first."""
    _check_leads(g, h, h_in)
    if count_paths(g, h, h_in, n_max) > PATH_BUDGET:
        raise BudgetExceeded("too many paths to list individually")
    entry, succ, exit_ = _couplings(g, h, h_in)

    def walk(path, amp):
        d = path[-1]
        if d in exit_:
            yield tuple(path), amp * exit_[d]
        if len(path) <= n_max:
            for d2, v in succ[d]:
                path.append(d2)
                yield from walk(path, v * amp)
                path.pop()

    for d0, v in sorted(entry.items()):
        yield from walk([d0], v)


def family_probabilities(families) -> dict:
    """``q -> p_q = |sum of amplitudes|^2``."""
    return {f.code: f.probability for f in families}


def diagonal_split(families) -> dict:
    """``q -> (diagonal, nondiagonal)`` weights; the two add up to ``p_q``."""
    return {f.code: (f.diagonal, f.nondiagonal) for f in families}


@dataclass(frozen=True)
class TopologicalDistribution:
    """Probabilities ``p_t`` of topological delay ``t = 0 .. t_max``.

    ``unit`` is ``"excursion"`` (T-junction convention, length ``2 t ell``)
    or ``"traversal"`` (edge traversals ``n + 1``, length ``t ell``).
    """

    p: tuple
    unit: str = "excursion"

    @property
    def t_max(self) -> int:
        return len(self.p) - 1

    @property
    def cumulative(self) -> tuple:
        acc, out = 0, []
        for x in self.p:
            acc = acc + x
            out.append(acc)
        return tuple(out)

    @property
    def step_factor(self) -> int:
        return 2 if self.unit == "excursion" else 1


def topological_distribution(
    g: MetricGraph, h: int = 0, h_in: int = 0, t_max: int = 10, unit: str = "traversal"
) -> TopologicalDistribution:
    """Group family probabilities by topological time.

    For ``unit="excursion"`` every family must have an even number of
    traversals (true when the lead vertex is the only exit and each
    excursion returns to it).
    """
    if unit not in ("traversal", "excursion"):
        raise PreconditionError("unit must be 'traversal' or 'excursion'")
    factor = 2 if unit == "excursion" else 1
    fams = enumerate_families(g, h, h_in, n_max=factor * t_max - 1)
    zero = Fraction(0) if g.exact is not None else 0.0
    p = [zero] * (t_max + 1)
    for f in fams:
        if f.traversals % factor:
            raise PreconditionError("odd traversal count; use unit='traversal'")
        p[f.traversals // factor] += f.probability
    return TopologicalDistribution(tuple(p), unit)


def topological_cumulative(dist: TopologicalDistribution, s: float, ell: float):
    """``C(s; ell)``: families with topological time ``t`` arrive at ``factor * t * ell``.

    A family of length exactly ``s`` counts as arrived.
    """
    if ell <= 0:
        raise PreconditionError("ell must be positive")
    if s < 0:
        return 0 * dist.p[0]
    t = floor(Fraction(s) / (dist.step_factor * Fraction(ell)))
    if t > dist.t_max:
        raise PreconditionError(
            f"s={s} needs t up to {t} but the distribution stops at t_max={dist.t_max}"
        )
    return dist.cumulative[t]


def metric_bounds(dist: TopologicalDistribution, s: float, L_min: float, L_max: float):
    """``(C(s; L_max), C(s; L_min))``, a lower and an upper bound on the metric ``C(s)``."""
    if L_min > L_max:
        raise PreconditionError("L_min must not exceed L_max")
    return topological_cumulative(dist, s, L_max), topological_cumulative(dist, s, L_min)


def metric_cumulative(families, s: float):
    """Exact ``C(s) = sum p_q Theta(s - l_q)`` over the given families."""
    return sum((f.probability for f in families if f.length <= s), 0 * families[0].probability)


def metric_cumulative_valid_until(families, L_min: float) -> float:
    """Largest ``s`` for which :func:`metric_cumulative` over ``families`` is complete.

    Families were enumerated up to some traversal count ``T``; any missing
    family has at least ``T + 1`` traversals and so length ``>= (T+1) L_min``.
    """
    if not families:
        return 0.0
    return (max(f.traversals for f in families) + 1) * L_min


# T-junction closed forms ----------------------------------------------------


def tjunction_pt(t: int) -> Fraction:
    """Probability of ``t`` excursions, ``(3/4) 4^{2-t} C(2t-4, t-2) / (t(t-1))`` for ``t >= 2``."""
    if t < 0:
        raise PreconditionError("t must be non-negative")
    if t == 0:
        return Fraction(0)
    if t == 1:
        return Fraction(1, 2)
    return Fraction(3, 4) * Fraction(comb(2 * t - 4, t - 2), 4 ** (t - 2) * t * (t - 1))


def tjunction_pt_sum(t: int) -> Fraction:
    """``p_t`` as the explicit sum of squared family coefficients with ``t1 + t2 = t``."""
    from .scattering import tjunction_family_coefficient

    if t == 0:
        return Fraction(0)
    return sum((tjunction_family_coefficient(a, t - a) ** 2 for a in range(t + 1)), Fraction(0))


def tjunction_ct(t: int) -> Fraction:
    """Cumulative ``c_t = 1 - 2 C(2t-2, t-1) / (4^t t)``; ``c_0 = 0``."""
    if t < 0:
        raise PreconditionError("t must be non-negative")
    if t == 0:
        return Fraction(0)
    return 1 - Fraction(2 * comb(2 * t - 2, t - 1), 4**t * t)


def tjunction_topological(t_max: int) -> TopologicalDistribution:
    """Closed-form T-junction distribution in excursion units."""
    return TopologicalDistribution(tuple(tjunction_pt(t) for t in range(t_max + 1)), "excursion")


def tjunction_families(t_max: int, L1: float, L2: float) -> list[PathFamily]:
    """Families ``(t1, t2)`` with ``1 <= t1 + t2 <= t_max`` from the closed-form coefficients.

    The code counts edge traversals, so ``q = (2 t1, 2 t2)``. Diagonal
    weights use the classical count ``C(t, t1) 4^{-t}``.
    """
    from .scattering import tjunction_family_coefficient

    out = []
    for t in range(1, t_max + 1):
        for a in range(t + 1):
            c = tjunction_family_coefficient(a, t - a)
            out.append(
                PathFamily(
                    (2 * a, 2 * (t - a)),
                    c,
                    Fraction(comb(t, a), 4**t),
                    comb(t, a),
                    2 * (a * L1 + (t - a) * L2),
                )
            )
    out.sort(key=lambda f: (f.length, f.code))
    return out


def tjunction_pt_asymptotic(t: float) -> float:
    """Large-``t`` form ``(3/4) t^{-5/2} / sqrt(pi)``."""
    return 0.75 * t**-2.5 / np.sqrt(np.pi)


def tjunction_tail_asymptotic(t: float) -> float:
    """Large-``t`` form of ``1 - c_t``: ``t^{-3/2} / sqrt(4 pi)``."""
    return t**-1.5 / np.sqrt(4 * np.pi)
