"""Command-line entry point: ``graphdelay <subcommand> [options]``.

Every subcommand writes a CSV table (header row first, floats with 12
significant digits) to ``--out`` or standard output. Exit status: 0 on
success, 2 for a malformed graph spec, 3 for arguments outside an
operation's domain, 4 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classical import (
    classical_asymptote,
    classical_cumulative_exact,
    classical_delay_mc,
    decay_law,
)
from .errors import GraphSpecError, NumericalError, PreconditionError
from .evolution import find_spectrum, is_irreducible, secular_value
from .graph import MetricGraph, load_graph
from .paths import (
    diagonal_split,
    enumerate_families,
    family_probabilities,
    metric_bounds,
    metric_cumulative_valid_until,
    tjunction_ct,
    tjunction_families,
    tjunction_topological,
    topological_distribution,
)
from .resonances import (
    find_poles,
    find_poles_graph,
    longtime_cumulative_integral,
    longtime_cumulative_resonances,
    near_degenerate_pairs,
    pole_from_pair,
    refine_pole,
    resonance_density,
    width_histogram,
)
from .scattering import (
    smatrix_function,
    smatrix_pathsum,
    smatrix_resolvent,
    tjunction_lengths,
    tjunction_smatrix,
)
from .wavepacket import (
    delay_density_families,
    delay_density_fft,
    delay_density_fourier,
    gaussian_envelope,
)
EXIT_SPEC, EXIT_PRECONDITION, EXIT_NUMERICAL = 2, 3, 4

RECIPES = {
    "fig3": (
        "graphdelay delay --spec tjunction --k0 1000 --sigma 100 --dk 1e-4 --smax 4",
        "tjunction",
        "about 5 s",
        "delay density with the first peaks at 2 L1 and 2 L2",
    ),
    "fig4": (
        "graphdelay tail --spec tjunction --k0 1000 --sigma 200 --fourier",
        "tjunction",
        "about 5 s",
        "quantum 1 - C(s): resonance sum, integral law, Fourier route and bounds",
    ),
    "fig5": (
        "graphdelay classical --spec tjunction --samples 1000000 --seed 7 --smax 20",
        "tjunction",
        "about 1 s",
        "classical C(s): exact, Monte Carlo and exponential asymptote",
    ),
}


@dataclass
class RunConfig:
    """Validated options for one subcommand run."""

    command: str
    spec: str = "tjunction"
    out: str | None = None
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        x = float(x)
    if x is None:
        return ""
    return format(float(x), ".12g")


def _write(rows, header, out):
    if out is None:
        _emit(sys.stdout, header, rows)
    else:
        with open(out, "w", newline="") as fh:
            _emit(fh, header, rows)


def _emit(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])


def _positive(name, value):
    if value is None or not value > 0:
        raise PreconditionError(f"--{name} must be positive (got {value})")


def _tj(g: MetricGraph, what: str):
    lengths = tjunction_lengths(g)
    if lengths is None:
        raise PreconditionError(f"{what} is only available for the T-junction model")
    L1, L2 = lengths
    if not L1 < L2:
        raise PreconditionError(f"{what} needs L1 < L2 (got {L1}, {L2})")
    return L1, L2


def _report_ergodicity(g: MetricGraph):
    if not is_irreducible(g):
        print("warning: the bond map is reducible; classical mixing may fail", file=sys.stderr)


# subcommands ----------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, g: MetricGraph):
    _report_ergodicity(g)
    roots = find_spectrum(g, cfg.kmin, cfg.kmax, step=cfg.step)
    return ["k_n", "abs_secular"], [[k, abs(secular_value(g, k))] for k in roots]


def cmd_smatrix(cfg: RunConfig, g: MetricGraph):
    if cfg.nk < 1:
        raise PreconditionError("--nk must be at least 1")
    ks = np.linspace(cfg.kmin, cfg.kmax, cfg.nk)
    rows = []
    closed = tjunction_lengths(g)
    for k in ks:
        if cfg.method == "closed":
            if closed is None:
                raise PreconditionError("--method closed needs the T-junction model")
            s = np.array([[tjunction_smatrix(*closed, k)]])
        elif cfg.method == "pathsum":
            s = smatrix_pathsum(g, k, cfg.nmax).matrix
        else:
            s = smatrix_resolvent(g, k).matrix
        for h in range(g.H):
            for hi in range(g.H):
                rows.append([k, h, hi, s[h, hi].real, s[h, hi].imag])
    return ["k", "h", "h_in", "re_S", "im_S"], rows


def cmd_delay(cfg: RunConfig, g: MetricGraph):
    _positive("dk", cfg.dk)
    _positive("smax", cfg.smax)
    env = gaussian_envelope(cfg.k0, cfg.sigma)
    ds = cfg.sstep or 1 / (4 * env.sigma)
    S = smatrix_function(g, cfg.h, cfg.h_in)
    if cfg.method == "fft":
        d = delay_density_fft(S, env, cfg.dk, cfg.smax, ds)
        keep = d.s >= 0
        s, P, C = d.s[keep], d.density[keep], d.cumulative[keep]
    else:
        s = np.arange(0.0, cfg.smax + 0.5 * ds, ds)
        if cfg.method == "direct":
            d = delay_density_fourier(s, S, env, cfg.dk)
        else:
            d = _family_delay(g, cfg, env, s)
        P, C = d.density, d.cumulative
    return ["s", "P", "C"], list(zip(s, P, C))


def _family_delay(g, cfg, env, s):
    lengths = tjunction_lengths(g)
    if lengths is not None:
        t_max = int(math.ceil((cfg.smax + 10 / env.sigma) / (2 * min(lengths)))) + 1
        fams = tjunction_families(t_max, *lengths)
        valid = 2 * (t_max + 1) * min(lengths)
    else:
        L_min = float(g.lengths.min())
        n_max = int(math.ceil((cfg.smax + 10 / env.sigma) / L_min))
        fams = enumerate_families(g, cfg.h, cfg.h_in, n_max=n_max)
        valid = metric_cumulative_valid_until(fams, L_min)
    refl = abs(g.lead_reflection[cfg.h_in]) ** 2 if cfg.h == cfg.h_in else 0.0
    return delay_density_families(fams, env, s, tail_tolerance=1.0, reflection=refl, valid_until=valid)


def _topological(g: MetricGraph, cfg: RunConfig, t_max: int):
    if tjunction_lengths(g) is not None and not cfg.enumerate:
        return tjunction_topological(t_max)
    return topological_distribution(g, cfg.h, cfg.h_in, t_max, unit=cfg.unit)


def cmd_topological(cfg: RunConfig, g: MetricGraph):
    if cfg.tmax < 0:
        raise PreconditionError("--tmax must be non-negative")
    dist = _topological(g, cfg, cfg.tmax)
    header = ["t", "p_t", "c_t"]
    rows = [[t, p, c] for t, (p, c) in enumerate(zip(dist.p, dist.cumulative))]
    if cfg.split:
        factor = dist.step_factor
        fams = enumerate_families(g, cfg.h, cfg.h_in, n_max=factor * cfg.tmax - 1)
        diag = [0.0] * (cfg.tmax + 1)
        nond = [0.0] * (cfg.tmax + 1)
        for f in fams:
            dw, nw = diagonal_split([f])[f.code]
            diag[f.traversals // factor] += float(dw)
            nond[f.traversals // factor] += float(nw)
        header += ["diagonal_t", "nondiagonal_t"]
        rows = [r + [diag[i], nond[i]] for i, r in enumerate(rows)]
    return header, rows


def _s_grid(cfg, lo=0.0):
    _positive("smax", cfg.smax)
    _positive("sstep", cfg.sstep)
    n = int(round((cfg.smax - lo) / cfg.sstep))
    return np.minimum(lo + cfg.sstep * np.arange(n + 1), cfg.smax)


def cmd_bounds(cfg: RunConfig, g: MetricGraph):
    s_grid = _s_grid(cfg)
    L_min, L_max = float(g.lengths.min()), float(g.lengths.max())
    lengths = tjunction_lengths(g)
    if lengths is not None:
        t_max = int(cfg.smax // (2 * L_min)) + 1
        dist = _topological(g, cfg, t_max)
        fams = tjunction_families(t_max, *lengths)
    else:
        t_max = int(cfg.smax // L_min) + 1
        dist = topological_distribution(g, cfg.h, cfg.h_in, t_max, unit="traversal")
        fams = enumerate_families(g, cfg.h, cfg.h_in, n_max=t_max - 1)
    lens = np.array([f.length for f in fams])
    order = np.argsort(lens)
    probs = family_probabilities(fams)
    csum = np.concatenate([[0.0], np.cumsum([float(probs[fams[i].code]) for i in order])])
    exact = csum[np.searchsorted(lens[order], s_grid, side="right")]
    rows = []
    for s, e in zip(s_grid, exact):
        lo, hi = metric_bounds(dist, s, L_min, L_max)
        rows.append([s, lo, e, hi])
    return ["s", "lower", "exact", "upper"], rows


def cmd_classical(cfg: RunConfig, g: MetricGraph):
    _report_ergodicity(g)
    s_grid = _s_grid(cfg)
    exact = classical_cumulative_exact(g, cfg.h, cfg.h_in, cfg.smax, s_grid).cumulative
    law = decay_law(g, cfg.h, cfg.h_in)
    if cfg.samples > 0:
        mc = classical_delay_mc(g, cfg.h_in, cfg.samples, cfg.seed)
        emp = mc.empirical_cdf(s_grid, cfg.h)
    else:
        emp = [None] * s_grid.size
    asym = classical_asymptote(law, s_grid)
    rows = list(zip(s_grid, exact, emp, asym))
    return ["s", "C_exact", "C_mc", "C_asymptote"], rows


def cmd_resonances(cfg: RunConfig, g: MetricGraph):
    if cfg.kmax <= cfg.kmin:
        return ["kappa", "gamma", "k1", "k2", "refined"], []
    lengths = tjunction_lengths(g)
    if lengths is None:
        poles = find_poles_graph(g, cfg.kmin, cfg.kmax)
    elif cfg.method == "pairs":
        L1, L2 = _tj(g, "pair seeding")
        poles = []
        for pr in near_degenerate_pairs(L1, L2, (cfg.kmin, cfg.kmax)):
            if pr.commensurate:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                poles.append(refine_pole((L1, L2), pole_from_pair(pr.k1, pr.k2, L1, L2)))
    else:
        poles = find_poles(*lengths, cfg.kmin, cfg.kmax)
    if cfg.histogram:
        L = float(g.lengths.sum())
        edges, counts, predicted = width_histogram(poles, L, cfg.kmax - cfg.kmin)
        centre = np.sqrt(edges[1:] * edges[:-1])
        rho = resonance_density(centre, L)
        rows = list(zip(edges[:-1], edges[1:], counts, predicted, rho))
        return ["gamma_lo", "gamma_hi", "count", "predicted", "rho_centre"], rows
    rows = [[p.kappa, p.gamma, p.k1, p.k2, p.refined] for p in poles]
    return ["kappa", "gamma", "k1", "k2", "refined"], rows


def cmd_tail(cfg: RunConfig, g: MetricGraph):
    L1, L2 = _tj(g, "the resonance tail")
    env = gaussian_envelope(cfg.k0, cfg.sigma)
    _positive("smin", cfg.smin)
    if cfg.smax <= cfg.smin:
        raise PreconditionError("--smax must exceed --smin")
    s = np.geomspace(cfg.smin, cfg.smax, cfg.points)
    k_range = (max(0.0, env.k0 - 4 * env.sigma), env.k0 + 4 * env.sigma)
    poles = find_poles(L1, L2, *k_range)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c_res = longtime_cumulative_resonances(poles, env, s, k_range)
    c_int = longtime_cumulative_integral(L1 + L2, s)
    lower = [tjunction_ct(int(x // (2 * L2))) for x in s]
    upper = [tjunction_ct(int(x // (2 * L1))) for x in s]
    header = ["s", "C_resonance_sum", "C_integral", "C_lower", "C_upper"]
    cols = [s, c_res, c_int, lower, upper]
    if cfg.fourier:
        d = delay_density_fft(lambda k: tjunction_smatrix(L1, L2, k), env, cfg.dk, cfg.smax)
        cols.append(np.interp(s, d.s, d.cumulative))
        header.append("C_fourier")
    return header, list(zip(*cols))


def list_recipes() -> str:
    lines = []
    for name, (cmd, spec, runtime, what) in RECIPES.items():
        lines.append(f"{name}: {cmd}")
        lines.append(f"    spec: {spec}; expected runtime: {runtime}; {what}")
    return "\n".join(lines)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "smatrix": cmd_smatrix,
    "delay": cmd_delay,
    "topological": cmd_topological,
    "bounds": cmd_bounds,
    "classical": cmd_classical,
    "resonances": cmd_resonances,
    "tail": cmd_tail,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="graphdelay", description="Delay-time distributions on quantum graphs, written as CSV."
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--spec", default="tjunction", help="bundled name or JSON file")
        sp.add_argument("--out", default=None, help="output CSV path (default stdout)")
        return sp

    sp = add("spectrum", "eigen-wavenumbers of a compact graph")
    sp.add_argument("--kmin", type=float, default=0.0)
    sp.add_argument("--kmax", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=None)

    sp = add("smatrix", "scattering matrix on a k grid")
    sp.add_argument("--kmin", type=float, default=0.1)
    sp.add_argument("--kmax", type=float, default=10.0)
    sp.add_argument("--nk", type=int, default=100)
    sp.add_argument("--method", choices=["resolvent", "pathsum", "closed"], default="resolvent")
    sp.add_argument("--nmax", type=int, default=40, help="path-sum truncation")

    for name, help_ in [("delay", "wave-packet delay density P(s) and C(s)")]:
        sp = add(name, help_)
        sp.add_argument("--k0", type=float, default=1000.0)
        sp.add_argument("--sigma", type=float, default=100.0)
        sp.add_argument("--dk", type=float, default=1e-4)
        sp.add_argument("--smax", type=float, default=5.0)
        sp.add_argument(
            "--sstep", type=float, default=None, help="largest s step (default 1/(4 sigma))"
        )
        sp.add_argument("--method", choices=["fft", "direct", "families"], default="fft")
        sp.add_argument("--h", type=int, default=0)
        sp.add_argument("--h-in", dest="h_in", type=int, default=0)

    sp = add("topological", "topological delay distribution p_t, c_t")
    sp.add_argument("--tmax", type=int, default=20)
    sp.add_argument("--unit", choices=["traversal", "excursion"], default="traversal")
    sp.add_argument("--enumerate", action="store_true", help="use path enumeration")
    sp.add_argument("--split", action="store_true", help="add diagonal/non-diagonal parts")
    sp.add_argument("--h", type=int, default=0)
    sp.add_argument("--h-in", dest="h_in", type=int, default=0)

    sp = add("bounds", "topological bounds on the metric C(s)")
    sp.add_argument("--smax", type=float, default=20.0)
    sp.add_argument("--sstep", type=float, default=0.05)
    sp.add_argument("--h", type=int, default=0)
    sp.add_argument("--h-in", dest="h_in", type=int, default=0)
    sp.set_defaults(enumerate=False, unit="excursion")

    sp = add("classical", "classical delay distribution")
    sp.add_argument("--smax", type=float, default=20.0)
    sp.add_argument("--sstep", type=float, default=0.01)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--h", type=int, default=0)
    sp.add_argument("--h-in", dest="h_in", type=int, default=0)

    sp = add("resonances", "resonance poles kappa - i gamma")
    sp.add_argument("--kmin", type=float, default=0.0)
    sp.add_argument("--kmax", type=float, default=200.0)
    sp.add_argument("--method", choices=["census", "pairs"], default="census")
    sp.add_argument("--histogram", action="store_true", help="width histogram per decade")

    sp = add("tail", "long-time quantum tail of C(s)")
    sp.add_argument("--k0", type=float, default=1000.0)
    sp.add_argument("--sigma", type=float, default=200.0)
    sp.add_argument("--smin", type=float, default=1.0)
    sp.add_argument("--smax", type=float, default=1000.0)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--fourier", action="store_true", help="add the Fourier-route column")
    sp.add_argument("--dk", type=float, default=2.5e-4)

    sub.add_parser("recipes", help="print figure-reproduction command lines")
    return p


def parse_config(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    spec = ns.pop("spec", "tjunction")
    out = ns.pop("out", None)
    return RunConfig(command, spec, out, ns)


def run(cfg: RunConfig) -> int:
    if cfg.command == "recipes":
        print(list_recipes())
        return 0
    g = load_graph(cfg.spec)
    header, rows = COMMANDS[cfg.command](cfg, g)
    _write(rows, header, cfg.out)
    return 0


def main(argv=None) -> int:
    cfg = parse_config(argv)
    try:
        return run(cfg)
    except GraphSpecError as exc:
        print(f"graph spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (PreconditionError, ValueError) as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        # output piped into e.g. head; stop quietly
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
