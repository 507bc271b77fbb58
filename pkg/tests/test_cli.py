import csv
import io
import shlex
import sys

import numpy as np
import pytest

import graphdelay
from graphdelay import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=object)


SMOKE = {
    "spectrum": ["spectrum", "--spec", "tjunction_closed", "--kmax", "10"],
    "smatrix": ["smatrix", "--nk", "5"],
    "smatrix_pathsum": ["smatrix", "--nk", "5", "--method", "pathsum", "--nmax", "30"],
    "smatrix_closed": ["smatrix", "--nk", "5", "--method", "closed"],
    "delay": ["delay", "--k0", "200", "--sigma", "20", "--dk", "1e-3", "--smax", "3"],
    "delay_direct": [
        "delay", "--k0", "200", "--sigma", "20", "--dk", "1e-3", "--smax", "2", "--method", "direct",
    ],
    "delay_families": [
        "delay", "--k0", "200", "--sigma", "20", "--smax", "2", "--method", "families",
    ],
    "topological": ["topological", "--tmax", "6", "--split"],
    "topological_enum": ["topological", "--tmax", "4", "--enumerate", "--unit", "excursion"],
    "bounds": ["bounds", "--smax", "4", "--sstep", "0.5"],
    "bounds_graph": ["bounds", "--spec", "triangle_lead", "--smax", "2", "--sstep", "0.5"],
    "classical": ["classical", "--smax", "5", "--sstep", "0.5", "--samples", "2000", "--seed", "1"],
    "classical_graph": ["classical", "--spec", "triangle_lead", "--smax", "3", "--sstep", "0.5", "--samples", "0"],
    "resonances": ["resonances", "--kmax", "60"],
    "resonances_pairs": ["resonances", "--kmax", "3000", "--method", "pairs"],
    "resonances_hist": ["resonances", "--kmax", "500", "--histogram"],
    "resonances_graph": ["resonances", "--spec", "triangle_lead", "--kmax", "8"],
    "tail": ["tail", "--k0", "300", "--sigma", "50", "--smin", "5", "--smax", "100", "--points", "10"],
    "tail_fourier": [
        "tail", "--k0", "300", "--sigma", "50", "--smin", "5", "--smax", "50", "--points", "5",
        "--fourier", "--dk", "1e-3",
    ],
}

HEADERS = {
    "spectrum": ["k_n", "abs_secular"],
    "smatrix": ["k", "h", "h_in", "re_S", "im_S"],
    "delay": ["s", "P", "C"],
    "topological": ["t", "p_t", "c_t", "diagonal_t", "nondiagonal_t"],
    "bounds": ["s", "lower", "exact", "upper"],
    "classical": ["s", "C_exact", "C_mc", "C_asymptote"],
    "resonances": ["kappa", "gamma", "k1", "k2", "refined"],
    "tail": ["s", "C_resonance_sum", "C_integral", "C_lower", "C_upper"],
}


@pytest.mark.parametrize("name", sorted(SMOKE))
def test_subcommand_smoke(name, capsys):
    code, out, _ = run_cli(SMOKE[name], capsys)
    assert code == 0
    header, rows = table(out)
    if name in HEADERS:
        assert header == HEADERS[name]
    assert len(rows) > 0


def test_twelve_significant_digits(capsys):
    _, out, _ = run_cli(["smatrix", "--nk", "3", "--kmin", "1", "--kmax", "2"], capsys)
    header, rows = table(out)
    assert rows[0][0] == "1"
    mant = rows[1][3].lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    assert len(mant) <= 12
    assert float(rows[1][3]) == pytest.approx(
        graphdelay.smatrix_resolvent(graphdelay.load_graph("tjunction"), 1.5).matrix[0, 0].real, rel=1e-11
    )


def test_spectrum_values(capsys):
    _, out, _ = run_cli(["spectrum", "--spec", "tjunction_closed", "--kmax", "10"], capsys)
    ks, sec = np.array(table(out)[1], dtype=float).T
    g = graphdelay.load_graph("tjunction_closed")
    np.testing.assert_allclose(ks, graphdelay.find_spectrum(g, 0, 10), rtol=1e-11)
    assert np.all(sec < 1e-9)


def test_delay_peaks_and_default_grid(capsys):
    _, out, _ = run_cli(["delay", "--k0", "400", "--sigma", "40", "--dk", "1e-3", "--smax", "2"], capsys)
    s, P, C = np.array(table(out)[1], dtype=float).T
    step = np.diff(s)
    # the interleaved FFT grid is uniform with step at most 1/(4 sigma)
    assert np.allclose(step, step[0], rtol=1e-9) and step[0] <= 1 / 160
    assert np.all(np.diff(C) >= 0)


def test_bounds_bracket(capsys):
    _, out, _ = run_cli(["bounds", "--smax", "6", "--sstep", "0.1"], capsys)
    s, lo, ex, hi = np.array(table(out)[1], dtype=float).T
    assert np.all(lo <= ex + 1e-12) and np.all(ex <= hi + 1e-12)


def test_out_file(tmp_path, capsys):
    path = tmp_path / "r.csv"
    assert cli.main(["resonances", "--kmax", "30", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert path.read_text().startswith("kappa,gamma,k1,k2,refined\n")


def test_byte_identical_repeat(capsys):
    argv = ["classical", "--smax", "4", "--sstep", "0.25", "--samples", "5000", "--seed", "11"]
    first = run_cli(argv, capsys)[1]
    second = run_cli(argv, capsys)[1]
    assert first == second
    other = run_cli(argv[:-1] + ["12"], capsys)[1]
    assert other != first


def test_byte_identical_across_workers(capsys, monkeypatch):
    argv = ["classical", "--smax", "4", "--sstep", "0.25", "--samples", "70000", "--seed", "3"]
    monkeypatch.setenv("GRAPHWAVE_THREADS", "1")
    one = run_cli(argv, capsys)[1]
    monkeypatch.setenv("GRAPHWAVE_THREADS", "4")
    four = run_cli(argv, capsys)[1]
    assert one == four


def test_exit_code_spec_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": 2, "edges": [[0, 5, 1.0]]}')
    code, _, err = run_cli(["spectrum", "--spec", str(bad)], capsys)
    assert code == 2 and "spec" in err
    assert run_cli(["spectrum", "--spec", "no_such_graph"], capsys)[0] == 2


def test_exit_code_precondition(capsys):
    assert run_cli(["delay", "--dk", "-1"], capsys)[0] == 3
    # aliasing guard: delta_k too coarse for s_max
    assert run_cli(["delay", "--dk", "0.1", "--smax", "50"], capsys)[0] == 3
    assert run_cli(["tail", "--spec", "triangle_lead"], capsys)[0] == 3
    assert run_cli(["topological", "--tmax", "-1"], capsys)[0] == 3


def test_exit_code_numerical(capsys):
    # k = 0 is an exact pole of the closed form for the T-junction
    code, _, err = run_cli(["smatrix", "--method", "closed", "--kmin", "0", "--kmax", "0", "--nk", "1"], capsys)
    assert code == 4 and "numerical" in err


def test_reducibility_reported(tmp_path, capsys):
    # a ring: Neumann degree-2 vertices transmit fully, so the two senses never mix
    spec = tmp_path / "two.json"
    spec.write_text('{"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 1.3], [2, 0, 0.7]]}')
    code, _, err = run_cli(["spectrum", "--spec", str(spec), "--kmax", "3"], capsys)
    assert code == 0 and "reducible" in err
    code, _, err = run_cli(["spectrum", "--spec", "tjunction_closed", "--kmax", "3"], capsys)
    assert code == 0 and "reducible" not in err


def test_recipes_listing(capsys):
    code, out, _ = run_cli(["recipes"], capsys)
    assert code == 0
    for name in ("fig3", "fig4", "fig5"):
        assert f"{name}: graphdelay" in out
    assert out.count("spec: tjunction") == 3
    assert "expected runtime" in out


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(cli.RECIPES))
def test_recipes_round_trip(name, tmp_path, capsys):
    argv = shlex.split(cli.RECIPES[name][0])[1:] + ["--out", str(tmp_path / "o.csv")]
    assert cli.main(argv) == 0
    header, rows = table((tmp_path / "o.csv").read_text())
    assert len(rows) > 10


# every operation tied to a numbered equation must be reachable from the CLI
EQUATION_LINKED = {
    "graph": ["neumann_vertex_matrix", "edge_adjacency"],
    "evolution": ["evolution_operator", "secular_value", "classical_map"],
    "scattering": [
        "open_evolution",
        "smatrix_resolvent",
        "smatrix_pathsum",
        "tjunction_smatrix",
        "tjunction_family_coefficient",
    ],
    "wavepacket": ["gaussian_envelope", "delay_density_fourier", "delay_density_families"],
    "paths": [
        "enumerate_families",
        "family_probabilities",
        "topological_cumulative",
        "metric_bounds",
        "tjunction_pt",
        "tjunction_ct",
    ],
    "classical": [
        "classical_cumulative_exact",
        "classical_delay_mc",
        "laplace_map",
        "decay_constant",
        "decay_prefactor",
        "classical_asymptote",
    ],
    "resonances": [
        "near_degenerate_pairs",
        "pole_from_pair",
        "refine_pole",
        "resonance_density",
        "longtime_cumulative_resonances",
        "longtime_cumulative_integral",
    ],
}


def test_cli_coverage_audit(capsys):
    reached = set()

    def prof(frame, event, arg):
        if event == "call":
            mod = frame.f_globals.get("__name__", "")
            if mod.startswith("graphdelay."):
                reached.add((mod.split(".")[1], frame.f_code.co_name))

    sys.setprofile(prof)
    try:
        for argv in SMOKE.values():
            cli.main(argv)
    finally:
        sys.setprofile(None)
    capsys.readouterr()
    missing = [
        f"{mod}.{fn}" for mod, fns in EQUATION_LINKED.items() for fn in fns if (mod, fn) not in reached
    ]
    assert not missing, missing
