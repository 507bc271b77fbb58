import numpy as np
import pytest

from graphdelay.graph import graph_from_edges

_criterion = {}
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): belongs to acceptance criterion n")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            _criterion[item.nodeid] = m.args[0]


def pytest_runtest_logreport(report):
    n = _criterion.get(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        _outcomes.setdefault(n, []).append((report.nodeid, ok))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        res = _outcomes[n]
        failed = [nid.split("::")[-1] for nid, ok in res if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"ACCEPTANCE {n}: {status} ({len(res) - len(failed)}/{len(res)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)


def random_graph(rng, max_vertices=5, n_leads=None):
    """Random connected simple Neumann graph with leads on distinct vertices."""
    V = int(rng.integers(2, max_vertices + 1))
    order = rng.permutation(V)
    edges = {}
    for i in range(1, V):  # random spanning tree
        u, v = int(order[i]), int(order[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = None
    for u in range(V):
        for v in range(u + 1, V):
            if rng.random() < 0.35:
                edges[(u, v)] = None
    lengths = rng.uniform(0.3, 1.7, len(edges))
    if n_leads is None:
        n_leads = int(rng.integers(1, min(V, 3) + 1))
    leads = sorted(int(x) for x in rng.choice(V, n_leads, replace=False))
    return graph_from_edges(V, [(u, v, L) for (u, v), L in zip(edges, lengths)], leads)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def tj_delay_sigma100():
    """Fourier-route P(s) for the golden T-junction, k0=1000, sigma=100, dk=1e-4."""
    from graphdelay.graph import GOLDEN_L1, GOLDEN_L2
    from graphdelay.scattering import tjunction_smatrix
    from graphdelay.wavepacket import delay_density_fft, gaussian_envelope

    env = gaussian_envelope(1000.0, 100.0)
    return env, delay_density_fft(lambda k: tjunction_smatrix(GOLDEN_L1, GOLDEN_L2, k), env, 1e-4, 5.0)
