"""Metric graphs with leads and vertex scattering matrices.

Directed edges (bonds) are indexed ``d = e`` for the positive orientation
(lower vertex index to higher) and ``d = E + e`` for the reverse, so the
reversal is ``(d + E) % D``. At every vertex the scattering matrix acts on
local channels ordered as: the lead (if the vertex carries one), then the
incident edges in input order. Rows are outgoing, columns incoming.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import GraphSpecError
from .exact import Surd, recognize

UNITARITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VertexMatrix:
    """Unitary vertex scattering matrix, optionally with exact entries."""

    entries: np.ndarray
    exact: tuple | None = None

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def unitarity_defect(self) -> float:
        s = self.entries
        return float(np.max(np.abs(s.conj().T @ s - np.eye(self.dimension))))


def neumann_vertex_matrix(degree: int) -> VertexMatrix:
    """Neumann matrix ``2/d - delta``: off-diagonal 2/d, diagonal 2/d - 1."""
    if int(degree) != degree or degree < 1:
        raise GraphSpecError(f"degree must be a positive integer, got {degree}")
    d = int(degree)
    exact = tuple(
        tuple(Surd(Fraction(2, d) - (1 if i == j else 0)) for j in range(d)) for i in range(d)
    )
    entries = np.full((d, d), 2.0 / d, dtype=complex)
    entries[np.diag_indices(d)] -= 1.0
    return VertexMatrix(entries, exact)


def explicit_vertex_matrix(entries) -> VertexMatrix:
    """Wrap a square complex matrix, recovering exact entries when possible."""
    a = np.array(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphSpecError(f"vertex matrix must be square, got shape {a.shape}")
    exact = None
    if np.all(a.imag == 0):
        rows = []
        for row in a.real:
            vals = [recognize(float(x)) for x in row]
            if any(v is None for v in vals):
                rows = None
                break
            rows.append(tuple(vals))
        if rows is not None:
            exact = tuple(rows)
    return VertexMatrix(a, exact)


@dataclass(frozen=True)
class DirectedEdge:
    index: int
    edge: int
    orientation: int
    origin: int
    terminus: int
    length: float


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Connected simple metric graph with optional leads.

    Construct through :func:`build_graph`; the derived bond-level arrays
    (``bond_scattering``, ``lead_in``, ``lead_out``, ``lead_reflection``) are
    filled in at construction and the object is immutable afterwards.
    """

    vertex_count: int
    edges: tuple
    leads: tuple
    vertex_matrices: Mapping[int, VertexMatrix]
    name: str = ""
    incident: tuple = field(init=False, repr=False)
    origin: np.ndarray = field(init=False, repr=False)
    terminus: np.ndarray = field(init=False, repr=False)
    bond_lengths: np.ndarray = field(init=False, repr=False)
    bond_scattering: np.ndarray = field(init=False, repr=False)
    lead_in: np.ndarray = field(init=False, repr=False)
    lead_out: np.ndarray = field(init=False, repr=False)
    lead_reflection: np.ndarray = field(init=False, repr=False)
    exact: dict | None = field(init=False, repr=False)

    def __post_init__(self):
        V, E = self.vertex_count, len(self.edges)
        incident = [[] for _ in range(V)]
        for e, (u, v, _) in enumerate(self.edges):
            incident[u].append(e)
            incident[v].append(e)
        u = np.array([e[0] for e in self.edges], dtype=int)
        v = np.array([e[1] for e in self.edges], dtype=int)
        lengths = np.array([e[2] for e in self.edges], dtype=float)
        origin = np.concatenate([u, v])
        terminus = np.concatenate([v, u])
        lead_of = {vert: h for h, vert in enumerate(self.leads)}

        def local(vert, e):
            return (1 if vert in lead_of else 0) + incident[vert].index(e)

        D, H = 2 * E, len(self.leads)
        out_local = [local(origin[d], d % E) for d in range(D)]
        in_local = [local(terminus[d], d % E) for d in range(D)]

        sigma = np.zeros((D, D), dtype=complex)
        lead_in = np.zeros((D, H), dtype=complex)
        lead_out = np.zeros((H, D), dtype=complex)
        refl = np.zeros(H, dtype=complex)
        all_exact = all(m.exact is not None for m in self.vertex_matrices.values())
        ex_sigma, ex_in, ex_out, ex_refl = {}, {}, {}, {}

        for d in range(D):
            m = self.vertex_matrices[int(origin[d])]
            for dp in range(D):
                if terminus[dp] == origin[d]:
                    sigma[d, dp] = m.entries[out_local[d], in_local[dp]]
                    if all_exact:
                        val = m.exact[out_local[d]][in_local[dp]]
                        if val != 0:
                            ex_sigma[(d, dp)] = val
        for h, vert in enumerate(self.leads):
            m = self.vertex_matrices[vert]
            refl[h] = m.entries[0, 0]
            if all_exact:
                ex_refl[h] = m.exact[0][0]
            for d in range(D):
                if origin[d] == vert:
                    lead_in[d, h] = m.entries[out_local[d], 0]
                    if all_exact:
                        ex_in[(d, h)] = m.exact[out_local[d]][0]
                if terminus[d] == vert:
                    lead_out[h, d] = m.entries[0, in_local[d]]
                    if all_exact:
                        ex_out[(h, d)] = m.exact[0][in_local[d]]

        for name, value in [
            ("incident", tuple(tuple(x) for x in incident)),
            ("origin", origin),
            ("terminus", terminus),
            ("bond_lengths", np.concatenate([lengths, lengths])),
            ("bond_scattering", sigma),
            ("lead_in", lead_in),
            ("lead_out", lead_out),
            ("lead_reflection", refl),
            (
                "exact",
                {"sigma": ex_sigma, "lead_in": ex_in, "lead_out": ex_out, "reflection": ex_refl}
                if all_exact
                else None,
            ),
        ]:
            if isinstance(value, np.ndarray):
                value.flags.writeable = False
            object.__setattr__(self, name, value)

    @property
    def E(self) -> int:
        return len(self.edges)

    @property
    def D(self) -> int:
        return 2 * len(self.edges)

    @property
    def H(self) -> int:
        return len(self.leads)

    @property
    def is_open(self) -> bool:
        return bool(self.leads)

    @property
    def lengths(self) -> np.ndarray:
        return self.bond_lengths[: self.E]

    def degree(self, vertex: int) -> int:
        return len(self.incident[vertex])

    def reverse(self, d: int) -> int:
        return (d + self.E) % self.D

    def bond_edge(self, d: int) -> int:
        return d % self.E

    def directed_edge(self, d: int) -> DirectedEdge:
        return DirectedEdge(
            index=d,
            edge=d % self.E,
            orientation=1 if d < self.E else -1,
            origin=int(self.origin[d]),
            terminus=int(self.terminus[d]),
            length=float(self.bond_lengths[d]),
        )


def edge_adjacency(g: MetricGraph) -> np.ndarray:
    """0/1 matrix with ``B[d, d'] = 1`` iff ``o(d) == t(d')``."""
    return (g.origin[:, None] == g.terminus[None, :]).astype(int)


def _parse_matrix(raw, vertex) -> VertexMatrix:
    if isinstance(raw, str):
        if raw.lower() != "neumann":
            raise GraphSpecError(f"vertex {vertex}: unknown matrix type {raw!r}")
        return None
    if isinstance(raw, Mapping):
        if raw.get("type", "explicit") == "neumann":
            return None
        raw = raw["entries"]
    flat = np.asarray(raw, dtype=float)
    if flat.ndim == 3:  # list of rows of [re, im]
        flat = flat.reshape(-1, 2)
    if flat.ndim != 2 or flat.shape[1] != 2:
        raise GraphSpecError(f"vertex {vertex}: entries must be [re, im] pairs")
    n = int(round(np.sqrt(len(flat))))
    if n * n != len(flat):
        raise GraphSpecError(f"vertex {vertex}: {len(flat)} entries is not a square count")
    return explicit_vertex_matrix((flat[:, 0] + 1j * flat[:, 1]).reshape(n, n))


def build_graph(spec: Mapping, name: str = "") -> MetricGraph:
    """Validate a graph description and build the :class:`MetricGraph`.

    ``spec`` has keys ``vertices`` (count), ``edges`` (``[u, v, length]``
    triples), ``leads`` (vertex ids, at most one lead per vertex) and an
    optional ``vertex_matrix`` map from vertex id (or ``"default"``) to either
    ``"neumann"`` or ``{"entries": [[re, im], ...]}`` in row-major order.
    """
    try:
        V = int(spec["vertices"])
        raw_edges = list(spec["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphSpecError(f"graph spec needs 'vertices' and 'edges': {exc}") from None
    if V < 1:
        raise GraphSpecError("vertex count must be positive")
    if not raw_edges:
        raise GraphSpecError("graph needs at least one edge")

    edges, seen = [], set()
    for item in raw_edges:
        if len(item) != 3:
            raise GraphSpecError(f"edge {item!r} is not a (u, v, length) triple")
        u, v, length = int(item[0]), int(item[1]), float(item[2])
        if not (0 <= u < V and 0 <= v < V):
            raise GraphSpecError(f"edge {item!r} references a missing vertex")
        if u == v:
            raise GraphSpecError(f"edge {item!r} is a loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphSpecError(f"parallel edge between {key}")
        if not (np.isfinite(length) and length > 0):
            raise GraphSpecError(f"edge {item!r} has non-positive or non-finite length")
        seen.add(key)
        edges.append((key[0], key[1], length))

    adjacency = [[] for _ in range(V)]
    for u, v, _ in edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    reached, queue = {0}, deque([0])
    while queue:
        for w in adjacency[queue.popleft()]:
            if w not in reached:
                reached.add(w)
                queue.append(w)
    if len(reached) != V:
        raise GraphSpecError("graph is not connected")

    leads = tuple(int(h) for h in spec.get("leads", ()))
    if len(set(leads)) != len(leads):
        raise GraphSpecError("at most one lead per vertex is supported")
    if any(not 0 <= h < V for h in leads):
        raise GraphSpecError("lead attached to a missing vertex")

    mats = dict(spec.get("vertex_matrix", {}) or {})
    default = mats.pop("default", "neumann")
    matrices = {}
    for vert in range(V):
        dim = len(adjacency[vert]) + (1 if vert in leads else 0)
        raw = mats.pop(str(vert), mats.pop(vert, default))
        m = _parse_matrix(raw, vert)
        if m is None:
            m = neumann_vertex_matrix(dim)
        if m.dimension != dim:
            raise GraphSpecError(f"vertex {vert}: matrix dimension {m.dimension}, expected {dim}")
        if m.unitarity_defect() > UNITARITY_TOL:
            raise GraphSpecError(f"vertex {vert}: matrix is not unitary")
        matrices[vert] = m
    if mats:
        raise GraphSpecError(f"matrices given for unknown vertices: {sorted(mats)}")
    return MetricGraph(V, tuple(edges), leads, matrices, name=name or str(spec.get("name", "")))


BUNDLED = ("tjunction", "tjunction_equal", "tjunction_closed", "triangle_lead")


def load_graph(source: str | Path) -> MetricGraph:
    """Load a JSON graph spec from a path or a bundled name such as ``tjunction``."""
    src = str(source)
    if src in BUNDLED:
        text = resources.files("graphdelay.data").joinpath(f"{src}.json").read_text()
        return build_graph(json.loads(text), name=src)
    path = Path(src)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphSpecError(f"cannot read graph spec {src!r}: {exc}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSpecError(f"{src}: invalid JSON: {exc}") from None
    return build_graph(spec, name=path.stem)


# The T-junction centre matrix; lead first, then the edges to vertices 1 and 2.
TJUNCTION_CENTRE = (
    np.array(
        [
            [0.0, np.sqrt(2), -np.sqrt(2)],
            [-np.sqrt(2), 1.0, 1.0],
            [np.sqrt(2), 1.0, 1.0],
        ]
    )
    / 2
)

GOLDEN_L1 = (1 + np.sqrt(5)) / 8
GOLDEN_L2 = 1 - GOLDEN_L1


def tjunction_spec(L1: float = GOLDEN_L1, L2: float = GOLDEN_L2) -> dict:
    entries = [[float(x), 0.0] for x in TJUNCTION_CENTRE.ravel()]
    return {
        "name": "tjunction",
        "vertices": 3,
        "edges": [[0, 1, L1], [0, 2, L2]],
        "leads": [0],
        "vertex_matrix": {"0": {"entries": entries}},
    }


def tjunction_graph(L1: float = GOLDEN_L1, L2: float = GOLDEN_L2) -> MetricGraph:
    """Two edges joined at vertex 0, one lead at vertex 0, Neumann leaves."""
    return build_graph(tjunction_spec(L1, L2))


def graph_from_edges(
    vertex_count: int, edges: Sequence, leads: Sequence[int] = (), name: str = ""
) -> MetricGraph:
    """All-Neumann graph from an edge list."""
    return build_graph(
        {"vertices": vertex_count, "edges": [list(e) for e in edges], "leads": list(leads)},
        name=name,
    )
