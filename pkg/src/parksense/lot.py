"""Node-and-edge model of a parking lot with routing and scan-visibility queries.

Node ids: spaces are ``1..N``; aisle nodes, the entrance and the exit take the
ids after that. Edges carry a length and a ``one_way`` flag (traversable only
``u -> v`` when routing in one-way mode). In two-way mode every edge is
traversable both ways and cars leave through the entrance.

Lot description file (JSON)::

    {
      "nodes": [{"id": 1, "kind": "space"}, {"id": 5, "kind": "aisle"}, ...],
      "edges": [{"u": 5, "v": 6, "length": 1.0, "one_way": true}, ...],
      "scan_adjacency": {"5": [1, 2], ...},
      "entrance": 7,
      "exit": 8
    }

``kind`` is one of ``space``, ``aisle``, ``entrance``, ``exit``. Each space
has exactly one edge, to an aisle node. A scan list holds at most
``MAX_SCAN_RANGE`` spaces.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

MAX_SCAN_RANGE = 6


class RouteMode(str, Enum):
    ONE_WAY = "one-way"
    TWO_WAY = "two-way"

    @classmethod
    def parse(cls, value) -> "RouteMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("_", "-"))
        except ValueError:
            raise ValueError(f"unknown route mode {value!r}") from None


class LotSchemaError(ValueError):
    pass


class NoRouteError(LookupError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: float = 1.0
    one_way: bool = False


@dataclass(frozen=True)
class Route:
    nodes: tuple
    length: float

    def __len__(self):
        return len(self.nodes)

    def reversed(self) -> "Route":
        return Route(tuple(reversed(self.nodes)), self.length)


class LotGraph:
    """Immutable lot graph. Route queries are memoised per instance."""

    def __init__(self, node_kinds: dict, edges, scan_adjacency: dict,
                 entrance: int, exit: int):
        self.node_kinds = dict(node_kinds)
        self.edges = tuple(edges)
        self.scan_adjacency = {int(k): tuple(v) for k, v in scan_adjacency.items()}
        self.entrance = entrance
        self.exit = exit
        self.spaces = sorted(n for n, k in self.node_kinds.items() if k == "space")
        self._validate()

        self._out = {RouteMode.ONE_WAY: {}, RouteMode.TWO_WAY: {}}
        for e in self.edges:
            for mode, arcs in self._out.items():
                arcs.setdefault(e.u, []).append((e.v, e.length))
                if mode is RouteMode.TWO_WAY or not e.one_way:
                    arcs.setdefault(e.v, []).append((e.u, e.length))
        self._aisle_of = {}
        for e in self.edges:
            if self.node_kinds[e.u] == "space":
                self._aisle_of[e.u] = e.v
            elif self.node_kinds[e.v] == "space":
                self._aisle_of[e.v] = e.u
        self._tree_cache = {}
        self._arrival_cache = {}
        self._coverage_cache = {}
        self._visible_cache = {}

        for mode in RouteMode:
            self._check_reachability(mode)

    # -- construction helpers ------------------------------------------------

    def _validate(self):
        kinds = self.node_kinds
        for node, kind in kinds.items():
            if kind not in ("space", "aisle", "entrance", "exit"):
                raise LotSchemaError(f"node {node}: unknown kind {kind!r}")
        n = len(self.spaces)
        if n == 0:
            raise LotSchemaError("lot has no space nodes")
        if self.spaces != list(range(1, n + 1)):
            raise LotSchemaError("space ids must be dense in 1..N")
        for label, node, kind in (("entrance", self.entrance, "entrance"),
                                  ("exit", self.exit, "exit")):
            if node is None:
                raise LotSchemaError(f"missing {label}")
            if kinds.get(node) != kind:
                raise LotSchemaError(f"{label} {node} is not a node of kind {kind!r}")
        attached = {s: 0 for s in self.spaces}
        for e in self.edges:
            for end in (e.u, e.v):
                if end not in kinds:
                    raise LotSchemaError(f"edge ({e.u}, {e.v}) references unknown node {end}")
            if e.length < 0:
                raise LotSchemaError(f"edge ({e.u}, {e.v}) has negative length")
            ku, kv = kinds[e.u], kinds[e.v]
            if ku == "space" or kv == "space":
                space, other = (e.u, kv) if ku == "space" else (e.v, ku)
                if other != "aisle":
                    raise LotSchemaError(f"space {space} must attach to an aisle node")
                attached[space] += 1
        for s, count in attached.items():
            if count != 1:
                raise LotSchemaError(f"space {s} attached to {count} aisle nodes, expected 1")
        for node, visible in self.scan_adjacency.items():
            if kinds.get(node) not in ("aisle", "entrance", "exit"):
                raise LotSchemaError(f"scan_adjacency key {node} is not an aisle node")
            if len(visible) > MAX_SCAN_RANGE:
                raise LotSchemaError(
                    f"scan_adjacency[{node}] lists {len(visible)} spaces, "
                    f"exceeds scan range of {MAX_SCAN_RANGE}")
            for s in visible:
                if kinds.get(s) != "space":
                    raise LotSchemaError(f"scan_adjacency[{node}] references non-space {s}")

    def _check_reachability(self, mode: RouteMode):
        aisles = [n for n, k in self.node_kinds.items() if k == "aisle"]
        from_entrance = self._tree(self.entrance, mode)
        exit_node = self.exit_node(mode)
        for a in aisles:
            if a not in from_entrance:
                raise LotSchemaError(f"aisle node {a} unreachable from entrance in {mode.value} mode")
            if exit_node not in self._tree(a, mode):
                raise LotSchemaError(f"exit unreachable from aisle node {a} in {mode.value} mode")

    # -- queries -------------------------------------------------------------

    @property
    def n_spaces(self) -> int:
        return len(self.spaces)

    @property
    def aisle_nodes(self) -> list:
        return sorted(n for n, k in self.node_kinds.items() if k == "aisle")

    def aisle_of(self, space: int) -> int:
        try:
            return self._aisle_of[space]
        except KeyError:
            raise KeyError(f"unknown space id {space}") from None

    def exit_node(self, mode) -> int:
        """Where departing cars leave: the entrance in two-way mode."""
        return self.exit if RouteMode.parse(mode) is RouteMode.ONE_WAY else self.entrance

    def neighbors(self, node: int, mode) -> list:
        return self._out[RouteMode.parse(mode)].get(node, [])

    def _tree(self, source: int, mode: RouteMode) -> dict:
        # Lexicographically smallest shortest paths share prefixes, so one
        # Dijkstra keyed on (distance, path) gives every destination.
        key = (source, mode)
        if key in self._tree_cache:
            return self._tree_cache[key]
        arcs = self._out[mode]
        best = {}
        heap = [(0.0, (source,))]
        while heap:
            dist, path = heapq.heappop(heap)
            node = path[-1]
            if node in best:
                continue
            best[node] = Route(path, dist)
            if node != source and self.node_kinds[node] == "space":
                continue  # spaces are dead ends, never through-nodes
            for nxt, w in arcs.get(node, ()):
                if nxt not in best:
                    heapq.heappush(heap, (dist + w, path + (nxt,)))
        self._tree_cache[key] = best
        return best

    def shortest_route(self, start: int, end: int, mode) -> Route:
        mode = RouteMode.parse(mode)
        for node in (start, end):
            if node not in self.node_kinds:
                raise KeyError(f"unknown node {node}")
        route = self._tree(start, mode).get(end)
        if route is None:
            raise NoRouteError(f"no {mode.value} route from {start} to {end}")
        return route

    def arrival_route(self, space: int, mode) -> Route:
        """Shortest route from the entrance to the aisle node serving ``space``."""
        mode = RouteMode.parse(mode)
        key = (space, mode)
        if key not in self._arrival_cache:
            self._arrival_cache[key] = self.shortest_route(self.entrance, self.aisle_of(space), mode)
        return self._arrival_cache[key]

    def departure_route(self, space: int, mode) -> Route:
        mode = RouteMode.parse(mode)
        if mode is RouteMode.TWO_WAY:
            return self.arrival_route(space, mode).reversed()
        return self.shortest_route(self.aisle_of(space), self.exit, mode)

    def visible_spaces(self, route) -> list:
        """Distinct spaces visible from the route's nodes, in first-seen order."""
        nodes = route.nodes if isinstance(route, Route) else route
        seen = {}
        for node in nodes:
            for s in self.scan_adjacency.get(node, ()):
                seen.setdefault(s, None)
        return list(seen)

    def visible_index(self, route) -> np.ndarray:
        """0-based indices of :meth:`visible_spaces`, cached per route."""
        nodes = route.nodes if isinstance(route, Route) else tuple(route)
        idx = self._visible_cache.get(nodes)
        if idx is None:
            idx = np.array(self.visible_spaces(nodes), dtype=np.intp) - 1
            idx.flags.writeable = False
            self._visible_cache[nodes] = idx
        return idx

    def arrival_lengths(self, mode) -> np.ndarray:
        """Arrival route length per space (index ``space - 1``)."""
        return self._arrival_tables(RouteMode.parse(mode))[1]

    def arrival_coverage(self, mode) -> np.ndarray:
        """0/1 matrix: row ``i`` marks spaces visible on space ``i+1``'s arrival route."""
        return self._arrival_tables(RouteMode.parse(mode))[0]

    def _arrival_tables(self, mode: RouteMode):
        if mode not in self._coverage_cache:
            cov = np.zeros((self.n_spaces, self.n_spaces))
            lengths = np.empty(self.n_spaces)
            for s in self.spaces:
                route = self.arrival_route(s, mode)
                cov[s - 1, [v - 1 for v in self.visible_spaces(route)]] = 1.0
                lengths[s - 1] = route.length
            cov.flags.writeable = False
            lengths.flags.writeable = False
            self._coverage_cache[mode] = (cov, lengths)
        return self._coverage_cache[mode]

    # -- serialisation -------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "nodes": [{"id": n, "kind": k} for n, k in sorted(self.node_kinds.items())],
            "edges": [{"u": e.u, "v": e.v, "length": e.length, "one_way": e.one_way}
                      for e in self.edges],
            "scan_adjacency": {str(k): list(v) for k, v in sorted(self.scan_adjacency.items())},
            "entrance": self.entrance,
            "exit": self.exit,
        }


def load_lot(document) -> LotGraph:
    """Parse a lot description (dict, JSON string or path)."""
    if isinstance(document, Path) or (isinstance(document, str)
                                      and not document.lstrip().startswith("{")):
        document = Path(document).read_text()
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise LotSchemaError(f"lot document is not valid JSON: {exc}") from None
    for key in ("nodes", "edges", "scan_adjacency"):
        if key not in document:
            raise LotSchemaError(f"missing key {key!r}")
    node_kinds = {}
    for i, node in enumerate(document["nodes"]):
        try:
            node_id, kind = int(node["id"]), node["kind"]
        except (KeyError, TypeError, ValueError):
            raise LotSchemaError(f"nodes[{i}] needs integer 'id' and 'kind'") from None
        if node_id in node_kinds:
            raise LotSchemaError(f"duplicate node id {node_id}")
        node_kinds[node_id] = kind
    edges = []
    for i, e in enumerate(document["edges"]):
        try:
            edges.append(Edge(int(e["u"]), int(e["v"]), float(e.get("length", 1.0)),
                              bool(e.get("one_way", False))))
        except (KeyError, TypeError, ValueError):
            raise LotSchemaError(f"edges[{i}] needs integer 'u' and 'v'") from None
    if document.get("entrance") is None:
        raise LotSchemaError("missing entrance")
    if document.get("exit") is None:
        raise LotSchemaError("missing exit")
    try:
        scan = {int(k): [int(s) for s in v] for k, v in document["scan_adjacency"].items()}
    except (TypeError, ValueError, AttributeError):
        raise LotSchemaError("scan_adjacency must map node ids to lists of space ids") from None
    return LotGraph(node_kinds, edges, scan, int(document["entrance"]), int(document["exit"]))


def build_grid_lot(aisles: int = 4, spaces_per_aisle_side: int = 20,
                   scan_range: int = MAX_SCAN_RANGE) -> LotGraph:
    """Double-sided aisles joined by top and bottom lanes.

    Aisle ``k`` is a column of ``spaces_per_aisle_side`` aisle nodes, each
    serving one space on either side. The entrance feeds the top of aisle 0
    and the exit leaves from the bottom of the last aisle. One-way
    circulation runs east along the top lane, down every aisle and east
    along the bottom lane. Each aisle node sees its own row and the rows
    directly ahead and behind, nearest first, capped at ``scan_range``.
    """
    if aisles < 1 or spaces_per_aisle_side < 1:
        raise ValueError("aisles and spaces_per_aisle_side must be >= 1")
    if not 1 <= scan_range <= MAX_SCAN_RANGE:
        raise ValueError(f"scan_range must be in 1..{MAX_SCAN_RANGE}")
    rows = spaces_per_aisle_side
    n = aisles * 2 * rows

    def space(k, r, side):
        return k * 2 * rows + 2 * r + side + 1

    def aisle(k, r):
        return n + 1 + k * rows + r

    entrance = n + aisles * rows + 1
    exit_ = entrance + 1
    kinds = {s: "space" for s in range(1, n + 1)}
    kinds.update({aisle(k, r): "aisle" for k in range(aisles) for r in range(rows)})
    kinds[entrance] = "entrance"
    kinds[exit_] = "exit"

    edges = [Edge(entrance, aisle(0, 0), 1.0, True)]
    scan = {}
    for k in range(aisles):
        for r in range(rows):
            for side in (0, 1):
                edges.append(Edge(space(k, r, side), aisle(k, r)))
            if r + 1 < rows:
                edges.append(Edge(aisle(k, r), aisle(k, r + 1), 1.0, True))
            near = sorted(range(max(r - 1, 0), min(r + 2, rows)), key=lambda rr: (abs(rr - r), rr))
            scan[aisle(k, r)] = [space(k, rr, side) for rr in near for side in (0, 1)][:scan_range]
        if k + 1 < aisles:
            edges.append(Edge(aisle(k, 0), aisle(k + 1, 0), 1.0, True))
            if rows > 1:
                edges.append(Edge(aisle(k, rows - 1), aisle(k + 1, rows - 1), 1.0, True))
    edges.append(Edge(aisle(aisles - 1, rows - 1), exit_, 1.0, True))
    return LotGraph(kinds, edges, scan, entrance, exit_)
