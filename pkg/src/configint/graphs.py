"""Trivalent diagrams, the contraction coboundary and cocycles over the rationals.

Vertices are numbered from 1.  Closed graphs are plain multigraphs; knot
graphs carry a distinguished loop whose vertices (the *external* ones) are
numbered ``1..n_ext`` in loop order, followed by the internal vertices.  The
loop arcs ``(1,2), ..., (n_ext-1, n_ext), (n_ext, 1)`` are implicit.

Every edge is oriented from its lower to its higher end-point.  Contracting
an edge ``(i, j)``, ``i < j``, merges ``j`` into ``i`` and shifts the labels
above ``j`` down by one; the sign is ``(-1)**j`` times ``-1`` for every
surviving edge whose lower/higher orientation is reversed by the merge.
For knot graphs the closing arc ``(n_ext, 1)`` contributes one extra ``-1``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import InvalidEdge, MixedVariant, NotTrivalent, ParseError, SizeLimit

Edge = tuple[int, int]

#: Largest total vertex count accepted by enumeration and cocycle search.
MAX_VERTICES = 8


def _normalize_edges(edges: Iterable) -> tuple[Edge, ...]:
    out = []
    for e in edges:
        a, b = int(e[0]), int(e[1])
        if a > b:
            a, b = b, a
        out.append((a, b))
    return tuple(sorted(out))


def _edge_text(edges: tuple[Edge, ...]) -> str:
    if not edges:
        return "-"
    parts = []
    for e, grp in itertools.groupby(edges):
        m = len(list(grp))
        parts.append(f"({e[0]},{e[1]})" + (f"x{m}" if m > 1 else ""))
    return ",".join(parts)


@dataclass(frozen=True)
class LabeledGraph:
    n_vertices: int
    edges: tuple[Edge, ...]

    variant = "closed"

    def __post_init__(self):
        edges = _normalize_edges(self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n_vertices < 1:
            raise ValueError("n_vertices must be positive")
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (1 <= a <= self.n_vertices and 1 <= b <= self.n_vertices):
                raise ValueError(f"edge {(a, b)} out of range")

    @property
    def n_ext(self) -> int:
        return 0

    @property
    def n_int(self) -> int:
        return self.n_vertices

    @property
    def n_total(self) -> int:
        return self.n_vertices

    @property
    def form_edges(self) -> tuple[Edge, ...]:
        return self.edges

    def all_edges(self) -> list[Edge]:
        return list(self.edges)

    def valence(self) -> dict[int, int]:
        val = {v: 0 for v in range(1, self.n_vertices + 1)}
        for a, b in self.edges:
            val[a] += 1
            val[b] += 1
        return val

    def key(self) -> str:
        return canonical_key(self)


@dataclass(frozen=True)
class KnotGraph:
    n_ext: int
    n_int: int
    internal_edges: tuple[Edge, ...]

    variant = "knot"

    def __post_init__(self):
        edges = _normalize_edges(self.internal_edges)
        object.__setattr__(self, "internal_edges", edges)
        if self.n_ext < 1 or self.n_int < 0:
            raise ValueError("need n_ext >= 1 and n_int >= 0")
        n = self.n_ext + self.n_int
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (1 <= a <= n and 1 <= b <= n):
                raise ValueError(f"edge {(a, b)} out of range")

    @property
    def n_total(self) -> int:
        return self.n_ext + self.n_int

    @property
    def form_edges(self) -> tuple[Edge, ...]:
        return self.internal_edges

    def loop_arcs(self) -> list[Edge]:
        n = self.n_ext
        if n == 1:
            return [(1, 1)]
        return [(i, i + 1) for i in range(1, n)] + [(1, n)]

    def all_edges(self) -> list[Edge]:
        """Loop arcs first (the last one closes the loop), then internal edges."""
        return self.loop_arcs() + list(self.internal_edges)

    def is_chord(self, edge: Edge) -> bool:
        return edge[0] <= self.n_ext and edge[1] <= self.n_ext

    def valence(self) -> dict[int, int]:
        """Internal-edge valence; external vertices additionally carry two loop arcs."""
        val = {v: 0 for v in range(1, self.n_total + 1)}
        for a, b in self.internal_edges:
            val[a] += 1
            val[b] += 1
        return val

    def key(self) -> str:
        return canonical_key(self)


Graph = Union[LabeledGraph, KnotGraph]


@dataclass(frozen=True)
class SignedGraph:
    sign: int
    graph: Graph | None
    is_zero: bool = False


@dataclass
class ValidationReport:
    trivalent: bool
    self_loops: list[Edge]
    valence: dict[int, int]
    connected: bool
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.trivalent and not self.self_loops


def canonical_key(g: Graph) -> str:
    if isinstance(g, KnotGraph):
        return f"K|{g.n_ext}|{g.n_int}|{_edge_text(g.internal_edges)}"
    return f"C|{g.n_vertices}|{_edge_text(g.edges)}"


def _make(variant: str, n_ext: int, n_total: int, edges) -> Graph:
    if variant == "knot":
        return KnotGraph(n_ext, n_total - n_ext, tuple(edges))
    return LabeledGraph(n_total, tuple(edges))


def _components(n: int, edges: Iterable[Edge]) -> int:
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in range(1, n + 1)})


def is_connected(g: Graph) -> bool:
    if isinstance(g, KnotGraph):
        return _components(g.n_total, g.all_edges()) == 1
    return _components(g.n_vertices, g.edges) == 1


def is_prime(kg: KnotGraph) -> bool:
    """True iff the graph stays connected after deleting any two loop arcs."""
    arcs = kg.loop_arcs()
    internal = list(kg.internal_edges)
    if len(arcs) < 2:
        return _components(kg.n_total, arcs + internal) == 1
    for drop in itertools.combinations(range(len(arcs)), 2):
        kept = [a for k, a in enumerate(arcs) if k not in drop]
        if _components(kg.n_total, kept + internal) != 1:
            return False
    return True


def is_trivalent(g: Graph) -> bool:
    val = g.valence()
    if isinstance(g, KnotGraph):
        return all(val[v] == (1 if v <= g.n_ext else 3) for v in val)
    return all(d == 3 for d in val.values())


def validate_graph(g: Graph) -> ValidationReport:
    loops = [e for e in g.form_edges if e[0] == e[1]]
    val = g.valence()
    problems = []
    tri = is_trivalent(g)
    if not tri:
        bad = {v: d for v, d in val.items()
               if d != (1 if isinstance(g, KnotGraph) and v <= g.n_ext else 3)}
        problems.append(f"valence off at {bad}")
    if loops:
        problems.append(f"self-loops {loops}")
    return ValidationReport(tri, loops, val, is_connected(g), problems)


def order(g: Graph) -> Fraction:
    """Half the vertex count (``n_ext + n_int`` for knot graphs)."""
    if not is_trivalent(g):
        raise NotTrivalent(canonical_key(g))
    return Fraction(g.n_total, 2)


# -- contraction ------------------------------------------------------------

def _relabel_after_merge(v: int, i: int, j: int) -> int:
    if v == j:
        return i
    return v - 1 if v > j else v


def contract_edge(g: Graph, edge_index: int) -> SignedGraph:
    """Contract ``g.all_edges()[edge_index]`` (0-based)."""
    edges = g.all_edges()
    if not 0 <= edge_index < len(edges):
        raise InvalidEdge(f"edge index {edge_index} out of range 0..{len(edges) - 1}")
    i, j = edges[edge_index]
    if isinstance(g, KnotGraph):
        is_arc = edge_index < len(g.loop_arcs())
        if not is_arc and g.is_chord((i, j)):
            raise InvalidEdge(f"chord {(i, j)} joins two external vertices")
        if i == j:
            return SignedGraph(1, None, True)
        remaining = list(g.internal_edges)
        if not is_arc:
            remaining.remove((i, j))
        n_ext = g.n_ext - 1 if is_arc else g.n_ext
    else:
        remaining = list(g.edges)
        remaining.remove((i, j))
        n_ext = 0
    sign = -1 if j % 2 else 1
    if isinstance(g, KnotGraph) and is_arc and edge_index == len(g.loop_arcs()) - 1:
        # the closing arc is approached from the other side of the base point
        sign = -sign
    new_edges = []
    for a, b in remaining:
        a2, b2 = _relabel_after_merge(a, i, j), _relabel_after_merge(b, i, j)
        if a2 == b2:
            return SignedGraph(sign, None, True)
        if a2 > b2:
            sign = -sign
            a2, b2 = b2, a2
        new_edges.append((a2, b2))
    return SignedGraph(sign, _make(g.variant, n_ext, g.n_total - 1, new_edges))


def contractible_indices(g: Graph) -> list[int]:
    if isinstance(g, KnotGraph):
        n_arcs = len(g.loop_arcs())
        return list(range(n_arcs)) + [
            n_arcs + k for k, e in enumerate(g.internal_edges) if not g.is_chord(e)]
    return list(range(len(g.edges)))


# -- relabeling symmetry ----------------------------------------------------

def _perm_sign(p: tuple[int, ...]) -> int:
    sign, seen = 1, [False] * len(p)
    for s in range(len(p)):
        if seen[s]:
            continue
        k, length = s, 0
        while not seen[k]:
            seen[k] = True
            k = p[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def relabelings(variant: str, n_ext: int, n_total: int):
    """Relabelings that preserve the integration domain.

    Closed graphs: all permutations.  Knot graphs: cyclic rotations of the
    external labels times arbitrary permutations of the internal ones.
    Each item is ``(perm, sign)`` with ``perm[v-1]`` the new label of ``v``.
    """
    if variant == "closed":
        for p in itertools.permutations(range(n_total)):
            yield tuple(x + 1 for x in p), _perm_sign(p)
        return
    n_int = n_total - n_ext
    for r in range(n_ext):
        rot = tuple((v + r) % n_ext for v in range(n_ext))
        for q in itertools.permutations(range(n_int)):
            p = rot + tuple(n_ext + x for x in q)
            yield tuple(x + 1 for x in p), _perm_sign(p)


def relabel(g: Graph, perm: tuple[int, ...]) -> tuple[int, Graph]:
    """Apply ``perm``; returns the edge-orientation sign and the new graph."""
    sign = 1
    out = []
    for a, b in g.form_edges:
        a2, b2 = perm[a - 1], perm[b - 1]
        if a2 > b2:
            sign = -sign
            a2, b2 = b2, a2
        out.append((a2, b2))
    return sign, _make(g.variant, g.n_ext, g.n_total, out)


def orbit_representative(g: Graph) -> tuple[int, Graph] | None:
    """Minimal relabeling of ``g`` with its orientation sign, or None if ``g`` is
    identified with its own negative (and hence vanishes modulo relabeling)."""
    best = None
    for perm, psign in relabelings(g.variant, g.n_ext, g.n_total):
        esign, h = relabel(g, perm)
        k = h.form_edges
        s = psign * esign
        if best is None or k < best[0]:
            best = (k, s, h)
        elif k == best[0] and s != best[1]:
            return None
    return best[1], best[2]


# -- formal sums ------------------------------------------------------------

class GraphSum:
    """Finite rational combination of numbered graphs of one variant.

    With ``quotient=True`` the terms are orbit representatives modulo the
    domain-preserving relabelings (see :func:`relabelings`).
    """

    def __init__(self, terms=None, quotient: bool = False):
        self.quotient = quotient
        self.terms: dict[str, Fraction] = {}
        self.graphs: dict[str, Graph] = {}
        for g, c in (terms or []):
            self.add(g, c)

    @property
    def variant(self) -> str | None:
        for g in self.graphs.values():
            return g.variant
        return None

    def add(self, g: Graph, coeff) -> None:
        coeff = Fraction(coeff)
        if coeff == 0:
            return
        if self.graphs:
            first = next(iter(self.graphs.values()))
            if first.variant != g.variant:
                raise MixedVariant(f"{first.variant} vs {g.variant}")
            if first.n_total != g.n_total:
                raise MixedVariant("terms differ in vertex count")
        if self.quotient:
            red = orbit_representative(g)
            if red is None:
                return
            s, g = red
            coeff *= s
        k = canonical_key(g)
        c = self.terms.get(k, Fraction(0)) + coeff
        if c == 0:
            self.terms.pop(k, None)
            self.graphs.pop(k, None)
        else:
            self.terms[k] = c
            self.graphs[k] = g

    def items(self):
        for k in sorted(self.terms):
            yield self.graphs[k], self.terms[k]

    def scaled(self, factor) -> "GraphSum":
        return GraphSum(((g, c * Fraction(factor)) for g, c in self.items()), self.quotient)

    def __add__(self, other: "GraphSum") -> "GraphSum":
        out = GraphSum(self.items(), self.quotient or other.quotient)
        for g, c in other.items():
            out.add(g, c)
        return out

    def __sub__(self, other: "GraphSum") -> "GraphSum":
        return self + other.scaled(-1)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, GraphSum) and self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"{c}*[{k}]" for k, c in sorted(self.terms.items()))
        return f"GraphSum({body or '0'})"


def delta(v: GraphSum | Graph) -> GraphSum:
    """Signed sum of all admissible single-edge contractions, extended linearly."""
    if not isinstance(v, GraphSum):
        v = GraphSum([(v, 1)])
    out = GraphSum(quotient=v.quotient)
    for g, c in v.items():
        for idx in contractible_indices(g):
            sg = contract_edge(g, idx)
            if not sg.is_zero:
                out.add(sg.graph, c * sg.sign)
    return out


# -- enumeration ------------------------------------------------------------

def _multigraphs(degrees: list[int]):
    """All loop-free edge multisets realizing ``degrees`` (vertex v -> degrees[v-1])."""
    n = len(degrees)
    rem = list(degrees)
    edges: list[Edge] = []

    def rec(last_partner):
        v = next((k for k in range(n) if rem[k] > 0), None)
        if v is None:
            yield tuple(edges)
            return
        lo = last_partner[v] if last_partner[v] is not None else v + 1
        for w in range(max(lo, v + 1), n):
            if rem[w] == 0:
                continue
            rem[v] -= 1
            rem[w] -= 1
            edges.append((v + 1, w + 1))
            old = last_partner[v]
            last_partner[v] = w
            yield from rec(last_partner)
            last_partner[v] = old
            edges.pop()
            rem[v] += 1
            rem[w] += 1

    yield from rec([None] * n)


def enumerate_trivalent(n: int, variant: str = "closed", n_int: int | None = None,
                        max_vertices: int = MAX_VERTICES) -> list[Graph]:
    """Distinct numbered trivalent graphs with ``n`` vertices in total.

    For the knot variant ``n = n_ext + n_int``; when ``n_int`` is None all
    splits with ``n_ext >= 1`` are returned.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > max_vertices:
        raise SizeLimit(f"{n} vertices exceeds the bound {max_vertices}")
    out: list[Graph] = []
    if variant == "closed":
        if n % 2:
            return []
        return [LabeledGraph(n, e) for e in _multigraphs([3] * n)]
    if variant != "knot":
        raise ValueError(f"unknown variant {variant!r}")
    splits = [n_int] if n_int is not None else list(range(0, n))
    for t in splits:
        ne = n - t
        if ne < 1 or (ne + 3 * t) % 2:
            continue
        for e in _multigraphs([1] * ne + [3] * t):
            out.append(KnotGraph(ne, t, e))
    return out


# -- cocycles ---------------------------------------------------------------

def _passes(g: Graph, filt: str) -> bool:
    if filt == "none":
        return True
    if filt == "connected":
        return is_connected(g)
    if filt == "prime":
        if not isinstance(g, KnotGraph):
            raise ValueError("primality applies to knot graphs only")
        return is_prime(g)
    raise ValueError(f"unknown filter {filt!r}")


def delta_matrix(domain: list[Graph], quotient: bool):
    """Columns = images of the domain graphs; returns (matrix rows, row keys)."""
    images = [delta(GraphSum([(g, 1)], quotient)) for g in domain]
    keys = sorted({k for im in images for k in im.terms})
    index = {k: r for r, k in enumerate(keys)}
    rows = [[Fraction(0)] * len(domain) for _ in keys]
    for col, im in enumerate(images):
        for k, c in im.terms.items():
            rows[index[k]][col] = c
    return rows, keys


def cocycle_basis(n: int, variant: str = "closed", filter: str = "connected",
                  quotient: bool = True, max_vertices: int = MAX_VERTICES) -> list[GraphSum]:
    """Basis of the δ-kernel on trivalent graphs with ``n`` vertices.

    ``quotient=True`` works modulo the domain-preserving relabelings, which is
    where the knot-variant cocycles live; ``quotient=False`` is the plain
    numbered-graph complex.
    """
    graphs = [g for g in enumerate_trivalent(n, variant, max_vertices=max_vertices)
              if _passes(g, filter)]
    domain: list[Graph] = []
    seen = set()
    for g in graphs:
        if quotient:
            red = orbit_representative(g)
            if red is None:
                continue
            g = red[1]
        k = canonical_key(g)
        if k not in seen:
            seen.add(k)
            domain.append(g)
    domain.sort(key=canonical_key)
    if not domain:
        return []
    rows, _ = delta_matrix(domain, quotient)
    if not rows:
        kernel = [[Fraction(int(r == c)) for c in range(len(domain))] for r in range(len(domain))]
    else:
        dm = DomainMatrix([[QQ(x.numerator, x.denominator) for x in row] for row in rows],
                          (len(rows), len(domain)), QQ)
        ns = dm.nullspace().to_Matrix()
        kernel = [[Fraction(int(x.p), int(x.q)) for x in ns.row(r)] for r in range(ns.rows)]
    basis = []
    for vec in kernel:
        pivot = next(x for x in vec if x != 0)
        basis.append(GraphSum(((g, x / pivot) for g, x in zip(domain, vec) if x != 0), quotient))
    return basis


# -- file format ------------------------------------------------------------

def cocycle_to_json(v: GraphSum) -> str:
    graphs = list(v.graphs.values())
    variant = v.variant or "closed"
    n_ext = sorted({g.n_ext for g in graphs}) if graphs else [0]
    doc = {
        "variant": variant,
        "n_ext": n_ext[0] if len(n_ext) == 1 else None,
        "n_int": None,
        "quotient": v.quotient,
        "terms": [],
    }
    if graphs and len(n_ext) == 1:
        doc["n_int"] = graphs[0].n_total - n_ext[0]
    for g, c in v.items():
        term = {"coeff": f"{c.numerator}/{c.denominator}",
                "edges": [list(e) for e in g.form_edges]}
        if len(n_ext) != 1:
            term["n_ext"] = g.n_ext
            term["n_int"] = g.n_total - g.n_ext
        doc["terms"].append(term)
    if doc["n_int"] is None and len(n_ext) != 1:
        doc["n_total"] = graphs[0].n_total
    return json.dumps(doc, indent=2, sort_keys=True)


def cocycle_from_json(text: str) -> GraphSum:
    try:
        doc = json.loads(text)
        variant = doc["variant"]
        if variant not in ("closed", "knot"):
            raise ParseError(f"unknown variant {variant!r}")
        out = GraphSum(quotient=bool(doc.get("quotient", False)))
        for t in doc["terms"]:
            ne = t.get("n_ext", doc.get("n_ext"))
            ni = t.get("n_int", doc.get("n_int"))
            edges = [tuple(e) for e in t["edges"]]
            g = KnotGraph(ne, ni, edges) if variant == "knot" else LabeledGraph(ni + (ne or 0), edges)
            # add without re-reducing: the file stores representatives already
            k = canonical_key(g)
            out.terms[k] = out.terms.get(k, Fraction(0)) + Fraction(t["coeff"])
            out.graphs[k] = g
        return out
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
