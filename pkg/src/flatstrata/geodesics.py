"""Straight-line flow on triangulated translation surfaces.

Three services built on planar development of triangle chains:

* separatrix tracing: follow a ray from a cone point until it crosses a
  marked edge, returns to a singularity, or exhausts its length budget;
* complete saddle-connection enumeration up to a length bound, by
  breadth-first unfolding of triangle chains inside angular wedges;
* homological independence of saddle-connection families, decided with
  exact integer arithmetic on the chain complex of the triangulation.

All developments live in the plane with the source singularity at the
origin.  Transitions between triangles are translations, so directions
never rotate during a development.
"""

import math
from dataclasses import dataclass, field

from . import exact
from .errors import NotOnSurface, RayThroughVertexAmbiguity
from .surface import TranslationSurface, ref_index, ref_sign

ANG_EPS = 1e-12          # ray-along-edge detection, radians
VERTEX_RTOL = 1e-12      # ray-through-vertex tolerance, relative to edge length


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


@dataclass(frozen=True)
class SaddleConnection:
    """Oriented geodesic segment between singularities.

    `crossing_record` lists (triangle, entry edge, exit edge) along the
    developed path; the first entry and last exit are None.  Connections
    that run along a triangulation edge have an empty record and carry
    `edge_id`.  `chain` is an integer 1-chain on unsigned edges
    representing the relative homology class.
    """

    holonomy: complex
    start_vertex: int
    end_vertex: int
    crossing_record: tuple
    chain: tuple
    edge_id: int | None = None
    _source: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def length(self) -> float:
        return abs(self.holonomy)

    def crossed_edges(self) -> set:
        out = set()
        for _, entry, exit_ in self.crossing_record:
            if entry is not None:
                out.add(entry)
            if exit_ is not None:
                out.add(exit_)
        return out


@dataclass(frozen=True)
class SeparatrixTrace:
    origin_vertex: int
    sector: int
    direction: complex
    stop_reason: str          # "marked-interior" | "singularity" | "budget"
    length: float
    hit_edge: int | None = None
    hit_param: float | None = None
    hit_vertex: int | None = None
    crossing_record: tuple = ()


# -- cone directions -----------------------------------------------------------

def angular_copies(surface: TranslationSurface, vertex: int, direction: complex):
    """All occurrences of a direction in the cone at `vertex`.

    Returns one (corner, offset, position) triple per sector, in
    counterclockwise order starting from the canonical reference corner.
    `offset` is the angle from the corner's first side to the ray and
    `position` the absolute angle within the cone.
    """
    d = direction / abs(direction)
    cyc = surface.vertex_corners[vertex]
    total = surface.cone_angles[vertex]
    t0, c0 = cyc[0]
    ref = surface.slot_vector(t0, c0)
    psi = math.atan2(_cross(ref, d), (ref.real * d.real + ref.imag * d.imag))
    if psi < 0:
        psi += 2 * math.pi
    copies = []
    n = round(total / (2 * math.pi))
    for s in range(n):
        alpha = psi + 2 * math.pi * s
        # locate the corner whose angular span contains alpha
        for corner in cyc:
            start = surface.corner_cumulative_angle[corner]
            span = surface.corner_angle[corner]
            if start - ANG_EPS <= alpha < start + span - ANG_EPS:
                copies.append((corner, alpha - start, alpha))
                break
        else:
            # alpha == total (wrap): belongs to the first corner
            copies.append((cyc[0], 0.0, alpha % total))
    return copies


def _rotate(z: complex, phi: float) -> complex:
    c, s = math.cos(phi), math.sin(phi)
    return complex(c * z.real - s * z.imag, s * z.real + c * z.imag)


# -- tracing -------------------------------------------------------------------

def trace_separatrix(surface: TranslationSurface, vertex: int, sector: int,
                     direction: complex, stop_set, max_length: float) -> SeparatrixTrace:
    """Develop a ray from a cone point until it crosses the interior of a
    stop-set edge, arrives at a singularity, or exceeds `max_length`.

    A ray leaving exactly along an incident edge terminates at that
    edge's far endpoint (singularity stop).  A ray passing through a
    triangulation vertex mid-development raises
    :class:`RayThroughVertexAmbiguity`; sampling callers treat this as a
    measure-zero rejection.
    """
    d = direction / abs(direction)
    stop_set = frozenset(stop_set)
    copies = angular_copies(surface, vertex, direction)
    if not 0 <= sector < len(copies):
        raise ValueError(f"sector {sector} out of range for vertex {vertex}")
    (tri, corner), offset, _ = copies[sector]

    span = surface.corner_angle[(tri, corner)]
    if offset <= ANG_EPS or offset >= span - ANG_EPS:
        # along an incident edge; terminate at its far endpoint
        if offset <= ANG_EPS:
            slot = corner
            far = (tri, (corner + 1) % 3)
        else:
            slot = (corner - 1) % 3
            far = (tri, slot)
        edge = ref_index(surface.gluing.triangles[tri][slot])
        elen = abs(surface.edge_vectors[edge])
        if elen > max_length:
            return SeparatrixTrace(vertex, sector, d, "budget", max_length)
        return SeparatrixTrace(vertex, sector, d, "singularity", elen,
                               hit_vertex=surface.corner_vertex[far],
                               crossing_record=((tri, None, None),))

    if max_length <= 0:
        return SeparatrixTrace(vertex, sector, d, "budget", 0.0)

    # start inside corner (tri, corner); develop with the cone point at 0
    ray = _rotate(surface.slot_vector(tri, corner), offset)
    ray /= abs(ray)
    pos = {corner: 0j}
    pos[(corner + 1) % 3] = surface.slot_vector(tri, corner)
    pos[(corner + 2) % 3] = pos[(corner + 1) % 3] + surface.slot_vector(tri, (corner + 1) % 3)
    cur_tri = tri
    cur_pos = [pos[0], pos[1], pos[2]]
    p = 0j
    entry_slot = None  # entered through a corner
    record = []
    travelled = 0.0
    g = surface.gluing
    max_steps = 10000 + 100 * g.num_triangles

    for _ in range(max_steps):
        # find exit among slots other than entry_slot
        best = None
        for s in range(3):
            if s == entry_slot:
                continue
            a = cur_pos[s]
            b = cur_pos[(s + 1) % 3]
            e = b - a
            denom = _cross(ray, e)
            if denom == 0.0:
                continue
            t = _cross(a - p, e) / denom
            u = _cross(a - p, ray) / denom
            if t <= 1e-14 * (abs(p) + 1):
                continue
            if -0.1 <= u <= 1.1 and (best is None or t < best[0]):
                best = (t, u, s, a, b)
        if best is None:
            raise RayThroughVertexAmbiguity(
                f"no transverse exit from triangle {cur_tri}")
        t, u, s, a, b = best
        elen = abs(b - a)
        if min(abs(u), abs(1 - u)) * elen < VERTEX_RTOL * elen or not (0 < u < 1):
            raise RayThroughVertexAmbiguity(
                f"ray from vertex {vertex} passes through a vertex of "
                f"triangle {cur_tri}")
        hit_len = travelled + t
        if hit_len > max_length:
            record.append((cur_tri, _slot_edge(surface, cur_tri, entry_slot), None))
            return SeparatrixTrace(vertex, sector, d, "budget", max_length,
                                   crossing_record=tuple(record))
        edge = ref_index(g.triangles[cur_tri][s])
        record.append((cur_tri, _slot_edge(surface, cur_tri, entry_slot), edge))
        if edge in stop_set:
            sign = ref_sign(g.triangles[cur_tri][s])
            param = u if sign > 0 else 1.0 - u
            return SeparatrixTrace(vertex, sector, d, "marked-interior", hit_len,
                                   hit_edge=edge, hit_param=param,
                                   crossing_record=tuple(record))
        # unfold into the neighbor
        travelled = hit_len
        p = p + t * ray
        t2, s2 = g.neighbor[(cur_tri, s)]
        pstart, pend = a, b
        new_pos = [None, None, None]
        new_pos[s2] = pend
        new_pos[(s2 + 1) % 3] = pstart
        new_pos[(s2 + 2) % 3] = pstart + surface.slot_vector(t2, (s2 + 1) % 3)
        cur_tri, cur_pos, entry_slot = t2, new_pos, s2
    raise RayThroughVertexAmbiguity("development exceeded step bound")


def _slot_edge(surface: TranslationSurface, tri: int, slot: int | None):
    if slot is None:
        return None
    return ref_index(surface.gluing.triangles[tri][slot])


# -- enumeration ---------------------------------------------------------------

def _seg_dist(a: complex, b: complex) -> float:
    """Distance from the origin to the segment [a, b]."""
    e = b - a
    ee = e.real * e.real + e.imag * e.imag
    if ee == 0.0:
        return abs(a)
    t = -(a.real * e.real + a.imag * e.imag) / ee
    t = min(1.0, max(0.0, t))
    return abs(a + t * e)


class _MeshTables:
    """Precompiled combinatorics shared by enumeration calls."""

    def __init__(self, surface: TranslationSurface):
        g = surface.gluing
        self.surface = surface
        self.triangles = g.triangles
        self.neighbor = g.neighbor
        self.num_edges = g.num_edges
        self.corner_vertex = surface.corner_vertex
        boundary_cols = []
        for t in g.triangles:
            col = [0] * g.num_edges
            for r in t:
                col[ref_index(r)] += ref_sign(r)
            boundary_cols.append(col)
        self.boundary_cols = boundary_cols
        self.hnf = exact.hermite_normal_form(boundary_cols, g.num_edges)
        self.null_edge = [
            all(x == 0 for x in exact.reduce_mod_lattice(
                [1 if i == e else 0 for i in range(g.num_edges)], self.hnf))
            for e in range(g.num_edges)
        ]


_TABLE_CACHE: dict = {}


def _tables(surface: TranslationSurface) -> _MeshTables:
    key = id(surface)
    hit = _TABLE_CACHE.get(key)
    if hit is None or hit.surface is not surface:
        hit = _MeshTables(surface)
        _TABLE_CACHE.clear() if len(_TABLE_CACHE) > 64 else None
        _TABLE_CACHE[key] = hit
    return hit


def _chain_for_path_fast(surface, t0, c0, path):
    """Edge chain homotopic to a developed segment.

    `path` is the sequence of (triangle, entry slot) traversed; the
    segment starts at corner c0 of t0 and ends at the apex corner of the
    last triangle.  The chain walks the 1-skeleton through shared
    corners, which is homotopic to the segment inside the developed
    disk.  Returns (chain list, end corner).
    """
    g = surface.gluing
    chain = [0] * g.num_edges

    def add(tri, slot, rev=False):
        r = g.triangles[tri][slot]
        chain[ref_index(r)] += -ref_sign(r) if rev else ref_sign(r)

    add(t0, c0)
    cur_is_start = True
    n = len(path)
    for i in range(n):
        tri, entry_slot = path[i]
        cur = (entry_slot + 1) % 3 if cur_is_start else entry_slot
        if i == n - 1:
            apex = (entry_slot + 2) % 3
            if cur == entry_slot:
                add(tri, (entry_slot + 2) % 3, rev=True)
            else:
                add(tri, (entry_slot + 1) % 3)
            return chain, (tri, apex)
        nxt = path[i + 1]
        exit_slot = None
        for s in range(3):
            if s != entry_slot and g.neighbor[(tri, s)] == nxt:
                exit_slot = s
                break
        shared = entry_slot if exit_slot == (entry_slot + 2) % 3 else (entry_slot + 1) % 3
        if cur != shared:
            add(tri, entry_slot, rev=(cur == (entry_slot + 1) % 3))
        cur_is_start = (shared == exit_slot)
    raise AssertionError("empty path")


def _canonical_chain_key(chain, hnf):
    red = exact.reduce_mod_lattice(chain, hnf)
    neg = tuple(-x for x in red)
    negred = exact.reduce_mod_lattice(neg, hnf)
    return max(red, negred)


def _canonical_orientation(hol: complex) -> bool:
    """True if the holonomy already satisfies Re > 0, or Re == 0 and Im > 0."""
    if hol.real > 0:
        return True
    if hol.real < 0:
        return False
    return hol.imag > 0


def enumerate_saddle_connections(surface: TranslationSurface, L: float):
    """All saddle connections of length <= L, one per canonical orientation.

    Deduplication is by (endpoints, relative homology class); holonomy
    agreement across duplicate discoveries is asserted to 1e-9 relative.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    tables = _tables(surface)
    g = surface.gluing
    found: dict = {}

    def report(hol, sv, ev, record, chain, edge_id, source):
        if not _canonical_orientation(hol):
            # flip to the canonical orientation; keep the replay data of
            # the original traversal (chords are orientation-free)
            hol = -hol
            sv, ev = ev, sv
            chain = [-x for x in chain]
            record = tuple((t, x, e) for (t, e, x) in reversed(record))
        key = (frozenset((sv, ev)), _canonical_chain_key(chain, tables.hnf))
        prev = found.get(key)
        if prev is not None:
            assert abs(prev.holonomy - hol) <= 1e-9 * max(1.0, abs(hol)), \
                "holonomy mismatch within one homology class"
            return
        found[key] = SaddleConnection(hol, sv, ev, tuple(record), tuple(chain),
                                      edge_id, source)

    # edges are saddle connections
    for e in range(g.num_edges):
        z = surface.edge_vectors[e]
        if abs(z) <= L:
            (t1, s1, sg1), (t2, s2, sg2) = g.occurrences[e]
            t, s = (t1, s1) if sg1 > 0 else (t2, s2)
            sv = surface.corner_vertex[(t, s)]
            ev = surface.corner_vertex[(t, (s + 1) % 3)]
            chain = [0] * g.num_edges
            chain[e] = 1
            report(z, sv, ev, (), chain, e, None)

    # wedge unfolding from every corner
    for t0 in range(g.num_triangles):
        for c0 in range(3):
            _search_wedge(surface, tables, t0, c0, L, report)

    conns = sorted(found.values(),
                   key=lambda c: (c.length, c.holonomy.real, c.holonomy.imag,
                                  c.start_vertex, c.end_vertex, c.chain))
    return conns


def _search_wedge(surface, tables, t0, c0, L, report, exclude_dir=None,
                  first_only=False):
    """Depth-first unfolding of the wedge at corner (t0, c0).

    Reports each triangulation vertex strictly visible inside the wedge
    within distance L.  Returns True if `first_only` and a connection was
    reported.
    """
    g = surface.gluing
    A = surface.slot_vector(t0, c0)
    B = A + surface.slot_vector(t0, (c0 + 1) % 3)
    if _seg_dist(A, B) > L:
        return False
    sv = surface.corner_vertex[(t0, c0)]
    # state: (exit tri, exit slot, P_start, P_end, lo, hi, path tuple)
    stack = [(t0, (c0 + 1) % 3, A, B, A, B, ())]
    while stack:
        tri, slot, ps, pe, lo, hi, path = stack.pop()
        t2, s2 = g.neighbor[(tri, slot)]
        apex = ps + surface.slot_vector(t2, (s2 + 1) % 3)
        path2 = path + ((t2, s2),)
        if (_cross(lo, apex) > 0 and _cross(apex, hi) > 0 and abs(apex) <= L):
            chain, end_corner = _chain_for_path_fast(surface, t0, c0, path2)
            if exclude_dir is None or abs(_cross(apex, exclude_dir)) > 1e-9 * abs(apex):
                ev = surface.corner_vertex[end_corner]
                record = _record_for_path(surface, t0, path2)
                report(apex, sv, ev, record, chain, None, (t0, c0, path2))
                if first_only:
                    return True
        for (u, v, child_slot) in (((ps, apex, (s2 + 1) % 3)),
                                   ((apex, pe, (s2 + 2) % 3))):
            cu = _cross(u, v)
            if cu > 0:
                a2, b2 = u, v
            elif cu < 0:
                a2, b2 = v, u
            else:
                continue
            lo2 = a2 if _cross(lo, a2) > 0 else lo
            hi2 = b2 if _cross(b2, hi) > 0 else hi
            if _cross(lo2, hi2) <= 0:
                continue
            if _seg_dist(u, v) > L:
                continue
            stack.append((t2, child_slot, u, v, lo2, hi2, path2))
    return False


def _record_for_path(surface, t0, path):
    g = surface.gluing
    record = []
    prev_edge = None
    entry = None
    cur = t0
    for (tri, s) in path:
        # exit edge of cur is the edge shared with (tri, s)
        edge = ref_index(g.triangles[tri][s])
        record.append((cur, prev_edge, edge))
        prev_edge = edge
        cur = tri
    record.append((cur, prev_edge, None))
    return tuple(record)


def shortest_saddle_connection(surface: TranslationSurface) -> SaddleConnection:
    """Globally shortest saddle connection; ties broken by holonomy."""
    L = min(abs(z) for z in surface.edge_vectors)
    conns = enumerate_saddle_connections(surface, L * (1 + 1e-12))
    return min(conns, key=lambda c: (c.length, c.holonomy.real, c.holonomy.imag))


# -- chords and independence ---------------------------------------------------

def connection_chords(surface: TranslationSurface, conn: SaddleConnection):
    """Per-triangle chords of a crossing connection, in local triangle frames.

    Returns a list of (triangle, p_in, p_out).  Edge-type connections have
    no chords (their interior lies on the 1-skeleton).
    """
    if conn.edge_id is not None or conn._source is None:
        if conn.edge_id is None:
            raise NotOnSurface("connection lacks replay data")
        return []
    t0, c0, path = conn._source
    # develop with corner (t0, c0) at the origin; the path segments are
    # the unfolded entry edges, traversed in parent order (start, end)
    pos0 = list(surface.corner_positions(t0))
    shift = -pos0[c0]
    seq = [(t0, [q + shift for q in pos0])]
    p_start = seq[0][1][(c0 + 1) % 3]
    p_end = seq[0][1][(c0 + 2) % 3]
    for i, (tri, s) in enumerate(path):
        pos = [None, None, None]
        pos[s] = p_end
        pos[(s + 1) % 3] = p_start
        pos[(s + 2) % 3] = p_start + surface.slot_vector(tri, (s + 1) % 3)
        seq.append((tri, pos))
        if i + 1 < len(path):
            # next entry edge of this triangle: the slot leading onward
            nxt = path[i + 1]
            g = surface.gluing
            for s2 in range(3):
                if s2 != s and g.neighbor[(tri, s2)] == nxt:
                    p_start, p_end = pos[s2], pos[(s2 + 1) % 3]
                    break
    target = seq[-1][1][(path[-1][1] + 2) % 3]
    # crossing points: intersect [0, target] with each entry edge
    points = [0j]
    for i, (tri, s) in enumerate(path):
        pos = seq[i + 1][1]
        a = pos[(s + 1) % 3]
        b = pos[s]
        e = b - a
        denom = _cross(target, e)
        if denom == 0:
            raise NotOnSurface("degenerate crossing")
        t = _cross(a, e) / denom
        points.append(t * target)
    points.append(target)
    out = []
    for i, (tri, pos) in enumerate(seq):
        delta = surface.corner_positions(tri)[0] - pos[0]
        out.append((tri, points[i] + delta, points[i + 1] + delta))
    return out


def _open_segments_intersect(p1, p2, q1, q2, tol) -> bool:
    d1 = _cross(p2 - p1, q1 - p1)
    d2 = _cross(p2 - p1, q2 - p1)
    d3 = _cross(q2 - q1, p1 - q1)
    d4 = _cross(q2 - q1, p2 - q1)
    if max(abs(d1), abs(d2)) < tol and max(abs(d3), abs(d4)) < tol:
        # collinear: overlap of positive length?
        e = p2 - p1
        ee = abs(e) ** 2
        t1 = ((q1 - p1).real * e.real + (q1 - p1).imag * e.imag) / ee
        t2 = ((q2 - p1).real * e.real + (q2 - p1).imag * e.imag) / ee
        lo, hi = min(t1, t2), max(t1, t2)
        return min(hi, 1.0) - max(lo, 0.0) > 1e-12
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def interiors_disjoint(surface: TranslationSurface, c1: SaddleConnection,
                       c2: SaddleConnection) -> bool:
    """True iff the open interiors of two saddle connections are disjoint."""
    if c1.edge_id is not None and c2.edge_id is not None:
        return c1.edge_id != c2.edge_id
    if c1.edge_id is not None:
        return c1.edge_id not in c2.crossed_edges()
    if c2.edge_id is not None:
        return c2.edge_id not in c1.crossed_edges()
    ch1 = connection_chords(surface, c1)
    ch2 = connection_chords(surface, c2)
    by_tri: dict = {}
    for tri, a, b in ch1:
        by_tri.setdefault(tri, []).append((a, b))
    scale = surface.diameter_proxy()
    tol = 1e-12 * scale * scale
    for tri, a, b in ch2:
        for (p, q) in by_tri.get(tri, ()):
            if _open_segments_intersect(p, q, a, b, tol):
                return False
    return True


def validate_record(surface: TranslationSurface, conn: SaddleConnection):
    g = surface.gluing
    rec = conn.crossing_record
    if conn.edge_id is not None:
        if conn.edge_id >= g.num_edges:
            raise NotOnSurface(f"edge {conn.edge_id} not on surface")
        return
    for i, (tri, entry, exit_) in enumerate(rec):
        if not 0 <= tri < g.num_triangles:
            raise NotOnSurface(f"triangle {tri} not on surface")
        edges = {ref_index(r) for r in g.triangles[tri]}
        for e in (entry, exit_):
            if e is not None and e not in edges:
                raise NotOnSurface(f"edge {e} not a side of triangle {tri}")
        if i + 1 < len(rec):
            nxt_tri, nxt_entry, _ = rec[i + 1]
            if exit_ is None or nxt_entry != exit_:
                raise NotOnSurface("inconsistent crossing record chain")


def is_independent_family(surface: TranslationSurface, family) -> bool:
    """Interiors pairwise disjoint and classes independent in H1(X, Sigma; R).

    The rank computation is exact (rational elimination on integer
    chains modulo triangle boundaries).
    """
    family = list(family)
    for conn in family:
        validate_record(surface, conn)
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if not interiors_disjoint(surface, family[i], family[j]):
                return False
    return chains_independent(surface, [c.chain for c in family])


def chains_independent(surface: TranslationSurface, chains) -> bool:
    tables = _tables(surface)
    boundary = tables.boundary_cols
    base_rank = exact.rank(boundary)
    full = list(boundary) + [list(c) for c in chains]
    return exact.rank(full) == base_rank + len(list(chains))


def chain_is_null(surface: TranslationSurface, chain) -> bool:
    tables = _tables(surface)
    return all(x == 0 for x in exact.reduce_mod_lattice(chain, tables.hnf))
