"""Cylinder decompositions in a periodic direction.

Given a direction in which every separatrix closes up into a saddle
connection, the complement of the directional saddle connections is a
finite union of flat cylinders.  The borders are recovered by walking
prong-to-prong around each singularity (consecutive prongs of a cone are
exactly pi apart once every prong bounds a saddle connection), and each
bottom border is paired with its top border by a perpendicular probe
shot across the cylinder.
"""

import math
from dataclasses import dataclass

from .errors import NotPeriodic, RayThroughVertexAmbiguity
from .geodesics import SaddleConnection, _cross, angular_copies
from .surface import TranslationSurface, ref_index, ref_sign

SNAP_RTOL = 1e-9         # vertex arrival tolerance, relative to edge length
BUDGET_FACTOR = 1e3      # tracing budget, times the surface diameter proxy


@dataclass(frozen=True)
class Cylinder:
    width: float
    height: float
    bottom: tuple      # connection indices, cyclic order along the border
    top: tuple


@dataclass(frozen=True)
class CylinderDecomposition:
    direction: complex
    connections: tuple     # directional saddle connections
    cylinders: tuple       # of Cylinder

    def total_area(self) -> float:
        return sum(c.width * c.height for c in self.cylinders)

    def border_profile(self):
        """Canonical multiset describing the border combinatorics."""
        conn_len = [round(c.length, 9) for c in self.connections]
        out = []
        for cyl in self.cylinders:
            out.append((tuple(sorted(conn_len[i] for i in cyl.bottom)),
                        tuple(sorted(conn_len[i] for i in cyl.top))))
        return tuple(sorted(out))


def _trace_to_vertex(surface, vertex, corner, offset, direction, budget):
    """Directional separatrix expected to close up at a singularity.

    Follows the ray leaving `corner` at angle `offset` from the corner's
    first side.  Near-vertex crossings snap to an exact arrival.  Returns
    (length, end corner (tri, c), path of (tri, entry slot)).
    """
    tri, c = corner
    span = surface.corner_angle[(tri, c)]
    if offset <= 1e-12 or offset >= span - 1e-12:
        # along an incident edge
        if offset <= 1e-12:
            slot = c
            far = (tri, (c + 1) % 3)
            ln = abs(surface.slot_vector(tri, slot))
        else:
            slot = (c - 1) % 3
            far = (tri, slot)
            ln = abs(surface.slot_vector(tri, slot))
        return ln, far, (), ref_index(surface.gluing.triangles[tri][slot])

    g = surface.gluing
    pos = [None, None, None]
    pos[c] = 0j
    pos[(c + 1) % 3] = surface.slot_vector(tri, c)
    pos[(c + 2) % 3] = pos[(c + 1) % 3] + surface.slot_vector(tri, (c + 1) % 3)
    ray = direction / abs(direction)
    p = 0j
    cur_tri, cur_pos, entry_slot = tri, pos, None
    path = []
    travelled = 0.0
    while travelled <= budget:
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
            raise RayThroughVertexAmbiguity("no transverse exit while closing up")
        t, u, s, a, b = best
        if u < SNAP_RTOL:
            return travelled + abs(a - p), (cur_tri, s), tuple(path), None
        if u > 1 - SNAP_RTOL:
            return travelled + abs(b - p), (cur_tri, (s + 1) % 3), tuple(path), None
        travelled += t
        p = p + t * ray
        t2, s2 = g.neighbor[(cur_tri, s)]
        new_pos = [None, None, None]
        new_pos[s2] = b
        new_pos[(s2 + 1) % 3] = a
        new_pos[(s2 + 2) % 3] = a + surface.slot_vector(t2, (s2 + 1) % 3)
        path.append((t2, s2))
        cur_tri, cur_pos, entry_slot = t2, new_pos, s2
    raise NotPeriodic(
        f"separatrix did not close within budget {budget:.3g}")


def _arrival_position(surface, corner, back_dir):
    """Angular position of a direction pointing into `corner`'s wedge."""
    tri, c = corner
    ref = surface.slot_vector(tri, c)
    phi = math.atan2(_cross(ref, back_dir),
                     ref.real * back_dir.real + ref.imag * back_dir.imag)
    if phi < 0:
        phi += 2 * math.pi
    span = surface.corner_angle[(tri, c)]
    if phi > span + 1e-9:
        raise RayThroughVertexAmbiguity("arrival direction outside its corner")
    return surface.corner_cumulative_angle[(tri, c)] + min(phi, span)


def cylinder_decomposition(surface: TranslationSurface,
                           direction: complex) -> CylinderDecomposition:
    """Decompose the surface into cylinders parallel to `direction`.

    Raises NotPeriodic when a separatrix fails to close within the
    budget of 1e3 times the diameter proxy.
    """
    if direction == 0:
        raise ValueError("direction must be nonzero")
    d = complex(direction) / abs(complex(direction))
    budget = BUDGET_FACTOR * surface.diameter_proxy()
    total_angle = {v: surface.cone_angles[v] for v in range(surface.num_vertices)}

    plus_prongs = {}   # (vertex, alpha) -> prong index
    prong_list = []    # (vertex, corner, offset, alpha)
    for v in range(surface.num_vertices):
        for corner, offset, alpha in angular_copies(surface, v, d):
            plus_prongs[(v, alpha)] = len(prong_list)
            prong_list.append((v, corner, offset, alpha))

    def match_plus(v, alpha):
        best = None
        for (vv, aa), idx in plus_prongs.items():
            if vv != v:
                continue
            diff = abs((aa - alpha + math.pi) % (2 * math.pi) - math.pi)
            # compare as cone positions modulo the total angle
            diff2 = min(abs(aa - alpha), total_angle[v] - abs(aa - alpha))
            if diff2 < 1e-8 and (best is None or diff2 < best[0]):
                best = (diff2, idx)
        if best is None:
            raise RayThroughVertexAmbiguity(
                f"no outgoing prong at vertex {v} position {alpha:.6f}")
        return best[1]

    # trace every outgoing prong to obtain the directional connections
    connections = []
    arrival = []   # per prong: (end vertex, arrival alpha of the reversed ray)
    for (v, corner, offset, alpha) in prong_list:
        ln, end_corner, path, edge_id = _trace_to_vertex(
            surface, v, corner, offset, d, budget)
        ev = surface.corner_vertex[end_corner]
        if edge_id is not None:
            # ran along an edge: reversed ray at the far corner
            tri, cc = end_corner
            back = -d
            alpha_rev = _arrival_position(surface, end_corner, back)
            record = ()
        else:
            alpha_rev = _arrival_position(surface, end_corner, -d)
            record = tuple(path)
        chain = ()
        connections.append(SaddleConnection(ln * d, v, ev, record, chain,
                                            edge_id, (v, corner, offset, path)))
        arrival.append((ev, alpha_rev))

    n = len(prong_list)

    def successor(i, up: bool):
        # Rotating the reversed arrival prong clockwise by pi sweeps the
        # upper half-disk at the vertex, so the bottom border of the
        # cylinder above continues at alpha_rev - pi.
        ev, alpha_rev = arrival[i]
        target = alpha_rev + (-math.pi if up else math.pi)
        target %= total_angle[ev]
        return match_plus(ev, target)

    def orbits(up: bool):
        seen = [False] * n
        cycles = []
        for i in range(n):
            if seen[i]:
                continue
            cyc = []
            j = i
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = successor(j, up)
            cycles.append(tuple(cyc))
        return cycles

    bottom_cycles = orbits(True)    # borders seen from above (cylinder above)
    top_cycles = orbits(False)

    # pair bottom cycles with top cycles by probing across the cylinder
    chord_map = _directional_chords(surface, connections)
    cylinders = []
    used_top = set()
    top_of = {}
    for ci, cyc in enumerate(top_cycles):
        for i in cyc:
            top_of[i] = ci
    for cyc in bottom_cycles:
        i0 = cyc[0]
        hit_conn = height = None
        last_err = None
        # the probe foot is measure-zero sensitive (it can run into a
        # vertex on symmetric surfaces); retry at several offsets
        for frac in (0.5387390813, 0.6180339887, 0.2938926261, 0.4142135624):
            try:
                hit_conn, height = _probe(surface, connections[i0], d,
                                          chord_map, budget, frac)
                break
            except RayThroughVertexAmbiguity as err:
                last_err = err
        if hit_conn is None:
            raise last_err
        ti = top_of[hit_conn]
        if ti in used_top:
            raise NotPeriodic("probe landed on an already-paired border")
        used_top.add(ti)
        width = sum(connections[i].length for i in cyc)
        wtop = sum(connections[i].length for i in top_cycles[ti])
        if abs(width - wtop) > 1e-6 * max(width, wtop):
            raise NotPeriodic("border lengths of a cylinder disagree")
        cylinders.append(Cylinder(width, height, cyc, top_cycles[ti]))
    return CylinderDecomposition(d, tuple(connections), tuple(cylinders))


def _directional_chords(surface, connections):
    """Per-triangle chords of the directional connections, plus the set of
    edge ids that are directional connections themselves."""
    by_tri: dict = {}
    edge_conn: dict = {}
    for idx, conn in enumerate(connections):
        if conn.edge_id is not None:
            edge_conn[conn.edge_id] = idx
            continue
        v, corner, offset, path = conn._source
        chords = _replay_chords(surface, conn)
        for tri, a, b in chords:
            by_tri.setdefault(tri, []).append((idx, a, b))
    return by_tri, edge_conn


def _replay_chords(surface, conn):
    from .geodesics import connection_chords
    return connection_chords(surface, conn)


def _probe(surface, conn, d, chord_map, budget, frac=0.5387390813):
    """Shoot i*d from a point of `conn`; returns the first directional
    connection crossed and the perpendicular distance to it."""
    by_tri, edge_conn = chord_map
    probe_dir = d * 1j
    # starting triangle and local point at arclength fraction `frac`
    if conn.edge_id is not None:
        e = conn.edge_id
        (t1, s1, sg1), (t2, s2, sg2) = surface.gluing.occurrences[e]
        tri, s = (t1, s1) if sg1 > 0 else (t2, s2)
        pos = surface.corner_positions(tri)
        p = pos[s] + frac * (pos[(s + 1) % 3] - pos[s])
    else:
        chords = _replay_chords(surface, conn)
        total = sum(abs(b - a) for _, a, b in chords)
        goal = frac * total
        acc = 0.0
        tri = p = None
        for t, a, b in chords:
            seg = abs(b - a)
            if acc + seg >= goal:
                p = a + (goal - acc) / seg * (b - a)
                tri = t
                break
            acc += seg
    # develop forward
    g = surface.gluing
    cur_tri = tri
    cur_pos = list(surface.corner_positions(tri))
    cur_p = p
    travelled = 0.0
    entry_slot = None
    while travelled <= budget:
        # chord hits inside the current triangle
        best = None
        for (idx, a, b) in by_tri.get(cur_tri, ()):
            # shift chord into the current developed frame
            delta = cur_pos[0] - surface.corner_positions(cur_tri)[0]
            aa, bb = a + delta, b + delta
            e = bb - aa
            denom = _cross(probe_dir, e)
            if denom == 0.0:
                continue
            t = _cross(aa - cur_p, e) / denom
            u = _cross(aa - cur_p, probe_dir) / denom
            if t > 1e-9 and -1e-9 <= u <= 1 + 1e-9:
                if best is None or t < best[0]:
                    best = (t, idx)
        exit_best = None
        for s in range(3):
            if s == entry_slot:
                continue
            a = cur_pos[s]
            b = cur_pos[(s + 1) % 3]
            e = b - a
            denom = _cross(probe_dir, e)
            if denom == 0.0:
                continue
            t = _cross(a - cur_p, e) / denom
            u = _cross(a - cur_p, probe_dir) / denom
            if t <= 1e-12 * (abs(cur_p) + 1):
                continue
            if -0.01 <= u <= 1.01 and (exit_best is None or t < exit_best[0]):
                exit_best = (t, u, s, a, b)
        if best is not None and (exit_best is None or best[0] <= exit_best[0] + 1e-12):
            return best[1], travelled + best[0]
        if exit_best is None:
            raise RayThroughVertexAmbiguity("probe found no exit")
        t, u, s, a, b = exit_best
        if min(abs(u), abs(1 - u)) < 1e-9:
            raise RayThroughVertexAmbiguity("probe ran into a vertex")
        edge = ref_index(g.triangles[cur_tri][s])
        if edge in edge_conn:
            return edge_conn[edge], travelled + t
        travelled += t
        cur_p = cur_p + t * probe_dir
        t2, s2 = g.neighbor[(cur_tri, s)]
        new_pos = [None, None, None]
        new_pos[s2] = b
        new_pos[(s2 + 1) % 3] = a
        new_pos[(s2 + 2) % 3] = a + surface.slot_vector(t2, (s2 + 1) % 3)
        cur_tri, cur_pos, entry_slot = t2, new_pos, s2
    raise NotPeriodic("probe exceeded budget")


def is_stable(dec: CylinderDecomposition) -> bool:
    """Stable iff every directional connection is a loop at one zero."""
    return all(c.start_vertex == c.end_vertex for c in dec.connections)
