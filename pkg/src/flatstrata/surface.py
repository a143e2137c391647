"""Triangulated translation surfaces with complex edge vectors.

A surface is a trivalent gluing of oriented Euclidean triangles.  Each
unsigned edge stores one complex vector; a triangle lists its three sides
counterclockwise as signed references (positive = traversal agrees with
the stored vector).  Gluing two triangles along an edge identifies sides
carrying the same vector, so transition maps are translations and the
plane 1-form dz descends to the glued surface.

Signed references are written ±(i+1) for the 0-based unsigned edge i,
matching the on-disk JSON format "flatstrata-surface/1".
"""

import cmath
import json
import math

from .errors import (
    BadGluing,
    DegenerateTriangle,
    EquationViolation,
    SingularMatrix,
)

CLOSURE_RTOL = 1e-9       # per-triangle closure, relative to longest side
ANGLE_ATOL = 1e-7         # cone angle distance to the nearest multiple of 2*pi

FORMAT_TAG = "flatstrata-surface/1"


def ref_index(ref: int) -> int:
    return abs(ref) - 1


def ref_sign(ref: int) -> int:
    return 1 if ref > 0 else -1


class TriangleGluing:
    """Combinatorial gluing: a tuple of counterclockwise signed triples.

    Every unsigned edge index must appear exactly twice over all triples,
    once with each sign (an edge may appear twice in one triple).  The
    dual graph must be connected.
    """

    def __init__(self, triangles):
        tris = tuple(tuple(int(r) for r in t) for t in triangles)
        for t in tris:
            if len(t) != 3 or any(r == 0 for r in t):
                raise BadGluing(f"bad triple {t}: need three nonzero signed refs")
        self.triangles = tris
        self.num_triangles = len(tris)
        occ: dict[int, list[tuple[int, int, int]]] = {}
        for ti, t in enumerate(tris):
            for slot, r in enumerate(t):
                occ.setdefault(ref_index(r), []).append((ti, slot, ref_sign(r)))
        indices = sorted(occ)
        if indices != list(range(len(indices))):
            raise BadGluing("edge indices must be 0..E-1 without gaps")
        self.num_edges = len(indices)
        for e, lst in occ.items():
            if len(lst) != 2:
                raise BadGluing(f"edge {e + 1} appears {len(lst)} times, expected 2")
            if lst[0][2] + lst[1][2] != 0:
                raise BadGluing(f"edge {e + 1} glued with equal signs (non-orientable)")
        self.occurrences = {e: tuple(lst) for e, lst in occ.items()}
        # neighbor across each (triangle, slot)
        nbr = {}
        for e, ((t1, s1, _), (t2, s2, _)) in self.occurrences.items():
            nbr[(t1, s1)] = (t2, s2)
            nbr[(t2, s2)] = (t1, s1)
        self.neighbor = nbr
        self._check_connected()

    def _check_connected(self):
        if self.num_triangles == 0:
            raise BadGluing("empty gluing")
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for slot in range(3):
                t2, _ = self.neighbor[(t, slot)]
                if t2 not in seen:
                    seen.add(t2)
                    stack.append(t2)
        if len(seen) != self.num_triangles:
            raise BadGluing("gluing is not connected")

    def __eq__(self, other):
        return isinstance(other, TriangleGluing) and self.triangles == other.triangles

    def __hash__(self):
        return hash(self.triangles)

    def __repr__(self):
        return f"TriangleGluing({self.num_triangles} triangles, {self.num_edges} edges)"


def _signed_angle(a: complex, b: complex) -> float:
    """Counterclockwise angle from direction a to direction b, in (-pi, pi]."""
    return math.atan2(a.real * b.imag - a.imag * b.real,
                      a.real * b.real + a.imag * b.imag)


class TranslationSurface:
    """Immutable triangulated translation surface.

    Construction validates per-triangle closure, positive areas and the
    gluing structure; use :func:`build_surface` as the public entry point.
    Derived combinatorial tables (vertex classes, corner cycles, cone
    angles) are computed once here and shared by the geodesic machinery.
    """

    def __init__(self, gluing: TriangleGluing, edge_vectors, marked=()):
        vectors = tuple(complex(z) for z in edge_vectors)
        if len(vectors) != gluing.num_edges:
            raise BadGluing(
                f"{len(vectors)} edge vectors for {gluing.num_edges} edges")
        for z in vectors:
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise BadGluing("non-finite edge vector")
        marked = tuple(int(m) for m in marked)
        for m in marked:
            if not 0 <= m < gluing.num_edges:
                raise BadGluing(f"marked edge {m} out of range")
        self.gluing = gluing
        self.edge_vectors = vectors
        self.marked = marked
        self._validate_geometry()
        self._build_vertex_tables()

    # -- geometry -------------------------------------------------------

    def slot_vector(self, tri: int, slot: int) -> complex:
        r = self.gluing.triangles[tri][slot]
        z = self.edge_vectors[ref_index(r)]
        return z if r > 0 else -z

    def triangle_vectors(self, tri: int):
        return (self.slot_vector(tri, 0), self.slot_vector(tri, 1),
                self.slot_vector(tri, 2))

    def triangle_area(self, tri: int) -> float:
        v0, v1, _ = self.triangle_vectors(tri)
        return 0.5 * (v0.real * v1.imag - v0.imag * v1.real)

    def _validate_geometry(self):
        for t in range(self.gluing.num_triangles):
            v0, v1, v2 = self.triangle_vectors(t)
            scale = max(abs(v0), abs(v1), abs(v2))
            if scale == 0.0:
                raise DegenerateTriangle(t, 0.0)
            res = abs(v0 + v1 + v2)
            if res > CLOSURE_RTOL * scale:
                raise EquationViolation(t, res, CLOSURE_RTOL * scale)
            if self.triangle_area(t) <= 0.0:
                raise DegenerateTriangle(t, self.triangle_area(t))

    # -- vertex structure -------------------------------------------------

    def _build_vertex_tables(self):
        g = self.gluing
        nt = g.num_triangles
        # ccw successor of corner (t, c) around its vertex
        succ = {}
        for t in range(nt):
            for c in range(3):
                t2, s2 = g.neighbor[(t, (c - 1) % 3)]
                succ[(t, c)] = (t2, s2)
        corner_vertex = {}
        cycles = []
        for t in range(nt):
            for c in range(3):
                if (t, c) in corner_vertex:
                    continue
                # canonical start: the minimal corner of the cycle
                cyc = [(t, c)]
                cur = succ[(t, c)]
                while cur != (t, c):
                    cyc.append(cur)
                    cur = succ[cur]
                start = cyc.index(min(cyc))
                cyc = cyc[start:] + cyc[:start]
                vid = len(cycles)
                for corner in cyc:
                    corner_vertex[corner] = vid
                cycles.append(tuple(cyc))
        self.corner_vertex = corner_vertex
        self.vertex_corners = tuple(cycles)
        self.num_vertices = len(cycles)

        angles = {}
        for t in range(nt):
            vs = self.triangle_vectors(t)
            for c in range(3):
                a = _signed_angle(vs[c], -vs[(c - 1) % 3])
                if a <= 0:
                    a += 2 * math.pi
                angles[(t, c)] = a
        self.corner_angle = angles

        cone = []
        cumulative = {}
        for cyc in cycles:
            total = 0.0
            for corner in cyc:
                cumulative[corner] = total
                total += angles[corner]
            cone.append(total)
        self.cone_angles = tuple(cone)
        self.corner_cumulative_angle = cumulative

        for v, theta in enumerate(cone):
            k = round(theta / (2 * math.pi)) - 1
            if k < 0 or abs(theta - 2 * math.pi * (k + 1)) > ANGLE_ATOL * (k + 1):
                raise BadGluing(
                    f"cone angle {theta:.12f} at vertex {v} is not a positive "
                    f"multiple of 2*pi")

        euler = self.num_vertices - g.num_edges + g.num_triangles
        if euler % 2 != 0:
            raise BadGluing(f"odd Euler characteristic {euler}")
        self.genus = (2 - euler) // 2
        orders = tuple(round(theta / (2 * math.pi)) - 1 for theta in cone)
        if sum(orders) != 2 * self.genus - 2:
            raise BadGluing("cone angles inconsistent with Euler characteristic")
        self._orders = orders

    # -- queries ----------------------------------------------------------

    def area(self) -> float:
        return sum(self.triangle_area(t) for t in range(self.gluing.num_triangles))

    def vertex_order(self, v: int) -> int:
        return self._orders[v]

    def diameter_proxy(self) -> float:
        """Max edge length; used to scale tracing budgets and tolerances."""
        return max(abs(z) for z in self.edge_vectors)

    def corner_positions(self, tri: int, anchor: complex = 0j):
        v0, v1, _ = self.triangle_vectors(tri)
        return (anchor, anchor + v0, anchor + v0 + v1)

    def __repr__(self):
        sig = ",".join(str(k) for k in stratum_signature(self).orders)
        return (f"TranslationSurface(genus {self.genus}, stratum ({sig}), "
                f"{self.gluing.num_triangles} triangles)")


class StratumSignature:
    """Multiset of cone-point orders, sorted descending; order 0 is a marked
    regular point."""

    def __init__(self, orders):
        orders = tuple(sorted((int(k) for k in orders), reverse=True))
        if any(k < 0 for k in orders):
            raise ValueError("orders must be non-negative")
        if sum(orders) % 2 != 0:
            raise ValueError("order sum must be even")
        self.orders = orders
        self.genus = (sum(orders) + 2) // 2

    def __eq__(self, other):
        if isinstance(other, StratumSignature):
            return self.orders == other.orders
        return self.orders == tuple(sorted(other, reverse=True))

    def __hash__(self):
        return hash(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def __repr__(self):
        return f"H({','.join(str(k) for k in self.orders)})"


def build_surface(gluing, edge_vectors, marked=()) -> TranslationSurface:
    """Assemble and validate a translation surface from gluing data.

    `gluing` may be a TriangleGluing or a raw list of signed triples.
    """
    if not isinstance(gluing, TriangleGluing):
        gluing = TriangleGluing(gluing)
    return TranslationSurface(gluing, edge_vectors, marked)


def stratum_signature(surface: TranslationSurface) -> StratumSignature:
    """Cone-point orders of the surface, order = angle/(2*pi) - 1."""
    return StratumSignature(surface._orders)


def area(surface: TranslationSurface) -> float:
    return surface.area()


def transform(surface: TranslationSurface, g) -> TranslationSurface:
    """Apply a 2x2 real matrix (det > 0) or a complex factor to all edges."""
    if isinstance(g, complex) or isinstance(g, float) or isinstance(g, int):
        u = complex(g)
        if abs(u) == 0.0:
            raise SingularMatrix("zero complex factor")
        new = tuple(u * z for z in surface.edge_vectors)
    else:
        (a, b), (c, d) = g
        det = a * d - b * c
        if det <= 1e-15:
            raise SingularMatrix(f"determinant {det:.3e} is not positive")
        new = tuple(complex(a * z.real + b * z.imag, c * z.real + d * z.imag)
                    for z in surface.edge_vectors)
    return TranslationSurface(surface.gluing, new, surface.marked)


# -- serialization ------------------------------------------------------------

def to_json_dict(surface: TranslationSurface) -> dict:
    return {
        "format": FORMAT_TAG,
        "triangles": [list(t) for t in surface.gluing.triangles],
        "edge_vectors": [[z.real, z.imag] for z in surface.edge_vectors],
        "marked": [m + 1 for m in surface.marked],
    }


def from_json_dict(data: dict) -> TranslationSurface:
    if data.get("format") != FORMAT_TAG:
        raise BadGluing(f"unknown format tag {data.get('format')!r}")
    vectors = [complex(re, im) for re, im in data["edge_vectors"]]
    marked = [m - 1 for m in data.get("marked", [])]
    return build_surface(data["triangles"], vectors, marked)


def save_surface(surface: TranslationSurface, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(surface), fh)
        fh.write("\n")


def load_surface(path) -> TranslationSurface:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))


def rotation(theta: float) -> complex:
    return cmath.exp(1j * theta)
