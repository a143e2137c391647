"""Canonical triangulations from vertical separatrices and marked edges.

Given a surface whose marked edges form an independent family, such that
no marked edge is vertical and every vertical separatrix first crosses a
marked interior (the generic situation), the surface carries a unique
triangulation: over each side of each marked edge, the incoming vertical
rays are organized into a binary subdivision whose triangles have their
apexes at the ray sources.  The dual graph decomposes into one rooted
tree per (marked edge, side), and a canonical numbering of the edges
makes the whole construction reproducible.

The inequality certificate (horizontal ordering of each triangle, its
orientation, and the height comparisons inside each tree polygon) cuts
out the chart domain on which `reconstruct` inverts the construction.
"""

import math
from dataclasses import dataclass, field

from .errors import MarkedDependent, NotGeneric, DomainViolation
from .geodesics import angular_copies, chains_independent, trace_separatrix, _cross
from .surface import (
    TranslationSurface,
    TriangleGluing,
    build_surface,
    ref_index,
    ref_sign,
)

TIE_RTOL = 1e-12        # equal-minimum ray heights, relative to diameter
KEY_ATOL = 1e-8         # angular tolerance when matching edge occurrences


@dataclass(frozen=True)
class Tree:
    """Rooted tree of triangles over one side of a marked edge."""

    marked: int            # marked edge number (0-based)
    side: int              # +1 upper, -1 lower
    root: int | None       # root triangle id, None for an empty tree
    triangles: tuple       # triangle ids, BFS order from the root
    parent_edge: dict      # triangle -> edge number of its base
    children: dict         # triangle -> tuple of (edge number, child triangle)
    tree_edges: tuple      # edge numbers internal to this tree


@dataclass(frozen=True)
class AdmissibleGraphFamily:
    gluing: TriangleGluing
    m: int
    trees: tuple           # 2m trees, ordered (1,+), (1,-), (2,+), ...
    tree_of_triangle: tuple

    def rootward_triangle(self, edge: int):
        """Parent triangle of a tree edge; None for non-tree edges."""
        for tree in self.trees:
            for tri, kids in tree.children.items():
                for e, _child in kids:
                    if e == edge:
                        return tri
        return None

    def base_slot(self, tri: int) -> int:
        tree = self.trees[self.tree_of_triangle[tri]]
        base = tree.parent_edge[tri]
        for s, r in enumerate(self.gluing.triangles[tri]):
            if ref_index(r) == base:
                return s
        raise AssertionError("base edge missing from its triangle")


@dataclass(frozen=True)
class CompatibleNumbering:
    m: int
    order: tuple   # numbering[k] = 1-based number of edge k (identity here)


@dataclass(frozen=True)
class CertificateItem:
    kind: str          # "HOR" | "AREA" | "TREE_STRICT" | "TREE_WEAK"
    triangle: int
    base: int          # edge number (0-based) of z_{i1}
    other: object      # edge number for HOR/AREA; chain tuple for TREE
    margin: float


@dataclass(frozen=True)
class DomainCertificate:
    items: tuple

    def passes(self) -> bool:
        for it in self.items:
            if it.kind == "TREE_WEAK":
                if it.margin < 0:
                    return False
            elif it.margin <= 0:
                return False
        return True

    def min_margin(self) -> float:
        return min(it.margin for it in self.items)


@dataclass(frozen=True)
class SpecialTriangulation:
    surface: TranslationSurface
    family: AdmissibleGraphFamily
    numbering: CompatibleNumbering

    def __iter__(self):
        return iter((self.surface, self.family, self.numbering))


# -- genericity ----------------------------------------------------------------

def _vertical_rays(surface: TranslationSurface, marked):
    """Trace every vertical separatrix to its first marked crossing.

    Returns {(marked edge, side): [(t_lr, height, source vertex, alpha)]}
    with feet parameters measured left to right, or raises NotGeneric.
    Side +1 collects downward rays (hitting from above).
    """
    marked = tuple(marked)
    stop = frozenset(marked)
    for e in marked:
        z = surface.edge_vectors[e]
        if abs(z.real) <= 1e-12 * abs(z):
            raise NotGeneric(f"marked edge {e} is vertical")
    budget = 1e3 * surface.diameter_proxy() * max(1, surface.gluing.num_triangles)
    rays: dict = {(e, s): [] for e in marked for s in (1, -1)}
    for v in range(surface.num_vertices):
        for side, direction in ((1, -1j), (-1, 1j)):
            copies = angular_copies(surface, v, direction)
            for sector, (_corner, _off, alpha) in enumerate(copies):
                tr = trace_separatrix(surface, v, sector, direction, stop, budget)
                if tr.stop_reason != "marked-interior":
                    raise NotGeneric(
                        f"vertical separatrix from vertex {v} stopped with "
                        f"reason {tr.stop_reason!r}")
                e = tr.hit_edge
                t_lr = tr.hit_param
                if surface.edge_vectors[e].real < 0:
                    t_lr = 1.0 - t_lr
                rays[(e, side)].append((t_lr, tr.length, v, alpha))
    for key in rays:
        rays[key].sort(key=lambda r: r[0])
    return rays


def is_generic(surface: TranslationSurface, marked) -> bool:
    """Conditions for the canonical triangulation: no vertical marked edge
    and every vertical separatrix stops in a marked interior.

    Propagates AmbiguousRay from tracing."""
    if not chains_independent(
            surface,
            [[1 if i == e else 0 for i in range(surface.gluing.num_edges)]
             for e in marked]):
        raise MarkedDependent("marked edges are not an independent family")
    try:
        _vertical_rays(surface, marked)
    except NotGeneric:
        return False
    return True


# -- construction ---------------------------------------------------------------

def _signed_angle(a: complex, b: complex) -> float:
    return math.atan2(_cross(a, b), a.real * b.real + a.imag * b.imag)


class _Builder:
    def __init__(self, surface: TranslationSurface, marked):
        self.surface = surface
        self.marked = tuple(marked)
        self.m = len(self.marked)
        self.occurrences = []     # (key, holonomy, end_key) per (tri, slot)
        self.triangles = []       # per triangle: [(occ index, traversal sign) x3]
        self.tri_tree = []        # per triangle: tree index
        self.nodes = []           # per tree: root node
        self.tree_meta = []       # (marked position, side)
        self.tol = TIE_RTOL * surface.diameter_proxy()

    # keys are (vertex id, angular position)
    def _marked_ends(self, e):
        z = self.surface.edge_vectors[e]
        occs = self.surface.gluing.occurrences[e]
        plus = occs[0] if occs[0][2] > 0 else occs[1]
        minus = occs[0] if occs[0][2] < 0 else occs[1]
        cum = self.surface.corner_cumulative_angle
        cv = self.surface.corner_vertex
        a_plus = (cv[(plus[0], plus[1])], cum[(plus[0], plus[1])])
        a_minus = (cv[(minus[0], minus[1])], cum[(minus[0], minus[1])])
        if z.real > 0:
            w = z
            A_info, B_info = a_plus, a_minus
        else:
            w = -z
            A_info, B_info = a_minus, a_plus
        return w, A_info, B_info

    def build_region(self, pos, e, side, rays):
        """Subdivide one side of marked edge `e`; returns the root node."""
        w, A_info, B_info = self._marked_ends(e)
        pts = []
        for (t, h, v, alpha) in rays:
            foot = t * w
            src = foot + complex(0.0, side * h)
            pts.append((foot, src, v, alpha))
        base_key = ("marked", pos)
        node = self._subdivide(0j, w, A_info, B_info, pts, side, base_key)
        return node

    def _subdivide(self, A, B, A_info, B_info, rays, side, base_key):
        if not rays:
            return None
        heights = []
        seg = B - A
        for (foot, src, v, alpha) in rays:
            h = side * _cross(seg, src - A) / seg.real
            heights.append(h)
        hmin = min(heights)
        for h in heights:
            if h is not hmin and 0 < abs(h - hmin) <= self.tol:
                raise NotGeneric("tied minimal ray heights within tolerance")
        idxs = [i for i, h in enumerate(heights) if abs(h - hmin) <= self.tol]
        if len(idxs) > 1:
            raise NotGeneric("tied minimal ray heights within tolerance")
        j0 = idxs[0] if side > 0 else idxs[-1]
        foot, P, pv, p_alpha = rays[j0]

        sur = self.surface
        theta_A = sur.cone_angles[A_info[0]]
        theta_B = sur.cone_angles[B_info[0]]
        theta_P = sur.cone_angles[pv]
        alpha_AP = (A_info[1] + _signed_angle(B - A, P - A)) % theta_A
        alpha_BP = (B_info[1] + _signed_angle(A - B, P - B)) % theta_B
        ray_dir = complex(0.0, -side)  # upper rays travel downward
        alpha_PA = (p_alpha + _signed_angle(ray_dir, A - P)) % theta_P
        alpha_PB = (p_alpha + _signed_angle(ray_dir, B - P)) % theta_P

        key_left = (A_info[0], alpha_AP)    # direction A -> P at A
        key_right = (pv, alpha_PB)          # direction P -> B at P
        left_rays = rays[:j0]
        right_rays = rays[j0 + 1:]
        left = self._subdivide(A, P, (A_info[0], alpha_AP), (pv, alpha_PA),
                               left_rays, side, key_left)
        right = self._subdivide(P, B, (pv, alpha_PB), (B_info[0], alpha_BP),
                                right_rays, side, key_right)
        return {
            "A": A, "B": B, "P": P,
            "A_info": A_info, "B_info": B_info,
            "P_info": (pv, alpha_PA, alpha_PB),
            "key_left": key_left, "key_right": key_right,
            "base_key": base_key,
            "left": left, "right": right,
            "side": side,
        }

    def emit(self):
        """Walk all region trees, assign triangle ids, record occurrences."""
        for tree_idx, root in enumerate(self.nodes):
            if root is None:
                continue
            stack = [(root, self.tree_meta[tree_idx])]
            order = []
            while stack:
                node, meta = stack.pop()
                order.append(node)
                for child in (node["left"], node["right"]):
                    if child is not None:
                        stack.append((child, meta))
            # deterministic: preorder, left before right
            order = []
            def walk(node):
                order.append(node)
                for child in (node["left"], node["right"]):
                    if child is not None:
                        walk(child)
            walk(root)
            for node in order:
                tid = len(self.triangles)
                node["tri"] = tid
                self.tri_tree.append(tree_idx)
                A, B, P = node["A"], node["B"], node["P"]
                side = node["side"]
                # occurrence entries: (key, canonical holonomy, left/right ends)
                base_occ = self._occ(node["base_key"], B - A, node["A_info"],
                                     node["B_info"], A, B)
                left_occ = self._occ(node["key_left"], P - A,
                                     node["A_info"], node["P_info"][:1] + (node["P_info"][1],),
                                     A, P)
                right_occ = self._occ(node["key_right"], B - P,
                                      (node["P_info"][0], node["P_info"][2]),
                                      node["B_info"], P, B)
                if side > 0:
                    # ccw: A->B (+base), B->P (-right), P->A (-left)
                    self.triangles.append(((base_occ, 1), (right_occ, -1),
                                           (left_occ, -1)))
                else:
                    # ccw: A->P (+left), P->B (+right), B->A (-base)
                    self.triangles.append(((left_occ, 1), (right_occ, 1),
                                           (base_occ, -1)))

    def _occ(self, key, hol, left_info, right_info, Lpt, Rpt):
        """Record one side occurrence; returns its index.

        `key` is either ("marked", i) or a (vertex, alpha) pair for the
        left endpoint of the side, oriented left to right.
        """
        idx = len(self.occurrences)
        self.occurrences.append((key, hol, left_info, right_info))
        return idx


def special_triangulation(surface: TranslationSurface, marked=None):
    """Canonical re-triangulation of a generic marked surface.

    Returns a SpecialTriangulation whose surface has edges in numbered
    order (marked edges first), together with the rooted-tree family and
    the numbering.  Raises NotGeneric if the construction assumptions
    fail and AmbiguousRay on tolerance-ambiguous ray events.
    """
    if marked is None:
        marked = surface.marked
    marked = tuple(marked)
    if not marked:
        raise NotGeneric("at least one marked edge is required")
    if not chains_independent(
            surface,
            [[1 if i == e else 0 for i in range(surface.gluing.num_edges)]
             for e in marked]):
        raise MarkedDependent("marked edges are not an independent family")
    rays = _vertical_rays(surface, marked)

    b = _Builder(surface, marked)
    for pos, e in enumerate(marked):
        for side in (1, -1):
            node = b.build_region(pos, e, side, rays[(e, side)])
            b.nodes.append(node)
            b.tree_meta.append((pos, side))
    b.emit()

    # group occurrences into edges
    marked_keys = {}
    for pos, e in enumerate(marked):
        w, A_info, B_info = b._marked_ends(e)
        marked_keys[pos] = A_info

    def resolve_key(occ_idx):
        key = b.occurrences[occ_idx][0]
        if isinstance(key, tuple) and key and key[0] == "marked":
            return marked_keys[key[1]]
        return key

    groups: dict = {}
    group_order = []
    for occ_idx in range(len(b.occurrences)):
        v, alpha = resolve_key(occ_idx)
        theta = surface.cone_angles[v]
        gid = None
        for (gv, galpha), members in groups.items():
            if gv != v:
                continue
            diff = abs(galpha - alpha)
            diff = min(diff, theta - diff)
            if diff <= KEY_ATOL:
                gid = (gv, galpha)
                break
        if gid is None:
            gid = (v, alpha)
            groups[gid] = []
            group_order.append(gid)
        groups[gid].append(occ_idx)

    for gid, members in groups.items():
        if len(members) != 2:
            raise NotGeneric(
                f"edge matching failed: {len(members)} occurrences for one side")
        h1 = b.occurrences[members[0]][1]
        h2 = b.occurrences[members[1]][1]
        if abs(h1 - h2) > 1e-9 * max(abs(h1), abs(h2)):
            raise NotGeneric("matched side holonomies disagree")

    occ_group = {}
    for gid, members in groups.items():
        for occ in members:
            occ_group[occ] = gid

    # numbering: marked, then tree edges in BFS order, then the rest
    number_of: dict = {}
    for pos in range(b.m):
        number_of[occ_group[_first_occ_of_key(b, ("marked", pos))]] = pos
    next_no = b.m
    tree_children_nodes = []
    for tree_idx, root in enumerate(b.nodes):
        if root is None:
            continue
        side = b.tree_meta[tree_idx][1]
        queue = [root]
        while queue:
            node = queue.pop(0)
            kids = []
            # numbering rule: upper trees take the right child first
            pair = (("right", node["right"]), ("left", node["left"]))
            if side < 0:
                pair = (("left", node["left"]), ("right", node["right"]))
            for name, child in pair:
                if child is None:
                    continue
                key = node["key_right"] if name == "right" else node["key_left"]
                gid = occ_group[_first_occ_of_key(b, key, exact=True)]
                if gid not in number_of:
                    number_of[gid] = next_no
                    next_no += 1
                queue.append(child)
    for gid in group_order:
        if gid not in number_of:
            number_of[gid] = next_no
            next_no += 1

    num_edges = next_no
    vectors = [None] * num_edges
    for gid, members in groups.items():
        vectors[number_of[gid]] = b.occurrences[members[0]][1]

    triples = []
    for slots in b.triangles:
        refs = []
        for occ_idx, sign in slots:
            e = number_of[occ_group[occ_idx]]
            refs.append(sign * (e + 1))
        triples.append(tuple(refs))

    out_surface = build_surface(triples, vectors, tuple(range(b.m)))

    # trees in output terms
    trees = []
    tri_tree = tuple(b.tri_tree)
    for tree_idx, root in enumerate(b.nodes):
        pos, side = b.tree_meta[tree_idx]
        if root is None:
            trees.append(Tree(pos, side, None, (), {}, {}, ()))
            continue
        tri_list = []
        parent_edge = {}
        children = {}
        tree_edges = []

        def walk(node, base_edge):
            tid = node["tri"]
            tri_list.append(tid)
            parent_edge[tid] = base_edge
            kids = []
            for name, child in (("left", node["left"]), ("right", node["right"])):
                if child is None:
                    continue
                key = node["key_left"] if name == "left" else node["key_right"]
                e = number_of[occ_group[_first_occ_of_key(b, key, exact=True)]]
                tree_edges.append(e)
                kids.append((e, child["tri"]))
                walk(child, e)
            children[tid] = tuple(kids)

        walk(root, pos)
        trees.append(Tree(pos, side, root["tri"], tuple(tri_list), parent_edge,
                          children, tuple(tree_edges)))

    family = AdmissibleGraphFamily(out_surface.gluing, b.m, tuple(trees), tri_tree)
    numbering = CompatibleNumbering(b.m, tuple(range(1, num_edges + 1)))
    return SpecialTriangulation(out_surface, family, numbering)


def _first_occ_of_key(b: "_Builder", key, exact=False):
    for idx, occ in enumerate(b.occurrences):
        if occ[0] == key:
            return idx
    raise AssertionError(f"no occurrence for key {key}")


# -- certificate ----------------------------------------------------------------

def _develop_trees(family: AdmissibleGraphFamily, Z):
    """Plane positions and integer chains of every tree-triangle corner."""
    g = family.gluing
    pos = {}
    chain = {}
    E = g.num_edges

    def unit(ref):
        v = [0] * E
        v[ref_index(ref)] = ref_sign(ref)
        return v

    def fill(tri, known_slot):
        refs = g.triangles[tri]
        for k in range(3):
            s = (known_slot + k) % 3
            nxt = (s + 1) % 3
            if (tri, nxt) not in pos:
                r = refs[s]
                z = Z[ref_index(r)] * ref_sign(r)
                pos[(tri, nxt)] = pos[(tri, s)] + z
                u = unit(r)
                chain[(tri, nxt)] = [a + bb for a, bb in
                                     zip(chain[(tri, s)], u)]

    for tree in family.trees:
        if tree.root is None:
            continue
        root = tree.root
        bslot = family.base_slot(root)
        e = tree.parent_edge[root]
        if tree.side > 0:
            pos[(root, bslot)] = 0j
            chain[(root, bslot)] = [0] * E
        else:
            # lower root traverses the base right-to-left
            pos[(root, bslot)] = complex(Z[e])
            chain[(root, bslot)] = unit(e + 1)
        fill(root, bslot)
        stack = [root]
        while stack:
            tri = stack.pop()
            for (edge, child) in tree.children.get(tri, ()):
                # find slots of `edge` in parent and child
                ps = next(s for s, r in enumerate(g.triangles[tri])
                          if ref_index(r) == edge)
                cs = next(s for s, r in enumerate(g.triangles[child])
                          if ref_index(r) == edge)
                pos[(child, cs)] = pos[(tri, (ps + 1) % 3)]
                pos[(child, (cs + 1) % 3)] = pos[(tri, ps)]
                chain[(child, cs)] = chain[(tri, (ps + 1) % 3)]
                chain[(child, (cs + 1) % 3)] = chain[(tri, ps)]
                fill(child, cs)
                stack.append(child)
    return pos, chain


def certificate_items(family: AdmissibleGraphFamily, Z):
    """Evaluate every chart-domain inequality at the edge vectors Z."""
    g = family.gluing
    items = []
    pos, chain = _develop_trees(family, Z)
    apex = {}
    for tri in range(g.num_triangles):
        bslot = family.base_slot(tri)
        apex[tri] = (bslot + 2) % 3
        refs = g.triangles[tri]
        i1 = ref_index(refs[bslot])
        i2 = ref_index(refs[(bslot + 1) % 3])
        i3 = ref_index(refs[(bslot + 2) % 3])
        if not (i1 < i2 and i1 < i3):
            raise DomainViolation(
                f"triangle {tri}: base is not the minimal edge number")
        x1, x2, x3 = Z[i1].real, Z[i2].real, Z[i3].real
        items.append(CertificateItem("HOR", tri, i1, i2, min(x2, x1 - x2)))
        items.append(CertificateItem("HOR", tri, i1, i3, min(x3, x1 - x3)))
        z1, z2 = Z[i1], Z[i2]
        items.append(CertificateItem(
            "AREA", tri, i1, i2, (z1 * z2.conjugate()).imag))
    # tree conditions
    for tree in family.trees:
        if tree.root is None:
            continue
        side = tree.side
        # subtree apex lists, bottom-up
        sub_apexes: dict = {}
        for tri in reversed(tree.triangles):
            acc = [tri]
            for (_e, child) in tree.children.get(tri, ()):
                acc.extend(sub_apexes[child])
            sub_apexes[tri] = acc
        for tri in tree.triangles:
            members = sub_apexes[tri]
            if len(members) == 1:
                continue
            bslot = family.base_slot(tri)
            i1 = ref_index(g.triangles[tri][bslot])
            zbase = Z[i1]
            c_pos = pos[(tri, apex[tri])]
            c_chain = chain[(tri, apex[tri])]
            for other in members:
                if other == tri:
                    continue
                v_pos = pos[(other, apex[other])]
                v_chain = chain[(other, apex[other])]
                f_vec = c_pos - v_pos
                f_chain = tuple(a - bb for a, bb in zip(c_chain, v_chain))
                margin = side * (zbase * f_vec.conjugate()).imag
                strict = (v_pos.real < c_pos.real) if side > 0 else \
                    (v_pos.real > c_pos.real)
                kind = "TREE_STRICT" if strict else "TREE_WEAK"
                items.append(CertificateItem(kind, tri, i1, f_chain, margin))
    return tuple(items)


def domain_certificate(st: SpecialTriangulation) -> DomainCertificate:
    """Certificate of the triangulation's own edge vectors."""
    return DomainCertificate(certificate_items(st.family, st.surface.edge_vectors))


def reconstruct(family: AdmissibleGraphFamily, numbering: CompatibleNumbering,
                Z) -> TranslationSurface:
    """Assemble the surface for a solution vector in the chart domain.

    Verifies every certificate inequality first; raises DomainViolation
    on failure.  The triangle equations themselves are re-checked by the
    surface constructor.
    """
    Z = [complex(z) for z in Z]
    items = certificate_items(family, Z)
    for it in items:
        bad = it.margin < 0 if it.kind == "TREE_WEAK" else it.margin <= 0
        if bad:
            raise DomainViolation(
                f"{it.kind} inequality fails on triangle {it.triangle} "
                f"(margin {it.margin:.3e})")
    return build_surface(family.gluing, Z, tuple(range(family.m)))


def same_combinatorics(a: SpecialTriangulation, b: SpecialTriangulation) -> bool:
    """Numbered triangle triples and trees coincide."""
    ta = sorted(_canon(t) for t in a.surface.gluing.triangles)
    tb = sorted(_canon(t) for t in b.surface.gluing.triangles)
    if ta != tb:
        return False
    fa = [(t.marked, t.side, sorted(t.tree_edges), len(t.triangles))
          for t in a.family.trees]
    fb = [(t.marked, t.side, sorted(t.tree_edges), len(t.triangles))
          for t in b.family.trees]
    return fa == fb


def _canon(triple):
    k = min(range(3), key=lambda i: abs(triple[i]))
    return triple[k:] + triple[:k]
