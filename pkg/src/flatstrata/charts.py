"""Sampling charts over frozen special triangulations.

A chart packages one special triangulation: the exact solve expressing
all edge vectors through the primary coordinates, the certificate
inequalities frozen at the seed surface, and numpy-vectorized validity,
area and shortest-length bounds for batches of coordinate samples.
Estimators draw primary coordinates uniformly from a box (real parts
positive, since every chart inequality forces x > 0) and reject samples
outside the domain.
"""

import numpy as np

from . import systems
from .errors import EmptyChart
from .geodesics import _tables
from .special import SpecialTriangulation, certificate_items
from .surface import ref_index, ref_sign

BOX_X = (0.0, 2.0)    # real parts of primary coordinates
BOX_Y = (-2.0, 2.0)   # imaginary parts


class _FastSurface:
    """Vector container satisfying the surface protocol used by the
    geodesic searches; shares combinatorial tables with the seed."""

    def __init__(self, seed_surface):
        self.gluing = seed_surface.gluing
        self.corner_vertex = seed_surface.corner_vertex
        self.edge_vectors = seed_surface.edge_vectors

    def slot_vector(self, tri, slot):
        r = self.gluing.triangles[tri][slot]
        z = self.edge_vectors[ref_index(r)]
        return z if r > 0 else -z

    def corner_positions(self, tri, anchor=0j):
        v0 = self.slot_vector(tri, 0)
        v1 = self.slot_vector(tri, 1)
        return (anchor, anchor + v0, anchor + v0 + v1)

    def diameter_proxy(self):
        return max(abs(z) for z in self.edge_vectors)


class StratumChart:
    """Frozen chart of a stratum around a seed special triangulation."""

    def __init__(self, st: SpecialTriangulation, label: str):
        self.label = label
        self.seed = st
        self.m = st.family.m
        g = st.surface.gluing
        self.num_edges = g.num_edges
        self.system = systems.LinearSystem(g)
        self.dim = systems.solution_dim(self.system)
        self.primary = systems.primary_family(self.system, self.m)
        M = systems.solve_matrix(self.system, self.primary)
        self.solve = np.array([[float(x) for x in row] for row in M])
        self.J, self.aux_tris = systems.auxiliary_family(
            self.system, st.family, self.m, self.primary)

        # frozen certificate descriptors (strict/weak split fixed at the seed;
        # the distinction is measure-zero for sampling)
        items = certificate_items(st.family, st.surface.edge_vectors)
        hor, areas, trees = [], [], []
        for it in items:
            if it.kind == "HOR":
                hor.append((it.base, it.other))
            elif it.kind == "AREA":
                areas.append((it.base, it.other))
            else:
                side = st.family.trees[
                    st.family.tree_of_triangle[it.triangle]].side
                trees.append((it.base, np.array(it.other, dtype=float),
                              float(side)))
        self.cert_hor = hor
        self.cert_area = areas
        self.cert_tree = trees

        # per-triangle (base, next) pairs for the area form
        fam = st.family
        self.area_pairs = []
        self.tri_edges = []
        for t in range(g.num_triangles):
            b = fam.base_slot(t)
            refs = g.triangles[t]
            self.area_pairs.append((ref_index(refs[b]),
                                    ref_index(refs[(b + 1) % 3])))
            self.tri_edges.append(tuple(ref_index(r) for r in refs))

        tables = _tables(st.surface)
        self.null_edge = np.array(tables.null_edge, dtype=bool)
        self._scratch = _FastSurface(st.surface)

    # -- vectorized batch operations ---------------------------------------

    def sample_coordinates(self, gen, n):
        """Primary coordinates, x uniform in BOX_X, y uniform in BOX_Y."""
        x = gen.random((n, self.dim)) * (BOX_X[1] - BOX_X[0]) + BOX_X[0]
        y = gen.random((n, self.dim)) * (BOX_Y[1] - BOX_Y[0]) + BOX_Y[0]
        return x + 1j * y

    def edge_matrix(self, coords):
        """(n, num_edges) complex edge vectors for coordinate rows."""
        return coords @ self.solve.T

    def valid_mask(self, Z):
        x = Z.real
        ok = np.ones(len(Z), dtype=bool)
        for (i1, i2) in self.cert_hor:
            ok &= (x[:, i2] > 0) & (x[:, i2] < x[:, i1])
        for (i1, i2) in self.cert_area:
            ok &= (Z[:, i1] * np.conj(Z[:, i2])).imag > 0
        for (i1, chain, side) in self.cert_tree:
            f = Z @ chain
            ok &= side * (Z[:, i1] * np.conj(f)).imag > 0
        return ok

    def areas(self, Z):
        A = np.zeros(len(Z))
        for (b, n2) in self.area_pairs:
            A += (Z[:, b] * np.conj(Z[:, n2])).imag
        return 0.5 * A

    def short_bound(self, Z):
        """Lower bound for the shortest saddle connection, vectorized.

        min over edges of |z| and over triangle corners of the altitude
        2 * area / opposite side."""
        lens = np.abs(Z)
        bound = lens.min(axis=1)
        for t, (e0, e1, e2) in enumerate(self.tri_edges):
            b, n2 = self.area_pairs[t]
            area2 = (Z[:, b] * np.conj(Z[:, n2])).imag  # 2 * triangle area
            for e in (e0, e1, e2):
                np.minimum(bound, area2 / lens[:, e], out=bound)
        return bound

    def surface_for_row(self, Z_row):
        self._scratch.edge_vectors = tuple(Z_row)
        return self._scratch


def torus_chart() -> StratumChart:
    from .catalog import sheared_torus
    from .special import special_triangulation
    st = special_triangulation(sheared_torus(), [0])
    return StratumChart(st, "H(0)-m1")


def h2_chart(m: int = 1) -> StratumChart:
    from .catalog import l_shape_h2
    from .special import special_triangulation
    if m == 1:
        st = special_triangulation(l_shape_h2(), [0])
    elif m == 2:
        st = special_triangulation(l_shape_h2(marked=(0, 1)), [0, 1])
    else:
        raise EmptyChart(f"no H(2) chart with m = {m}")
    return StratumChart(st, f"H(2)-m{m}")


_CHART_CACHE: dict = {}


def get_chart(name: str, m: int) -> StratumChart:
    key = (name, m)
    if key not in _CHART_CACHE:
        if name in ("H(0)", "torus", "0"):
            _CHART_CACHE[key] = torus_chart()
        elif name in ("H(2)", "2"):
            _CHART_CACHE[key] = h2_chart(m)
        else:
            raise EmptyChart(f"unknown chart {name!r}")
    return _CHART_CACHE[key]
