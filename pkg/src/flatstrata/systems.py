"""Exact linear algebra on triangle-equation systems.

Each triangle of a numbered triangulation contributes one equation
(the signed sum of its three edge vectors vanishes), giving an integer
matrix with entries in {-1, 0, +1}, one row per triangle and one column
per edge.  Solution-space dimension, independence of coordinate
families, the greedy primary family and its auxiliary family are all
decided over the rationals with no floating point.
"""

from fractions import Fraction

from . import exact
from .errors import MarkedDependent
from .surface import TriangleGluing, ref_index, ref_sign


class LinearSystem:
    """Triangle equations of a gluing, in edge-number order."""

    def __init__(self, gluing: TriangleGluing):
        rows = []
        for t in gluing.triangles:
            row = [0] * gluing.num_edges
            for r in t:
                row[ref_index(r)] += ref_sign(r)
            rows.append(row)
        self.gluing = gluing
        self.rows = rows
        self.num_edges = gluing.num_edges
        self.num_triangles = gluing.num_triangles
        self._kernel = None
        self._solve_cache: dict = {}

    def kernel(self):
        if self._kernel is None:
            self._kernel = exact.kernel_basis(self.rows, self.num_edges)
        return self._kernel

    def rank(self) -> int:
        return self.num_edges - len(self.kernel())

    def check_structure(self):
        """Column-sum and zero-row-sum invariants of a genuine gluing."""
        for c in range(self.num_edges):
            col = [row[c] for row in self.rows]
            nz = [x for x in col if x != 0]
            if len(nz) != 2 or sum(nz) != 0:
                return False
        return all(sum(row[c] for row in self.rows) == 0
                   for c in range(self.num_edges))


def solution_dim(system: LinearSystem) -> int:
    """Complex dimension of the solution space, computed exactly."""
    return len(system.kernel())


def is_independent(system: LinearSystem, indices) -> bool:
    """True iff the coordinates at `indices` (0-based) admit no nontrivial
    real linear relation on the solution space."""
    indices = list(indices)
    if not indices:
        return True
    return exact.is_independent_submatrix(system.kernel(), indices)


def primary_family(system: LinearSystem, m: int):
    """Greedy ascending independent family starting from the marked edges.

    The marked edges are 0..m-1; raises MarkedDependent if they are not
    independent.  Returns a tuple of 0-based indices of length equal to
    the solution dimension.
    """
    kernel = system.kernel()
    if not exact.is_independent_submatrix(kernel, list(range(m))):
        raise MarkedDependent(f"marked edges 1..{m} are dependent")
    d = len(kernel)
    chosen: list[int] = []
    for i in range(system.num_edges):
        if len(chosen) == d:
            break
        if exact.is_independent_submatrix(kernel, chosen + [i]):
            chosen.append(i)
    if len(chosen) != d:
        raise MarkedDependent("could not complete a primary family")
    if chosen[:m] != list(range(m)):
        raise MarkedDependent("greedy family does not start with the marked edges")
    return tuple(chosen)


def _base_of_triangle(gluing: TriangleGluing, tri: int) -> int:
    return min(ref_index(r) for r in gluing.triangles[tri])


def auxiliary_family(system: LinearSystem, family, m: int, primary):
    """One auxiliary index per non-marked primary index.

    `family` carries the trees of the admissible graph family (or None
    for systems without tree data); for a tree edge the triangle closer
    to the root is used, otherwise the lower-numbered adjacent triangle.
    Each auxiliary index is the base (minimal side) of the chosen
    triangle, hence smaller than its primary index.  Returns (J, Delta)
    with Delta the list of chosen triangle ids.
    """
    g = system.gluing
    J = []
    tris = []
    for k in range(m, len(primary)):
        ik = primary[k]
        (t1, _, _), (t2, _, _) = g.occurrences[ik]
        tri = None
        if family is not None:
            tri = family.rootward_triangle(ik)
        if tri is None:
            tri = min(t1, t2)
        jk = _base_of_triangle(g, tri)
        if not jk < ik:
            raise MarkedDependent(
                f"auxiliary index {jk} not below primary index {ik}")
        J.append(jk)
        tris.append(tri)
    if len(set(tris)) != len(tris):
        raise MarkedDependent("auxiliary triangles are not distinct")
    return tuple(J), tuple(tris)


def solve_matrix(system: LinearSystem, coords):
    """Exact matrix M with Z = M @ Z[coords] on the solution space.

    Rows at the chosen coordinates form an identity block.  Cached per
    coordinate tuple."""
    key = tuple(coords)
    hit = system._solve_cache.get(key)
    if hit is None:
        hit = exact.solve_in_coordinates(system.rows, system.num_edges, key)
        system._solve_cache[key] = hit
    return hit


def area_lower_bound(surface, primary, tris) -> float:
    """Sum of the distinct auxiliary triangle areas; strictly below area."""
    total = sum(surface.triangle_area(t) for t in tris)
    return total


def expansion_in_primary(system: LinearSystem, primary, index):
    """Coefficients of z_index as an exact combination of primary coordinates."""
    M = solve_matrix(system, primary)
    return M[index]


def eta_linear_data(system: LinearSystem, primary, m: int, J, tris):
    """Per-auxiliary data for the triangle-area change of variables.

    For k = m..d-1 returns (j_k, i_k, coeffs of f_k = z_{j_k} in the
    primary coordinates).  The expansion of f_k must only involve
    primary coordinates before position k."""
    M = solve_matrix(system, primary)
    out = []
    for pos, (jk, tri) in enumerate(zip(J, tris), start=m):
        coeffs = M[jk]
        for later in range(pos, len(primary)):
            if coeffs[later] != 0:
                raise MarkedDependent(
                    f"auxiliary coordinate {jk} depends on primary position {later}")
        out.append((jk, primary[pos], tuple(coeffs), tri))
    return out


def as_float_matrix(M):
    return [[float(Fraction(x)) for x in row] for row in M]
