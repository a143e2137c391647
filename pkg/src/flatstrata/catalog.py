"""Model surfaces used by tests, charts and the CLI.

Everything here is an explicit polygon gluing worked out by hand once:
flat tori, the regular octagon in H(2), an L-shaped genus-2 surface, a
one-cylinder H(1,1) surface, and two half-translation meshes (the square
pillowcase and a slit torus carrying a quadratic differential with
signature (2, 0, -1, -1)).
"""

import math

from .errors import DomainViolation
from .surface import TranslationSurface, TriangleGluing, build_surface


def torus_from_lattice(u: complex, v: complex, marked=(0,)) -> TranslationSurface:
    """Flat torus C/(Zu + Zv) cut along u, v into two triangles."""
    if u.real * v.imag - u.imag * v.real <= 0:
        raise DomainViolation("lattice basis must be positively oriented")
    gluing = [(1, 2, -3), (3, -1, -2)]
    return build_surface(gluing, [u, v, u + v], marked)


def square_torus() -> TranslationSurface:
    return torus_from_lattice(1 + 0j, 1j)


def sheared_torus(s: float = 0.3) -> TranslationSurface:
    """Unit-area torus with generators (1,0) and (s,1); edge 0 marked."""
    return torus_from_lattice(1 + 0j, complex(s, 1.0))


def regular_octagon() -> TranslationSurface:
    """Regular octagon with side 1, opposite sides identified: H(2)."""
    d = [complex(math.cos(math.pi * k / 4), math.sin(math.pi * k / 4))
         for k in range(8)]
    a = d[:4]
    g = []
    acc = 0j
    for k in range(6):
        acc += d[k]
        if k >= 1:
            g.append(acc)  # diagonal V0 -> V_{k+1}
    # edges 1..4 = sides a0..a3, edges 5..9 = diagonals to V2..V6
    vectors = a + g
    triangles = [
        (1, 2, -5),
        (5, 3, -6),
        (6, 4, -7),
        (7, -1, -8),
        (8, -2, -9),
        (9, -3, -4),
    ]
    return build_surface(triangles, vectors)


def l_shape_h2(a: float = 1.8, b: float = 1.6, shear: float = 0.28,
               marked=(0,)) -> TranslationSurface:
    """Genus-2 surface in H(2) from an L-shaped polygon, sheared by
    [[1, shear], [0, 1]] so that the vertical flow is generic.

    The horizontal sides (1,0) and (a-1,0) are edges 0 and 1 and stay
    horizontal under the shear, so either can be marked.
    """
    if not (a > 1 and b > 1):
        raise DomainViolation("need a > 1 and b > 1")
    A1 = 1 + 0j
    A2 = complex(a - 1, 0)
    B1 = 1j
    B2 = complex(0, b - 1)
    d5 = complex(-1, 1)       # P2 -> P8
    d6 = 1j                   # P2 -> P5
    d7 = complex(a - 1, 1)    # P2 -> P4
    d8 = complex(-1, 0)       # P5 -> P8
    d9 = complex(-1, b - 1)   # P5 -> P7
    vectors = [A1, A2, B1, B2, d5, d6, d7, d8, d9]
    triangles = [
        (1, 5, -3),    # P1 P2 P8
        (6, 8, -5),    # P2 P5 P8: +d6, P5->P8 = +d8, P8->P2 = -d5
        (2, 3, -7),    # P2 P3 P4
        (7, -2, -6),   # P2 P4 P5
        (-8, 9, -4),   # P8 P5 P7
        (4, -1, -9),   # P5 P6 P7
    ]
    m = [[1.0, shear], [0.0, 1.0]]
    sheared = [complex(z.real + shear * z.imag, z.imag) for z in vectors]
    del m
    return build_surface(triangles, sheared, marked)


# -- cylinder diagrams --------------------------------------------------------

def build_cylinder_surface(lengths: dict, cylinders, marked=()):
    """Glue horizontal cylinders into a translation surface.

    `lengths` maps horizontal saddle-connection names to positive lengths.
    `cylinders` is a list of (bottom names, top names, crossing period z)
    with Im(z) > 0 and 0 <= Re(z) < width.  Every name must occur exactly
    once among the bottoms and once among the tops.  Returns (surface,
    edge_ids) where edge_ids maps names and ("side", j) to edge indices.

    Each strip is fan-triangulated; the left and right strip boundaries
    are the same edge, carrying the crossing period.
    """
    edge_ids: dict = {}
    vectors: list[complex] = []

    def new_edge(key, vec) -> int:
        edge_ids[key] = len(vectors)
        vectors.append(vec)
        return edge_ids[key]

    for name, ln in lengths.items():
        if ln <= 0:
            raise DomainViolation(f"length of {name} must be positive")
        new_edge(name, complex(ln, 0.0))

    triangles = []
    for j, (bottom, top, z) in enumerate(cylinders):
        z = complex(z)
        width = sum(lengths[n] for n in bottom)
        wtop = sum(lengths[n] for n in top)
        if abs(width - wtop) > 1e-9 * max(width, wtop):
            raise DomainViolation(f"cylinder {j}: border lengths differ")
        if z.imag <= 0 or not (0 <= z.real < width):
            raise DomainViolation(
                f"cylinder {j}: crossing period {z} outside 0 <= Re < width, Im > 0")
        nb, nt = len(bottom), len(top)
        xb = [0.0]
        for n in bottom:
            xb.append(xb[-1] + lengths[n])
        xt = [0.0]
        for n in top:
            xt.append(xt[-1] + lengths[n])
        B = [complex(x, 0.0) for x in xb]
        T = [z + x for x in xt]
        side = new_edge(("side", j), z)

        def diag(i, jj):
            # diagonal from B[i] to T[jj]; endpoints reuse the side edge
            if i == 0 and jj == 0:
                return side
            if i == nb and jj == nt:
                return side
            key = ("diag", j, i, jj)
            if key not in edge_ids:
                new_edge(key, T[jj] - B[i])
            return edge_ids[key]

        def sref(e, positive):
            return (e + 1) if positive else -(e + 1)

        for i in range(nb):
            # triangle B[i], B[i+1], T[0]
            eb = edge_ids[bottom[i]]
            triangles.append((sref(eb, True),
                              sref(diag(i + 1, 0), True),
                              sref(diag(i, 0), False)))
        for jj in range(nt):
            # triangle B[nb], T[jj+1], T[jj]
            et = edge_ids[top[jj]]
            triangles.append((sref(diag(nb, jj + 1), True),
                              sref(et, False),
                              sref(diag(nb, jj), False)))
    surface = build_surface(triangles, vectors, marked)
    return surface, edge_ids


def one_cylinder_h11(lengths=(1.0, 0.7, 1.3, 0.9), height: float = 0.8,
                     twist: float = 0.35) -> TranslationSurface:
    """One-cylinder H(1,1) surface: bottom pieces (A,B,C,D), top reversed.

    The horizontal direction decomposes into a single cylinder whose
    borders join the two distinct zeros, so that decomposition is
    unstable.
    """
    names = ["A", "B", "C", "D"]
    lens = dict(zip(names, lengths))
    surface, _ = build_cylinder_surface(
        lens, [(names, list(reversed(names)), complex(twist, height))])
    return surface


# -- half-translation meshes ---------------------------------------------------
# These return (triangles, vectors) pairs for halftrans.HalfTranslationMesh:
# same triple format, but edges glued with EQUAL signs are folded
# (transition z -> -z + c).

def pillowcase_mesh(shear: float = 0.0):
    """Square pillowcase Q(-1,-1,-1,-1): a 1 x 1/2 rectangle with both
    horizontal boundaries folded and the vertical sides identified."""
    vectors = [complex(0.5, 0), complex(0.5, 0), complex(0, 0.5),
               complex(-0.5, 0.5), complex(0, 0.5), complex(0.5, 0.5)]
    triangles = [
        (1, 4, -3),
        (5, -2, -4),
        (1, 3, -6),
        (6, -2, -5),
    ]
    if shear:
        vectors = [complex(z.real + shear * z.imag, z.imag) for z in vectors]
    return triangles, vectors


def slit_torus_mesh():
    """Quadratic differential on a torus with signature (2, 0, -1, -1).

    Unit square torus slit along [0.3, 0.7] x {0.5}; each bank is folded
    onto itself about the slit midpoint.  The slit endpoints merge into a
    4*pi cone; the bank midpoints become simple poles; one marked regular
    point sits on the auxiliary vertical circle.
    """
    vectors = [
        complex(1.0, 0.0),    # 1 h: horizontal circle through the marked point
        complex(0.0, 0.5),    # 2 mB: marked point -> lower bank midpoint
        complex(0.2, 0.0),    # 3 e_b: lower bank half (folded)
        complex(0.2, 0.0),    # 4 e_t: upper bank half (folded)
        complex(0.0, 0.5),    # 5 mA: upper bank midpoint -> marked point
        complex(0.6, 0.0),    # 6 gap segment between the slit ends
        complex(-0.2, 0.5),   # 7
        complex(-0.8, 0.5),   # 8
        complex(-1.0, 0.5),   # 9
        complex(-1.0, -0.5),  # 10
        complex(-0.8, -0.5),  # 11
        complex(-0.2, -0.5),  # 12
    ]
    triangles = [
        (1, 9, -2),
        (2, -3, -7),
        (7, -6, -8),
        (8, -3, -9),
        (4, 5, 12),
        (-1, -5, -10),
        (10, 4, -11),
        (11, 6, -12),
    ]
    return triangles, vectors
