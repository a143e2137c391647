"""Exact linear algebra over the rationals and integers.

All independence and homology decisions in this package are yes/no
combinatorial facts, so they are computed with `fractions.Fraction`
elimination and integer Hermite forms rather than floating point.  The
matrices involved are small (at most a few dozen rows), so simplicity
wins over speed.
"""

from fractions import Fraction


def _to_fraction_rows(rows):
    return [[Fraction(x) for x in row] for row in rows]


def rank(rows) -> int:
    """Rank of a matrix (iterable of rows of ints/Fractions) over Q."""
    m = _to_fraction_rows(rows)
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def rref(rows):
    """Reduced row echelon form; returns (matrix, pivot column list)."""
    m = _to_fraction_rows(rows)
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def kernel_basis(rows, ncols: int):
    """Basis of the right kernel, one Fraction row per free column."""
    m, pivots = rref(rows)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -m[r][f]
        basis.append(v)
    return basis


def solve_in_coordinates(rows, ncols: int, coords):
    """Express a kernel vector through its values at `coords`.

    Returns an ncols x len(coords) Fraction matrix M with Z = M @ Z[coords]
    for every Z in the kernel.  Requires the projection of the kernel onto
    the chosen coordinates to be an isomorphism.
    """
    basis = kernel_basis(rows, ncols)
    d = len(basis)
    if d != len(coords):
        raise ValueError(f"kernel dimension {d} != number of coordinates {len(coords)}")
    # Solve K_coords^T X = K^T, i.e. find M with M @ K_coords = K (rowwise).
    # Work with augmented elimination on the d x d matrix K[:, coords].
    kc = [[basis[i][c] for c in coords] for i in range(d)]  # d x d
    # invert kc
    aug = [row[:] + [Fraction(1) if j == i else Fraction(0) for j in range(d)]
           for i, row in enumerate(kc)]
    for c in range(d):
        piv = None
        for i in range(c, d):
            if aug[i][c] != 0:
                piv = i
                break
        if piv is None:
            raise ValueError("coordinate projection is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for i in range(d):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[c])]
    kc_inv = [row[d:] for row in aug]  # d x d
    # M[e][j] = sum_i kc_inv[i][j] * basis[i][e]
    M = [[sum(kc_inv[i][j] * basis[i][e] for i in range(d)) for j in range(d)]
         for e in range(ncols)]
    return M


def independent_rows_rank(rows) -> int:
    return rank(rows)


def is_independent_submatrix(kernel, indices) -> bool:
    """True iff the coordinates `indices` are independent functionals on the kernel.

    `kernel` is a kernel basis as returned by :func:`kernel_basis` (rows are
    basis vectors).  The coordinates are independent exactly when the
    submatrix kernel[:, indices] has rank len(indices).
    """
    sub = [[v[i] for i in indices] for v in kernel]
    return rank(sub) == len(indices)


# -- integer lattice helpers -------------------------------------------------

def hermite_normal_form(columns, nrows: int):
    """Column-style HNF of the integer lattice spanned by `columns`.

    Returns a list of pivotal columns (each a list of ints) together with
    their pivot row indices, suitable for coset reduction.
    """
    cols = [list(map(int, c)) for c in columns]
    basis = []  # list of (pivot_row, column)
    for col in cols:
        v = col[:]
        for prow, b in basis:
            if v[prow] != 0:
                q = v[prow] // b[prow]
                if q:
                    v = [a - q * bb for a, bb in zip(v, b)]
        # find new pivot
        while any(v):
            prow = next(i for i, x in enumerate(v) if x != 0)
            inserted = False
            for k, (pr, b) in enumerate(basis):
                if pr == prow:
                    # reduce v against b via gcd steps
                    while v[prow] != 0:
                        if abs(v[prow]) < abs(b[prow]):
                            v, b = b, v
                            basis[k] = (pr, b)
                        q = v[prow] // b[prow]
                        v = [a - q * bb for a, bb in zip(v, b)]
                    inserted = True
                    break
            if inserted:
                continue
            if v[prow] < 0:
                v = [-a for a in v]
            basis.append((prow, v))
            break
    basis.sort(key=lambda pb: pb[0])
    # make echelon: reduce entries above pivots
    for k in range(len(basis)):
        pr, b = basis[k]
        for j in range(k):
            prj, bj = basis[j]
            if b[prj] != 0 and bj[prj] != 0:
                q = b[prj] // bj[prj]
                if q:
                    b = [a - q * bb for a, bb in zip(b, bj)]
        basis[k] = (pr, b)
    return basis


def reduce_mod_lattice(vector, hnf_basis):
    """Canonical coset representative of an integer vector mod a lattice."""
    v = list(map(int, vector))
    for prow, b in hnf_basis:
        if v[prow] != 0:
            q = v[prow] // b[prow]
            if q:
                v = [a - q * bb for a, bb in zip(v, b)]
    return tuple(v)
