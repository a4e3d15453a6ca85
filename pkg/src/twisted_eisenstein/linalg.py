"""Exact integer linear algebra.

Everything here works on plain Python ints (arbitrary precision); vectors are
tuples of ints and matrices are tuples of row tuples.
"""

from math import gcd


def as_matrix(rows):
    m = tuple(tuple(int(x) for x in row) for row in rows)
    if any(len(row) != len(m) for row in m):
        raise ValueError("matrix must be square")
    return m


def transpose(m):
    return tuple(zip(*m))


def from_columns(cols):
    return transpose(tuple(tuple(c) for c in cols))


def matmul(a, b):
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def matvec(m, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in m)


def identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def det(m):
    """Determinant by Bareiss fraction-free elimination."""
    a = [list(row) for row in m]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def minor(m, rows, cols):
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise ValueError("row and column index sets must have equal size")
    n = len(m)
    for i in rows + cols:
        if not 0 <= i < n:
            raise IndexError(f"index {i} out of range for {n}x{n} matrix")
    return det([[m[i][j] for j in cols] for i in rows])


def adjugate(m):
    n = len(m)
    if n == 1:
        return ((1,),)
    idx = range(n)
    return tuple(
        tuple((-1) ** (i + j) * minor(m, [r for r in idx if r != j], [c for c in idx if c != i])
              for j in idx)
        for i in idx
    )


def extended_gcd(a, b):
    """Return (g, x, y) with a*x + b*y == g == gcd(a, b) > 0."""
    if a == 0 and b == 0:
        raise ValueError("extended_gcd(0, 0) is undefined")
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def content(v):
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def primitivize(v):
    """Divide out the content and make the first nonzero entry positive."""
    v = tuple(int(x) for x in v)
    g = content(v)
    if g == 0:
        raise ValueError("cannot primitivize the zero vector")
    lead = next(x for x in v if x)
    if lead < 0:
        g = -g
    return tuple(x // g for x in v)


def complete_to_sl2(a, c):
    """An integer matrix ((a, b), (c, d)) of determinant 1, for coprime a, c."""
    g, x, y = extended_gcd(a, c)
    if g != 1:
        raise ValueError(f"({a}, {c}) is not primitive")
    # a*x + c*y = 1  =>  a*x - (-y)*c = 1
    return ((a, -y), (c, x))


def inverse_unimodular(m):
    d = det(m)
    if d not in (1, -1):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(x * d for x in row) for row in adjugate(m))


def row_hermite_form(m):
    """Return (u, h) with u in GL_n(Z), u*m == h, h upper triangular in row echelon form.

    Pivots are positive and entries above a pivot are reduced into [0, pivot).
    Only intended for small nonsingular matrices.
    """
    n = len(m)
    h = [list(row) for row in m]
    u = [list(row) for row in identity(n)]
    r = 0
    for col in range(n):
        if r == n:
            break
        # gcd-combine rows r..n-1 into row r at this column
        for i in range(r + 1, n):
            if h[i][col] == 0:
                continue
            a, b = h[r][col], h[i][col]
            g, x, y = extended_gcd(a, b)
            p, q = a // g, b // g
            hr, hi = h[r], h[i]
            ur, ui = u[r], u[i]
            h[r] = [x * s + y * t for s, t in zip(hr, hi)]
            h[i] = [-q * s + p * t for s, t in zip(hr, hi)]
            u[r] = [x * s + y * t for s, t in zip(ur, ui)]
            u[i] = [-q * s + p * t for s, t in zip(ur, ui)]
        if h[r][col] == 0:
            continue
        if h[r][col] < 0:
            h[r] = [-s for s in h[r]]
            u[r] = [-s for s in u[r]]
        piv = h[r][col]
        for i in range(r):
            k = h[i][col] // piv
            if k:
                h[i] = [s - k * t for s, t in zip(h[i], h[r])]
                u[i] = [s - k * t for s, t in zip(u[i], u[r])]
        r += 1
    return tuple(map(tuple, u)), tuple(map(tuple, h))
