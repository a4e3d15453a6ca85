"""Modular symbols for the minimal parabolic, as formal chains of tuples of lines.

A tuple of n rational lines in Q^n is stored through fixed primitive vectors
(first nonzero coordinate positive).  Homology classes are never formed; a
symbol is only ever evaluated through a linear form.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations, product
from math import factorial

from . import linalg
from .lie import ParabolicType

log = logging.getLogger(__name__)

MAX_DEPTH = 64


class NotASplitting(ValueError):
    """Raised when an operation needs a splitting and gets a degenerate tuple."""


@dataclass(frozen=True, order=True)
class SubspaceTuple:
    vectors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        vecs = tuple(linalg.primitivize(v) for v in self.vectors)
        n = len(vecs)
        if n < 2 or any(len(v) != n for v in vecs):
            raise ValueError("a full tuple of lines needs n vectors of length n >= 2")
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def standard(cls, n: int) -> "SubspaceTuple":
        return cls(linalg.identity(n))

    @classmethod
    def parse(cls, text: str) -> "SubspaceTuple":
        """Parse the literal syntax "1,0 5,2"."""
        try:
            vecs = [tuple(int(x) for x in tok.split(",")) for tok in text.split()]
        except ValueError as exc:
            raise ValueError(f"cannot parse symbol literal {text!r}") from exc
        return cls(tuple(vecs))

    @property
    def n(self) -> int:
        return len(self.vectors)

    def matrix(self):
        """The matrix whose columns are the chosen primitive vectors."""
        return linalg.from_columns(self.vectors)

    def is_splitting(self) -> bool:
        return linalg.det(self.matrix()) != 0

    def __str__(self):
        return " ".join(",".join(str(x) for x in v) for v in self.vectors)


def norm(w: SubspaceTuple) -> int:
    return abs(linalg.det(w.matrix()))


def translate(g, w: SubspaceTuple) -> SubspaceTuple:
    """Left translation of every line by g."""
    return SubspaceTuple(tuple(linalg.matvec(g, v) for v in w.vectors))


def twisted_action(g, w: SubspaceTuple) -> SubspaceTuple:
    """g.w = (W_1, gW_2, ..., gW_n); the first line is frozen."""
    if len(g) != w.n:
        raise ValueError("dimension mismatch")
    return SubspaceTuple((w.vectors[0],) + tuple(linalg.matvec(g, v) for v in w.vectors[1:]))


def is_compatible(w: SubspaceTuple, P: ParabolicType) -> bool:
    if P.n != w.n or not P.is_minimal:
        return False
    return w.vectors[0] == linalg.identity(w.n)[0]


def is_identically_zero(w: SubspaceTuple) -> bool:
    """Two of W_2..W_n coincide, so every twisted translate is degenerate."""
    rest = w.vectors[1:]
    return len(set(rest)) < len(rest)


# ---------------------------------------------------------------------------
# chains and the boundary relation


@dataclass
class UnimodularChain:
    terms: list[tuple[int, SubspaceTuple]]
    steps: list[tuple[tuple[int, ...], ...]] = field(default_factory=list)

    def __len__(self):
        return len(self.terms)

    def as_dict(self) -> dict[SubspaceTuple, int]:
        out: dict[SubspaceTuple, int] = defaultdict(int)
        for c, w in self.terms:
            out[w] += c
        return {w: c for w, c in out.items() if c}

    def format(self) -> str:
        return "\n".join(f"{c:+d} [{w}]" for c, w in self.terms)


def boundary_chain(vectors) -> list[tuple[int, SubspaceTuple | None]]:
    """The tuples w(i) obtained by deleting the i-th of n+1 lines, with signs.

    Entry 0 is w(0) with sign +1 (the left-hand side); entry i >= 1 carries
    (-1)^(i+1), so that w(0) = sum_{i>=1} sign_i * w(i).  Degenerate tuples are
    returned as-is; they represent the zero symbol.
    """
    vecs = [linalg.primitivize(v) for v in vectors]
    n = len(vecs) - 1
    if any(len(v) != n for v in vecs):
        raise ValueError("need n+1 vectors in dimension n")
    out = []
    for i in range(n + 1):
        sign = 1 if i == 0 else (-1) ** (i + 1)
        out.append((sign, SubspaceTuple(tuple(vecs[:i] + vecs[i + 1:]))))
    return out


def replay(w: SubspaceTuple, chain: UnimodularChain) -> bool:
    """Check that the recorded boundary relations rewrite w into the chain exactly.

    Every step is an (n+1)-tuple of lines; it contributes the relation
    sum_i (-1)^i Xi_{w(i)} = 0 with the multiplicity needed to eliminate the
    pivot tuple w(0).  Degenerate tuples are dropped (zero symbols).
    """
    total: dict[SubspaceTuple, int] = defaultdict(int)
    total[w] += 1
    for step in chain.steps:
        rel = boundary_chain(step)
        pivot = rel[0][1]
        coeff = total.get(pivot, 0)
        if coeff == 0:
            continue
        total[pivot] -= coeff
        for sign, t in rel[1:]:
            total[t] += coeff * sign
    result = {t: c for t, c in total.items() if c and norm(t) != 0}
    return result == chain.as_dict() and all(norm(t) == 1 for t in result)


def _cf_chain(w: SubspaceTuple) -> tuple[list[tuple[int, ...]], list]:
    """Path of lines from W_1 to W_2 with consecutive determinants +-1 (n = 2)."""
    v1, v2 = w.vectors
    g = linalg.complete_to_sl2(v1[0], v1[1])  # g e1 = v1
    ginv = linalg.inverse_unimodular(g)
    p, q = linalg.matvec(ginv, v2)
    if q < 0:
        p, q = -p, -q
    # convergents of p/q, starting from 1/0
    nodes = [(1, 0)]
    h0, h1, k0, k1 = 0, 1, 1, 0
    a, b = p, q
    while b:
        t, r = divmod(a, b)
        a, b = b, r
        h0, h1 = h1, t * h1 + h0
        k0, k1 = k1, t * k1 + k0
        nodes.append((h1, k1))
    path = [linalg.matvec(g, node) for node in nodes]
    path[0], path[-1] = v1, v2
    return path


def _reduce_n2(w: SubspaceTuple) -> UnimodularChain:
    path = [linalg.primitivize(v) for v in _cf_chain(w)]
    terms = [(1, SubspaceTuple((a, b))) for a, b in zip(path, path[1:])]
    steps = []
    first, last = path[0], path[-1]
    for mid in path[1:-1]:
        # Xi(first, last) = Xi(mid, last) - Xi(mid, first)
        steps.append((mid, first, last))
        # Xi(mid, first) = Xi(first, first) - Xi(first, mid), the first term being zero
        steps.append((first, mid, first))
        first = mid
    return UnimodularChain(terms=terms, steps=steps)


def _best_vertex(m) -> tuple[int, ...]:
    """Auxiliary vector lowering every replacement determinant.

    Scans all classes of Z^n / m Z^n.  For class k (coefficients of the vector
    in the column basis, scaled by |det|) each coordinate is shifted into
    (-D/2, D/2]; the class minimizing max |k_i|, then the lexicographically
    smallest sorted |k| and k itself, wins.
    """
    n = len(m)
    d = linalg.det(m)
    big = abs(d)
    adj = linalg.adjugate(m)
    sgn = 1 if d > 0 else -1
    gens = [tuple((sgn * adj[i][j]) % big for i in range(n)) for j in range(n)]
    zero = (0,) * n
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for k in frontier:
            for gk in gens:
                c = tuple((x + y) % big for x, y in zip(k, gk))
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    best_key, best_k = None, None
    for k in seen:
        if k == zero:
            continue
        ks = tuple(x - big if 2 * x > big else x for x in k)
        key = (max(abs(x) for x in ks), tuple(sorted(abs(x) for x in ks)), ks)
        if best_key is None or key < best_key:
            best_key, best_k = key, ks
    # v = m k / D
    v = tuple(sum(m[i][j] * best_k[j] for j in range(n)) // big for i in range(n))
    return linalg.primitivize(v)


def _reduce_general(w: SubspaceTuple, depth: int, steps: list, out: dict):
    nw = norm(w)
    if nw == 0:
        return
    if nw == 1:
        out[w] += 1
        return
    if depth >= MAX_DEPTH:
        raise RecursionError(f"unimodular reduction exceeded depth {MAX_DEPTH} at [{w}]")
    v = _best_vertex(w.matrix())
    rel = boundary_chain((v,) + w.vectors)
    steps.append((v,) + w.vectors)
    for sign, t in rel[1:]:
        if norm(t) >= nw:
            raise RuntimeError(f"auxiliary vertex failed to lower the norm of [{w}]")
        sub: dict = defaultdict(int)
        _reduce_general(t, depth + 1, steps, sub)
        for tt, c in sub.items():
            out[tt] += sign * c


def _borel_key(m):
    """Normal form of the coset B m, B the upper triangular matrices with +-1 diagonal.

    Rows are processed bottom-up: each row is reduced modulo the lattice of the
    rows below it and its sign is chosen to give the smaller result.
    """
    n = len(m)
    rows = [None] * n
    for i in range(n - 1, -1, -1):
        below = [r for r in rows[i + 1:]]
        if below:
            _, h = linalg.row_hermite_form(tuple(below) + ((0,) * n,) * (n - len(below)))
            basis = [r for r in h if any(r)]
        else:
            basis = []

        def red(v):
            v = list(v)
            for r in basis:
                piv = next(j for j, x in enumerate(r) if x)
                k = v[piv] // r[piv]
                v = [a - k * b for a, b in zip(v, r)]
            return tuple(v)

        rows[i] = min(red(m[i]), red([-x for x in m[i]]))
    return tuple(rows)


def _canonical_frame(w: SubspaceTuple):
    """Hermite frame of w, invariant under left translation by GL_n(Z).

    Returns (u_inv, frame) with frame a tuple whose lines are u^{-1}-translates
    of the lines of w.  Column signs are fixed by minimizing the Hermite form.
    When w has a nontrivial stabilizer several sign choices tie; the transport
    u_inv is then picked by its Borel normal form, so the choice commutes with
    left translation by upper triangular matrices.
    """
    m = w.matrix()
    n = w.n
    cands = []
    for signs in product((1, -1), repeat=n - 1):
        s = (1,) + signs
        ms = tuple(tuple(row[j] * s[j] for j in range(n)) for row in m)
        u, h = linalg.row_hermite_form(ms)
        cands.append((tuple(map(tuple, h)), u))
    best_h = min(h for h, _ in cands)
    tied = [linalg.inverse_unimodular(u) for h, u in cands if h == best_h]
    u_inv = min(tied, key=_borel_key)
    return u_inv, linalg.transpose(best_h)


def reduce_to_unimodular(w: SubspaceTuple) -> UnimodularChain:
    """Write Xi_w as an integer combination of unimodular symbols.

    n = 2 uses continued-fraction convergents; larger n uses Ash-Rudolph style
    vertex insertion in a canonical frame, so that left translates of w are
    reduced to the matching left translates of the chain.
    """
    nw = norm(w)
    if nw == 0:
        raise NotASplitting(f"[{w}] is not a splitting")
    if nw == 1:
        return UnimodularChain(terms=[(1, w)])
    if w.n == 2:
        return _reduce_n2(w)
    u_inv, frame_cols = _canonical_frame(w)
    frame = SubspaceTuple(frame_cols)
    steps: list = []
    out: dict = defaultdict(int)
    _reduce_general(frame, 0, steps, out)
    # transport back; the frame's columns are u^{-1}-preimages of w's lines up to sign
    back = lambda vec: linalg.primitivize(linalg.matvec(u_inv, vec))
    steps = [tuple(back(v) for v in st) for st in steps]
    terms = []
    for t in sorted(out):
        if out[t]:
            terms.append((out[t], SubspaceTuple(tuple(back(v) for v in t.vectors))))
    return UnimodularChain(terms=terms, steps=steps)


def format_chain(chain: UnimodularChain) -> str:
    return chain.format()


# ---------------------------------------------------------------------------
# growth bound and projective points


def max_entry(rows) -> int:
    return max(abs(x) for row in rows for x in row)


def tuple_minor_sum(w: SubspaceTuple) -> int:
    """Sum of |maximal minors| of the matrix (v(W_2), ..., v(W_n)); 1 for the standard tuple."""
    n = w.n
    cols = linalg.from_columns(w.vectors)
    rest = list(range(1, n))
    return sum(abs(linalg.minor(cols, list(rows), rest))
               for rows in combinations(range(n), n - 1))


def minor_bound_check(g, w: SubspaceTuple) -> tuple[int, int]:
    """||g.w|| against (n-1)! M(g)^(n-1) times the minor sum of w.

    By Cauchy-Binet, det(e_1, gW_2, ..., gW_n) is a sum over (n-1)-subsets of
    products of minors of g and of w; for the standard tuple this is the bound
    (n-1)! M(g)^(n-1) M(w)^(n-1).
    """
    n = w.n
    if not is_compatible(w, ParabolicType.minimal(n)):
        raise ValueError(f"[{w}] is not compatible with the minimal parabolic")
    value = norm(twisted_action(g, w))
    bound = factorial(n - 1) * max_entry(g) ** (n - 1) * tuple_minor_sum(w)
    if value > bound:
        raise AssertionError(f"norm {value} exceeds bound {bound}")
    return value, bound


@dataclass(frozen=True, order=True)
class ProjectivePoint:
    coords: tuple[int, ...]
    modulus: int

    @classmethod
    def normalize(cls, coords, modulus: int) -> "ProjectivePoint":
        c = [x % modulus for x in coords]
        lead = next((x for x in c if x), None)
        if lead is None:
            raise ValueError("the zero vector is not a projective point")
        inv = pow(lead, -1, modulus)
        return cls(tuple(x * inv % modulus for x in c), modulus)

    @classmethod
    def parse(cls, text: str, modulus: int) -> "ProjectivePoint":
        return cls.normalize([int(x) for x in text.split(":")], modulus)

    def __str__(self):
        return ":".join(str(x) for x in self.coords)


def all_points(modulus: int, dim: int = 3) -> list[ProjectivePoint]:
    pts = set()
    for c in product(range(modulus), repeat=dim):
        if any(c):
            pts.add(ProjectivePoint.normalize(c, modulus))
    return sorted(pts)


class InvisibleSymbol(ValueError):
    """The bottom row of the symbol vanishes modulo the level."""


def projective_point(w: SubspaceTuple, modulus: int) -> ProjectivePoint:
    if w.n != 3:
        raise ValueError("projective points are defined for n = 3")
    bottom = w.matrix()[-1]
    if all(x % modulus == 0 for x in bottom):
        log.warning("symbol [%s] has bottom row vanishing mod %d", w, modulus)
        raise InvisibleSymbol(f"bottom row of [{w}] vanishes mod {modulus}")
    return ProjectivePoint.normalize(bottom, modulus)


def twisted_action_witness(bound: int = 2):
    """Find g, gamma in SL_2(Z) and a tuple w showing the twisted action ignores symbol equality.

    Left translates represent the same symbol, Xi_w == Xi_{gamma w}, yet g.w
    and g.(gamma w) have different norms, so they cannot be translates of each
    other.  Equivalently (g h).w and g.(h.w) differ once h.w is replaced by
    another representative of its symbol; on raw tuples the rule is associative.
    """
    rng = range(-bound, bound + 1)
    mats = []
    for a, b, c, d in product(rng, repeat=4):
        if a * d - b * c == 1:
            mats.append(((a, b), (c, d)))
    w = SubspaceTuple.standard(2)
    for gamma in mats:
        moved = translate(gamma, w)
        for g in mats:
            if norm(twisted_action(g, w)) != norm(twisted_action(g, moved)):
                return g, gamma, w
    return None
