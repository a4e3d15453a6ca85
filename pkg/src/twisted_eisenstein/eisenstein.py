"""Classical and twisted Eisenstein series on Gamma_0(N), plus SL_3 partial sums.

Sums run over Gamma_inf \\ Gamma_0(N), one coset per bottom row (c, d) up to
sign, truncated to max(|c|, |d|) <= B.  Every reduction goes through
math.fsum, which is exactly rounded and so independent of term order and of
how the work was split between threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .lie import ParabolicType, cone_contains, exponent_factor, sl2_parameter
from .modsym import (ProjectivePoint, SubspaceTuple, all_points, is_compatible,
                     is_identically_zero, projective_point, reduce_to_unimodular,
                     twisted_action)
from .periods import PeriodCocycle

DEFAULT_TAIL_CONSTANT = 10.0


class OutsideConvergence(ValueError):
    """Spectral parameter outside the region of absolute convergence."""


def fsum_complex(values) -> complex:
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))


@dataclass(frozen=True)
class CosetSet:
    level: int
    bound: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __len__(self):
        return len(self.c)

    def reps(self):
        for a, b, c, d in zip(self.a.tolist(), self.b.tolist(), self.c.tolist(), self.d.tolist()):
            yield ((a, b), (c, d))

    def rows(self):
        return list(zip(self.c.tolist(), self.d.tolist()))


def _solve_ad_minus_bc(c: np.ndarray, d: np.ndarray):
    """a, b with a d - b c = 1 for coprime pairs, by a vectorized extended Euclid."""
    r0, r1 = d.copy(), -c
    s0, s1 = np.ones_like(d), np.zeros_like(d)
    t0, t1 = np.zeros_like(d), np.ones_like(d)
    while np.any(r1):
        live = r1 != 0
        q = np.zeros_like(r0)
        q[live] = r0[live] // r1[live]
        r0, r1 = np.where(live, r1, r0), np.where(live, r0 - q * r1, r1)
        s0, s1 = np.where(live, s1, s0), np.where(live, s0 - q * s1, s1)
        t0, t1 = np.where(live, t1, t0), np.where(live, t0 - q * t1, t1)
    sign = np.sign(r0)          # r0 = +-1 = d s0 - c t0
    return s0 * sign, t0 * sign


def enumerate_cosets(N: int, B: int) -> CosetSet:
    """One representative per coset of Gamma_inf in Gamma_0(N), ordered by (c, d)."""
    if N < 1 or B < 1:
        raise ValueError("need N >= 1 and B >= 1")
    cs, ds = [np.array([0])], [np.array([1])]
    d_all = np.arange(-B, B + 1, dtype=np.int64)
    for c in range(N, B + 1, N):
        keep = np.gcd(c, d_all) == 1
        ds.append(d_all[keep])
        cs.append(np.full(int(keep.sum()), c, dtype=np.int64))
    c = np.concatenate(cs).astype(np.int64)
    d = np.concatenate(ds).astype(np.int64)
    a, b = _solve_ad_minus_bc(c, d)
    return CosetSet(N, B, a, b, c, d)


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    bound: int
    tail_estimate: float
    parameter: complex
    z: complex = 0j
    identically_zero: bool = False
    extra: dict = field(default_factory=dict)

    def record(self, key="s") -> dict:
        """NDJSON-ready dictionary."""
        return {
            "z": [self.z.real, self.z.imag],
            key: [complex(self.parameter).real, complex(self.parameter).imag],
            "B": self.bound,
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "tail_estimate": self.tail_estimate,
            **self.extra,
        }


def tail_estimate(z: complex, s: complex, B: int, C: float = DEFAULT_TAIL_CONSTANT) -> float:
    """C max(y^sigma, y^(1-sigma)) B^(2-2sigma) log(B+2).

    Rows with |d| > B contribute about y^sigma B^(2-2sigma); rows with c > B
    about y^(1-sigma) B^(2-2sigma), which dominates once Im z < 1.
    """
    sigma = complex(s).real
    if sigma <= 1:
        return math.inf
    y = z.imag
    return C * max(y ** sigma, y ** (1 - sigma)) * B ** (2 - 2 * sigma) * math.log(B + 2)


def _check_s(s):
    if complex(s).real <= 1:
        raise OutsideConvergence(
            f"Re s = {complex(s).real} <= 1: the series only converges for Re s > 1")


def im_powers(cosets: CosetSet, z: complex, s: complex, workers: int = 1) -> np.ndarray:
    """Im(gamma z)^s for every coset, in coset order."""
    c = cosets.c.astype(float)
    d = cosets.d.astype(float)
    y = z.imag

    def chunk(sl):
        q = (c[sl] * z.real + d[sl]) ** 2 + (c[sl] * y) ** 2
        return np.exp(complex(s) * np.log(y / q))

    if workers <= 1:
        return chunk(slice(None))
    edges = np.linspace(0, len(c), workers + 1).astype(int)
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(chunk, [slice(lo, hi) for lo, hi in zip(edges, edges[1:])]))
    return np.concatenate(parts)


def classical_eisenstein(z: complex, s: complex, cosets: CosetSet, C: float = DEFAULT_TAIL_CONSTANT,
                         workers: int = 1) -> SeriesValue:
    """E(z, s) = sum Im(gamma z)^s."""
    if z.imag <= 0:
        raise ValueError("z must lie in the upper half plane")
    _check_s(s)
    terms = im_powers(cosets, z, s, workers)
    return SeriesValue(fsum_complex(terms), cosets.bound, tail_estimate(z, s, cosets.bound, C),
                       complex(s), z)


def cocycle_values(cocycle: PeriodCocycle, cosets: CosetSet) -> np.ndarray:
    if cocycle.level != cosets.level:
        raise ValueError("cocycle and cosets have different levels")
    return np.array([cocycle.value(g) for g in cosets.reps()], dtype=complex)


def growth_constants(cocycle: PeriodCocycle, cosets: CosetSet) -> tuple[float, float]:
    """K, K' with |[gamma]_f| <= K log(c^2 + d^2 + 2) + K' on the enumerated cosets."""
    vals = np.abs(cocycle_values(cocycle, cosets))
    logs = np.log(cosets.c.astype(float) ** 2 + cosets.d.astype(float) ** 2 + 2)
    small = logs <= math.log(2 * cosets.level ** 2 + 2)
    k_prime = float(vals[small].max()) if small.any() else 0.0
    excess = np.clip(vals - k_prime, 0, None)
    k = float((excess / logs).max()) if len(vals) else 0.0
    return k, k_prime


def twisted_eisenstein(z: complex, s: complex, cosets: CosetSet, cocycle: PeriodCocycle,
                       C: float = DEFAULT_TAIL_CONSTANT, workers: int = 1,
                       growth: tuple[float, float] | None = None) -> SeriesValue:
    """E*(z, s) = sum [gamma]_f Im(gamma z)^s."""
    if z.imag <= 0:
        raise ValueError("z must lie in the upper half plane")
    _check_s(s)
    per = cocycle_values(cocycle, cosets)
    terms = per * im_powers(cosets, z, s, workers)
    k, k_prime = growth if growth is not None else growth_constants(cocycle, cosets)
    B = cosets.bound
    factor = k * math.log(2 * B * B + 2) + k_prime
    return SeriesValue(fsum_complex(terms), B, tail_estimate(z, s, B, C) * factor, complex(s), z)


def shift_residual(gamma, z: complex, s: complex, cosets: CosetSet, cocycle: PeriodCocycle,
                   C: float = DEFAULT_TAIL_CONSTANT, workers: int = 1) -> tuple[float, float]:
    """|E*(gamma z) - E*(z) + [gamma]_f E(z)| and the combined tail estimate."""
    (a, b), (c, d) = gamma
    gz = (a * z + b) / (c * z + d)
    growth = growth_constants(cocycle, cosets)
    e_star_gz = twisted_eisenstein(gz, s, cosets, cocycle, C, workers, growth)
    e_star_z = twisted_eisenstein(z, s, cosets, cocycle, C, workers, growth)
    e_z = classical_eisenstein(z, s, cosets, C, workers)
    g = cocycle.value(gamma)
    residual = abs(e_star_gz.value - e_star_z.value + g * e_z.value)
    bound = e_star_gz.tail_estimate + e_star_z.tail_estimate + abs(g) * e_z.tail_estimate
    return residual, bound


def _require_cone(t: complex):
    if not cone_contains(sl2_parameter(t), ParabolicType.minimal(2)):
        raise OutsideConvergence(f"Re t = {complex(t).real} <= 1/2 is outside the convergence cone")


def _second_line(w: SubspaceTuple):
    if w.n != 2 or not is_compatible(w, ParabolicType.minimal(2)):
        raise ValueError(f"[{w}] is not compatible with the minimal parabolic of SL_2")
    return w.vectors[1]


def combined_series(t: complex, z: complex, w: SubspaceTuple, cocycle: PeriodCocycle,
                    cosets: CosetSet, C: float = DEFAULT_TAIL_CONSTANT, workers: int = 1,
                    direct: bool = False) -> SeriesValue:
    """E*_{P, phi}(t, z, w) = sum phi(gamma . Xi_w) Im(gamma z)^{t + 1/2}.

    By default evaluated as phi(Xi_w) E(z, s) + E*(z, s); with direct=True the
    terms phi(gamma . Xi_w) are computed one coset at a time.
    """
    _require_cone(t)
    q = _second_line(w)
    s = complex(t) + 0.5
    growth = growth_constants(cocycle, cosets)
    if direct:
        phis = np.array([cocycle.twisted_phi(g, q) for g in cosets.reps()], dtype=complex)
        val = fsum_complex(phis * im_powers(cosets, z, s, workers))
        k, k_prime = growth
        B = cosets.bound
        base = abs(cocycle.cusp_value(q))
        tail = tail_estimate(z, s, B, C) * (k * math.log(2 * B * B + 2) + k_prime + base)
        return SeriesValue(val, B, tail, complex(t), z)
    phi_w = cocycle.cusp_value(q)
    e = classical_eisenstein(z, s, cosets, C, workers)
    e_star = twisted_eisenstein(z, s, cosets, cocycle, C, workers, growth)
    return SeriesValue(phi_w * e.value + e_star.value, cosets.bound,
                       abs(phi_w) * e.tail_estimate + e_star.tail_estimate, complex(t), z)


@dataclass(frozen=True)
class RelationCheck:
    residual: float
    tail_estimate: float
    max_term_residual: float
    degenerate: bool


def symbol_value(cocycle: PeriodCocycle, w: SubspaceTuple) -> complex:
    """phi(Xi_w) for an n = 2 tuple, through its unimodular chain (0 if degenerate)."""
    if not w.is_splitting():
        return 0j
    return cocycle.chain_value(reduce_to_unimodular(w))


def proposition_relation_check_sl2(W0, W1, W2, z: complex, s: complex, cocycle: PeriodCocycle,
                                   cosets: CosetSet, C: float = DEFAULT_TAIL_CONSTANT) -> RelationCheck:
    """Compare phi(Xi_{w(0)}) E with E*_{w(1)} - E*_{w(2)}, in total and coset by coset.

    Per coset the left side uses the left-translated symbol Xi(gamma W1, gamma W2),
    which is evaluated through its own unimodular chain.
    """
    W0, W1, W2 = (linalg.primitivize(v) for v in (W0, W1, W2))
    if W0 != (1, 0):
        raise ValueError("W0 must be the line through the first basis vector")
    _check_s(s)
    w1 = SubspaceTuple((W0, W2))
    w2 = SubspaceTuple((W0, W1))
    t = complex(s) - 0.5
    lhs_phi = symbol_value(cocycle, SubspaceTuple((W1, W2)))
    e = classical_eisenstein(z, s, cosets, C)
    r1 = combined_series(t, z, w1, cocycle, cosets, C, direct=True)
    r2 = combined_series(t, z, w2, cocycle, cosets, C, direct=True)
    residual = abs(lhs_phi * e.value - (r1.value - r2.value))
    tail = abs(lhs_phi) * e.tail_estimate + r1.tail_estimate + r2.tail_estimate
    worst = 0.0
    degenerate = W1 == W2
    for g in cosets.reps():
        left = 0j if degenerate else symbol_value(
            cocycle, SubspaceTuple((linalg.matvec(g, W1), linalg.matvec(g, W2))))
        right = cocycle.twisted_phi(g, W2) - cocycle.twisted_phi(g, W1)
        worst = max(worst, abs(left - right))
    return RelationCheck(residual, tail, worst, degenerate)


# ---------------------------------------------------------------------------
# SL_3


def sign_symmetry_orbit(p: ProjectivePoint) -> set[ProjectivePoint]:
    out = set()
    for signs in ((1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1)):
        out.add(ProjectivePoint.normalize([s * x for s, x in zip(signs, p.coords)], p.modulus))
    return out


def sign_symmetry_violations(table: "LinearFormTable", tol: float = 1e-12) -> list[ProjectivePoint]:
    """Points whose value changes when coordinates of the point flip sign.

    Linear forms evaluated through fixed primitive vectors must not see the
    sign chosen for each vector, which is exactly this symmetry.
    """
    bad = []
    for p, v in table.values.items():
        if any(abs(table.values[q] - v) > tol for q in sign_symmetry_orbit(p)):
            bad.append(p)
    return bad


DEFAULT_RELATIONS = (sign_symmetry_violations,)


@dataclass
class LinearFormTable:
    modulus: int
    values: dict

    def __post_init__(self):
        expected = self.modulus ** 2 + self.modulus + 1
        if len(self.values) != expected:
            raise ValueError(f"table has {len(self.values)} points, expected {expected}")

    def __call__(self, p: ProjectivePoint) -> complex:
        if p.modulus != self.modulus:
            raise ValueError(f"point modulus {p.modulus} does not match table modulus {self.modulus}")
        return self.values[p]

    def validate(self, relations=DEFAULT_RELATIONS) -> list:
        """Run every relation validator; returns the offending points (empty when valid)."""
        bad = []
        for rel in relations:
            bad.extend(rel(self))
        return bad

    @classmethod
    def parse(cls, text: str) -> "LinearFormTable":
        modulus, values = None, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "modulus":
                modulus = int(parts[1])
                continue
            if modulus is None:
                raise ValueError("the 'modulus' header must come first")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'x:y:z re im', got {raw!r}")
            p = ProjectivePoint.parse(parts[0], modulus)
            if str(p) != parts[0]:
                raise ValueError(f"line {lineno}: point {parts[0]} is not normalized")
            values[p] = complex(float(parts[1]), float(parts[2]))
        if modulus is None:
            raise ValueError("missing 'modulus' header")
        return cls(modulus, values)

    def dumps(self) -> str:
        lines = [f"modulus {self.modulus}"]
        for p in sorted(self.values):
            v = self.values[p]
            lines.append(f"{p} {v.real!r} {v.imag!r}")
        return "\n".join(lines) + "\n"


def synthetic_table(modulus: int) -> LinearFormTable:
    """A deterministic table on P^2(Z/l) that passes the sign-symmetry relation."""
    values = {}
    for p in all_points(modulus):
        orbit = min(sign_symmetry_orbit(p))
        x, y, z = orbit.coords
        values[p] = complex(math.cos(x + 2 * y + 3 * z), math.sin(x * y - z))
    return LinearFormTable(modulus, values)


def _sign_key(v):
    lead = next((x for x in v if x), 0)
    return (lead < 0, tuple(v))


def sl3_coset_canonicalize(gamma):
    """Normal form of Gamma_{P0} gamma, P0 the upper triangular Borel.

    Row 3 is sign-normalized, row 2 is reduced modulo row 3 (sign chosen to
    make the leading entry positive, ties broken lexicographically), and row 1 is reduced modulo the lattice of rows 2 and 3; its sign
    is then forced by det = 1.
    """
    g = [list(r) for r in gamma]
    if linalg.det(g) != 1:
        raise ValueError("gamma must lie in SL_3(Z)")
    r3 = list(linalg.primitivize(g[2]))
    j = next(i for i, x in enumerate(r3) if x)

    def reduce_mod_r3(v):
        k = v[j] // r3[j]
        return [a - k * b for a, b in zip(v, r3)]

    r2 = min(reduce_mod_r3(g[1]), reduce_mod_r3([-x for x in g[1]]), key=_sign_key)
    _, h = linalg.row_hermite_form((tuple(r2), tuple(r3), (0, 0, 0)))
    basis = [list(h[0]), list(h[1])]
    r1 = list(g[0])
    for row in basis:
        piv = next(i for i, x in enumerate(row) if x)
        k = r1[piv] // row[piv]
        r1 = [a - k * b for a, b in zip(r1, row)]
    m = (tuple(r1), tuple(r2), tuple(r3))
    if linalg.det(m) == -1:
        r1 = [-x for x in r1]
        for row in basis:
            piv = next(i for i, x in enumerate(row) if x)
            k = r1[piv] // row[piv]
            r1 = [a - k * b for a, b in zip(r1, row)]
        m = (tuple(r1), tuple(r2), tuple(r3))
    return m


def random_gamma0_sl3(level: int, rng, steps: int = 6, size: int = 2):
    """Random element of Gamma_0(level) in SL_3(Z) as a product of elementary matrices."""
    g = linalg.identity(3)
    for _ in range(steps):
        i, j = rng.sample(range(3), 2)
        k = rng.randint(-size, size)
        if i == 2:
            k *= level
        e = [list(r) for r in linalg.identity(3)]
        e[i][j] = k
        g = linalg.matmul(tuple(map(tuple, e)), g)
    return g


def coset_sample(level: int, count: int, rng, steps: int = 6, size: int = 2):
    """Distinct canonical representatives of Gamma_{P0} \\ Gamma_0(level), sorted."""
    seen = set()
    tries = 0
    while len(seen) < count and tries < 50 * count:
        seen.add(sl3_coset_canonicalize(random_gamma0_sl3(level, rng, steps, size)))
        tries += 1
    return sorted(seen)


def sl3_phi(w: SubspaceTuple, table: LinearFormTable) -> complex:
    """phi(Xi_w) = sum of table values at the points of w's unimodular chain."""
    if not w.is_splitting():
        return 0j
    chain = reduce_to_unimodular(w)
    vals = [coef * table(projective_point(t, table.modulus)) for coef, t in chain.terms]
    return fsum_complex(vals) if vals else 0j


def sl3_twisted_partial_sum(w: SubspaceTuple, table: LinearFormTable, lam, g, sample) -> complex:
    """sum over the sample of phi(gamma . Xi_w) exp(<rho + lambda, H(gamma g)>)."""
    P0 = ParabolicType.minimal(3)
    if w.n != 3 or not is_compatible(w, P0):
        raise ValueError(f"[{w}] is not compatible with the minimal parabolic of SL_3")
    if not cone_contains(lam, P0):
        raise OutsideConvergence("spectral parameter is outside the convergence cone")
    if is_identically_zero(w):
        return 0j
    g = np.asarray(g, dtype=float)
    terms = []
    for gamma in sample:
        phi = sl3_phi(twisted_action(gamma, w), table)
        if phi == 0:
            continue
        terms.append(phi * exponent_factor(np.asarray(gamma, dtype=float) @ g, lam, P0))
    return fsum_complex(terms) if terms else 0j
