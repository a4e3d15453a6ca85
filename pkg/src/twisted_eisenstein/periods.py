"""Weight-2 cusp forms of elliptic curves, their period cocycle and L-values.

Conventions: F(z) = sum a_n/n e^{2 pi i n z}, so F' = 2 pi i f and

    phi(Xi(q1, q2)) = -2 pi i int_{q1}^{q2} f(z) dz = F(q1) - F(q2),
    [gamma]_f       = F(z0) - F(gamma z0).

Cusps are written as primitive column vectors (a, c), standing for a/c; the
cusp at infinity is (1, 0).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from . import linalg

TWO_PI = 2.0 * math.pi


class NotInGroup(ValueError):
    """Matrix is not in the congruence subgroup Gamma_0(N)."""


class UnsupportedCusp(ValueError):
    """Cusp lies outside the Gamma_0(N)-orbits of infinity and 0."""


# ---------------------------------------------------------------------------
# elliptic curves and Fourier coefficients


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


@dataclass(frozen=True)
class EllipticCurveQ:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError("singular Weierstrass equation")
        if self.conductor < 1:
            raise ValueError("conductor must be positive")

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def discriminant(self) -> int:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def bad_primes(self) -> list[int]:
        d = abs(self.discriminant)
        return [p for p in primes_up_to(int(math.isqrt(d)) + 1) if d % p == 0] or (
            [d] if d > 1 else [])

    def check_bad_prime_data(self, bad_coeffs) -> None:
        """Every prime dividing the conductor must come with a supplied a_p."""
        for p in primes_up_to(self.conductor):
            if self.conductor % p == 0 and p not in bad_coeffs:
                raise ValueError(f"missing a_{p} for bad prime {p}")
            if self.conductor % p == 0 and self.discriminant % p:
                raise ValueError(f"prime {p} divides the conductor but not the discriminant")


def ap_point_count(E: EllipticCurveQ, p: int) -> int:
    """a_p = p + 1 - #E(F_p) for a prime of good reduction."""
    if E.discriminant % p == 0:
        raise ValueError(f"p = {p} is a bad prime; supply a_{p} through bad_prime_coeffs")
    a1, a2, a3, a4, a6 = (x % p for x in E.ainvs)
    if p == 2:
        affine = sum(1 for x in range(2) for y in range(2)
                     if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0)
        return p + 1 - (affine + 1)
    x = np.arange(p, dtype=np.int64)
    rhs = ((x * x) % p * x + a2 * (x * x % p) + a4 * x + a6) % p
    disc = (4 * rhs + (a1 * x + a3) ** 2) % p
    chi = -np.ones(p, dtype=np.int64)
    chi[(x * x) % p] = 1
    chi[0] = 0
    return -int(chi[disc].sum())


@dataclass(frozen=True)
class FourierCoefficients:
    values: tuple[int, ...]            # a_1 .. a_N
    level: int
    fricke_sign: int = 1
    bad_prime_coeffs: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n: int) -> int:
        return self.values[n - 1]

    @cached_property
    def weights(self) -> np.ndarray:
        """a_n / n as floats, index 0 holding n = 1."""
        n = np.arange(1, len(self.values) + 1, dtype=float)
        return np.array(self.values, dtype=float) / n

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    @classmethod
    def zero(cls, level: int, terms: int) -> "FourierCoefficients":
        return cls((0,) * terms, level, 1, {})


def smallest_prime_factors(n: int) -> list[int]:
    spf = list(range(n + 1))
    for p in range(2, int(n ** 0.5) + 1):
        if spf[p] == p:
            for k in range(p * p, n + 1, p):
                if spf[k] == k:
                    spf[k] = p
    return spf


def hecke_extend(seed, n_terms: int, level: int, fricke_sign: int = 1) -> FourierCoefficients:
    """Fill in a_1..a_N from the prime coefficients."""
    spf = smallest_prime_factors(n_terms)
    a = [0] * (n_terms + 1)
    if n_terms >= 1:
        a[1] = 1
    for n in range(2, n_terms + 1):
        p = spf[n]
        if p not in seed:
            raise KeyError(f"missing seed coefficient a_{p}")
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            a[n] = a[n // m] * a[m]
        elif level % p == 0:
            a[n] = seed[p] ** k
        elif k == 1:
            a[n] = seed[p]
        else:
            a[n] = seed[p] * a[n // p] - p * a[n // (p * p)]
    bad = {p: seed[p] for p in seed if level % p == 0}
    return FourierCoefficients(tuple(a[1:]), level, fricke_sign, bad)


def curve_coefficients(E: EllipticCurveQ, n_terms: int, bad_prime_coeffs, fricke_sign: int = 1):
    E.check_bad_prime_data(bad_prime_coeffs)
    seed = {}
    for p in primes_up_to(n_terms):
        if E.conductor % p == 0:
            seed[p] = int(bad_prime_coeffs[p])
        else:
            seed[p] = ap_point_count(E, p)
    return hecke_extend(seed, n_terms, E.conductor, fricke_sign)


# ---------------------------------------------------------------------------
# the antiderivative F and L(1, f)


def terms_needed(y: float, tol: float) -> int:
    """Smallest n0 with sum_{n > n0} e^{-2 pi n y} < tol (uses |a_n / n| <= 1)."""
    r = math.exp(-TWO_PI * y)
    # r^(n0+1) / (1 - r) < tol
    n0 = math.log(tol * (1.0 - r)) / math.log(r) - 1.0
    return max(1, math.ceil(n0))


def tail_bound(y: float, n0: int) -> float:
    r = math.exp(-TWO_PI * y)
    return r ** (n0 + 1) / (1.0 - r)


@dataclass(frozen=True)
class Truncated:
    value: complex
    error: float
    terms: int


def antiderivative(form: FourierCoefficients, z: complex, tol: float = 1e-13,
                   floor: float = 1e-3, terms: int | None = None) -> Truncated:
    """F(z) = -2 pi i int_z^{i inf} f, with a bound on the truncation error."""
    y = z.imag
    if y < floor:
        raise ValueError(f"Im z = {y} is below the floor {floor}")
    n0 = terms if terms is not None else terms_needed(y, tol)
    if n0 > len(form):
        raise ValueError(f"need {n0} coefficients at Im z = {y}, have {len(form)}")
    n = np.arange(1, n0 + 1, dtype=float)
    q = np.exp(TWO_PI * 1j * n * z)
    vals = form.weights[:n0] * q
    value = complex(math.fsum(vals.real), math.fsum(vals.imag))
    return Truncated(value, tail_bound(y, n0), n0)


def special_value_L1(form: FourierCoefficients, tol: float = 1e-13) -> Truncated:
    """L(1, f) = (1 + eps) sum a_n/n e^{-2 pi n / sqrt N}."""
    if form.fricke_sign == -1:
        return Truncated(0.0, 0.0, 0)
    y = 1.0 / math.sqrt(form.level)
    n0 = min(terms_needed(y, tol / 2), len(form))
    n = np.arange(1, n0 + 1, dtype=float)
    s = math.fsum(form.weights[:n0] * np.exp(-TWO_PI * n * y))
    factor = 1 + form.fricke_sign
    return Truncated(factor * s, factor * tail_bound(y, n0), n0)


def split_integral_L1(form: FourierCoefficients) -> float:
    """L(1, f) by quadrature: 2 pi int_0^inf f(iy) dy, folded at 1/sqrt N by the Fricke involution."""
    y0 = 1.0 / math.sqrt(form.level)
    n0 = min(terms_needed(y0, 1e-16), len(form))
    n = np.arange(1, n0 + 1, dtype=float)
    a = form.array[:n0]

    def f_iy(y):
        return float(np.dot(a, np.exp(-TWO_PI * n * y)))

    upper, _ = integrate.quad(f_iy, y0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return TWO_PI * (1 + form.fricke_sign) * upper


def phi_infinity_zero_split(form: FourierCoefficients) -> float:
    """phi(Xi(inf, 0)) along inf -> i/sqrt N -> 0; the lower leg is moved up by the Fricke involution."""
    y0 = 1.0 / math.sqrt(form.level)
    F = antiderivative(form, complex(0.0, y0)).value
    upper = -F                               # F(i inf) - F(i/sqrt N)
    lower = -form.fricke_sign * F            # eta * F(i/sqrt N), eta = -eps
    return (upper + lower).real


# ---------------------------------------------------------------------------
# the period cocycle


def _p1_normalize(c: int, d: int, N: int) -> tuple[int, int]:
    c, d = c % N, d % N
    if N == 1:
        return (0, 0)
    best = None
    for u in range(1, N):
        if math.gcd(u, N) == 1:
            cand = (u * c % N, u * d % N)
            if best is None or cand < best:
                best = cand
    return best


class PeriodCocycle:
    """gamma -> [gamma]_f on Gamma_0(N), with a thread-safe cache keyed by bottom row."""

    def __init__(self, form: FourierCoefficients, tolerance: float = 1e-13):
        self.form = form
        self.level = form.level
        self.tolerance = tolerance
        self.cache: dict[tuple[int, int], complex] = {}
        self._tables: dict[int, np.ndarray] = {}
        self._manin: dict[tuple[int, int], complex] | None = None
        self._lock = threading.Lock()
        self.L1 = special_value_L1(form).value
        self.phi_inf_zero = -self.L1

    # -- direct evaluation -------------------------------------------------

    def direct_limit(self) -> int:
        """Largest c whose period table fits in the available q-expansion."""
        c = 1
        while terms_needed(1.0 / (2 * c), self.tolerance) <= len(self.form):
            c *= 2
        lo, hi = c // 2, c
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if terms_needed(1.0 / mid, self.tolerance) <= len(self.form):
                lo = mid
            else:
                hi = mid
        return lo

    def period_table(self, c: int) -> np.ndarray:
        """F((r + i)/c) for r = 0..c-1, by grouping the q-expansion by n mod c."""
        with self._lock:
            tab = self._tables.get(c)
        if tab is not None:
            return tab
        n0 = terms_needed(1.0 / c, self.tolerance)
        if n0 > len(self.form):
            raise ValueError(f"period table for c = {c} needs {n0} coefficients")
        n = np.arange(1, n0 + 1)
        w = self.form.weights[:n0] * np.exp(-TWO_PI * n / c)
        grouped = np.zeros(c)
        np.add.at(grouped, n % c, w)
        tab = np.fft.ifft(grouped) * c
        with self._lock:
            self._tables[c] = tab
        return tab

    def _direct(self, a: int, c: int, d: int) -> complex:
        tab = self.period_table(c)
        return complex(tab[(-d) % c] - tab[a % c])

    # -- Manin-symbol evaluation for large c ---------------------------------

    def cusp_value(self, cusp) -> complex:
        """phi(Xi(inf, cusp)) for a cusp in the orbit of infinity or of 0."""
        a, c = linalg.primitivize(cusp)
        if c < 0:
            a, c = -a, -c
        N = self.level
        if c == 0:
            return 0j
        if c % N == 0:
            return self.value(linalg.complete_to_sl2(a, c))
        if math.gcd(c, N) == 1:
            g, x, y = linalg.extended_gcd(c, a * N)
            delta = ((x, a), (-y * N, c))
            return self.phi_inf_zero + self.value(delta)
        raise UnsupportedCusp(f"cusp {a}/{c} is not Gamma_0({N})-equivalent to infinity or 0")

    def manin_table(self) -> dict[tuple[int, int], complex]:
        """phi(Xi(g inf, g 0)) for one g per point of P^1(Z/N)."""
        if self._manin is not None:
            return self._manin
        N = self.level
        index = N
        for p in primes_up_to(N):
            if N % p == 0:
                index = index // p * (p + 1)
        table: dict = {}
        radius = 0
        while len(table) < index:
            radius += 1
            for c in range(0, radius + 1):
                for d in range(-radius, radius + 1):
                    if max(abs(c), abs(d)) != radius or math.gcd(c, d) != 1:
                        continue
                    key = _p1_normalize(c, d, N)
                    if key in table:
                        continue
                    _, x, y = linalg.extended_gcd(c, d)   # c x + d y = 1
                    g = ((y, -x), (c, d))
                    table[key] = self.cusp_value((g[0][1], g[1][1])) - self.cusp_value((g[0][0], g[1][0]))
        self._manin = table
        return table

    def unimodular_path(self, u, v) -> complex:
        """phi(Xi(u, v)) for cusps u, v with det(u, v) = +-1."""
        dt = u[0] * v[1] - u[1] * v[0]
        if dt not in (1, -1):
            raise ValueError("path is not unimodular")
        g = ((u[0], dt * v[0]), (u[1], dt * v[1]))     # g inf = u, g 0 = v
        return self.manin_table()[_p1_normalize(g[1][0], g[1][1], self.level)]

    def _via_convergents(self, a: int, c: int) -> complex:
        """[gamma]_f = phi(Xi(inf, a/c)) summed over the convergent path."""
        from .modsym import SubspaceTuple, reduce_to_unimodular
        chain = reduce_to_unimodular(SubspaceTuple(((1, 0), (a, c))))
        vals = [coef * self.unimodular_path(*t.vectors) for coef, t in chain.terms]
        return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))

    # -- public ----------------------------------------------------------------

    def check(self, gamma):
        (a, b), (c, d) = gamma
        if a * d - b * c != 1:
            raise NotInGroup(f"{gamma} does not have determinant 1")
        if c % self.level:
            raise NotInGroup(f"{gamma} is not in Gamma_0({self.level})")

    def value(self, gamma) -> complex:
        self.check(gamma)
        (a, b), (c, d) = gamma
        if c == 0:
            return 0j
        if c < 0:
            a, b, c, d = -a, -b, -c, -d
        key = (c, d)
        with self._lock:
            hit = self.cache.get(key)
        if hit is not None:
            return hit
        if terms_needed(1.0 / c, self.tolerance) <= len(self.form):
            val = self._direct(a, c, d)
        else:
            val = self._via_convergents(a, c)
        with self._lock:
            self.cache[key] = val
        return val

    def value_at(self, gamma, z0: complex) -> complex:
        """F(z0) - F(gamma z0) at an arbitrary base point, uncached."""
        self.check(gamma)
        (a, b), (c, d) = gamma
        gz = (a * z0 + b) / (c * z0 + d)
        return (antiderivative(self.form, z0, self.tolerance / 10).value
                - antiderivative(self.form, gz, self.tolerance / 10).value)

    def twisted_phi(self, gamma, cusp=(0, 1)) -> complex:
        """phi(gamma . Xi(inf, cusp)) = phi(Xi(inf, gamma cusp))."""
        self.check(gamma)
        a, c = linalg.primitivize(cusp)
        if c < 0:
            a, c = -a, -c
        N = self.level
        if c % N == 0:
            delta = linalg.complete_to_sl2(a, c) if c else ((1, 0), (0, 1))
            return self.value(linalg.matmul(gamma, delta))
        if math.gcd(c, N) == 1:
            _, x, y = linalg.extended_gcd(c, a * N)
            delta = ((x, a), (-y * N, c))
            return self.value(linalg.matmul(gamma, delta)) + self.phi_inf_zero
        raise UnsupportedCusp(f"cusp {a}/{c} is not Gamma_0({N})-equivalent to infinity or 0")

    def pair_value(self, q1, q2) -> complex:
        """phi(Xi(q1, q2)) = phi(Xi(inf, q2)) - phi(Xi(inf, q1))."""
        return self.cusp_value(q2) - self.cusp_value(q1)

    def chain_value(self, chain) -> complex:
        """phi of a chain of unimodular n = 2 symbols, through the Manin table."""
        vals = [coef * self.unimodular_path(*t.vectors) for coef, t in chain.terms]
        return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


# ---------------------------------------------------------------------------
# SL_3 Hecke data over Z[rho], rho^2 = -11


@dataclass(frozen=True)
class QuadInt:
    x: int
    y: int
    d: int = -11

    def __add__(self, other):
        other = _lift(other, self.d)
        return QuadInt(self.x + other.x, self.y + other.y, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadInt(-self.x, -self.y, self.d)

    def __sub__(self, other):
        return self + (-_lift(other, self.d))

    def __mul__(self, other):
        other = _lift(other, self.d)
        return QuadInt(self.x * other.x + self.d * self.y * other.y,
                       self.x * other.y + self.y * other.x, self.d)

    __rmul__ = __mul__

    def conj(self):
        return QuadInt(self.x, -self.y, self.d)

    def __complex__(self):
        return complex(self.x, 0) + self.y * complex(0, math.sqrt(-self.d))

    def __str__(self):
        if self.y == 0:
            return str(self.x)
        r = "rho" if abs(self.y) == 1 else f"{abs(self.y)}*rho"
        if self.x == 0:
            return r if self.y > 0 else f"-{r}"
        return f"{self.x}{'+' if self.y > 0 else '-'}{r}"


def _lift(v, d):
    return v if isinstance(v, QuadInt) else QuadInt(int(v), 0, d)


@dataclass(frozen=True)
class HeckeEigenData:
    prime: int
    eigenvalue: QuadInt


def parse_eigen_data(text: str) -> dict[int, HeckeEigenData]:
    """Lines "p x y" meaning a_p = x + y rho; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'p x y', got {raw!r}")
        p, x, y = (int(s) for s in parts)
        out[p] = HeckeEigenData(p, QuadInt(x, y))
    return out


def local_L_factor(a_p, p: int, level: int | None = None) -> tuple[QuadInt, ...]:
    """Coefficients of 1 - a_p X + p conj(a_p) X^2 - p^3 X^3 in X = p^{-s}."""
    if level is not None and level % p == 0:
        raise ValueError(f"p = {p} divides the level {level}")
    if isinstance(a_p, HeckeEigenData):
        a_p = a_p.eigenvalue
    a = _lift(a_p, -11)
    return (QuadInt(1, 0, a.d), -a, p * a.conj(), QuadInt(-p ** 3, 0, a.d))
