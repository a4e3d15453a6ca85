import math
import random

import mpmath
import numpy as np
import pytest

from twisted_eisenstein import linalg
from twisted_eisenstein.config import fixture_path
from twisted_eisenstein.eisenstein import (LinearFormTable, OutsideConvergence,
                                           classical_eisenstein, combined_series,
                                           coset_sample, enumerate_cosets, fsum_complex,
                                           proposition_relation_check_sl2, random_gamma0_sl3,
                                           shift_residual, sign_symmetry_violations,
                                           sl3_coset_canonicalize, sl3_phi,
                                           sl3_twisted_partial_sum, synthetic_table,
                                           tail_estimate, twisted_eisenstein)
from twisted_eisenstein.lie import ParabolicType, rho
from twisted_eisenstein.modsym import (ProjectivePoint, SubspaceTuple, all_points,
                                       twisted_action)
from twisted_eisenstein.periods import FourierCoefficients, PeriodCocycle


@pytest.fixture(scope="module")
def cosets200():
    return enumerate_cosets(11, 200)


@pytest.fixture(scope="module")
def table5():
    return LinearFormTable.parse(fixture_path("table_p2_f5.txt").read_text())


def test_enumerate_examples():
    cs = enumerate_cosets(1, 1)
    assert set(cs.rows()) == {(0, 1), (1, 0), (1, 1), (1, -1)}
    assert cs.rows()[0] == (0, 1)
    assert enumerate_cosets(11, 10).rows() == [(0, 1)]
    for N, B in ((1, 20), (11, 100), (4, 37)):
        cs = enumerate_cosets(N, B)
        for (a, b), (c, d) in cs.reps():
            assert a * d - b * c == 1
            assert c % N == 0 and max(abs(c), abs(d)) <= B
        assert cs.rows() == sorted(cs.rows())
        assert len(set(cs.rows())) == len(cs)
    with pytest.raises(ValueError):
        enumerate_cosets(0, 5)


@pytest.mark.parametrize("B", [1, 2, 7, 15, 30])
def test_coset_completeness(B):
    # all SL_2(Z) matrices with entries <= B, bottom row taken up to sign
    r = np.arange(-B, B + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    found = set()
    for c in range(-B, B + 1):
        for d in range(-B, B + 1):
            if np.any(a * d - b * c == 1):
                found.add((c, d) if (c > 0 or (c == 0 and d > 0)) else (-c, -d))
    assert found == set(enumerate_cosets(1, B).rows())


def test_tail_estimate_formula():
    assert tail_estimate(1j, 2, 100) == pytest.approx(10 * 100 ** -2 * math.log(102))
    assert tail_estimate(1j, 1.0, 100) == math.inf
    ratio = tail_estimate(1j, 2, 400) / tail_estimate(1j, 2, 200)
    assert 0.25 < ratio < 0.3


def test_classical_refuses_outside_convergence():
    cs = enumerate_cosets(1, 5)
    with pytest.raises(OutsideConvergence):
        classical_eisenstein(1j, 0.9, cs)
    with pytest.raises(OutsideConvergence):
        classical_eisenstein(1j, 1.0 + 3j, cs)
    with pytest.raises(ValueError):
        classical_eisenstein(-1j, 2, cs)


def test_classical_level1_closed_form():
    # E(i, 2) = 2 zeta(2) beta(2) / zeta(4) for the sum over coprime (c, d) up to sign
    exact = float(2 * mpmath.zeta(2) * mpmath.catalan / mpmath.zeta(4))
    e = classical_eisenstein(1j, 2, enumerate_cosets(1, 400))
    assert abs(e.value - exact) < e.tail_estimate


@pytest.mark.parametrize("s", [1.3, 1.5, 2, 2.5 + 1j])
def test_classical_automorphy(cosets200, s):
    for gamma in (((1, 0), (11, 1)), ((12, 1), (11, 1)), ((4, -1), (33, -8))):
        for z in (1j, 0.3 + 0.8j, -0.2 + 1.7j):
            (a, b), (c, d) = gamma
            gz = (a * z + b) / (c * z + d)
            e1 = classical_eisenstein(gz, s, cosets200)
            e0 = classical_eisenstein(z, s, cosets200)
            assert abs(e1.value - e0.value) <= e1.tail_estimate + e0.tail_estimate


def test_twisted_zero_form():
    coc = PeriodCocycle(FourierCoefficients.zero(11, 2000))
    cs = enumerate_cosets(11, 60)
    assert twisted_eisenstein(1j, 1.5, cs, coc).value == 0
    w = SubspaceTuple.standard(2)
    assert combined_series(1, 1j, w, coc, cs).value == 0


def test_twisted_cauchy(cocycle11):
    vals = [twisted_eisenstein(1j, 1.5, enumerate_cosets(11, B), cocycle11) for B in (100, 200, 400)]
    for lo, hi in zip(vals, vals[1:]):
        assert abs(lo.value - hi.value) <= lo.tail_estimate + hi.tail_estimate
    assert vals[0].tail_estimate > vals[1].tail_estimate > vals[2].tail_estimate


def test_shift_relation(cocycle11, cosets200):
    for gamma in (((1, 0), (11, 1)), ((12, 1), (11, 1))):
        res, bound = shift_residual(gamma, 1j, 1.5, cosets200, cocycle11)
        assert res < bound


def test_workers_do_not_change_values(cocycle11):
    cs = enumerate_cosets(11, 120)
    one = twisted_eisenstein(0.3 + 0.8j, 2, cs, cocycle11, workers=1)
    many = twisted_eisenstein(0.3 + 0.8j, 2, cs, cocycle11, workers=5)
    assert one == many
    assert classical_eisenstein(1j, 1.5, cs, workers=1) == classical_eisenstein(1j, 1.5, cs, workers=3)


def test_fsum_permutation_invariant():
    rng = np.random.default_rng(0)
    vals = rng.normal(size=5000) * 10.0 ** rng.integers(-8, 8, 5000) + 1j * rng.normal(size=5000)
    base = fsum_complex(vals)
    for _ in range(5):
        assert fsum_complex(rng.permutation(vals)) == base


def test_combined_series(cocycle11):
    cs = enumerate_cosets(11, 100)
    w = SubspaceTuple.standard(2)
    ident = combined_series(1, 1j, w, cocycle11, cs)
    direct = combined_series(1, 1j, w, cocycle11, cs, direct=True)
    assert abs(ident.value - direct.value) <= ident.tail_estimate + direct.tail_estimate
    assert abs(ident.value - direct.value) < 1e-12
    with pytest.raises(OutsideConvergence):
        combined_series(0.4, 1j, w, cocycle11, cs)
    with pytest.raises(ValueError):
        combined_series(1, 1j, SubspaceTuple.parse("0,1 1,0"), cocycle11, cs)


def test_prop_relation_term_level(cocycle11):
    cs = enumerate_cosets(11, 50)
    check = proposition_relation_check_sl2((1, 0), (0, 1), (1, 1), 1j, 1.5, cocycle11, cs)
    assert check.max_term_residual < 1e-9
    assert check.residual <= check.tail_estimate
    check = proposition_relation_check_sl2((1, 0), (2, 11), (3, 11), 0.2 + 1j, 2, cocycle11, cs)
    assert check.max_term_residual < 1e-9


def test_prop_relation_degenerate(cocycle11):
    cs = enumerate_cosets(11, 30)
    check = proposition_relation_check_sl2((1, 0), (1, 1), (1, 1), 1j, 2, cocycle11, cs)
    assert check.degenerate and check.residual == 0 and check.max_term_residual == 0


def test_prop_relation_shrinks(cocycle11):
    res = [proposition_relation_check_sl2((1, 0), (0, 1), (1, 1), 0.3 + 0.8j, 1.5, cocycle11,
                                          enumerate_cosets(11, B)).residual for B in (50, 100)]
    assert res[1] <= res[0] + 1e-12


# -- SL_3 --------------------------------------------------------------------


def random_borel(rng, size=5):
    g = [[rng.choice((1, -1)) if i == j else (rng.randint(-size, size) if j > i else 0)
          for j in range(3)] for i in range(3)]
    if linalg.det(g) != 1:
        g[0] = [-x for x in g[0]]
    return tuple(map(tuple, g))


def test_canonicalize_borel_elements():
    rng = random.Random(1)
    for _ in range(50):
        assert sl3_coset_canonicalize(random_borel(rng)) == linalg.identity(3)


def test_canonicalize_pairs():
    rng = random.Random(2)
    for _ in range(200):
        g = random_gamma0_sl3(53, rng, steps=8, size=3)
        p = random_borel(rng)
        canon = sl3_coset_canonicalize(g)
        assert canon == sl3_coset_canonicalize(linalg.matmul(p, g))
        assert linalg.det(canon) == 1
        # same coset: canon g^{-1} is upper triangular
        q = linalg.matmul(canon, linalg.inverse_unimodular(g))
        assert all(q[i][j] == 0 for i in range(3) for j in range(i))


def test_canonicalize_distinct_bottom_rows():
    rng = random.Random(3)
    seen = {}
    for _ in range(200):
        canon = sl3_coset_canonicalize(random_gamma0_sl3(5, rng))
        bottom = canon[2]
        assert seen.setdefault(bottom, canon)[2] == bottom


def test_table_fixture(table5):
    assert table5.modulus == 5 and len(table5.values) == 31
    assert table5.validate() == []
    assert LinearFormTable.parse(table5.dumps()) == table5
    assert table5 == synthetic_table(5)
    with pytest.raises(ValueError):
        table5(ProjectivePoint.normalize((0, 0, 1), 7))


def test_table_parse_errors():
    with pytest.raises(ValueError):
        LinearFormTable.parse("0:0:1 1 0\n")
    with pytest.raises(ValueError):
        LinearFormTable.parse("modulus 2\n0:0:1 1 0\n")
    with pytest.raises(ValueError):
        LinearFormTable.parse("modulus 2\n0:0:2 1 0\n")


def test_sign_symmetry_validator():
    values = {p: complex(i, 0) for i, p in enumerate(all_points(3))}
    table = LinearFormTable(3, values)
    assert sign_symmetry_violations(table)
    assert synthetic_table(3).validate() == []


def test_sl3_partial_sum_examples(table5):
    w = SubspaceTuple.standard(3)
    lam = 1.2 * rho(ParabolicType.minimal(3))
    assert sl3_twisted_partial_sum(w, table5, lam, np.eye(3), []) == 0
    single = sl3_twisted_partial_sum(w, table5, lam, np.eye(3), [linalg.identity(3)])
    assert single == table5(ProjectivePoint.normalize((0, 0, 1), 5))
    with pytest.raises(OutsideConvergence):
        sl3_twisted_partial_sum(w, table5, 0.5 * rho(ParabolicType.minimal(3)), np.eye(3), [])
    with pytest.raises(ValueError):
        sl3_twisted_partial_sum(SubspaceTuple.parse("0,1,0 1,0,0 0,0,1"), table5, lam,
                                np.eye(3), [])
    degenerate = SubspaceTuple.parse("1,0,0 0,1,0 0,1,0")
    assert sl3_twisted_partial_sum(degenerate, table5, lam, np.eye(3),
                                   [linalg.identity(3)]) == 0


def test_sl3_partial_sum_deterministic(table5):
    rng = random.Random(4)
    sample = coset_sample(5, 15, rng)
    w = SubspaceTuple.parse("1,0,0 1,1,0 0,1,1")
    lam = np.array([1.5, 0.0, -1.5])
    g = np.array([[1.0, 0.3, 0.1], [0, 1, 0.2], [0, 0, 1]])
    a = sl3_twisted_partial_sum(w, table5, lam, g, sample)
    b = sl3_twisted_partial_sum(w, table5, lam, g, list(reversed(sample)))
    assert a == b


def test_sl3_well_definedness_probe(table5):
    rng = random.Random(5)
    w = SubspaceTuple.parse("1,0,0 1,2,0 1,1,3")
    checked = 0
    for _ in range(200):
        gamma = random_gamma0_sl3(5, rng, steps=6, size=2)
        p = random_borel(rng)
        try:
            a = sl3_phi(twisted_action(gamma, w), table5)
            b = sl3_phi(twisted_action(linalg.matmul(p, gamma), w), table5)
        except ValueError:
            continue
        checked += 1
        assert abs(a - b) < 1e-12
    assert checked > 150
