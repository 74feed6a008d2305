import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omegaparity import zeta as zk
from omegaparity.residues import (Line, Problem, ResidueError, ResidueSet, compute_residues,
                                  h_zeta_denominator, quarter_zeta_denominator, residue_H,
                                  residue_H_quarter, residue_L, residue_M)


@pytest.fixture(scope="module")
def g1(zeros):
    return zeros[1]


def rho_of(rec, prec=100):
    with mpmath.mp.workprec(prec + 20):
        return mpmath.mpc(mpmath.mpf(1) / 2, rec.mpf(prec + 20))


def test_residue_M_modulus(g1):
    r = residue_M(g1, 64)
    with mpmath.mp.workprec(120):
        rho = rho_of(g1)
        d = zk.zeta_derivative(rho, 100)
        assert abs(abs(r.value) - 1 / (abs(rho) * abs(d))) < 2.0**-62 * abs(r.value)
    assert r.problem is Problem.MERTENS and r.line is Line.HALF


def test_residue_M_against_mpmath(zeros):
    for k in (1, 7, 500):
        with mpmath.mp.workprec(120):
            rho = mpmath.zetazero(k)
            ref = 1 / (rho * mpmath.zeta(rho, derivative=1))
        assert abs(residue_M(zeros[k], 64).value - ref) < 1e-17 * abs(ref)


def test_residue_not_a_zero():
    with pytest.raises(ResidueError):
        residue_M("14.0000000000000000000", 64)


def test_conjugate_symmetry(g1):
    with mpmath.mp.workprec(100):
        rho = rho_of(g1)
        conj = 1 / (mpmath.conj(rho) * zk.zeta_derivative(mpmath.conj(rho), 80))
        assert abs(conj - mpmath.conj(residue_M(g1, 80).value)) < 1e-20


def test_residue_L_relation(g1):
    with mpmath.mp.workprec(120):
        rm = residue_M(g1, 80).value
        rl = residue_L(g1, 80).value
        z2 = zk.zeta(2 * rho_of(g1), 80)
        assert abs(rl - z2 * rm) < 1e-22
        hi = residue_L(g1, 160).value
        assert abs(rl - hi) < 1e-22


def test_residue_L_partial_sums(zeros):
    mods = [abs(residue_L(zeros[k], 64).value) for k in range(1, 11)]
    assert all(m > 0 for m in mods)
    sums = np.cumsum(mods)
    assert (np.diff(sums) > 0).all()


def test_residue_H_closure(g1):
    prec = 80
    r = residue_H(g1, 10**5, prec)
    rho = rho_of(g1)
    with mpmath.mp.workprec(prec + 20):
        f6, _ = zk.f6(rho, 10**5, prec)
        closure = r.value * rho * zk.zeta_derivative(rho, prec) * h_zeta_denominator(rho, prec)
    assert abs(closure - f6) < 1e-20


def test_residue_H_prime_bound_and_precision(g1):
    a = residue_H(g1, 10**4, 64)
    b = residue_H(g1, 10**5, 64)
    assert abs(abs(a.value) - abs(b.value)) <= a.f6_tail * abs(b.value)
    m64 = residue_M(g1, 64).value
    m128 = residue_M(g1, 128).value
    ratio64 = abs(b.value / m64)
    ratio128 = abs(residue_H(g1, 10**5, 128).value / m128)
    assert abs(ratio64 - ratio128) < 1e-10


def test_residue_H_quarter(g1):
    q = residue_H_quarter(g1, 10**5, 64)
    h = residue_H(g1, 10**5, 64)
    assert abs(q.value) > 0 and q.line is Line.QUARTER
    rho = rho_of(g1)
    with mpmath.mp.workprec(84):
        f_h, _ = zk.f6(rho, 10**5, 64)
        f_q, _ = zk.f6(rho / 2, 10**5, 64)
        expect = (f_q / quarter_zeta_denominator(rho, 64)) / (f_h / h_zeta_denominator(rho, 64))
    assert abs(q.value / h.value - expect) < 1e-15 * abs(expect)
    q4 = residue_H_quarter(g1, 10**4, 64)
    assert abs(q4.value - q.value) <= q4.f6_tail * abs(q.value) * 1.01


@pytest.mark.parametrize("problem", list(Problem))
def test_float_path_matches(zeros, problem):
    for k in (1, 50, 2000):
        a = {Problem.MERTENS: residue_M, Problem.POLYA: residue_L}.get(problem)
        if a is None:
            lo = residue_H(zeros[k], 10**5, 30).value
            hi = residue_H(zeros[k], 10**5, 64).value
        else:
            lo, hi = a(zeros[k], 30).value, a(zeros[k], 64).value
        assert abs(complex(lo) - complex(hi)) < 1e-9 * abs(complex(hi))


def test_residue_set_csv_round_trip(tmp_path, zeros):
    rs = compute_residues(zeros, Problem.OMEGA, indices=range(1, 9), prec=64)
    p = tmp_path / "r.csv"
    rs.to_csv(p)
    back = ResidueSet.from_csv(p)
    assert back.problem is Problem.OMEGA
    assert list(back.indices) == list(range(1, 9))
    assert np.array_equal(back.values, rs.values)
    rs.to_csv(tmp_path / "r2.csv")
    assert p.read_bytes() == (tmp_path / "r2.csv").read_bytes()


def test_compute_residues_workers(zeros):
    a = compute_residues(zeros, "l", indices=range(1, 13), prec=64, workers=1)
    b = compute_residues(zeros, "l", indices=range(1, 13), prec=64, workers=3)
    assert np.array_equal(a.values, b.values)


@given(st.sampled_from(["m", "l", "h", "M", "mertens", "polya", "omega"]))
def test_problem_parse(text):
    assert Problem.parse(text) in set(Problem)
