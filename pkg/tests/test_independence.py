from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omegaparity import independence as ind
from omegaparity.independence import LatticeBasis, LatticeKind


def basis_of(rows, kind=LatticeKind.LAMBDA0):
    return LatticeBasis(tuple(tuple(r) for r in rows), kind, 0)


def matmul(A, B):
    return [[sum(a * b for a, b in zip(r, c)) for c in zip(*B)] for r in A]


# ------------------------------------------------------------ construction


def test_build_examples():
    b = ind.build_lattice([Fraction(3, 2)], b_bits=4)
    assert b.rows == ((1, 24),) and b.kind is LatticeKind.LAMBDA0
    b2 = ind.build_lattice(["14.134725141734693790", "21.022039638771554993"], b_bits=8)
    assert [r[-1] for r in b2.rows] == [3618, 5382]
    assert b2.dim == 2 and b2.ambient == 3
    b3 = ind.build_lattice(["14.134725141734693790"], "21.022039638771554993", 8, star_index=2)
    assert b3.kind is LatticeKind.LAMBDA_I and b3.dim == 2 and b3.ambient == 3
    assert b3.star_index == 2 and b3.rows[-1][-1] == 5382


def test_build_from_records(zeros):
    b = ind.build_lattice([zeros[1], zeros[2]], zeros[3], 96, star_index=3)
    assert b.rows[2][-1] == round(zeros[3].fraction * 2**96)


def test_build_precision_and_distinct():
    with pytest.raises(ind.LatticePrecisionError):
        ind.build_lattice([14.134725141734693], b_bits=64)
    with pytest.raises(ind.LatticePrecisionError):
        ind.build_lattice(["14.1347251417"], b_bits=64)
    with pytest.raises(ValueError):
        ind.build_lattice([Fraction(1), Fraction(1)], b_bits=4)
    with mpmath.workprec(200):
        ind.build_lattice([mpmath.mpf("14.134725141734693790457")], b_bits=100)


def test_ties_to_even():
    assert ind.scaled_round(Fraction(5, 2**9), 8) == 2
    assert ind.scaled_round(Fraction(7, 2**9), 8) == 4


# --------------------------------------------------------------------- LLL


def test_identity_unchanged():
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    assert ind.lll_reduce(basis_of(I)).rows == tuple(map(tuple, I))


@pytest.mark.parametrize("method", ["exact", "fp"])
def test_two_dim_example(method):
    b = basis_of([[1, 0, 1000000], [0, 1, 999999]])
    red, U = ind.lll_reduce(b, Fraction(99, 100), method=method, return_transform=True)
    assert any(r in ((1, -1, 1), (-1, 1, -1)) for r in red.rows)
    assert abs(ind.integer_det(U)) == 1
    assert ind.gram_determinant(red) == ind.gram_determinant(b)
    g = ind.gram_schmidt_min_norm_sq(red)
    assert 0 < g <= 3


def test_delta_validation():
    with pytest.raises(ValueError):
        ind.lll_reduce(basis_of([[1, 0], [0, 1]]), Fraction(1, 4))
    with pytest.raises(ValueError):
        ind.lll_reduce(basis_of([[1, 0], [0, 1]]), 1)


full_rank = st.integers(2, 6).flatmap(lambda d: st.lists(
    st.lists(st.integers(-10**6, 10**6), min_size=d + 1, max_size=d + 1),
    min_size=d, max_size=d)).filter(
        lambda rows: ind.integral_gram_schmidt(rows).d[-1] != 0 if _independent(rows) else False)


def _independent(rows):
    try:
        ind.gram_schmidt_rational(basis_of(rows))
        return True
    except ind.DependentRowsError:
        return False


@given(full_rank, st.sampled_from(["exact", "fp"]),
       st.sampled_from([Fraction(3, 4), Fraction(99, 100), Fraction(1, 2)]))
def test_lll_properties(rows, method, delta):
    b = basis_of(rows)
    red, U = ind.lll_reduce(b, delta, method=method, return_transform=True)
    assert abs(ind.integer_det(U)) == 1
    assert [list(r) for r in red.rows] == matmul([list(u) for u in U], rows)
    assert ind.is_lll_reduced(red, delta)
    assert ind.gram_determinant(red) == ind.gram_determinant(b)


@given(full_rank)
def test_gram_schmidt_exact_float_agree(rows):
    b = basis_of(rows)
    exact = ind.gram_schmidt_norms_sq(b)
    assert exact == ind.gram_schmidt_rational(b)
    approx = ind.gram_schmidt_norms_float(b)
    with mpmath.workprec(256):
        for e, a in zip(exact, approx):
            ref = mpmath.mpf(e.numerator) / e.denominator
            assert abs(a - ref) <= 1e-25 * max(1, ref)


@given(full_rank, st.integers(1, 50))
def test_gram_schmidt_homogeneity(rows, c):
    b = basis_of(rows)
    assert ind.gram_schmidt_min_norm_sq(b.scaled(c)) == c * c * ind.gram_schmidt_min_norm_sq(b)


def test_gram_schmidt_examples():
    I = basis_of([[1, 0, 0], [0, 1, 0]])
    assert ind.gram_schmidt_min_norm_sq(I) == 1
    with pytest.raises(ind.DependentRowsError):
        ind.gram_schmidt_rational(basis_of([[1, 2], [2, 4]]))


@pytest.mark.parametrize("method", ["exact", "fp"])
def test_desk_lattices_gs_agree(zeros, method):
    texts = [zeros[i] for i in range(1, 13)]
    for star in (None, zeros[13]):
        red = ind.lll_reduce(ind.build_lattice(texts, star, 64), method=method)
        exact = ind.gram_schmidt_norms_sq(red)
        approx = ind.gram_schmidt_norms_float(red)
        with mpmath.workprec(400):
            assert all(abs(a / (mpmath.mpf(e.numerator) / e.denominator) - 1) < 1e-15
                       for e, a in zip(exact, approx))


# ------------------------------------------------------------ certify_N


def test_certify_examples():
    assert ind.certify_N(33, 4, LatticeKind.LAMBDA0) == 2
    assert ind.certify_N(33, 4, LatticeKind.LAMBDA_I) == 1
    for kind in LatticeKind:
        assert ind.certify_N(1, 1, kind) == 0
        assert ind.certify_N(1, 7, kind) == 0
    with pytest.raises(ValueError):
        ind.certify_N(0, 4, LatticeKind.LAMBDA0)


@given(st.fractions(min_value=Fraction(1, 10), max_value=10**12), st.integers(1, 300),
       st.sampled_from(list(LatticeKind)))
def test_certify_is_largest(g, n, kind):
    N = ind.certify_N(g, n, kind)
    assert N >= 0
    if N:
        assert ind.norm_bound(N, n, kind) < g
    assert ind.norm_bound(N + 1, n, kind) >= g


# -------------------------------------------------------- certification


def test_run_certification_rejects():
    with pytest.raises(ValueError):
        ind.run_certification("m", 5, 3, 64)


@pytest.fixture(scope="module")
def omega_cert():
    return ind.run_certification("h", 8, 12, 128)


def test_omega_regression(omega_cert):
    c = omega_cert
    assert len(c.records) == 5
    assert [r.star_index for r in c.records] == [0, 9, 10, 11, 12]
    assert [r.N for r in c.records] == [17980, 5605, 4895, 6029, 5811]
    assert c.certified_N == 4895 and not c.failed


def test_certificate_invariants(omega_cert, zeros):
    c = omega_cert
    assert c.T == zeros[13].fraction - Fraction(1, 10**10)
    assert zeros[12].fraction < c.T
    assert c.certified_N == min(r.N for r in c.records)
    text = c.text()
    assert "certified_N 4895" in text and text.startswith("# independence certificate")


def test_fp_matches_exact(omega_cert):
    fp = ind.run_certification("h", 8, 12, 128, method="fp")
    assert fp.text() == omega_cert.text()


def test_workers_and_resume(tmp_path, omega_cert):
    par = ind.run_certification("h", 8, 12, 128, workers=3)
    assert par.text() == omega_cert.text()
    rd = tmp_path / "run"
    first = ind.run_certification("h", 8, 12, 128, resume_dir=rd)
    log = rd / "records.jsonl"
    lines = log.read_text().splitlines()
    log.write_text("\n".join(lines[:2]) + "\n")
    seen = []
    again = ind.run_certification("h", 8, 12, 128, resume_dir=rd, progress=seen.append)
    assert len(seen) == 3
    assert again.text() == first.text() == omega_cert.text()
    with pytest.raises(ValueError):
        ind.run_certification("h", 8, 12, 96, resume_dir=rd)


def test_record_json_round_trip():
    r = ind.LatticeRecord(7, Fraction(22, 7), 3, 1.25)
    assert ind.LatticeRecord.from_json(r.to_json()) == r


def test_monotone_in_n():
    for b in (48, 64):
        Ns = [ind.run_certification("m", n, 12, b).certified_N for n in range(2, 13)]
        assert all(x >= y for x, y in zip(Ns, Ns[1:]))


def test_pipeline_composition(zeros, omega_cert):
    import math

    from omegaparity.oscillation import KernelSpec, anderson_stark_bound, weight_residues
    from omegaparity.residues import compute_residues

    c = omega_cert
    rs = compute_residues(zeros, "h", indices=c.selected_indices, prec=64)
    w = weight_residues(rs, KernelSpec("jp", float(c.T)))
    hi, lo = anderson_stark_bound(w, c.certified_N)
    N = c.certified_N
    expect = 2 * N / (N + 1) * math.fsum(w.weighted_moduli())
    assert hi == expect and lo == -expect


# ------------------------------------------------------- relation search


def test_relation_search_finds_planted():
    a = Fraction("14.134725141734693790457251983562470270784")
    b = Fraction("21.022039638771554992628479593896902777334")
    hits, best = ind.relation_search([a, b, a + b], 1, 64, trials=2000, seed=1)
    assert hits > 0 and best == 0


def test_relation_search_soundness(zeros):
    cert = ind.run_certification("m", 10, 10, 96, table=zeros)
    assert cert.certified_N >= 1
    hits, best = ind.relation_search([zeros[i] for i in range(1, 11)], cert.certified_N, 96,
                                     trials=10**6, seed=2024)
    assert hits == 0
    assert best > Fraction(10 * cert.certified_N, 2**96)
