"""Lattice certificates that a set of zero ordinates has no small integer relation.

For ordinates ``gamma_1..gamma_n`` and ``b`` bits the lattice ``Lambda_0``
is spanned by the rows ``e_i (+) round(2^b gamma_i)``.  A relation
``sum c_i gamma_i = 0`` with ``|c_i| <= N`` would give a lattice vector of
squared length at most ``(n^2/4 + n) N^2``; if the shortest Gram-Schmidt
vector of a reduced basis is longer than that, no such relation exists.
``Lambda_i`` appends one more ordinate ``gamma*`` and guards against
relations of the form ``sum c_i gamma_i = c* gamma*`` with the bound
``(n^2/4 + n) N^2 + (n/2 + 2) N + 5/4``.
"""

from __future__ import annotations

import enum
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath

from .zeros import ZeroRecord, ZeroTable, decimal_precision_bits

PRECISION_GUARD_BITS = 10
DEFAULT_EPSILON = Fraction(1, 10**10)


class LatticeKind(str, enum.Enum):
    LAMBDA0 = "lambda0"
    LAMBDA_I = "lambda_i"


class LatticePrecisionError(ValueError):
    pass


class DependentRowsError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LatticeBasis:
    rows: tuple[tuple[int, ...], ...]
    kind: LatticeKind
    b_bits: int
    star_index: int | None = None

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def ambient(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def with_rows(self, rows) -> "LatticeBasis":
        return LatticeBasis(tuple(tuple(int(x) for x in r) for r in rows), self.kind,
                            self.b_bits, self.star_index)

    def scaled(self, c: int) -> "LatticeBasis":
        return self.with_rows([[c * x for x in r] for r in self.rows])


# ------------------------------------------------------------- ordinates


def _as_exact(g) -> tuple[Fraction, float]:
    """Exact value and number of trustworthy fractional bits."""
    if isinstance(g, ZeroRecord):
        return g.fraction, g.fractional_bits
    if isinstance(g, Fraction):
        return g, math.inf
    if isinstance(g, int):
        return Fraction(g), math.inf
    if isinstance(g, str):
        text = g.strip()
        digits = len(text.split(".", 1)[1]) if "." in text else 0
        return Fraction(text), digits * math.log2(10)
    if isinstance(g, float):
        _, e = math.frexp(g)
        return Fraction(g), 53 - e
    if isinstance(g, mpmath.mpf):
        man, exp = g.man_exp
        return Fraction(man) * Fraction(2) ** exp, g.context.prec - int(mpmath.floor(mpmath.log(abs(g), 2))) - 1
    raise TypeError(f"unsupported ordinate type {type(g).__name__}")


def scaled_round(g: Fraction, b_bits: int) -> int:
    """Nearest integer to ``2^b g``, ties to even."""
    return round(g * (1 << b_bits))


def build_lattice(gammas_prime, gamma_star=None, b_bits: int = 64, *,
                  star_index: int | None = None, guard_bits: int = PRECISION_GUARD_BITS
                  ) -> LatticeBasis:
    vals = [_as_exact(g) for g in gammas_prime]
    if gamma_star is not None:
        vals.append(_as_exact(gamma_star))
    if not vals:
        raise ValueError("no ordinates")
    need = b_bits + guard_bits
    short = [k for k, (_, bits) in enumerate(vals) if bits < need]
    if short:
        raise LatticePrecisionError(
            f"ordinates {short[:5]} carry fewer than {need} fractional bits")
    exact = [v for v, _ in vals]
    if len(set(exact)) != len(exact):
        raise ValueError("ordinates must be distinct")
    d = len(exact)
    rows = []
    for i, g in enumerate(exact):
        row = [0] * (d + 1)
        row[i] = 1
        row[d] = scaled_round(g, b_bits)
        rows.append(tuple(row))
    kind = LatticeKind.LAMBDA0 if gamma_star is None else LatticeKind.LAMBDA_I
    return LatticeBasis(tuple(rows), kind, b_bits, star_index if gamma_star is not None else None)


# ---------------------------------------------------------- integral LLL


def _dot(u, v) -> int:
    return sum(a * b for a, b in zip(u, v))


def _delta_fraction(delta) -> Fraction:
    d = Fraction(delta).limit_denominator(10**12) if isinstance(delta, float) else Fraction(delta)
    if not Fraction(1, 4) < d < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    return d


class _IntegralState:
    """Integral Gram-Schmidt data ``d_i`` and ``lambda_{i,j}`` (all integers)."""

    def __init__(self, rows):
        self.b = [list(r) for r in rows]
        self.n = len(rows)
        self.d = [1] + [0] * self.n  # d[0] = 1, d[i] for 1-based i
        self.lam = [[0] * self.n for _ in range(self.n)]

    def extend(self, k: int):
        """Gram-Schmidt data of row ``k`` (0-based) from rows ``0..k-1``."""
        b, d, lam = self.b, self.d, self.lam
        for j in range(k + 1):
            u = _dot(b[k], b[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise DependentRowsError("basis rows are linearly dependent")
                d[k + 1] = u


def integral_gram_schmidt(rows) -> _IntegralState:
    st = _IntegralState(rows)
    for k in range(st.n):
        st.extend(k)
    return st


def lll_reduce(basis: LatticeBasis, delta=Fraction(99, 100), *, method: str = "exact",
               return_transform: bool = False):
    """LLL reduction with parameter ``delta``.

    ``method="exact"`` runs the integral algorithm, where every Gram-Schmidt
    quantity is an integer and no rounding happens anywhere.  ``"fp"`` runs
    the same loop with multiprecision Gram-Schmidt data and then checks the
    result exactly, finishing with the integral algorithm if needed.

    With ``return_transform`` the unimodular matrix ``U`` with
    ``U * old = new`` is returned as well.
    """
    dl = _delta_fraction(delta)
    rows = [list(r) for r in basis.rows]
    U = [[int(i == j) for j in range(len(rows))] for i in range(len(rows))]
    if method == "fp":
        rows, U = _lll_fp(rows, U, dl)
        if not is_lll_reduced(basis.with_rows(rows), dl):
            rows, U = _lll_integral(rows, U, dl)
    elif method == "exact":
        rows, U = _lll_integral(rows, U, dl)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = basis.with_rows(rows)
    return (out, tuple(tuple(r) for r in U)) if return_transform else out


def _lll_integral(rows, U, dl: Fraction):
    n = len(rows)
    if n <= 1:
        if n == 1 and not any(rows[0]):
            raise DependentRowsError("zero basis vector")
        return rows, U
    num, den = dl.numerator, dl.denominator
    st = _IntegralState(rows)
    b, d, lam = st.b, st.d, st.lam
    H = [list(r) for r in U]
    st.extend(0)
    k, kmax = 1, 0

    def redi(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            bl, hl = b[l], H[l]
            b[k] = [x - q * y for x, y in zip(b[k], bl)]
            H[k] = [x - q * y for x, y in zip(H[k], hl)]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swapi(k):
        b[k], b[k - 1] = b[k - 1], b[k]
        H[k], H[k - 1] = H[k - 1], H[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k + 1]
        d[k] = B

    while k < n:
        if k > kmax:
            kmax = k
            st.extend(k)
        redi(k, k - 1)
        lm = lam[k][k - 1]
        if den * (d[k + 1] * d[k - 1] + lm * lm) < num * d[k] * d[k]:
            swapi(k)
            k = max(1, k - 1)
            continue
        for l in range(k - 2, -1, -1):
            redi(k, l)
        k += 1
    return b, H


def _lll_fp(rows, U, dl: Fraction):
    n = len(rows)
    b = [list(r) for r in rows]
    H = [list(r) for r in U]
    if n <= 1:
        return b, H
    bitlen = max(abs(x).bit_length() for r in b for x in r)
    with mpmath.workprec(2 * bitlen + 64):
        delta = mpmath.mpf(dl.numerator) / dl.denominator
        mu = [[mpmath.mpf(0)] * n for _ in range(n)]
        B = [mpmath.mpf(0)] * n

        def gs_row(k):
            for j in range(k):
                s = mpmath.mpf(_dot(b[k], b[j]))
                for i in range(j):
                    s -= mu[j][i] * mu[k][i] * B[i]
                mu[k][j] = s / B[j]
            s = mpmath.mpf(_dot(b[k], b[k]))
            for i in range(k):
                s -= mu[k][i] ** 2 * B[i]
            B[k] = s

        def red(k, l):
            if abs(mu[k][l]) > 0.5:
                q = int(mpmath.nint(mu[k][l]))
                b[k] = [x - q * y for x, y in zip(b[k], b[l])]
                H[k] = [x - q * y for x, y in zip(H[k], H[l])]
                mu[k][l] -= q
                for i in range(l):
                    mu[k][i] -= q * mu[l][i]

        gs_row(0)
        k, kmax = 1, 0
        steps = 0
        while k < n:
            steps += 1
            if steps > 50 * n * n * (bitlen + 1):
                break  # give up, the exact pass finishes the job
            if k > kmax:
                kmax = k
                gs_row(k)
            red(k, k - 1)
            if B[k] < (delta - mu[k][k - 1] ** 2) * B[k - 1]:
                b[k], b[k - 1] = b[k - 1], b[k]
                H[k], H[k - 1] = H[k - 1], H[k]
                # recompute the two affected rows and everything after them lazily
                kmax = k - 1
                gs_row(k - 1)
                k = max(1, k - 1)
                continue
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b, H


def is_lll_reduced(basis: LatticeBasis, delta) -> bool:
    """Exact check of size reduction and the Lovasz condition."""
    dl = _delta_fraction(delta)
    st = integral_gram_schmidt(basis.rows)
    d, lam = st.d, st.lam
    for k in range(st.n):
        for j in range(k):
            if 2 * abs(lam[k][j]) > d[j + 1]:
                return False
    for k in range(1, st.n):
        lm = lam[k][k - 1]
        if dl.denominator * (d[k + 1] * d[k - 1] + lm * lm) < dl.numerator * d[k] * d[k]:
            return False
    return True


def integer_det(M) -> int:
    """Determinant of a square integer matrix (fraction-free elimination)."""
    A = [list(r) for r in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1] if n else 1


def gram_determinant(basis: LatticeBasis) -> int:
    return integral_gram_schmidt(basis.rows).d[-1]


# ------------------------------------------------------------ Gram-Schmidt


def gram_schmidt_norms_sq(basis: LatticeBasis) -> list[Fraction]:
    st = integral_gram_schmidt(basis.rows)
    return [Fraction(st.d[i + 1], st.d[i]) for i in range(st.n)]


def gram_schmidt_min_norm_sq(basis: LatticeBasis) -> Fraction:
    """Smallest squared length of a Gram-Schmidt vector, exactly."""
    if not basis.rows:
        raise ValueError("empty basis")
    return min(gram_schmidt_norms_sq(basis))


def gram_schmidt_rational(basis: LatticeBasis) -> list[Fraction]:
    """Textbook Gram-Schmidt over the rationals (slow reference)."""
    vecs = []
    norms = []
    for r in basis.rows:
        v = [Fraction(x) for x in r]
        for w, nw in zip(vecs, norms):
            c = sum(a * b for a, b in zip(v, w)) / nw
            v = [a - c * b for a, b in zip(v, w)]
        nv = sum(a * a for a in v)
        if nv == 0:
            raise DependentRowsError("basis rows are linearly dependent")
        vecs.append(v)
        norms.append(nv)
    return norms


def gram_schmidt_norms_float(basis: LatticeBasis, prec: int = 0) -> list:
    """Gram-Schmidt squared norms in multiprecision floating point."""
    bitlen = max(abs(x).bit_length() for r in basis.rows for x in r)
    with mpmath.workprec(prec or 2 * bitlen + 64):
        vecs, norms = [], []
        for r in basis.rows:
            v = [mpmath.mpf(x) for x in r]
            for w, nw in zip(vecs, norms):
                c = mpmath.fsum(a * b for a, b in zip(v, w)) / nw
                v = [a - c * b for a, b in zip(v, w)]
            vecs.append(v)
            norms.append(mpmath.fsum(a * a for a in v))
        return norms


# ------------------------------------------------------------------ N bound


def norm_bound(N: int, n: int, kind: LatticeKind) -> Fraction:
    q = Fraction(n * n, 4) + n
    base = q * N * N
    if LatticeKind(kind) is LatticeKind.LAMBDA_I:
        base += (Fraction(n, 2) + 2) * N + Fraction(5, 4)
    return base


def certify_N(min_norm_sq, n: int, kind) -> int:
    """Largest ``N`` whose relation-vector bound is still below ``min_norm_sq``."""
    g = Fraction(min_norm_sq)
    if g <= 0:
        raise ValueError("min_norm_sq must be positive")
    kind = LatticeKind(kind)
    q = Fraction(n * n, 4) + n
    N = math.isqrt(int(g / q)) + 2
    while N > 0 and norm_bound(N, n, kind) >= g:
        N -= 1
    return N


# ------------------------------------------------------------ certification


@dataclass(frozen=True)
class LatticeRecord:
    star_index: int  # 0 for Lambda_0
    min_gs_norm_sq: Fraction
    N: int
    seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps({"star_index": self.star_index,
                           "min_gs_norm_sq": f"{self.min_gs_norm_sq.numerator}/"
                                             f"{self.min_gs_norm_sq.denominator}",
                           "N": self.N, "seconds": round(self.seconds, 3)}, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "LatticeRecord":
        obj = json.loads(line)
        return cls(int(obj["star_index"]), Fraction(obj["min_gs_norm_sq"]), int(obj["N"]),
                   float(obj.get("seconds", 0.0)))


@dataclass(frozen=True)
class IndependenceCertificate:
    problem: str
    n: int
    m: int
    b_bits: int
    delta: Fraction
    epsilon: Fraction
    T: Fraction
    selected_indices: tuple[int, ...]
    records: tuple[LatticeRecord, ...] = field(default_factory=tuple)

    @property
    def per_lattice_min_gs_norm_sq(self) -> list[Fraction]:
        return [r.min_gs_norm_sq for r in self.records]

    @property
    def certified_N(self) -> int:
        return min(r.N for r in self.records)

    @property
    def failed(self) -> list[int]:
        return [r.star_index for r in self.records if r.N == 0]

    def text(self) -> str:
        t = mpmath.mpf(self.T.numerator) / self.T.denominator
        lines = [
            "# independence certificate",
            f"problem {self.problem}",
            f"n {self.n}",
            f"m {self.m}",
            f"b {self.b_bits}",
            f"delta {self.delta}",
            f"epsilon {self.epsilon}",
            f"T {mpmath.nstr(t, 40, strip_zeros=False)}",
            "selected " + " ".join(map(str, self.selected_indices)),
            f"certified_N {self.certified_N}",
            "# star_index min_gs_norm_sq N_i",
        ]
        for r in self.records:
            lines.append(f"{r.star_index} {r.min_gs_norm_sq.numerator}/"
                         f"{r.min_gs_norm_sq.denominator} {r.N}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.text())
        return path


def _lattice_job(args) -> LatticeRecord:
    texts, star, star_index, b_bits, delta, n, method = args
    t0 = time.perf_counter()
    recs = [ZeroRecord.from_text(i + 1, t) for i, t in enumerate(texts)]
    star_rec = ZeroRecord.from_text(star_index, star) if star is not None else None
    basis = build_lattice(recs, star_rec, b_bits, star_index=star_index)
    red = lll_reduce(basis, delta, method=method)
    g = gram_schmidt_min_norm_sq(red)
    kind = LatticeKind.LAMBDA0 if star is None else LatticeKind.LAMBDA_I
    return LatticeRecord(star_index or 0, g, certify_N(g, n, kind), time.perf_counter() - t0)


def _selection(problem, table: ZeroTable, n: int, m: int, T: float, residues=None):
    from .oscillation import KernelKind, KernelSpec, select_gamma_prime
    from .residues import compute_residues

    if n == m:
        return list(range(1, m + 1))
    if residues is None:
        residues = compute_residues(table, problem, indices=range(1, m + 1), prec=30)
    return sorted(select_gamma_prime(residues, KernelSpec(KernelKind.JURKAT_PEYERIMHOFF, T), n))


def run_certification(problem, n: int, m: int, b_bits: int, delta=Fraction(99, 100),
                      epsilon=DEFAULT_EPSILON, *, table: ZeroTable | None = None,
                      selected=None, residues=None, workers: int = 1, resume_dir=None,
                      method: str = "exact", progress=None) -> IndependenceCertificate:
    """Certify N-independence of ``n`` chosen ordinates among the first ``m``.

    One lattice ``Lambda_0`` plus one ``Lambda_i`` for every other zero up to
    ``m``.  Each lattice result is appended to ``records.jsonl`` in
    ``resume_dir`` as soon as it is known; a rerun skips finished lattices.
    """
    from .residues import Problem
    from .zeros import default_table

    problem = Problem.parse(problem)
    if n < 1 or m < n:
        raise ValueError("need 1 <= n <= m")
    dl = _delta_fraction(delta)
    eps = Fraction(epsilon) if not isinstance(epsilon, float) else Fraction(str(epsilon))
    if table is None:
        table = default_table()
    if table.count < m + 1:
        raise ValueError(f"zero table has {table.count} zeros, need {m + 1}")
    T = table[m + 1].fraction - eps
    if not table[m].fraction < T:
        raise ValueError("epsilon too large: gamma_m >= T")
    need = b_bits + PRECISION_GUARD_BITS
    low = [i for i in range(1, m + 1) if table[i].fractional_bits < need]
    if low:
        raise LatticePrecisionError(f"zeros {low[:5]} have fewer than {need} fractional bits")
    if selected is None:
        selected = _selection(problem, table, n, m, float(T), residues)
    selected = sorted(int(i) for i in selected)
    if len(selected) != n or len(set(selected)) != n or not all(1 <= i <= m for i in selected):
        raise ValueError("selection must be n distinct indices in 1..m")
    texts = tuple(table[i].text for i in selected)
    others = [i for i in range(1, m + 1) if i not in set(selected)]
    jobs = [(texts, None, 0, b_bits, dl, n, method)]
    jobs += [(texts, table[i].text, i, b_bits, dl, n, method) for i in others]

    done: dict[int, LatticeRecord] = {}
    log = None
    if resume_dir is not None:
        rd = Path(resume_dir)
        rd.mkdir(parents=True, exist_ok=True)
        cfg = {"problem": problem.value, "n": n, "m": m, "b": b_bits, "delta": str(dl),
               "epsilon": str(eps), "selected": selected, "method": method}
        cfg_path = rd / "config.json"
        if cfg_path.exists() and json.loads(cfg_path.read_text()) != cfg:
            raise ValueError(f"{rd} holds records for a different configuration")
        cfg_path.write_text(json.dumps(cfg, sort_keys=True))
        log = rd / "records.jsonl"
        if log.exists():
            for line in log.read_text().splitlines():
                if line.strip():
                    rec = LatticeRecord.from_json(line)
                    done[rec.star_index] = rec
    todo = [j for j in jobs if j[2] not in done]

    def keep(rec: LatticeRecord):
        done[rec.star_index] = rec
        if log is not None:
            with log.open("a") as fh:
                fh.write(rec.to_json() + "\n")
        if progress is not None:
            progress(rec)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rec in pool.map(_lattice_job, todo):
                keep(rec)
    else:
        for job in todo:
            keep(_lattice_job(job))
    records = tuple(done[k] for k in sorted(done))
    return IndependenceCertificate(problem.value, n, m, b_bits, dl, eps, T, tuple(selected),
                                   records)


def relation_search(gammas, N: int, b_bits: int, trials: int = 10**6, *, seed: int = 0,
                    c_max: int | None = None) -> tuple[int, Fraction]:
    """Random search for a small integer relation among ``gammas``.

    Draws coefficient vectors with entries in ``[-c, c]``, ``c = min(N, 3)``,
    and returns ``(number of vectors closer to 0 than n N 2^-b, smallest
    |sum c_i gamma_i| seen)``.  A sound certificate gives zero hits.
    """
    exact = [_as_exact(g)[0] for g in gammas]
    n = len(exact)
    c = min(N, 3) if c_max is None else c_max
    if c < 1:
        return 0, Fraction(0)
    gap = Fraction(n * N, 1 << b_bits)
    fl = [float(g) for g in exact]
    rng = random.Random(seed)
    hits = 0
    best = None
    for _ in range(trials):
        coeffs = [rng.randint(-c, c) for _ in range(n)]
        if not any(coeffs):
            continue
        approx = abs(math.fsum(ci * g for ci, g in zip(coeffs, fl)))
        if best is None or approx < best[0]:
            best = (approx, coeffs)
        if approx < 1e-6:
            val = abs(sum(ci * g for ci, g in zip(coeffs, exact)))
            if val <= gap:
                hits += 1
    if best is None:
        return hits, Fraction(0)
    return hits, abs(sum(ci * g for ci, g in zip(best[1], exact)))
