"""Brackets for beta, the density of integers with omega(n) = Omega(n) mod 2.

Group the integers by the set ``P`` of primes dividing their powerful
part.  For ``P = {p_1..p_r}`` the density of those with an even (odd)
excess ``Omega - omega`` is

    (6/pi^2) prod 1/((p+1)(p^2-1)) * (prod (1+p) +- prod (1-p)) / 2
  = (6/pi^2) * (g1(P) +- g2(P)) / 2

with ``g1 = prod 1/(p^2-1)`` and ``g2 = prod -1/(p+1)^2``.  Both pieces are
nonnegative, so any finite family of sets gives ``beta >= sum match`` and
``1 - beta >= sum nonmatch``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import mpmath
import numpy as np
from mpmath import iv, mp

from .primes import is_prime, primes_up_to

DEFAULT_R_CAPS = {1: 3_000_000, 2: 17_500, 3: 1_500, 4: 450, 5: 250, 6: 170}
WORK_PREC = 160
# outward margin for the float multiplicative sieve; the accumulated
# rounding error of at most ten-factor products summed with fsum is < 1e-14
PRODUCT_SIEVE_MARGIN = 1e-13
MAX_PRODUCT_B = 200_000_000


@dataclass(frozen=True)
class PrimeSet:
    primes: tuple[int, ...] = ()

    def __post_init__(self):
        ps = tuple(int(p) for p in self.primes)
        if any(not is_prime(p) for p in ps):
            raise ValueError(f"not all prime: {ps}")
        if any(a >= b for a, b in zip(ps, ps[1:])):
            raise ValueError("primes must be distinct and increasing")
        object.__setattr__(self, "primes", ps)

    @property
    def r(self) -> int:
        return len(self.primes)


@dataclass(frozen=True)
class DensityBound:
    lower: mpmath.mpf
    upper: mpmath.mpf
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def midpoint(self):
        return (self.lower + self.upper) / 2

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value) -> bool:
        return self.lower <= value <= self.upper

    def inside(self, lo, hi) -> bool:
        """True when the whole bracket lies strictly inside ``(lo, hi)``."""
        return lo < self.lower and self.upper < hi


def _six_over_pi2():
    return 6 / mp.pi**2


def _parts(P: PrimeSet):
    g1 = mpmath.mpf(1)
    g2 = mpmath.mpf(1)
    for p in P.primes:
        g1 /= p * p - 1
        g2 /= -((p + 1) ** 2)
    return g1, g2


def match_density(P: PrimeSet):
    """Density of ``n`` whose powerful part has prime set ``P`` and ``omega = Omega mod 2``."""
    with mp.workprec(WORK_PREC):
        g1, g2 = _parts(P)
        return +(_six_over_pi2() * (g1 + g2) / 2)


def nonmatch_density(P: PrimeSet):
    if P.r == 0:
        raise ValueError("the odd part is empty for r = 0")
    with mp.workprec(WORK_PREC):
        g1, g2 = _parts(P)
        return +(_six_over_pi2() * (g1 - g2) / 2)


def match_density_by_vectors(P: PrimeSet):
    """The same density summed literally over even-weight 0/1 vectors (oracle)."""
    with mp.workprec(WORK_PREC):
        total = mpmath.mpf(0)
        r = P.r
        for w in range(0, r + 1, 2):
            for chosen in combinations(range(r), w):
                term = mpmath.mpf(1)
                for i in chosen:
                    term *= P.primes[i]
                total += term
        norm = mpmath.mpf(1)
        for p in P.primes:
            norm *= (p + 1) * (p * p - 1)
        return +(_six_over_pi2() * total / norm)


# ----------------------------------------------------------- bracket by r


def _elementary_symmetric(values, r_max: int):
    """``e_0..e_{r_max}`` of an iterable of intervals."""
    e = [iv.mpf(1)] + [iv.mpf(0)] * r_max
    for v in values:
        for j in range(r_max, 0, -1):
            e[j] = e[j] + e[j - 1] * v
    return e


def _interval_sum(xs):
    # pairwise summation keeps interval widths tight
    xs = list(xs)
    while len(xs) > 1:
        xs = [xs[i] + xs[i + 1] if i + 1 < len(xs) else xs[i] for i in range(0, len(xs), 2)]
    return xs[0] if xs else iv.mpf(0)


def beta_bounds_by_r(limits=None) -> DensityBound:
    """Sum over all prime sets of size ``r`` with every prime at most ``limits[r]``.

    The sums over such sets are elementary symmetric polynomials in
    ``1/(p^2-1)`` and ``-1/(p+1)^2``, evaluated in interval arithmetic.
    """
    limits = dict(DEFAULT_R_CAPS if limits is None else limits)
    if not limits:
        raise ValueError("limits must be nonempty")
    if any(r < 0 for r in limits):
        raise ValueError("set sizes must be nonnegative")
    limits.pop(0, None)
    saved = iv.prec
    iv.prec = WORK_PREC
    try:
        c = 6 / iv.pi**2
        low = c
        odd = iv.mpf(0)
        for r, cap in sorted(limits.items()):
            if cap < 2:
                continue
            ps = [int(p) for p in primes_up_to(cap)]
            if r == 1:
                s1 = _interval_sum(iv.mpf(1) / (p * p - 1) for p in ps)
                s2 = _interval_sum(iv.mpf(-1) / ((p + 1) ** 2) for p in ps)
            else:
                s1 = _elementary_symmetric((iv.mpf(1) / (p * p - 1) for p in ps), r)[r]
                s2 = _elementary_symmetric((iv.mpf(-1) / ((p + 1) ** 2) for p in ps), r)[r]
            low = low + c * (s1 + s2) / 2
            odd = odd + c * (s1 - s2) / 2
        up = 1 - odd
    finally:
        iv.prec = saved
    with mp.workprec(WORK_PREC):
        return DensityBound(mpmath.mpf(low.a), mpmath.mpf(up.b),
                            {"mode": "by-r", "caps": dict(sorted(limits.items()))})


# ------------------------------------------------------- bracket by product


def beta_bounds_by_product(B: int) -> DensityBound:
    """Sum over all prime sets whose product is at most ``B``.

    Sets correspond to squarefree ``m <= B``; ``g1`` and ``g2`` are
    multiplicative, so they are filled in by a sieve over ``m``.  Float
    rounding is covered by an outward margin.
    """
    if B < 1:
        raise ValueError("B must be positive")
    if B > MAX_PRODUCT_B:
        raise MemoryError(f"B={B} exceeds the budget {MAX_PRODUCT_B}")
    with mp.workprec(WORK_PREC):
        c = _six_over_pi2()
        if B < 2:
            return DensityBound(+c, mpmath.mpf(1), {"mode": "by-product", "B": B})
        g1 = np.ones(B + 1, dtype=np.float64)
        g2 = np.ones(B + 1, dtype=np.float64)
        sqfree = np.ones(B + 1, dtype=bool)
        sqfree[0] = False
        for p in primes_up_to(B):
            p = int(p)
            g1[p::p] *= 1.0 / (p * p - 1)
            g2[p::p] *= -1.0 / ((p + 1) * (p + 1))
            if p * p <= B:
                sqfree[p * p :: p * p] = False
        s1 = mpmath.mpf(math.fsum(g1[sqfree]))
        s2 = mpmath.mpf(math.fsum(g2[sqfree]))
        margin = mpmath.mpf(PRODUCT_SIEVE_MARGIN)
        low = c * (s1 + s2) / 2 - margin
        odd = c * (s1 - s2) / 2 - margin
        up = 1 - odd
        return DensityBound(low, up, {"mode": "by-product", "B": B,
                                      "margin": PRODUCT_SIEVE_MARGIN})


def beta_bounds_by_product_exact(B: int) -> DensityBound:
    """Same bracket by depth-first enumeration over increasing primes in
    high-precision arithmetic; slow, intended for small ``B`` checks."""
    with mp.workprec(WORK_PREC):
        c = _six_over_pi2()
        ps = [int(p) for p in primes_up_to(max(B, 1))]
        s1 = mpmath.mpf(0)
        s2 = mpmath.mpf(0)
        stack = [(1, 0, mpmath.mpf(1), mpmath.mpf(1))]
        while stack:
            m, i, a1, a2 = stack.pop()
            s1 += a1
            s2 += a2
            for j in range(i, len(ps)):
                p = ps[j]
                if m * p > B:
                    break
                stack.append((m * p, j + 1, a1 / (p * p - 1), a2 / -((p + 1) ** 2)))
        low = c * (s1 + s2) / 2
        odd = c * (s1 - s2) / 2
        return DensityBound(low, 1 - odd, {"mode": "by-product-exact", "B": B})


# ------------------------------------------------------------------- Renyi


def renyi_R(z, prime_bound: int = 1_000_000, *, tail_correction: bool = True):
    """``R(z) = (1/zeta(2)) prod_p (1 + z/((p+1)(p-z)))`` and an error estimate.

    Returns ``(value, tail)``.  Without correction ``tail`` is the plain
    truncation estimate ``|z| sum_{p>P} 1/((p+1)(p-|z|))``.  With correction
    the missing primes are accounted for to first order through the prime
    zeta value ``P(2)``; the factor ``exp(z sum_{p>P} p^-2)`` leaves an
    error of order ``sum_{p>P} p^-3`` which is what ``tail`` then reports.
    """
    with mp.workprec(WORK_PREC):
        z = mpmath.mpf(z)
        if not -2 < z < 2:
            raise ValueError("R(z) is defined for |z| < 2")
        if prime_bound < 2:
            raise ValueError("prime_bound must be at least 2")
        ps = primes_up_to(prime_bound).astype(np.float64)
        zf = float(z)
        logs = np.log1p(zf / ((ps + 1.0) * (ps - zf)))
        value = mpmath.exp(mpmath.mpf(math.fsum(logs))) / mpmath.zeta(2)
        P = mpmath.mpf(int(prime_bound))
        az = abs(z)
        if not tail_correction:
            # sum_{p>P} 1/((p+1)(p-|z|)) <= sum_{n>P} 1/(n-2)^2 < 1/(P-3)
            tail = az / (P - 3) * abs(value)
            return value, tail
        inv_sq = np.reciprocal(ps * ps)
        rest = mpmath.primezeta(2) - mpmath.mpf(math.fsum(inv_sq))
        value *= mpmath.exp(z * rest)
        # second-order remainder: sum over p>P of (1+|z|)|z|/p^3 and the
        # log/exp quadratic terms, bounded with sum_{n>P} n^-3 < 1/(2(P-1)^2)
        cube_tail = 1 / (2 * (P - 1) ** 2)
        tail = (az * (1 + az) * cube_tail * 4 + az**2 * rest**2) * abs(value)
        return value, tail


def beta_from_renyi(prime_bound: int = 1_000_000):
    """``(1 + R(-1)) / 2`` with its error estimate."""
    value, tail = renyi_R(-1, prime_bound)
    return (1 + value) / 2, tail / 2


def empirical_beta(x: int, **kw) -> float:
    """Fraction of ``n <= x`` with ``xi(n) = lambda(n)``."""
    from .sieve import agreement_count

    if x < 1:
        raise ValueError("x must be positive")
    return agreement_count(x, **kw) / x
