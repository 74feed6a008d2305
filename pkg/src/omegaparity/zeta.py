"""Euler-Maclaurin evaluation of zeta, zeta' and the Euler product F_6.

Two backends share one code path:

* an mpmath backend carrying ``prec`` bits (plus guard bits), used for every
  request above :data:`FLOAT_PREC_MAX` bits;
* a numpy ``complex128`` backend for low-precision bulk work (residues at
  thousands of zeros), selected when ``prec <= FLOAT_PREC_MAX``.

Error control is heuristic-with-margin: the Euler-Maclaurin tail is summed
until two consecutive correction terms fall below ``2^-(prec+4)`` relative to
``max(1, |result|)``; when the asymptotic terms stop decreasing first, the
truncation point is doubled and the evaluation restarted.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from mpmath import mp

from .primes import primes_up_to, smallest_prime_factor
from .series import fk_tail_coefficients

HEIGHT_CEILING = 5000.0
FLOAT_PREC_MAX = 30
MAX_BERNOULLI = 400
F6_DEFAULT_PRIME_BOUND = 100_000


class ZetaDomainError(ValueError):
    """Argument outside the supported domain (pole, height ceiling, F6 half-plane)."""


class PrecisionError(ArithmeticError):
    """Requested accuracy cannot be delivered with the configured tables."""


# ---------------------------------------------------------------- caches


@lru_cache(maxsize=None)
def _bernoulli_ratio(k: int) -> Fraction:
    """Exact ``B_{2k} / (2k)!``."""
    p, q = mpmath.bernfrac(2 * k)
    return Fraction(int(p), int(q) * math.factorial(2 * k))


@lru_cache(maxsize=64)
def _bernoulli_mp(k: int, wp: int):
    r = _bernoulli_ratio(k)
    with mp.workprec(wp):
        return mpmath.mpf(r.numerator) / r.denominator


@lru_cache(maxsize=None)
def _bernoulli_float(k: int) -> float:
    return float(_bernoulli_ratio(k))


_SPF = {"limit": 0, "spf": np.zeros(1, dtype=np.int64)}


def _spf(limit: int) -> np.ndarray:
    if limit > _SPF["limit"]:
        new = max(limit, 2 * _SPF["limit"], 4096)
        _SPF["spf"] = smallest_prime_factor(new)
        _SPF["limit"] = new
    return _SPF["spf"]


_LOGS: dict[int, list] = {}


def _log_table(wp: int, n_max: int) -> list:
    """``[log 1, ..., log n_max]`` at ``wp`` bits, index 0 unused."""
    table = _LOGS.setdefault(wp, [None])
    if len(table) <= n_max:
        spf = _spf(n_max)
        with mp.workprec(wp):
            for n in range(len(table), n_max + 1):
                if n == 1:
                    table.append(mpmath.mpf(0))
                elif spf[n] == n:
                    table.append(mpmath.log(n))
                else:
                    p = int(spf[n])
                    table.append(table[p] + table[n // p])
    return table


@lru_cache(maxsize=8)
def _float_logs(n_max: int) -> np.ndarray:
    return np.log(np.arange(1, n_max + 1, dtype=np.float64))


# ---------------------------------------------------------------- parameters


def _truncation_point(s_abs: float, prec: int) -> int:
    return max(8, int(1.5 * (s_abs + 0.35 * prec) / (2 * math.pi)) + 6)


def _check_domain(s, ceiling: float | None):
    if s == 1:
        raise ZetaDomainError("zeta has a pole at s = 1")
    if ceiling is not None and abs(float(s.imag)) > ceiling:
        raise ZetaDomainError(
            f"|Im s| = {float(s.imag):.6g} exceeds the height ceiling {ceiling:g}"
        )


# ---------------------------------------------------------------- mp backend


def _em_mp(s, prec: int, want_deriv: bool, N: int):
    """One Euler-Maclaurin pass; returns (zeta, zeta') or None when the tail diverges."""
    wp = prec + 20 + max(N, 2).bit_length()
    with mp.workprec(wp):
        s = mpmath.mpc(s)
        logs = _log_table(wp, N)
        spf = _spf(N)
        powers = [None, mpmath.mpc(1)]
        total = mpmath.mpc(1)
        dtotal = mpmath.mpc(0)
        for n in range(2, N):
            p = int(spf[n])
            if p == n:
                term = mpmath.exp(-s * logs[n])
            else:
                term = powers[p] * powers[n // p]
            powers.append(term)
            total += term
            if want_deriv:
                dtotal -= logs[n] * term
        logN = logs[N]
        Nms = mpmath.exp(-s * logN)
        sm1 = s - 1
        zeta = total + N * Nms / sm1 + Nms / 2
        dzeta = dtotal
        if want_deriv:
            dzeta += N * Nms * (-logN / sm1 - 1 / sm1**2) - logN * Nms / 2

        eps = mpmath.ldexp(1, -(prec + 4))
        invN2 = mpmath.mpf(1) / (N * N)
        pw = Nms / N
        P = s
        dP = mpmath.mpc(1)
        prev = None
        small_run = 0
        for k in range(1, MAX_BERNOULLI + 1):
            c = _bernoulli_mp(k, wp)
            term = c * P * pw
            zeta += term
            mag = abs(term)
            if want_deriv:
                dterm = c * pw * (dP - logN * P)
                dzeta += dterm
                mag = max(mag, abs(dterm))
            scale = max(1, abs(zeta), abs(dzeta) if want_deriv else 0)
            if mag < eps * scale:
                small_run += 1
                if small_run >= 2:
                    return +zeta, +dzeta
            else:
                small_run = 0
                if prev is not None and mag > prev:
                    return None
            prev = mag
            a, b = s + (2 * k - 1), s + 2 * k
            dP = dP * a * b + P * (a + b)
            P = P * a * b
            pw *= invN2
        return None


def _em_float(s: complex, want_deriv: bool, N: int):
    logs = _float_logs(N)
    terms = np.exp(-s * logs[: N - 1])
    total = terms.sum()
    dtotal = -(logs[: N - 1] * terms).sum() if want_deriv else 0j
    logN = float(logs[N - 1])
    Nms = np.exp(-s * logN)
    sm1 = s - 1
    zeta = total + N * Nms / sm1 + Nms / 2
    dzeta = dtotal
    if want_deriv:
        dzeta += N * Nms * (-logN / sm1 - 1 / sm1**2) - logN * Nms / 2
    eps = 2.0**-50
    pw = Nms / N
    P, dP = s, 1 + 0j
    prev = None
    small_run = 0
    for k in range(1, 160):
        c = _bernoulli_float(k)
        term = c * P * pw
        zeta += term
        mag = abs(term)
        if want_deriv:
            dterm = c * pw * (dP - logN * P)
            dzeta += dterm
            mag = max(mag, abs(dterm))
        scale = max(1.0, abs(zeta), abs(dzeta) if want_deriv else 0.0)
        if mag < eps * scale:
            small_run += 1
            if small_run >= 2:
                return complex(zeta), complex(dzeta)
        else:
            small_run = 0
            if prev is not None and mag > prev:
                return None
        prev = mag
        a, b = s + (2 * k - 1), s + 2 * k
        dP = dP * a * b + P * (a + b)
        P = P * a * b
        pw /= N * N
    return None


def _evaluate(s, prec: int, want_deriv: bool, ceiling: float | None):
    use_float = prec <= FLOAT_PREC_MAX
    if use_float:
        s = complex(s)
        if s == 1:
            raise ZetaDomainError("zeta has a pole at s = 1")
        if ceiling is not None and abs(s.imag) > ceiling:
            raise ZetaDomainError(
                f"|Im s| = {s.imag:.6g} exceeds the height ceiling {ceiling:g}"
            )
        N = _truncation_point(abs(s), 53)
    else:
        with mp.workprec(prec + 20):
            s = mpmath.mpc(s)
        _check_domain(s, ceiling)
        N = _truncation_point(float(abs(s)), prec)
    for _ in range(8):
        out = _em_float(s, want_deriv, N) if use_float else _em_mp(s, prec, want_deriv, N)
        if out is not None:
            return out
        N *= 2
    raise PrecisionError(f"Euler-Maclaurin failed to reach {prec} bits at s = {s}")


def zeta(s, prec: int = 64, *, ceiling: float | None = HEIGHT_CEILING):
    """Riemann zeta at ``s`` to about ``prec`` bits.

    Returns an ``mpmath.mpc`` (or a Python ``complex`` on the float backend).
    """
    return _evaluate(s, prec, False, ceiling)[0]


def zeta_derivative(s, prec: int = 64, *, ceiling: float | None = HEIGHT_CEILING):
    """zeta'(s) by the term-wise differentiated Euler-Maclaurin formula."""
    return _evaluate(s, prec, True, ceiling)[1]


def zeta_and_derivative(s, prec: int = 64, *, ceiling: float | None = HEIGHT_CEILING):
    """``(zeta(s), zeta'(s))`` from a single pass."""
    return _evaluate(s, prec, True, ceiling)


# ---------------------------------------------------------------- F_6


F6_SERIES_DEGREE = 60


@lru_cache(maxsize=1)
def _f6_series() -> tuple[int, ...]:
    return fk_tail_coefficients(6, F6_SERIES_DEGREE).coefficients


def f6_local_factor(x):
    """Exact local factor of F_6 at a prime with ``x = p^{-s}``.

    ``(1-2x) / ((1-x)^2 (1-x^2) (1-x^3)^2 (1-x^4)^3 (1-x^5)^6 (1-x^6)^9)``.
    Works for mpmath, Python and numpy numbers alike.
    """
    den = (1 - x) ** 2 * (1 - x**2) * (1 - x**3) ** 2 * (1 - x**4) ** 3
    den = den * (1 - x**5) ** 6 * (1 - x**6) ** 9
    return (1 - 2 * x) / den


def _f6_deviation_series(x: np.ndarray) -> np.ndarray:
    """``F6_p(x) - 1`` by Horner on the exact integer coefficients (|x| <= 0.1)."""
    coeffs = _f6_series()
    acc = np.zeros_like(x)
    for c in reversed(coeffs[7:]):
        acc = acc * x + c
    return acc * x**7


def _sum_primes_power_bound(P: int, alpha: float) -> float:
    """Upper bound for ``sum_{n > P} n^{-alpha}`` (over all integers)."""
    return P ** (1 - alpha) / (alpha - 1)


def f6_tail_bound(sigma: float, prime_bound: int) -> float:
    """Relative bound on the omitted factors ``prod_{p > prime_bound} F6_p(p^{-s})``.

    Leading behaviour is ``18 sum_{p>P} p^{-7 sigma}``; the margin factor
    accounts for the higher-degree coefficients at ``|x| = P^{-sigma}``.
    """
    alpha = 7 * sigma
    if alpha <= 1:
        return math.inf
    y = prime_bound ** (-sigma)
    coeffs = _f6_series()
    margin = sum(abs(c) * y ** (j - 7) for j, c in enumerate(coeffs) if j >= 7) / 18
    margin *= 1.0 + 1e-3
    total = 18 * margin * _sum_primes_power_bound(prime_bound, alpha)
    return math.expm1(total)


def _mp_cutoff(sigma: float, height: float, prec: int) -> float:
    """Primes below this are multiplied in mpmath, the rest in float64.

    The float64 error of one factor is about ``18 p^{-7 sigma}`` times the
    relative error of ``p^{-s}``, which grows with ``|t| log p``.
    """
    if prec <= FLOAT_PREC_MAX:
        return 0.0
    alpha = 7 * sigma
    target = 2.0 ** -(prec + 4)
    cut = max(10 ** (1 / sigma), 100.0)
    while cut < 1e12:
        lc = math.log(cut)
        err = 18 * 2.0**-52 * (10 + 7 * height * lc) * cut ** (1 - alpha)
        err /= (alpha - 1) * lc
        if err < target:
            break
        cut *= 1.5
    return cut


def f6(s, prime_bound: int = F6_DEFAULT_PRIME_BOUND, prec: int = 64, *,
       min_re: float = 1 / 6, max_tail: float | None = None):
    """Truncated Euler product ``prod_{p <= prime_bound} F6_p(p^{-s})``.

    Returns ``(value, tail_bound)``; ``tail_bound`` bounds the relative
    size of the omitted primes.
    """
    if prime_bound < 2:
        raise ValueError("prime_bound must be at least 2")
    sigma = float(mpmath.re(s)) if not isinstance(s, complex) else s.real
    if sigma < min_re:
        raise ZetaDomainError(f"Re s = {sigma:g} below the F6 margin {min_re:g}")
    tail = f6_tail_bound(sigma, prime_bound)
    if max_tail is not None and tail > max_tail:
        raise PrecisionError(f"F6 tail bound {tail:.3g} exceeds {max_tail:.3g}")

    primes = primes_up_to(prime_bound)
    cut = _mp_cutoff(sigma, abs(complex(s).imag), prec)
    lo = primes[primes < cut]
    hi = primes[primes >= cut]

    sc = complex(s)
    x = np.exp(-sc * np.log(hi.astype(np.float64)))
    small = np.abs(x) <= 0.1
    # factors with |x| > 0.1 are few; multiply them directly (p = 2 vanishes at s = 1)
    direct = complex(np.prod(f6_local_factor(x[~small])))
    d = _f6_deviation_series(x[small])
    log_small = np.sum(d - d * d / 2 + d**3 / 3 - d**4 / 4)
    float_part = direct * np.exp(log_small)

    if prec <= FLOAT_PREC_MAX:
        return float_part, tail

    with mp.workprec(prec + 20):
        s = mpmath.mpc(s)
        prod = mpmath.mpc(1)
        for p in lo:
            xp = mpmath.exp(-s * mpmath.log(int(p)))
            prod *= f6_local_factor(xp)
        value = prod * mpmath.mpc(direct) * mpmath.exp(mpmath.mpc(log_small))
    return value, tail


def h_factorized(s, prime_bound: int = F6_DEFAULT_PRIME_BOUND, prec: int = 64):
    """``h(s) = sum (-1)^omega(n) n^-s`` through its zeta factorization

        h(s) = F6(s) / (zeta(s) zeta(2s) zeta^2(3s) zeta^3(4s) zeta^6(5s) zeta^9(6s)).

    Valid for ``Re s > 1/6`` away from the poles; returns ``(value, f6_tail)``.
    """
    value, tail = f6(s, prime_bound, prec)
    with mp.workprec(prec + 20):
        s = mpmath.mpc(s)
        den = mpmath.mpc(1)
        for k, e in ((1, 1), (2, 1), (3, 2), (4, 3), (5, 6), (6, 9)):
            den *= mpmath.mpc(zeta(k * s, prec, ceiling=None)) ** e
        return mpmath.mpc(value) / den, tail
