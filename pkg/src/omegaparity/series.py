"""Exact integer power-series algebra.

Used for the exponent sequence ``a_k`` defined by

    prod_{k>=1} (1 - q^k)^{a_k} = 1 - q - q^2 - q^3 - ...

and for the local Euler factors of the remainder products ``F_k``.
Everything here is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb


@dataclass(frozen=True)
class PowerSeries:
    """Integer power series truncated after degree ``truncation_order``."""

    coefficients: tuple[int, ...]
    truncation_order: int

    def __post_init__(self):
        if self.truncation_order < 0:
            raise ValueError("truncation_order must be nonnegative")
        coeffs = tuple(int(c) for c in self.coefficients[: self.truncation_order + 1])
        coeffs += (0,) * (self.truncation_order + 1 - len(coeffs))
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def one(cls, order: int) -> "PowerSeries":
        return cls((1,), order)

    def __getitem__(self, k: int) -> int:
        return self.coefficients[k]

    def __len__(self) -> int:
        return len(self.coefficients)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        order = min(self.truncation_order, other.truncation_order)
        a, b = self.coefficients, other.coefficients
        out = [0] * (order + 1)
        for i, ai in enumerate(a[: order + 1]):
            if ai == 0:
                continue
            for j in range(order + 1 - i):
                out[i + j] += ai * b[j]
        return PowerSeries(tuple(out), order)

    def inverse(self) -> "PowerSeries":
        """Multiplicative inverse; requires constant term +-1 to stay integral."""
        c0 = self.coefficients[0]
        if c0 not in (1, -1):
            raise ValueError("constant term must be a unit for an integral inverse")
        n = self.truncation_order
        inv = [0] * (n + 1)
        inv[0] = c0
        for k in range(1, n + 1):
            acc = sum(self.coefficients[j] * inv[k - j] for j in range(1, k + 1))
            inv[k] = -acc * c0
        return PowerSeries(tuple(inv), n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return (
            self.truncation_order == other.truncation_order
            and self.coefficients == other.coefficients
        )


def one_minus_q_power(k: int, exponent: int, order: int) -> PowerSeries:
    """Expansion of ``(1 - q^k)^exponent`` for any integer exponent."""
    if k < 1:
        raise ValueError("k must be positive")
    coeffs = [0] * (order + 1)
    if exponent >= 0:
        for i in range(exponent + 1):
            if i * k > order:
                break
            coeffs[i * k] = (-1) ** i * comb(exponent, i)
    else:
        e = -exponent
        # (1 - x)^{-e} = sum_i C(e + i - 1, i) x^i
        for i in range(order // k + 1):
            coeffs[i * k] = comb(e + i - 1, i)
    return PowerSeries(tuple(coeffs), order)


def geometric_target(order: int) -> PowerSeries:
    """``1 - q - q^2 - ... `` truncated at ``order``, the local factor of h at a prime."""
    return PowerSeries((1,) + (-1,) * order, order)


def compute_a_sequence(K: int) -> list[int]:
    """Return ``[a_1, ..., a_K]``.

    Factors are peeled degree by degree: after dividing out
    ``(1 - q^j)^{a_j}`` for ``j < k`` the remaining series is
    ``1 - a_k q^k + O(q^{k+1})``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    rest = geometric_target(K)
    seq = []
    for k in range(1, K + 1):
        a_k = -rest[k]
        seq.append(a_k)
        rest = rest * one_minus_q_power(k, -a_k, K)
    return seq


def fk_tail_coefficients(k: int, K: int) -> PowerSeries:
    """Local factor of ``F_k`` in ``x = p^{-s}``, truncated at degree ``K``.

    This is ``(1 - x - x^2 - ...) * prod_{j<=k} (1 - x^j)^{-a_j}``; the
    coefficients of degrees ``1..k`` vanish by construction.
    """
    if not 1 <= k < K:
        raise ValueError("need 1 <= k < K")
    a = compute_a_sequence(k)
    out = geometric_target(K)
    for j, a_j in enumerate(a, start=1):
        out = out * one_minus_q_power(j, -a_j, K)
    return out


def fk_tail_by_product(k: int, K: int) -> PowerSeries:
    """Same object as :func:`fk_tail_coefficients`, built as ``prod_{j=k+1}^{K} (1-q^j)^{a_j}``."""
    a = compute_a_sequence(K)
    out = PowerSeries.one(K)
    for j in range(k + 1, K + 1):
        out = out * one_minus_q_power(j, a[j - 1], K)
    return out
