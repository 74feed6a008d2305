"""Residues at zeta zeros for the Mertens, Polya and omega problems.

For a zero ``rho = 1/2 + i gamma`` the residues of the Laplace transforms of
``e^{-u/2} M(e^u)``, ``e^{-u/2} L(e^u)`` and ``e^{-u/2} H(e^u)`` are

* Mertens: ``1 / (rho zeta'(rho))``
* Polya:   ``zeta(2 rho) / (rho zeta'(rho))``
* omega:   ``F6(rho) / (zeta(2rho) zeta(3rho)^2 zeta(4rho)^3 zeta(5rho)^6 zeta(6rho)^9)
  / (rho zeta'(rho))``

and the omega problem also has simple poles on the quarter line at
``rho / 2`` whose residue is given by :func:`residue_H_quarter`.
"""

from __future__ import annotations

import csv
import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
from mpmath import mp

from . import zeta as zk
from .zeros import ZeroTable

ZERO_CHECK_TOL = 1e-8
# exponents of zeta(k s), k = 2..6, in the factorisation of h(s)
_H_EXPONENTS = ((2, 1), (3, 2), (4, 3), (5, 6), (6, 9))


class Problem(str, enum.Enum):
    MERTENS = "m"
    POLYA = "l"
    OMEGA = "h"

    @classmethod
    def parse(cls, text) -> "Problem":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {"m": cls.MERTENS, "mertens": cls.MERTENS, "mu": cls.MERTENS,
                   "l": cls.POLYA, "polya": cls.POLYA, "lambda": cls.POLYA,
                   "h": cls.OMEGA, "omega": cls.OMEGA, "xi": cls.OMEGA}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown problem {text!r}") from None


class Line(str, enum.Enum):
    HALF = "half"
    QUARTER = "quarter"


class ResidueError(ArithmeticError):
    """The ordinate is not a zero at working precision or a factor vanished."""


@dataclass(frozen=True)
class Residue:
    gamma: str
    value: complex
    problem: Problem
    line: Line = Line.HALF
    index: int = 0
    precision_bits: int = 64
    prime_bound: int = 0
    f6_tail: float = 0.0

    @property
    def modulus(self) -> float:
        return abs(complex(self.value))


def _gamma_text(gamma) -> str:
    """Ordinates may come as ZeroRecord, decimal string or number."""
    return getattr(gamma, "text", None) or str(gamma)


def _rho(gamma, prec: int):
    gamma = _gamma_text(gamma)
    if prec <= zk.FLOAT_PREC_MAX:
        return complex(0.5, float(gamma))
    with mp.workprec(prec + 20):
        return mpmath.mpc(mpmath.mpf(0.5), mpmath.mpf(gamma))


def _zeta(s, prec, k=1):
    return zk.zeta(s, prec, ceiling=k * zk.HEIGHT_CEILING)


def _core(gamma, prec: int):
    """``(rho, 1/(rho zeta'(rho)))`` after checking ``|zeta(rho)|`` is tiny."""
    rho = _rho(gamma, prec)
    z, dz = zk.zeta_and_derivative(rho, prec)
    if abs(z) >= ZERO_CHECK_TOL:
        raise ResidueError(f"|zeta(1/2 + i*{gamma})| = {float(abs(z)):.3g}: not a zero")
    tiny = 2.0 ** (-prec // 2)
    if abs(dz) < tiny:
        raise ResidueError(f"zeta'(rho) vanishes at working precision for gamma={gamma}")
    return rho, 1 / (rho * dz)


def _with_prec(prec):
    return mp.workprec(prec + 20) if prec > zk.FLOAT_PREC_MAX else _Null()


class _Null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _check_nonzero(value, what: str, prec: int):
    if abs(value) < 2.0 ** (-prec // 2):
        raise ResidueError(f"{what} vanishes at working precision")


def residue_M(gamma, prec: int = 64, *, index: int = 0) -> Residue:
    with _with_prec(prec):
        _, base = _core(gamma, prec)
        return Residue(_gamma_text(gamma), +base, Problem.MERTENS, Line.HALF, index, prec)


def residue_L(gamma, prec: int = 64, *, index: int = 0) -> Residue:
    with _with_prec(prec):
        rho, base = _core(gamma, prec)
        z2 = _zeta(2 * rho, prec, 2)
        return Residue(_gamma_text(gamma), z2 * base, Problem.POLYA, Line.HALF, index, prec)


def h_zeta_denominator(rho, prec: int):
    """``zeta(2r) zeta(3r)^2 zeta(4r)^3 zeta(5r)^6 zeta(6r)^9`` at ``r = rho``."""
    den = 1
    for k, e in _H_EXPONENTS:
        zk_val = _zeta(k * rho, prec, k)
        _check_nonzero(zk_val, f"zeta({k} rho)", prec)
        den = den * zk_val**e
    return den


def residue_H(gamma, prime_bound: int = zk.F6_DEFAULT_PRIME_BOUND, prec: int = 64, *,
              index: int = 0) -> Residue:
    with _with_prec(prec):
        rho, base = _core(gamma, prec)
        f6v, tail = zk.f6(rho, prime_bound, prec)
        value = f6v / h_zeta_denominator(rho, prec) * base
        return Residue(_gamma_text(gamma), value, Problem.OMEGA, Line.HALF, index, prec,
                       prime_bound, tail)


def quarter_zeta_denominator(rho, prec: int):
    """``zeta(r/2) zeta(3r/2)^2 zeta(2r)^3 zeta(5r/2)^6 zeta(3r)^9``."""
    den = 1
    for k, e in ((1, 1), (3, 2), (4, 3), (5, 6), (6, 9)):
        s = k * rho / 2
        val = _zeta(s, prec, k)
        _check_nonzero(val, f"zeta({k} rho / 2)", prec)
        den = den * val**e
    return den


def residue_H_quarter(gamma, prime_bound: int = zk.F6_DEFAULT_PRIME_BOUND,
                      prec: int = 64, *, index: int = 0) -> Residue:
    """Residue of ``h(s)/s`` at ``s = rho/2``; its term carries ``e^{-u/4}`` damping."""
    with _with_prec(prec):
        rho, base = _core(gamma, prec)
        f6v, tail = zk.f6(rho / 2, prime_bound, prec)
        value = f6v / quarter_zeta_denominator(rho, prec) * base
        return Residue(_gamma_text(gamma), value, Problem.OMEGA, Line.QUARTER, index, prec,
                       prime_bound, tail)


# ------------------------------------------------------------------ residue sets


@dataclass(frozen=True)
class ResidueSet:
    problem: Problem
    line: Line
    residues: tuple[Residue, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.residues)

    def __iter__(self):
        return iter(self.residues)

    @property
    def indices(self) -> np.ndarray:
        return np.array([r.index for r in self.residues], dtype=np.int64)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([float(r.gamma) for r in self.residues], dtype=np.float64)

    @property
    def values(self) -> np.ndarray:
        return np.array([complex(r.value) for r in self.residues], dtype=np.complex128)

    def subset(self, indices) -> "ResidueSet":
        by_index = {r.index: r for r in self.residues}
        missing = [i for i in indices if i not in by_index]
        if missing:
            raise KeyError(f"residues missing for zero indices {missing[:10]}")
        return ResidueSet(self.problem, self.line, tuple(by_index[i] for i in indices))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "gamma", "re", "im", "problem", "line",
                        "precision_bits", "prime_bound"])
            for r in self.residues:
                v = r.value
                digits = max(17, int(r.precision_bits * 0.302) + 2)
                re_, im_ = (mpmath.nstr(mpmath.re(v), digits), mpmath.nstr(mpmath.im(v), digits)) \
                    if not isinstance(v, complex) else (repr(v.real), repr(v.imag))
                w.writerow([r.index, r.gamma, re_, im_, r.problem.value, r.line.value,
                            r.precision_bits, r.prime_bound])
        return path

    @classmethod
    def from_csv(cls, path) -> "ResidueSet":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        if not rows:
            raise ValueError(f"{path}: no residues")
        problem = Problem(rows[0]["problem"])
        line = Line(rows[0]["line"])
        out = []
        for row in rows:
            prec = int(row["precision_bits"])
            if prec > zk.FLOAT_PREC_MAX:
                with mp.workprec(prec + 20):
                    value = mpmath.mpc(row["re"], row["im"])
            else:
                value = complex(float(row["re"]), float(row["im"]))
            out.append(Residue(row["gamma"], value, Problem(row["problem"]), Line(row["line"]),
                               int(row["index"]), prec, int(row["prime_bound"])))
        return cls(problem, line, tuple(out))


def _one(args):
    problem, line, index, text, prec, prime_bound = args
    if line is Line.QUARTER:
        return residue_H_quarter(text, prime_bound, prec, index=index)
    if problem is Problem.MERTENS:
        return residue_M(text, prec, index=index)
    if problem is Problem.POLYA:
        return residue_L(text, prec, index=index)
    return residue_H(text, prime_bound, prec, index=index)


def compute_residues(table: ZeroTable, problem, *, indices=None, prec: int = 64,
                     prime_bound: int = zk.F6_DEFAULT_PRIME_BOUND, line=Line.HALF,
                     workers: int = 1) -> ResidueSet:
    """Residues at the given zero indices (default: the whole table).

    Zeros are independent; with ``workers > 1`` they are fanned out to a
    process pool and collected in index order.
    """
    problem = Problem.parse(problem)
    line = Line(line)
    if line is Line.QUARTER and problem is not Problem.OMEGA:
        raise ValueError("quarter-line residues exist only for the omega problem")
    if indices is None:
        indices = range(1, table.count + 1)
    jobs = [(problem, line, i, table[i].text, prec, prime_bound) for i in indices]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_one(j) for j in jobs]
    return ResidueSet(problem, line, tuple(out))
