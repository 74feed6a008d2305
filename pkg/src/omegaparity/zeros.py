"""Tables of ordinates of nontrivial zeta zeros.

Tables are plaintext, one decimal ordinate per line, optionally preceded by
a 1-based index column.  Each ordinate keeps its decimal text verbatim so
that downstream consumers (lattice construction in particular) can take as
many exact bits as the text guarantees.

:func:`generate_zeros` is a desk-scale fallback: zeros are isolated with
Gram points and Rosser blocks using a float64 Hardy Z-function, then refined
by Newton steps on zeta at the requested precision.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path

import mpmath
import numpy as np
from mpmath import mp
from scipy.optimize import brentq

from . import zeta as zk

log = logging.getLogger(__name__)

MIN_PRECISION_BITS = 64
DEFAULT_TABLE = "zeros_t5010.txt"
_DECIMAL = re.compile(r"^\d+(\.\d+)?$")
LOG2_10 = math.log2(10)


class ZeroTableError(ValueError):
    """Malformed, imprecise or non-monotone zero table."""


class ZeroParseError(ZeroTableError):
    pass


class ZeroPrecisionError(ZeroTableError):
    pass


class ZeroOrderError(ZeroTableError):
    pass


def decimal_precision_bits(text: str) -> int:
    """Guaranteed correct mantissa bits of a correctly rounded decimal string."""
    frac_digits = len(text.split(".", 1)[1]) if "." in text else 0
    value = float(text)
    if value <= 0:
        raise ZeroParseError(f"ordinate must be positive: {text!r}")
    # |error| <= 0.5 * 10^-d, relative to the value
    return int(math.floor(math.log2(value) + 1 + frac_digits * LOG2_10))


@dataclass(frozen=True)
class ZeroRecord:
    index: int
    text: str
    precision_bits: int

    def __post_init__(self):
        if self.index < 1:
            raise ZeroTableError("zero indices are 1-based")
        if not _DECIMAL.match(self.text):
            raise ZeroParseError(f"malformed ordinate {self.text!r}")
        if self.precision_bits < MIN_PRECISION_BITS:
            raise ZeroPrecisionError(
                f"zero #{self.index}: {self.precision_bits} bits < {MIN_PRECISION_BITS}"
            )

    @classmethod
    def from_text(cls, index: int, text: str) -> "ZeroRecord":
        if not _DECIMAL.match(text):
            raise ZeroParseError(f"line {index}: malformed ordinate {text!r}")
        return cls(index, text, decimal_precision_bits(text))

    @cached_property
    def fraction(self) -> Fraction:
        return Fraction(self.text)

    @property
    def gamma(self) -> float:
        return float(self.text)

    @property
    def fractional_bits(self) -> int:
        """Bits known after the binary point."""
        return self.precision_bits - int(math.floor(math.log2(self.gamma))) - 1

    def mpf(self, prec: int | None = None):
        with mp.workprec(prec or self.precision_bits + 8):
            return mpmath.mpf(self.text)


@dataclass(frozen=True)
class ZeroTable:
    records: tuple[ZeroRecord, ...]
    source: str = ""
    count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "count", len(self.records))
        prev = None
        for k, rec in enumerate(self.records, start=1):
            if rec.index != k:
                raise ZeroTableError(f"record {k} carries index {rec.index}")
            if prev is not None and not rec.fraction > prev.fraction:
                raise ZeroOrderError(
                    f"ordinates not strictly increasing at index {rec.index}"
                )
            prev = rec

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, index: int) -> ZeroRecord:
        """1-based access, matching the zero numbering."""
        if not 1 <= index <= self.count:
            raise IndexError(f"zero index {index} outside 1..{self.count}")
        return self.records[index - 1]

    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.records], dtype=np.float64)

    def below(self, T: float) -> "ZeroTable":
        """Prefix of records with ordinate strictly below ``T``."""
        keep = [r for r in self.records if r.gamma < T]
        return ZeroTable(tuple(keep), self.source)

    def head(self, n: int) -> "ZeroTable":
        if n > self.count:
            raise ZeroTableError(f"table holds {self.count} zeros, {n} requested")
        return ZeroTable(self.records[:n], self.source)

    @property
    def min_precision_bits(self) -> int:
        return min((r.precision_bits for r in self.records), default=0)

    def save(self, path, *, with_index: bool = False) -> Path:
        """Write the plaintext table plus a ``.meta.json`` sidecar."""
        path = Path(path)
        with path.open("w") as fh:
            for r in self.records:
                fh.write(f"{r.index} {r.text}\n" if with_index else f"{r.text}\n")
        digits = [len(r.text.split(".", 1)[1]) if "." in r.text else 0 for r in self.records]
        meta = {
            "source": self.source,
            "count": self.count,
            "min_fractional_digits": min(digits, default=0),
            "max_fractional_digits": max(digits, default=0),
            "min_precision_bits": self.min_precision_bits,
        }
        meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def load_zeros(path, min_precision_bits: int = MIN_PRECISION_BITS, *,
               source: str | None = None) -> ZeroTable:
    """Parse a plaintext zero table.

    Blank lines and ``#`` comments are skipped.  A two-column line is read as
    ``index ordinate``; the index must match the running count.
    """
    path = Path(path)
    records = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2:
            if not parts[0].isdigit() or int(parts[0]) != len(records) + 1:
                raise ZeroParseError(f"{path}:{lineno}: bad index column {parts[0]!r}")
            text = parts[1]
        elif len(parts) == 1:
            text = parts[0]
        else:
            raise ZeroParseError(f"{path}:{lineno}: expected one or two columns")
        if not _DECIMAL.match(text):
            raise ZeroParseError(f"{path}:{lineno}: malformed ordinate {text!r}")
        bits = decimal_precision_bits(text)
        if bits < min_precision_bits:
            raise ZeroPrecisionError(
                f"{path}:{lineno}: {bits} correct bits < required {min_precision_bits}"
            )
        try:
            records.append(ZeroRecord(len(records) + 1, text, bits))
        except ZeroPrecisionError as exc:
            raise ZeroPrecisionError(f"{path}:{lineno}: {exc}") from None
        if len(records) > 1 and not records[-1].fraction > records[-2].fraction:
            raise ZeroOrderError(f"{path}:{lineno}: ordinates not strictly increasing")
    if source is None:
        mp_file = meta_path(path)
        source = json.loads(mp_file.read_text()).get("source", "") if mp_file.exists() else str(path)
    return ZeroTable(tuple(records), source)


def default_table_path() -> Path:
    return Path(str(resources.files("omegaparity") / "data" / DEFAULT_TABLE))


_DEFAULT: dict = {}


def default_table() -> ZeroTable:
    """The bundled table (all zeros with ordinate below 5010, 50 decimals)."""
    if "table" not in _DEFAULT:
        _DEFAULT["table"] = load_zeros(default_table_path())
    return _DEFAULT["table"]


# ------------------------------------------------------------------ validation


@dataclass(frozen=True)
class ValidationEntry:
    index: int
    gamma: str
    abs_zeta: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple[ValidationEntry, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self) -> list[ValidationEntry]:
        return [e for e in self.entries if not e.passed]


def validate_zeros(table: ZeroTable, tolerance: float, *, prec: int | None = None,
                   ceiling: float | None = zk.HEIGHT_CEILING) -> ValidationReport:
    """Mark each record passed iff ``|zeta(1/2 + i gamma)| < tolerance``."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    entries = []
    for rec in table.records:
        wp = prec or min(rec.precision_bits, 96)
        with mp.workprec(wp + 16):
            s = mpmath.mpc(0.5, rec.mpf(wp + 16))
        val = float(abs(zk.zeta(s, wp, ceiling=ceiling)))
        entries.append(ValidationEntry(rec.index, rec.text, val, val < tolerance))
    return ValidationReport(tuple(entries), tolerance)


# ------------------------------------------------------------------ generation


def theta(t: float) -> float:
    """Riemann-Siegel theta function (Stirling series, t >= 5)."""
    return (t / 2 * math.log(t / (2 * math.pi)) - t / 2 - math.pi / 8
            + 1 / (48 * t) + 7 / (5760 * t**3) + 31 / (80640 * t**5)
            + 127 / (430080 * t**7) + 511 / (1216512 * t**9))


def hardy_z(t: float) -> float:
    """Z(t) = exp(i theta(t)) zeta(1/2 + i t), real for real t (float64)."""
    z = zk.zeta(complex(0.5, t), prec=zk.FLOAT_PREC_MAX, ceiling=None)
    th = theta(t)
    return math.cos(th) * z.real - math.sin(th) * z.imag


def gram_point(n: int, guess: float | None = None) -> float:
    """Solve theta(g) = n pi by Newton iteration."""
    t = guess if guess is not None else 10.0 + 2 * math.pi * max(n, 0) / math.log(max(n, 3))
    for _ in range(100):
        step = (theta(t) - n * math.pi) / (0.5 * math.log(t / (2 * math.pi)))
        t -= step
        if abs(step) < 1e-13 * t:
            break
    return t


def isolate_zeros(t_max: float, max_depth: int = 14) -> list[tuple[float, float]]:
    """Sign-change brackets for every zero with ordinate below ``t_max``.

    Between consecutive good Gram points ``g_j < g_k`` (``(-1)^n Z(g_n) > 0``)
    Rosser's rule gives exactly ``k - j`` zeros; blocks are subdivided until
    that many sign changes are found.  The total is checked against
    ``N(g_k) = k + 1`` at every good Gram point.
    """
    gram = []
    n, g = -1, gram_point(-1, 9.7)
    while True:
        zg = hardy_z(g)
        gram.append((n, g, zg))
        if g > t_max and (-1) ** n * zg > 0:
            break
        n += 1
        g = gram_point(n, g + 2 * math.pi / math.log(max(g, 7) / (2 * math.pi)))

    good = [i for i, (k, _, z) in enumerate(gram) if (-1) ** k * z > 0]
    if good[0] != 0:
        raise RuntimeError("first Gram point g_{-1} is not good")
    brackets: list[tuple[float, float]] = []
    for a, b in zip(good, good[1:]):
        need = gram[b][0] - gram[a][0]
        pts = [(g, z) for _, g, z in gram[a : b + 1]]
        for _depth in range(max_depth + 1):
            changes = [(pts[i][0], pts[i + 1][0]) for i in range(len(pts) - 1)
                       if pts[i][1] * pts[i + 1][1] < 0]
            if len(changes) >= need:
                break
            refined = [pts[0]]
            for (g0, _z0), (g1, z1) in zip(pts, pts[1:]):
                mid = 0.5 * (g0 + g1)
                refined.append((mid, hardy_z(mid)))
                refined.append((g1, z1))
            pts = refined
        else:
            raise RuntimeError(
                f"Rosser block [{gram[a][1]:.6f}, {gram[b][1]:.6f}] short of {need} zeros"
            )
        if len(changes) != need:
            raise RuntimeError("more sign changes than zeros in a Rosser block")
        brackets.extend(changes)
        if len(brackets) != gram[b][0] + 1:
            raise RuntimeError(f"zero count mismatch at Gram point {gram[b][0]}")
    return [br for br in brackets if br[0] < t_max]


def refine_zero(lo: float, hi: float, digits: int) -> str:
    """Ordinate in ``(lo, hi)`` to ``digits`` decimals, correctly rounded."""
    t0 = brentq(hardy_z, lo, hi, xtol=1e-14 * hi, rtol=1e-15, maxiter=200)
    prec = int(digits * LOG2_10 + math.log2(hi)) + 24
    with mp.workprec(prec + 20):
        t = mpmath.mpf(t0)
        stop = mpmath.mpf(10) ** -(digits // 2 + 8)
        for _ in range(12):
            z, dz = zk.zeta_and_derivative(mpmath.mpc(0.5, t), prec, ceiling=None)
            step = (z / dz).imag
            t -= step
            if abs(step) < stop:
                break
        else:
            raise RuntimeError(f"Newton refinement did not converge near {t0}")
        if not lo < t < hi:
            raise RuntimeError(f"refined zero {t} left its bracket ({lo}, {hi})")
        exact = _mpf_fraction(t)
    scaled = round(exact * 10**digits)
    whole, frac = divmod(scaled, 10**digits)
    return f"{whole}.{frac:0{digits}d}"


def _mpf_fraction(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * (Fraction(2) ** int(exp))


def generate_zeros(t_max: float, digits: int = 50, *, progress=None) -> ZeroTable:
    """Compute every zero with ordinate below ``t_max`` to ``digits`` decimals."""
    if t_max > 1e4:
        raise ValueError("generation is limited to ordinates below 1e4")
    brackets = isolate_zeros(t_max)
    records = []
    for k, (lo, hi) in enumerate(brackets, start=1):
        text = refine_zero(lo, hi, digits)
        # the last bracket may straddle t_max
        if Fraction(text) >= Fraction(t_max):
            break
        records.append(ZeroRecord.from_text(k, text))
        if progress is not None:
            progress(k, len(brackets))
    return ZeroTable(tuple(records), f"omegaparity generate_zeros t_max={t_max} digits={digits}")
