"""Kernel-weighted sums over zeta zeros and oscillation bounds.

For a problem with residues ``r_gamma`` at ``1/2 + i gamma`` the smoothed sum

    B*_T(u) = r0 + 2 Re sum_{0 < gamma < T} k_T(gamma) r_gamma e^{i gamma u}

tracks ``e^{-u/2} S(e^u)``.  ``r0`` is ``1/zeta(1/2)`` for Liouville and 0
for Mertens and for ``(-1)^omega``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import zeta as zk
from .residues import Line, Problem, ResidueSet

BOUND_INDEX_TEXT = (
    "1-72, 74-76, 78-116, 118-145, 147-170, 172-178, 180, 182-188, 190-194, "
    "196-198, 200-202, 204, 206, 207, 209, 212-214, 216, 217, 219, 222, 224, 225, "
    "230, 232-234, 237, 238, 240, 242-245, 248-250, 253, 257, 263, 265, 268, 269, "
    "275, 282, 283, 290, 298, 299, 301, 311, 314-316, 327, 340, 364"
)


def parse_index_ranges(text: str) -> list[int]:
    """Expand ``"1-3, 7, 9-10"`` into ``[1, 2, 3, 7, 9, 10]``."""
    out = []
    for part in text.replace("–", "-").split(","):
        part = part.strip().rstrip(".")
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-"))
            if hi < lo:
                raise ValueError(f"bad range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if len(set(out)) != len(out):
        raise ValueError("duplicate indices")
    return out


BOUND_INDICES = tuple(parse_index_ranges(BOUND_INDEX_TEXT))


class KernelKind(str, enum.Enum):
    FEJER = "fejer"
    JURKAT_PEYERIMHOFF = "jp"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    T: float

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if not self.T > 1:
            raise ValueError("kernel width T must exceed 1")


def kernel_eval(spec: KernelSpec, t):
    """``k_T(t)``; accepts scalars or arrays, zero outside ``|t| <= T``."""
    x = np.abs(np.asarray(t, dtype=np.float64)) / float(spec.T)
    if spec.kind is KernelKind.FEJER:
        w = 1.0 - x
    else:
        w = (1.0 - x) * np.cos(np.pi * x) + np.sin(np.pi * x) / np.pi
    w = np.where(x <= 1.0, w, 0.0)
    return float(w) if np.ndim(w) == 0 else w


@lru_cache(maxsize=1)
def _inv_zeta_half() -> float:
    return float((1 / zk.zeta(0.5, 64)).real)


def leading_term(problem) -> float:
    problem = Problem.parse(problem)
    return _inv_zeta_half() if problem is Problem.POLYA else 0.0


@dataclass(frozen=True)
class WeightedResidueSet:
    problem: Problem
    kernel: KernelSpec
    indices: tuple = ()
    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if np.any(self.gammas >= self.kernel.T):
            raise ValueError("every ordinate must lie below T")
        if np.any((self.weights < 0) | (self.weights > 1)):
            raise ValueError("weights must lie in [0, 1]")

    @property
    def entries(self):
        return list(zip(self.gammas.tolist(), self.values.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return len(self.gammas)

    def weighted_moduli(self) -> np.ndarray:
        return self.weights * np.abs(self.values)

    def subset(self, indices) -> "WeightedResidueSet":
        pos = {i: k for k, i in enumerate(self.indices)}
        try:
            sel = [pos[i] for i in indices]
        except KeyError as exc:
            raise KeyError(f"index {exc.args[0]} not in the weighted set") from None
        return WeightedResidueSet(self.problem, self.kernel, tuple(indices),
                                  self.gammas[sel], self.values[sel], self.weights[sel])


class CoverageError(ValueError):
    """The residue set does not contain every zero below T."""


def _check_coverage(residues: ResidueSet, T: float, zeros=None):
    have = set(int(i) for i in residues.indices[residues.gammas < T])
    if zeros is not None:
        if zeros.count and zeros[zeros.count].gamma < T:
            raise CoverageError(f"zero table ends below T={T}")
        need = {r.index for r in zeros.records if r.gamma < T}
        missing = sorted(need - have)
        if missing:
            raise CoverageError(f"{len(missing)} zeros below T lack residues, first {missing[:5]}")


def weight_residues(residues: ResidueSet, kernel: KernelSpec, zeros=None) -> WeightedResidueSet:
    """Residues with ``gamma < T`` and their kernel weights."""
    if zeros is not None:
        _check_coverage(residues, kernel.T, zeros)
    g = residues.gammas
    keep = g < kernel.T
    idx = tuple(int(i) for i in residues.indices[keep])
    vals = residues.values[keep]
    return WeightedResidueSet(residues.problem, kernel, idx, g[keep], vals,
                              np.asarray(kernel_eval(kernel, g[keep]), dtype=np.float64))


def _oscillating_sum(gammas, coeffs, u, scale=1.0):
    """``2 Re sum c e^{i scale gamma u}`` at every ``u``, exactly rounded per point."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    out = np.empty(len(u))
    cr, ci = coeffs.real, coeffs.imag
    for k, uk in enumerate(u):
        ph = np.mod(gammas * (scale * uk), 2 * np.pi)
        out[k] = 2.0 * math.fsum(cr * np.cos(ph) - ci * np.sin(ph))
    return out


def b_star(problem, kernel: KernelSpec, u, zeros, residues: ResidueSet):
    """``B*_T(u)``; scalar in, scalar out, array in, array out."""
    problem = Problem.parse(problem)
    if residues.problem is not problem:
        raise ValueError(f"residues are for {residues.problem.name}, not {problem.name}")
    if residues.line is not Line.HALF:
        raise ValueError("b_star uses half-line residues")
    w = weight_residues(residues, kernel, zeros)
    vals = leading_term(problem) + _oscillating_sum(w.gammas, w.values * w.weights, u)
    return float(vals[0]) if np.ndim(u) == 0 else vals


def explicit_estimate(problem, u, T, zeros, residues: ResidueSet, include_quarter=False,
                      quarter_residues: ResidueSet | None = None):
    """Sharp truncation ``r0 + 2 Re sum_{gamma <= T} r_gamma e^{i gamma u}``.

    For the omega problem the quarter-line poles may be added; they enter as
    ``2 Re sum r'_gamma e^{i gamma u / 2}`` damped by ``e^{-u/4}``.
    """
    problem = Problem.parse(problem)
    if problem is Problem.MERTENS:
        raise ValueError("explicit estimates are provided for the Polya and omega problems")
    if residues.problem is not problem:
        raise ValueError("residue set does not match the problem")
    if zeros is not None:
        _check_coverage(residues, math.nextafter(float(T), math.inf), zeros)
    g = residues.gammas
    keep = g <= T
    vals = leading_term(problem) + _oscillating_sum(g[keep], residues.values[keep], u)
    if include_quarter:
        if problem is not Problem.OMEGA:
            raise ValueError("quarter-line terms exist only for the omega problem")
        if quarter_residues is None or quarter_residues.line is not Line.QUARTER:
            raise ValueError("quarter-line residues are required")
        gq = quarter_residues.gammas
        kq = gq <= T
        uu = np.atleast_1d(np.asarray(u, dtype=np.float64))
        vals = vals + np.exp(-uu / 4) * _oscillating_sum(gq[kq], quarter_residues.values[kq],
                                                         uu, scale=0.5)
    return float(vals[0]) if np.ndim(u) == 0 else vals


def quarter_change_bound(u: float, quarter_residues: ResidueSet, T: float) -> float:
    """Triangle-inequality bound on the quarter-line contribution at ``u``."""
    gq = quarter_residues.gammas
    return math.exp(-u / 4) * 2 * math.fsum(np.abs(quarter_residues.values[gq <= T]))


def anderson_stark_bound(weighted: WeightedResidueSet, N: int, r0: float | None = None):
    """``(r0 + S, r0 - S)`` with ``S = 2 N/(N+1) sum k_T(gamma) |r_gamma|``.

    Under N-independence of the ordinates the first number is a lower bound
    for ``limsup`` and the second an upper bound for ``liminf`` of the
    normalised summatory function.
    """
    if len(weighted) == 0:
        raise ValueError("no residues")
    if N < 1:
        raise ValueError("N must be at least 1")
    if r0 is None:
        r0 = leading_term(weighted.problem)
    s = 2.0 * N / (N + 1) * math.fsum(weighted.weighted_moduli())
    return r0 + s, r0 - s


def select_gamma_prime(residues: ResidueSet, kernel: KernelSpec, n: int) -> list[int]:
    """Indices of the ``n`` zeros below T with the largest ``k_T(gamma)|r_gamma|``.

    Ordered by decreasing weight; equal weights go to the smaller ordinate.
    """
    w = weight_residues(residues, kernel)
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(w):
        raise ValueError(f"only {len(w)} residues lie below T, cannot select {n}")
    score = w.weighted_moduli()
    order = np.lexsort((w.gammas, -score))
    return [w.indices[k] for k in order[:n]]


def compare_selection(selected, reference=BOUND_INDICES) -> dict:
    a, b = set(selected), set(reference)
    return {"missing": sorted(b - a), "extra": sorted(a - b), "common": len(a & b)}


def haselgrove_T_near(zeros, T: float, shift: int) -> float:
    """A width between consecutive ordinates, ``shift`` zeros away from ``T``."""
    g = zeros.gammas()
    k = int(np.searchsorted(g, T)) + shift
    if not 1 <= k < len(g):
        raise ValueError("shift leaves the table")
    return float((g[k - 1] + g[k]) / 2)
