"""Table-accelerated segmented sieve for xi(n) = (-1)^omega(n) and lambda(n).

The table holds one bit per integer coprime to 30 below ``limit_N``, so it
costs ``limit_N / 30`` bytes.  A block ``[a, b)`` is resolved in three
phases:

1. every prime ``p`` in ``[ceil((b-1)/(N-1)), isqrt(b-1)]`` visits its
   multiples; ``n/p`` with the factors 2, 3, 5 removed is below ``N`` and
   is looked up in the table, the sign then depends on whether ``p | n/p``;
2. primes from ``ceil((b-1)/(N-1)) - 1`` down to 7 visit the multiples that
   are still unknown; the 30-free cofactor is looked up directly if it is
   below ``N`` and otherwise reduced by trial division with primes
   ``7 <= q <= p``;
3. anything still unknown is ``2^r 3^s 5^t P^e`` with ``P`` a prime above
   ``sqrt(b-1)`` and ``e`` in ``{0, 1}``.

The Moebius function uses a plain segmented sieve that shares the block
driver.
"""

from __future__ import annotations

import enum
import json
import math
import multiprocessing as mproc
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .primes import primes_up_to

RESIDUES = (1, 7, 11, 13, 17, 19, 23, 29)
_RES_INDEX = np.full(30, -1, dtype=np.int64)
for _k, _r in enumerate(RESIDUES):
    _RES_INDEX[_r] = _k
_RES_ARRAY = np.array(RESIDUES, dtype=np.int64)

SEED_BYTE = 0xFE  # 1 -> +1, the seven primes -> -1
TABLE_FORMAT_VERSION = 1
DEFAULT_TABLE_CAP = 300_000_000
DEFAULT_MEMORY_CAP_BYTES = 1 << 30
DEFAULT_BLOCK_SIZE = 10_000_000
GEOMETRIC_RATIO = math.exp(0.01)
# blocks are evaluated in slices of this length to bound per-process memory
SUB_BLOCK = 1_000_000

# 2-bit block encoding: 00 unknown, 01 = +1, 10 = -1
UNKNOWN, PLUS, MINUS = 0, 1, 2


class Func(str, enum.Enum):
    XI = "xi"
    LAMBDA = "lambda"
    MU = "mu"

    @classmethod
    def parse(cls, text) -> "Func":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {"xi": cls.XI, "h": cls.XI, "omega": cls.XI,
                   "lambda": cls.LAMBDA, "l": cls.LAMBDA, "liouville": cls.LAMBDA,
                   "mu": cls.MU, "m": cls.MU, "moebius": cls.MU, "mobius": cls.MU}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown function {text!r}") from None


class SieveError(RuntimeError):
    """An internal invariant of the block sieve was violated."""


class TableBudgetError(MemoryError):
    pass


def omega_pair_bruteforce(n: int) -> tuple[int, int]:
    """``(omega(n), Omega(n))`` by trial division."""
    if n < 1:
        raise ValueError("n must be positive")
    omega = big = 0
    d = 2
    while d * d <= n:
        if n % d == 0:
            omega += 1
            while n % d == 0:
                n //= d
                big += 1
        d += 1 if d == 2 else 2
    if n > 1:
        omega += 1
        big += 1
    return omega, big


def bruteforce_all(x: int) -> dict:
    """xi, lambda and mu on ``1..x`` by vectorised trial division (test oracle).

    Every integer is divided by each prime up to ``sqrt(x)`` as often as it
    goes; no table and no sieve ordering is involved.
    """
    cof = np.arange(1, x + 1, dtype=np.int64)
    omega = np.zeros(x, dtype=np.int64)
    big = np.zeros(x, dtype=np.int64)
    square = np.zeros(x, dtype=bool)
    for p in primes_up_to(math.isqrt(x)):
        p = int(p)
        hit = np.flatnonzero(cof % p == 0)
        omega[hit] += 1
        e = 0
        while len(hit):
            cof[hit] //= p
            big[hit] += 1
            if e:
                square[hit] = True
            e += 1
            hit = hit[cof[hit] % p == 0]
    rest = cof > 1
    omega += rest
    big += rest
    xi = (1 - 2 * (omega & 1)).astype(np.int8)
    mu = xi.copy()
    mu[square] = 0
    return {Func.XI: xi, Func.LAMBDA: (1 - 2 * (big & 1)).astype(np.int8), Func.MU: mu}


def bruteforce_values(x: int, func) -> np.ndarray:
    return bruteforce_all(x)[Func.parse(func)]


# ----------------------------------------------------------------- 2-bit codec


def pack2(values: np.ndarray) -> np.ndarray:
    """Pack int8 values in {0 unknown, +1, -1} into 2 bits each."""
    codes = np.where(values == 1, PLUS, np.where(values == -1, MINUS, UNKNOWN)).astype(np.uint8)
    pad = (-len(codes)) % 4
    if pad:
        codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)])
    c = codes.reshape(-1, 4)
    return (c[:, 0] | (c[:, 1] << 2) | (c[:, 2] << 4) | (c[:, 3] << 6)).astype(np.uint8)


def unpack2(packed: np.ndarray, length: int) -> np.ndarray:
    p = np.asarray(packed, dtype=np.uint8)
    codes = np.stack([(p >> s) & 3 for s in (0, 2, 4, 6)], axis=1).reshape(-1)[:length]
    if np.any(codes == 3):
        raise ValueError("invalid 2-bit code")
    return np.where(codes == PLUS, 1, np.where(codes == MINUS, -1, 0)).astype(np.int8)


# ----------------------------------------------------------------------- table


@dataclass(frozen=True, eq=False)
class XiTable:
    limit_N: int
    bits: np.ndarray
    func: Func = Func.XI

    def __post_init__(self):
        if self.limit_N % 30 or self.limit_N < 30:
            raise ValueError("limit_N must be a positive multiple of 30")
        if len(self.bits) != self.limit_N // 30:
            raise ValueError("bit array length must be limit_N / 30")
        if self.func is Func.MU:
            raise ValueError("the bit table holds xi or lambda only")

    def lookup(self, m: np.ndarray) -> np.ndarray:
        """Values (+1/-1 as int8) at integers ``m`` coprime to 30 and below ``limit_N``."""
        k = _RES_INDEX[m % 30]
        bit = (self.bits[m // 30] >> k.astype(np.uint8)) & 1
        return (1 - 2 * bit.astype(np.int8)).astype(np.int8)

    def value(self, n: int) -> int:
        if math.gcd(n, 30) != 1 or not 0 < n < self.limit_N:
            raise KeyError(n)
        return int(self.lookup(np.array([n], dtype=np.int64))[0])

    def truncated(self, limit: int) -> "XiTable":
        return XiTable(limit, self.bits[: limit // 30], self.func)

    def save(self, path) -> Path:
        path = Path(path)
        header = json.dumps({"format": "omegaparity-xitable", "version": TABLE_FORMAT_VERSION,
                             "limit_N": self.limit_N, "func": self.func.value},
                            sort_keys=True)
        with path.open("wb") as fh:
            fh.write(header.encode() + b"\n")
            fh.write(np.ascontiguousarray(self.bits, dtype=np.uint8).tobytes())
        return path

    @classmethod
    def load(cls, path) -> "XiTable":
        with Path(path).open("rb") as fh:
            header = json.loads(fh.readline())
            raw = fh.read()
        if header.get("format") != "omegaparity-xitable":
            raise ValueError(f"{path}: not a table file")
        if header.get("version") != TABLE_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported table version {header.get('version')}")
        bits = np.frombuffer(raw, dtype=np.uint8).copy()
        return cls(int(header["limit_N"]), bits, Func(header["func"]))


def _pack_coprime(values: np.ndarray) -> np.ndarray:
    """Pack values at ``30k + r`` (block start divisible by 30) into table bytes."""
    v = values.reshape(-1, 30)[:, _RES_ARRAY]
    neg = (v == -1).astype(np.uint8)
    weights = (1 << np.arange(8, dtype=np.uint8)).astype(np.uint8)
    return (neg * weights).sum(axis=1).astype(np.uint8)


def build_xi_table(limit_N: int, func=Func.XI, *, memory_cap: int = DEFAULT_MEMORY_CAP_BYTES,
                   block_size: int = 1 << 21) -> XiTable:
    """Build the table by doubling from the single seed byte."""
    func = Func.parse(func)
    if func is Func.MU:
        raise ValueError("the bit table holds xi or lambda only")
    if limit_N < 30 or limit_N % 30:
        raise ValueError("limit_N must be a positive multiple of 30")
    if limit_N // 30 > memory_cap:
        raise TableBudgetError(f"table of {limit_N // 30} bytes exceeds cap {memory_cap}")
    bits = np.zeros(limit_N // 30, dtype=np.uint8)
    bits[0] = SEED_BYTE
    have = 30
    while have < limit_N:
        target = min(2 * have, limit_N)
        table = XiTable(have, bits[: have // 30], func)
        step = max(30, block_size - block_size % 30)
        for a in range(have, target, step):
            b = min(a + step, target)
            vals = _sieve_values(a, b, table)
            bits[a // 30 : b // 30] = _pack_coprime(vals)
        have = target
    return XiTable(limit_N, bits, func)


@lru_cache(maxsize=4)
def cached_table(limit_N: int, func: Func) -> XiTable:
    return build_xi_table(limit_N, func)


def default_table_size(x_max: int, cap: int = DEFAULT_TABLE_CAP) -> int:
    """Roughly ``x_max / 7`` so that nearly every block entry is settled by the
    table pass, never below ``sqrt(x_max)`` and capped at ``cap``."""
    want = max(x_max // 7, math.isqrt(x_max) + 2, 60)
    want = min(want, cap)
    return 30 * -(-want // 30)


# ---------------------------------------------------------------------- blocks


@dataclass(frozen=True, eq=False)
class BlockResult:
    a: int
    b: int
    values: np.ndarray  # 2 bits per integer, see pack2
    partial_sum: int
    func: Func = Func.XI

    def decoded(self) -> np.ndarray:
        return unpack2(self.values, self.b - self.a)


def _strip_235(n: np.ndarray, func: Func):
    """30-free part of ``n`` and the sign contributed by 2, 3, 5."""
    c = n.copy()
    flips = np.zeros(len(n), dtype=np.int64)
    low = c & -c
    v2 = np.log2(low.astype(np.float64)).astype(np.int64)
    c >>= v2
    flips += v2 if func is Func.LAMBDA else (v2 > 0)
    for p in (3, 5):
        idx = np.flatnonzero(c % p == 0)
        if func is Func.XI:
            flips[idx] += 1
        while len(idx):
            c[idx] //= p
            if func is Func.LAMBDA:
                flips[idx] += 1
            idx = idx[c[idx] % p == 0]
    sign = (1 - 2 * (flips & 1)).astype(np.int8)
    return c, sign


def _check_block(a: int, b: int, table: XiTable):
    if not 1 <= a < b:
        raise ValueError("need 1 <= a < b")
    if b > (table.limit_N - 1) ** 2:
        raise ValueError(f"block end {b} exceeds (limit_N - 1)^2 = {(table.limit_N - 1) ** 2}")


def _sieve_values(a: int, b: int, table: XiTable) -> np.ndarray:
    """int8 values over ``[a, b)``; the three-phase procedure."""
    _check_block(a, b, table)
    func = table.func
    N = table.limit_N
    n = np.arange(a, b, dtype=np.int64)
    c, sign = _strip_235(n, func)
    state = np.zeros(b - a, dtype=np.int8)
    root = math.isqrt(b - 1)
    split = -(-(b - 1) // (N - 1))  # smallest p with (b-1)/p <= N-1
    primes = primes_up_to(root)
    primes = primes[primes >= 7]

    # phase 1: table lookup on n/p
    for p in primes[primes >= split]:
        p = int(p)
        start = (-a) % p
        sl = slice(start, None, p)
        todo = state[sl] == 0
        if not todo.any():
            continue
        m = c[sl][todo] // p
        val = sign[sl][todo] * table.lookup(m)
        if func is Func.XI:
            val = np.where(m % p == 0, val, -val)
        else:
            val = -val
        sub = state[sl]
        sub[todo] = val
        state[sl] = sub

    # phase 2: descending small primes, trial division when the cofactor is large
    pend_pos, pend_lim = [], []
    for p in primes[primes < split][::-1]:
        p = int(p)
        start = (-a) % p
        pos = np.arange(start, b - a, p, dtype=np.int64)
        pos = pos[state[pos] == 0]
        if not len(pos):
            continue
        small = c[pos] < N
        hit = pos[small]
        state[hit] = sign[hit] * table.lookup(c[hit])
        rest = pos[~small]
        if len(rest):
            state[rest] = 3  # claimed, resolved below
            pend_pos.append(rest)
            pend_lim.append(np.full(len(rest), p, dtype=np.int64))
    if pend_pos:
        _trial_division(np.concatenate(pend_pos), np.concatenate(pend_lim), n, c, sign,
                        state, table)

    # phase 3: 2^r 3^s 5^t P^e
    left = np.flatnonzero(state == 0)
    if len(left):
        cl = c[left]
        big = cl != 1
        if np.any(cl[big] * cl[big] <= n[left][big]) or np.any(cl[big] <= root):
            raise SieveError("unresolved cofactor is not a single large prime")
        state[left] = np.where(big, -sign[left], sign[left])
    if np.any((state != 1) & (state != -1)):
        raise SieveError("unknown entries remain after the final pass")
    return state


def _trial_division(pos, lim, n, c, sign, state, table: XiTable):
    N = table.limit_N
    func = table.func
    cof = c[pos].copy()
    sgn = sign[pos].astype(np.int8)
    qs = primes_up_to(int(lim.max()))
    qs = qs[qs >= 7]
    active = np.arange(len(pos))
    for q in qs:
        q = int(q)
        active = active[(cof[active] >= N) & (lim[active] >= q)]
        if not len(active):
            break
        div = active[cof[active] % q == 0]
        if not len(div):
            continue
        e = np.zeros(len(div), dtype=np.int64)
        hit = np.arange(len(div))
        while len(hit):
            cof[div[hit]] //= q
            e[hit] += 1
            hit = hit[cof[div[hit]] % q == 0]
        flip = (e & 1) if func is Func.LAMBDA else np.ones_like(e)
        sgn[div] = np.where(flip == 1, -sgn[div], sgn[div])
    done = cof < N
    out = np.empty(len(pos), dtype=np.int8)
    out[done] = sgn[done] * table.lookup(cof[done])
    rem = ~done
    if np.any(cof[rem] <= lim[rem]) or np.any(cof[rem] * cof[rem] <= n[pos][rem]):
        raise SieveError("trial division left a composite cofactor")
    out[rem] = -sgn[rem]
    state[pos] = out


def _mu_values(a: int, b: int) -> np.ndarray:
    if not 1 <= a < b:
        raise ValueError("need 1 <= a < b")
    vals = np.ones(b - a, dtype=np.int8)
    prod = np.ones(b - a, dtype=np.int64)
    for p in primes_up_to(math.isqrt(b - 1)):
        p = int(p)
        s = (-a) % p
        vals[s::p] *= -1
        prod[s::p] *= p
        pp = p * p
        vals[(-a) % pp :: pp] = 0
    n = np.arange(a, b, dtype=np.int64)
    vals[prod < n] *= -1
    return vals


def block_values(a: int, b: int, func, table: XiTable | None = None) -> np.ndarray:
    func = Func.parse(func)
    if func is Func.MU:
        return _mu_values(a, b)
    if table is None or table.func is not func:
        raise ValueError(f"a {func.value} table is required")
    return _sieve_values(a, b, table)


def sieve_block(a: int, b: int, table: XiTable) -> BlockResult:
    vals = _sieve_values(a, b, table)
    return BlockResult(a, b, pack2(vals), int(vals.sum(dtype=np.int64)), table.func)


def mu_block(a: int, b: int) -> BlockResult:
    vals = _mu_values(a, b)
    return BlockResult(a, b, pack2(vals), int(vals.sum(dtype=np.int64)), Func.MU)


# ------------------------------------------------------------------ summatory


@dataclass(frozen=True)
class SummatorySeries:
    func: Func
    x_max: int
    checkpoints: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        xs = [x for x, _ in self.checkpoints]
        if any(u >= v for u, v in zip(xs, xs[1:])):
            raise ValueError("checkpoints must be strictly increasing")

    def as_dict(self) -> dict[int, int]:
        return dict(self.checkpoints)

    def value(self, x: int) -> int:
        try:
            return self.as_dict()[x]
        except KeyError:
            raise KeyError(f"no checkpoint at x={x}") from None

    @property
    def final(self) -> int:
        return self.checkpoints[-1][1]

    def to_csv(self, path, header_lines=()) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("x,S\n")
            for x, s in self.checkpoints:
                fh.write(f"{x},{s}\n")
        return path


def checkpoint_positions(x_max: int, stride: int | None = None, extra=()) -> list[int]:
    """Multiples of ``stride`` (or a geometric ladder with ratio ``e^0.01`` when
    ``stride`` is None) together with ``extra`` and ``x_max``."""
    pts = set()
    if stride is None:
        x = 1.0
        while x <= x_max:
            pts.add(int(x))
            x *= GEOMETRIC_RATIO
    else:
        if stride < 1:
            raise ValueError("checkpoint stride must be positive")
        pts.update(range(stride, x_max + 1, stride))
    pts.update(int(e) for e in extra if 1 <= int(e) <= x_max)
    pts.add(x_max)
    return sorted(pts)


_WORKER_TABLE: XiTable | None = None


def _init_worker(table):
    global _WORKER_TABLE
    _WORKER_TABLE = table


def _slices(a, b):
    return [(c, min(c + SUB_BLOCK, b)) for c in range(a, b, SUB_BLOCK)]


def _block_job(args):
    a, b, func, marks = args
    run = 0
    local = []
    k = 0
    for c, d in _slices(a, b):
        csum = np.cumsum(block_values(c, d, func, _WORKER_TABLE), dtype=np.int64)
        while k < len(marks) and marks[k] < d:
            local.append(run + int(csum[marks[k] - c]))
            k += 1
        run += int(csum[-1])
    return a, b, run, local


def _state_path(resume_dir, func, x_max, block_size, limit_N):
    return Path(resume_dir) / f"summatory_{func.value}_{x_max}_{block_size}_{limit_N}.json"


def summatory(x_max: int, block_size: int = DEFAULT_BLOCK_SIZE, func=Func.XI,
              checkpoint_stride: int | None = None, *, extra_checkpoints=(),
              table: XiTable | None = None, table_size: int | None = None,
              workers: int = 1, resume_dir=None, progress=None) -> SummatorySeries:
    """Partial sums of xi, lambda or mu with checkpoints.

    Blocks are independent; partial sums are merged in ascending order so the
    result does not depend on ``workers``.  With ``resume_dir`` the running
    state is saved after every block and a rerun continues where it stopped.
    """
    func = Func.parse(func)
    if x_max < 1:
        raise ValueError("x_max must be positive")
    if block_size < 30:
        raise ValueError("block_size must be at least 30")
    if func is not Func.MU and table is None:
        size = table_size or default_table_size(x_max)
        table = cached_table(size, func)
    limit = table.limit_N if table is not None else 0
    marks = checkpoint_positions(x_max, checkpoint_stride, extra_checkpoints)

    jobs = []
    mi = 0
    for a in range(1, x_max + 1, block_size):
        b = min(a + block_size, x_max + 1)
        mj = mi
        while mj < len(marks) and marks[mj] < b:
            mj += 1
        jobs.append((a, b, func, marks[mi:mj]))
        mi = mj

    total = 0
    done_blocks = 0
    checkpoints: list[tuple[int, int]] = []
    state_file = None
    if resume_dir is not None:
        Path(resume_dir).mkdir(parents=True, exist_ok=True)
        state_file = _state_path(resume_dir, func, x_max, block_size, limit)
        if state_file.exists():
            saved = json.loads(state_file.read_text())
            if saved["marks_digest"] == _digest_marks(marks):
                done_blocks = saved["blocks_done"]
                total = saved["total"]
                checkpoints = [tuple(c) for c in saved["checkpoints"]]
    todo = jobs[done_blocks:]

    def absorb(res):
        nonlocal total, done_blocks
        a, b, s, local = res
        for x, v in zip(jobs[done_blocks][3], local):
            checkpoints.append((x, total + v))
        total += s
        done_blocks += 1
        if state_file is not None:
            tmp = state_file.with_suffix(".tmp")
            tmp.write_text(json.dumps({"blocks_done": done_blocks, "total": total,
                                       "checkpoints": checkpoints,
                                       "marks_digest": _digest_marks(marks)}))
            tmp.replace(state_file)
        if progress is not None:
            progress(b - 1, total)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers, mp_context=mproc.get_context("fork"),
                                 initializer=_init_worker, initargs=(table,)) as pool:
            for res in pool.map(_block_job, todo):
                absorb(res)
    else:
        _init_worker(table)
        for job in todo:
            absorb(_block_job(job))
    return SummatorySeries(func, x_max, tuple(checkpoints))


def _digest_marks(marks) -> str:
    import hashlib

    return hashlib.sha256(",".join(map(str, marks)).encode()).hexdigest()[:16]


def agreement_count(x: int, block_size: int = DEFAULT_BLOCK_SIZE, *, table_size=None,
                    workers: int = 1) -> int:
    """Number of ``n <= x`` with ``xi(n) = lambda(n)``, from one sieve of each."""
    size = table_size or default_table_size(x)
    t_xi = cached_table(size, Func.XI)
    t_la = cached_table(size, Func.LAMBDA)
    jobs = [(a, min(a + block_size, x + 1)) for a in range(1, x + 1, block_size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers, mp_context=mproc.get_context("fork"),
                                 initializer=_init_pair, initargs=(t_xi, t_la)) as pool:
            return sum(pool.map(_agree_job, jobs))
    _init_pair(t_xi, t_la)
    return sum(_agree_job(j) for j in jobs)


_PAIR: tuple | None = None


def _init_pair(t_xi, t_la):
    global _PAIR
    _PAIR = (t_xi, t_la)


def _agree_job(ab):
    count = 0
    for c, d in _slices(*ab):
        xi = _sieve_values(c, d, _PAIR[0])
        la = _sieve_values(c, d, _PAIR[1])
        count += int(np.count_nonzero(xi == la))
    return count


# --------------------------------------------------------------- reporting


def average_order_report(x_max: int) -> tuple[int, int, float, float]:
    """Exact ``sum omega``, ``sum Omega`` over ``n <= x_max`` and the constants
    ``A``, ``B`` they estimate in ``x log log x + C x``.

    Uses ``sum_{n<=x} omega(n) = sum_p floor(x/p)`` and the analogous sum
    over prime powers for ``Omega``.
    """
    if x_max < 3:
        raise ValueError("x_max must be at least 3 so that log log x > 0")
    x = int(x_max)
    ps = primes_up_to(x)
    sum_omega = int((x // ps).sum(dtype=np.int64))
    sum_big = sum_omega
    base, pk = ps, ps
    while len(base):
        keep = pk <= x // base
        base = base[keep]
        pk = pk[keep] * base
        sum_big += int((x // pk).sum(dtype=np.int64))
    lead = x * math.log(math.log(x))
    return sum_omega, sum_big, (sum_omega - lead) / x, (sum_big - lead) / x


def normalized_export(series: SummatorySeries) -> list[tuple[float, float]]:
    """Rows ``(log x, S(x) / sqrt(x))`` at every checkpoint."""
    if not series.checkpoints:
        raise ValueError("empty series")
    return [(math.log(x), s / math.sqrt(x)) for x, s in series.checkpoints]
