"""Exact integer arithmetic: sieves, interval factorization, divisor functions.

Everything here is exact.  Counts and divisor-function values are Python ints
(arbitrary precision); the only numpy arrays are int64 tables whose entries
provably fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _cartesian
from math import ceil, comb, isqrt, prod

import numpy as np

from .errors import ResourceLimitError

MAX_ENDPOINT = (1 << 63) - 1   # interval endpoints stay below 2**63
SIEVE_LIMIT_CAP = 1 << 27      # spf/table entries (int64), ~1 GiB ceiling
SEGMENT_SIZE = 1 << 22         # interval sieving works in segments this long
ENUMERATION_CAP = 10 ** 7      # ordered-factorization tuples per call


@dataclass(frozen=True)
class Factorization:
    """Canonical prime factorization ((p1,e1),(p2,e2),...), p strictly increasing, e >= 1.

    The empty tuple represents 1.  Constructors guarantee the p are prime;
    validation here is structural only.
    """

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise ValueError(f"not canonical: {self.factors!r}")
            last = p

    @classmethod
    def of(cls, n: int) -> "Factorization":
        """Factor a positive integer by trial division."""
        if n < 1:
            raise ValueError(f"cannot factor {n}: inputs must be >= 1")
        out = []
        m = n
        p = 2
        while p * p <= m:
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                out.append((p, e))
            p += 1 if p == 2 else 2
        if m > 1:
            out.append((m, 1))
        return cls(tuple(out))

    @property
    def value(self) -> int:
        return prod(p ** e for p, e in self.factors)

    def __mul__(self, other: "Factorization") -> "Factorization":
        merged = dict(self.factors)
        for p, e in other.factors:
            merged[p] = merged.get(p, 0) + e
        return Factorization(tuple(sorted(merged.items())))


@dataclass(frozen=True)
class Interval:
    """The window (x, x+H]: the H integers x+1 .. x+H."""

    x: int
    H: int

    def __post_init__(self):
        if self.x < 0 or self.H < 1 or self.x + self.H > MAX_ENDPOINT:
            raise ValueError(f"bad interval ({self.x}, {self.x}+{self.H}]")

    def values(self) -> range:
        return range(self.x + 1, self.x + self.H + 1)

    def __contains__(self, n: int) -> bool:
        return self.x < n <= self.x + self.H


@dataclass(frozen=True)
class SieveTable:
    """Smallest-prime-factor table; spf[n] is the least prime dividing n, 2 <= n <= limit."""

    limit: int
    spf: np.ndarray

    def factorize(self, n: int) -> Factorization:
        if not 1 <= n <= self.limit:
            raise ValueError(f"{n} outside sieve range [1, {self.limit}]")
        out = []
        m = n
        while m > 1:
            p = int(self.spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return Factorization(tuple(out))

    def primes(self) -> np.ndarray:
        idx = np.arange(self.limit + 1, dtype=np.int64)
        return idx[2:][self.spf[2:] == idx[2:]]


@dataclass(frozen=True)
class IntervalFactorization:
    """Exact factorizations of every integer in an interval, in ascending order."""

    interval: Interval
    entries: tuple[Factorization, ...]

    def factorization_of(self, n: int) -> Factorization:
        if n not in self.interval:
            raise ValueError(f"{n} not in {self.interval}")
        return self.entries[n - self.interval.x - 1]

    def items(self):
        return zip(self.interval.values(), self.entries)


@lru_cache(maxsize=16)
def build_sieve(limit: int, cap: int = SIEVE_LIMIT_CAP) -> SieveTable:
    """Compute the smallest-prime-factor table for 2..limit."""
    if limit < 2:
        raise ValueError("sieve limit must be >= 2")
    if limit > cap:
        raise ResourceLimitError(f"sieve limit {limit} exceeds cap {cap}")
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.arange(limit + 1, dtype=np.int64)
    rest = spf == 0
    rest[:2] = False
    spf[rest] = idx[rest]
    spf.setflags(write=False)
    return SieveTable(limit, spf)


def primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def factor_interval(x: int, H: int) -> IntervalFactorization:
    """Factor every n in (x, x+H] with a segmented sieve.

    Primes p <= sqrt(x+H) are stripped per segment; any remaining cofactor
    > 1 is itself prime.  Exact by construction: tests multiply back.
    """
    interval = Interval(x, H)
    top = x + H
    base_primes = build_sieve(max(2, isqrt(top))).primes() if top >= 4 else np.zeros(0, np.int64)
    entries: list[Factorization] = []
    lo = x + 1
    while lo <= top:
        hi = min(lo + SEGMENT_SIZE - 1, top)
        size = hi - lo + 1
        rem = list(range(lo, hi + 1))
        facs: list[list[tuple[int, int]]] = [[] for _ in range(size)]
        for p in base_primes:
            p = int(p)
            if p * p > hi:
                break
            start = ((lo + p - 1) // p) * p
            for m in range(start, hi + 1, p):
                i = m - lo
                e = 0
                while rem[i] % p == 0:
                    rem[i] //= p
                    e += 1
                if e:
                    facs[i].append((p, e))
        for i in range(size):
            if rem[i] > 1:
                facs[i].append((rem[i], 1))
            entries.append(Factorization(tuple(facs[i])))
        lo = hi + 1
    return IntervalFactorization(interval, tuple(entries))


def _as_factorization(n) -> Factorization:
    return n if isinstance(n, Factorization) else Factorization.of(n)


def tau_k(n, k: int) -> int:
    """Number of ordered k-tuples of positive integers with product n.

    Multiplicative with value C(e+k-1, k-1) on p^e.  tau_1 == 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    f = _as_factorization(n)
    out = 1
    for _, e in f.factors:
        out *= comb(e + k - 1, k - 1)
    return out


def rad_k(n, k: int) -> int:
    """Minimum of lcm(n_1,...,n_k) over factorizations n = n_1*...*n_k.

    Multiplicative with value p^ceil(e/k) on p^e; the balanced split of each
    prime-power attains the minimum.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    f = _as_factorization(n)
    return prod(p ** ceil(e / k) for p, e in f.factors)


def _compositions(total: int, parts: int):
    # ordered nonnegative compositions, first coordinate descending
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def ordered_factorizations(n, k: int, cap: int = ENUMERATION_CAP):
    """Yield all tau_k(n) ordered k-tuples (u_1,...,u_k) with u_1*...*u_k = n."""
    f = _as_factorization(n)
    count = tau_k(f, k)
    if count > cap:
        raise ResourceLimitError(f"{count} tuples exceeds enumeration cap {cap}")

    def gen():
        per_prime = [list(_compositions(e, k)) for _, e in f.factors]
        for pick in _cartesian(*per_prime):
            tup = [1] * k
            for (p, _), split in zip(f.factors, pick):
                for i, ei in enumerate(split):
                    if ei:
                        tup[i] *= p ** ei
            yield tuple(tup)

    return gen()


def tau_k_table(limit: int, k: int, cap: int = SIEVE_LIMIT_CAP) -> np.ndarray:
    """tau_k(n) for all n <= limit as an int64 array (index 0 unused, set to 0).

    Built multiplicatively: each prime power p^e rescales its multiples from
    C(e-1+k-1, k-1) to C(e+k-1, k-1); the integer division is exact because
    passes run in ascending e.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if limit > cap:
        raise ResourceLimitError(f"table limit {limit} exceeds cap {cap}")
    t = np.ones(limit + 1, dtype=np.int64)
    t[0] = 0
    if k == 1:
        return t
    binoms = [comb(e + k - 1, k - 1) for e in range(limit.bit_length() + 2)]
    for p in primes_up_to(limit):
        p = int(p)
        t[p::p] *= binoms[1]
        q = p * p
        e = 2
        while q <= limit:
            view = t[q::q]
            view //= binoms[e - 1]
            view *= binoms[e]
            q *= p
            e += 1
    return t
