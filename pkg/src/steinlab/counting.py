"""Exact counts of equal-product tuple sets over short intervals.

Covers the equal-products equation n_1*...*n_k = n_{k+1}*...*n_{2k} on
(x, x+H]^{2k} with its trivial/nontrivial split, divisibility tuple sets
over [-H,H]^k and [X]x[H]^k, cross-interval collision counts with their
paired/unpaired classification, and a dyadic divisor-sum majorant for the
constrained nontrivial count.

Products of interval values are Python ints, so every product comparison is
exact no matter how large the k-fold products grow.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations_with_replacement, groupby
from itertools import product as _cartesian
from math import comb, factorial, gcd, prod
from typing import Optional

import numpy as np

from .arith import Factorization, Interval, factor_interval, tau_k
from .errors import ResourceLimitError

DEFAULT_MAP_CAP = 1 << 28        # product-map entries for the hashed method
DEFAULT_RETENTION_CAP = 1 << 22  # value-multisets retained for the constrained count
ORACLE_TUPLE_CAP = 10 ** 9       # conceptual 2k-tuple space the oracle may cover
ORACLE_PAIR_CAP = 10 ** 8        # colliding pairs the oracle will walk explicitly
DIVISOR_WORK_CAP = 10 ** 8       # residue*multiset work for the divisibility counts
MAJORANT_TERM_CAP = 10 ** 7      # summands the dyadic majorant will evaluate


@dataclass(frozen=True)
class CountBreakdown:
    """Solution counts of the equal-products equation for one (x, H, k) instance.

    nontrivial_constrained is None when the instance was too large to retain
    per-product tuple classes (it is exact whenever present).
    """

    k: int
    interval: Interval
    total: int
    trivial: int
    nontrivial: int
    nontrivial_constrained: Optional[int]

    def __post_init__(self):
        if self.total != self.trivial + self.nontrivial:
            raise ValueError("total != trivial + nontrivial")
        if self.nontrivial_constrained is not None and not (
            0 <= self.nontrivial_constrained <= self.nontrivial
        ):
            raise ValueError("constrained count out of range")

    @property
    def moment(self) -> float:
        """total / H^k: the 2k-th absolute moment this count encodes."""
        return self.total / self.interval.H ** self.k


@dataclass(frozen=True)
class CrossCountBreakdown:
    """Counts for the two-interval collision set of (I1^k x I2^k) ordered pairs."""

    k: int
    i1: Interval
    i2: Interval
    total: int
    t_star: int
    n_star_12: int
    n_star_21: int


def _orderings(sorted_tuple) -> int:
    # number of distinct orderings of a sorted value tuple: k!/prod(mult!)
    out = factorial(len(sorted_tuple))
    for _, grp in groupby(sorted_tuple):
        out //= factorial(sum(1 for _ in grp))
    return out


def _partitions(n: int, max_part: int | None = None):
    # partitions of n in weakly decreasing order
    if n == 0:
        yield ()
        return
    top = n if max_part is None else min(n, max_part)
    for head in range(top, 0, -1):
        for tail in _partitions(n - head, head):
            yield (head,) + tail


def trivial_count_exact(H: int, k: int) -> int:
    """Count 2k-tuples whose halves are equal as multisets, over any H distinct values.

    Aggregates by multiplicity pattern: a multiset with parts m_1..m_r occurs
    in falling(H,r)/prod(pattern automorphisms) ways and pairs with itself in
    (k!/prod m_i!)^2 ordered ways.
    """
    if not 1 <= k <= 8:
        raise ValueError("k must be in 1..8")
    if not 1 <= H <= 10 ** 9:
        raise ValueError("H must be in 1..10^9")
    total = 0
    for part in _partitions(k):
        r = len(part)
        if r > H:
            continue
        ways = 1
        for i in range(r):
            ways *= H - i
        for _, grp in groupby(part):
            ways //= factorial(sum(1 for _ in grp))
        orders = factorial(k)
        for m in part:
            orders //= factorial(m)
        total += ways * orders * orders
    return total


def _multiset_weight_classes(values, k: int):
    """Yield (sorted value tuple, product, orderings) over all k-multisets of values."""
    for m in combinations_with_replacement(values, k):
        yield m, prod(m), _orderings(m)


def _oracle_count(interval: Interval, k: int) -> CountBreakdown:
    H = interval.H
    if H ** (2 * k) > ORACLE_TUPLE_CAP:
        raise ResourceLimitError(
            f"oracle tuple space H^(2k) = {H ** (2 * k)} exceeds cap {ORACLE_TUPLE_CAP}"
        )
    groups: dict[int, list[tuple]] = {}
    for t in _cartesian(interval.values(), repeat=k):
        groups.setdefault(prod(t), []).append(t)
    pair_work = sum(len(g) ** 2 for g in groups.values())
    if pair_work > ORACLE_PAIR_CAP:
        raise ResourceLimitError(f"{pair_work} colliding pairs exceeds cap {ORACLE_PAIR_CAP}")
    total = trivial = constrained = 0
    for g in groups.values():
        meta = [(t, tuple(sorted(t)), set(t)) for t in g]
        for _, key_a, set_a in meta:
            for t_b, key_b, _ in meta:
                total += 1
                if key_a == key_b:
                    trivial += 1
                # equal multisets force t_b[-1] in set_a, so this pair is nontrivial
                if t_b[-1] not in set_a:
                    constrained += 1
    return CountBreakdown(k, interval, total, trivial, total - trivial, constrained)


def _hashed_count(interval: Interval, k: int, map_cap: int, retention_cap: int) -> CountBreakdown:
    H = interval.H
    n_multisets = comb(H + k - 1, k)
    if n_multisets > map_cap:
        raise ResourceLimitError(f"{n_multisets} product-map entries exceed cap {map_cap}")
    retain = n_multisets <= retention_cap
    counts: dict[int, int] = {}
    classes: dict[int, list[tuple[tuple, int]]] = {}
    for m, p, w in _multiset_weight_classes(interval.values(), k):
        counts[p] = counts.get(p, 0) + w
        if retain:
            classes.setdefault(p, []).append((m, w))
    total = sum(c * c for c in counts.values())
    trivial = trivial_count_exact(H, k)
    constrained: Optional[int] = None
    if retain:
        constrained = 0
        for cls in classes.values():
            if len(cls) < 2:
                continue  # a class paired with itself never passes the membership test
            items = [
                (set(m), [(v, sum(1 for _ in grp)) for v, grp in groupby(m)], w)
                for m, w in cls
            ]
            for set_a, _, w_a in items:
                for set_b, mults_b, w_b in items:
                    if set_b == set_a:
                        continue
                    for v, mult in mults_b:
                        if v not in set_a:
                            # ordered right-tuples with last coordinate v
                            constrained += w_a * (w_b * mult // k)
    return CountBreakdown(k, interval, total, trivial, total - trivial, constrained)


def equal_products_count(
    interval: Interval,
    k: int,
    method: str = "hashed",
    *,
    map_cap: int = DEFAULT_MAP_CAP,
    retention_cap: int = DEFAULT_RETENTION_CAP,
) -> CountBreakdown:
    """Exact count of 2k-tuples in (x, x+H]^{2k} whose half-products agree.

    method="oracle" expands ordered tuples and classifies every colliding
    pair by direct inspection; method="hashed" aggregates value multisets
    with permutation weights into a product map.  Both are exact; the two
    routes share no counting logic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if method == "oracle":
        return _oracle_count(interval, k)
    if method == "hashed":
        return _hashed_count(interval, k, map_cap, retention_cap)
    raise ValueError(f"unknown method {method!r}")


def iter_equal_product_pairs(interval: Interval, k: int):
    """Yield every ordered pair (left, right) of k-tuples with equal products.

    Test-oriented enumeration helper; memory is bounded by H^k tuples.
    """
    groups: dict[int, list[tuple]] = {}
    for t in _cartesian(interval.values(), repeat=k):
        groups.setdefault(prod(t), []).append(t)
    for g in groups.values():
        for a in g:
            for b in g:
                yield a, b


# ---------------------------------------------------------------------------
# Divisibility tuple sets
# ---------------------------------------------------------------------------


def _divisors_with_factors(f: Factorization):
    """All divisors of f.value as (value, factor dict) pairs."""
    divs = [(1, {})]
    for p, e in f.factors:
        nxt = []
        for val, fac in divs:
            q = 1
            for j in range(e + 1):
                if j:
                    q *= p
                    nf = dict(fac)
                    nf[p] = j
                    nxt.append((val * q, nf))
                else:
                    nxt.append((val, fac))
        divs = nxt
    return divs


def _count_coprime(limit: int, primes: tuple[int, ...]) -> int:
    # #{m <= limit : gcd(m, prod primes) = 1} by inclusion-exclusion
    if limit <= 0:
        return 0
    total = 0
    n = len(primes)
    for mask in range(1 << n):
        d = 1
        bits = 0
        for i in range(n):
            if mask >> i & 1:
                d *= primes[i]
                bits += 1
        total += (-1) ** bits * (limit // d)
    return total


def divisor_tuple_count_N(H: int, y: int, k: int) -> int:
    """Exact #{(h_1..h_k) in [-H,H]^k : y | h_1*...*h_k, product nonzero}.

    Dynamic program over the residual modulus s = y / gcd(y, h_1*...*h_j):
    peeling gcd(s, h) one coordinate at a time is exact, and the number of
    h in [1,H] with gcd(s,h) = d is a Moebius count over s/d.
    """
    if H < 1 or y < 1 or k < 1:
        raise ValueError("H, y, k must be >= 1")
    fy = Factorization.of(y)
    state_factors = {y: fy}
    cur = {y: 1}
    for _ in range(k):
        nxt: dict[int, int] = {}
        for s, ways in cur.items():
            fs = state_factors[s]
            for d, dfac in _divisors_with_factors(fs):
                if d > H:
                    continue
                rest_primes = tuple(p for p, e in fs.factors if dfac.get(p, 0) < e)
                c = _count_coprime(H // d, rest_primes)
                if not c:
                    continue
                s2 = s // d
                if s2 not in state_factors:
                    state_factors[s2] = Factorization(
                        tuple((p, e - dfac.get(p, 0)) for p, e in fs.factors if e > dfac.get(p, 0))
                    )
                nxt[s2] = nxt.get(s2, 0) + ways * 2 * c
        cur = nxt
    return cur.get(1, 0)


def divisor_tuple_count_S(x: int, H: int, k: int) -> int:
    """Sum of divisor_tuple_count_N(H, y, k) over y in (x, x+H]."""
    iv = Interval(x, H)
    return sum(divisor_tuple_count_N(H, y, k) for y in iv.values())


def _x_residue_counts(X: int, y: int) -> np.ndarray:
    # counts[r] = #{x in [1,X] : x = r (mod y)}
    r = np.arange(y, dtype=np.int64)
    counts = (X - r) // y + 1
    counts[0] = X // y
    if X < y:
        counts[X + 1 :] = 0
    return counts


def polynomial_divisor_count_M(X: int, H: int, y: int, k: int) -> int:
    """Exact #{(x, t_1..t_k) in [X] x [H]^k : y | (x+t_1)*...*(x+t_k)}.

    The divisibility condition on x is periodic mod y, so count qualifying
    residues per t-multiset and multiply by how often each residue occurs
    in [1, X].
    """
    if X < 1 or H < 1 or y < 1 or k < 1:
        raise ValueError("X, H, y, k must be >= 1")
    work = comb(H + k - 1, k) * y
    if work > DIVISOR_WORK_CAP:
        raise ResourceLimitError(f"residue work {work} exceeds cap {DIVISOR_WORK_CAP}")
    xcount = _x_residue_counts(X, y)
    r = np.arange(y, dtype=np.int64)
    total = 0
    for m, _, w in _multiset_weight_classes(range(1, H + 1), k):
        acc = np.ones(y, dtype=np.int64)
        for t in m:
            acc = acc * ((r + t) % y) % y
        total += w * int(xcount[acc == 0].sum())
    return total


def mixed_divisor_count_B(X: int, H: int, y: int, k: int) -> int:
    """Exact size of the mixed set: y | (x+t_1)...(x+t_k) * h_1...h_k with nonzero h-product.

    Splits y per tuple as gcd(y, polynomial part) times a residual modulus
    that the h-block must cover, reusing the [-H,H]^k count for the latter.
    """
    if X < 1 or H < 1 or y < 1 or k < 1:
        raise ValueError("X, H, y, k must be >= 1")
    work = comb(H + k - 1, k) * y
    if work > DIVISOR_WORK_CAP:
        raise ResourceLimitError(f"residue work {work} exceeds cap {DIVISOR_WORK_CAP}")
    fy = Factorization.of(y)
    n_for = {d: divisor_tuple_count_N(H, d, k) for d, _ in _divisors_with_factors(fy)}
    xcount = _x_residue_counts(X, y)
    r = np.arange(y, dtype=np.int64)
    total = 0
    for m, _, w in _multiset_weight_classes(range(1, H + 1), k):
        acc = np.ones(y, dtype=np.int64)
        for t in m:
            acc = acc * ((r + t) % y) % y
        g = np.gcd(acc, y)  # gcd(y, poly product); gcd(y, 0) = y
        sub = 0
        for res in range(y):
            sub += int(xcount[res]) * n_for[y // int(g[res])]
        total += w * sub
    return total


# ---------------------------------------------------------------------------
# Cross-interval collision counts
# ---------------------------------------------------------------------------


def _tau_2k_map(i1: Interval, i2: Interval, k: int) -> dict[int, int]:
    out = {}
    for iv in (i1, i2):
        for n, f in factor_interval(iv.x, iv.H).items():
            if n not in out:
                out[n] = tau_k(f, 2 * k)
    return out


def _cross_groups_hashed(i1: Interval, i2: Interval, k: int, map_cap: int):
    n_classes = comb(i1.H + k - 1, k) * comb(i2.H + k - 1, k)
    if n_classes > map_cap:
        raise ResourceLimitError(f"{n_classes} cross classes exceed cap {map_cap}")
    groups: dict[int, list] = {}
    for mn, pn, wn in _multiset_weight_classes(i1.values(), k):
        for mm, pm, wm in _multiset_weight_classes(i2.values(), k):
            groups.setdefault(pn * pm, []).append((mn, mm, wn * wm, wn, wm))
    return groups


def _last_coordinate_orderings(m_sorted, w: int, v, k: int) -> int:
    # orderings of multiset m with last coordinate fixed to v
    mult = sum(1 for u in m_sorted if u == v)
    return w * mult // k


def cross_count(
    i1: Interval,
    i2: Interval,
    k: int,
    method: str = "hashed",
    *,
    map_cap: int = DEFAULT_MAP_CAP,
) -> CrossCountBreakdown:
    """Count tuple pairs from I1^k x I2^k (left) and I1^k x I2^k (right) with equal products.

    t_star counts solutions whose two n-halves share the same value set and
    whose two m-halves share the same value set (the fully paired solutions).
    n_star_12 / n_star_21 count the dominating unpaired class: the last n-
    (resp. m-) coordinate avoids the opposite half's values, and every value
    breaking the pairing conditions has 2k-divisor count at most that of the
    distinguished coordinate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if i1.H != i2.H:
        raise ValueError("intervals must have equal length")
    tau2k = _tau_2k_map(i1, i2, k)

    if method == "oracle":
        space = (i1.H * i2.H) ** (2 * k)
        if space > ORACLE_TUPLE_CAP:
            raise ResourceLimitError(f"oracle space {space} exceeds cap {ORACLE_TUPLE_CAP}")
        groups: dict[int, list] = {}
        for nt in _cartesian(i1.values(), repeat=k):
            for mt in _cartesian(i2.values(), repeat=k):
                groups.setdefault(prod(nt) * prod(mt), []).append((nt, mt))
        pair_work = sum(len(g) ** 2 for g in groups.values())
        if pair_work > ORACLE_PAIR_CAP:
            raise ResourceLimitError(f"{pair_work} pairs exceeds cap {ORACLE_PAIR_CAP}")
        total = t_star = n12 = n21 = 0
        for g in groups.values():
            meta = [(nt, mt, set(nt), set(mt)) for nt, mt in g]
            for _, _, sn_a, sm_a in meta:
                for nt_b, mt_b, sn_b, sm_b in meta:
                    total += 1
                    if sn_a == sn_b and sm_a == sm_b:
                        t_star += 1
                    viol = (sn_a ^ sn_b) | (sm_a ^ sm_b)
                    if viol:
                        t_max = max(tau2k[u] for u in viol)
                        if nt_b[-1] not in sn_a and t_max <= tau2k[nt_b[-1]]:
                            n12 += 1
                        if mt_b[-1] not in sm_a and t_max <= tau2k[mt_b[-1]]:
                            n21 += 1
        return CrossCountBreakdown(k, i1, i2, total, t_star, n12, n21)

    if method != "hashed":
        raise ValueError(f"unknown method {method!r}")

    groups = _cross_groups_hashed(i1, i2, k, map_cap)
    total = sum(sum(c[2] for c in g) ** 2 for g in groups.values())
    t_star = n12 = n21 = 0
    for g in groups.values():
        if len(g) == 1:
            t_star += g[0][2] ** 2
            continue
        items = [(set(mn), set(mm), mn, mm, w, wn, wm) for mn, mm, w, wn, wm in g]
        for sn_a, sm_a, _, _, w_a, _, _ in items:
            for sn_b, sm_b, mn_b, mm_b, w_b, wn_b, wm_b in items:
                if sn_a == sn_b and sm_a == sm_b:
                    t_star += w_a * w_b
                viol = (sn_a ^ sn_b) | (sm_a ^ sm_b)
                if not viol:
                    continue
                t_max = max(tau2k[u] for u in viol)
                for v in sn_b - sn_a:
                    if t_max <= tau2k[v]:
                        n12 += w_a * _last_coordinate_orderings(mn_b, wn_b, v, k) * wm_b
                for v in sm_b - sm_a:
                    if t_max <= tau2k[v]:
                        n21 += w_a * _last_coordinate_orderings(mm_b, wm_b, v, k) * wn_b
    return CrossCountBreakdown(k, i1, i2, total, t_star, n12, n21)


# ---------------------------------------------------------------------------
# Dyadic majorant
# ---------------------------------------------------------------------------


def _dyadic_blocks(H: int) -> list[int]:
    out = []
    u = 1
    while u <= H:
        out.append(u)
        u *= 2
    return out


def dyadic_majorant(interval: Interval, k: int, *, term_cap: int = MAJORANT_TERM_CAP) -> int:
    """Divisor-sum upper bound for the constrained nontrivial count.

    Sums tau_k(prod_i (eps_i*u_i*v_i + u_1*...*u_k)) over sign vectors, dyadic
    block vectors U with 2^{-k} x < U_1*...*U_k <= x+H, u_i in [U_i, 2U_i),
    v_i <= H/U_i, with the block product in (x, x+H] and every factor positive.
    Each constrained nontrivial solution contributes at least one unit, so the
    result dominates that count.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    x, H = interval.x, interval.H
    blocks = _dyadic_blocks(H)
    u_vectors = [
        U for U in _cartesian(blocks, repeat=k)
        if prod(U) * (2 ** k) > x and prod(U) <= x + H
    ]
    budget = sum(
        prod(U) * prod(max(H // Ui, 0) for Ui in U) for U in u_vectors
    ) * (2 ** k)
    if budget > term_cap:
        raise ResourceLimitError(f"majorant term budget {budget} exceeds cap {term_cap}")

    tau_cache: dict[int, int] = {}

    def tau_of_product(factors_list: list[int]) -> int:
        merged: Counter = Counter()
        for a in factors_list:
            fa = tau_cache.get(a)
            if fa is None:
                tau_cache[a] = fa = Factorization.of(a)  # a <= x + 3H: trial division is fine
            for p, e in fa.factors:
                merged[p] += e
        out = 1
        for e in merged.values():
            out *= comb(e + k - 1, k - 1)
        return out

    total = 0
    for eps in _cartesian((1, -1), repeat=k):
        for U in u_vectors:
            v_ranges = [range(1, H // Ui + 1) for Ui in U]
            if any(len(r) == 0 for r in v_ranges):
                continue
            for u in _cartesian(*(range(Ui, 2 * Ui) for Ui in U)):
                n2k = prod(u)
                if not (x < n2k <= x + H):
                    continue
                for v in _cartesian(*v_ranges):
                    terms = [e * ui * vi + n2k for e, ui, vi in zip(eps, u, v)]
                    if min(terms) <= 0:
                        continue
                    total += tau_of_product(terms)
    return total
