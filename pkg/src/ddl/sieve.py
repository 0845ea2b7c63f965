"""Segmented sieve producing exact sum-of-divisors and smallest-prime-factor
tables, plus a streaming evaluator that folds a multiplicative function over
[1, x] one cache-friendly segment at a time.

sigma(n) is kept as an exact int64 throughout so that threshold tests of the
form n * den <= num * sigma(n) can be decided in integer arithmetic; floating
point enters only when statistics are formed.  The per-segment work for each
base prime p walks the powers p, p^2, ... with strided slice updates, which
gives sigma(n), f(n) and Omega(n) for a whole segment in a handful of numpy
passes (about sum_{p <= sqrt(x)} 1/p ~ 2.5 element-ops per n).

Segments are independent work units; with workers > 1 they are computed by a
thread pool and merged in segment order, so results do not depend on the
worker count.
"""

from __future__ import annotations

import os
import struct
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import isqrt
from pathlib import Path

import numpy as np

from .multfunc import MultFunc

__all__ = [
    "SieveError",
    "ResourceLimitError",
    "DEFAULT_SEGMENT_SIZE",
    "SIEVE_LIMIT",
    "SieveSegment",
    "ScanChunk",
    "primes_up_to",
    "build_segment",
    "factorize",
    "scan_segments",
    "fold_over_range",
    "sigma_table",
    "cache_dir_from_env",
    "write_segment_cache",
    "read_segment_cache",
]

DEFAULT_SEGMENT_SIZE = 1 << 22

# Upper bound on sieved n.  sigma(n) < n (1 + ln n) keeps every threshold
# product num * sigma(n) with num <= 10^6 far below 2^63, and lets cache
# headers store bounds as uint32.
SIEVE_LIMIT = 4_000_000_000

CACHE_MAGIC = b"SGMA"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIII")  # magic, version, lo, hi  (16 bytes)

CACHE_ENV_VAR = "DDL_CACHE_DIR"


class SieveError(ValueError):
    """Invalid sieve request (bounds, coverage, out-of-segment access)."""


class ResourceLimitError(SieveError):
    """Request refused because it would overflow integers or exhaust memory."""


_PRIME_CACHE: dict[int, np.ndarray] = {}


def primes_up_to(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (treat as read-only)."""
    limit = int(limit)
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    cached = _PRIME_CACHE.get(limit)
    if cached is not None:
        return cached
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if mask[p]:
            mask[p * p:: p] = False
    ps = np.nonzero(mask)[0].astype(np.int64)
    # keep only the most recent two requests; big prime lists are ~50 MB
    if len(_PRIME_CACHE) >= 2:
        _PRIME_CACHE.pop(next(iter(_PRIME_CACHE)))
    _PRIME_CACHE[limit] = ps
    return ps


def _check_bounds(lo: int, hi: int):
    if not (1 <= lo <= hi):
        raise SieveError(f"need 1 <= lo <= hi, got [{lo}, {hi}]")
    if hi > SIEVE_LIMIT:
        raise ResourceLimitError(
            f"hi = {hi} exceeds the supported sieve limit {SIEVE_LIMIT} "
            "(sigma and threshold products are guaranteed exact only below it)")


def _segment_tables(lo, hi, primes, fdesc, want_omega, sigma_known=None):
    """Core per-segment pass: sigma, f values and Omega over [lo, hi]."""
    n = np.arange(lo, hi + 1, dtype=np.int64)
    size = n.size
    need_sigma = sigma_known is None
    sigma = np.ones(size, dtype=np.int64) if need_sigma else sigma_known
    fv = None
    if fdesc is not None:
        fv = np.ones(size, dtype=np.complex128 if fdesc.complex_valued else np.float64)
    om = np.zeros(size, dtype=np.int16) if want_omega else None

    if need_sigma or fdesc is not None or want_omega:
        rem = n.copy()
        for p_ in primes:
            p = int(p_)
            if p * p > hi:
                break
            s1 = (-lo) % p
            if s1 >= size:
                continue
            cnt = (size - 1 - s1) // p + 1
            if need_sigma:
                geo = np.full(cnt, 1 + p, dtype=np.int64)
            if fdesc is not None:
                fp = np.full(cnt, fdesc.prime_power(p, 1), dtype=fv.dtype)
            rem[s1::p] //= p
            if want_omega:
                om[s1::p] += 1
            q = p * p
            pw = p * p
            j = 2
            while q <= hi:
                se = (-lo) % q
                if se >= size:
                    break
                k0 = (se - s1) // p
                st = q // p
                if need_sigma:
                    geo[k0::st] += pw
                if fdesc is not None:
                    fp[k0::st] = fdesc.prime_power(p, j)
                rem[se::q] //= p
                if want_omega:
                    om[se::q] += 1
                q *= p
                pw *= p
                j += 1
            if need_sigma:
                sigma[s1::p] *= geo
            if fdesc is not None:
                fv[s1::p] *= fp
        big = rem > 1
        if need_sigma:
            sigma[big] *= rem[big] + 1
        if fdesc is not None:
            bp = rem[big]
            if bp.size:
                fv[big] *= fdesc.at_primes(bp)
        if want_omega:
            om[big] += 1
    return n, sigma, fv, om


@dataclass(frozen=True)
class SieveSegment:
    """Tables for a contiguous range [lo, hi]: exact sigma and smallest prime factor."""
    lo: int
    hi: int
    sigma: np.ndarray  # int64, sigma(n) for n in [lo, hi]
    spf: np.ndarray    # int64, smallest prime factor (spf(1) = 1)

    def sigma_of(self, n: int) -> int:
        if not (self.lo <= n <= self.hi):
            raise SieveError(f"{n} outside segment [{self.lo}, {self.hi}]")
        return int(self.sigma[n - self.lo])


def build_segment(lo: int, hi: int, primes=None, *, with_spf: bool = True) -> SieveSegment:
    """Sieve [lo, hi]: exact sigma table plus (optionally) the spf table.

    primes must cover sqrt(hi); pass None to have them generated.
    """
    lo, hi = int(lo), int(hi)
    _check_bounds(lo, hi)
    root = isqrt(hi)
    if primes is None:
        primes = primes_up_to(root)
    else:
        primes = np.asarray(primes, dtype=np.int64)
        needed = primes_up_to(root)
        if needed.size and (primes.size == 0 or int(primes[-1]) < int(needed[-1])):
            raise SieveError(f"base primes must cover sqrt(hi) = {root}")
    n, sigma, _, _ = _segment_tables(lo, hi, primes, None, False)
    spf = None
    if with_spf:
        size = n.size
        spf = np.zeros(size, dtype=np.int64)
        for p_ in primes[::-1]:
            p = int(p_)
            if p * p > hi:
                continue
            s1 = (-lo) % p
            if s1 < size:
                spf[s1::p] = p
        left = spf == 0
        spf[left] = n[left]  # primes above sqrt(hi), and spf(1) = 1
    return SieveSegment(lo, hi, sigma, spf)


def factorize(n: int, segment: SieveSegment) -> list[tuple[int, int]]:
    """Complete factorization of n by repeated smallest-prime-factor division.

    Every intermediate quotient must lie inside the segment, so this is meant
    for segments starting at 1.
    """
    n = int(n)
    if not (segment.lo <= n <= segment.hi):
        raise SieveError(f"{n} outside segment [{segment.lo}, {segment.hi}]")
    if segment.spf is None:
        raise SieveError("segment was built without an spf table")
    out = []
    while n > 1:
        if not (segment.lo <= n <= segment.hi):
            raise SieveError(f"quotient {n} left the segment; factorize needs lo = 1")
        p = int(segment.spf[n - segment.lo])
        j = 0
        while n % p == 0:
            n //= p
            j += 1
        out.append((p, j))
    return out


@dataclass(frozen=True)
class ScanChunk:
    """One segment's worth of per-n data handed to accumulators."""
    lo: int
    hi: int
    n: np.ndarray        # int64
    sigma: np.ndarray    # int64
    fvals: np.ndarray | None   # f(n) per n, None when f is identically 1
    omega: np.ndarray | None   # Omega(n) per n when requested


def cache_dir_from_env() -> str | None:
    return os.environ.get(CACHE_ENV_VAR) or None


def _cache_path(cache_dir, lo, hi) -> Path:
    return Path(cache_dir) / f"sigma_{lo}_{hi}.sgma"


def write_segment_cache(cache_dir, lo: int, hi: int, sigma: np.ndarray) -> Path:
    """Write a binary sigma cache: 16-byte header {SGMA, version, lo, hi} + int64 payload."""
    path = _cache_path(cache_dir, lo, hi)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, lo, hi))
        fh.write(np.ascontiguousarray(sigma, dtype=np.int64).tobytes())
    return path


def read_segment_cache(cache_dir, lo: int, hi: int) -> np.ndarray | None:
    """Load a cached sigma table; None when absent or invalid (never raises)."""
    path = _cache_path(cache_dir, lo, hi)
    try:
        with open(path, "rb") as fh:
            head = fh.read(_CACHE_HEADER.size)
            if len(head) != _CACHE_HEADER.size:
                return None
            magic, version, clo, chi = _CACHE_HEADER.unpack(head)
            if magic != CACHE_MAGIC or version != CACHE_VERSION or clo != lo or chi != hi:
                return None
            payload = fh.read()
    except OSError:
        return None
    expect = (hi - lo + 1) * 8
    if len(payload) != expect:
        return None
    return np.frombuffer(payload, dtype=np.int64).copy()


def _scan_one(lo, hi, primes, fdesc, want_omega, cache_dir):
    sigma_known = read_segment_cache(cache_dir, lo, hi) if cache_dir else None
    n, sigma, fv, om = _segment_tables(lo, hi, primes, fdesc, want_omega, sigma_known)
    return ScanChunk(lo, hi, n, sigma, fv, om)


def scan_segments(x: int, *, f: MultFunc | None = None, with_omega: bool = False,
                  segment_size: int | None = None, workers: int = 1,
                  cache_dir: str | None = None):
    """Yield ScanChunk objects covering [1, x] in order.

    f = None (or the constant-1 entry) skips the f-evaluation pass.  The
    chunk sequence is identical for any segment_size and worker count.
    """
    x = int(x)
    _check_bounds(1, x)
    size = int(segment_size or DEFAULT_SEGMENT_SIZE)
    if size < 16:
        raise SieveError("segment_size must be >= 16")
    if cache_dir is None:
        cache_dir = cache_dir_from_env()
    fdesc = None if (f is None or f.is_one) else f
    primes = primes_up_to(isqrt(x))
    bounds = [(lo, min(lo + size - 1, x)) for lo in range(1, x + 1, size)]
    if workers <= 1:
        for lo, hi in bounds:
            yield _scan_one(lo, hi, primes, fdesc, with_omega, cache_dir)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        it = iter(bounds)
        for _ in range(workers + 1):
            b = next(it, None)
            if b is None:
                break
            pending.append(pool.submit(_scan_one, b[0], b[1], primes, fdesc, with_omega, cache_dir))
        while pending:
            fut = pending.popleft()
            b = next(it, None)
            if b is not None:
                pending.append(pool.submit(_scan_one, b[0], b[1], primes, fdesc, with_omega, cache_dir))
            yield fut.result()


def fold_over_range(f: MultFunc, x: int, visitor, *, combine=None,
                    segment_size: int | None = None, workers: int = 1,
                    cache_dir: str | None = None):
    """Visit every n <= x once with (n, sigma(n), f(n)) arrays and merge results.

    visitor(n, sigma, fvals) -> partial result per segment; partials are merged
    in segment order with combine (default: +).  combine must be associative.
    """
    parts = []
    for chunk in scan_segments(x, f=f, segment_size=segment_size, workers=workers,
                               cache_dir=cache_dir):
        fv = chunk.fvals
        if fv is None:
            fv = np.broadcast_to(np.float64(1.0), chunk.n.shape)
        parts.append(visitor(chunk.n, chunk.sigma, fv))
    if combine is None:
        combine = lambda a, b: a + b
    acc = parts[0]
    for part in parts[1:]:
        acc = combine(acc, part)
    return acc


def sigma_table(x: int, *, segment_size: int | None = None, workers: int = 1,
                cache_dir: str | None = None, memory_limit_bytes: int = 2_000_000_000) -> np.ndarray:
    """Exact sigma(n) for 0 <= n <= x as one int64 array (sigma[0] = 0)."""
    x = int(x)
    _check_bounds(1, x)
    need = (x + 1) * 8
    if need > memory_limit_bytes:
        raise ResourceLimitError(
            f"sigma table for x = {x} needs {need / 1e9:.1f} GB, over the {memory_limit_bytes / 1e9:.1f} GB budget")
    out = np.zeros(x + 1, dtype=np.int64)
    for chunk in scan_segments(x, segment_size=segment_size, workers=workers, cache_dir=cache_dir):
        out[chunk.lo: chunk.hi + 1] = chunk.sigma
    return out
