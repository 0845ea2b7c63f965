"""Empirical weighted distribution functions of the divisor ratio n/sigma(n).

The central estimator accumulates, for each rational threshold u = num/den in
a grid, the sum of f(n) over n <= x with n * den <= num * sigma(n).  The
qualification test is done in exact integer arithmetic: a float binary search
proposes the first qualifying grid index for each n and integer comparisons
then correct it, so no floating-point rounding can ever change a raw count.
Two normalizations are provided: by x (plain density) and by S(f;x) =
sum_{n<=x} f(n) (self-normalized, so the value at u = 1 is exactly 1).

Also here: the lattice-point version for sums of two squares, tent-smoothed
estimates, equidistribution tallies of Omega(n) mod q and of coprime residue
classes, a partial-summation identity check, and the empirical characteristic
function of log(n/sigma(n)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .multfunc import MultFunc
from .sieve import (ResourceLimitError, SieveError, scan_segments, sigma_table)

__all__ = [
    "GridError",
    "ThresholdGrid",
    "WeightedCdfEstimate",
    "EquidistTally",
    "estimate_weighted_cdf",
    "estimate_normalized_cdf",
    "lattice_circle_cdf",
    "smoothed_indicator_mean",
    "equidist_tally",
    "partial_summation_check",
    "empirical_char_function",
]

MAX_DENOMINATOR = 1_000_000
LATTICE_LIMIT = 100_000_000  # sigma table of this size is ~0.8 GB


class GridError(ValueError):
    """Malformed threshold grid or grid spec."""


class ThresholdGrid:
    """Strictly increasing reduced rational thresholds u = num/den in [0, 1]."""

    __slots__ = ("fractions", "nums", "dens", "floats")

    def __init__(self, thresholds):
        fracs = [Fraction(t) for t in thresholds]
        if not fracs:
            raise GridError("grid must contain at least one threshold")
        for t in fracs:
            if not (0 <= t <= 1):
                raise GridError(f"threshold {t} outside [0, 1]")
            if t.denominator > MAX_DENOMINATOR:
                raise GridError(f"threshold denominator {t.denominator} over the {MAX_DENOMINATOR} cap")
        for a, b in zip(fracs, fracs[1:]):
            if not a < b:
                raise GridError("thresholds must be strictly increasing")
        self.fractions = tuple(fracs)
        self.nums = np.array([t.numerator for t in fracs], dtype=np.int64)
        self.dens = np.array([t.denominator for t in fracs], dtype=np.int64)
        self.floats = self.nums / self.dens

    @classmethod
    def default(cls, steps: int = 200) -> "ThresholdGrid":
        """u = k/steps for k = 0..steps (includes 1/2 and 1 for even steps)."""
        return cls(Fraction(k, steps) for k in range(steps + 1))

    @classmethod
    def parse(cls, spec: str) -> "ThresholdGrid":
        """Grid specs: 'default', 'half', 'steps:N', or a comma list of fractions."""
        spec = spec.strip()
        if spec == "default":
            return cls.default()
        if spec == "half":
            return cls([Fraction(1, 2), Fraction(1)])
        if spec.startswith("steps:"):
            try:
                n = int(spec.split(":", 1)[1])
            except ValueError:
                raise GridError(f"bad steps spec {spec!r}") from None
            if n < 1:
                raise GridError("steps must be >= 1")
            return cls.default(n)
        try:
            return cls(Fraction(part.strip()) for part in spec.split(","))
        except (ValueError, ZeroDivisionError):
            raise GridError(f"cannot parse grid spec {spec!r}") from None

    def __len__(self):
        return len(self.fractions)

    def __iter__(self):
        return iter(self.fractions)

    def index(self, u) -> int:
        u = Fraction(u)
        try:
            return self.fractions.index(u)
        except ValueError:
            raise GridError(f"threshold {u} not in grid") from None

    def log_points(self):
        """(indices, log u) for the strictly positive thresholds."""
        pos = np.nonzero(self.nums > 0)[0]
        return pos, np.log(self.floats[pos])


def _check_threshold_products(x: int, grid: ThresholdGrid):
    """Refuse runs whose exact qualification products could overflow int64."""
    sig_max = x * (math.log(max(x, 3)) + 2.0)  # sigma(n) < n (1 + ln n)
    if int(grid.dens.max()) * x >= 2 ** 62 or int(grid.nums.max()) * sig_max >= 2 ** 62:
        raise ResourceLimitError(
            f"threshold products for x = {x} would overflow 64-bit integers")


def _first_qualifying(n: np.ndarray, sigma: np.ndarray, grid: ThresholdGrid) -> np.ndarray:
    """Per element, the smallest grid index j with n * den_j <= num_j * sigma(n).

    Returns len(grid) where no threshold qualifies.  Float search proposes,
    exact int64 comparisons correct; the result is independent of floating
    point behaviour.
    """
    nums, dens = grid.nums, grid.dens
    m = len(nums)
    rho = n / sigma
    idx = np.searchsorted(grid.floats, rho, side="left").astype(np.int64)
    while True:  # move down while the previous threshold already qualifies
        can = idx > 0
        j = np.where(can, idx - 1, 0)
        ok = can & (dens[j] * n <= nums[j] * sigma)
        if not ok.any():
            break
        idx[ok] -= 1
    while True:  # move up while the current threshold does not qualify
        can = idx < m
        j = np.where(can, idx, m - 1)
        bad = can & (dens[j] * n > nums[j] * sigma)
        if not bad.any():
            break
        idx[bad] += 1
    return idx


def _histogram(f, x, grid, *, segment_size=None, workers=1, cache_dir=None):
    """First-qualifying-index histogram over [1, x]; last bin = never qualifies."""
    m = len(grid)
    counts_only = f is None or f.is_one
    hist = np.zeros(m + 1, dtype=np.int64 if counts_only else np.complex128)
    for chunk in scan_segments(x, f=None if counts_only else f,
                               segment_size=segment_size, workers=workers,
                               cache_dir=cache_dir):
        idx = _first_qualifying(chunk.n, chunk.sigma, grid)
        if counts_only:
            hist += np.bincount(idx, minlength=m + 1)
        else:
            fv = chunk.fvals
            part = np.bincount(idx, weights=fv.real, minlength=m + 1).astype(np.complex128)
            if np.iscomplexobj(fv):
                part += 1j * np.bincount(idx, weights=fv.imag, minlength=m + 1)
            hist += part
    return hist


@dataclass(frozen=True)
class WeightedCdfEstimate:
    """Accumulated threshold sums plus their normalization.

    raw[j] is the exact accumulated sum of f(n) over qualifying n for the
    j-th threshold; values = raw / normalizer.  In "dtilde" mode the
    normalizer is S(f;x) from the same pass, so the value at u = 1 is
    exactly 1.
    """
    f_id: str
    x: int
    grid: ThresholdGrid
    raw: np.ndarray
    normalizer: float
    mode: str  # "df" | "dtilde" | "lattice"

    @property
    def values(self) -> np.ndarray:
        return self.raw / self.normalizer

    def raw_at(self, u):
        return self.raw[self.grid.index(u)]

    def value_at(self, u):
        return self.raw_at(u) / self.normalizer

    def raw_counts(self) -> np.ndarray:
        """Raw sums as exact int64 counts (valid for integer-valued weights)."""
        re = self.raw.real if np.iscomplexobj(self.raw) else self.raw
        return np.rint(np.asarray(re, dtype=np.float64)).astype(np.int64)

    def log_cdf(self):
        """(log u, value) pairs over the strictly positive thresholds."""
        pos, logs = self.grid.log_points()
        vals = self.values
        return logs, np.asarray(vals[pos].real, dtype=np.float64)


def _finalize(hist, m):
    ext = np.cumsum(hist)
    raw = ext[:m].astype(np.complex128)
    total = ext[-1]
    return raw, total


def estimate_weighted_cdf(f: MultFunc, x: int, grid: ThresholdGrid | None = None, *,
                          segment_size=None, workers=1, cache_dir=None) -> WeightedCdfEstimate:
    """One-pass estimate of (1/x) sum_{n<=x, n/sigma(n)<=u} f(n) over the grid."""
    x = int(x)
    if grid is None:
        grid = ThresholdGrid.default()
    _check_threshold_products(x, grid)
    hist = _histogram(f, x, grid, segment_size=segment_size, workers=workers,
                      cache_dir=cache_dir)
    raw, _ = _finalize(hist, len(grid))
    return WeightedCdfEstimate(f.spec_string(), x, grid, raw, float(x), "df")


def estimate_normalized_cdf(f: MultFunc, x: int, grid: ThresholdGrid | None = None, *,
                            segment_size=None, workers=1, cache_dir=None) -> WeightedCdfEstimate:
    """Self-normalized estimate: same sums divided by S(f;x) from the same pass."""
    if not f.nonneg:
        raise ValueError(f"self-normalized mode needs a nonnegative function, not {f.id}")
    x = int(x)
    if grid is None:
        grid = ThresholdGrid.default()
    _check_threshold_products(x, grid)
    hist = _histogram(f, x, grid, segment_size=segment_size, workers=workers,
                      cache_dir=cache_dir)
    raw, total = _finalize(hist, len(grid))
    normalizer = float(total.real if np.iscomplexobj(total) else total)
    if normalizer == 0.0:
        raise ValueError(f"S(f;x) = 0 for f = {f.id}, x = {x}")
    return WeightedCdfEstimate(f.spec_string(), x, grid, raw, normalizer, "dtilde")


def lattice_circle_cdf(R: int, grid: ThresholdGrid | None = None, *,
                       segment_size=None, workers=1, cache_dir=None) -> WeightedCdfEstimate:
    """Lattice-point analogue: count (x, y) with 0 < x^2 + y^2 <= R and
    (x^2+y^2)/sigma(x^2+y^2) <= u, normalized by pi R.

    Counting order is over lattice points, so raw counts are exact integers;
    they equal 4 * sum_{n<=R, qualifying} r(n) by the quarter-count identity.
    """
    R = int(R)
    if R < 1:
        raise SieveError("R must be >= 1")
    if R > LATTICE_LIMIT:
        raise ResourceLimitError(f"lattice mode needs a dense sigma table; R capped at {LATTICE_LIMIT}")
    if grid is None:
        grid = ThresholdGrid.default()
    _check_threshold_products(R, grid)
    sig = sigma_table(R, segment_size=segment_size, workers=workers, cache_dir=cache_dir)
    m = len(grid)
    hist = np.zeros(m + 1, dtype=np.int64)
    root = isqrt(R)
    for a in range(1, root + 1):
        a2 = a * a
        # axis points (±a, 0), (0, ±a): n = a^2, multiplicity 4 handled below
        idx = _first_qualifying(np.array([a2], dtype=np.int64),
                                sig[a2: a2 + 1], grid)
        hist[idx[0]] += 1
        rest = R - a2
        if rest >= 1:
            ys = np.arange(1, isqrt(rest) + 1, dtype=np.int64)
            ns = a2 + ys * ys
            idx = _first_qualifying(ns, sig[ns], grid)
            hist += np.bincount(idx, minlength=m + 1)
    raw, _ = _finalize(4 * hist, m)
    return WeightedCdfEstimate("lattice_two_squares", R, grid, raw, math.pi * R, "lattice")


def smoothed_indicator_mean(f: MultFunc, x: int, u, m: int, *,
                            segment_size=None, workers=1, cache_dir=None):
    """(1/x) sum f(n) w(n/sigma(n)) for the tent weight w: 1 on [0, u],
    linearly down to 0 on [u, u + 1/m].  Requires u + 1/m < 1."""
    u = Fraction(u)
    m = int(m)
    if m < 1:
        raise ValueError("smoothing parameter m must be >= 1")
    if not (0 <= u and u + Fraction(1, m) < 1):
        raise ValueError("need 0 <= u and u + 1/m < 1")
    x = int(x)
    uf = float(u)
    total = 0.0 + 0.0j
    for chunk in scan_segments(x, f=f, segment_size=segment_size, workers=workers,
                               cache_dir=cache_dir):
        rho = chunk.n / chunk.sigma
        w = np.clip(1.0 - m * (rho - uf), 0.0, 1.0)
        fv = chunk.fvals
        total += (w.sum() if fv is None else np.sum(fv * w))
    return complex(total) / x


@dataclass(frozen=True)
class EquidistTally:
    """Per-class qualifying counts: Omega(n) mod q, or coprime residues mod q."""
    mode: str
    q: int
    u: Fraction
    x: int
    labels: tuple[int, ...]
    counts: np.ndarray  # int64 per label
    qualifying_total: int

    @property
    def densities(self) -> np.ndarray:
        return self.counts / self.x


def equidist_tally(mode: str, q: int, u, x: int, *,
                   segment_size=None, workers=1, cache_dir=None) -> EquidistTally:
    """Tally qualifying n <= x by Omega(n) mod q, or by residue class among
    the n coprime to q.  Counts are exact integers; in omega mode they
    partition the whole qualifying set."""
    if mode not in ("omega", "coprime"):
        raise ValueError("mode must be 'omega' or 'coprime'")
    q = int(q)
    if q < 1:
        raise ValueError("q must be >= 1")
    u = Fraction(u)
    if not (0 <= u <= 1):
        raise ValueError("u must lie in [0, 1]")
    x = int(x)
    num, den = u.numerator, u.denominator
    _check_threshold_products(x, ThresholdGrid([u]))
    counts = np.zeros(q, dtype=np.int64)
    qual_total = 0
    want_omega = mode == "omega"
    coprime_mask = None
    if mode == "coprime":
        coprime_mask = np.array([math.gcd(c, q) == 1 for c in range(q)])
    for chunk in scan_segments(x, with_omega=want_omega, segment_size=segment_size,
                               workers=workers, cache_dir=cache_dir):
        qual = den * chunk.n <= num * chunk.sigma
        qual_total += int(np.count_nonzero(qual))
        if want_omega:
            cls = (chunk.omega[qual].astype(np.int64)) % q
        else:
            res = chunk.n[qual] % q
            res = res[coprime_mask[res]]
            cls = res
        counts += np.bincount(cls, minlength=q)
    if mode == "omega":
        labels = tuple(range(q))
    else:
        labels = tuple(c for c in range(q) if math.gcd(c, q) == 1)
        counts = counts[list(labels)]
    return EquidistTally(mode, q, u, x, labels, counts, qual_total)


def partial_summation_check(f: MultFunc, x: int, u, *,
                            segment_size=None, workers=1, cache_dir=None):
    """Return (lhs, rhs) with lhs = (2/x^2) sum_{qualifying} n f(n) and
    rhs = (1/x) sum_{qualifying} f(n), from the same pass.  In the limit
    lhs -> rhs, which is the partial-summation identity for the n-weighted
    sums (both sides tend to the same distribution value)."""
    u = Fraction(u)
    x = int(x)
    num, den = u.numerator, u.denominator
    _check_threshold_products(x, ThresholdGrid([u]))
    lhs = 0.0 + 0.0j
    rhs = 0.0 + 0.0j
    for chunk in scan_segments(x, f=f, segment_size=segment_size, workers=workers,
                               cache_dir=cache_dir):
        qual = den * chunk.n <= num * chunk.sigma
        nq = chunk.n[qual].astype(np.float64)
        if chunk.fvals is None:
            lhs += nq.sum()
            rhs += np.count_nonzero(qual)
        else:
            fq = chunk.fvals[qual]
            lhs += np.sum(nq * fq)
            rhs += fq.sum()
    return complex(lhs) * 2.0 / (x * float(x)), complex(rhs) / x


def empirical_char_function(f: MultFunc, x: int, ts, *,
                            segment_size=None, workers=1, cache_dir=None) -> np.ndarray:
    """Empirical characteristic function of log(n/sigma(n)) under weight f:
    phi_x(t) = (1/S(f;x)) sum_{n<=x} f(n) (n/sigma(n))^{i t}."""
    ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
    x = int(x)
    acc = np.zeros(ts.shape, dtype=np.complex128)
    S = 0.0 + 0.0j
    for chunk in scan_segments(x, f=f, segment_size=segment_size, workers=workers,
                               cache_dir=cache_dir):
        L = np.log(chunk.n / chunk.sigma)
        fv = chunk.fvals
        for k, t in enumerate(ts):
            phase = np.exp(1j * t * L)
            acc[k] += phase.sum() if fv is None else np.sum(fv * phase)
        S += chunk.n.size if fv is None else fv.sum()
    if S == 0:
        raise ValueError(f"S(f;x) = 0 for f = {f.id}")
    return acc / S
