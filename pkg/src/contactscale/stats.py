"""Test primitives: total variation, Poisson diagnostics, KS, interval arithmetic."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats

from .errors import InsufficientDataError, UsageError

OVERFLOW = "overflow"


@dataclass
class TestReport:
    name: str
    statistic: float
    p_value: float
    passed: bool
    level: float
    n: int
    params: dict = field(default_factory=dict)
    note: str = ""

    __test__ = False  # not a pytest class

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("statistic", "p_value"):
            if d[k] is not None and not math.isfinite(d[k]):
                d[k] = None
        return d

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        p = "n/a" if self.p_value is None else f"{self.p_value:.4g}"
        return f"{verdict}  {self.name:<28} stat={self.statistic:.4g} p={p} n={self.n} {self.note}"


def summary_table(reports) -> str:
    return "\n".join(r.line() for r in reports)


# --------------------------------------------------------------- intervals
def wilson_interval(k, n, conf: float = 0.95):
    """Wilson score interval for a binomial proportion (vectorised)."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    z = scipy.stats.norm.ppf(0.5 + conf / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, k / n, 0.0)
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = np.where(n > 0, np.clip(centre - half, 0, 1), 0.0)
    hi = np.where(n > 0, np.clip(centre + half, 0, 1), 1.0)
    return lo, hi


def ratio_se(a, sa, b, sb, cov=0.0):
    """Delta-method standard error of ``a / b``."""
    r = a / b
    return abs(r) * math.sqrt((sa / a) ** 2 + (sb / b) ** 2 - 2 * cov / (a * b))


def z_agree(x, sx, y, sy, k: float = 3.0) -> tuple[float, bool]:
    """Standardised difference of two independent estimates and whether it is within k sigma."""
    s = math.hypot(sx, sy)
    z = (x - y) / s if s > 0 else (0.0 if x == y else math.inf)
    return z, abs(z) <= k


# --------------------------------------------------------------- distances
def _freqs(law) -> dict:
    if isinstance(law, dict):
        return law
    out = dict(law.freqs)
    if getattr(law, "overflow", 0.0):
        out[OVERFLOW] = law.overflow
    return out


def tv_distance(p, q) -> float:
    """Half the l1 distance over the union of supports (overflow buckets included)."""
    wp = getattr(p, "width_cap", None)
    wq = getattr(q, "width_cap", None)
    if wp is not None and wq is not None and wp != wq:
        raise UsageError("laws truncated at different widths")
    fp, fq = _freqs(p), _freqs(q)
    keys = set(fp) | set(fq)
    return 0.5 * math.fsum(abs(fp.get(k, 0.0) - fq.get(k, 0.0)) for k in keys)


# --------------------------------------------------------------- KS
def ks_test(samples, cdf, level: float = 0.01, name: str = "ks") -> TestReport:
    """Two-sided one-sample Kolmogorov-Smirnov test against ``cdf``."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("KS test needs samples")
    if x.size < 50:
        raise InsufficientDataError(f"KS test needs at least 50 samples, got {x.size}")
    res = scipy.stats.kstest(x, cdf)
    p = float(res.pvalue)
    return TestReport(name, float(res.statistic), p, p > level, level, int(x.size))


# --------------------------------------------------------------- Poisson suite
def void_test(counts, mu, level=0.01, mu_se=None) -> TestReport:
    """Pooled void frequency of boxes against ``exp(-mu)``; z-test.

    ``counts`` has shape (replicas, boxes); ``mu`` is the expected count per box.
    """
    counts = np.asarray(counts)
    N, B = counts.shape
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (B,))
    if not (mu > 0).any():
        return TestReport("void_probability", 0.0, 1.0, True, level, N * B,
                          note="skipped: zero intensity")
    p0 = np.exp(-mu)
    obs = (counts == 0).mean()
    exp = p0.mean()
    var = (p0 * (1 - p0)).sum() / (N * B * B)
    if mu_se is not None:
        se = np.broadcast_to(np.asarray(mu_se, dtype=float), (B,))
        var += ((p0 * se).mean()) ** 2
    z = (obs - exp) / math.sqrt(var) if var > 0 else 0.0
    p = 2 * scipy.stats.norm.sf(abs(z))
    return TestReport("void_probability", float(z), float(p), p > level, level, N * B,
                      params={"observed": float(obs), "expected": float(exp)})


def dispersion_test(counts, level=0.01) -> TestReport:
    """Index-of-dispersion chi-square summed over boxes; two-sided."""
    counts = np.asarray(counts, dtype=float)
    N, B = counts.shape
    m = counts.mean(axis=0)
    use = m > 0
    if not use.any():
        return TestReport("dispersion", 0.0, 1.0, True, level, N * B,
                          note="skipped: zero intensity")
    stat = float((((counts[:, use] - m[use]) ** 2).sum(axis=0) / m[use]).sum())
    dof = int(use.sum()) * (N - 1)
    lo = scipy.stats.chi2.cdf(stat, dof)
    p = float(min(1.0, 2 * min(lo, 1 - lo)))
    ratio = stat / dof
    return TestReport("dispersion", stat, p, p > level, level, N * B,
                      params={"dof": dof, "variance_to_mean": ratio})


def independence_test(counts, pairs, level=0.01) -> TestReport:
    """Pooled covariance of counts in disjoint box pairs against 0; z-test.

    Under independence the centred products have mean zero, and products of
    different pairs are uncorrelated even when the pairs share a box.
    """
    counts = np.asarray(counts, dtype=float)
    N = counts.shape[0]
    if not pairs:
        return TestReport("independence", 0.0, 1.0, True, level, N, note="skipped: no pairs")
    c = counts - counts.mean(axis=0)
    num = 0.0
    den = 0.0
    for i, j in pairs:
        prod = c[:, i] * c[:, j]
        num += prod.sum()
        den += (prod**2).sum()
    if den == 0:
        return TestReport("independence", 0.0, 1.0, True, level, N,
                          note="skipped: degenerate counts")
    z = num / math.sqrt(den)
    p = 2 * scipy.stats.norm.sf(abs(z))
    return TestReport("independence", float(z), float(p), p > level, level, N,
                      params={"pairs": len(pairs)})


def adjacent_pairs(shape) -> list[tuple[int, int]]:
    """Flat indices of boxes adjacent along some axis."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    pairs = []
    for ax in range(len(shape)):
        a = np.moveaxis(idx, ax, 0)
        pairs += list(zip(a[:-1].ravel().tolist(), a[1:].ravel().tolist()))
    return pairs


def poisson_suite(counts, expected, level=0.01, pairs=None, mu_se=None,
                  min_replicas=500, correction=True) -> list[TestReport]:
    """Void, dispersion and independence tests on per-box counts.

    ``counts``: (replicas, boxes) or (replicas, *grid_shape).  With
    ``correction`` each test runs at ``level / 3`` (Bonferroni) so the whole
    suite has family-wise level ``level``.
    """
    counts = np.asarray(counts)
    if counts.shape[0] < min_replicas:
        raise InsufficientDataError(
            f"Poisson suite needs at least {min_replicas} replicas, got {counts.shape[0]}")
    shape = counts.shape[1:]
    flat = counts.reshape(counts.shape[0], -1)
    if pairs is None:
        pairs = adjacent_pairs(shape)
    lv = level / 3 if correction else level
    return [void_test(flat, expected, lv, mu_se), dispersion_test(flat, lv),
            independence_test(flat, pairs, lv)]


# --------------------------------------------------------------- resampling
def jackknife(values_fn, groups: int, n_items: int, key=None):
    """Delete-a-group jackknife.

    ``values_fn(mask)`` returns the estimate from items where ``mask`` is
    True.  Items are grouped by ``key % groups`` (default: item index).
    Returns ``(full_estimate, standard_error)``.
    """
    key = np.arange(n_items) if key is None else np.asarray(key)
    g = key % groups
    full = values_fn(np.ones(n_items, dtype=bool))
    reps = np.array([values_fn(g != j) for j in range(groups)], dtype=float)
    reps_mean = reps.mean(axis=0)
    se = np.sqrt((groups - 1) / groups * ((reps - reps_mean) ** 2).sum(axis=0))
    return full, se
