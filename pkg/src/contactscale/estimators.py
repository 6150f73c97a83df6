"""Monte Carlo estimators: survival, decay rate, h, Yaglom law, box law, rho.

Replicas are simulated in fixed chunks of consecutive replica indices, so
results depend only on (seed, params, replica range) and not on the thread
count: every reduction below is over arrays indexed by replica.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientDataError, ParameterError
from .lattice import Ring, Topology, sup_norm
from .params import SimParams
from .process import canonical_from_indices
from .stats import jackknife, ratio_se, wilson_interval

CHUNK = 2000
JACKKNIFE_GROUPS = 20
MIN_SURVIVORS = 100


# ------------------------------------------------------------ replica runner
@dataclass
class ReplicaBatch:
    """Outcome of ``n`` replicas: extinction times and snapshots on a time grid."""

    topology: Topology
    grid: np.ndarray
    replica_start: int
    ext_time: np.ndarray
    offsets: np.ndarray  # (n*G + 1,)
    sites: np.ndarray
    contaminated: np.ndarray  # (n, G)
    n_events: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ext_time)

    @property
    def replica_ids(self) -> np.ndarray:
        return self.replica_start + np.arange(self.n)

    def snapshot(self, r: int, g: int) -> np.ndarray:
        k = r * len(self.grid) + g
        return self.sites[self.offsets[k]:self.offsets[k + 1]]

    def sizes(self, g: int) -> np.ndarray:
        G = len(self.grid)
        return np.diff(self.offsets)[g::G]


def _slot(grid, t) -> int:
    g = np.flatnonzero(np.isclose(grid, t, rtol=0, atol=1e-12))
    if not len(g):
        raise ParameterError(f"time {t} is not on the snapshot grid")
    return int(g[0])


def simulate_replicas(params: SimParams, init, n: int, grid=(), *, obs_sites=None,
                      full=False, replica_start=0, threads=1, backend=None,
                      chunk=CHUNK) -> ReplicaBatch:
    """Run replicas ``replica_start .. replica_start + n - 1``.

    ``init`` is a list of sites (ignored when ``full``).  With ``full`` the
    whole window starts occupied and contamination means that a site whose
    state may depend on the outside of the window lies in ``obs_sites`` at the
    grid time; otherwise it means the infection ever touched the boundary.
    """
    topo = params.topology()
    grid = np.asarray(grid, dtype=np.float64)
    if n < 0:
        raise ParameterError("replica count must be non-negative")
    if full:
        init_idx = np.arange(topo.n_sites, dtype=np.int64)
    else:
        init_idx = topo.indices(init)
    obs = np.zeros(topo.n_sites, dtype=np.uint8)
    if obs_sites is None:
        obs[:] = 1
    else:
        obs[topo.indices(obs_sites)] = 1
    impl = kernels.get(backend)
    nbr = topo.neighbors
    keys = topo.lane_keys
    starts = list(range(0, n, chunk))

    def run(a):
        cnt = min(chunk, n - a)
        return impl.simulate_batch(params.seed, replica_start + a, cnt, nbr, keys, params.lam,
                                   init_idx, params.horizon, grid, topo.boundary, obs, bool(full))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(a) for a in starts]
    G = len(grid)
    if not parts:
        return ReplicaBatch(topo, grid, replica_start, np.zeros(0), np.zeros(1, np.int64),
                            np.zeros(0, np.int64), np.zeros((0, G), np.uint8),
                            np.zeros(0, np.int64))
    ext = np.concatenate([p[0] for p in parts])
    offs = [np.zeros(1, np.int64)]
    base = 0
    for p in parts:
        offs.append(p[1][1:] + base)
        base += p[1][-1]
    return ReplicaBatch(topo, grid, replica_start, ext, np.concatenate(offs),
                        np.concatenate([p[2] for p in parts]),
                        np.concatenate([p[3] for p in parts]).reshape(len(ext), G),
                        np.concatenate([p[4] for p in parts]))


# ------------------------------------------------------------ survival / alpha
@dataclass
class SurvivalCurve:
    times: np.ndarray
    survivors: np.ndarray
    n: int
    initial: str = "{o}"
    ci_level: float = 0.95

    @property
    def p_hat(self) -> np.ndarray:
        return self.survivors / self.n if self.n else np.zeros(len(self.times))

    @property
    def ci(self):
        return wilson_interval(self.survivors, self.n, self.ci_level)

    def rows(self):
        lo, hi = self.ci
        for t, p, a, b, k in zip(self.times, self.p_hat, lo, hi, self.survivors):
            yield float(t), float(p), float(a), float(b), int(k)

    def to_json(self) -> dict:
        return {"initial": self.initial, "n": self.n,
                "rows": [list(r) for r in self.rows()]}


def survival_counts(ext_time: np.ndarray, times) -> np.ndarray:
    """Number of replicas alive at each time (extinct strictly after t)."""
    e = np.sort(ext_time)
    return len(e) - np.searchsorted(e, np.asarray(times, dtype=float), side="right")


@dataclass
class AlphaFit:
    alpha: float
    intercept: float
    r2: float
    window: tuple  # (first, last) index into the time grid
    se: float = float("nan")

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "se": self.se, "intercept": self.intercept,
                "r2": self.r2, "window": list(self.window)}


def tail_window(p, survivors, tail_start=0.5, min_survivors=MIN_SURVIVORS):
    """Indices from the first time with p < tail_start while at least ``min_survivors`` remain."""
    p = np.asarray(p)
    survivors = np.asarray(survivors)
    below = np.flatnonzero(p < tail_start)
    if not len(below):
        raise InsufficientDataError("survival never drops below the tail threshold")
    first = int(below[0])
    ok = np.flatnonzero(survivors[first:] >= min_survivors)
    if not len(ok):
        raise InsufficientDataError("no tail point keeps enough survivors")
    # contiguous run from first
    last = first
    while last + 1 < len(p) and survivors[last + 1] >= min_survivors:
        last += 1
    if last - first + 1 < 3:
        raise InsufficientDataError(
            f"only {last - first + 1} tail points with >= {min_survivors} survivors; need 3")
    return first, last


def fit_log_survival(times, p, n, window) -> AlphaFit:
    """Weighted least squares of log p against t; weights are inverse binomial delta variances."""
    a, b = window
    t = np.asarray(times, dtype=float)[a:b + 1]
    pp = np.asarray(p, dtype=float)[a:b + 1]
    y = np.log(pp)
    w = n * pp / np.maximum(1 - pp, 1e-300)
    X = np.vstack([t, np.ones_like(t)]).T
    XtW = X.T * w
    beta = np.linalg.solve(XtW @ X, XtW @ y)
    resid = y - X @ beta
    ybar = np.average(y, weights=w)
    ss_tot = float((w * (y - ybar) ** 2).sum())
    r2 = 1 - float((w * resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return AlphaFit(-float(beta[0]), float(beta[1]), r2, (a, b))


def fit_alpha(times, p, n, tail_start=0.5, survivors=None) -> AlphaFit:
    """Decay rate from a survival curve (``p`` may be exact, ``n`` a nominal size)."""
    p = np.asarray(p, dtype=float)
    survivors = p * n if survivors is None else survivors
    return fit_log_survival(times, p, n, tail_window(p, survivors, tail_start))


def alpha_from_ext(ext_time, times, tail_start=0.5, key=None, window=None):
    """Fit on the full sample; jackknife standard error with the window held fixed.

    ``window`` (index pair into ``times``) overrides the tail-window rule.
    """
    n = len(ext_time)
    if n == 0:
        raise InsufficientDataError("no replicas")
    times = np.asarray(times, dtype=float)
    k = survival_counts(ext_time, times)
    if window is None:
        fit = fit_alpha(times, k / n, n, tail_start, survivors=k)
    else:
        if k[window[1]] == 0:
            raise InsufficientDataError("no survivors at the end of the fit window")
        fit = fit_log_survival(times, k / n, n, tuple(window))

    def est(mask):
        m = int(mask.sum())
        kk = survival_counts(ext_time[mask], times)
        return fit_log_survival(times, kk / m, m, fit.window).alpha

    _, se = jackknife(est, JACKKNIFE_GROUPS, n, key)
    fit.se = float(se)
    return fit, SurvivalCurve(times, k, n)


def estimate_alpha(params: SimParams, time_grid, replicas: int, A=None, tail_start=0.5,
                   threads=1, replica_start=0, backend=None):
    """``(AlphaFit, SurvivalCurve, batch)`` for the process started from ``A`` (default {o})."""
    A = A if A is not None else [(0,) * params.d]
    if replicas <= 0:
        raise InsufficientDataError("no replicas requested")
    batch = simulate_replicas(params, A, replicas, (), replica_start=replica_start,
                              threads=threads, backend=backend)
    fit, curve = alpha_from_ext(batch.ext_time, time_grid, tail_start, key=batch.replica_ids)
    curve.initial = describe_set(A)
    return fit, curve, batch


def describe_set(A) -> str:
    return "{" + ",".join(str(tuple(a)) if not isinstance(a, int) else str(a) for a in A) + "}"


# ------------------------------------------------------------ h
@dataclass
class HEstimate:
    h: float
    se: float
    window: tuple

    def to_json(self):
        return {"h": self.h, "se": self.se, "window": list(self.window)}


def h_from_ext(ext_time, times, alpha, alpha_se=0.0, window=None, key=None) -> HEstimate:
    """Tail average of ``exp(alpha t) P(survive t)``; alpha treated as independent input."""
    n = len(ext_time)
    if n == 0:
        raise InsufficientDataError("no replicas")
    times = np.asarray(times, dtype=float)
    k = survival_counts(ext_time, times)
    if window is None:
        window = tail_window(k / n, k)
    a, b = window
    tt = times[a:b + 1]
    w = np.exp(alpha * tt)

    def est(mask):
        return float((w * survival_counts(ext_time[mask], tt) / mask.sum()).mean())

    h, se_mc = jackknife(est, JACKKNIFE_GROUPS, n, key)
    dh = float((tt * w * k[a:b + 1] / n).mean())
    return HEstimate(float(h), float(math.hypot(se_mc, dh * alpha_se)), window)


def alpha_and_h(ext_time, times, tail_start=0.5, key=None, window=None):
    """Joint estimate of alpha and h on the same replicas; joint jackknife errors."""
    fit, curve = alpha_from_ext(ext_time, times, tail_start, key, window)
    times = np.asarray(times, dtype=float)
    a, b = fit.window
    tt = times[a:b + 1]

    def est(mask):
        m = int(mask.sum())
        kk = survival_counts(ext_time[mask], times)
        al = fit_log_survival(times, kk / m, m, fit.window).alpha
        return np.array([al, float((np.exp(al * tt) * kk[a:b + 1] / m).mean())])

    full, se = jackknife(est, JACKKNIFE_GROUPS, len(ext_time), key)
    fit.se = float(se[0])
    return fit, HEstimate(float(full[1]), float(se[1]), fit.window), curve


def estimate_h(params: SimParams, A, alpha_hat, alpha_se, time_grid, replicas, threads=1,
               replica_start=0, window=None, tail_start=0.5, backend=None) -> HEstimate:
    if replicas <= 0:
        raise InsufficientDataError("no replicas requested")
    batch = simulate_replicas(params, A, replicas, (), replica_start=replica_start,
                              threads=threads, backend=backend)
    times = np.asarray(time_grid, dtype=float)
    if window is None:
        k = survival_counts(batch.ext_time, times)
        window = tail_window(k / replicas, k, tail_start)
    return h_from_ext(batch.ext_time, times, alpha_hat, alpha_se, window, key=batch.replica_ids)


# ------------------------------------------------------------ empirical laws
@dataclass
class EmpiricalLaw:
    """Frequencies of canonical configurations; wider ones pooled into ``overflow``."""

    counts: dict
    n: int
    width_cap: int = 20
    overflow_count: int = 0
    size_sum: float = 0.0
    size_sq_sum: float = 0.0
    conditioning: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def freqs(self) -> dict:
        return {k: v / self.n for k, v in self.counts.items()} if self.n else {}

    @property
    def overflow(self) -> float:
        return self.overflow_count / self.n if self.n else 0.0

    def mean_size(self) -> float:
        """Sum of |zeta| against the law (overflow samples counted at their true size)."""
        return self.size_sum / self.n

    def mean_size_se(self) -> float:
        if self.n < 2:
            return float("inf")
        m = self.mean_size()
        var = (self.size_sq_sum - self.n * m * m) / (self.n - 1)
        return math.sqrt(max(var, 0.0) / self.n)

    def top(self, k=10):
        return sorted(self.freqs.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def to_json(self) -> dict:
        return {"n": self.n, "width_cap": self.width_cap, "overflow": self.overflow,
                "conditioning": self.conditioning,
                "mean_size": self.mean_size() if self.n else None,
                "mean_size_se": self.mean_size_se() if self.n > 1 else None,
                "support": [[c.to_json(), f] for c, f in
                            sorted(self.freqs.items(), key=lambda kv: (-kv[1], kv[0]))],
                "diagnostics": self.diagnostics}

    @classmethod
    def from_configs(cls, configs, width_cap=20, conditioning="", sizes=None) -> "EmpiricalLaw":
        counts = {}
        over = 0
        s1 = s2 = 0.0
        n = 0
        for i, c in enumerate(configs):
            n += 1
            sz = len(c) if sizes is None else sizes[i]
            s1 += sz
            s2 += sz * sz
            if c.width > width_cap:
                over += 1
            else:
                counts[c] = counts.get(c, 0) + 1
        return cls(counts, n, width_cap, over, s1, s2, conditioning)


def law_from_batch(batch: ReplicaBatch, g: int, width_cap=20, restrict=None,
                   exclude_contaminated=True, conditioning="") -> EmpiricalLaw:
    """Law of the (optionally restricted) snapshot at grid slot ``g`` given non-empty."""
    topo = batch.topology
    configs = []
    contaminated = 0
    empty = 0
    for r in range(batch.n):
        snap = batch.snapshot(r, g)
        if restrict is not None:
            snap = snap[restrict[snap]]
        if exclude_contaminated and batch.contaminated[r, g]:
            contaminated += 1
            continue
        if len(snap) == 0:
            empty += 1
            continue
        configs.append(canonical_from_indices(topo, snap))
    law = EmpiricalLaw.from_configs(configs, width_cap, conditioning)
    law.diagnostics = {"replicas": batch.n, "contaminated": contaminated,
                       "contaminated_fraction": contaminated / batch.n if batch.n else 0.0,
                       "empty": empty}
    return law


def yaglom_law(params: SimParams, A, t, replicas, width_cap=20, threads=1, replica_start=0,
               backend=None) -> EmpiricalLaw:
    """Law of the canonical form of the process from ``A`` at time ``t`` given survival."""
    p = params.replace(horizon=float(t)) if params.horizon != t else params
    batch = simulate_replicas(p, A, replicas, [float(t)], replica_start=replica_start,
                              threads=threads, backend=backend)
    law = law_from_batch(batch, 0, width_cap, conditioning=f"survival to t={t}")
    if law.n == 0:
        raise InsufficientDataError(f"no surviving replica at t={t}")
    return law


def ball_mask(topo: Topology, R: int) -> np.ndarray:
    if isinstance(topo, Ring):
        return np.ones(topo.n_sites, dtype=bool)
    return np.array([sup_norm(topo.coords(i)) <= R for i in range(topo.n_sites)])


@dataclass
class BoxLawResult:
    law: EmpiricalLaw
    hits: int  # replicas with a non-empty intersection
    used: int  # uncontaminated replicas
    R: int
    t: float

    @property
    def p_hit(self) -> float:
        return self.hits / self.used if self.used else float("nan")

    @property
    def p_hit_se(self) -> float:
        p = self.p_hit
        return math.sqrt(p * (1 - p) / self.used) if self.used else float("inf")

    def to_json(self):
        return {"R": self.R, "t": self.t, "hits": self.hits, "used": self.used,
                "p_hit": self.p_hit, "law": self.law.to_json()}


def conditioned_box_law(params: SimParams, t, R, replicas, width_cap=20, threads=1,
                        replica_start=0, backend=None, batch=None, g=None) -> BoxLawResult:
    """Full-window start; law of the canonical form of the state inside ``B_R`` given non-empty."""
    topo = params.topology()
    if not isinstance(topo, Ring) and R > params.W:
        raise ParameterError("R must not exceed the window radius")
    mask = ball_mask(topo, R)
    if batch is None:
        p = params.replace(horizon=float(t)) if params.horizon < t else params
        obs = [topo.coords(i) for i in np.flatnonzero(mask)]
        batch = simulate_replicas(p, None, replicas, [float(t)], obs_sites=obs, full=True,
                                  replica_start=replica_start, threads=threads, backend=backend)
        g = 0
    law = law_from_batch(batch, g, width_cap, restrict=mask,
                         conditioning=f"non-empty inside B_{R} at t={t}")
    used = batch.n - law.diagnostics["contaminated"]
    if law.n == 0:
        raise InsufficientDataError("no replica has infected sites inside the box")
    return BoxLawResult(law, law.n, used, int(R), float(t))


# ------------------------------------------------------------ rho
@dataclass
class RhoEstimate:
    rho: float
    se: float
    rho_direct: float
    se_direct: float

    def to_json(self):
        return {"rho": self.rho, "se": self.se, "rho_direct": self.rho_direct,
                "se_direct": self.se_direct}


def estimate_rho(h0, h0_se, mean_size, mean_size_se, p_hit=None, p_hit_se=None,
                 alpha=None, alpha_se=0.0, t=None, ball_size=None) -> RhoEstimate:
    """``h({o}) / E|zeta|`` and, when box data are given, ``P(hit) / (exp(-alpha t) |B_R|)``."""
    if mean_size <= 0:
        raise ParameterError("mean size must be positive")
    rho = h0 / mean_size
    se = ratio_se(h0, h0_se, mean_size, mean_size_se) if h0 > 0 else float("inf")
    rd = sd = float("nan")
    if p_hit is not None:
        rd = p_hit * math.exp(alpha * t) / ball_size
        rel = math.hypot(p_hit_se / p_hit if p_hit > 0 else float("inf"), t * alpha_se)
        sd = abs(rd) * rel
    return RhoEstimate(float(rho), float(se), float(rd), float(sd))


@dataclass
class EstimatorOutputs:
    alpha: float
    alpha_se: float
    h0: float
    h0_se: float
    mean_size: float
    mean_size_se: float
    rho: float
    rho_se: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {k: getattr(self, k) for k in
                ("alpha", "alpha_se", "h0", "h0_se", "mean_size", "mean_size_se", "rho",
                 "rho_se", "diagnostics")}


# ------------------------------------------------------------ good points
def bad_point_fraction(params: SimParams, replicas, threads=1, replica_start=0, backend=None):
    """Monte Carlo ``P(max lambda-path jumps from (o, 0) within t >= floor(beta t))``.

    Returns ``(fraction, se, overflow_count, jumps)``.
    """
    topo = params.topology()
    o = topo.index((0,) * params.d)
    impl = kernels.get(backend)
    starts = list(range(0, replicas, CHUNK))

    def run(a):
        cnt = min(CHUNK, replicas - a)
        return impl.max_jumps_batch(params.seed, replica_start + a, cnt, topo.neighbors,
                                    topo.lane_keys, params.lam, o, 0.0, params.horizon,
                                    topo.boundary)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(a) for a in starts]
    if not parts:
        raise InsufficientDataError("no replicas requested")
    jumps = np.concatenate([p[0] for p in parts])
    over = np.concatenate([p[1] for p in parts])
    bad = jumps >= params.beta_t
    f = float(bad.mean())
    return f, math.sqrt(f * (1 - f) / len(bad)), int(over.sum()), jumps
