"""Exact reference for the contact process on a ring of n <= 12 sites.

States are non-empty subsets encoded as bitmasks.  The sub-generator ``Q``
acts on non-empty states only, so row sums are the (non-positive) rates of
leaking into the empty set.  Optionally states are lumped into rotation
classes; the process is rotation invariant, so the lumped chain is exact.

Normalisation: the quasi-stationary law ``qsd`` sums to one and the right
eigenvector ``h`` satisfies ``qsd . h = 1``, so that
``exp(alpha t) P_A(survival to t) -> h(A)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericError, ParameterError
from .lattice import Ring

MAX_N = 12


def _rot(mask: int, r: int, n: int) -> int:
    full = (1 << n) - 1
    return ((mask << r) | (mask >> (n - r))) & full if r else mask


def canonical_mask(mask: int, n: int) -> int:
    """Representative of the rotation class matching ``Ring.canonical``."""
    return _mask_of(Ring(n).canonical(_sites_of(mask, n)))


def _sites_of(mask: int, n: int) -> list:
    return [(i,) for i in range(n) if mask >> i & 1]


def _mask_of(sites) -> int:
    m = 0
    for (i,) in sites:
        m |= 1 << i
    return m


@dataclass
class FiniteChain:
    n: int
    lam: float
    states: list  # bitmasks (class representatives when quotiented)
    Q: np.ndarray
    quotient: bool = False
    index: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def state_sites(self, k: int) -> tuple:
        return tuple(_sites_of(self.states[k], self.n))

    def state_index(self, sites) -> int:
        m = _mask_of([(s[0] % self.n,) if isinstance(s, tuple) else (s % self.n,) for s in sites])
        if self.quotient:
            m = canonical_mask(m, self.n)
        return self.index[m]

    def to_json(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "quotient": self.quotient,
                "states": [list(map(list, self.state_sites(k))) for k in range(self.size)],
                "Q": self.Q.tolist()}


def _rates(mask: int, n: int, lam: float):
    """Outgoing transitions of a state: list of (target mask, rate)."""
    out = []
    for i in range(n):
        if mask >> i & 1:
            out.append((mask & ~(1 << i), 1.0))
        else:
            k = (mask >> ((i + 1) % n) & 1) + (mask >> ((i - 1) % n) & 1)
            if k:
                out.append((mask | (1 << i), lam * k))
    return out


def build_chain(n: int, lam: float, quotient: bool = False) -> FiniteChain:
    """Sub-generator on non-empty subsets of the n-ring.

    Healing at rate 1 per infected site; a healthy site is infected at rate
    ``lam`` times its number of infected ring-neighbours, counted with
    multiplicity (for n = 2 both neighbours coincide, giving 2*lam).
    """
    if not 2 <= n <= MAX_N:
        raise ParameterError(f"ring size must be in [2, {MAX_N}]")
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    masks = range(1, 1 << n)
    if quotient:
        states = sorted({canonical_mask(m, n) for m in masks})
    else:
        states = list(masks)
    index = {m: k for k, m in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for k, m in enumerate(states):
        for target, rate in _rates(m, n, lam):
            Q[k, k] -= rate
            if target:
                j = index[canonical_mask(target, n) if quotient else target]
                Q[k, j] += rate
    return FiniteChain(n, float(lam), states, Q, quotient, index)


@dataclass
class SpectralSummary:
    alpha: float
    qsd: np.ndarray
    h: np.ndarray
    chain: FiniteChain = field(repr=False)
    residual: float = 0.0
    gap: float = float("nan")

    def qsd_by_class(self) -> dict:
        """QSD mass per rotation class, keyed by the canonical site tuple."""
        ring = Ring(self.chain.n)
        out = {}
        for k in range(self.chain.size):
            key = ring.canonical(self.chain.state_sites(k))
            out[key] = out.get(key, 0.0) + float(self.qsd[k])
        return out

    def h_of(self, sites) -> float:
        return float(self.h[self.chain.state_index(sites)])

    def mean_size(self) -> float:
        sizes = np.array([bin(m).count("1") for m in self.chain.states])
        return float(self.qsd @ sizes)

    def survival(self, times, initial=((0,),)) -> np.ndarray:
        """``P(absorption time > t)`` from ``initial`` via the matrix exponential."""
        k = self.chain.state_index(initial)
        one = np.ones(self.chain.size)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty(len(times))
        for i, t in enumerate(times):
            if t <= 0:
                out[i] = 1.0
            else:
                out[i] = scipy.linalg.expm(self.chain.Q * t)[k] @ one
        return np.clip(out, 0.0, 1.0)

    def absorption_cdf(self, initial=((0,),)):
        """Callable CDF of the absorption time, for KS comparisons."""
        def cdf(t):
            t = np.asarray(t, dtype=float)
            flat = np.atleast_1d(t).ravel()
            # propagate along sorted times to reuse work
            order = np.argsort(flat)
            vals = np.empty(len(flat))
            k = self.chain.state_index(initial)
            u = np.zeros(self.chain.size)
            u[k] = 1.0
            prev = 0.0
            for i in order:
                ti = max(flat[i], 0.0)
                if ti > prev:
                    u = u @ scipy.linalg.expm(self.chain.Q * (ti - prev))
                    prev = ti
                vals[i] = 1.0 - u.sum()
            vals = np.clip(vals, 0.0, 1.0)
            return vals.reshape(t.shape) if t.ndim else float(vals[0])
        return cdf

    def to_json(self) -> dict:
        ring = Ring(self.chain.n)
        return {
            "n": self.chain.n, "lambda": self.chain.lam, "quotient": self.chain.quotient,
            "alpha": self.alpha, "spectral_gap": self.gap, "residual": self.residual,
            "mean_size": self.mean_size(),
            "qsd": [[list(map(list, k)), v] for k, v in sorted(self.qsd_by_class().items())],
            "h": [[list(map(list, ring.canonical(self.chain.state_sites(k)))), float(self.h[k])]
                  for k in range(self.chain.size)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def spectral_summary(chain: FiniteChain, tol: float = 1e-10) -> SpectralSummary:
    """Principal eigen-triple of the sub-generator by full eigendecomposition."""
    Q = chain.Q
    w, vl, vr = scipy.linalg.eig(Q, left=True, right=True)
    k = int(np.argmax(w.real))
    lead = w[k]
    if abs(lead.imag) > 1e-9:
        raise NumericError(f"leading eigenvalue is not real: {lead}")
    alpha = -float(lead.real)
    nu = np.real(vl[:, k])
    h = np.real(vr[:, k])
    nu = nu / nu.sum()
    h = h / (nu @ h)
    if (nu < -1e-12).any() or (h < -1e-12).any():
        raise NumericError("principal eigenvectors are not of one sign")
    nu = np.clip(nu, 0.0, None)
    nu /= nu.sum()
    res = max(np.abs(nu @ Q + alpha * nu).max(), np.abs(Q @ h + alpha * h).max())
    if res > tol:
        raise NumericError(f"eigen residual {res:.3e} exceeds {tol:.0e}")
    rest = np.delete(w.real, k)
    gap = float(lead.real - rest.max()) if len(rest) else float("inf")
    return SpectralSummary(alpha, nu, h, chain, float(res), gap)
