from __future__ import annotations

import dataclasses
import functools
import math

from .errors import ParameterError
from .lattice import Box, Ring, Topology

# Nearest-neighbour critical values used only to refuse supercritical runs.
LAMBDA_C_REFERENCE = {1: 1.6489, 2: 0.4122, 3: 0.2216}

MASK64 = (1 << 64) - 1


@dataclasses.dataclass(frozen=True)
class SimParams:
    """Parameters of one simulated space-time window.

    ``ring`` switches the spatial window from ``[-W, W]^d`` to the n-cycle used
    by the exact-chain comparisons; ``W`` is then ignored.
    """

    d: int
    lam: float
    horizon: float
    W: int = 0
    beta: float = 1.0
    seed: int = 0
    replica_index: int = 0
    margin: int | None = None
    ring: int | None = None

    def __post_init__(self):
        self.validate()

    @property
    def beta_t(self) -> int:
        return math.floor(self.beta * self.horizon)

    @property
    def effective_margin(self) -> int:
        if self.margin is not None:
            return self.margin
        return 2 * math.ceil(self.beta * self.horizon)

    @property
    def min_window(self) -> int:
        return math.ceil(self.beta * self.horizon) + self.effective_margin

    def validate(self):
        if self.d < 1:
            raise ParameterError("dimension must be positive")
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ParameterError("lambda must be a positive real")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ParameterError("horizon must be finite and non-negative")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if not 0 <= self.seed <= MASK64:
            raise ParameterError("seed must fit in 64 unsigned bits")
        if self.replica_index < 0:
            raise ParameterError("replica_index must be non-negative")
        if self.margin is not None and self.margin < 0:
            raise ParameterError("margin must be non-negative")
        if self.ring is not None:
            if self.d != 1:
                raise ParameterError("ring topology is one-dimensional")
            if not 2 <= self.ring:
                raise ParameterError("ring size must be at least 2")
            return
        if self.W < 1:
            raise ParameterError("window radius must be positive")
        if self.W < self.min_window:
            raise ParameterError(
                f"W={self.W} below ceil(beta*t) + margin = {self.min_window}"
            )

    @property
    def subcritical(self) -> bool:
        ref = LAMBDA_C_REFERENCE.get(self.d)
        return ref is not None and self.lam < ref

    def require_subcritical(self):
        if self.ring is None and not self.subcritical:
            raise ParameterError(
                f"lambda={self.lam} is not below the reference critical value for d={self.d}"
            )

    def topology(self) -> Topology:
        return _topology(self.d, self.W, self.ring)

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@functools.lru_cache(maxsize=32)
def _topology(d, W, ring):
    # topologies are immutable and their kernel tables are costly to build
    if ring is not None:
        return Ring(ring)
    return Box(d, W)
