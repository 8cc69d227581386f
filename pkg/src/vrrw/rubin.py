"""Continuous-time clock construction of the reinforced walk.

Every directed edge (x, y) owns a sequence of independent exponential
durations, the l-th with mean 1/w(l). Sitting at x, one clock per
neighbor runs; the first to ring decides the jump. Clocks of the losing
edges freeze and later resume only if the neighbor's visit count is
unchanged, otherwise they restart at the current count. The jump chain
of this race has the law of the discrete walk with weight w.

Also computes the closed-form lower bound for the probability of the
trap event (the clock configuration that confines the walk to one edge
from a given visit index on), and samples that event directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericError, SummabilityError, ValidationError
from .graph import InteractionMatrix
from .walk import TrajectoryRecord, checkpoint_schedule

#: Dyadic probe depth for certifying weight-sequence tails.
_TAIL_PROBES = 64

#: Chunk-sum contraction threshold; slower decay is treated as non-summable.
_TAIL_CONTRACTION = 0.9


def splitmix64(x: int) -> int:
    """64-bit avalanche mix used to derive independent stream keys."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def power_weight(alpha: float) -> Callable[[int], float]:
    """The strongly reinforcing weight family w(l) = (l+1)^alpha."""
    if alpha <= 1:
        raise ValidationError(f"summable reinforcement needs exponent > 1, got {alpha}")

    def w(level):
        return (np.asarray(level, dtype=float) + 1.0) ** alpha if np.ndim(level) else (level + 1.0) ** alpha

    return w


@dataclass(frozen=True)
class ClockConfig:
    """Graph adjacency plus the per-visit clock rate map w(l)."""

    matrix: InteractionMatrix
    weight: Callable[[int], float]
    summable: bool = True

    def __post_init__(self):
        w0 = float(self.weight(0))
        if not (w0 > 0 and math.isfinite(w0)):
            raise ValidationError(f"clock weight w(0) must be positive, got {w0}")

    @property
    def size(self) -> int:
        return self.matrix.size

    def neighbors(self, site: int) -> np.ndarray:
        return np.nonzero(self.matrix.entries[site] > 0)[0]

    def degree_bound(self) -> int:
        return int(np.max((self.matrix.entries > 0).sum(axis=1)))


@dataclass(frozen=True)
class RubinRecord:
    """Embedded jump chain with its continuous ring times."""

    walk: TrajectoryRecord
    jump_times: np.ndarray
    tie_count: int

    def __post_init__(self):
        self.jump_times.setflags(write=False)


class _EdgeStreams:
    """Lazy per-edge duration cache: duration l of edge e is a fixed
    function of (seed, e, l), independent of query order."""

    def __init__(self, config: ClockConfig, seed: int):
        self._config = config
        self._key = splitmix64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._cache = {}
        self._gens = {}

    def duration(self, x: int, y: int, level: int) -> float:
        edge = (x, y)
        drawn = self._cache.setdefault(edge, [])
        if edge not in self._gens:
            edge_id = x * self._config.size + y
            self._gens[edge] = np.random.Generator(
                np.random.Philox(key=[self._key, edge_id])
            )
        gen = self._gens[edge]
        while len(drawn) <= level:
            u = gen.random()
            rate = float(self._config.weight(len(drawn)))
            if not rate > 0:
                raise ValidationError(f"clock weight w({len(drawn)}) must be positive")
            drawn.append(-math.log1p(-u) / rate)
        return drawn[level]


def rubin_simulate(
    config: ClockConfig, start: int, jump_budget: int, seed: int
) -> RubinRecord:
    """Run the clock race for jump_budget jumps and return the embedded
    chain, its jump times, and the count of resampled exact ties.

    Frozen clocks keep their remaining duration together with the
    neighbor's visit count at freeze time; on return to the source the
    clock resumes only when that count still matches, otherwise a fresh
    duration at the current count replaces it.
    """
    n = config.size
    if not 0 <= start < n:
        raise ValidationError(f"start site {start} out of range for {n} sites")
    if jump_budget < 1:
        raise ValidationError(f"jump budget must be >= 1, got {jump_budget}")

    streams = _EdgeStreams(config, seed)
    tie_gen = np.random.Generator(
        np.random.Philox(key=[splitmix64(int(seed) ^ 0x7E57), 0xFFFFFFFF])
    )
    counts = np.zeros(n, dtype=np.int64)
    counts[start] = 1
    site = start
    now = 0.0
    frozen = {}
    tie_count = 0

    sites = np.empty(jump_budget + 1, dtype=np.int16 if n < 2**15 else np.int64)
    sites[0] = start
    times = np.empty(jump_budget + 1)
    times[0] = 0.0
    chk = checkpoint_schedule(jump_budget)
    chk_counts = np.empty((chk.size, n), dtype=np.int64)
    chk_pos = {int(s): i for i, s in enumerate(chk)}

    for k in range(1, jump_budget + 1):
        nbrs = config.neighbors(site)
        if nbrs.size == 0:
            raise ValidationError(f"site {site} has no neighbors")
        remaining = {}
        for y in nbrs:
            y = int(y)
            held = frozen.pop((site, y), None)
            if held is not None and held[1] == counts[y]:
                remaining[y] = held[0]
            else:
                remaining[y] = streams.duration(site, y, int(counts[y]))
        while True:
            best = min(remaining.values())
            winners = [y for y, t in remaining.items() if t == best]
            if len(winners) == 1:
                break
            # Exact clock tie: measure-zero, broken by fresh durations.
            tie_count += 1
            for y in winners:
                u = tie_gen.random()
                rate = float(config.weight(int(counts[y])))
                remaining[y] = -math.log1p(-u) / rate
        winner = winners[0]
        elapsed = remaining[winner]
        now += elapsed
        for y, t in remaining.items():
            if y != winner:
                frozen[(site, y)] = (t - elapsed, int(counts[y]))
        site = winner
        counts[site] += 1
        sites[k] = site
        times[k] = now
        pos = chk_pos.get(k)
        if pos is not None:
            chk_counts[pos] = counts

    walk = TrajectoryRecord(
        start=start,
        params=config,
        seed=int(seed),
        horizon=jump_budget,
        final_counts=counts,
        checkpoint_steps=chk,
        checkpoint_counts=chk_counts,
        sites=sites,
    )
    return RubinRecord(walk=walk, jump_times=times, tie_count=tie_count)


def _weight_values(weight, levels: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(weight(levels), dtype=float)
        if vals.shape == levels.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.asarray([float(weight(int(l))) for l in levels])


def _tail_inverse_sum(weight, truncation: int) -> float:
    """Upper bound on sum_{l > truncation} 1/w(l) from dyadic chunks and
    probe monotonicity; raises when the chunks do not contract."""
    total = 0.0
    lo = truncation
    prev = None
    prev_w = None
    for _ in range(_TAIL_PROBES):
        hi = lo * 2
        w_lo = float(weight(int(lo + 1)))
        if not w_lo > 0:
            raise SummabilityError(f"weight w({lo + 1}) is not positive")
        if prev_w is not None and w_lo < prev_w:
            raise SummabilityError(
                f"weight decreases beyond {truncation}; tail cannot be certified"
            )
        prev_w = w_lo
        chunk = (hi - lo) / w_lo
        if prev is not None and chunk >= _TAIL_CONTRACTION * prev:
            raise SummabilityError(
                f"weight tail beyond {truncation} decays too slowly to certify "
                f"(chunk ratio {chunk / prev:.3f})"
            )
        total += chunk
        if chunk < 1e-300 or chunk < 1e-18 * total:
            return total
        prev = chunk
        lo = hi
    raise SummabilityError(
        f"weight tail beyond {truncation} did not converge within {_TAIL_PROBES} dyadic probes"
    )


def trap_probability_bound(
    degree: int, weight: Callable[[int], float], start_index: int, truncation: int = 10**6
) -> float:
    """Certified lower bound for the trap-event probability: the product

        prod_{l >= start_index} (1 - degree * w(0) / w(l))^degree

    evaluated in log space to `truncation`, minus a tail allowance of
    degree^2 * w(0) * sum_{l > truncation} 1/w(l) / (1 - x_trunc) in the
    log, so the returned value never exceeds the infinite product.

    Returns 0 when some factor is nonpositive (the bound is vacuous then).
    """
    if degree < 1:
        raise ValidationError(f"degree must be >= 1, got {degree}")
    if start_index < 0 or truncation <= start_index:
        raise ValidationError(
            f"need 0 <= start_index < truncation, got {start_index}, {truncation}"
        )
    levels = np.arange(start_index, truncation + 1, dtype=np.int64)
    w = _weight_values(weight, levels)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("clock weights must be positive and finite")
    w0 = float(weight(0))
    x = degree * w0 / w
    if np.any(x >= 1.0):
        return 0.0
    log_main = degree * float(np.sum(np.log1p(-x)))
    x_trunc = degree * w0 / float(w[-1])
    tail = _tail_inverse_sum(weight, truncation)
    log_tail_allowance = degree * degree * w0 * tail / (1.0 - x_trunc)
    value = math.exp(log_main - log_tail_allowance)
    if not math.isfinite(value):
        raise NumericError("trap bound evaluation lost finiteness")
    return value


@dataclass(frozen=True)
class TrapSample:
    """Monte Carlo estimate of the trap-event probability."""

    draws: int
    hits: int

    @property
    def estimate(self) -> float:
        return self.hits / self.draws


def sample_trap_event(
    degree: int,
    weight: Callable[[int], float],
    start_index: int,
    draws: int,
    seed: int,
    truncation: int = 2000,
) -> TrapSample:
    """Sample the trap event on a star with `degree` leaves: every leaf
    edge's total remaining duration from start_index on must undercut the
    smallest fresh level-0 duration among the leaf edges.

    Durations beyond `truncation` are dropped; their total mean must be
    negligible against the binomial noise at the configured draw count.
    """
    if degree < 1 or draws < 1:
        raise ValidationError("need degree >= 1 and draws >= 1")
    if start_index < 0 or truncation <= start_index:
        raise ValidationError(
            f"need 0 <= start_index < truncation, got {start_index}, {truncation}"
        )
    levels = np.arange(start_index, truncation + 1, dtype=np.int64)
    rates = _weight_values(weight, levels)
    if np.any(rates <= 0):
        raise ValidationError("clock weights must be positive")
    w0 = float(weight(0))
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    hits = 0
    remaining = draws
    chunk_cap = max(1, int(4e6 // (degree * levels.size)))
    while remaining > 0:
        m = min(chunk_cap, remaining)
        sums = (rng.standard_exponential((m, degree, levels.size)) / rates).sum(axis=2)
        fresh = rng.standard_exponential((m, degree)) / w0
        hits += int(np.count_nonzero(sums.max(axis=1) < fresh.min(axis=1)))
        remaining -= m
    return TrapSample(draws=draws, hits=hits)
