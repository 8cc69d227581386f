"""Discrete reinforced-walk sampler.

The walk jumps from its current site to j with probability proportional
to A[site][j] * (1 + Z(j))^alpha, where Z(j) counts visits to j including
time 0. A single vectorized engine advances any number of replicas in
lockstep, each consuming uniforms from its own seeded stream in fixed
order, so a replica's trajectory is bit-identical whether it runs alone
or inside a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import ModelParameters
from .errors import NumericError, ValidationError
from .graph import SimplexPoint

#: Uniforms are drawn from each replica's generator in blocks of this size;
#: the value never affects trajectories, only buffering.
BLOCK_STEPS = 4096

#: Full site sequences are kept only up to this horizon; beyond it records
#: carry geometric checkpoints only.
FULL_LOG_LIMIT = 1_000_000

#: exp overflows just past 709; the guard leaves headroom for row sums.
_WEIGHT_LOG_CAP = 690.0


@dataclass(frozen=True)
class WalkState:
    """Walk position plus visit counts; counts include the time-0 site."""

    site: int
    counts: np.ndarray
    step: int

    def __post_init__(self):
        self.counts.setflags(write=False)
        if int(self.counts.sum()) != self.step + 1:
            raise ValidationError(
                f"visit counts sum to {int(self.counts.sum())}, expected step+1 = {self.step + 1}"
            )
        if self.counts[self.site] < 1:
            raise ValidationError("current site has no recorded visit")

    @property
    def occupation(self) -> SimplexPoint:
        return SimplexPoint.from_array(self.counts / (self.step + 1))


@dataclass(frozen=True)
class TrajectoryRecord:
    """Finished run: final counts, geometric-time snapshots, and (for
    short horizons) the full site sequence including time 0."""

    start: int
    params: object
    seed: int
    horizon: int
    final_counts: np.ndarray
    checkpoint_steps: np.ndarray
    checkpoint_counts: np.ndarray
    sites: Optional[np.ndarray] = None

    def __post_init__(self):
        self.final_counts.setflags(write=False)
        self.checkpoint_steps.setflags(write=False)
        self.checkpoint_counts.setflags(write=False)
        if self.sites is not None:
            self.sites.setflags(write=False)
        if int(self.final_counts.sum()) != self.horizon + 1:
            raise ValidationError("final counts inconsistent with horizon")

    @property
    def final_occupation(self) -> SimplexPoint:
        return SimplexPoint.from_array(self.final_counts / (self.horizon + 1))

    def checkpoint_occupations(self) -> np.ndarray:
        """Occupation vectors v_n = Z_n/(n+1) at the checkpoint steps."""
        return self.checkpoint_counts / (self.checkpoint_steps[:, None] + 1.0)

    @property
    def visit_log(self):
        """Full site sequence when recorded, else the checkpoint series."""
        if self.sites is not None:
            return self.sites
        return self.checkpoint_occupations()

    def counts_at(self, step: int) -> np.ndarray:
        """Visit counts at a checkpointed step (or the horizon)."""
        if step == self.horizon:
            return self.final_counts
        hits = np.nonzero(self.checkpoint_steps == step)[0]
        if hits.size == 0:
            raise ValidationError(f"step {step} was not checkpointed")
        return self.checkpoint_counts[hits[0]]


def checkpoint_schedule(horizon: int, extra=()) -> np.ndarray:
    """Geometric snapshot times ceil(1.2^m) capped at and including the
    horizon, merged with any extra requested steps."""
    vals = list(extra)
    x = 1.0
    while True:
        v = math.ceil(x)
        if v > horizon:
            break
        vals.append(v)
        x *= 1.2
    vals.append(horizon)
    out = np.unique(np.asarray(vals, dtype=np.int64))
    if out.size and (out[0] < 1 or out[-1] > horizon):
        raise ValidationError("checkpoint steps must lie in [1, horizon]")
    return out


def _check_weight_range(alpha: float, horizon: int) -> None:
    if alpha * math.log(horizon + 2) > _WEIGHT_LOG_CAP:
        raise NumericError(
            f"visit weights overflow doubles at horizon {horizon} with exponent {alpha}"
        )


def init_walk(p: ModelParameters, start: int) -> WalkState:
    """Walk at time 0: sitting on start with that single visit counted."""
    n = p.size
    if not 0 <= start < n:
        raise ValidationError(f"start site {start} out of range for {n} sites")
    counts = np.zeros(n, dtype=np.int64)
    counts[start] = 1
    return WalkState(site=start, counts=counts, step=0)


def step_distribution(p: ModelParameters, s: WalkState) -> np.ndarray:
    """One-step law from the current state: row A[site] * (1+counts)^alpha
    normalized. Matches the frozen kernel row at (1/(n+1), v_n)."""
    weights = p.effective_matrix.entries[s.site] * np.power(1.0 + s.counts, p.alpha)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericError("degenerate one-step weights")
    return weights / total


def _pick(weights: np.ndarray, u: float) -> int:
    csum = np.cumsum(weights)
    target = u * csum[-1]
    idx = int(np.count_nonzero(csum <= target))
    if idx >= weights.size:
        idx = int(np.nonzero(weights > 0)[0][-1])
    return idx


def step(p: ModelParameters, s: WalkState, rng: np.random.Generator) -> WalkState:
    """Advance one step, drawing a single uniform from rng."""
    weights = p.effective_matrix.entries[s.site] * np.power(1.0 + s.counts, p.alpha)
    if not np.all(np.isfinite(weights)):
        raise NumericError("non-finite transition weights")
    nxt = _pick(weights, rng.random())
    counts = s.counts.copy()
    counts[nxt] += 1
    return WalkState(site=nxt, counts=counts, step=s.step + 1)


def step_loop_model(p: ModelParameters, s: WalkState, rng: np.random.Generator) -> WalkState:
    """Step of the self-loop variant: staying put carries weight
    loop_c * (1 + Z(site))^alpha. Identical to step, which already draws
    from the diagonal-adjusted matrix; at loop_c = 0 the two are the same
    code path and produce the same trajectory for the same seed."""
    return step(p, s, rng)


def _batch_walk(p, starts, horizon, seeds, record_sites, checkpoint_at):
    """Advance len(seeds) replicas in lockstep for `horizon` steps.

    Returns (final_counts [R,N], checkpoint_counts [R,C,N], sites [R,horizon+1]
    or None). Replica r consumes uniforms from PCG64(seeds[r]) one per step
    in step order.
    """
    a_eff = np.asarray(p.effective_matrix.entries)
    n = p.size
    starts = np.asarray(starts, dtype=np.int64)
    seeds = [int(s) for s in seeds]
    r = len(seeds)
    if starts.shape != (r,):
        raise ValidationError("starts and seeds must have matching length")
    if np.any(starts < 0) or np.any(starts >= n):
        raise ValidationError("start site out of range")
    _check_weight_range(p.alpha, horizon)

    counts = np.zeros((r, n), dtype=np.int64)
    rows = np.arange(r)
    counts[rows, starts] = 1
    w = np.power(1.0 + counts, p.alpha)
    site = starts.copy()
    gens = [np.random.Generator(np.random.PCG64(s)) for s in seeds]

    checkpoint_at = np.asarray(checkpoint_at, dtype=np.int64)
    chk_pos = {int(x): i for i, x in enumerate(checkpoint_at)}
    chk_counts = np.empty((r, checkpoint_at.size, n), dtype=np.int64)

    sites_log = None
    if record_sites:
        dtype = np.int16 if n < 2**15 else np.int64
        sites_log = np.empty((r, horizon + 1), dtype=dtype)
        sites_log[:, 0] = site

    ublock = np.empty((r, BLOCK_STEPS))
    done = 0
    while done < horizon:
        nblk = min(BLOCK_STEPS, horizon - done)
        for i, g in enumerate(gens):
            ublock[i, :nblk] = g.random(nblk)
        for b in range(nblk):
            eff = a_eff[site] * w
            tot = eff.sum(axis=1)
            if not np.all(np.isfinite(tot)):
                raise NumericError(f"non-finite transition weights at step {done + b + 1}")
            csum = np.cumsum(eff, axis=1)
            target = ublock[:, b] * tot
            nxt = (csum <= target[:, None]).sum(axis=1)
            over = nxt >= n
            if np.any(over):
                # u*total can round up to the full row sum; land on the
                # last positive-weight site in that replica's row
                for i in np.nonzero(over)[0]:
                    nxt[i] = np.nonzero(eff[i] > 0)[0][-1]
            counts[rows, nxt] += 1
            w[rows, nxt] = np.power(1.0 + counts[rows, nxt], p.alpha)
            site = nxt
            stepno = done + b + 1
            if record_sites:
                sites_log[:, stepno] = site
            pos = chk_pos.get(stepno)
            if pos is not None:
                chk_counts[:, pos] = counts
        done += nblk
    return counts, chk_counts, sites_log


def simulate(
    p: ModelParameters,
    start: int,
    horizon: int,
    seed: int,
    record_sites: Optional[bool] = None,
    checkpoints=None,
) -> TrajectoryRecord:
    """Run one walk for `horizon` steps, deterministically in the seed.

    The full site sequence is kept for horizons up to 10^6 (override with
    record_sites); geometric occupation snapshots are always kept.
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    if not 0 <= start < p.size:
        raise ValidationError(f"start site {start} out of range for {p.size} sites")
    if record_sites is None:
        record_sites = horizon <= FULL_LOG_LIMIT
    if checkpoints is None:
        checkpoints = checkpoint_schedule(horizon)
    else:
        checkpoints = checkpoint_schedule(horizon, extra=checkpoints)
    final, chk, sites = _batch_walk(
        p, [start], horizon, [seed], record_sites, checkpoints
    )
    return TrajectoryRecord(
        start=start,
        params=p,
        seed=int(seed),
        horizon=horizon,
        final_counts=final[0],
        checkpoint_steps=checkpoints,
        checkpoint_counts=chk[0],
        sites=None if sites is None else sites[0],
    )
