"""Monte Carlo campaign harness.

Runs many independent walk replicas, detects where each one localized
from its tail visit counts, anchors the final occupation to the nearest
equilibrium, and aggregates support-size statistics. Replica seeds are
derived from the base seed by a 64-bit mixing hash, so results do not
depend on execution order and single replicas can be reproduced in
isolation.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ._version import __version__
from .dynamics import ModelParameters
from .equilibria import Equilibrium, enumerate_all, face_center
from .errors import DomainError, InsufficientDataError, ValidationError
from .graph import FaceIndex, SimplexPoint, complete_graph, coords_of, validate
from .rubin import splitmix64
from .walk import TrajectoryRecord, _batch_walk, checkpoint_schedule

UNIFORM_RANDOM = "uniform-random"

_SEED_STRIDE = 0x9E3779B97F4A7C15
_START_SALT = 0xA5A5A5A5A5A5A5A5
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class DetectionConfig:
    """Tail-window localization detector settings.

    A site is retained when it is visited in the final tail_fraction of
    steps and its share of those steps reaches min_share.
    """

    tail_fraction: float = 0.5
    min_share: float = 0.02

    def __post_init__(self):
        if not 0.0 < self.tail_fraction < 1.0:
            raise ValidationError(f"tail_fraction must lie in (0,1), got {self.tail_fraction}")
        if not 0.0 <= self.min_share < 1.0:
            raise ValidationError(f"min_share must lie in [0,1), got {self.min_share}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParameters
    replicas: int
    horizon: int
    base_seed: int
    start: Union[int, str] = UNIFORM_RANDOM
    detection: DetectionConfig = field(default_factory=DetectionConfig)

    def __post_init__(self):
        if self.replicas < 1:
            raise ValidationError(f"need at least one replica, got {self.replicas}")
        if self.horizon < 10:
            raise ValidationError(f"horizon must be >= 10, got {self.horizon}")
        if isinstance(self.start, str):
            if self.start != UNIFORM_RANDOM:
                raise ValidationError(f"start must be a site or {UNIFORM_RANDOM!r}")
        elif not 0 <= int(self.start) < self.model.size:
            raise ValidationError(f"start site {self.start} out of range")

    def canonical_dict(self) -> dict:
        return {
            "model": {
                "entries": self.model.matrix.entries.tolist(),
                "alpha": self.model.alpha,
                "c": self.model.loop_c,
            },
            "replicas": self.replicas,
            "horizon": self.horizon,
            "base_seed": self.base_seed,
            "start": self.start,
            "detection": {
                "tail_fraction": self.detection.tail_fraction,
                "min_share": self.detection.min_share,
            },
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ReplicaResult:
    replica: int
    seed: int
    support: FaceIndex
    tail_profile: tuple
    final_occupation: SimplexPoint
    nearest_equilibrium: int
    distance: float


@dataclass(frozen=True)
class CampaignResult:
    config: ExperimentConfig
    replicas: tuple
    support_histogram: dict
    mean_sorted_profile: dict
    config_hash: str
    code_version: str

    def __post_init__(self):
        if sum(self.support_histogram.values()) != len(self.replicas):
            raise ValidationError("support histogram does not total the replica count")


def replica_seed(base_seed: int, replica: int) -> int:
    """Seed of one replica's uniform stream, mixed so streams are
    pairwise unrelated."""
    return splitmix64((base_seed + _SEED_STRIDE * (replica + 1)) & _MASK64)


def replica_start(seed: int, n: int) -> int:
    """Start site of a uniform-random-start replica, derived from the
    replica seed without touching the walk's uniform stream."""
    return splitmix64(seed ^ _START_SALT) % n


def _tail_window(horizon: int, tail_fraction: float) -> int:
    window = int(round(tail_fraction * horizon))
    return min(max(window, 1), horizon)


def _detect_from_tail_counts(tail_counts: np.ndarray, window: int, min_share: float):
    shares = tail_counts / window
    retained = (tail_counts >= 1) & (shares >= min_share)
    if not retained.any():
        # A threshold above every share would empty the set; keep the
        # dominant site so the detector never returns nothing.
        retained[int(np.argmax(shares))] = True
    sites = np.nonzero(retained)[0]
    profile = shares[sites] / shares[sites].sum()
    return FaceIndex(sites=tuple(int(s) for s in sites)), profile


def detect_localization(t: TrajectoryRecord, tail_fraction: float, min_share: float):
    """Localization set and renormalized tail occupation of one record.

    Needs either the full site log or a visit-count snapshot at the tail
    cutoff step.
    """
    if t.horizon < 10:
        raise ValidationError(f"detection needs horizon >= 10, got {t.horizon}")
    DetectionConfig(tail_fraction=tail_fraction, min_share=min_share)
    n = t.final_counts.size
    window = _tail_window(t.horizon, tail_fraction)
    cutoff = t.horizon - window
    if t.sites is not None:
        tail_counts = np.bincount(np.asarray(t.sites[cutoff + 1 :], dtype=np.int64), minlength=n)
    else:
        if cutoff == 0:
            base = np.zeros(n, dtype=np.int64)
            base[t.start] = 1
        else:
            try:
                base = t.counts_at(cutoff)
            except ValidationError as exc:
                raise InsufficientDataError(
                    f"record has neither a site log nor a snapshot at step {cutoff}"
                ) from exc
        tail_counts = t.final_counts - base
    return _detect_from_tail_counts(tail_counts, window, min_share)


def equilibrium_anchors(p: ModelParameters) -> list:
    """Reference points for nearest-equilibrium classification.

    Without self-loops this is the full enumeration. With self-loops the
    two-level structure is not enumerated; vertices and face centers
    serve as anchors instead.
    """
    n = p.size
    if n > 12:
        return []
    if p.loop_c == 0.0:
        return enumerate_all(n, p.alpha)
    anchors = []
    for m in range(1, n + 1):
        for sites in itertools.combinations(range(n), m):
            point = face_center(FaceIndex(sites=sites), n)
            anchors.append(
                Equilibrium(
                    point=point,
                    support=FaceIndex(sites=sites),
                    kind="face_center",
                    tangent_eigenvalues=(),
                    verdict="marginal",
                )
            )
    return anchors


def _nearest(occupations: np.ndarray, anchors) -> tuple:
    if not anchors:
        r = occupations.shape[0]
        return np.full(r, -1, dtype=np.int64), np.full(r, np.nan)
    pts = np.array([coords_of(e.point) for e in anchors])
    d = np.linalg.norm(occupations[:, None, :] - pts[None, :, :], axis=2)
    idx = np.argmin(d, axis=1)
    return idx, d[np.arange(d.shape[0]), idx]


def run_campaign(cfg: ExperimentConfig) -> CampaignResult:
    """Run all replicas and aggregate localization statistics.

    Replica r always uses seed replica_seed(cfg.base_seed, r), so any
    single replica reproduces bit-identically via simulate with that
    seed, and the result is independent of scheduling.
    """
    p = cfg.model
    n = p.size
    r = cfg.replicas
    seeds = [replica_seed(cfg.base_seed, i) for i in range(r)]
    if cfg.start == UNIFORM_RANDOM:
        starts = np.array([replica_start(s, n) for s in seeds], dtype=np.int64)
    else:
        starts = np.full(r, int(cfg.start), dtype=np.int64)

    window = _tail_window(cfg.horizon, cfg.detection.tail_fraction)
    cutoff = cfg.horizon - window
    extra = [cutoff] if cutoff >= 1 else []
    checkpoints = checkpoint_schedule(cfg.horizon, extra=extra)
    final, chk, _ = _batch_walk(p, starts, cfg.horizon, seeds, False, checkpoints)

    if cutoff >= 1:
        cut_idx = int(np.nonzero(checkpoints == cutoff)[0][0])
        base = chk[:, cut_idx]
    else:
        base = np.zeros((r, n), dtype=np.int64)
        base[np.arange(r), starts] = 1
    tail = final - base

    occupations = final / (cfg.horizon + 1.0)
    anchors = equilibrium_anchors(p)
    nearest_idx, nearest_dist = _nearest(occupations, anchors)

    replicas = []
    for i in range(r):
        support, profile = _detect_from_tail_counts(tail[i], window, cfg.detection.min_share)
        replicas.append(
            ReplicaResult(
                replica=i,
                seed=seeds[i],
                support=support,
                tail_profile=tuple(float(x) for x in profile),
                final_occupation=SimplexPoint.from_array(occupations[i]),
                nearest_equilibrium=int(nearest_idx[i]),
                distance=float(nearest_dist[i]),
            )
        )

    histogram = {}
    by_size = {}
    for rep in replicas:
        size = len(rep.support.sites)
        histogram[size] = histogram.get(size, 0) + 1
        by_size.setdefault(size, []).append(sorted(rep.tail_profile, reverse=True))
    mean_profile = {
        size: tuple(float(x) for x in np.mean(rows, axis=0))
        for size, rows in sorted(by_size.items())
    }

    return CampaignResult(
        config=cfg,
        replicas=tuple(replicas),
        support_histogram=dict(sorted(histogram.items())),
        mean_sorted_profile=mean_profile,
        config_hash=cfg.config_hash(),
        code_version=__version__,
    )


@dataclass(frozen=True)
class ConvergenceSeries:
    """Distance of the checkpointed occupation path to a set of anchors."""

    steps: np.ndarray
    occupations: np.ndarray
    distances: np.ndarray
    nearest: np.ndarray
    anchor_index: int
    decay_exponent: float


def convergence_diagnostics(t: TrajectoryRecord, eqs) -> ConvergenceSeries:
    """Per-checkpoint distances to each equilibrium plus a log-log decay
    fit against the nearest-at-horizon anchor over the final decade."""
    if len(eqs) == 0:
        raise ValidationError("need at least one anchor equilibrium")
    steps = t.checkpoint_steps
    if steps.size < 3:
        raise InsufficientDataError(
            f"need at least 3 checkpoints for diagnostics, got {steps.size}"
        )
    occ = t.checkpoint_occupations()
    pts = np.array([coords_of(e.point) for e in eqs])
    dist = np.linalg.norm(occ[:, None, :] - pts[None, :, :], axis=2)
    nearest = np.argmin(dist, axis=1)
    anchor = int(nearest[-1])

    decade = steps >= steps[-1] / 10
    d = dist[decade, anchor]
    s = steps[decade].astype(float)
    keep = d > 0
    if keep.sum() >= 2:
        slope = np.polyfit(np.log(s[keep]), np.log(d[keep]), 1)[0]
        exponent = -float(slope)
    else:
        exponent = float("nan")
    return ConvergenceSeries(
        steps=steps,
        occupations=occ,
        distances=dist,
        nearest=nearest,
        anchor_index=anchor,
        decay_exponent=exponent,
    )


def _model_to_json(p: ModelParameters) -> dict:
    out = {"n": p.size, "alpha": p.alpha, "c": p.loop_c}
    hollow = complete_graph(p.size)
    if not np.array_equal(p.matrix.entries, hollow.entries):
        out["matrix"] = p.matrix.entries.tolist()
    return out


def _model_from_json(d: dict) -> ModelParameters:
    if "matrix" in d:
        matrix = validate(np.asarray(d["matrix"], dtype=float))
    else:
        matrix = complete_graph(int(d["n"]))
    return ModelParameters(matrix=matrix, alpha=float(d["alpha"]), loop_c=float(d.get("c", 0.0)))


def config_to_json_dict(cfg: ExperimentConfig) -> dict:
    """External JSON form; sites are 1-based there."""
    start = cfg.start if isinstance(cfg.start, str) else int(cfg.start) + 1
    return {
        "model": _model_to_json(cfg.model),
        "replicas": cfg.replicas,
        "horizon": cfg.horizon,
        "base_seed": cfg.base_seed,
        "start": start,
        "detection": {
            "tail_fraction": cfg.detection.tail_fraction,
            "min_share": cfg.detection.min_share,
        },
    }


def config_from_json_dict(d: dict) -> ExperimentConfig:
    det = d.get("detection", {})
    start = d.get("start", UNIFORM_RANDOM)
    if not isinstance(start, str):
        start = int(start) - 1
    return ExperimentConfig(
        model=_model_from_json(d["model"]),
        replicas=int(d["replicas"]),
        horizon=int(d["horizon"]),
        base_seed=int(d["base_seed"]),
        start=start,
        detection=DetectionConfig(
            tail_fraction=float(det.get("tail_fraction", 0.5)),
            min_share=float(det.get("min_share", 0.02)),
        ),
    )


def _result_to_json_dict(result: CampaignResult) -> dict:
    return {
        "config": config_to_json_dict(result.config),
        "replicas": [
            {
                "replica": rep.replica,
                "seed": rep.seed,
                "support": list(rep.support.labels()),
                "tail_profile": list(rep.tail_profile),
                "final_occupation": [float(x) for x in coords_of(rep.final_occupation)],
                "nearest_equilibrium": rep.nearest_equilibrium,
                "distance": rep.distance,
            }
            for rep in result.replicas
        ],
        "aggregates": {
            "support_histogram": {str(k): v for k, v in result.support_histogram.items()},
            "mean_sorted_profile": {
                str(k): list(v) for k, v in result.mean_sorted_profile.items()
            },
        },
        "provenance": {
            "config_hash": result.config_hash,
            "code_version": result.code_version,
        },
    }


def _result_from_json_dict(d: dict) -> CampaignResult:
    replicas = tuple(
        ReplicaResult(
            replica=int(rep["replica"]),
            seed=int(rep["seed"]),
            support=FaceIndex(sites=tuple(int(s) - 1 for s in rep["support"])),
            tail_profile=tuple(float(x) for x in rep["tail_profile"]),
            final_occupation=SimplexPoint.from_array(np.asarray(rep["final_occupation"])),
            nearest_equilibrium=int(rep["nearest_equilibrium"]),
            distance=float(rep["distance"]),
        )
        for rep in d["replicas"]
    )
    agg = d["aggregates"]
    return CampaignResult(
        config=config_from_json_dict(d["config"]),
        replicas=replicas,
        support_histogram={int(k): int(v) for k, v in agg["support_histogram"].items()},
        mean_sorted_profile={
            int(k): tuple(float(x) for x in v)
            for k, v in agg["mean_sorted_profile"].items()
        },
        config_hash=d["provenance"]["config_hash"],
        code_version=d["provenance"]["code_version"],
    )


class _DeterministicGzipText(io.StringIO):
    """Buffers text and compresses on close with no timestamp or name in
    the header, so equal content always gives equal bytes."""

    def __init__(self, path):
        super().__init__()
        self._path = path

    def close(self):
        try:
            data = self.getvalue().encode("utf-8")
            with open(self._path, "wb") as fh:
                fh.write(gzip.compress(data, mtime=0))
        finally:
            super().close()


def _open_for_write(path):
    path = str(path)
    if path.endswith(".gz"):
        return _DeterministicGzipText(path)
    return open(path, "w", encoding="utf-8", newline="")


def export(result: CampaignResult, path, format: str) -> None:
    """Write a campaign result as json (round-trippable) or csv (one row
    per replica, fixed columns). Paths ending in .gz are compressed."""
    if format == "json":
        with _open_for_write(path) as fh:
            json.dump(_result_to_json_dict(result), fh, sort_keys=True, indent=2)
            fh.write("\n")
    elif format == "csv":
        n = result.config.model.size
        cols = ["replica", "seed", "support_size", "support"]
        cols += [f"occ_{i + 1}" for i in range(n)]
        cols += ["nearest_eq", "dist"]
        with _open_for_write(path) as fh:
            fh.write(",".join(cols) + "\n")
            for rep in result.replicas:
                occ = coords_of(rep.final_occupation)
                row = [
                    str(rep.replica),
                    str(rep.seed),
                    str(len(rep.support.sites)),
                    "|".join(str(s) for s in rep.support.labels()),
                ]
                row += [f"{x:.17g}" for x in occ]
                row += [str(rep.nearest_equilibrium), f"{rep.distance:.17g}"]
                fh.write(",".join(row) + "\n")
    else:
        raise DomainError(f"unknown export format {format!r}")


def load_campaign(path) -> CampaignResult:
    """Read back a json export."""
    path = str(path)
    if path.endswith(".gz"):
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return _result_from_json_dict(json.load(fh))
    with open(path, "r", encoding="utf-8") as fh:
        return _result_from_json_dict(json.load(fh))
