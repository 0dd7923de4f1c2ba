"""Seeded trajectory sampling of the distillation protocols.

Each shot draws its detection outcomes from the exact per-unit detection
tables, thins the true photon counts binomially with the detector efficiency,
applies the protocol's acceptance rule and phase correction to the observed
counts, and scores the transmitted state against the target.

Random numbers come from a counter-based SplitMix64 stream: the uniform used
for draw ``d`` of shot ``s`` depends only on ``(seed, s, d)``, so any sharding
of the shot range gives bit-identical counts.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .cascade import (
    CORRECT_FIDELITY,
    AnalyticsReport,
    CascadeSpec,
    ResolvingReport,
    analytics,
    coincidence,
    efficiency_penalty,
    resolving_analytics,
    resolving_correction,
    single_click,
    single_click_correction,
)
from .fock import InvalidParameterError, InvalidSpecError, NoonSpec, PureState, apply_phase, fidelity, make_noon, single_photon_target
from .unit import INPUT_MODES, TRANSMITTED_MODES, unit_outcomes

DETECTOR_KINDS = ("threshold", "resolving")
DRAWS_PER_UNIT = 3
CHUNK = 1 << 18

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class DetectorModel:
    kind: str = "threshold"
    efficiency: float = 1.0

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise InvalidSpecError(f"detector kind must be one of {DETECTOR_KINDS}, got {self.kind!r}")
        if not 0.0 < self.efficiency <= 1.0:
            raise InvalidParameterError(f"detector efficiency must lie in (0, 1], got {self.efficiency}")


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class RngStream:
    """Stateless uniform stream indexed by (shot, draw)."""

    seed: int
    draws_per_shot: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def uniform(self, shots: np.ndarray, draw: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            key = _mix64(np.array([self.seed], dtype=np.uint64))[0]
            ctr = shots.astype(np.uint64) * np.uint64(self.draws_per_shot) + np.uint64(draw + 1)
            bits = _mix64(key + ctr * _GOLDEN)
        return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _thin(counts: np.ndarray, eta: float, u: np.ndarray) -> np.ndarray:
    """Binomial(count, eta) by inverse CDF, one uniform per count."""
    if eta == 1.0:
        return counts.copy()
    out = np.zeros_like(counts)
    for k in np.unique(counts):
        sel = counts == k
        if k == 0:
            continue
        cdf = np.cumsum([math.comb(k, j) * eta**j * (1 - eta) ** (k - j) for j in range(k + 1)])
        out[sel] = np.minimum(np.searchsorted(cdf / cdf[-1], u[sel], side="right"), k)
    return out


def _pick(outs, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum([o.probability for o in outs])
    return np.minimum(np.searchsorted(cum / cum[-1], u, side="right"), len(outs) - 1)


def sample_unit(state: PureState, rho: float, shots: int, seed: int = 0) -> dict[tuple[int, int], int]:
    """Counts of true (m, n) events over ``shots`` draws of one unit, using the trajectory sampler's stream."""
    outs = unit_outcomes(state, rho)
    u = RngStream(seed, DRAWS_PER_UNIT).uniform(np.arange(shots, dtype=np.uint64), 0)
    hist = np.bincount(_pick(outs, u), minlength=len(outs))
    return {(o.event.m, o.event.n): int(c) for o, c in zip(outs, hist)}


@dataclass(frozen=True)
class _Step:
    rho: float
    rule: str  # "coincidence" | "single" | "resolving"


@dataclass(frozen=True)
class _Plan:
    protocol: str
    photons: int
    phase: float
    steps: tuple[_Step, ...]

    @property
    def draws(self) -> int:
        return DRAWS_PER_UNIT * len(self.steps)


def _run_shots(plan: _Plan, detector: DetectorModel, shots: np.ndarray, stream: RngStream):
    """Per-shot (accepted, correct) masks for the given shot indices."""
    nodes: list[PureState] = [make_noon(NoonSpec(plan.photons, plan.photons, plan.phase), INPUT_MODES)]
    node_ids: dict[PureState, int] = {nodes[0]: 0}
    size = len(shots)
    node = np.zeros(size, dtype=np.int64)
    alive = np.ones(size, dtype=bool)
    theta = np.zeros(size)

    for pos, step in enumerate(plan.steps):
        m_true = np.zeros(size, dtype=np.int64)
        n_true = np.zeros(size, dtype=np.int64)
        nxt = np.full(size, -1, dtype=np.int64)
        u = stream.uniform(shots, DRAWS_PER_UNIT * pos)
        for nid in np.unique(node[alive]):
            sel = alive & (node == nid)
            outs = unit_outcomes(nodes[nid], step.rho)
            pick = _pick(outs, u[sel])
            children = []
            for o in outs:
                child = o.transmitted.relabel(dict(zip(TRANSMITTED_MODES, INPUT_MODES)))
                if child not in node_ids:
                    node_ids[child] = len(nodes)
                    nodes.append(child)
                children.append(node_ids[child])
            nxt[sel] = np.asarray(children)[pick]
            m_true[sel] = np.asarray([o.event.m for o in outs])[pick]
            n_true[sel] = np.asarray([o.event.n for o in outs])[pick]
        m_obs = _thin(m_true, detector.efficiency, stream.uniform(shots, DRAWS_PER_UNIT * pos + 1))
        n_obs = _thin(n_true, detector.efficiency, stream.uniform(shots, DRAWS_PER_UNIT * pos + 2))

        if step.rule == "coincidence":
            ok = coincidence(m_obs, n_obs, detector.kind)
        elif step.rule == "single":
            ok = single_click(m_obs, n_obs, detector.kind)
            theta = np.where(ok, single_click_correction(m_obs, n_obs), theta)
        else:
            ok = (m_obs + n_obs) == plan.photons - 1
            theta = np.where(ok, resolving_correction(m_obs, n_obs), theta)
        alive &= ok
        node = np.where(alive, nxt, -1)

    target = single_photon_target(plan.photons, plan.phase, INPUT_MODES)
    correct = np.zeros(size, dtype=bool)
    if alive.any():
        keys = np.stack([node[alive], np.round(theta[alive] / (math.pi / 2)).astype(np.int64)], axis=1)
        for nid, quarter in np.unique(keys, axis=0):
            f = fidelity(apply_phase(nodes[nid], "b", quarter * math.pi / 2), target)
            if f >= CORRECT_FIDELITY:
                correct |= alive & (node == nid) & (np.round(theta / (math.pi / 2)) == quarter)
    return alive, correct


@dataclass(frozen=True)
class ShotCounts:
    shots: int = 0
    accepted: int = 0
    correct: int = 0

    def __add__(self, other: "ShotCounts") -> "ShotCounts":
        return ShotCounts(self.shots + other.shots, self.accepted + other.accepted, self.correct + other.correct)


def _count_range(plan: _Plan, detector: DetectorModel, start: int, stop: int, seed: int) -> ShotCounts:
    stream = RngStream(seed, plan.draws)
    total = ShotCounts()
    for lo in range(start, stop, CHUNK):
        shots = np.arange(lo, min(lo + CHUNK, stop), dtype=np.uint64)
        accepted, correct = _run_shots(plan, detector, shots, stream)
        total = total + ShotCounts(len(shots), int(accepted.sum()), int(correct.sum()))
    return total


def shard_layout(shots: int, shards: int) -> list[tuple[int, int]]:
    if shards < 1:
        raise InvalidParameterError(f"shard count must be >= 1, got {shards}")
    bounds = [shots * i // shards for i in range(shards + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(shards)]


@dataclass(frozen=True)
class SimulationReport:
    protocol: str
    photons: int
    phase: float
    reflectances: tuple[float, ...]
    detector: str
    eta: float
    shots: int
    accepted: int
    correct: int
    seed: int
    shard_layout: tuple[tuple[int, int], ...] = field(compare=False)
    efficiency_hat: float
    efficiency_se: float
    fidelity_hat: float | None
    fidelity_se: float | None
    reference: dict = field(default_factory=dict)
    version: str = __version__

    @classmethod
    def from_counts(cls, plan: _Plan, detector: DetectorModel, counts: ShotCounts, seed: int, layout, reference) -> "SimulationReport":
        eff = counts.correct / counts.shots
        eff_se = math.sqrt(eff * (1 - eff) / counts.shots)
        if counts.accepted:
            fid = counts.correct / counts.accepted
            fid_se = math.sqrt(fid * (1 - fid) / counts.accepted)
        else:
            fid = fid_se = None
        return cls(
            plan.protocol, plan.photons, plan.phase, tuple(s.rho for s in plan.steps[::-1]) if plan.protocol != "resolving" else (plan.steps[0].rho,),
            detector.kind, detector.efficiency, counts.shots, counts.accepted, counts.correct, int(seed),
            tuple(tuple(b) for b in layout), eff, eff_se, fid, fid_se, dict(reference),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reflectances"] = list(self.reflectances)
        d["shard_layout"] = [list(b) for b in self.shard_layout]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _simulate(plan: _Plan, detector: DetectorModel, shots: int, seed: int, shards: int, reference: dict) -> SimulationReport:
    if int(shots) != shots or shots < 1:
        raise InvalidParameterError(f"shots must be a positive integer, got {shots}")
    RngStream(seed, plan.draws)
    layout = shard_layout(int(shots), shards)
    if shards == 1:
        parts = [_count_range(plan, detector, 0, shots, seed)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            parts = list(pool.map(lambda b: _count_range(plan, detector, b[0], b[1], seed), layout))
    counts = sum(parts, ShotCounts())
    return SimulationReport.from_counts(plan, detector, counts, seed, layout, reference)


def cascade_plan(spec: CascadeSpec) -> _Plan:
    steps = []
    for unit in range(spec.units, 0, -1):
        rule = "single" if (spec.parity == "even" and unit == 1) else "coincidence"
        steps.append(_Step(spec.reflectances[unit - 1], rule))
    return _Plan(spec.parity, spec.photons, spec.phase, tuple(steps))


def simulate_cascade(
    spec: CascadeSpec,
    detector: DetectorModel | None = None,
    shots: int = 100_000,
    seed: int = 0,
    shards: int = 1,
) -> SimulationReport:
    """Sample the odd or even coincidence cascade shot by shot."""
    if not isinstance(spec, CascadeSpec):
        raise InvalidSpecError("expected a CascadeSpec")
    detector = detector or spec.detector or DetectorModel()
    ref = analytics(spec, track_herald_phase=True)
    reference = {
        "p_success": ref.p_success,
        "p_cond": ref.p_cond,
        "eta_penalty": efficiency_penalty(spec.parity, spec.photons, detector.efficiency),
    }
    reference["p_success_penalized"] = ref.p_success * reference["eta_penalty"]
    return _simulate(cascade_plan(spec), detector, shots, seed, shards, reference)


def simulate_resolving(
    photons: int,
    phase: float,
    rho: float,
    eta: float = 1.0,
    shots: int = 100_000,
    seed: int = 0,
    shards: int = 1,
) -> SimulationReport:
    """Sample the one-unit number-resolving protocol."""
    ref = resolving_analytics(photons, rho)
    detector = DetectorModel("resolving", eta)
    reference = {
        "p_success": ref.p_success,
        "p_cond": ref.p_cond,
        "eta_penalty": efficiency_penalty("resolving", photons, eta),
    }
    reference["p_success_penalized"] = ref.p_success * reference["eta_penalty"]
    plan = _Plan("resolving", int(photons), float(phase), (_Step(float(rho), "resolving"),))
    return _simulate(plan, detector, shots, seed, shards, reference)


def trajectory_masks(spec: CascadeSpec, detector: DetectorModel, shots: int, seed: int):
    """Per-shot (accepted, correct) masks for shots ``0..shots-1``; shared stream across detectors."""
    plan = cascade_plan(spec)
    return _run_shots(plan, detector, np.arange(shots, dtype=np.uint64), RngStream(seed, plan.draws))


@dataclass(frozen=True)
class Verdict:
    z_efficiency: float
    z_fidelity: float | None
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {"z_efficiency": self.z_efficiency, "z_fidelity": self.z_fidelity, "status": self.status}


def _z(observed: float, predicted: float, n: int) -> float:
    sigma = math.sqrt(predicted * (1 - predicted) / n)
    diff = observed - predicted
    if sigma == 0.0:
        return 0.0 if abs(diff) < 1e-15 else math.copysign(math.inf, diff)
    return diff / sigma


def compare(report: SimulationReport, reference: AnalyticsReport | ResolvingReport, threshold: float = 3.0) -> Verdict:
    """z-scores of the empirical efficiency and fidelity against closed forms."""
    z_eff = _z(report.efficiency_hat, reference.p_success, report.shots)
    if report.accepted == 0:
        if reference.p_cond > 0:
            return Verdict(z_eff, None, "inconclusive")
        z_fid = 0.0
    else:
        z_fid = _z(report.fidelity_hat, reference.p_cond, report.accepted)
    ok = abs(z_eff) <= threshold and abs(z_fid) <= threshold
    return Verdict(z_eff, z_fid, "pass" if ok else "fail")
