"""Monte-Carlo trials: sample noise, propagate Pauli frames, post-select,
decode, and classify the residual logical error.

Trial randomness comes from counter-based Philox streams keyed by
(seed, point, trial), so tallies are pure functions of the configuration and
independent of batch sizes or worker counts.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from .decoder import DetectorGraph, build_detector_graph, decode, enumerate_faults
from .engine import CompiledProgram, trial_uniforms
from .lattice import CodeLayout
from .noise import NoiseModel
from .pauli import PauliString
from .protocol import CircuitProgram, Location

CLASSES = ("I", "XL", "ZL", "YL")


class InconsistentResidualError(RuntimeError):
    pass


class NoAcceptedTrialsError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrialOutcome:
    accepted: bool
    residual_class: str | None    # defined only when accepted


@dataclass
class Tally:
    shots: int = 0
    accepted: int = 0
    counts: dict = field(default_factory=lambda: {c: 0 for c in CLASSES})

    def add(self, outcome: TrialOutcome):
        self.shots += 1
        if outcome.accepted:
            self.accepted += 1
            self.counts[outcome.residual_class] += 1

    def merge(self, other: "Tally") -> "Tally":
        out = Tally(self.shots + other.shots, self.accepted + other.accepted,
                    {c: self.counts[c] + other.counts[c] for c in CLASSES})
        return out

    def check(self):
        assert self.accepted == sum(self.counts.values())
        assert self.accepted <= self.shots


def classify_pair(flip_zl: bool, flip_xl: bool) -> str:
    """Class from (anticommutes with Z_L, anticommutes with X_L)."""
    return {(False, False): "I", (True, False): "XL",
            (False, True): "ZL", (True, True): "YL"}[(flip_zl, flip_xl)]


def classify_residual(residual: PauliString, layout: CodeLayout) -> str:
    """Logical class of an explicit residual Pauli, modulo the stabilizer group."""
    for i, s in enumerate(layout.stabilizers):
        if not residual.commutes(s.pauli):
            raise InconsistentResidualError(
                f"residual anticommutes with stabilizer {i}"
            )
    return classify_pair(
        not residual.commutes(layout.logical_z),
        not residual.commutes(layout.logical_x),
    )


def propagate(frame: PauliString, location: Location, rng=None) -> PauliString:
    """Conjugate a Pauli frame through one gate location.

    Stochastic only at rotations: a frame anticommuting with the rotation
    axis Z^(x)k picks up Z^(x)k with probability sin^2(2 theta).
    """
    if location.kind == "CX":
        c, t = location.qubits
        x, z = frame.x, frame.z
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
        return PauliString(x, z)
    if location.kind == "CZ":
        a, b = location.qubits
        x, z = frame.x, frame.z
        if (x >> a) & 1:
            z ^= 1 << b
        if (x >> b) & 1:
            z ^= 1 << a
        return PauliString(x, z)
    if location.kind == "RotZ":
        theta = location.meta[0]
        axis = PauliString.from_letters((q, "Z") for q in location.qubits)
        if frame.commutes(axis):
            return frame
        if rng is None:
            raise ValueError("rotation propagation is stochastic; rng required")
        if rng.random() < math.sin(2 * theta) ** 2:
            return frame * axis
        return frame
    raise ValueError(f"not a gate location: {location.kind}")


# ---------------------------------------------------------------------------
# batch execution


def _tally_batch(compiled: CompiledProgram, graph: DetectorGraph, U) -> Tally:
    meas, x, z = compiled.run(U)
    accepted = compiled.acceptance(meas)
    det = compiled.detectors(meas)
    az, ax = compiled.logical_flips(x, z)
    tally = Tally()
    tally.shots = int(U.shape[0]) if hasattr(U, "shape") else U.batch
    tally.accepted = int(accepted.sum())
    has_events = det.any(axis=1)
    for row in np.nonzero(accepted)[0]:
        if has_events[row]:
            flagged = np.flatnonzero(det[row])
            pz, px = decode(graph, [int(i) for i in flagged]).logical
        else:
            pz = px = False
        cls = classify_pair(bool(az[row]) ^ pz, bool(ax[row]) ^ px)
        tally.counts[cls] += 1
    tally.check()
    return tally


_WORKER: dict = {}


def _worker_run(args):
    seed, point, lo, hi = args
    compiled = _WORKER["compiled"]
    graph = _WORKER["graph"]
    batch = _WORKER["batch"]
    tally = Tally()
    for a in range(lo, hi, batch):
        b = min(a + batch, hi)
        U = trial_uniforms(seed, point, range(a, b), compiled.n_slots)
        tally = tally.merge(_tally_batch(compiled, graph, U))
    return tally


def _auto_batch(n_slots: int) -> int:
    # keep the uniform matrix around ~128 MB
    return max(64, min(8192, (16 << 20) // max(1, n_slots)))


def run_experiment(
    program: CircuitProgram,
    model: NoiseModel,
    shots: int,
    seed: int,
    point: int = 0,
    workers: int = 1,
    compiled: CompiledProgram | None = None,
    graph: DetectorGraph | None = None,
    batch: int | None = None,
) -> Tally:
    """Aggregate `shots` independent trials; identical for any worker split."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if compiled is None:
        compiled = CompiledProgram(program, model)
    if graph is None:
        graph = build_detector_graph(program, model, compiled)
    if batch is None:
        batch = _auto_batch(compiled.n_slots)
    _WORKER.update(compiled=compiled, graph=graph, batch=batch)
    chunk = max(batch, math.ceil(shots / max(1, workers * 4)))
    tasks = [
        (seed, point, lo, min(lo + chunk, shots))
        for lo in range(0, shots, chunk)
    ]
    if workers <= 1 or len(tasks) == 1:
        results = [_worker_run(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(_worker_run, tasks)
    tally = Tally()
    for r in results:
        tally = tally.merge(r)
    tally.check()
    return tally


def run_trial(
    program: CircuitProgram,
    model: NoiseModel,
    rng: np.random.Generator,
    compiled: CompiledProgram | None = None,
    graph: DetectorGraph | None = None,
) -> TrialOutcome:
    """One Monte-Carlo trial drawing from the supplied random stream."""
    if compiled is None:
        compiled = CompiledProgram(program, model)
    if graph is None:
        graph = build_detector_graph(program, model, compiled)
    U = rng.random((1, compiled.n_slots))
    meas, x, z = compiled.run(U)
    if not compiled.acceptance(meas)[0]:
        return TrialOutcome(False, None)
    det = compiled.detectors(meas)[0]
    az, ax = compiled.logical_flips(x, z)
    flagged = [int(i) for i in np.flatnonzero(det)]
    pz, px = decode(graph, flagged).logical if flagged else (False, False)
    return TrialOutcome(True, classify_pair(bool(az[0]) ^ pz, bool(ax[0]) ^ px))


# ---------------------------------------------------------------------------
# deterministic single-fault analysis


@dataclass(frozen=True)
class FaultCase:
    key: tuple
    kind: str
    detected: bool          # rejected by stage-I post-selection
    residual: str           # class after decoding (when accepted)


def stage1_single_fault_cases(
    program: CircuitProgram,
    model: NoiseModel,
    compiled: CompiledProgram | None = None,
    graph: DetectorGraph | None = None,
):
    """Deterministic outcome of every dominant single fault in stage I.

    Covers every Z-type channel entry (single-leg or correlated) at every
    stage-I location, and every stage-I measurement flip.  Pure-Z frames
    commute with the rotation, so each case is twirl-free and deterministic.
    """
    if compiled is None:
        compiled = CompiledProgram(program, model)
    if graph is None:
        graph = build_detector_graph(program, model, compiled)
    ops_by_pos = {op.pos: op for op in compiled.ops}
    stage2_start = compiled.stage2_op_start
    cases = []
    for rec in enumerate_faults(compiled):
        tag, pos, a, b, coin = rec.key
        if coin != 0 or pos >= stage2_start:
            continue
        if tag == "err":
            op = ops_by_pos[pos]
            letters = op.table.entries[b]
            if any(l in ("X", "Y") for l in letters):
                continue  # only dominant Z-type faults are in scope
            kind = f"{op.kind}:{''.join(letters)}"
        else:
            kind = "measflip"
        if not rec.accepted:
            cases.append(FaultCase(rec.key, kind, True, "I"))
            continue
        if rec.events:
            pz, px = decode(graph, list(rec.events)).logical
        else:
            pz = px = False
        cls = classify_pair(rec.logical[0] ^ pz, rec.logical[1] ^ px)
        cases.append(FaultCase(rec.key, kind, False, cls))
    return cases
