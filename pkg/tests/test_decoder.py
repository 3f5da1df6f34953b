import math

import numpy as np
import pytest

from conftest import make_program
from msinject.decoder import (
    MLTable,
    build_detector_graph,
    decode,
    enumerate_faults,
    exhaustive_decode,
    ml_decode_small,
)
from msinject.engine import CompiledProgram, ErrOp, trial_uniforms
from msinject.noise import NoiseModel
from msinject.protocol import build_memory
from msinject.sim import classify_pair


def test_zero_noise_graph_is_empty(small_zz_program):
    model = NoiseModel("A", 0.0, 1e4)
    graph = build_detector_graph(small_zz_program, model)
    assert graph.edges == []
    assert decode(graph, []).pairs == ()


def test_spacelike_edge_from_data_dephasing(small_zz_setup):
    """A data-qubit Z idle fault mid-memory fires two detectors in one round."""
    program, model, compiled, graph = small_zz_setup
    ops = {op.pos: op for op in compiled.ops}
    found = None
    for rec in enumerate_faults(compiled):
        tag, pos, g, k, coin = rec.key
        if tag != "err" or coin:
            continue
        op = ops[pos]
        if op.kind != "IdleMeas" or op.table.entries[k] != ("Z",):
            continue
        q = int(op.qs[g, 0])
        y, x = program.layout.data_coords[q]
        if y % 2 == 1 and rec.accepted and len(rec.events) == 2:
            rounds = {graph.nodes[e][1] for e in rec.events}
            if len(rounds) == 1 and 2 <= rounds.pop() <= program.dm:
                found = rec
                break
    assert found is not None


def test_timelike_edge_from_measurement_flip(small_zz_setup):
    program, model, compiled, graph = small_zz_setup
    for rec in enumerate_faults(compiled):
        if rec.key[0] != "meas" or not rec.accepted:
            continue
        if len(rec.events) == 2:
            (s1, r1), (s2, r2) = (graph.nodes[e] for e in rec.events)
            if 2 <= r1:
                assert s1 == s2
                assert abs(r1 - r2) == 1
                return
    pytest.fail("no time-like measurement fault found")


def test_single_edge_decodes_to_itself(small_zz_setup):
    program, model, compiled, graph = small_zz_setup
    edge = next(e for e in graph.edges if e.v is not None)
    result = decode(graph, [edge.u, edge.v])
    assert result.weight <= edge.weight + 1e-9
    if result.pairs == ((edge.u, edge.v),):
        assert result.logical == graph.pair_logical(edge.u, edge.v)


def test_every_dominant_single_fault_is_corrected(small_zz_setup):
    """Each pure-Z or measurement fault with detection events decodes to I."""
    program, model, compiled, graph = small_zz_setup
    ops = {op.pos: op for op in compiled.ops}
    checked = 0
    for rec in enumerate_faults(compiled):
        if not rec.accepted or not rec.events:
            continue
        tag, pos, g, k, coin = rec.key
        if tag == "err":
            letters = ops[pos].table.entries[k]
            if any(l in ("X", "Y") for l in letters):
                continue
        pred = decode(graph, list(rec.events)).logical
        assert classify_pair(rec.logical[0] ^ pred[0],
                             rec.logical[1] ^ pred[1]) == "I", rec
        checked += 1
    assert checked > 300


def test_weights_monotone_in_p(small_zz_program):
    g1 = build_detector_graph(small_zz_program, NoiseModel("A", 2e-4, 1e3))
    g2 = build_detector_graph(small_zz_program, NoiseModel("A", 4e-4, 1e3))
    e1 = {(e.u, e.v): e.weight for e in g1.edges}
    e2 = {(e.u, e.v): e.weight for e in g2.edges}
    common = set(e1) & set(e2)
    assert len(common) > 50
    assert all(e2[k] <= e1[k] + 1e-12 for k in common)


def test_decode_matches_exhaustive_on_random_instances(small_zz_setup):
    program, model, compiled, graph = small_zz_setup
    rng = np.random.default_rng(2024)
    for _ in range(150):
        k = rng.integers(1, 9)
        flagged = sorted(rng.choice(graph.n_nodes, size=k, replace=False))
        fast = decode(graph, [int(f) for f in flagged])
        slow = exhaustive_decode(graph, [int(f) for f in flagged])
        assert math.isclose(fast.weight, slow.weight, rel_tol=1e-6), flagged


def test_decode_on_sampled_shots_matches_exhaustive(small_zz_setup):
    program, model, compiled, graph = small_zz_setup
    U = trial_uniforms(31, 0, range(400), compiled.n_slots)
    meas, x, z = compiled.run(U)
    acc = compiled.acceptance(meas)
    det = compiled.detectors(meas)
    compared = 0
    for row in np.nonzero(acc)[0]:
        flagged = [int(i) for i in np.flatnonzero(det[row])]
        if not 0 < len(flagged) <= 10:
            continue
        fast = decode(graph, flagged)
        slow = exhaustive_decode(graph, flagged)
        assert math.isclose(fast.weight, slow.weight, rel_tol=1e-6)
        compared += 1
    assert compared > 30


def test_ml_table_on_memory_instance():
    """On the 1x3 pure-Z single-round memory, matching is never better than
    maximum likelihood, and both decode sampled shots consistently."""
    program = build_memory(1, 3, 1)
    model = NoiseModel("B", 1e-3, math.inf)
    compiled = CompiledProgram(program, model)
    graph = build_detector_graph(program, model, compiled)
    table = MLTable(compiled)
    U = trial_uniforms(5, 0, range(3000), compiled.n_slots)
    meas, x, z = compiled.run(U)
    det = compiled.detectors(meas)
    az, ax = compiled.logical_flips(x, z)
    mwpm_fail = ml_fail = 0
    for row in range(3000):
        flagged = [int(i) for i in np.flatnonzero(det[row])]
        actual = (bool(az[row]), bool(ax[row]))
        pred = decode(graph, flagged).logical if flagged else (False, False)
        mlp = table.decode(flagged)
        mwpm_fail += pred != actual
        ml_fail += mlp != actual
    assert ml_fail <= mwpm_fail   # ML dominance (exact table, same shots)


def test_ml_decode_small_on_trivial_syndrome():
    program = build_memory(1, 3, 1)
    model = NoiseModel("B", 1e-3, math.inf)
    assert ml_decode_small(program, model, []) == (False, False)


def test_ml_cap():
    program = make_program(dx2=3, dz2=5, dm=3)
    model = NoiseModel("A", 1e-3, 1e4)
    from msinject.decoder import TooLargeInstanceError

    with pytest.raises(TooLargeInstanceError):
        MLTable(CompiledProgram(program, model))


def test_graph_dump_matches_golden():
    from conftest import GOLDEN

    program = build_memory(1, 3, 1)
    model = NoiseModel("B", 1e-3, math.inf)
    dump = build_detector_graph(program, model).dump()
    assert dump == (GOLDEN / "graph_memory_1x3.txt").read_text()
