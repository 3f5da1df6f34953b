"""Shared test oracles.

The dense simulator executes a stage-1 program exactly on a state vector
(branching on measurement outcomes), independent of the Pauli-frame engine.
Small systems only.
"""

import numpy as np

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
Z1 = np.diag([1.0, -1.0])
X1 = np.array([[0, 1], [1, 0.0]])
CX4 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0.0]]
)  # control is the first qubit
CZ4 = np.diag([1, 1, 1, -1.0])


def kron_at(op, q, n):
    out = np.array([[1.0 + 0j]])
    for i in range(n):
        out = np.kron(out, op if i == q else np.eye(2))
    return out


def two_qubit(op4, a, b, n):
    dim = 2 ** n
    U = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
        for va in range(2):
            for vb in range(2):
                amp = op4[2 * va + vb, 2 * bits[a] + bits[b]]
                if amp:
                    nb = bits[:]
                    nb[a], nb[b] = va, vb
                    j = 0
                    for bit in nb:
                        j = (j << 1) | bit
                    U[j, idx] += amp
    return U


def run_stage1_dense(program, inject=None):
    """All measurement branches of a noiseless stage-1 run.

    ``inject``: optional (timestep label, pauli matrix ops list) applied when
    that timestep begins.  Returns a list of (state, outcome records) where a
    record is ((stage, round, stab), sign, branch weight).
    """
    n = program.layout.n_qubits
    theta = program.theta
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    branches = [(psi, [])]
    for step in program.timesteps:
        if inject and step.label == inject[0]:
            for op in inject[1]:
                branches = [(op @ s, o) for s, o in branches]
        for loc in step.locations:
            if loc.kind in ("PrepX", "PrepAncX"):
                U = kron_at(H, loc.qubits[0], n)
                branches = [(U @ s, o) for s, o in branches]
            elif loc.kind == "PrepZ" or loc.kind == "Idle":
                pass
            elif loc.kind == "RotZ":
                diag = np.ones(2 ** n, dtype=complex)
                for idx in range(2 ** n):
                    par = 0
                    for q in loc.qubits:
                        par ^= (idx >> (n - 1 - q)) & 1
                    diag[idx] = np.exp(-1j * theta * (1 - 2 * par))
                branches = [(diag * s, o) for s, o in branches]
            elif loc.kind == "CX":
                U = two_qubit(CX4, loc.qubits[0], loc.qubits[1], n)
                branches = [(U @ s, o) for s, o in branches]
            elif loc.kind == "CZ":
                U = two_qubit(CZ4, loc.qubits[0], loc.qubits[1], n)
                branches = [(U @ s, o) for s, o in branches]
            elif loc.kind in ("MR", "Meas"):
                anc = loc.qubits[0]
                Xa = kron_at(X1, anc, n)
                new = []
                for s, o in branches:
                    for sign in (+1, -1):
                        proj = (s + sign * (Xa @ s)) / 2
                        w = np.vdot(proj, proj).real
                        if w > 1e-12:
                            st = proj / np.sqrt(w)
                            if loc.kind == "MR":  # measure-and-reset to |0>
                                st = kron_at(H, anc, n) @ st
                                if sign < 0:
                                    st = kron_at(X1, anc, n) @ st
                            new.append((st, o + [(loc.meta, sign, w)]))
                branches = new
            else:
                raise ValueError(loc.kind)
    return branches


def pauli_matrix(pauli, n):
    """Dense matrix of a PauliString (phases from Y included)."""
    out = np.array([[1.0 + 0j]])
    mats = {"I": np.eye(2), "X": X1, "Z": Z1,
            "Y": np.array([[0, -1j], [1j, 0]])}
    for q in range(n):
        out = np.kron(out, mats[pauli.letter(q)])
    return out
