"""Shared test helpers: random objects, independent oracles, and circuit
generators."""

import numpy as np

from isolab import (
    AddAncilla,
    Circuit,
    DensityMatrix,
    PureState,
    TraceOut,
    dephase_gate,
    depolarize_gate,
    gate,
    swap_operator,
    unitary_gate,
)


def random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(v / np.linalg.norm(v))


def random_density(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m))


def random_unitary(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def tensor_oracle(a, b):
    """Kronecker product by direct index summation."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace_oracle(m, dims, keep):
    """Partial trace by naive nested-loop index summation."""
    keep = sorted(keep)
    traced = [i for i in range(len(dims)) if i not in keep]
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    out = np.zeros((d_keep, d_keep), dtype=complex)

    def flat(idx):
        x = 0
        for d, i in zip(dims, idx):
            x = x * d + i
        return x

    kept_dims = [dims[i] for i in keep]
    traced_dims = [dims[i] for i in traced]
    for row_kept in np.ndindex(*kept_dims) if keep else [()]:
        for col_kept in np.ndindex(*kept_dims) if keep else [()]:
            total = 0.0 + 0.0j
            for tr in np.ndindex(*traced_dims) if traced else [()]:
                row = [0] * len(dims)
                col = [0] * len(dims)
                for pos, i in zip(keep, row_kept):
                    row[pos] = i
                for pos, i in zip(keep, col_kept):
                    col[pos] = i
                for pos, i in zip(traced, tr):
                    row[pos] = i
                    col[pos] = i
                total += m[flat(row), flat(col)]
            r = flat_index(row_kept, kept_dims)
            c = flat_index(col_kept, kept_dims)
            out[r, c] = total
    return out


def flat_index(idx, dims):
    x = 0
    for d, i in zip(dims, idx):
        x = x * d + i
    return x


def power_iteration_opnorm(m, iters=20000, tol=1e-14, seed=0):
    """Largest singular value via power iteration on m* m."""
    rng = np.random.default_rng(seed)
    h = m.conj().T @ m
    x = rng.normal(size=h.shape[0]) + 1j * rng.normal(size=h.shape[0])
    x /= np.linalg.norm(x)
    last = 0.0
    for _ in range(iters):
        y = h @ x
        lam = float(np.real(np.vdot(x, y)))
        n = np.linalg.norm(y)
        if n == 0:
            return 0.0
        x = y / n
        if abs(lam - last) < tol:
            break
        last = lam
    return float(np.sqrt(max(lam, 0.0)))


def brute_force_min_opnorm(kraus_ops, d_in, n_samples=100_000, seed=1234, batch=20_000):
    """Smallest largest-output-eigenvalue over Haar-random extended pure
    inputs, evaluated in batches; an independent sampling oracle."""
    rng = np.random.default_rng(seed)
    d_out = kraus_ops[0].shape[0]
    best = np.inf
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        g = rng.normal(size=(m, d_in * d_in)) + 1j * rng.normal(size=(m, d_in * d_in))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        psi = g.reshape(m, d_in, d_in)
        dim = d_out * d_in
        mats = np.zeros((m, dim, dim), dtype=complex)
        for a in kraus_ops:
            w = np.einsum("oi,mir->mor", a, psi).reshape(m, dim)
            mats += np.einsum("mp,mq->mpq", w, w.conj())
        top = np.linalg.eigvalsh(mats)[:, -1]
        best = min(best, float(top.min()))
        done += m
    return best


def circuit_swap_test_probs(rho, d):
    """Swap-test outcome probabilities from the explicit ancilla circuit:
    Hadamard, controlled swap, Hadamard, measure the ancilla."""
    rho = np.asarray(rho, dtype=complex)
    dd = d * d
    w = swap_operator(d)
    cswap = np.zeros((2 * dd, 2 * dd), dtype=complex)
    cswap[:dd, :dd] = np.eye(dd)
    cswap[dd:, dd:] = w
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    u = np.kron(h, np.eye(dd)) @ cswap @ np.kron(h, np.eye(dd))
    anc0 = np.zeros((2, 2), dtype=complex)
    anc0[0, 0] = 1.0
    state = u @ np.kron(anc0, rho) @ u.conj().T
    p0 = float(np.real(np.trace(state[:dd, :dd])))
    p1 = float(np.real(np.trace(state[dd:, dd:])))
    return p0, p1


# ---------------------------------------------------------------------------
# Random circuit generation
# ---------------------------------------------------------------------------

_ONE_QUBIT = ["X", "Y", "Z", "H", "S", "T"]
_TWO_QUBIT = ["CNOT", "CZ", "SWAP"]


def random_circuit(rng, max_in=3, max_total=4, isometry_only=False, n_gates=None):
    """Seeded random circuit with bounded register size."""
    n_in = int(rng.integers(1, max_in + 1))
    count = n_in
    gates = []
    n_ops = int(rng.integers(1, 7)) if n_gates is None else n_gates
    for _ in range(n_ops):
        kinds = ["builtin", "umatrix"]
        if count < max_total:
            kinds.append("ancilla")
        if not isometry_only:
            if count > 1:
                kinds.append("traceout")
            kinds += ["dephase", "depolarize"]
        kind = str(rng.choice(kinds))
        if kind == "builtin":
            if count >= 2 and rng.random() < 0.4:
                name = str(rng.choice(_TWO_QUBIT))
                t = rng.choice(count, size=2, replace=False)
                gates.append(gate(name, int(t[0]), int(t[1])))
            else:
                gates.append(gate(str(rng.choice(_ONE_QUBIT)), int(rng.integers(count))))
        elif kind == "umatrix":
            k = 2 if count >= 2 and rng.random() < 0.4 else 1
            t = rng.choice(count, size=k, replace=False)
            gates.append(unitary_gate(random_unitary(rng, 2 ** k), *(int(x) for x in t)))
        elif kind == "ancilla":
            gates.append(AddAncilla())
            count += 1
        elif kind == "traceout":
            gates.append(TraceOut(int(rng.integers(count))))
            count -= 1
        elif kind == "dephase":
            gates.append(dephase_gate(int(rng.integers(count))))
        else:
            k = 2 if count >= 2 and rng.random() < 0.3 else 1
            t = rng.choice(count, size=k, replace=False)
            gates.append(depolarize_gate(*(int(x) for x in t)))
    return Circuit(n_in, gates)
