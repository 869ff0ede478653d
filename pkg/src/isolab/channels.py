"""Algebraic channel representations and isometry analysis.

A circuit defines a channel; this module converts it to its Choi matrix
and a minimal Kraus set, tests whether the channel is an exact isometry
(rank-one Choi matrix with A*A = I), and searches for the most mixing
pure input of the reference-extended channel. The reference space always
has the dimension of the input space, which suffices for the rank
criterion.
"""

import os
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, apply_circuit, apply_circuit_matrix, validate_circuit
from .linalg import (
    DensityMatrix,
    PureState,
    as_matrix,
    maximally_entangled_state,
    operator_norm,
    partial_trace,
    top_eigenpair,
    trace_norm,
)

DEFAULT_MAX_DIM = 2 ** 12
RANK_TOL = 1e-7
ISOMETRY_TOL = 1e-9
MAX_SEARCH_DIM_IN = 16
NEAR_ISOMETRY_PROBE_FLOOR = 0.5


class DimensionCapError(RuntimeError):
    """Raised when a computation would exceed the total dimension cap."""


class NotNearIsometryError(ValueError):
    """Raised when isometry extraction is asked of a channel whose basis
    probes come out too mixed."""


def max_total_dim() -> int:
    """Dimension cap for dense computations; the ISOLAB_MAX_DIM environment
    variable overrides the default of 4096 at the user's risk."""
    raw = os.environ.get("ISOLAB_MAX_DIM")
    return int(raw) if raw else DEFAULT_MAX_DIM


@dataclass(eq=False)
class ChannelHandle:
    """A channel given by its circuit, with dimension bookkeeping."""

    circuit: Circuit

    def __post_init__(self):
        validate_circuit(self.circuit)

    @property
    def n_in(self) -> int:
        return self.circuit.input_qubits

    @property
    def n_out(self) -> int:
        return self.circuit.output_qubits

    @property
    def dim_in(self) -> int:
        return 2 ** self.n_in

    @property
    def dim_out(self) -> int:
        return 2 ** self.n_out

    def __repr__(self):
        return f"ChannelHandle({self.dim_in} -> {self.dim_out})"


def apply_channel(ch: ChannelHandle, rho) -> DensityMatrix:
    """Channel action on a state of the input space."""
    return apply_circuit(ch.circuit, rho)


def apply_extended(ch: ChannelHandle, psi) -> DensityMatrix:
    """Output of the channel extended by an identity on a reference space of
    the input dimension, applied to a pure state on input (x) reference."""
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    if psi.dim != ch.dim_in ** 2:
        raise ValueError(
            f"dimension mismatch: extended input needs dim {ch.dim_in ** 2}, got {psi.dim}"
        )
    _check_cap(ch)
    return apply_circuit(ch.circuit, psi.density(), n_ref=ch.n_in)


def _check_cap(ch: ChannelHandle) -> None:
    cap = max_total_dim()
    peak = max(ch.circuit.qubit_counts())
    if ch.dim_out * ch.dim_in > cap or 2 ** (peak + ch.n_in) > cap:
        raise DimensionCapError(
            f"total dimension exceeds the cap of {cap} (set ISOLAB_MAX_DIM to override)"
        )


@dataclass(eq=False)
class ChoiMatrix:
    """Channel applied to half of a maximally entangled input, normalized to
    unit trace; lives on output (x) input."""

    dim_in: int
    dim_out: int
    matrix: DensityMatrix


def choi_of(ch: ChannelHandle) -> ChoiMatrix:
    """Choi matrix of the channel, computed by running the circuit on half
    of the maximally entangled state."""
    _check_cap(ch)
    phi = maximally_entangled_state(ch.dim_in)
    out = apply_circuit(ch.circuit, phi.density(), n_ref=ch.n_in)
    return ChoiMatrix(ch.dim_in, ch.dim_out, out)


@dataclass(eq=False)
class KrausSet:
    """Operators A_i with channel action X -> sum_i A_i X A_i*."""

    operators: list[np.ndarray]

    @property
    def dim_out(self) -> int:
        return self.operators[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.operators[0].shape[1]

    def apply(self, mat) -> np.ndarray:
        mat = as_matrix(mat)
        acc = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for a in self.operators:
            acc += a @ mat @ a.conj().T
        return acc

    def completeness_defect(self) -> float:
        acc = np.zeros((self.dim_in, self.dim_in), dtype=complex)
        for a in self.operators:
            acc += a.conj().T @ a
        return float(np.abs(acc - np.eye(self.dim_in)).max())


def choi_rank(choi: ChoiMatrix, rank_tol: float = RANK_TOL) -> int:
    w = np.linalg.eigvalsh(choi.matrix.matrix)
    return int(np.count_nonzero(w > rank_tol))


def kraus_from_choi(choi: ChoiMatrix, rank_tol: float = RANK_TOL) -> KrausSet:
    """Minimal Kraus set from the Choi eigendecomposition: one operator per
    eigenvalue above *rank_tol*, the eigenvector reshaped to an output-by-
    input matrix and scaled by sqrt(eigenvalue * dim_in)."""
    m = choi.matrix.matrix
    w, v = np.linalg.eigh(m)
    ops = []
    for i in range(len(w) - 1, -1, -1):
        if w[i] <= rank_tol:
            break
        a = np.sqrt(w[i] * choi.dim_in) * v[:, i].reshape(choi.dim_out, choi.dim_in)
        ops.append(a)
    return KrausSet(ops)


@dataclass
class ExactIsometryResult:
    choi_rank: int
    exact_isometry: bool
    isometry_operator: np.ndarray | None


def exact_isometry_test(
    ch: ChannelHandle, rank_tol: float = RANK_TOL
) -> ExactIsometryResult:
    """Exact isometry criterion: the Choi matrix has rank one and the single
    Kraus operator A satisfies A*A = I within 1e-9."""
    ks = kraus_from_choi(choi_of(ch), rank_tol)
    rank = len(ks.operators)
    if rank != 1:
        return ExactIsometryResult(rank, False, None)
    a = ks.operators[0]
    defect = float(np.abs(a.conj().T @ a - np.eye(ch.dim_in)).max())
    if defect > ISOMETRY_TOL:
        return ExactIsometryResult(rank, False, None)
    return ExactIsometryResult(rank, True, a)


# ---------------------------------------------------------------------------
# Worst-case output mixedness search
# ---------------------------------------------------------------------------

def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _output_and_slices(ops, psi: np.ndarray, d_in: int):
    pm = psi.reshape(d_in, d_in)
    ws = [(a @ pm).reshape(-1) for a in ops]
    dim = ws[0].shape[0]
    m = np.zeros((dim, dim), dtype=complex)
    for w in ws:
        m += np.outer(w, w.conj())
    return m, ws


def _descend_opnorm(ops, psi: np.ndarray, d_in: int, max_iter: int = 400):
    """Minimize the largest output eigenvalue over the unit sphere by
    projected gradient descent with backtracking; the subgradient comes
    from the top eigenvector. Stops when the improvement drops below
    1e-10."""
    d_out = ops[0].shape[0]
    m, ws = _output_and_slices(ops, psi, d_in)
    f, v = top_eigenpair(m)
    step = 0.5
    for _ in range(max_iter):
        vm = v.reshape(d_out, d_in)
        g = np.zeros_like(psi)
        for a, w in zip(ops, ws):
            g += np.vdot(v, w) * (a.conj().T @ vm).reshape(-1)
        g *= 2.0
        g_tan = g - np.real(np.vdot(psi, g)) * psi
        gn2 = float(np.real(np.vdot(g_tan, g_tan)))
        if gn2 < 1e-20:
            break
        step = min(step * 2.0, 1.0)
        improved = False
        while step > 1e-16:
            cand = psi - step * g_tan
            cand = cand / np.linalg.norm(cand)
            m_new, ws_new = _output_and_slices(ops, cand, d_in)
            f_new, v_new = top_eigenpair(m_new)
            if f_new <= f - 1e-4 * step * gn2:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = f - f_new
        psi, f, v, ws = cand, f_new, v_new, ws_new
        if gain < 1e-10:
            break
    return psi, float(f)


def min_output_opnorm(
    ch: ChannelHandle, restarts: int = 16, seed: int = 0
) -> tuple[float, PureState]:
    """Smallest largest-output-eigenvalue found over seeded random-restart
    local searches, with the minimizing extended pure input.

    The returned value is an upper bound on the true minimum; it is
    deterministic given the seed, and using more restarts with the same
    seed never increases it.
    """
    if ch.dim_in > MAX_SEARCH_DIM_IN:
        raise DimensionCapError(
            f"search supports input dimension up to {MAX_SEARCH_DIM_IN}, got {ch.dim_in}"
        )
    _check_cap(ch)
    ops = kraus_from_choi(choi_of(ch)).operators
    rng = np.random.default_rng(seed)
    best_val = np.inf
    best_psi = None
    for _ in range(max(1, int(restarts))):
        x0 = _random_unit(rng, ch.dim_in * ch.dim_in)
        psi, val = _descend_opnorm(ops, x0, ch.dim_in)
        if val < best_val:
            best_val, best_psi = val, psi
    return float(best_val), PureState(best_psi)


@dataclass
class IsometryReport:
    choi_rank: int
    exact_isometry: bool
    isometry_operator: np.ndarray | None
    min_output_opnorm: float
    minimizing_state: PureState
    classification: str
    epsilon: float


def analyze_channel(
    ch: ChannelHandle, epsilon: float, restarts: int = 16, seed: int = 0
) -> IsometryReport:
    """Full isometry report at a given promise parameter.

    Classification honors the promise gap: a yes-instance needs a found
    value at or below epsilon, a no-instance needs the exact-isometry
    certificate, and anything else stays indeterminate rather than
    guessing a lower bound the search cannot certify.
    """
    if not 0.0 <= epsilon < 0.5:
        raise ValueError("epsilon must lie in [0, 1/2)")
    iso = exact_isometry_test(ch)
    val, psi = min_output_opnorm(ch, restarts, seed)
    if iso.exact_isometry:
        classification = "no-instance"
    elif val <= epsilon:
        classification = "yes-instance"
    else:
        classification = "indeterminate"
    return IsometryReport(
        choi_rank=iso.choi_rank,
        exact_isometry=iso.exact_isometry,
        isometry_operator=iso.isometry_operator,
        min_output_opnorm=val,
        minimizing_state=psi,
        classification=classification,
        epsilon=epsilon,
    )


def classify_nonisometry(
    ch: ChannelHandle, epsilon: float, restarts: int = 16, seed: int = 0
) -> str:
    return analyze_channel(ch, epsilon, restarts, seed).classification


# ---------------------------------------------------------------------------
# Approximate isometry extraction
# ---------------------------------------------------------------------------

def _basis_probe_states(dim: int) -> list[np.ndarray]:
    return [np.eye(dim, dtype=complex)[:, i] for i in range(dim)]


def _probe_family(ch: ChannelHandle, seed: int, n_random: int):
    """Pure input probes: computational basis states, equal superpositions
    of basis pairs, and seeded random states."""
    d = ch.dim_in
    basis = _basis_probe_states(d)
    probes = [("basis", v) for v in basis]
    for i in range(d):
        for j in range(i + 1, d):
            probes.append(("superposition", (basis[i] + basis[j]) / np.sqrt(2.0)))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        probes.append(("random", _random_unit(rng, d)))
    return probes


def probe_epsilon(ch: ChannelHandle, seed: int = 0, n_random: int = 50) -> float:
    """Isometry defect measured as one minus the smallest output largest-
    eigenvalue over the finite probe family; a lower bound on the true
    worst-case defect."""
    worst = 1.0
    for _, v in _probe_family(ch, seed, n_random):
        out = apply_channel(ch, DensityMatrix.from_pure(v))
        worst = min(worst, operator_norm(out.matrix))
    return max(0.0, 1.0 - worst)


@dataclass
class ApproxIsometryDiagnostics:
    eps_measured: float
    max_distance: float
    basis_distance: float
    superposition_distance: float
    random_distance: float
    n_random_probes: int
    seed: int


def extract_approx_isometry(
    ch: ChannelHandle, seed: int = 0, n_random: int = 50
) -> tuple[np.ndarray, ApproxIsometryDiagnostics]:
    """Recover the isometry a near-isometric channel approximates.

    Column i is the top eigenvector of the channel output on the i-th
    basis state; relative phases are fixed against the first column by the
    top singular pair of the channel action on the |0><i| matrix unit.
    Diagnostics report the worst trace-norm distance between the channel
    output and conjugation by the recovered operator over a finite probe
    family, so they lower-bound the true worst case.
    """
    d_in = ch.dim_in
    basis_states = _basis_probe_states(d_in)
    basis_out = [
        apply_channel(ch, DensityMatrix.from_pure(v)).matrix for v in basis_states
    ]
    norms = [operator_norm(m) for m in basis_out]
    # The extended output on the maximally entangled state must also stay
    # nearly pure; it catches uniform mixers whose unextended basis outputs
    # sit exactly at the floor.
    entangled = operator_norm(
        apply_extended(ch, maximally_entangled_state(d_in)).matrix
    )
    floor = min(min(norms), entangled)
    if floor < NEAR_ISOMETRY_PROBE_FLOOR:
        raise NotNearIsometryError(
            f"channel is not near-isometric: probe output largest eigenvalue "
            f"{floor:.4f} < {NEAR_ISOMETRY_PROBE_FLOOR}"
        )
    columns = [top_eigenpair(m)[1] for m in basis_out]
    phases = [1.0 + 0.0j]
    for i in range(1, d_in):
        unit = np.zeros((d_in, d_in), dtype=complex)
        unit[0, i] = 1.0
        x = apply_circuit_matrix(ch.circuit, unit)
        u, _, vh = np.linalg.svd(x)
        w = np.vdot(columns[0], u[:, 0]) * np.vdot(vh[0].conj(), columns[i])
        phases.append(np.conj(w) / abs(w) if abs(w) > 1e-12 else 1.0 + 0.0j)
    a = np.stack([c * col for c, col in zip(phases, columns)], axis=1)

    dists = {"basis": 0.0, "superposition": 0.0, "random": 0.0}
    worst_opnorm = 1.0
    for label, v in _probe_family(ch, seed, n_random):
        proj = np.outer(v, v.conj())
        out = apply_circuit_matrix(ch.circuit, proj)
        worst_opnorm = min(worst_opnorm, operator_norm(out))
        dist = trace_norm(out - a @ proj @ a.conj().T)
        dists[label] = max(dists[label], dist)
    diag = ApproxIsometryDiagnostics(
        eps_measured=max(0.0, 1.0 - worst_opnorm),
        max_distance=max(dists.values()),
        basis_distance=dists["basis"],
        superposition_distance=dists["superposition"],
        random_distance=dists["random"],
        n_random_probes=n_random,
        seed=seed,
    )
    return a, diag


def choi_marginal(choi: ChoiMatrix) -> np.ndarray:
    """Partial trace of the Choi matrix over the output factor; equals
    I/dim_in exactly when the channel preserves trace."""
    return partial_trace(choi.matrix.matrix, [choi.dim_out, choi.dim_in], keep=[1])
