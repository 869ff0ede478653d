"""Swap-test verification of channel mixing.

The verifier receives a witness on two copies of input (x) reference,
projects it onto the symmetric subspace with a swap test, applies the
reference-extended channel to each copy, and accepts only when a second
swap test on the output returns the antisymmetric outcome. A channel far
from an isometry admits witnesses accepted with probability near one
half; a channel close to an isometry keeps symmetric states nearly
symmetric, so every witness is accepted with probability close to zero.

Note on the accept condition: an alternative convention accepts the
*symmetric* outcome of the second test. That reading is inconsistent
with the acceptance lower bound (1 - eps)/2, which is exactly the
antisymmetric-outcome probability of the swap test on two copies of a
mixed output, so this implementation accepts on the antisymmetric
outcome.
"""

from dataclasses import dataclass, replace
from math import isqrt

import numpy as np

from .channels import (
    ChannelHandle,
    DimensionCapError,
    choi_of,
    exact_isometry_test,
    kraus_from_choi,
    max_total_dim,
    min_output_opnorm,
    probe_epsilon,
)
from .linalg import DensityMatrix, PureState, as_matrix

PROB_FLOOR = 1e-12


@dataclass(eq=False)
class WitnessState:
    """Witness density matrix on two copies of input (x) reference."""

    state: DensityMatrix

    @property
    def dim(self) -> int:
        return self.state.dim


@dataclass
class SwapTestResult:
    p_symmetric: float
    p_antisymmetric: float
    post_symmetric: DensityMatrix | None
    post_antisymmetric: DensityMatrix | None


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def swap_test(rho) -> SwapTestResult:
    """Two-outcome measurement with projectors (I +/- W)/2 on a bipartite
    state with equal factor dimensions.

    Post-measurement states are the renormalized projections; they are
    None when the outcome probability is below 1e-12. On a two-copy input
    sigma (x) sigma the antisymmetric probability is (1 - tr(sigma^2))/2.
    """
    m = as_matrix(rho)
    total = m.shape[0]
    d = isqrt(total)
    if d * d != total or m.shape[0] != m.shape[1]:
        raise ValueError("non-square bipartition: matrix dimension is not d*d")
    t = m.reshape(d, d, d, d)
    w_rho = t.transpose(1, 0, 2, 3)
    rho_w = t.transpose(0, 1, 3, 2)
    w_rho_w = t.transpose(1, 0, 3, 2)
    tr_rho = float(np.real(np.trace(m)))
    tr_w_rho = float(np.real(np.einsum("abba->", t)))
    p_sym = _clamp01((tr_rho + tr_w_rho) / 2.0)
    p_anti = _clamp01((tr_rho - tr_w_rho) / 2.0)

    def _post(sign: float, p: float) -> DensityMatrix | None:
        if p < PROB_FLOOR:
            return None
        block = (t + sign * w_rho + sign * rho_w + w_rho_w) / 4.0
        return DensityMatrix(block.reshape(total, total) / p)

    return SwapTestResult(p_sym, p_anti, _post(1.0, p_sym), _post(-1.0, p_anti))


@dataclass
class ShotStats:
    n: int
    accepts: int
    seed: int


@dataclass
class ProtocolResult:
    p_step1_symmetric: float
    p_step3_antisymmetric_given_step1: float
    p_accept: float
    shots: ShotStats | None = None


def honest_witness(ch: ChannelHandle, psi) -> WitnessState:
    """Two unentangled copies of a pure extended input; such witnesses pass
    the first swap test with probability one."""
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    if psi.dim != ch.dim_in ** 2:
        raise ValueError(
            f"dimension mismatch: witness halves need dim {ch.dim_in ** 2}, got {psi.dim}"
        )
    v = np.kron(psi.amplitudes, psi.amplitudes)
    return WitnessState(DensityMatrix.from_pure(PureState(v)))


def _coerce_witness(ch: ChannelHandle, witness) -> DensityMatrix:
    dm = witness.state if isinstance(witness, WitnessState) else DensityMatrix(witness)
    needed = ch.dim_in ** 4
    if dm.dim != needed:
        raise ValueError(
            f"dimension mismatch: witness needs dim {needed}, got {dm.dim}"
        )
    return dm


def _parallel_extended_output(ch: ChannelHandle, mat: np.ndarray) -> np.ndarray:
    """Apply the reference-extended channel to each copy of a two-copy
    state, one copy at a time."""
    d_in, d_out = ch.dim_in, ch.dim_out
    d_half_in = d_in * d_in
    d_half_out = d_out * d_in
    raw = kraus_from_choi(choi_of(ch)).operators
    ext = [np.kron(a, np.eye(d_in, dtype=complex)) for a in raw]

    first = [np.kron(b, np.eye(d_half_in, dtype=complex)) for b in ext]
    mid = np.zeros((d_half_out * d_half_in, d_half_out * d_half_in), dtype=complex)
    for k in first:
        mid += k @ mat @ k.conj().T

    second = [np.kron(np.eye(d_half_out, dtype=complex), b) for b in ext]
    out = np.zeros((d_half_out * d_half_out, d_half_out * d_half_out), dtype=complex)
    for k in second:
        out += k @ mid @ k.conj().T
    return out


def run_protocol_exact(ch: ChannelHandle, witness) -> ProtocolResult:
    """Exact outcome probabilities of the two swap tests.

    Step 1 projects the witness onto the symmetric subspace (rejecting on
    the antisymmetric outcome), step 2 applies the extended channel to
    each copy, and step 3 accepts on the antisymmetric outcome, so
    p_accept is the product of the step-1 symmetric probability and the
    conditional step-3 antisymmetric probability.
    """
    dm = _coerce_witness(ch, witness)
    cap = max_total_dim()
    out_dim = (ch.dim_out * ch.dim_in) ** 2
    if dm.dim > cap or out_dim > cap:
        raise DimensionCapError(
            f"protocol dimension exceeds the cap of {cap} (set ISOLAB_MAX_DIM to override)"
        )
    step1 = swap_test(dm)
    p1 = step1.p_symmetric
    if step1.post_symmetric is None:
        return ProtocolResult(p1, 0.0, 0.0)
    sigma = _parallel_extended_output(ch, step1.post_symmetric.matrix)
    step3 = swap_test(DensityMatrix(sigma))
    p3 = step3.p_antisymmetric
    return ProtocolResult(p1, p3, p1 * p3)


def run_protocol_sampled(
    ch: ChannelHandle, witness, shots: int, seed: int = 0
) -> ProtocolResult:
    """Monte Carlo shots over the exact per-step distributions.

    Each shot draws one uniform for the step-1 outcome and one for the
    conditional step-3 outcome; the accept count is deterministic given
    the seed.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    exact = run_protocol_exact(ch, witness)
    rng = np.random.default_rng(seed)
    u1 = rng.random(shots)
    u2 = rng.random(shots)
    accepted = (u1 < exact.p_step1_symmetric) & (
        u2 < exact.p_step3_antisymmetric_given_step1
    )
    return replace(exact, shots=ShotStats(shots, int(np.count_nonzero(accepted)), seed))


def _swap_halves(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d).T.reshape(-1)


def symmetric_witness_family(
    ch: ChannelHandle, n_random: int = 20, seed: int = 0
) -> list[WitnessState]:
    """Seeded family of symmetric witnesses: honest two-copy witnesses over
    the full computational basis of input (x) reference, plus random pure
    states projected onto the symmetric subspace."""
    d_half = ch.dim_in ** 2
    eye = np.eye(d_half, dtype=complex)
    family = [honest_witness(ch, PureState(eye[:, i])) for i in range(d_half)]
    rng = np.random.default_rng(seed)
    while len(family) < d_half + n_random:
        v = rng.normal(size=d_half * d_half) + 1j * rng.normal(size=d_half * d_half)
        v = (v + _swap_halves(v, d_half)) / 2.0
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            continue
        family.append(WitnessState(DensityMatrix.from_pure(PureState(v / norm))))
    return family


@dataclass
class CompletenessCheck:
    """Best mixing witness found and the acceptance floor it certifies."""

    min_opnorm: float
    p_accept: float
    lower_bound: float
    holds: bool


@dataclass
class SoundnessCheck:
    """Acceptance ceiling over a sampled witness family.

    The bound is universally quantified over witnesses, which no finite
    family certifies; this check reports sampled evidence only.
    """

    exact_isometry: bool
    epsilon_used: float
    epsilon_source: str
    max_p_accept: float
    upper_bound: float
    holds: bool
    n_witnesses: int
    seed: int
    evidence: str = "sampled"


@dataclass
class ProtocolBoundsReport:
    completeness: CompletenessCheck
    soundness: SoundnessCheck


def check_protocol_bounds(
    ch: ChannelHandle,
    epsilon: float | None = None,
    n_random_witnesses: int = 20,
    restarts: int = 16,
    seed: int = 0,
) -> ProtocolBoundsReport:
    """Numerically exercise both acceptance bounds of the protocol.

    Completeness: the honest witness built from the mixing search's
    minimizer must be accepted with probability at least (1 - m)/2 where m
    is the found output eigenvalue. Soundness: over the seeded symmetric
    witness family, acceptance must stay at zero for exact isometries and
    below 9 * epsilon otherwise, with epsilon taken from the caller or
    measured from probe states.
    """
    m_val, psi = min_output_opnorm(ch, restarts=restarts, seed=seed)
    honest = run_protocol_exact(ch, honest_witness(ch, psi))
    lower = (1.0 - m_val) / 2.0
    completeness = CompletenessCheck(
        min_opnorm=m_val,
        p_accept=honest.p_accept,
        lower_bound=lower,
        holds=honest.p_accept >= lower - 1e-6,
    )

    iso = exact_isometry_test(ch)
    family = symmetric_witness_family(ch, n_random=n_random_witnesses, seed=seed)
    max_p = max(run_protocol_exact(ch, w).p_accept for w in family)
    if iso.exact_isometry:
        soundness = SoundnessCheck(
            exact_isometry=True,
            epsilon_used=0.0,
            epsilon_source="exact",
            max_p_accept=max_p,
            upper_bound=0.0,
            holds=max_p <= 1e-9,
            n_witnesses=len(family),
            seed=seed,
        )
    else:
        if epsilon is not None:
            eps, source = float(epsilon), "given"
        else:
            eps, source = probe_epsilon(ch, seed=seed), "probes"
        soundness = SoundnessCheck(
            exact_isometry=False,
            epsilon_used=eps,
            epsilon_source=source,
            max_p_accept=max_p,
            upper_bound=9.0 * eps,
            holds=max_p <= 9.0 * eps + 1e-6,
            n_witnesses=len(family),
            seed=seed,
        )
    return ProtocolBoundsReport(completeness, soundness)
