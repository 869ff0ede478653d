import numpy as np
import pytest

from conftest import circuit_swap_test_probs, random_circuit, random_density, random_pure
from isolab import (
    ChannelHandle,
    DensityMatrix,
    PureState,
    WitnessState,
    append_output_depolarizing,
    check_protocol_bounds,
    honest_witness,
    maximally_entangled_state,
    parse_circuit,
    run_protocol_exact,
    run_protocol_sampled,
    swap_test,
    symmetric_witness_family,
    tensor,
)

DEPOLARIZER = "qubits 1\nchannel depolarize 0\n"
COPY = "qubits 1\nancilla\ngate CNOT 0 1\n"


def handle(src):
    return ChannelHandle(parse_circuit(src))


class TestSwapTest:
    def test_pure_product_is_symmetric(self):
        rng = np.random.default_rng(60)
        psi = random_pure(rng, 3)
        rho = DensityMatrix(tensor(psi.projector(), psi.projector()))
        res = swap_test(rho)
        assert res.p_antisymmetric == pytest.approx(0.0, abs=1e-12)
        assert res.p_symmetric == pytest.approx(1.0, abs=1e-12)
        assert res.post_antisymmetric is None

    def test_two_maximally_mixed_qubits(self):
        rho = DensityMatrix.maximally_mixed(4)
        res = swap_test(rho)
        assert res.p_antisymmetric == pytest.approx(0.25, abs=1e-12)

    def test_two_copy_purity_formula(self):
        rng = np.random.default_rng(61)
        for _ in range(50):
            d = int(rng.integers(2, 5))
            sigma = random_density(rng, d)
            res = swap_test(DensityMatrix(tensor(sigma, sigma)))
            expected = 0.5 - 0.5 * purity(sigma)
            assert res.p_antisymmetric == pytest.approx(expected, abs=1e-10)
            assert res.p_symmetric + res.p_antisymmetric == pytest.approx(1.0, abs=1e-10)

    def test_post_states_valid_and_orthogonal_fractions(self):
        rng = np.random.default_rng(62)
        rho = random_density(rng, 9)
        res = swap_test(rho)
        for post in (res.post_symmetric, res.post_antisymmetric):
            assert post is not None
            assert np.trace(post.matrix) == pytest.approx(1.0, abs=1e-10)
            again = swap_test(post)
        assert swap_test(res.post_symmetric).p_symmetric == pytest.approx(1.0, abs=1e-10)
        assert swap_test(res.post_antisymmetric).p_antisymmetric == pytest.approx(1.0, abs=1e-10)

    def test_matches_circuit_realization(self):
        rng = np.random.default_rng(63)
        for d in (2, 3):
            rho = random_density(rng, d * d)
            res = swap_test(rho)
            p_sym, p_anti = circuit_swap_test_probs(rho.matrix, d)
            assert res.p_symmetric == pytest.approx(p_sym, abs=1e-9)
            assert res.p_antisymmetric == pytest.approx(p_anti, abs=1e-9)

    def test_non_square_bipartition(self):
        with pytest.raises(ValueError, match="non-square bipartition"):
            swap_test(DensityMatrix.maximally_mixed(6))


def purity(rho):
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))


class TestHonestWitness:
    def test_swap_invariant(self):
        ch = handle(DEPOLARIZER)
        w = honest_witness(ch, maximally_entangled_state(2))
        assert w.dim == 16
        m = w.state.matrix
        t = m.reshape(4, 4, 4, 4).transpose(1, 0, 3, 2).reshape(16, 16)
        assert np.abs(m - t).max() < 1e-12

    def test_passes_first_test_with_probability_one(self):
        rng = np.random.default_rng(64)
        ch = handle(COPY)
        w = honest_witness(ch, random_pure(rng, 4))
        assert swap_test(w.state).p_symmetric == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            honest_witness(handle(DEPOLARIZER), random_pure(np.random.default_rng(0), 8))


class TestProtocolExact:
    def test_isometry_never_accepts(self):
        rng = np.random.default_rng(65)
        ch = handle(COPY)
        for w in [
            honest_witness(ch, random_pure(rng, 4)),
            WitnessState(random_density(rng, 16)),
        ]:
            res = run_protocol_exact(ch, w)
            assert res.p_accept <= 1e-9

    def test_depolarizer_on_max_entangled(self):
        ch = handle(DEPOLARIZER)
        res = run_protocol_exact(ch, honest_witness(ch, maximally_entangled_state(2)))
        assert res.p_step1_symmetric == pytest.approx(1.0, abs=1e-9)
        assert res.p_step3_antisymmetric_given_step1 == pytest.approx(0.375, abs=1e-9)
        assert res.p_accept == pytest.approx(0.375, abs=1e-9)

    def test_probability_bounds_and_product(self):
        rng = np.random.default_rng(66)
        for _ in range(10):
            circ = random_circuit(rng, max_in=1, max_total=3)
            ch = ChannelHandle(circ)
            w = WitnessState(random_density(rng, 16))
            res = run_protocol_exact(ch, w)
            assert -1e-9 <= res.p_accept <= 1 + 1e-9
            assert res.p_accept == pytest.approx(
                res.p_step1_symmetric * res.p_step3_antisymmetric_given_step1, abs=1e-9
            )

    def test_witness_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            run_protocol_exact(handle(DEPOLARIZER), WitnessState(DensityMatrix.maximally_mixed(8)))

    def test_fully_antisymmetric_witness_always_rejected(self):
        vec = np.zeros(16, dtype=complex)
        vec[1] = 1 / np.sqrt(2)   # |01> of the two copies
        vec[4] = -1 / np.sqrt(2)  # -|10>
        res = run_protocol_exact(handle(DEPOLARIZER), WitnessState(DensityMatrix.from_pure(PureState(vec))))
        assert res.p_step1_symmetric <= 1e-12
        assert res.p_accept == 0.0


class TestProtocolSampled:
    def test_isometry_zero_accepts(self):
        ch = handle(COPY)
        w = honest_witness(ch, maximally_entangled_state(2))
        res = run_protocol_sampled(ch, w, shots=10_000, seed=5)
        assert res.shots.accepts == 0

    def test_depolarizer_frequency(self):
        ch = handle(DEPOLARIZER)
        w = honest_witness(ch, maximally_entangled_state(2))
        res = run_protocol_sampled(ch, w, shots=100_000, seed=6)
        assert abs(res.shots.accepts / res.shots.n - 0.375) < 0.01

    def test_deterministic(self):
        ch = handle(DEPOLARIZER)
        w = honest_witness(ch, maximally_entangled_state(2))
        a = run_protocol_sampled(ch, w, shots=5_000, seed=7)
        b = run_protocol_sampled(ch, w, shots=5_000, seed=7)
        assert a.shots.accepts == b.shots.accepts

    def test_frequency_concentration(self):
        # Over 100 seeded runs, the observed frequency stays within the
        # four-sigma binomial band around the exact value in at least 99.
        ch = handle(DEPOLARIZER)
        w = honest_witness(ch, maximally_entangled_state(2))
        exact = run_protocol_exact(ch, w).p_accept
        shots = 100_000
        band = 4 * np.sqrt(exact * (1 - exact) / shots)
        hits = 0
        for seed in range(100):
            res = run_protocol_sampled(ch, w, shots=shots, seed=seed)
            if abs(res.shots.accepts / shots - exact) <= band:
                hits += 1
        assert hits >= 99


class TestSymmetricFamily:
    def test_family_is_symmetric(self):
        ch = handle(DEPOLARIZER)
        fam = symmetric_witness_family(ch, n_random=6, seed=8)
        assert len(fam) == 4 + 6
        for w in fam:
            assert swap_test(w.state).p_symmetric == pytest.approx(1.0, abs=1e-9)

    def test_isometry_step3_never_antisymmetric(self):
        ch = handle(COPY)
        for w in symmetric_witness_family(ch, n_random=8, seed=9):
            res = run_protocol_exact(ch, w)
            assert res.p_step3_antisymmetric_given_step1 <= 1e-9


class TestProtocolBounds:
    def test_depolarizer_completeness_equality(self):
        rep = check_protocol_bounds(handle(DEPOLARIZER), n_random_witnesses=4, restarts=6, seed=10)
        assert rep.completeness.holds
        assert rep.completeness.p_accept == pytest.approx(0.375, abs=1e-9)
        assert rep.completeness.lower_bound == pytest.approx(0.375, abs=1e-3)

    def test_identity_soundness_zero(self):
        rep = check_protocol_bounds(handle("qubits 1\n"), n_random_witnesses=6, restarts=2, seed=11)
        assert rep.soundness.exact_isometry
        assert rep.soundness.max_p_accept <= 1e-9
        assert rep.soundness.holds

    def test_noisy_isometry_soundness(self):
        noisy = append_output_depolarizing(parse_circuit(COPY), 0.005)
        rep = check_protocol_bounds(ChannelHandle(noisy), n_random_witnesses=8, restarts=4, seed=12)
        assert not rep.soundness.exact_isometry
        assert rep.soundness.epsilon_source == "probes"
        assert rep.soundness.holds
        assert rep.soundness.max_p_accept <= 9 * rep.soundness.epsilon_used + 1e-6
