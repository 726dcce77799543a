"""Tests for the Kraus- and Choi-route trainers and their costs."""

import numpy as np
import pytest

from cqpt import channels, manifold, metrics, tomography
from cqpt.channels import ChannelSpec, choi_of
from cqpt.qla import RngStream, haar_unitary, partial_trace
from cqpt.tomography import (TrainerConfig, choi_from_stack, choi_overlaps,
                             cost_choi, cost_choi_stack, cost_kraus,
                             finite_difference_grad, grad_choi_stack,
                             grad_kraus, kraus_to_stack, make_dataset,
                             reconstruct_state, recover_input,
                             riemannian_descent, stack_to_kraus, train_choi,
                             train_kraus)


def _haar_target(n, seed):
    return ChannelSpec("unitary", n, unitary=haar_unitary(2**n, RngStream(seed)))


def _test_densities(data):
    return [np.outer(w[:, 0], w[:, 0].conj()) for w in data]


class TestTrainerConfig:
    def test_defaults_valid(self):
        TrainerConfig()

    @pytest.mark.parametrize("kwargs", [
        {"learning_rate": 0.0},
        {"learning_rate": 11.0},
        {"cost_tol_rel": 0.0},
        {"cost_tol_rel": 1.0},
        {"kraus_terms": 0},
        {"gradient_mode": "autodiff"},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainerConfig(**kwargs)


class TestDataset:
    def test_default_counts(self):
        assert make_dataset(1, rng=RngStream(0)).shape == (6, 2, 2)
        assert make_dataset(2, rng=RngStream(0)).shape == (36, 4, 4)

    def test_seed_determinism(self):
        a = make_dataset(1, rng=RngStream(5))
        b = make_dataset(1, rng=RngStream(5))
        np.testing.assert_array_equal(a, b)

    def test_requires_rng(self):
        with pytest.raises(ValueError, match="RngStream"):
            make_dataset(1)

    def test_elements_are_unitary(self):
        for w in make_dataset(1, rng=RngStream(1)):
            assert np.linalg.norm(w.conj().T @ w - np.eye(2)) < 1e-12


class TestStackConversions:
    def test_round_trip(self):
        kraus = channels.kraus_of(ChannelSpec("amplitude_damping", 1, gamma=0.3))
        np.testing.assert_array_equal(
            stack_to_kraus(kraus_to_stack(kraus), 2), kraus)

    def test_rejects_incompatible_shape(self):
        with pytest.raises(ValueError, match="incompatible"):
            stack_to_kraus(np.zeros((5, 2)), 2)


class TestCostKraus:
    def test_fixed_point(self):
        for n in (1, 2):
            target = _haar_target(n, n)
            data = make_dataset(n, rng=RngStream(10 + n))
            stack = kraus_to_stack(np.array([target.unitary]))
            assert abs(cost_kraus(stack, target, data)) <= 1e-12

    def test_orthogonal_target_costs_one(self):
        # target sigma_x, trainable identity, single state |0>: the flipped
        # output never overlaps the expected output
        target = ChannelSpec("unitary", 1,
                             unitary=np.array([[0, 1], [1, 0]], dtype=complex))
        data = np.array([np.eye(2, dtype=complex)])
        stack = kraus_to_stack(np.array([np.eye(2, dtype=complex)]))
        np.testing.assert_allclose(cost_kraus(stack, target, data), 1.0,
                                   atol=1e-12)

    def test_bounded_on_random_points(self):
        target = _haar_target(1, 3)
        data = make_dataset(1, rng=RngStream(4))
        rng = RngStream(5)
        for _ in range(20):
            stack = manifold.random_stiefel(4, 2, rng)
            assert 0.0 <= cost_kraus(stack, target, data) <= 1.0

    def test_rejects_noise_target(self):
        data = make_dataset(1, rng=RngStream(0))
        with pytest.raises(ValueError, match="unitary"):
            cost_kraus(np.eye(2), ChannelSpec("dephasing", 1, gamma=0.1), data)


class TestGradKraus:
    def test_matches_finite_differences(self):
        rng = RngStream(6)
        for n in (1, 2):
            target = _haar_target(n, 20 + n)
            data = make_dataset(n, rng=rng.substream(n))
            d = 2**n
            stack = manifold.random_stiefel(2 * d, d, rng.substream(50 + n))
            analytic = grad_kraus(stack, target, data)
            fd = finite_difference_grad(
                lambda s: cost_kraus(s, target, data), stack)
            rel = np.linalg.norm(analytic - fd) / np.linalg.norm(fd)
            assert rel < 1e-5

    def test_riemannian_grad_vanishes_at_solution(self):
        target = _haar_target(1, 7)
        data = make_dataset(1, rng=RngStream(8))
        stack = kraus_to_stack(np.array([target.unitary]))
        rgrad = manifold.project_to_tangent(stack,
                                            grad_kraus(stack, target, data))
        assert np.linalg.norm(rgrad) < 1e-8

    def test_descent_direction(self):
        target = _haar_target(1, 9)
        data = make_dataset(1, rng=RngStream(10))
        stack = manifold.random_stiefel(4, 2, RngStream(11))
        rgrad = manifold.project_to_tangent(stack,
                                            grad_kraus(stack, target, data))
        base = cost_kraus(stack, target, data)
        stepped = manifold.retract(stack, -1e-4 * rgrad, "cayley")
        assert cost_kraus(stepped, target, data) < base


class TestCostChoi:
    @pytest.mark.parametrize("spec", [
        ChannelSpec("dephasing", 1, gamma=0.5),
        ChannelSpec("depolarizing", 1, p=0.5),
        ChannelSpec("amplitude_damping", 1, gamma=0.5),
        ChannelSpec("dephasing", 2, gamma=0.3),
    ], ids=lambda s: f"{s.kind}-N{s.num_qubits}")
    def test_fixed_point(self, spec):
        data = make_dataset(spec.num_qubits, rng=RngStream(12))
        assert cost_choi(choi_of(spec), spec, data) <= 1e-8

    def test_overlaps_at_fixed_point(self):
        spec = ChannelSpec("amplitude_damping", 1, gamma=0.4)
        data = make_dataset(1, rng=RngStream(13))
        overlaps = choi_overlaps(choi_of(spec), spec, data)
        np.testing.assert_allclose(overlaps, np.ones(6), atol=1e-10)

    def test_hadamard_overlap_half(self):
        # trainable J = identity channel, target = full dephasing, single
        # input |+>: the recovered state is E(rho) = I/2 itself, overlapping
        # the pure input at exactly Tr[rho I/2] = 1/2
        h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        data = np.array([h])
        target = ChannelSpec("dephasing", 1, gamma=1.0)
        j_id = choi_of(ChannelSpec("unitary", 1, unitary=np.eye(2)))
        overlap = choi_overlaps(j_id, target, data)[0]
        np.testing.assert_allclose(overlap, 0.5, atol=1e-12)
        assert cost_choi(j_id, target, data) > 0.1

    def test_nonnegative_on_random_stacks(self):
        spec = ChannelSpec("dephasing", 1, gamma=0.3)
        data = make_dataset(1, rng=RngStream(14))
        rng = RngStream(15)
        for _ in range(10):
            stack = manifold.random_stiefel(8, 2, rng)
            assert cost_choi_stack(stack, spec, data) >= 0.0


class TestGradChoiStack:
    def test_matches_finite_differences(self):
        spec = ChannelSpec("amplitude_damping", 1, gamma=0.4)
        data = make_dataset(1, rng=RngStream(16))
        rng = RngStream(17)
        for _ in range(3):
            stack = tomography._near_identity_stack(4, 2, rng, mix=0.05)
            analytic = grad_choi_stack(stack, spec, data)
            fd = finite_difference_grad(
                lambda s: cost_choi_stack(s, spec, data), stack, step=1e-6)
            rel = np.linalg.norm(analytic - fd) / np.linalg.norm(fd)
            assert rel < 1e-4


class TestRiemannianDescent:
    def _run(self, **kwargs):
        target = _haar_target(1, 18)
        data = make_dataset(1, rng=RngStream(19))
        init = manifold.random_stiefel(4, 2, RngStream(20))
        config = TrainerConfig(**kwargs)
        return riemannian_descent(
            lambda s: cost_kraus(s, target, data),
            lambda s: grad_kraus(s, target, data), init, config)

    def test_cost_monotone_nonincreasing(self):
        trace = self._run(max_iters=100, cost_tol=1e-12)
        costs = [row[1] for row in trace.csv_rows()]
        assert all(b <= a + 1e-15 for a, b in zip(costs, costs[1:]))

    def test_converged_flag(self):
        trace = self._run(max_iters=500, cost_tol=1e-2)
        assert trace.converged
        assert trace.final_cost < 1e-2
        assert len(trace.csv_rows()) < 500

    def test_relative_tolerance_stops_early(self):
        tight = self._run(max_iters=500, cost_tol=1e-14)
        loose = self._run(max_iters=500, cost_tol=1e-14, cost_tol_rel=1e-3)
        assert len(loose.csv_rows()) < len(tight.csv_rows())
        assert loose.converged

    def test_final_stack_on_manifold(self):
        trace = self._run(max_iters=50, cost_tol=1e-12)
        assert manifold.stiefel_error(trace.final_stack) < 1e-10

    def test_callback_sees_every_iteration(self):
        seen = []
        target = _haar_target(1, 18)
        data = make_dataset(1, rng=RngStream(19))
        init = manifold.random_stiefel(4, 2, RngStream(20))
        riemannian_descent(lambda s: cost_kraus(s, target, data),
                           lambda s: grad_kraus(s, target, data), init,
                           TrainerConfig(max_iters=10, cost_tol=0.0 + 1e-300),
                           callback=lambda it, c, g: seen.append(it))
        assert seen[:3] == [0, 1, 2]


class TestTrainKraus:
    def test_converges_within_budget(self):
        target = _haar_target(1, 21)
        config = TrainerConfig(learning_rate=0.5, max_iters=500, cost_tol=1e-6)
        trace = train_kraus(target, config, RngStream(22))
        assert trace.final_cost < 1e-4
        assert manifold.stiefel_error(trace.final_stack) < 1e-10

    def test_finite_difference_mode(self):
        target = _haar_target(1, 23)
        config = TrainerConfig(max_iters=30, cost_tol=1e-6,
                               gradient_mode="finite_difference")
        trace = train_kraus(target, config, RngStream(24))
        assert trace.final_cost < trace.csv_rows()[0][1]

    def test_rejects_noise_target(self):
        with pytest.raises(ValueError, match="unitary"):
            train_kraus(ChannelSpec("dephasing", 1, gamma=0.1),
                        TrainerConfig(), RngStream(0))


class TestTrainChoi:
    def test_low_noise_dephasing_reconstruction(self):
        target = ChannelSpec("dephasing", 1, gamma=0.01)
        config = TrainerConfig(max_iters=2000, cost_tol=1e-14, cost_tol_rel=1e-4)
        trace = train_choi(target, config, RngStream(25))
        data = make_dataset(1, rng=RngStream(26))
        infids = []
        for rho in _test_densities(data):
            rho_e = channels.apply_channel(target, rho)
            rho_j = reconstruct_state(trace.final_choi, rho)
            infids.append(metrics.infidelity(rho_e, rho_j))
        assert np.mean(infids) < 1e-2

    def test_final_choi_invariants(self):
        target = ChannelSpec("amplitude_damping", 1, gamma=0.3)
        config = TrainerConfig(max_iters=300, cost_tol=1e-10, cost_tol_rel=1e-3)
        trace = train_choi(target, config, RngStream(27))
        j = trace.final_choi
        np.testing.assert_allclose(j, j.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(j).min() > -1e-10
        np.testing.assert_allclose(partial_trace(j, (2, 2), "y"), np.eye(2),
                                   atol=1e-10)

    def test_unitary_target_through_choi(self):
        target = _haar_target(1, 28)
        config = TrainerConfig(max_iters=2000, cost_tol=1e-12)
        trace = train_choi(target, config, RngStream(29))
        rho = _test_densities(make_dataset(1, rng=RngStream(30)))[0]
        u = target.unitary
        np.testing.assert_allclose(channels.apply_choi(trace.final_choi, rho),
                                   u @ rho @ u.conj().T, atol=1e-4)


class TestStateMaps:
    def test_identity_choi_round_trips(self):
        j = choi_of(ChannelSpec("unitary", 1, unitary=np.eye(2)))
        rho = _test_densities(make_dataset(1, rng=RngStream(31)))[0]
        np.testing.assert_allclose(recover_input(j, rho), rho, atol=1e-10)
        np.testing.assert_allclose(reconstruct_state(j, rho), rho, atol=1e-10)

    def test_recover_undoes_channel(self):
        spec = ChannelSpec("amplitude_damping", 1, gamma=0.5)
        rho = _test_densities(make_dataset(1, rng=RngStream(32)))[0]
        recovered = recover_input(choi_of(spec), channels.apply_channel(spec, rho))
        np.testing.assert_allclose(recovered, rho, atol=1e-9)

    def test_outputs_are_density_matrices(self):
        # away from an exact Choi matrix the raw recovery can leave the PSD
        # cone; the result must still be a valid state
        spec = ChannelSpec("dephasing", 1, gamma=0.6)
        config = TrainerConfig(max_iters=50, cost_tol=1e-4)
        trace = train_choi(spec, config, RngStream(33))
        rho = _test_densities(make_dataset(1, rng=RngStream(34)))[1]
        for out in (recover_input(trace.final_choi,
                                  channels.apply_channel(spec, rho)),
                    reconstruct_state(trace.final_choi, rho)):
            np.testing.assert_allclose(np.trace(out), 1.0, atol=1e-12)
            assert np.linalg.eigvalsh(out).min() > -1e-12


def test_choi_from_stack_matches_channels():
    kraus = channels.kraus_of(ChannelSpec("dephasing", 1, gamma=0.4))
    np.testing.assert_allclose(choi_from_stack(kraus_to_stack(kraus), 2),
                               choi_of(ChannelSpec("dephasing", 1, gamma=0.4)),
                               atol=1e-12)
