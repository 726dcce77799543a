"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line on success (run with ``pytest -s`` to see
them); a failed assertion marks the criterion red. Experiments are seeded, so
every number here is reproducible bit-for-bit.
"""

import time

import numpy as np
import pytest
from scipy import stats

from cqpt import channels, manifold, metrics, mqpt, qla, tomography
from cqpt.channels import ChannelSpec, choi_of
from cqpt.experiments import ExperimentConfig, run_experiment
from cqpt.qla import RngStream, haar_unitary, kron, partial_trace, vec
from cqpt.tomography import TrainerConfig

# Infidelities at or below this are numerical-precision ties: the trainers
# converge to ~1e-15, far beyond any physically meaningful difference.
_FLOOR = 1e-10

_NOISE_KINDS = {
    "dephasing": lambda n, v: ChannelSpec("dephasing", n, gamma=v),
    "depolarizing": lambda n, v: ChannelSpec("depolarizing", n, p=v),
    "damping": lambda n, v: ChannelSpec("amplitude_damping", n, gamma=v),
}


def _report(criterion, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"PASS: {criterion}{suffix}")


def _mean_test_infidelity(target, stack, data):
    kraus = tomography.stack_to_kraus(stack, target.dim)
    values = []
    for w in data:
        rho = np.outer(w[:, 0], w[:, 0].conj())
        values.append(metrics.infidelity(channels.apply_channel(target, rho),
                                         channels.apply_kraus(kraus, rho)))
    return float(np.mean(values))


def _spearman(csv_path, n, column):
    rows = np.genfromtxt(csv_path, delimiter=",", names=True)
    rows = np.atleast_1d(rows)
    mask = rows["N"] == n
    return stats.spearmanr(rows["parameter"][mask], rows[column][mask]).statistic


def _run_trend(kind, tmp_path):
    cfg = ExperimentConfig(kind, qubits=(1, 2), seed=0,
                           trainer=TrainerConfig(max_iters=3000, cost_tol=1e-14),
                           out_dir=str(tmp_path / kind))
    run_experiment(cfg)
    return tmp_path / kind / f"{kind}_infidelity.csv"


def test_exact_kraus_is_zero_cost_fixed_point():
    # 50 Haar targets per N in {1,2,3}: the exact single-Kraus stack has
    # cost <= 1e-10 and recovers every test state to infidelity <= 1e-8.
    start = time.time()
    rng = RngStream(101)
    worst_cost, worst_if = 0.0, 0.0
    for n in (1, 2, 3):
        d = 2**n
        for rep in range(50):
            sub = rng.substream(n * 100 + rep)
            u = haar_unitary(d, sub.substream(0))
            target = ChannelSpec("unitary", n, unitary=u)
            data = tomography.make_dataset(n, rng=sub.substream(1))
            stack = tomography.kraus_to_stack(np.array([u]))
            worst_cost = max(worst_cost, abs(tomography.cost_kraus(
                stack, target, data)))
            for w in data:
                rho = np.outer(w[:, 0], w[:, 0].conj())
                rho_f = u.conj().T @ channels.apply_channel(target, rho) @ u
                worst_if = max(worst_if, metrics.infidelity(rho, rho_f))
    elapsed = time.time() - start
    assert worst_cost <= 1e-10
    assert worst_if <= 1e-8
    assert elapsed < 60
    _report("exact Kraus stack is a zero-cost fixed point",
            f"worst cost {worst_cost:.1e}, worst infidelity {worst_if:.1e}, "
            f"{elapsed:.1f}s")


def test_exact_choi_is_zero_cost_fixed_point():
    # Choi-route cost at the channel's own Choi matrix, all noise kinds,
    # strengths {0.1, 0.5, 0.9}, N in {1,2}.
    start = time.time()
    rng = RngStream(102)
    worst = 0.0
    for kind, build in _NOISE_KINDS.items():
        for value in (0.1, 0.5, 0.9):
            for n in (1, 2):
                spec = build(n, value)
                data = tomography.make_dataset(n, rng=rng.substream(n))
                worst = max(worst, tomography.cost_choi(choi_of(spec), spec,
                                                        data))
    elapsed = time.time() - start
    assert worst <= 1e-8
    assert elapsed < 60
    _report("exact Choi matrix is a zero-cost fixed point",
            f"worst cost {worst:.1e}, {elapsed:.1f}s")


def test_choi_and_trace_identities():
    # Convention-consistent vectorization identities behind the Choi cost:
    # vec(E(rho)) = reshuffle(J) vec(rho) and
    # Tr[(A (x) B) C] = Tr[Tr_X[(A (x) I) C] B], 100 random instances each.
    rng = RngStream(103)
    worst_vec, worst_tr = 0.0, 0.0
    for rep in range(100):
        stack = manifold.random_stiefel(8, 2, rng)
        kraus = tomography.stack_to_kraus(stack, 2)
        j = channels.choi_from_kraus(kraus)
        z = rng.complex_normal((2, 2))
        rho = z @ z.conj().T
        rho /= np.trace(rho)
        lhs = vec(channels.apply_kraus(kraus, rho))
        worst_vec = max(worst_vec, float(np.linalg.norm(
            lhs - qla.reshuffle(j) @ vec(rho))))

        a = rng.complex_normal((2, 2))
        b = rng.complex_normal((2, 2))
        c = rng.complex_normal((4, 4))
        full = np.trace(kron(a, b) @ c)
        reduced = np.trace(partial_trace(kron(a, np.eye(2)) @ c, (2, 2), "x") @ b)
        worst_tr = max(worst_tr, abs(full - reduced))
    assert worst_vec <= 1e-10
    assert worst_tr <= 1e-10
    _report("Choi/transfer and partial-trace identities",
            f"worst errors {worst_vec:.1e} / {worst_tr:.1e}")


def test_analytic_gradient_matches_finite_differences():
    # >= 100 random Stiefel points across N in {1,2} on the Kraus route.
    rng = RngStream(104)
    worst = 0.0
    for n, count in ((1, 60), (2, 45)):
        d = 2**n
        target = ChannelSpec("unitary", n, unitary=haar_unitary(d, rng))
        data = tomography.make_dataset(n, rng=rng.substream(n))
        for _ in range(count):
            stack = manifold.random_stiefel(2 * d, d, rng)
            analytic = tomography.grad_kraus(stack, target, data)
            fd = tomography.finite_difference_grad(
                lambda s: tomography.cost_kraus(s, target, data), stack)
            worst = max(worst, float(np.linalg.norm(analytic - fd)
                                     / np.linalg.norm(fd)))
    assert worst < 1e-5
    _report("analytic Kraus gradient matches finite differences",
            f"105 points, worst relative error {worst:.1e}")


def test_retraction_orders_against_exponential_map():
    # log-log slope of the retraction error against the exponential map on
    # 20 random tangent directions: qr is first order (slope 2), cayley and
    # polar second order (slope 3).
    rng = RngStream(105)
    alphas = np.logspace(-3, -1, 9)
    slopes = {"qr": [], "polar": [], "cayley": []}
    for _ in range(20):
        x = manifold.random_stiefel(6, 6, rng)
        v = manifold.project_to_tangent(x, rng.complex_normal((6, 6)))
        v /= np.linalg.norm(v)
        for method in slopes:
            errs = [np.linalg.norm(manifold.retract(x, a * v, method)
                                   - manifold.exponential_map(x, a * v))
                    for a in alphas]
            slopes[method].append(np.polyfit(np.log(alphas), np.log(errs), 1)[0])
    means = {m: float(np.mean(s)) for m, s in slopes.items()}
    assert abs(means["qr"] - 2.0) < 0.3
    assert abs(means["polar"] - 3.0) < 0.3
    assert abs(means["cayley"] - 3.0) < 0.3
    _report("retraction orders", "slopes " + ", ".join(
        f"{m}={v:.2f}" for m, v in means.items()))


def test_haar_unitary_benchmark():
    # N=1 converges below 1e-4 within 500 iterations, N=2 within 2000;
    # mean test infidelity < 1e-3 (N=1) and < 1e-2 (N=2); infidelity does
    # not decrease from N=1 to N=3 beyond the numerical-precision floor.
    start = time.time()
    results = {}
    for n, budget in ((1, 500), (2, 2000), (3, 2000)):
        rng = RngStream(0).substream(n)
        target = ChannelSpec("unitary", n,
                             unitary=haar_unitary(2**n, rng.substream(0)))
        config = TrainerConfig(learning_rate=0.5, max_iters=budget,
                               cost_tol=1e-14)
        trace = tomography.train_kraus(target, config, rng.substream(1))
        data = tomography.make_dataset(n, rng=rng.substream(2))
        results[n] = (trace, _mean_test_infidelity(target, trace.final_stack,
                                                   data))
    elapsed = time.time() - start
    assert results[1][0].final_cost < 1e-4
    assert len(results[1][0].csv_rows()) <= 501
    assert results[2][0].final_cost < 1e-4
    assert len(results[2][0].csv_rows()) <= 2001
    assert results[1][1] < 1e-3
    assert results[2][1] < 1e-2
    clamped = [max(results[n][1], _FLOOR) for n in (1, 2, 3)]
    assert clamped[0] <= clamped[1] <= clamped[2]
    assert elapsed < 600
    _report("Haar unitary benchmark", "infidelities " + ", ".join(
        f"N={n}: {results[n][1]:.1e}" for n in (1, 2, 3)) + f", {elapsed:.1f}s")


def test_dephasing_infidelity_trend(tmp_path):
    # mean forward-reconstruction infidelity I_F(rho_E, rho_J) grows with
    # gamma: Spearman > 0.8 for N in {1,2}.
    csv = _run_trend("dephasing", tmp_path)
    rho = {n: _spearman(csv, n, "mean_if_e_rec") for n in (1, 2)}
    assert rho[1] > 0.8
    assert rho[2] > 0.8
    _report("dephasing infidelity trend",
            f"Spearman N=1: {rho[1]:+.3f}, N=2: {rho[2]:+.3f}")


@pytest.mark.parametrize("kind", ["depolarizing", "damping"])
def test_noise_recovery_trend(kind, tmp_path):
    # mean recovery infidelity I_F(rho_in, rho_f) grows with the noise
    # strength: Spearman > 0.8 for N in {1,2}.
    csv = _run_trend(kind, tmp_path)
    rho = {n: _spearman(csv, n, "mean_if_in_f") for n in (1, 2)}
    assert rho[1] > 0.8
    assert rho[2] > 0.8
    _report(f"{kind} recovery trend",
            f"Spearman N=1: {rho[1]:+.3f}, N=2: {rho[2]:+.3f}")


def test_time_dependent_dephasing_dynamics(tmp_path):
    # reconstructed <sigma_x (x) I>(t) tracks the closed forms e^{-beta t}
    # and e^{-beta t^2 / 2} within 0.05 for beta = 0.1, t <= 5.
    cfg = ExperimentConfig("time_noise", qubits=(2,), seed=0, beta=0.1,
                           trainer=TrainerConfig(max_iters=2000, cost_tol=1e-10),
                           t_grid=tuple(np.arange(0.0, 5.0 + 1e-9, 0.5)),
                           out_dir=str(tmp_path))
    run_experiment(cfg)
    rows = np.genfromtxt(tmp_path / "time_noise_sx.csv", delimiter=",",
                         names=True, dtype=None, encoding="utf-8")
    worst = {"homogeneous": 0.0, "inhomogeneous": 0.0}
    for row in rows:
        t = row["t"]
        closed = (np.exp(-0.1 * t) if row["schedule"] == "homogeneous"
                  else np.exp(-0.05 * t * t))
        worst[row["schedule"]] = max(worst[row["schedule"]],
                                     abs(row["sx_rec"] - closed))
    assert worst["homogeneous"] < 0.05
    assert worst["inhomogeneous"] < 0.05
    _report("time-dependent dephasing dynamics",
            f"worst |error| homogeneous {worst['homogeneous']:.1e}, "
            f"inhomogeneous {worst['inhomogeneous']:.1e}")


def test_resource_scaling(tmp_path):
    # exact evaluation counters 6^N vs 6^{2N} for N in {1,2,3}; faster
    # wall clock for the single-shot route at N=2 under identical caps;
    # stored-entry accounting k*4^N vs k*4^N + 6^{2N}.
    for n in (1, 2, 3):
        assert mqpt.cqpt_evaluations_per_iteration(n) == 6**n
        povm_count = 6**n
        assert povm_count * povm_count == 6 ** (2 * n)
    cfg = ExperimentConfig("compare_mqpt", qubits=(1, 2), seed=0,
                           trainer=TrainerConfig(max_iters=150, cost_tol=1e-12),
                           out_dir=str(tmp_path))
    run_experiment(cfg)
    rows = np.genfromtxt(tmp_path / "compare_resources.csv", delimiter=",",
                         names=True, dtype=None, encoding="utf-8")
    table = {(r["method"], r["N"]): r for r in rows}
    for n in (1, 2):
        d2 = 4**n
        k = 2**n
        assert table[("cqpt", n)]["evaluations_per_iter"] == 6**n
        assert table[("mqpt", n)]["evaluations_per_iter"] == 6 ** (2 * n)
        assert table[("cqpt", n)]["stored_entries"] == k * d2
        assert table[("mqpt", n)]["stored_entries"] == k * d2 + 6 ** (2 * n)
    timing = np.genfromtxt(tmp_path / "compare_mqpt_timing.csv", delimiter=",",
                           names=True, dtype=None, encoding="utf-8")
    elapsed = {(r["method"], r["N"]): r["elapsed_ms"] for r in timing}
    assert elapsed[("cqpt", 2)] < elapsed[("mqpt", 2)]
    _report("resource scaling", f"N=2 wall time {elapsed[('cqpt', 2)]:.0f}ms "
            f"vs {elapsed[('mqpt', 2)]:.0f}ms")


def test_deterministic_experiment_outputs(tmp_path):
    # identical config + seed => byte-identical CSVs and manifest.
    def run(out):
        cfg = ExperimentConfig("dephasing", qubits=(1,), seed=0,
                               trainer=TrainerConfig(max_iters=300,
                                                     cost_tol=1e-10),
                               gamma_grid=(0.1, 0.5, 0.9),
                               out_dir=str(out))
        run_experiment(cfg)

    run(tmp_path / "a")
    run(tmp_path / "b")
    names = ("dephasing_infidelity.csv", "dephasing_manifest.txt")
    for name in names:
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes())
    _report("deterministic experiment outputs",
            "byte-identical CSVs and manifest across reruns")
