"""Track <sigma_x> decay of a 2-qubit |++> state under time-dependent dephasing.

For each time point the dephasing strength gamma(t) follows either the
Markovian (homogeneous) or non-Markovian (inhomogeneous) schedule; a Choi
matrix is trained per point and the reconstructed expectation value is
compared with the closed forms e^{-beta t} and e^{-beta t^2/2}.
"""

import numpy as np

from cqpt import channels, metrics, tomography
from cqpt.channels import ChannelSpec, NoiseSchedule, gamma_at
from cqpt.qla import RngStream
from cqpt.tomography import TrainerConfig

BETA = 0.1
plus = np.full(4, 0.5, dtype=complex)
rho_plus = np.outer(plus, plus.conj())
config = TrainerConfig(max_iters=2000, cost_tol=1e-10)

for kind, closed_form in (("homogeneous", lambda t: np.exp(-BETA * t)),
                          ("inhomogeneous", lambda t: np.exp(-BETA * t * t / 2))):
    print(f"\n{kind} schedule, beta = {BETA}")
    print(f"{'t':>4} {'gamma':>8} {'<sx> true':>10} {'<sx> rec':>10} {'closed':>8}")
    for t in (0.0, 1.0, 2.0, 3.0, 4.0, 5.0):
        gamma = gamma_at(NoiseSchedule(kind, BETA), t)
        target = ChannelSpec("dephasing", 2, gamma=gamma)
        trace = tomography.train_choi(target, config, RngStream(int(t * 10)))
        sx_true = metrics.expect_sigma_x_first(
            channels.apply_channel(target, rho_plus))
        sx_rec = metrics.expect_sigma_x_first(
            tomography.reconstruct_state(trace.final_choi, rho_plus))
        print(f"{t:4.1f} {gamma:8.4f} {sx_true:10.4f} {sx_rec:10.4f} "
              f"{closed_form(t):8.4f}")
