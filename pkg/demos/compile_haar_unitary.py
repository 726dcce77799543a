"""Compile a random 2-qubit unitary into a trainable Kraus stack.

The trainer drives the single-shot cost (probability of *not* returning to
the prepared state after un-computing) to machine precision in a few dozen
Riemannian descent iterations.
"""

import numpy as np

from cqpt import channels, metrics, tomography
from cqpt.channels import ChannelSpec
from cqpt.qla import RngStream, haar_unitary
from cqpt.tomography import TrainerConfig

rng = RngStream(0)
target = ChannelSpec("unitary", 2, unitary=haar_unitary(4, rng.substream(0)))

config = TrainerConfig(learning_rate=0.5, max_iters=2000, cost_tol=1e-12)
trace = tomography.train_kraus(target, config, rng.substream(1))

print(f"converged: {trace.converged} after {len(trace.csv_rows())} iterations")
print(f"final cost: {trace.final_cost:.3e}")

kraus = tomography.stack_to_kraus(trace.final_stack, target.dim)
data = tomography.make_dataset(2, rng=rng.substream(2))
infids = []
for w in data:
    rho = np.outer(w[:, 0], w[:, 0].conj())
    infids.append(metrics.infidelity(channels.apply_channel(target, rho),
                                     channels.apply_kraus(kraus, rho)))
print(f"mean test infidelity over {len(data)} states: {np.mean(infids):.3e}")
