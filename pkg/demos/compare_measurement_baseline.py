"""Single-shot compilation route vs the full-POVM measurement baseline.

Both optimize the same trainable Kraus stack with the same Riemannian
descent; the baseline's cost compares all 6^N x 6^N POVM statistics per
iteration while the compilation route needs only 6^N single-shot
evaluations, which dominates the wall-clock difference.
"""

import time

from cqpt import mqpt, tomography
from cqpt.channels import ChannelSpec
from cqpt.qla import RngStream, haar_unitary
from cqpt.tomography import TrainerConfig

config = TrainerConfig(max_iters=200, cost_tol=1e-10)

print(f"{'N':>2} {'route':>6} {'evals/iter':>10} {'final cost':>12} {'time':>8}")
for n in (1, 2):
    rng = RngStream(0).substream(n)
    target = ChannelSpec("unitary", n, unitary=haar_unitary(2**n, rng.substream(0)))

    start = time.perf_counter()
    cqpt_trace = tomography.train_kraus(target, config, rng.substream(1))
    cqpt_ms = (time.perf_counter() - start) * 1e3

    start = time.perf_counter()
    mqpt_trace, ledger = mqpt.train_mqpt(target, config, rng.substream(1))
    mqpt_ms = (time.perf_counter() - start) * 1e3

    print(f"{n:2d} {'cqpt':>6} {mqpt.cqpt_evaluations_per_iteration(n):10d} "
          f"{cqpt_trace.final_cost:12.3e} {cqpt_ms:7.0f}ms")
    print(f"{n:2d} {'mqpt':>6} {6**(2 * n):10d} "
          f"{mqpt_trace.final_cost:12.3e} {mqpt_ms:7.0f}ms")
