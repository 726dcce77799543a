"""Experiment runner: the five benchmark studies, emitted as seeded CSVs.

Every experiment is fully determined by (config, seed): identical inputs
produce byte-identical CSVs. Wall-clock timings are therefore written to a
separate ``*_timing.csv`` that is listed in the manifest without a hash.
"""

import hashlib
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, channels, metrics, mqpt, tomography
from .channels import ChannelSpec, NoiseSchedule, gamma_at
from .qla import RngStream, haar_unitary
from .tomography import TrainerConfig

__all__ = ["ExperimentConfig", "EXPERIMENTS", "parse_config", "run_experiment",
           "emit_manifest", "verify_manifest"]

EXPERIMENTS = ("haar_bench", "dephasing", "depolarizing", "damping",
               "time_noise", "compare_mqpt")

_DEFAULT_GAMMA_GRID = (0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95)
_DEFAULT_T_GRID = tuple(np.arange(0.0, 10.0 + 1e-9, 0.5))


@dataclass
class ExperimentConfig:
    experiment: str
    qubits: tuple = (1,)
    seed: int = 0
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    gamma_grid: tuple = _DEFAULT_GAMMA_GRID
    p_grid: tuple = _DEFAULT_GAMMA_GRID
    t_grid: tuple = _DEFAULT_T_GRID
    beta: float = 0.1
    out_dir: str = "."

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choose from {EXPERIMENTS}")
        if not self.qubits or any(not 1 <= n <= 5 for n in self.qubits):
            raise ValueError("qubits must be a non-empty list within [1, 5]")
        for name, grid, low, high in (("gamma_grid", self.gamma_grid, 0.0, 1.0),
                                      ("p_grid", self.p_grid, 0.0, 1.0)):
            if not grid or any(not low <= v <= high for v in grid):
                raise ValueError(f"{name} values must lie in [{low}, {high}]")
        if not self.t_grid or any(t < 0 for t in self.t_grid):
            raise ValueError("t_grid values must be >= 0")


def _parse_number_list(text: str):
    return tuple(float(part) for part in text.replace(" ", "").split(",") if part)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat key=value experiment config text, then apply overrides."""
    fields: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed config line: {line!r}")
        fields[key.strip()] = value.strip()
    if overrides:
        fields.update({k: v for k, v in overrides.items() if v is not None})

    known = {"experiment", "qubits", "seed", "learning_rate", "max_iters",
             "cost_tol", "cost_tol_rel", "retraction", "kraus_terms",
             "gradient_mode", "gamma_grid", "p_grid", "t_grid", "beta",
             "out_dir"}
    for key in fields:
        if key not in known:
            raise ValueError(f"unknown config field {key!r}")
    if "experiment" not in fields:
        raise ValueError("config is missing required field 'experiment'")

    trainer = TrainerConfig(
        learning_rate=float(fields.get("learning_rate", 0.5)),
        max_iters=int(fields.get("max_iters", 2000)),
        cost_tol=float(fields.get("cost_tol", 1e-6)),
        cost_tol_rel=(float(fields["cost_tol_rel"])
                      if "cost_tol_rel" in fields else None),
        retraction=str(fields.get("retraction", "cayley")),
        kraus_terms=int(fields["kraus_terms"]) if "kraus_terms" in fields else None,
        gradient_mode=str(fields.get("gradient_mode", "analytic")),
    )
    qubits = fields.get("qubits", "1")
    return ExperimentConfig(
        experiment=fields["experiment"],
        qubits=tuple(int(float(q)) for q in str(qubits).replace(" ", "").split(",") if q),
        seed=int(fields.get("seed", 0)),
        trainer=trainer,
        gamma_grid=_parse_number_list(fields["gamma_grid"]) if "gamma_grid" in fields else _DEFAULT_GAMMA_GRID,
        p_grid=_parse_number_list(fields["p_grid"]) if "p_grid" in fields else _DEFAULT_GAMMA_GRID,
        t_grid=_parse_number_list(fields["t_grid"]) if "t_grid" in fields else _DEFAULT_T_GRID,
        beta=float(fields.get("beta", 0.1)),
        out_dir=fields.get("out_dir", "."),
    )


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def _write_csv(path: str, header, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _test_states(num_qubits: int, rng: RngStream) -> np.ndarray:
    data = tomography.make_dataset(num_qubits, rng=rng)
    return np.array([np.outer(w[:, 0], w[:, 0].conj()) for w in data])


def _haar_target(num_qubits: int, rng: RngStream) -> ChannelSpec:
    return ChannelSpec("unitary", num_qubits,
                       unitary=haar_unitary(2 ** num_qubits, rng))


def _run_haar_bench(cfg: ExperimentConfig):
    cost_rows, infid_rows, timing_rows = [], [], []
    for n in cfg.qubits:
        rng = RngStream(cfg.seed).substream(n)
        target = _haar_target(n, rng.substream(0))
        trace = tomography.train_kraus(target, cfg.trainer, rng.substream(1))
        for it, cost, gnorm, elapsed in trace.csv_rows():
            cost_rows.append((n, it, cost, gnorm))
            timing_rows.append(("haar_bench", n, it, elapsed))
        u = target.unitary
        kraus = tomography.stack_to_kraus(trace.final_stack, target.dim)
        if_in_f, if_e_k = [], []
        for rho in _test_states(n, rng.substream(2)):
            rho_k = channels.apply_kraus(kraus, rho)
            rho_e = channels.apply_channel(target, rho)
            rho_f = u.conj().T @ rho_k @ u
            if_in_f.append(metrics.infidelity(rho, rho_f))
            if_e_k.append(metrics.infidelity(rho_e, rho_k))
        infid_rows.append((n, float(np.mean(if_in_f)), float(np.mean(if_e_k)),
                           trace.final_cost, trace.converged))
    return {
        "haar_bench_cost.csv": (("N", "iteration", "cost", "grad_norm"), cost_rows),
        "haar_bench_infidelity.csv": (
            ("N", "mean_if_in_f", "mean_if_e_k", "final_cost", "converged"),
            infid_rows),
    }, timing_rows


def _noise_spec(kind: str, num_qubits: int, value: float) -> ChannelSpec:
    if kind in ("dephasing", "damping"):
        actual = "dephasing" if kind == "dephasing" else "amplitude_damping"
        return ChannelSpec(actual, num_qubits, gamma=value)
    return ChannelSpec("depolarizing", num_qubits, p=value)


def _run_noise_trend(cfg: ExperimentConfig):
    kind = cfg.experiment
    grid = cfg.p_grid if kind == "depolarizing" else cfg.gamma_grid
    trainer = cfg.trainer
    if trainer.cost_tol_rel is None:
        # Relative stopping keeps the attained accuracy proportional to each
        # target's initial mismatch, so the sweep compares noise levels on an
        # equal footing instead of over-polishing the easy points.
        trainer = replace(trainer, cost_tol_rel=1e-4)
    rows, timing_rows = [], []
    for n in cfg.qubits:
        # One stream per qubit count: every grid point trains from the same
        # data, initialization, and test states, so the noise-level trend is
        # not confounded by per-point initialization variance.
        rng = RngStream(cfg.seed).substream(n)
        for gi, value in enumerate(grid):
            target = _noise_spec(kind, n, value)
            trace = tomography.train_choi(target, trainer, rng.substream(1))
            j = trace.final_choi
            if_in_f, if_e_rec = [], []
            for rho in _test_states(n, rng.substream(2)):
                rho_e = channels.apply_channel(target, rho)
                rho_f = tomography.recover_input(j, rho_e)
                rho_j = tomography.reconstruct_state(j, rho)
                if_in_f.append(metrics.infidelity(rho, rho_f))
                if_e_rec.append(metrics.infidelity(rho_e, rho_j))
            rows.append((n, value, float(np.mean(if_in_f)),
                         float(np.mean(if_e_rec)), trace.final_cost))
            timing_rows.append((kind, n, gi, trace.csv_rows()[-1][3]))
    header = ("N", "parameter", "mean_if_in_f", "mean_if_e_rec", "final_cost")
    return {f"{kind}_infidelity.csv": (header, rows)}, timing_rows


def _run_time_noise(cfg: ExperimentConfig):
    n = cfg.qubits[0]
    if n != 2:
        raise ValueError("time_noise requires qubits=2 (first-qubit sigma_x readout)")
    plus = np.full(4, 0.5, dtype=complex)
    rho_plus = np.outer(plus, plus.conj())
    rows, timing_rows = [], []
    for si, kind in enumerate(("homogeneous", "inhomogeneous")):
        schedule = NoiseSchedule(kind, cfg.beta)
        for ti, t in enumerate(cfg.t_grid):
            gamma = float(gamma_at(schedule, t))
            target = ChannelSpec("dephasing", n, gamma=gamma)
            rng = RngStream(cfg.seed).substream(si * 10000 + ti)
            trace = tomography.train_choi(target, cfg.trainer, rng.substream(1))
            rho_e = channels.apply_channel(target, rho_plus)
            rho_j = tomography.reconstruct_state(trace.final_choi, rho_plus)
            rows.append((kind, t, gamma,
                         metrics.expect_sigma_x_first(rho_e),
                         metrics.expect_sigma_x_first(rho_j),
                         trace.final_cost))
            timing_rows.append(("time_noise", kind, ti, trace.csv_rows()[-1][3]))
    header = ("schedule", "t", "gamma", "sx_true", "sx_rec", "final_cost")
    return {"time_noise_sx.csv": (header, rows)}, timing_rows


def _run_compare_mqpt(cfg: ExperimentConfig):
    cost_rows, resource_rows, timing_rows = [], [], []
    for n in cfg.qubits:
        rng = RngStream(cfg.seed).substream(n)
        target = _haar_target(n, rng.substream(0))
        test_states = _test_states(n, rng.substream(3))

        def _mean_fidelity(stack):
            kraus = tomography.stack_to_kraus(stack, target.dim)
            vals = [1.0 - metrics.infidelity(channels.apply_channel(target, rho),
                                             channels.apply_kraus(kraus, rho))
                    for rho in test_states]
            return float(np.mean(vals))

        cqpt_trace = tomography.train_kraus(target, cfg.trainer, rng.substream(1))
        mqpt_trace, ledger = mqpt.train_mqpt(target, cfg.trainer, rng.substream(1))

        for method, trace in (("cqpt", cqpt_trace), ("mqpt", mqpt_trace)):
            for it, cost, gnorm, elapsed in trace.csv_rows():
                cost_rows.append((method, n, it, cost))
            timing_rows.append((method, n, trace.csv_rows()[-1][3]))

        n_states = 6 ** n
        stored_cqpt = mqpt.stored_trainable_entries(cqpt_trace.final_stack)
        stored_mqpt = (mqpt.stored_trainable_entries(mqpt_trace.final_stack)
                       + n_states * n_states)
        resource_rows.append(("cqpt", n, len(cqpt_trace.csv_rows()),
                              mqpt.cqpt_evaluations_per_iteration(n),
                              stored_cqpt, cqpt_trace.final_cost,
                              _mean_fidelity(cqpt_trace.final_stack)))
        resource_rows.append(("mqpt", n, len(mqpt_trace.csv_rows()),
                              n_states * n_states, stored_mqpt,
                              mqpt_trace.final_cost,
                              _mean_fidelity(mqpt_trace.final_stack)))
    return {
        "compare_cost.csv": (("method", "N", "iteration", "cost"), cost_rows),
        "compare_resources.csv": (
            ("method", "N", "iterations", "evaluations_per_iter",
             "stored_entries", "final_cost", "mean_test_fidelity"),
            resource_rows),
    }, timing_rows


_RUNNERS = {
    "haar_bench": _run_haar_bench,
    "dephasing": _run_noise_trend,
    "depolarizing": _run_noise_trend,
    "damping": _run_noise_trend,
    "time_noise": _run_time_noise,
    "compare_mqpt": _run_compare_mqpt,
}


def config_hash(cfg: ExperimentConfig) -> str:
    canon = repr((cfg.experiment, cfg.qubits, cfg.seed,
                  cfg.trainer.learning_rate, cfg.trainer.max_iters,
                  cfg.trainer.cost_tol, cfg.trainer.cost_tol_rel,
                  cfg.trainer.retraction,
                  cfg.trainer.kraus_terms, cfg.trainer.gradient_mode,
                  cfg.gamma_grid, cfg.p_grid, cfg.t_grid, cfg.beta))
    return hashlib.sha256(canon.encode()).hexdigest()


def run_experiment(cfg: ExperimentConfig, write_manifest: bool = True) -> list:
    """Run one experiment; returns the list of files written."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    tables, timing_rows = _RUNNERS[cfg.experiment](cfg)
    written = []
    for name, (header, rows) in sorted(tables.items()):
        written.append(_write_csv(os.path.join(cfg.out_dir, name), header, rows))
    timing_path = os.path.join(cfg.out_dir, f"{cfg.experiment}_timing.csv")
    timing_header = {
        "haar_bench": ("experiment", "N", "iteration", "elapsed_ms"),
        "compare_mqpt": ("method", "N", "elapsed_ms"),
        "time_noise": ("experiment", "schedule", "grid_index", "elapsed_ms"),
    }.get(cfg.experiment, ("experiment", "N", "grid_index", "elapsed_ms"))
    _write_csv(timing_path, timing_header, timing_rows)
    if write_manifest:
        manifest = emit_manifest(cfg, written, extra_files=[timing_path])
        written.append(manifest)
    written.append(timing_path)
    return written


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def emit_manifest(cfg: ExperimentConfig, outputs: list,
                  extra_files: list | None = None) -> str:
    """Plain-text manifest: config hash, seed, file hashes, library version.

    ``extra_files`` (timing CSVs) are listed without hashes so the manifest
    itself stays byte-identical across reruns.
    """
    path = os.path.join(cfg.out_dir, f"{cfg.experiment}_manifest.txt")
    lines = [
        f"experiment={cfg.experiment}",
        f"config_hash={config_hash(cfg)}",
        f"seed={cfg.seed}",
        f"library_version={__version__}",
        f"learning_rate={_fmt(cfg.trainer.learning_rate)}",
        f"max_iters={cfg.trainer.max_iters}",
        f"cost_tol={_fmt(cfg.trainer.cost_tol)}",
        f"retraction={cfg.trainer.retraction}",
    ]
    for out in sorted(outputs):
        lines.append(f"file={os.path.basename(out)} sha256={_sha256_file(out)}")
    for extra in sorted(extra_files or []):
        lines.append(f"extra_file={os.path.basename(extra)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def verify_manifest(path: str) -> list:
    """Recheck every hashed file; returns a list of mismatch descriptions."""
    base = os.path.dirname(os.path.abspath(path))
    problems = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line.startswith("file="):
                continue
            entry, _, digest = line.partition(" sha256=")
            name = entry[len("file="):]
            target = os.path.join(base, name)
            if not os.path.exists(target):
                problems.append(f"missing file: {name}")
            elif _sha256_file(target) != digest:
                problems.append(f"hash mismatch: {name}")
    return problems
