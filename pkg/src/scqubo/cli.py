"""Experiment command line: learn, build, sample, reconstruct, report.

Configuration comes from an INI file (see ``ExperimentConfig`` for the
section/key layout); every flag overrides its file counterpart. All
commands are deterministic given the config and master seed: per-patch
seeds are derived by stable hashing, worker threads only parallelize
independent patches, and artifacts carry no timestamps.
"""

from __future__ import annotations

import configparser
import glob
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .coding import (
    Dictionary,
    build_qubo,
    metrics,
    patch_image,
    reconstruct,
    sparsity_label,
    unpatch,
)
from .io import idx_images, load_idx, persist_run, read_pgm, write_pgm
from .learning import LearnConfig, train
from .qubo import (
    QuboProblem,
    SampleSet,
    energy,
    load_qubo,
    load_qubo_json,
    save_qubo,
    save_qubo_json,
)
from .samplers import (
    NebmConfig,
    SaConfig,
    SamplerFn,
    SamplerRequest,
    brute_force,
    make_sampler,
)
from .seeding import derived_seed
from .strategies import ReverseScheduleConfig, iterated_warm_start, qemc_chain, reverse_sa_sampler

GROUND_TRUTH_MAX_N = 20  # brute force stays sub-second up to here


@dataclass(frozen=True)
class ExperimentConfig:
    # [data]
    dataset: str = ""
    image_index: int = 0
    patch_edge: int = 7
    # [dictionary]
    p: int = 64
    dictionary_path: str = ""
    # [coding]
    lam: float = 0.1
    qubo_mode: str = "paper"
    # [learning]
    s_target: float = 0.15
    lambda_init: float = 0.01
    lambda_growth: float = 1.1
    learning_rate: float = 0.1
    epochs: int = 20
    convergence_tol: float = 1e-3
    batch_size: int = 1
    # [sampler]
    sampler: str = "sa"
    sweeps: int = 1000
    reads: int = 1000
    beta_hot: Optional[float] = None
    beta_cold: Optional[float] = None
    s: float = 0.5
    t_max: float = 15.0
    t_min: float = 1.0
    delta_t: float = 1.0
    steps_per_temperature: int = 20
    total_steps: int = 6000
    sample_interval: int = 20
    alpha: float = 0.5
    gamma: float = 1.0
    rho: float = 0.7
    kappa: float = 1.0
    hold_at_floor: bool = False
    # [protocol]
    protocol: str = "plain"
    iterations: int = 100
    batch: int = 1000
    s_values: tuple[float, ...] = (0.44, 0.5, 0.55, 0.6)
    elitist: bool = False
    # [run]
    seed: int = 0
    out: str = "runs/experiment"
    workers: int = 1
    patches: str = "all"


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


# (section, key) -> (attribute, parser)
_INI_SCHEMA = {
    ("data", "dataset"): ("dataset", str),
    ("data", "image_index"): ("image_index", int),
    ("data", "patch_edge"): ("patch_edge", int),
    ("dictionary", "p"): ("p", int),
    ("dictionary", "path"): ("dictionary_path", str),
    ("coding", "lambda"): ("lam", float),
    ("coding", "mode"): ("qubo_mode", str),
    ("learning", "s_target"): ("s_target", float),
    ("learning", "lambda_init"): ("lambda_init", float),
    ("learning", "lambda_growth"): ("lambda_growth", float),
    ("learning", "learning_rate"): ("learning_rate", float),
    ("learning", "epochs"): ("epochs", int),
    ("learning", "convergence_tol"): ("convergence_tol", float),
    ("learning", "batch_size"): ("batch_size", int),
    ("sampler", "name"): ("sampler", str),
    ("sampler", "sweeps"): ("sweeps", int),
    ("sampler", "reads"): ("reads", int),
    ("sampler", "beta_hot"): ("beta_hot", float),
    ("sampler", "beta_cold"): ("beta_cold", float),
    ("sampler", "s"): ("s", float),
    ("sampler", "t_max"): ("t_max", float),
    ("sampler", "t_min"): ("t_min", float),
    ("sampler", "delta_t"): ("delta_t", float),
    ("sampler", "steps_per_temperature"): ("steps_per_temperature", int),
    ("sampler", "total_steps"): ("total_steps", int),
    ("sampler", "sample_interval"): ("sample_interval", int),
    ("sampler", "alpha"): ("alpha", float),
    ("sampler", "gamma"): ("gamma", float),
    ("sampler", "rho"): ("rho", float),
    ("sampler", "kappa"): ("kappa", float),
    ("sampler", "hold_at_floor"): ("hold_at_floor", _parse_bool),
    ("protocol", "name"): ("protocol", str),
    ("protocol", "iterations"): ("iterations", int),
    ("protocol", "batch"): ("batch", int),
    ("protocol", "s_values"): ("s_values", _parse_floats),
    ("protocol", "elitist"): ("elitist", _parse_bool),
    ("run", "seed"): ("seed", int),
    ("run", "out"): ("out", str),
    ("run", "workers"): ("workers", int),
    ("run", "patches"): ("patches", str),
}


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    source = Path(path)
    if not source.exists():
        raise click.UsageError(f"config file not found: {source}")
    parser = configparser.ConfigParser()
    parser.read(source, encoding="utf-8")
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                attr, convert = _INI_SCHEMA[(section, key)]
            except KeyError:
                raise click.UsageError(f"{source}: unknown config entry [{section}] {key}")
            try:
                values[attr] = convert(raw)
            except ValueError as exc:
                raise click.UsageError(f"{source}: bad value for [{section}] {key}: {exc}")
    return replace(ExperimentConfig(), **values)


def resolve_config(config_path: Optional[str], **overrides) -> ExperimentConfig:
    cfg = load_experiment_config(config_path) if config_path else ExperimentConfig()
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **cleaned)


def config_as_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------


def _load_image(cfg: ExperimentConfig) -> np.ndarray:
    if not cfg.dataset:
        raise click.UsageError("no dataset configured (set [data] dataset or --dataset)")
    path = Path(cfg.dataset)
    if not path.exists():
        raise click.UsageError(f"dataset not found: {path}")
    if path.suffix.lower() == ".pgm":
        return read_pgm(path).astype(np.float64) / 255.0
    images = idx_images(load_idx(path))
    if not 0 <= cfg.image_index < images.shape[0]:
        raise click.UsageError(
            f"image index {cfg.image_index} out of range for {images.shape[0]} images"
        )
    return images[cfg.image_index]


def _load_dictionary(cfg: ExperimentConfig) -> Dictionary:
    if not cfg.dictionary_path:
        raise click.UsageError("no dictionary configured (set [dictionary] path or --dict)")
    path = Path(cfg.dictionary_path)
    if not path.exists():
        raise click.UsageError(f"dictionary not found: {path}")
    dictionary = Dictionary.load(path)
    if dictionary.p != cfg.p:
        raise click.UsageError(
            f"dictionary has p={dictionary.p} atoms but config says p={cfg.p}"
        )
    return dictionary


def _patch_selection(cfg: ExperimentConfig, total: int) -> list[int]:
    text = cfg.patches.strip().lower()
    if text in ("", "all"):
        return list(range(total))
    try:
        indices = sorted({int(tok) for tok in cfg.patches.replace(",", " ").split()})
    except ValueError:
        raise click.UsageError(f"bad --patches value {cfg.patches!r}")
    for i in indices:
        if not 0 <= i < total:
            raise click.UsageError(f"patch index {i} out of range for {total} patches")
    return indices


def _build_sampler(cfg: ExperimentConfig) -> SamplerFn:
    beta_range = None
    if cfg.beta_hot is not None and cfg.beta_cold is not None:
        beta_range = (cfg.beta_hot, cfg.beta_cold)
    if cfg.sampler == "sa":
        return make_sampler(
            "sa",
            sa_config=SaConfig(sweeps=cfg.sweeps, beta_range=beta_range, reads=cfg.reads),
        )
    if cfg.sampler == "nebm":
        return make_sampler("nebm", nebm_config=_nebm_config(cfg))
    if cfg.sampler in ("brute", "random"):
        return make_sampler(cfg.sampler)
    if cfg.sampler == "reverse-sa":
        rconfig = ReverseScheduleConfig(
            s=cfg.s, beta_range=beta_range, sweeps=cfg.sweeps, reads=cfg.reads
        )
        return lambda request: reverse_sa_sampler(request, rconfig)
    raise click.UsageError(f"unknown sampler {cfg.sampler!r}")


def _nebm_config(cfg: ExperimentConfig) -> NebmConfig:
    return NebmConfig(
        t_max=cfg.t_max,
        t_min=cfg.t_min,
        delta_t=cfg.delta_t,
        steps_per_temperature=cfg.steps_per_temperature,
        total_steps=cfg.total_steps,
        sample_interval=cfg.sample_interval,
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        rho=cfg.rho,
        kappa=cfg.kappa,
        hold_at_floor=cfg.hold_at_floor,
    )


def _cold_sampler(cfg: ExperimentConfig) -> SamplerFn:
    """Forward-anneal cold start used when the main sampler needs an initial state."""
    beta_range = None
    if cfg.beta_hot is not None and cfg.beta_cold is not None:
        beta_range = (cfg.beta_hot, cfg.beta_cold)
    return make_sampler(
        "sa", sa_config=SaConfig(sweeps=cfg.sweeps, beta_range=beta_range, reads=cfg.reads)
    )


def _load_problem_file(path: Path) -> QuboProblem:
    if path.suffix.lower() == ".json":
        return load_qubo_json(path)
    return load_qubo(path)


def _gather_problems(cfg: ExperimentConfig, qubos: Optional[str]):
    """Either (index, problem, patch) triples from an image+dictionary, or
    pre-built problem files when --qubos is given (patch slot None)."""
    if qubos:
        paths = sorted(glob.glob(qubos))
        if not paths:
            raise click.UsageError(f"no QUBO files match {qubos!r}")
        return [(i, _load_problem_file(Path(p)), None) for i, p in enumerate(paths)], None
    image = _load_image(cfg)
    dictionary = _load_dictionary(cfg)
    patches = patch_image(image, cfg.patch_edge)
    selected = _patch_selection(cfg, len(patches))
    triples = [
        (i, build_qubo(patches[i], dictionary, cfg.lam, cfg.qubo_mode), patches[i])
        for i in selected
    ]
    return triples, dictionary


def _run_patch_jobs(jobs, workers: int):
    """Evaluate callables concurrently, returning results in job order."""
    if workers <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class PatchResult:
    index: int
    problem: QuboProblem
    best_state: np.ndarray
    best_energy: float
    min_count: int


def _ground_truth(problem: QuboProblem):
    """(energy, first optimal state) when enumeration is feasible, else None."""
    if problem.n > GROUND_TRUTH_MAX_N:
        return None
    emin, states = brute_force(problem)
    return emin, states[0]


def _write_report(results: list[PatchResult], out_dir: Path) -> Path:
    lines = [
        "qubo_index,ground_state_energy,method_min_energy,min_energy_count,optimal_sparsity"
    ]
    display = ["qubo_index  ground_state  method_min  count  sparsity"]
    for res in results:
        truth = _ground_truth(res.problem)
        if truth is None:
            gs_text, k = "", int(res.best_state.sum())
        else:
            gs_text, k = repr(truth[0]), int(truth[1].sum())
        label = sparsity_label(k, res.problem.n)
        lines.append(
            f"{res.index},{gs_text},{res.best_energy!r},{res.min_count},{label}"
        )
        gs_disp = f"{truth[0]:.4f}" if truth else "n/a"
        display.append(
            f"{res.index:>10}  {gs_disp:>12}  {res.best_energy:>10.4f}  {res.min_count:>5}  {label}"
        )
    path = out_dir / "report.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(display))
    return path


def _write_best_states(results: list[PatchResult], out_dir: Path) -> None:
    obj = {
        str(res.index): {
            "state": "".join(str(int(b)) for b in res.best_state),
            "energy": res.best_energy,
        }
        for res in results
    }
    (out_dir / "best_states.json").write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@click.group()
def main() -> None:
    """Binary sparse-coding QUBO experiments."""


def _common_options(fn):
    for option in reversed(
        [
            click.option("--config", "config_path", type=str, default=None, help="INI config file."),
            click.option("--seed", type=int, default=None, help="Master seed."),
            click.option("--out", type=str, default=None, help="Output directory."),
            click.option("--workers", type=int, default=None, help="Concurrent patch workers."),
        ]
    ):
        fn = option(fn)
    return fn


@main.command("learn-dict")
@_common_options
@click.option("--dataset", type=str, default=None, help="IDX or PGM source image file.")
@click.option("--image-index", type=int, default=None, help="Image index within an IDX file.")
@click.option("--p", type=int, default=None, help="Atom count.")
@click.option("--s-target", type=float, default=None, help="Target mean sparsity fraction.")
@click.option("--epochs", type=int, default=None)
@click.option("--patches", type=str, default=None, help="Patch indices, e.g. '0,3,7' or 'all'.")
def cmd_learn_dict(config_path, seed, out, workers, dataset, image_index, p, s_target, epochs, patches):
    """Learn a dictionary from an image's patches with the SA coder."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        dataset=dataset,
        image_index=image_index,
        p=p,
        s_target=s_target,
        epochs=epochs,
        patches=patches,
    )
    image = _load_image(cfg)
    tiles = patch_image(image, cfg.patch_edge)
    selected = _patch_selection(cfg, len(tiles))
    training_set = [tiles[i] for i in selected]
    solver = _cold_sampler(cfg)
    learn_cfg = LearnConfig(
        p=cfg.p,
        s_target=cfg.s_target,
        lambda_init=cfg.lambda_init,
        lambda_growth=cfg.lambda_growth,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        convergence_tol=cfg.convergence_tol,
        seed=cfg.seed,
        batch_size=cfg.batch_size,
        qubo_mode=cfg.qubo_mode,
    )
    dictionary, trace, lam_final = train(training_set, learn_cfg, solver)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dict_path = out_dir / "dictionary.json"
    dictionary.save(dict_path)
    persist_run(trace, out_dir, "learn_trace", config=config_as_dict(cfg))
    last = trace.records[-1]
    click.echo(
        f"trained {len(trace.records)} epochs on {len(training_set)} patches: "
        f"mean_error={last.mean_error:.4f} mean_sparsity={last.mean_sparsity:.4f} "
        f"lambda={lam_final:.6f}"
    )
    click.echo(f"wrote {dict_path}")


@main.command("build-qubo")
@_common_options
@click.option("--dataset", type=str, default=None)
@click.option("--image-index", type=int, default=None)
@click.option("--dict", "dictionary_path", type=str, default=None, help="Dictionary JSON file.")
@click.option("--lam", "--lambda", "lam", type=float, default=None, help="Sparsity penalty.")
@click.option("--patches", type=str, default=None)
def cmd_build_qubo(config_path, seed, out, workers, dataset, image_index, dictionary_path, lam, patches):
    """Write per-patch QUBOs in COO text plus a JSON mirror."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        dataset=dataset,
        image_index=image_index,
        dictionary_path=dictionary_path,
        lam=lam,
        patches=patches,
    )
    triples, _ = _gather_problems(cfg, None)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, problem, _patch in triples:
        save_qubo(problem, out_dir / f"qubo_{index:02d}.qubo")
        save_qubo_json(problem, out_dir / f"qubo_{index:02d}.json")
    click.echo(f"wrote {len(triples)} QUBOs (n={triples[0][1].n}) to {out_dir}")


def _execute_protocol(cfg: ExperimentConfig, triples, out_dir: Path) -> list[PatchResult]:
    sampler = _build_sampler(cfg)
    results: list[PatchResult] = []

    def solve_job(index: int, problem: QuboProblem):
        patch_seed = derived_seed(cfg.seed, index)
        if cfg.protocol == "plain":
            if cfg.sampler == "reverse-sa":
                raise click.UsageError(
                    "reverse-sa cannot cold start; use the qemc protocol or warm-start"
                )
            request = SamplerRequest(problem, num_reads=cfg.reads, seed=patch_seed)
            sampleset = sampler(request)
            persist_run(sampleset, out_dir, f"samples_{index:02d}", config={"patch": index})
            state, e = sampleset.best
            return PatchResult(index, problem, state, e, sampleset.min_energy_count())
        if cfg.protocol == "warm-start":
            trace = iterated_warm_start(
                problem, sampler, iterations=cfg.iterations, seed=patch_seed
            )
            persist_run(trace, out_dir, f"chain_{index:02d}", config={"patch": index})
            count = int(
                sum(
                    1
                    for r in trace.records
                    if r.batch_min_energy <= trace.best_energy + 1e-9
                )
            )
            return PatchResult(index, problem, trace.best_state, trace.best_energy, count)
        if cfg.protocol == "qemc":
            if cfg.sampler != "reverse-sa":
                chain_sampler = sampler
                cold = None
            else:
                chain_sampler = None  # built per s below
                cold = _cold_sampler(cfg)
            best = None
            for s_value in cfg.s_values:
                if cfg.sampler == "reverse-sa":
                    rconfig = ReverseScheduleConfig(s=s_value, sweeps=cfg.sweeps, reads=cfg.reads)
                    chain_sampler = lambda req, rc=rconfig: reverse_sa_sampler(req, rc)
                trace = qemc_chain(
                    problem,
                    chain_sampler,
                    iterations=cfg.iterations,
                    batch=cfg.batch,
                    seed=derived_seed(patch_seed, int(s_value * 10_000)),
                    cold_sampler=cold,
                    elitist=cfg.elitist,
                    metadata={"s": s_value},
                )
                persist_run(
                    trace,
                    out_dir,
                    f"chain_{index:02d}_s{s_value:g}",
                    config={"patch": index, "s": s_value},
                )
                if best is None or trace.best_energy < best[1]:
                    best = (trace.best_state, trace.best_energy)
            count = 1  # chains pool s values; occurrence counts are per-trace artifacts
            return PatchResult(index, problem, best[0], best[1], count)
        raise click.UsageError(f"unknown protocol {cfg.protocol!r}")

    jobs = [lambda i=index, pr=problem: solve_job(i, pr) for index, problem, _ in triples]
    results = _run_patch_jobs(jobs, cfg.workers)
    return sorted(results, key=lambda r: r.index)


def _solve_command_body(cfg: ExperimentConfig, qubos: Optional[str]) -> None:
    triples, _ = _gather_problems(cfg, qubos)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, problem, _patch in triples:
        save_qubo_json(problem, out_dir / f"qubo_{index:02d}.json")
    results = _execute_protocol(cfg, triples, out_dir)
    _write_best_states(results, out_dir)
    report = _write_report(results, out_dir)
    click.echo(f"wrote {report}")


@main.command("solve")
@_common_options
@click.option("--sampler", type=click.Choice(["sa", "nebm", "brute", "random", "reverse-sa"]), default=None)
@click.option("--dataset", type=str, default=None)
@click.option("--image-index", type=int, default=None)
@click.option("--dict", "dictionary_path", type=str, default=None)
@click.option("--lam", "--lambda", "lam", type=float, default=None)
@click.option("--patches", type=str, default=None)
@click.option("--qubos", type=str, default=None, help="Glob of prebuilt .qubo/.json problems (skips the image pipeline).")
@click.option("--protocol", type=click.Choice(["plain", "warm-start", "qemc"]), default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--s-values", type=str, default=None, help="Comma-separated anneal fractions for qemc.")
def cmd_solve(config_path, seed, out, workers, sampler, dataset, image_index,
              dictionary_path, lam, patches, qubos, protocol, iterations, batch, s_values):
    """Sample every selected QUBO and emit a report table."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        sampler=sampler,
        dataset=dataset,
        image_index=image_index,
        dictionary_path=dictionary_path,
        lam=lam,
        patches=patches,
        protocol=protocol,
        iterations=iterations,
        batch=batch,
        s_values=_parse_floats(s_values) if s_values else None,
    )
    _solve_command_body(cfg, qubos)


@main.command("warm-start")
@_common_options
@click.option("--sampler", type=click.Choice(["sa", "nebm", "brute", "random", "reverse-sa"]), default=None)
@click.option("--dataset", type=str, default=None)
@click.option("--image-index", type=int, default=None)
@click.option("--dict", "dictionary_path", type=str, default=None)
@click.option("--lam", "--lambda", "lam", type=float, default=None)
@click.option("--patches", type=str, default=None)
@click.option("--qubos", type=str, default=None)
@click.option("--iterations", type=int, default=None)
def cmd_warm_start(config_path, seed, out, workers, sampler, dataset, image_index,
                   dictionary_path, lam, patches, qubos, iterations):
    """Iterated warm starting: each run seeds the next with its best state."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        sampler=sampler,
        dataset=dataset,
        image_index=image_index,
        dictionary_path=dictionary_path,
        lam=lam,
        patches=patches,
        iterations=iterations,
        protocol="warm-start",
    )
    _solve_command_body(cfg, qubos)


@main.command("qemc")
@_common_options
@click.option("--dataset", type=str, default=None)
@click.option("--image-index", type=int, default=None)
@click.option("--dict", "dictionary_path", type=str, default=None)
@click.option("--lam", "--lambda", "lam", type=float, default=None)
@click.option("--patches", type=str, default=None)
@click.option("--qubos", type=str, default=None)
@click.option("--iterations", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--s-values", type=str, default=None)
def cmd_qemc(config_path, seed, out, workers, dataset, image_index,
             dictionary_path, lam, patches, qubos, iterations, batch, s_values):
    """QEMC chains over the reverse-annealing schedule, one trace per (patch, s)."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        dataset=dataset,
        image_index=image_index,
        dictionary_path=dictionary_path,
        lam=lam,
        patches=patches,
        iterations=iterations,
        batch=batch,
        s_values=_parse_floats(s_values) if s_values else None,
        protocol="qemc",
        sampler="reverse-sa",
    )
    _solve_command_body(cfg, qubos)


@main.command("reconstruct")
@_common_options
@click.option("--dataset", type=str, default=None)
@click.option("--image-index", type=int, default=None)
@click.option("--dict", "dictionary_path", type=str, default=None)
@click.option("--lam", "--lambda", "lam", type=float, default=None)
@click.option("--run", "run_dir", type=str, required=True, help="Directory with best_states.json from a solve run.")
def cmd_reconstruct(config_path, seed, out, workers, dataset, image_index,
                    dictionary_path, lam, run_dir):
    """Rebuild the image from a run's best per-patch states; write PGM + metrics."""
    cfg = resolve_config(
        config_path,
        seed=seed,
        out=out,
        workers=workers,
        dataset=dataset,
        image_index=image_index,
        dictionary_path=dictionary_path,
        lam=lam,
    )
    states_path = Path(run_dir) / "best_states.json"
    if not states_path.exists():
        raise click.UsageError(f"best states file not found: {states_path}")
    best = json.loads(states_path.read_text(encoding="utf-8"))
    image = _load_image(cfg)
    dictionary = _load_dictionary(cfg)
    tiles = patch_image(image, cfg.patch_edge)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    recon_tiles = []
    sidecar = {}
    for key in sorted(best, key=int):
        index = int(key)
        if not 0 <= index < len(tiles):
            raise click.UsageError(f"{states_path}: patch index {index} out of range")
        activation = np.array([int(c) for c in best[key]["state"]], dtype=np.uint8)
        tile = tiles[index]
        recon_tiles.append(reconstruct(dictionary, activation, tile.origin))
        m = metrics(tile, dictionary, activation, cfg.lam)
        problem = build_qubo(tile, dictionary, cfg.lam, cfg.qubo_mode)
        sidecar[key] = {
            "energy": energy(problem, activation),
            "recon_error": m.recon_error,
            "sparsity": m.sparsity,
            "objective": m.objective,
        }
    recon = unpatch(recon_tiles)
    write_pgm(recon, out_dir / "reconstruction.pgm")
    (out_dir / "reconstruction_metrics.json").write_text(
        json.dumps(sidecar, sort_keys=True), encoding="utf-8"
    )
    click.echo(f"wrote {out_dir / 'reconstruction.pgm'} ({len(recon_tiles)} patches)")


@main.command("report")
@_common_options
@click.option("--run", "run_dir", type=str, required=True, help="Directory with samples_*.json and qubo_*.json artifacts.")
def cmd_report(config_path, seed, out, workers, run_dir):
    """Rebuild the report table from a run directory, re-verifying stored energies."""
    run_path = Path(run_dir)
    sample_files = sorted(
        p for p in run_path.glob("samples_*.json")
        if not p.name.endswith(".manifest.json")
    )
    if not sample_files:
        raise click.UsageError(f"no samples_*.json artifacts in {run_path}")
    results = []
    for sample_file in sample_files:
        index = int(sample_file.stem.split("_")[1])
        sampleset = SampleSet.from_json_dict(
            json.loads(sample_file.read_text(encoding="utf-8"))
        )
        qubo_file = run_path / f"qubo_{index:02d}.json"
        if not qubo_file.exists():
            raise click.UsageError(f"missing problem file {qubo_file}")
        problem = load_qubo_json(qubo_file)
        sampleset.verify(problem)
        state, e = sampleset.best
        results.append(PatchResult(index, problem, state, e, sampleset.min_energy_count()))
    out_dir = Path(resolve_config(config_path, out=out).out) if out else run_path
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _write_report(results, out_dir)
    click.echo(f"wrote {report}")


if __name__ == "__main__":
    main()
