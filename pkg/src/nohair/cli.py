"""Command-line campaigns: ``nohair verify | sweep | entangle | diamond``.

Every subcommand reads one strict JSON config (unknown keys are errors) and
writes flat files under ``--out``.  Instance ``k`` draws all of its
randomness from ``SeededRng(seed, k)``, and rows are written in instance
order, so outputs do not depend on the worker count.

Exit codes: 0 success, 1 an inequality failed, 2 bad config or input,
3 not enough certified points for a fit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    FAMILIES,
    Channel,
    ChannelError,
    ChannelFamilySpec,
    embed_family_as_horizon,
    identity_channel,
    ideal_model,
    make_family,
    random_model,
)
from .entangled import SchmidtInput, der_bound_check, er_pivot, factorization_residual
from .linalg import SeededRng
from .metrics import diamond_distance
from .report import (
    ENTANGLE_COLUMNS,
    RESULT_COLUMNS,
    Console,
    verdict_counts,
    write_csv,
    write_frontier,
    write_json,
)
from .tradeoff import (
    FAIL,
    PASS,
    INDETERMINATE,
    InsufficientData,
    ScalingPoint,
    VerifyConfig,
    compute_epsilon,
    fit_points,
    verify_tradeoff,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
MODEL_KINDS = ("random", "ideal", "ideal_random")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configs


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    tolerance: float = 1e-6
    restarts: int = 32
    samples: int = 256
    output_dir: typing.Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")


@dataclass(frozen=True)
class PivotSettings(RunConfig):
    pivot_samples: int = 16
    pivot_restarts: int = 16
    pivot_rounds: int = 20

    def verify_config(self, lemma1_pairs: int = 0) -> VerifyConfig:
        return VerifyConfig(
            tolerance=self.tolerance,
            restarts=self.restarts,
            samples=self.samples,
            pivot_samples=self.pivot_samples,
            pivot_restarts=self.pivot_restarts,
            pivot_rounds=self.pivot_rounds,
            lemma1_pairs=lemma1_pairs,
        )


def _check_dims(name: str, dims: list[int]) -> None:
    if not dims or any(d < 1 for d in dims):
        raise ConfigError(f"{name} must be a nonempty list of positive integers")


@dataclass(frozen=True)
class VerifyRunConfig(PivotSettings):
    n_models: int = 1000
    dim_f: list[int] = field(default_factory=lambda: [2])
    dim_bh: list[int] = field(default_factory=lambda: [2, 4])
    model: str = "random"
    lemma1_pairs: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.n_models < 1:
            raise ConfigError("n_models must be >= 1")
        _check_dims("dim_f", self.dim_f)
        _check_dims("dim_bh", self.dim_bh)
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}")


@dataclass(frozen=True)
class SweepRunConfig(PivotSettings):
    family: str = ""
    params: list[float] = field(default_factory=list)
    dim: int = 2

    def __post_init__(self):
        super().__post_init__()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}")
        if not self.params:
            raise ConfigError("params must be a nonempty list")
        for p in self.params:
            ChannelFamilySpec(self.family, self.dim, p)


@dataclass(frozen=True)
class EntangleRunConfig(PivotSettings):
    spectra: list[list[float]] = field(default_factory=list)
    n_models: int = 1
    dim_f: list[int] = field(default_factory=lambda: [2])
    dim_bh: list[int] = field(default_factory=lambda: [2])
    model: str = "random"
    random_pairs: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not self.spectra:
            raise ConfigError("spectra must be a nonempty list of Schmidt spectra")
        for s in self.spectra:
            SchmidtInput(tuple(s))
        if self.n_models < 1 or self.random_pairs < 0:
            raise ConfigError("n_models must be >= 1 and random_pairs >= 0")
        _check_dims("dim_f", self.dim_f)
        _check_dims("dim_bh", self.dim_bh)
        if max(len(s) for s in self.spectra) > min(self.dim_f):
            raise ConfigError("a spectrum is longer than the infaller dimension")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}")


@dataclass(frozen=True)
class DiamondRunConfig(RunConfig):
    a: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)
    max_iter: int = 200_000

    def __post_init__(self):
        super().__post_init__()
        if not self.a or not self.b:
            raise ConfigError("both channel specs 'a' and 'b' are required")


CONFIGS = {
    "verify": VerifyRunConfig,
    "sweep": SweepRunConfig,
    "entangle": EntangleRunConfig,
    "diamond": DiamondRunConfig,
}


def _coerce(name: str, value, tp):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(name, value, args[0])
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list")
        (inner,) = typing.get_args(tp)
        return [_coerce(f"{name}[{i}]", v, inner) for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be an object")
        return value
    raise ConfigError(f"unsupported type for {name}")


def parse_config(command: str, data) -> RunConfig:
    cls = CONFIGS[command]
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    kwargs = {k: _coerce(k, v, hints[k]) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (ChannelError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(command: str, path: Path, seed: int | None = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if seed is not None and isinstance(data, dict):
        data = dict(data, seed=seed)
    return parse_config(command, data)


# ---------------------------------------------------------------------------
# Instances (module level so worker processes can import them)


def _dims_for(cfg, k: int) -> tuple[int, int]:
    combos = [(f, b) for f in cfg.dim_f for b in cfg.dim_bh]
    return combos[k % len(combos)]


def _model_for(cfg, k: int, gen):
    f, b = _dims_for(cfg, k)
    if cfg.model == "random":
        return random_model(f, b, gen)
    if cfg.model == "ideal":
        return ideal_model(f, b)
    return ideal_model(f, b, gen)


def verify_instance(cfg: VerifyRunConfig, k: int) -> dict:
    rng = SeededRng(cfg.seed, k)
    gen = rng.generator()
    model = _model_for(cfg, k, gen)
    rep = verify_tradeoff(model, cfg.verify_config(cfg.lemma1_pairs), gen)
    return {
        "family": cfg.model,
        "param": None,
        "dim_f": model.dim_f,
        "dim_bh": model.dim_bh,
        "eps_lower": rep.epsilon_lower,
        "eps_upper": rep.epsilon_upper,
        "dmax_lower": rep.dmax_lower,
        "bound": rep.bound_value,
        "ratio": rep.ratio,
        "fid_floor": rep.fidelity_floor,
        "pivot_radius": rep.pivot_radius,
        "verdict": rep.verdict,
        "stream_id": k,
        "_pivot_converged": rep.pivot_converged,
        "_verdicts": rep.verdicts,
    }


def sweep_instance(cfg: SweepRunConfig, k: int) -> dict:
    gen = SeededRng(cfg.seed, k).generator()
    spec = ChannelFamilySpec(cfg.family, cfg.dim, cfg.params[k])
    model = embed_family_as_horizon(spec)
    rep = verify_tradeoff(model, cfg.verify_config(), gen)
    return {
        "family": cfg.family,
        "param": float(cfg.params[k]),
        "dim_f": model.dim_f,
        "dim_bh": model.dim_bh,
        "eps_lower": rep.epsilon_lower,
        "eps_upper": rep.epsilon_upper,
        "dmax_lower": rep.dmax_lower,
        "bound": rep.bound_value,
        "ratio": rep.ratio,
        "fid_floor": rep.fidelity_floor,
        "pivot_radius": rep.pivot_radius,
        "verdict": rep.verdict,
        "stream_id": k,
        "_certified": rep.epsilon_certified,
    }


def _spectrum_pairs(cfg: EntangleRunConfig, dim_f: int, gen) -> list[tuple[tuple, tuple]]:
    spectra = [tuple(s) for s in cfg.spectra]
    pairs = [(spectra[i], spectra[j]) for i in range(len(spectra)) for j in range(i, len(spectra))]
    for _ in range(cfg.random_pairs):
        n = int(gen.integers(1, dim_f + 1))
        a = gen.dirichlet(np.ones(n))
        b = gen.dirichlet(np.ones(n))
        a[-1] = 1.0 - a[:-1].sum()
        b[-1] = 1.0 - b[:-1].sum()
        pairs.append((tuple(np.clip(a, 0, None)), tuple(np.clip(b, 0, None))))
    return pairs


def _fmt_spectrum(s) -> str:
    return ";".join(repr(float(x)) for x in s)


def entangle_instance(cfg: EntangleRunConfig, k: int) -> list[dict]:
    gen = SeededRng(cfg.seed, k).generator()
    model = _model_for(cfg, k, gen)
    pairs = _spectrum_pairs(cfg, model.dim_f, gen)
    eps = compute_epsilon(model, cfg.tolerance, restarts=cfg.restarts, rng=gen)
    pivot = er_pivot(model, cfg.pivot_samples, gen, restarts=cfg.pivot_restarts, max_rounds=cfg.pivot_rounds)
    rows = []
    for a, b in pairs:
        sa, sb = SchmidtInput(a), SchmidtInput(b)
        rec = der_bound_check(model, sa, sb, epsilon_upper=eps.upper)
        res_a = factorization_residual(model, sa, pivot.pivot)
        res_b = factorization_residual(model, sb, pivot.pivot)
        res_bound = math.sqrt(2 * eps.upper) + 1e-6
        if not eps.certified:
            verdict = INDETERMINATE
        elif not rec.holds or (pivot.converged and max(res_a, res_b) > res_bound):
            verdict = FAIL
        else:
            verdict = PASS
        rows.append(
            {
                "model_index": k,
                "dim_f": model.dim_f,
                "dim_bh": model.dim_bh,
                "lambdas_a": _fmt_spectrum(a),
                "lambdas_b": _fmt_spectrum(b),
                "eps_upper": eps.upper,
                "der": rec.der,
                "rhs": rec.rhs,
                "reference_part": rec.reference_part,
                "residual_a": res_a,
                "residual_b": res_b,
                "residual_bound": res_bound,
                "verdict": verdict,
                "stream_id": k,
            }
        )
    return rows


def _run_pool(fn, cfg, count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [fn(cfg, k) for k in range(count)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [cfg] * count, range(count), chunksize=max(1, count // (8 * workers))))


# ---------------------------------------------------------------------------
# Channel specs for ``diamond``


def _matrix(name: str, m) -> np.ndarray:
    try:
        arr = np.array(m, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: entries must be numbers or [re, im] pairs") from exc
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != 2:
        raise ConfigError(f"{name}: each Kraus operator must be a matrix")
    return arr.astype(complex)


def channel_from_spec(spec: dict, name: str) -> Channel:
    keys = set(spec)
    try:
        if keys == {"family", "dim", "param"}:
            return make_family(ChannelFamilySpec(spec["family"], int(spec["dim"]), float(spec["param"])))
        if keys == {"identity"}:
            return identity_channel(int(spec["identity"]))
        if keys == {"kraus"}:
            ops = spec["kraus"]
            if not isinstance(ops, list) or not ops:
                raise ConfigError(f"{name}.kraus must be a nonempty list")
            return Channel.from_kraus([_matrix(f"{name}.kraus[{i}]", m) for i, m in enumerate(ops)])
    except ChannelError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    raise ConfigError(f"{name}: expected keys {{family, dim, param}}, {{identity}} or {{kraus}}, got {sorted(keys)}")


# ---------------------------------------------------------------------------
# Commands


def _manifest(command: str, cfg, started: float, wall: float, streams, counts, workers) -> dict:
    return {
        "command": command,
        "tool_version": __version__,
        "config": dataclasses.asdict(cfg),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "duration_s": round(wall, 3),
        "workers": workers,
        "stream_ids": list(streams),
        "verdicts": counts,
    }


def cmd_verify(cfg: VerifyRunConfig, out: Path, workers: int, console: Console) -> int:
    t0, started = time.perf_counter(), time.time()
    console.info(f"verify: {cfg.n_models} {cfg.model} models, {workers} worker(s)")
    rows = _run_pool(verify_instance, cfg, cfg.n_models, workers)
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    write_frontier(out, [(r["eps_upper"], r["dmax_lower"]) for r in rows], "verify campaign")
    counts = verdict_counts(r["verdict"] for r in rows)
    write_json(out / "manifest.json", _manifest("verify", cfg, started, time.perf_counter() - t0, range(cfg.n_models), counts, workers))
    console.summary(counts)
    return EXIT_FAIL if counts["fail"] else EXIT_OK


def cmd_sweep(cfg: SweepRunConfig, out: Path, workers: int, console: Console) -> int:
    t0, started = time.perf_counter(), time.time()
    n = len(cfg.params)
    console.info(f"sweep: {cfg.family}, {n} points, {workers} worker(s)")
    rows = _run_pool(sweep_instance, cfg, n, workers)
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    write_frontier(out, [(r["eps_upper"], r["dmax_lower"]) for r in rows], f"{cfg.family} sweep")
    counts = verdict_counts(r["verdict"] for r in rows)
    write_json(out / "manifest.json", _manifest("sweep", cfg, started, time.perf_counter() - t0, range(n), counts, workers))
    points = [ScalingPoint(r["param"], r["eps_lower"], r["eps_upper"], r["dmax_lower"], r["_certified"]) for r in rows]
    try:
        fit = fit_points(cfg.family, points)
    except InsufficientData as exc:
        console.error(str(exc))
        return EXIT_DATA
    write_json(
        out / "fit.json",
        {
            "family": cfg.family,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "fitted_params": [p.param for p in points if p.fittable],
            "excluded_params": [p.param for p in points if not p.fittable],
        },
    )
    console.summary(counts)
    console.info(f"log-log slope {fit.slope:.4f} (r^2 = {fit.r_squared:.6f})")
    return EXIT_FAIL if counts["fail"] else EXIT_OK


def cmd_entangle(cfg: EntangleRunConfig, out: Path, workers: int, console: Console) -> int:
    t0, started = time.perf_counter(), time.time()
    console.info(f"entangle: {cfg.n_models} {cfg.model} models, {workers} worker(s)")
    rows = [r for block in _run_pool(entangle_instance, cfg, cfg.n_models, workers) for r in block]
    write_csv(out / "results.csv", ENTANGLE_COLUMNS, rows)
    counts = verdict_counts(r["verdict"] for r in rows)
    write_json(out / "manifest.json", _manifest("entangle", cfg, started, time.perf_counter() - t0, range(cfg.n_models), counts, workers))
    console.summary(counts)
    return EXIT_FAIL if counts["fail"] else EXIT_OK


def cmd_diamond(cfg: DiamondRunConfig, out: Path, workers: int, console: Console) -> int:
    t0, started = time.perf_counter(), time.time()
    a, b = channel_from_spec(cfg.a, "a"), channel_from_spec(cfg.b, "b")
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ConfigError("channels a and b act between different spaces")
    res = diamond_distance(a, b, cfg.tolerance, restarts=cfg.restarts, rng=SeededRng(cfg.seed, 0), max_iter=cfg.max_iter)
    result = {
        "lower": res.lower,
        "upper": res.upper,
        "gap": res.gap,
        "certified": res.certified,
        "iterations": res.iterations,
        "witness_state": [[float(z.real), float(z.imag)] for z in res.witness_state],
    }
    write_json(out / "diamond.json", result)
    write_json(out / "manifest.json", _manifest("diamond", cfg, started, time.perf_counter() - t0, [0], verdict_counts([]), 1))
    console.info(f"diamond distance in [{res.lower:.10f}, {res.upper:.10f}], certified={res.certified}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "sweep": cmd_sweep, "entangle": cmd_entangle, "diamond": cmd_diamond}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nohair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory (default ./runs)")
        p.add_argument("--seed", type=_u64, default=None, help="overrides the config seed")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    console = Console(args.quiet)
    try:
        cfg = load_config(args.command, args.config, args.seed)
        out = args.out or Path(cfg.output_dir or "runs")
        out.mkdir(parents=True, exist_ok=True)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, out, args.workers, console)
    except ConfigError as exc:
        console.error(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        console.error(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
