"""Config-driven experiment runner.

Every subcommand reads one JSON config, writes CSV artifacts (and SVG
figures where a plot is meaningful) into an output directory, and records a
run manifest with the config hash and per-output checksums.  All randomness
flows from the mandatory seed, so a rerun with the same config produces
byte-identical CSVs.

Exit codes: 0 success, 1 validation error, 2 numerical non-convergence
(partial outputs are kept), 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bounds import (
    VariationalPair,
    bounds_to_csv,
    encoder_from_pair,
    ibo_upper_bound,
    minimize_bound,
    tight_bound_value,
)
from .engine import (
    IBOKind,
    IBOSpec,
    OptimizerOptions,
    SweepResult,
    SweepRow,
    beta_sweep,
    optimize_encoder,
    sweep_to_csv,
)
from .figures import divergence_figure, information_plane_figure
from .info import InfoError, nats_to_bits
from .pathologies import (
    QuantizationSpec,
    density_by_name,
    divergence_to_csv,
    map_by_name,
    quantized_mi_divergence,
)
from .tables import Alphabet, Kernel, ProbTable, TableError, integer_alphabet, uniform_table
from .training import (
    LossTable,
    generalization_report,
    genbound_to_csv,
    gibbs_encoder,
    optimize_trained_ibo,
    trained_to_csv,
)
from .world import (
    BudgetExceededError,
    GenerativeWorld,
    build_joint,
    constant_encoder,
    identity_encoder,
    info_report,
    random_encoder,
    world_from_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGED = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


class RunContext:
    def __init__(self, command: str, config_path: str, out_dir: str, seed: int, units: str):
        self.command = command
        self.config_path = config_path
        with open(config_path, "rb") as fh:
            self.config_bytes = fh.read()
        try:
            self.cfg = json.loads(self.config_bytes)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_path}:{e.lineno}: invalid JSON ({e.msg})") from None
        if not isinstance(self.cfg, dict):
            raise ConfigError(f"{config_path}: config must be a JSON object")
        self.out_dir = out_dir
        self.seed = seed
        self.units = units
        self.outputs: dict[str, str] = {}
        self.started = time.perf_counter()
        os.makedirs(out_dir, exist_ok=True)

    def field(self, key: str, default=None, required: bool = False):
        if key in self.cfg:
            return self.cfg[key]
        if required:
            raise ConfigError(f"config is missing required field {key!r}")
        return default

    def resolve(self, path: str) -> str:
        base = os.path.dirname(os.path.abspath(self.config_path))
        return path if os.path.isabs(path) else os.path.join(base, path)

    def write_text(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        _atomic_write(os.path.join(self.out_dir, name), data)
        self.outputs[name] = _sha256(data)

    def write_figure(self, name: str, render) -> None:
        path = os.path.join(self.out_dir, name)
        render(path)
        with open(path, "rb") as fh:
            self.outputs[name] = _sha256(fh.read())

    def write_manifest(self) -> None:
        doc = {
            "command": self.command,
            "config": os.path.basename(self.config_path),
            "config_sha256": _sha256(self.config_bytes),
            "ibolab_version": __version__,
            "seed": self.seed,
            "units": self.units,
            "outputs": self.outputs,
            "wall_time_s": round(time.perf_counter() - self.started, 6),
        }
        _atomic_write(
            os.path.join(self.out_dir, "run_manifest.json"),
            (json.dumps(doc, indent=2) + "\n").encode("utf-8"),
        )

    def scale(self, nats: float) -> float:
        return nats_to_bits(nats) if self.units == "bits" else nats


# -- config materialization -----------------------------------------------------


def _load_world(ctx: RunContext) -> tuple[GenerativeWorld, Alphabet | None]:
    path = ctx.resolve(str(ctx.field("world", required=True)))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read world file {path}: {e}") from None
    try:
        budget = int(ctx.field("cell_budget", 10**7))
        return world_from_json(text, budget)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None
    except KeyError as e:
        raise ConfigError(f"world file {path} is missing field {e.args[0]!r}") from None


def _resolve_t_axis(ctx: RunContext, world: GenerativeWorld, from_world: Alphabet | None) -> Alphabet:
    spec = ctx.field("t_alphabet", ctx.field("theta_alphabet"))
    if spec is None:
        if from_world is not None:
            return from_world
        return integer_alphabet("t", world.past_axis().size)
    if isinstance(spec, int):
        return integer_alphabet("t", spec)
    if isinstance(spec, dict):
        try:
            return Alphabet(str(spec["name"]), tuple(str(s) for s in spec["symbols"]))
        except KeyError as e:
            raise ConfigError(f"t_alphabet is missing field {e.args[0]!r}") from None
    raise ConfigError("t_alphabet must be an integer size or {name, symbols}")


def _build_encoder(ctx: RunContext, world: GenerativeWorld, t_axis: Alphabet, rng: np.random.Generator) -> Kernel:
    spec = ctx.field("encoder", {"kind": "identity"})
    if not isinstance(spec, dict):
        raise ConfigError("encoder must be an object with a 'kind' field")
    kind = str(spec.get("kind", "identity"))
    if kind == "identity":
        return identity_encoder(world)
    if kind == "constant":
        return constant_encoder(world, int(spec.get("t_size", t_axis.size)))
    if kind == "random":
        return random_encoder(world, int(spec.get("t_size", t_axis.size)), rng)
    if kind == "file":
        path = ctx.resolve(str(spec.get("path", "")))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return Kernel.from_json(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read encoder file {path}: {e}") from None
        except KeyError as e:
            raise ConfigError(f"encoder file {path} is missing field {e.args[0]!r}") from None
    raise ConfigError(f"unknown encoder kind {kind!r}")


def _objective_spec(ctx: RunContext) -> IBOSpec:
    obj = ctx.field("objective", required=True)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("objective must be an object with fields kind and nu")
    try:
        kind = IBOKind(str(obj["kind"]).upper())
    except ValueError:
        raise ConfigError(f"unknown objective kind {obj['kind']!r}") from None
    return IBOSpec(kind, float(obj.get("nu", 0.0)))


def _optimizer_options(ctx: RunContext) -> OptimizerOptions:
    opt = ctx.field("optimizer", {})
    if not isinstance(opt, dict):
        raise ConfigError("optimizer must be an object")
    return OptimizerOptions(
        method=str(opt.get("method", "auto")),
        max_iters=int(opt.get("max_iters", 500)),
        step_size=float(opt.get("step_size", 1.0)),
        tolerance=float(opt.get("tolerance", 1e-6)),
        restarts=int(opt.get("restarts", 8)),
        seed=ctx.seed,
        grid_resolution=float(opt.get("grid_resolution", 0.05)),
    )


def _load_loss(ctx: RunContext) -> LossTable:
    path = ctx.resolve(str(ctx.field("loss", required=True)))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return LossTable.from_json(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read loss file {path}: {e}") from None
    except KeyError as e:
        raise ConfigError(f"loss file {path} is missing field {e.args[0]!r}") from None


def _load_pair(ctx: RunContext, world: GenerativeWorld, t_axis: Alphabet, rng: np.random.Generator, default: str) -> VariationalPair | None:
    spec = ctx.field("pair", {"kind": default})
    kind = str(spec.get("kind", default)) if isinstance(spec, dict) else None
    if kind == "optimal":
        return None  # minimize_bound supplies the pair per beta
    if kind == "random":
        past = world.past_axis()
        q_t = ProbTable((t_axis,), rng.dirichlet(np.ones(t_axis.size) * 2.0))
        dec = Kernel((t_axis,), past.axis, rng.dirichlet(np.ones(past.size) * 2.0, size=t_axis.size))
        return VariationalPair(q_t, dec)
    if kind == "file":
        try:
            q_path = ctx.resolve(str(spec["q_t"]))
            d_path = ctx.resolve(str(spec["decoder"]))
        except KeyError as e:
            raise ConfigError(f"pair spec is missing field {e.args[0]!r}") from None
        try:
            with open(q_path, "r", encoding="utf-8") as fh:
                q_t = ProbTable.from_json(fh.read())
            with open(d_path, "r", encoding="utf-8") as fh:
                dec = Kernel.from_json(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read pair file: {e}") from None
        return VariationalPair(q_t, dec)
    raise ConfigError(f"unknown pair kind {kind!r}")


def _float_list(ctx: RunContext, key: str, where: str) -> list[float]:
    raw = ctx.field(key)
    if raw is None:
        parent = ctx.field(where, {})
        raw = parent.get(key) if isinstance(parent, dict) else None
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}.{key} must be a nonempty list")
    return [float(v) for v in raw]


# -- subcommands ----------------------------------------------------------------


def cmd_info(ctx: RunContext) -> int:
    world, t_from_world = _load_world(ctx)
    t_axis = _resolve_t_axis(ctx, world, t_from_world)
    rng = np.random.default_rng(ctx.seed)
    enc = _build_encoder(ctx, world, t_axis, rng)
    r = info_report(build_joint(world, enc))
    u = ctx.units
    header = ",".join(
        f"{name}_{u}" for name in ("I_t_xP", "I_t_xF", "I_t_xP_given_xF", "I_t_xPxF", "H_xP")
    )
    vals = [r.I_t_xP, r.I_t_xF, r.I_t_xP_given_xF, r.I_t_xPxF, r.H_xP]
    row = ",".join(f"{ctx.scale(v):.12g}" for v in vals)
    ctx.write_text("info.csv", header + "\n" + row + "\n")
    return EXIT_OK


def cmd_optimize(ctx: RunContext) -> int:
    world, t_from_world = _load_world(ctx)
    t_axis = _resolve_t_axis(ctx, world, t_from_world)
    spec = _objective_spec(ctx)
    opts = _optimizer_options(ctx)
    res = optimize_encoder(world, spec, opts, t_axis)
    row = SweepRow(spec.nu, res.value, res.report.I_t_xP, res.report.I_t_xF, res.converged, res.checksum)
    result = SweepResult(spec.kind, (row,))
    ctx.write_text("optimize.csv", sweep_to_csv(result))
    ctx.write_text("encoder.json", res.encoder.to_json() + "\n")
    ctx.write_figure(
        "information_plane.svg", lambda p: information_plane_figure(result, ctx.units, p)
    )
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_sweep(ctx: RunContext) -> int:
    world, t_from_world = _load_world(ctx)
    t_axis = _resolve_t_axis(ctx, world, t_from_world)
    spec_kind = _objective_spec(ctx).kind
    nus = _float_list(ctx, "nu_values", "sweep")
    opts = _optimizer_options(ctx)
    result = beta_sweep(world, spec_kind, nus, opts, t_axis)
    ctx.write_text("sweep.csv", sweep_to_csv(result))
    ctx.write_figure(
        "information_plane.svg", lambda p: information_plane_figure(result, ctx.units, p)
    )
    return EXIT_OK if all(r.converged for r in result.rows) else EXIT_NONCONVERGED


def cmd_bounds(ctx: RunContext) -> int:
    world, t_from_world = _load_world(ctx)
    t_axis = _resolve_t_axis(ctx, world, t_from_world)
    rng = np.random.default_rng(ctx.seed)
    enc = _build_encoder(ctx, world, t_axis, rng)
    fj = build_joint(world, enc)
    pair = _load_pair(ctx, world, enc.to_axis, rng, default="optimal")
    betas = _float_list(ctx, "beta_values", "bounds")
    rows = []
    for beta in betas:
        use_pair = pair
        if use_pair is None:
            use_pair, rep = minimize_bound(fj, beta)
        else:
            rep = ibo_upper_bound(fj, use_pair, beta)
        _, residual = tight_bound_value(fj, use_pair, beta)
        rows.append((rep, residual))
    ctx.write_text("bounds.csv", bounds_to_csv(rows))
    return EXIT_OK


def cmd_tempered(ctx: RunContext) -> int:
    world, t_from_world = _load_world(ctx)
    t_axis = _resolve_t_axis(ctx, world, t_from_world)
    rng = np.random.default_rng(ctx.seed)
    pair = _load_pair(ctx, world, t_axis, rng, default="random")
    if pair is None:
        raise ConfigError("tempered requires an explicit pair (random or file), not 'optimal'")
    betas = _float_list(ctx, "beta_values", "tempered")
    rows = []
    for beta in betas:
        enc = encoder_from_pair(pair, beta)
        fj = build_joint(world, enc)
        rep = ibo_upper_bound(fj, pair, beta)
        _, residual = tight_bound_value(fj, pair, beta)
        rows.append((rep, residual))
    ctx.write_text("tempered.csv", bounds_to_csv(rows))
    return EXIT_OK


def cmd_genbound(ctx: RunContext) -> int:
    world, _ = _load_world(ctx)
    lt = _load_loss(ctx)
    alphas = _float_list(ctx, "alpha_values", "genbound")
    sigma_method = str(ctx.field("sigma_method", "hoeffding_range"))
    prior_field = ctx.field("prior", "uniform")
    if prior_field == "uniform":
        prior = uniform_table(lt.theta_axis)
    else:
        path = ctx.resolve(str(prior_field))
        with open(path, "r", encoding="utf-8") as fh:
            prior = ProbTable.from_json(fh.read())
    rows = []
    for alpha in alphas:
        enc = gibbs_encoder(world, lt, prior, alpha)
        rows.append((alpha, generalization_report(world, enc, lt, sigma_method)))
    ctx.write_text("genbound.csv", genbound_to_csv(rows))
    return EXIT_OK


def cmd_trained(ctx: RunContext) -> int:
    world, _ = _load_world(ctx)
    lt = _load_loss(ctx)
    eps = float(ctx.field("epsilon", required=True))
    lams = _float_list(ctx, "lambda_values", "trained")
    opts = _optimizer_options(ctx)
    results = [optimize_trained_ibo(world, lt, eps, lam, opts) for lam in lams]
    ctx.write_text("trained.csv", trained_to_csv(results))
    return EXIT_OK if all(r.converged for r in results) else EXIT_NONCONVERGED


def cmd_appendix(ctx: RunContext) -> int:
    block = ctx.field("appendix", required=True)
    if not isinstance(block, dict):
        raise ConfigError("appendix must be an object")
    dens_spec = block.get("density", {"name": "uniform01"})
    map_spec = block.get("map", {"name": "identity"})
    bins = block.get("bin_counts")
    if not isinstance(bins, list) or not bins:
        raise ConfigError("appendix.bin_counts must be a nonempty list")
    density = density_by_name(str(dens_spec.get("name", "uniform01")), **{k: v for k, v in dens_spec.items() if k != "name"})
    unit_map = map_by_name(str(map_spec.get("name", "identity")), **{k: v for k, v in map_spec.items() if k != "name"})
    spec = QuantizationSpec(density, unit_map, tuple(int(k) for k in bins))
    rows = quantized_mi_divergence(spec)
    ctx.write_text("appendix.csv", divergence_to_csv(rows))
    ctx.write_figure("divergence.svg", lambda p: divergence_figure(rows, ctx.units, p))
    return EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "tempered": cmd_tempered,
    "genbound": cmd_genbound,
    "trained": cmd_trained,
    "appendix": cmd_appendix,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibolab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--units", choices=("nats", "bits"), default=None)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        with open(args.config, "rb") as fh:
            cfg = json.loads(fh.read())
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        seed = args.seed if args.seed is not None else cfg.get("seed")
        if seed is None:
            raise ConfigError("a seed is mandatory: set 'seed' in the config or pass --seed")
        out_dir = args.out or cfg.get("output_dir")
        if not out_dir:
            raise ConfigError("an output directory is required: set 'output_dir' or pass --out")
        units = args.units or str(cfg.get("units", "nats"))
        if units not in ("nats", "bits"):
            raise ConfigError(f"unknown units {units!r}")
        ctx = RunContext(args.command, args.config, out_dir, int(seed), units)
        rc = COMMANDS[args.command](ctx)
        ctx.write_manifest()
        return rc
    except BudgetExceededError as e:
        print(f"ibolab: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except json.JSONDecodeError as e:
        print(f"ibolab: {args.config}:{e.lineno}: invalid JSON ({e.msg})", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, TableError, InfoError, ValueError, OSError) as e:
        print(f"ibolab: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
