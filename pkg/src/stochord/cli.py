"""Command-line front end: scenario configs, sweeps and CSV output.

Exit codes: 0 success (or order holds), 1 numeric failure, 2 invalid
configuration or arguments, 3 order fails, 4 order inconclusive.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import dataclasses
import os
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from . import channels as ch
from . import metrics as mt
from . import montecarlo as mc
from . import noise as nz
from . import orders as od
from . import systems as sy
from .specfun import QuadratureError

__all__ = [
    "ConfigError",
    "Scenario",
    "parse_channel",
    "parse_metric",
    "parse_topology",
    "parse_noise",
    "parse_grid",
    "parse_config",
    "load_figure",
    "run",
    "main",
]

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_FAILS, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4

COMMANDS = ("order-check", "avg-metric", "capacity", "system-sim", "noise-sim")
FIGURES = range(3, 11)
DEFAULT_SEED = 0
DEFAULT_SAMPLES = 1_000_000


class ConfigError(ValueError):
    """Invalid scenario; ``line`` and ``key`` locate the offending entry."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


# ---------------------------------------------------------------------------
# model expressions


def _scaled(base, c):
    return ch.Scaled(base, float(c))


def _topology(kind: str):
    def build(m):
        if isinstance(m, bool) or int(m) != m:
            raise ValueError(f"{kind} needs an integer branch count, got {m!r}")
        return sy.Topology(kind, int(m))
    return build


def _relay_network(branches, direct=True):
    return sy.Topology("mb_mh_af", branches=tuple(int(b) for b in branches), with_direct_link=bool(direct))


CHANNELS: dict[str, Callable] = {
    "rayleigh": ch.Rayleigh,
    "rician": lambda k: ch.Rician(float(k)),
    "nakagami": lambda m: ch.Nakagami(float(m)),
    "pareto": lambda beta: ch.ParetoSinr(float(beta)),
    "lognormal": lambda sigma_db: ch.LognormalShadow(float(sigma_db)),
    "product": ch.Product,
    "scaled": _scaled,
}
METRICS: dict[str, Callable] = {
    "dpsk": mt.Dpsk,
    "bpsk": mt.bpsk,
    "qfunc": lambda a, b: mt.AQsqrtB(float(a), float(b)),
    "mpsk": mt.Mpsk,
    "mqam": mt.Mqam,
    "capacity": mt.Capacity,
}
TOPOLOGIES: dict[str, Callable] = {k: _topology(k) for k in ("mrc", "egc", "sc", "mh_af", "mh_df", "pdc")}
TOPOLOGIES["mb_mh_af"] = _relay_network
NOISES: dict[str, Callable] = {
    "gaussian": nz.Gaussian,
    "sas": lambda alpha: nz.SymmetricAlphaStable(float(alpha)),
    "uniform": lambda half_width=nz.UniformBounded.half_width: nz.UniformBounded(float(half_width)),
    "compound": nz.CompoundGaussian,
}


def _evaluate(node: ast.AST, registry: dict[str, Callable], nested: dict[str, Callable]):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _evaluate(node.operand, registry, nested)
        if not isinstance(v, (int, float)):
            raise ValueError("sign applied to a non-number")
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, (ast.Tuple, ast.List)):
        return tuple(_evaluate(e, registry, nested) for e in node.elts)
    if isinstance(node, ast.Constant) and isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in registry:
        # bare nested name, e.g. product(rayleigh, lognormal(4))
        node = ast.Call(func=node, args=[], keywords=[])
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        ctor = registry.get(name)
        if ctor is None:
            raise ValueError(f"unknown name {name!r}; expected one of {', '.join(sorted(registry))}")
        # arguments of composite constructors are themselves channel expressions
        sub = nested if name in ("product", "scaled", "compound") else {}
        args = [_evaluate(a, sub or registry, nested) for a in node.args]
        kwargs = {kw.arg: _evaluate(kw.value, sub or registry, nested) for kw in node.keywords}
        try:
            return ctor(*args, **kwargs)
        except TypeError as exc:
            raise ValueError(f"bad arguments to {name}(): {exc}") from None
    raise ValueError(f"unsupported syntax {ast.unparse(node)!r}")


def _parse_expr(text: str, registry: dict[str, Callable], what: str):
    text = text.strip()
    if not text:
        raise ValueError(f"empty {what} expression")
    if re.fullmatch(r"[A-Za-z_]\w*", text):
        text += "()"
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {what} expression {text!r}: {exc.msg}") from None
    return _evaluate(tree.body, registry, CHANNELS)


def parse_channel(text: str) -> ch.ChannelModel:
    """``rician(k=5)``, ``product(rician(k=2), lognormal(sigma_db=4))``, ..."""
    model = _parse_expr(text, CHANNELS, "channel")
    if not isinstance(model, (ch.Rayleigh, ch.Rician, ch.Nakagami, ch.ParetoSinr,
                              ch.LognormalShadow, ch.Product, ch.Scaled)):
        raise ValueError(f"{text!r} is not a channel model")
    return model


def parse_metric(text: str) -> mt.MetricFunction:
    return _parse_expr(text, METRICS, "metric")


def parse_topology(text: str) -> sy.Topology:
    return _parse_expr(text, TOPOLOGIES, "topology")


def parse_noise(text: str) -> nz.NoiseModel:
    return _parse_expr(text, NOISES, "noise")


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive, dB) or a comma-separated list of dB values."""
    text = text.strip().strip("[]()")
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need start <= stop and step > 0")
            return mc.default_grid_db(step, start, stop)
        grid = tuple(float(p) for p in text.split(",") if p.strip())
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("values must be strictly increasing")
        return grid
    except ValueError as exc:
        raise ValueError(f"bad grid {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    command: str
    channels: list = field(default_factory=list)
    order: str | None = None
    metric: mt.MetricFunction | None = None
    topology: sy.Topology | None = None
    noise: nz.NoiseModel | None = None
    capacity: str | None = None
    grid: tuple[float, ...] | None = None
    samples: int | None = None
    seed: int | None = None
    method: str | None = None
    threads: int | None = None
    output_path: str | None = None
    title: str = ""

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")
        n_ch = len(self.channels)
        if self.command == "order-check":
            if self.order not in ("st", "cx", "lt"):
                raise ConfigError("order must be one of st, cx, lt", key="order")
            if n_ch != 2:
                raise ConfigError("order-check compares exactly two channels", key="channel_y")
            return
        if n_ch not in (1, 2):
            raise ConfigError(f"{self.command} takes one or two channels, got {n_ch}", key="channel_x")
        if self.command == "capacity" and self.capacity not in ("erg", "ci", "oa"):
            raise ConfigError("capacity kind must be one of erg, ci, oa", key="capacity")
        if self.command in ("avg-metric", "system-sim") and self.metric is None:
            raise ConfigError(f"{self.command} needs a metric", key="metric")
        if self.command == "system-sim" and self.topology is None:
            raise ConfigError("system-sim needs a topology", key="topology")
        if self.command == "noise-sim" and self.noise is None:
            raise ConfigError("noise-sim needs a noise model", key="noise")
        if self.method not in (None, "monte_carlo", "quadrature"):
            raise ConfigError("method must be monte_carlo or quadrature", key="method")
        if self.method == "quadrature" and self.command in ("system-sim", "noise-sim"):
            raise ConfigError(f"{self.command} is Monte Carlo only", key="method")


SCHEMA: dict[str, dict[str, Callable]] = {
    "scenario": {"command": str, "title": str},
    "model": {
        "channel_x": parse_channel,
        "channel_y": parse_channel,
        "order": str,
        "metric": parse_metric,
        "topology": parse_topology,
        "noise": parse_noise,
        "capacity": str,
    },
    "sweep": {"grid": parse_grid, "samples": int, "seed": int, "method": str, "threads": int},
    "output": {"path": str},
}


def _locate(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if m := re.fullmatch(r"\[([^\]]+)\]", line):
            section = m.group(1).strip().lower()
            lines.setdefault((section, ""), no)
        elif section and (m := re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)):
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return ast.literal_eval(value)
    return value


def parse_config(text: str, validate: bool = True) -> Scenario:
    """Parse and validate an INI-style scenario.

    Sections ``[scenario]``, ``[model]``, ``[sweep]`` and ``[output]``;
    values may be quoted. Errors carry the line and key at fault. With
    ``validate=False`` an incomplete scenario is accepted so command-line
    flags can fill it in.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None
    where = _locate(text)
    values: dict[str, object] = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=where.get((sec, "")))
        for key, raw in parser.items(section):
            line = where.get((sec, key))
            conv = SCHEMA[sec].get(key)
            if conv is None:
                raise ConfigError(f"unknown key in [{section}]", line=line, key=key)
            try:
                values[f"{sec}.{key}"] = conv(_unquote(raw))
            except (ValueError, SyntaxError) as exc:
                raise ConfigError(str(exc), line=line, key=key) from None

    chans = [values[k] for k in ("model.channel_x", "model.channel_y") if k in values]
    scen = Scenario(
        command=values.get("scenario.command", ""),
        channels=chans,
        order=values.get("model.order"),
        metric=values.get("model.metric"),
        topology=values.get("model.topology"),
        noise=values.get("model.noise"),
        capacity=values.get("model.capacity"),
        grid=values.get("sweep.grid"),
        samples=values.get("sweep.samples"),
        seed=values.get("sweep.seed"),
        method=values.get("sweep.method"),
        threads=values.get("sweep.threads"),
        output_path=values.get("output.path"),
        title=values.get("scenario.title", ""),
    )
    if not validate:
        return scen
    try:
        scen.validate()
    except ConfigError as exc:
        key_map = {"channel_x": "model", "channel_y": "model", "order": "model", "metric": "model",
                   "topology": "model", "noise": "model", "capacity": "model", "method": "sweep",
                   "command": "scenario"}
        line = where.get((key_map.get(exc.key, ""), exc.key or ""))
        raise ConfigError(str(exc).split(": ", 1)[-1], line=line, key=exc.key) from None
    return scen


def load_figure(number: int) -> Scenario:
    """Bundled scenario reproducing one of the simulation figures (3..10)."""
    if number not in FIGURES:
        raise ConfigError(f"figure must be in {FIGURES.start}..{FIGURES.stop - 1}, got {number}")
    text = resources.files("stochord").joinpath("scenarios", f"fig{number}.cfg").read_text("utf-8")
    return parse_config(text)


# ---------------------------------------------------------------------------
# execution


def _mc_evaluator(scen: Scenario, channel: ch.ChannelModel) -> Callable:
    if scen.command == "avg-metric":
        return lambda rho, rng, n: mt.instant(scen.metric, rho * np.asarray(ch.sample(channel, rng, n)))
    if scen.command == "system-sim":
        top = scen.topology.iid(channel)
        return lambda rho, rng, n: sy.evaluate_samples(top, scen.metric, rho, sy.draw_links(top, rng, n))
    if scen.command == "noise-sim":
        return lambda rho, rng, n: nz.error_indicators(
            scen.noise, np.asarray(ch.sample(channel, rng, n), dtype=float), rho, rng)
    raise ValueError(f"{scen.command} has no Monte Carlo evaluator")


def _exact_evaluator(scen: Scenario, channel: ch.ChannelModel) -> Callable:
    if scen.command == "capacity":
        fn = {"erg": mt.ergodic_capacity, "ci": mt.ci_capacity, "oa": mt.oa_capacity}[scen.capacity]
        return lambda rho: fn(channel, rho)
    return lambda rho: mt.average_metric(channel, scen.metric, rho, method="quadrature").value


def _method(scen: Scenario) -> str:
    if scen.command == "capacity":
        return "quadrature"
    return scen.method or "monte_carlo"


def _default_grid(scen: Scenario) -> tuple[float, ...]:
    return mc.default_grid_db(1.0 if scen.command == "capacity" else 0.5)


def sweep(scen: Scenario) -> list[mc.SweepResult]:
    """Run one sweep per channel; all series share the per-point streams."""
    method = _method(scen)
    spec = mc.SweepSpec(
        scen.grid or _default_grid(scen),
        n_samples=scen.samples or DEFAULT_SAMPLES,
        seed=DEFAULT_SEED if scen.seed is None else scen.seed,
        method=method,
    )
    out = []
    for channel in scen.channels:
        ev = _mc_evaluator(scen, channel) if method == "monte_carlo" else _exact_evaluator(scen, channel)
        out.append(mc.run_sweep(spec, ev, threads=scen.threads or 1,
                                metadata={"channel": ch.describe(channel), "command": scen.command}))
    return out


def _order_check(scen: Scenario, out) -> int:
    x, y = scen.channels
    check = {"st": od.check_usual, "cx": od.check_convex, "lt": od.check_lt}[scen.order]
    v = check(x, y)
    rel = {"st": "<=st", "cx": "<=cx", "lt": "<=Lt"}[scen.order]
    print(f"{ch.describe(x)} {rel} {ch.describe(y)}: {v.holds.value} (margin {v.margin:.3g})", file=out)
    if v.note:
        print(f"  {v.note}", file=out)
    if v.holds is od.Verdict.FAILS:
        c = v.counterexample
        at = "means" if c.point is None else f"at {c.point:.6g}"
        print(f"  witness {at}: {c.lhs:.6g} vs {c.rhs:.6g}", file=out)
        return EXIT_FAILS
    return EXIT_OK if v.holds is od.Verdict.HOLDS else EXIT_INCONCLUSIVE


def run(scen: Scenario, out=None) -> int:
    """Execute a validated scenario and write its CSV; returns the exit code."""
    out = out or sys.stdout
    if scen.command == "order-check":
        return _order_check(scen, out)
    results = sweep(scen)
    labels = [ch.describe(c) for c in scen.channels] if len(results) > 1 else None
    text = mc.write_csv(results, labels)
    if scen.output_path:
        with open(scen.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {len(results)} series x {len(results[0].points)} points to {scen.output_path}", file=out)
    else:
        out.write(text)
    if len(results) == 2:
        intervals = mc.crossover_detect(results[0], results[1])
        desc = ", ".join(f"[{a:g}, {b:g}] dB" for a, b in intervals) or "none"
        print(f"significant crossovers: {desc}", file=sys.stderr if not scen.output_path else out)
    return EXIT_OK


def _env_seed() -> int | None:
    raw = os.environ.get("STOCHORD_SEED")
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"STOCHORD_SEED must be an integer, got {raw!r}", key="STOCHORD_SEED") from None


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file; flags override its values")
    common.add_argument("--seed", type=int, help="master seed (default: $STOCHORD_SEED or 0)")
    common.add_argument("--samples", type=int, help="Monte Carlo samples per grid point")
    common.add_argument("--grid", help="SNR grid in dB, start:stop:step or a comma list")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--method", choices=("monte_carlo", "quadrature"))

    p = argparse.ArgumentParser(prog="stochord", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("order-check", parents=[common], help="test X <= Y in the st, cx or Lt order")
    s.add_argument("order", choices=("st", "cx", "lt"))
    s.add_argument("channel_x")
    s.add_argument("channel_y")

    for name, helptext in (("avg-metric", "average an instantaneous metric over fading"),
                           ("system-sim", "simulate a combining or relaying topology"),
                           ("noise-sim", "BPSK error rate in non-Gaussian noise")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--channel", action="append", dest="channels", help="channel expression (repeatable)")
        s.add_argument("--metric")
        if name == "system-sim":
            s.add_argument("--topology")
        if name == "noise-sim":
            s.add_argument("--noise")

    s = sub.add_parser("capacity", parents=[common], help="ergodic, channel-inversion or water-filling capacity")
    s.add_argument("kind", choices=("erg", "ci", "oa"))
    s.add_argument("channels", nargs="*", help="one or two channel expressions")

    s = sub.add_parser("reproduce-figure", parents=[common], help="rerun a bundled figure scenario")
    s.add_argument("figure", type=int, choices=list(FIGURES))
    return p


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.command == "reproduce-figure":
        scen = load_figure(args.figure)
    elif args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                scen = parse_config(fh.read(), validate=False)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if scen.command and scen.command != args.command:
            raise ConfigError(f"config is for {scen.command!r}, not {args.command!r}", key="command")
        scen.command = args.command
    else:
        scen = Scenario(args.command)

    def parsed(fn, text, key):
        try:
            return fn(text)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key) from None

    if args.command == "order-check":
        scen.order = args.order
        scen.channels = [parsed(parse_channel, args.channel_x, "channel_x"),
                         parsed(parse_channel, args.channel_y, "channel_y")]
    elif args.command == "capacity":
        scen.capacity = args.kind
        if args.channels:
            scen.channels = [parsed(parse_channel, c, "channel") for c in args.channels]
    elif args.command != "reproduce-figure":
        if args.channels:
            scen.channels = [parsed(parse_channel, c, "channel") for c in args.channels]
        if args.metric:
            scen.metric = parsed(parse_metric, args.metric, "metric")
        if getattr(args, "topology", None):
            scen.topology = parsed(parse_topology, args.topology, "topology")
        if getattr(args, "noise", None):
            scen.noise = parsed(parse_noise, args.noise, "noise")

    # precedence: flags > config > $STOCHORD_SEED > built-in defaults
    if scen.seed is None:
        scen.seed = _env_seed()
    overrides = {"seed": args.seed, "samples": args.samples, "threads": args.threads,
                 "output_path": args.out, "method": args.method}
    if args.grid:
        overrides["grid"] = parsed(parse_grid, args.grid, "grid")
    scen = dataclasses.replace(scen, **{k: v for k, v in overrides.items() if v is not None})
    scen.validate()
    return scen


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scen = _scenario_from_args(args)
        mc.SweepSpec(scen.grid or (0.0,), n_samples=scen.samples or DEFAULT_SAMPLES,
                     seed=scen.seed or 0, method=_method(scen) if scen.command != "order-check" else "quadrature")
    except ValueError as exc:
        print(f"stochord: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(scen)
    except (mc.SweepError, QuadratureError, FloatingPointError, ArithmeticError,
            ch.DensityUnavailable) as exc:
        print(f"stochord: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
