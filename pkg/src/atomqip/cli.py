"""
Command-line scenario runner.

    atomqip --list
    atomqip cz-gate --phonon-cutoff 5 --out table.csv
    atomqip --config my-run.yaml --seed 3

Configs are YAML with the top-level keys ``scenario``, ``seed``, ``format``,
``output`` and ``parameters``; unknown keys are rejected with the offending
line. Every output file gets a ``<output>.manifest.json`` next to it.
Exit status: 0 success, 2 configuration error, 3 physics/runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from . import __version__
from .core import PhysicsError
from .scenarios import REGISTRY, Param, Scenario, ScenarioOutput

EXIT_CONFIG = 2
EXIT_PHYSICS = 3
TOP_LEVEL_KEYS = ("scenario", "seed", "format", "output", "parameters")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    parameters: dict[str, Any]
    seed: int
    output_path: Path
    format: str

    def canonical(self) -> dict[str, Any]:
        """Everything that determines the output bytes, with the output path left out."""
        return {"scenario": self.scenario, "seed": self.seed, "format": self.format, "parameters": self.parameters}

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _key_lines(node: yaml.Node | None) -> dict[tuple[str, ...], int]:
    """Map key paths of nested mappings to 1-based source lines."""
    lines: dict[tuple[str, ...], int] = {}

    def walk(n, prefix):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                path = prefix + (str(k.value),)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    walk(node, ())
    return lines


def default_config_text(name: str) -> str:
    return resources.files("atomqip").joinpath("configs", f"{name}.yaml").read_text()


def parse_config(text: str, source: str = "<config>") -> tuple[dict[str, Any], dict[tuple[str, ...], int]]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", source, mark.line + 1 if mark else None) from exc
    lines = _key_lines(node)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source, 1)
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown key {key!r} (allowed: {', '.join(TOP_LEVEL_KEYS)})", source, lines.get((str(key),)))
    params = data.get("parameters", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("'parameters' must be a mapping", source, lines.get(("parameters",)))
    data["parameters"] = params
    return data, lines


def resolve_parameters(
    scenario: Scenario,
    supplied: dict[str, Any],
    source: str = "<config>",
    lines: dict[tuple[str, ...], int] | None = None,
) -> dict[str, Any]:
    lines = lines or {}
    out = {}
    for key in supplied:
        if key not in scenario.params:
            raise ConfigError(
                f"unknown parameter {key!r} for scenario {scenario.name!r}", source, lines.get(("parameters", str(key)))
            )
    for name, spec in scenario.params.items():
        value = supplied.get(name, spec.default)
        try:
            out[name] = spec.coerce(value)
        except ValueError as exc:
            raise ConfigError(f"parameter {name!r} [{spec.unit}]: {exc}", source, lines.get(("parameters", name))) from exc
    return out


def build_config(
    scenario_name: str | None,
    config_path: Path | None,
    overrides: dict[str, Any],
    seed: int | None,
    out: Path | None,
    fmt: str | None,
) -> ScenarioConfig:
    data: dict[str, Any] = {"parameters": {}}
    lines: dict[tuple[str, ...], int] = {}
    source = "<command line>"
    if config_path is not None:
        source = str(config_path)
        try:
            text = config_path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", source) from exc
        data, lines = parse_config(text, source)
    name = data.get("scenario")
    if scenario_name is not None:
        if name is not None and name != scenario_name:
            raise ConfigError(f"config is for scenario {name!r}, not {scenario_name!r}", source, lines.get(("scenario",)))
        name = scenario_name
    if name is None:
        raise ConfigError("no scenario given (pass a scenario name or set 'scenario' in the config)", source)
    if name not in REGISTRY:
        raise ConfigError(f"unknown scenario {name!r}", source, lines.get(("scenario",)))
    scenario = REGISTRY[name]

    params = resolve_parameters(scenario, {**data["parameters"], **overrides}, source, lines)

    seed_value = data.get("seed", 0) if seed is None else seed
    if isinstance(seed_value, bool) or not isinstance(seed_value, int) or seed_value < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed_value!r}", source, lines.get(("seed",)))

    fmt = fmt or data.get("format") or scenario.default_format
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {fmt!r}", source, lines.get(("format",)))

    if out is None:
        configured = data.get("output")
        if configured is not None and not isinstance(configured, str):
            raise ConfigError("'output' must be a path string", source, lines.get(("output",)))
        out = Path(configured) if configured else Path(f"{name}.{fmt}")
    return ScenarioConfig(name, params, seed_value, out, fmt)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _plain(value: Any) -> Any:
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, complex):
        raise TypeError("complex values must be split before output")
    if isinstance(value, float) and value != value:
        return None
    return value


def _cell(value: Any) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(result: ScenarioOutput) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{name} [{unit}]" if unit else name for name, unit in result.columns])
    for row in result.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(config: ScenarioConfig, result: ScenarioOutput) -> str:
    doc = {
        "scenario": config.scenario,
        "version": __version__,
        "seed": config.seed,
        "parameters": config.parameters,
        "summary": {k: _plain(v) for k, v in result.summary.items()},
        "table": {
            "columns": [{"name": n, "unit": u} for n, u in result.columns],
            "rows": [[_plain(v) for v in row] for row in result.rows],
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_schema(name: str) -> dict:
    return json.loads(resources.files("atomqip").joinpath("schemas", name).read_text())


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def build_manifest(config: ScenarioConfig, result: ScenarioOutput, payload: bytes) -> dict:
    return {
        "tool": "atomqip",
        "version": __version__,
        "scenario": config.scenario,
        "seed": config.seed,
        "format": config.format,
        "config_sha256": config.digest(),
        "config": config.canonical(),
        "output": config.output_path.name,
        "output_sha256": hashlib.sha256(payload).hexdigest(),
        "summary": {k: _plain(v) for k, v in result.summary.items()},
    }


def run_scenario(config: ScenarioConfig) -> ScenarioOutput:
    """Run, write the output and its manifest, and return the result."""
    scenario = REGISTRY[config.scenario]
    result = scenario.run(dict(config.parameters), config.seed)
    if config.format == "json":
        text = render_json(config, result)
        jsonschema.validate(json.loads(text), load_schema("output.schema.json"))
    else:
        text = render_csv(result)
    payload = text.encode()
    manifest = build_manifest(config, result, payload)
    jsonschema.validate(manifest, load_schema("manifest.schema.json"))
    config.output_path.parent.mkdir(parents=True, exist_ok=True)
    config.output_path.write_bytes(payload)
    manifest_path(config.output_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_common(parser: argparse.ArgumentParser, default=None):
    # subcommands use SUPPRESS so options given before the scenario name survive
    parser.add_argument("--config", type=Path, default=default, help="YAML config file")
    parser.add_argument("--seed", type=int, default=default, help="random seed (overrides the config)")
    parser.add_argument("--out", type=Path, default=default, help="output file path")
    parser.add_argument("--format", choices=FORMATS, default=default, help="output format")


def _param_help(spec: Param) -> str:
    rng = spec.describe_range()
    default = spec.default if spec.kind != "floats" else " ".join(f"{v:g}" for v in spec.default)
    text = f"{spec.help} [{spec.unit}] (default {default}"
    return text + (f"; {rng})" if rng else ")")


def _metavar(spec: Param) -> str:
    if spec.unit not in ("", "1"):
        return spec.unit
    return "N" if spec.kind == "int" else "X"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomqip", description="Atom-light quantum information scenarios.")
    parser.add_argument("--list", action="store_true", help="list scenarios and exit")
    parser.add_argument("--version", action="version", version=f"atomqip {__version__}")
    _add_common(parser)
    sub = parser.add_subparsers(dest="scenario", metavar="SCENARIO")
    for name, scen in REGISTRY.items():
        sp = sub.add_parser(name, help=scen.description, description=scen.description)
        _add_common(sp, argparse.SUPPRESS)
        group = sp.add_argument_group("scenario parameters")
        for pname, spec in scen.params.items():
            kwargs = {"dest": f"param_{pname}", "default": None, "help": _param_help(spec), "metavar": _metavar(spec)}
            if spec.kind == "floats":
                kwargs.update(nargs="+", type=float)
            else:
                kwargs["type"] = int if spec.kind == "int" else float
            group.add_argument(_flag(pname), **kwargs)
    return parser


def list_scenarios() -> str:
    width = max(map(len, REGISTRY))
    lines = [f"{name:<{width}}  {scen.description}  (default config: configs/{name}.yaml)" for name, scen in REGISTRY.items()]
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        print(list_scenarios())
        return 0
    if args.scenario is None and args.config is None:
        parser.print_usage(sys.stderr)
        print("atomqip: error: give a scenario or --config", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {k[len("param_"):]: v for k, v in vars(args).items() if k.startswith("param_") and v is not None}
    try:
        config = build_config(args.scenario, args.config, overrides, args.seed, args.out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_scenario(config)
    except ValueError as exc:
        print(f"config error: {config.scenario}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"physics error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    summary = ", ".join(f"{k}={_cell(v)}" for k, v in result.summary.items())
    print(f"{config.scenario}: wrote {config.output_path}" + (f" ({summary})" if summary else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
