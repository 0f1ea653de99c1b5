"""``mkdvlab`` command line: one subcommand per experiment kind.

Every config key is a flag (``eps_list`` becomes ``--eps-list``); list values
are comma separated. Flags override keys from ``--config``. Exit status is 0
for a complete run, 2 for a partial one and 1 on error.
"""

import sys

import click
import yaml

from .errors import ConfigError
from .harness import KINDS, ExperimentConfig, exit_code, make_config, run

LIST_KEYS = {"eps_list": float, "lambdas": float, "band": float, "k_list": int, "cases": str}
SKIP = {"kind", "out", "seed"}


def _option_for(name, info):
    flag = "--" + name.replace("_", "-")
    help_text = f"config key '{name}'"
    if name in LIST_KEYS:
        return click.option(flag, name, type=str, default=None, help=help_text + " (comma separated)")
    ann = info.annotation
    typ = str
    for cand in (int, float):
        if ann is cand or cand in getattr(ann, "__args__", ()):
            typ = cand
            break
    return click.option(flag, name, type=typ, default=None, help=help_text)


def _split(name, text):
    conv = LIST_KEYS[name]
    try:
        return [conv(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {text!r} as a list of {conv.__name__}", param_hint=name) from None


def _make_command(kind):
    def command(config, out, seed, **flags):
        data = {}
        if config is not None:
            try:
                with open(config) as fh:
                    loaded = yaml.safe_load(fh) or {}
            except OSError as exc:
                click.echo(f"error: cannot read config {config}: {exc.strerror}", err=True)
                sys.exit(1)
            except yaml.YAMLError as exc:
                click.echo(f"error: config {config} is not valid YAML/JSON: {exc}", err=True)
                sys.exit(1)
            if not isinstance(loaded, dict):
                click.echo("error: config document must be a mapping", err=True)
                sys.exit(1)
            data.update(loaded)
        if data.get("kind", kind) != kind:
            click.echo(f"error: config kind {data['kind']!r} does not match subcommand {kind!r}", err=True)
            sys.exit(1)
        data["kind"] = kind
        for key, val in flags.items():
            if val is not None:
                data[key] = _split(key, val) if key in LIST_KEYS else val
        if out is not None:
            data["out"] = out
        if seed is not None:
            data["seed"] = seed
        try:
            cfg = make_config(data)
            report = run(cfg)
        except (ConfigError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        for t in report.tables:
            click.echo(f"[{t.name}] " + ", ".join(t.columns))
            for row in t.rows:
                click.echo("  " + ", ".join(_short(v) for v in row))
        if report.failures:
            for f in report.failures:
                click.echo(f"failed: {f}", err=True)
        click.echo(f"status: {report.status}")
        sys.exit(exit_code(report))

    command.__name__ = kind.replace("-", "_")
    for name, info in reversed(list(ExperimentConfig.model_fields.items())):
        if name not in SKIP:
            command = _option_for(name, info)(command)
    command = click.option("--seed", type=int, default=None, help="random seed")(command)
    command = click.option("--out", type=click.Path(file_okay=False), default=None, help="output directory")(command)
    command = click.option(
        "--config", type=click.Path(dir_okay=False), default=None, help="YAML or JSON config document"
    )(command)
    return click.command(kind, help=f"Run the {kind} experiment.")(command)


def _short(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


@click.group()
def main():
    """MKdV-Burgers pseudospectral lab."""


for _kind in KINDS:
    main.add_command(_make_command(_kind))

