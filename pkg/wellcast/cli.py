# wellcast/cli.py
from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

import click

from .config import RunConfig, parse_config
from .errors import ConfigError, WellcastError
from .pipeline import execute_pipeline

log = logging.getLogger(__name__)

# Befehl -> auszuführende Stufen (Vorgänger werden bei Bedarf still nachgerechnet)
COMMAND_STAGES: dict[str, tuple[str, ...]] = {
    "synth": (),
    "condition": ("condition",),
    "reshape": ("reshape",),
    "train": ("train",),
    "forecast": ("forecast",),
    "evaluate": ("evaluate",),
    "gridsearch": ("gridsearch",),
    "decline": ("decline",),
    "plot": ("forecast", "evaluate", "plot"),
    "report": ("evaluate", "decline", "report"),
}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load(ctx: click.Context) -> RunConfig:
    o = ctx.obj
    try:
        return parse_config(o["config"], out_dir=o["out"], seed=o["seed"])
    except ConfigError as exc:
        click.echo(f"Konfigurationsfehler: {exc}", err=True)
        ctx.exit(exc.exit_code)


def _run(ctx: click.Context, stages: Optional[tuple[str, ...]], require_synth: bool = False) -> None:
    cfg = _load(ctx)
    if require_synth and not cfg.input.synth:
        click.echo("Konfigurationsfehler: input.synth: Befehl synth erfordert input.synth = true", err=True)
        ctx.exit(ConfigError.exit_code)
    try:
        result = execute_pipeline(cfg, stages)
    except WellcastError as exc:
        click.echo(f"Fehler: {exc}", err=True)
        ctx.exit(exc.exit_code)
        return
    if result.exit_code != 0:
        click.echo(f"Stufe {result.failed_stage} fehlgeschlagen: {result.error}", err=True)
    else:
        click.echo(f"OK: {len(set(result.files))} Dateien, Manifest {result.manifest_path}")
    ctx.exit(result.exit_code)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True, help="TOML-Konfiguration")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None, help="Ausgabeverzeichnis")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None, help="globaler Seed")
@click.option("--verbose", "-v", is_flag=True, help="DEBUG-Logging")
@click.pass_context
def main(ctx: click.Context, config_path: Path, out_dir: Optional[Path], seed: Optional[int], verbose: bool) -> None:
    """wellcast – datengetriebene Förderprognose für injektionsgestützte Felder."""
    _setup_logging(verbose)
    ctx.obj = {"config": config_path, "out": out_dir, "seed": seed}


@main.command()
@click.pass_context
def pipeline(ctx: click.Context) -> None:
    """Alle in run.stages gewählten Stufen."""
    _run(ctx, None)


def _make_command(name: str, stages: tuple[str, ...], help_text: str) -> None:
    @main.command(name=name, help=help_text)
    @click.pass_context
    def _cmd(ctx: click.Context) -> None:
        _run(ctx, stages, require_synth=(name == "synth"))


for _name, _stages, _help in (
    ("synth", COMMAND_STAGES["synth"], "Synthetisches Feld erzeugen."),
    ("condition", COMMAND_STAGES["condition"], "Datensatz aufbereiten (Auswahl, Potenzial, Glättung, Resampling, Ramp-up)."),
    ("reshape", COMMAND_STAGES["reshape"], "Überwachte Lag-Tabellen erzeugen und chronologisch teilen."),
    ("train", COMMAND_STAGES["train"], "Schätzer trainieren und als JSON speichern."),
    ("forecast", COMMAND_STAGES["forecast"], "Rekursive Prognose (mit input.schedule oder als Rückprognose)."),
    ("evaluate", COMMAND_STAGES["evaluate"], "Rollierende Auswertung mit periodischem Neutraining."),
    ("gridsearch", COMMAND_STAGES["gridsearch"], "Grid-Suche über die Hyperparameter-Achsen."),
    ("decline", COMMAND_STAGES["decline"], "Arps-Abfallkurven als Vergleich."),
    ("plot", COMMAND_STAGES["plot"], "Diagramme (SVG) und Plotdaten (CSV)."),
    ("report", COMMAND_STAGES["report"], "Laufbericht als DOCX."),
):
    _make_command(_name, _stages, _help)


def run() -> None:
    main(prog_name="wellcast")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(run())
