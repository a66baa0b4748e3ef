import argparse
import datetime
import json
import logging
import time
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.markdown import Markdown
from rich.panel import Panel
from rich.table import Table

from . import run_index
from .artifacts import RunManifest, library_versions, write_artifacts, write_manifest
from .config import ExperimentConfig, Settings
from .core import registry
from .errors import MixlabError
from .parallel import set_default_threads
from .utils import sha256_text

logger = logging.getLogger(__name__)


def _index_path(settings: Settings, out_dir: Path) -> str:
    return settings.index_db or str(out_dir / "runs.db")


# CLI command implementations
def run_cmd(config_path: str, seed: Optional[int] = None, threads: Optional[int] = None,
            out: Optional[str] = None) -> RunManifest:
    """Run the experiment a config file describes and write its artifacts and manifest."""
    settings = Settings.from_env()
    config = ExperimentConfig.load(config_path)
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if out is not None:
        updates["output_dir"] = out
    if updates:
        config = config.model_copy(update=updates)
    threads = threads or config.threads or settings.threads
    out_dir = Path(config.output_dir)
    set_default_threads(threads)

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    clock = time.perf_counter()
    result = registry.run(config, threads)
    entries = write_artifacts(out_dir, result)
    config_hash = config.config_hash()
    manifest = RunManifest(
        run_id=sha256_text(f"{config_hash}:{config.seed}:{started}")[:16],
        experiment=config.experiment,
        config_hash=config_hash,
        seed=config.seed,
        threads=threads,
        started_at=started,
        wall_time_s=time.perf_counter() - clock,
        versions=library_versions(),
        artifacts=entries,
    )
    write_manifest(out_dir, manifest)
    run_index.record_run(_index_path(settings, out_dir), manifest, str(out_dir))

    console = Console()
    table = Table(title=f"{config.experiment} run {manifest.run_id}")
    table.add_column("Artifact", style="cyan")
    table.add_column("Kind", style="green")
    table.add_column("Rows", style="magenta", justify="right")
    table.add_column("SHA-256", style="dim", no_wrap=True)
    for entry in entries:
        table.add_row(entry.path, entry.kind, str(entry.rows) if entry.kind == "csv" else "", entry.sha256[:12])
    console.print(table)
    console.print(f"Finished in [yellow]{manifest.wall_time_s:.2f}s[/yellow], output in [cyan]{out_dir}[/cyan]")
    return manifest


def list_cmd(as_json: bool = False) -> None:
    """Print the experiment names with one-line descriptions."""
    described = registry.describe()
    if as_json:
        print(json.dumps([{"name": name, "description": text} for name, text in described]))
        return
    width = max(len(name) for name, _ in described) + 2
    for name, text in described:
        print(f"{name:<{width}}{text}")


def history_cmd(db_path: str, limit: int = 20) -> None:
    """Show recent runs from the run index."""
    runs = run_index.get_runs(db_path, limit)
    if not runs:
        print(f"No runs recorded in {db_path}")
        return

    console = Console()
    table = Table(title="Recent Runs")
    table.add_column("Run", style="cyan", no_wrap=True)
    table.add_column("Experiment", style="green")
    table.add_column("Seed", justify="right")
    table.add_column("Started", style="yellow")
    table.add_column("Wall time", justify="right")
    table.add_column("Artifacts", style="magenta", justify="right")
    table.add_column("Output", style="dim")

    for run in runs:
        started = run.get("started_at", "")
        try:
            started = datetime.datetime.fromisoformat(started).strftime("%Y-%m-%d %H:%M:%S")
        except ValueError:
            pass
        table.add_row(
            run["run_id"],
            run["experiment"],
            str(run["seed"]),
            started,
            f"{run['wall_time_s']:.2f}s",
            str(len(run_index.get_artifacts(db_path, run["run_id"]))),
            run["output_dir"],
        )

    console.print(table)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixlab",
        description="Numerical experiments on compact group extensions of hyperbolic flows"
    )
    subs = parser.add_subparsers(dest="command", help="Available commands")

    run = subs.add_parser("run", help="Run the experiment described by a config file")
    run.add_argument("config", help="Path to a JSON or YAML experiment config")
    run.add_argument("--seed", type=int, default=None, help="Override the config seed")
    run.add_argument("--threads", type=int, default=None, help="Worker threads (fallback: MIXLAB_THREADS)")
    run.add_argument("--out", default=None, help="Override the output directory")

    lst = subs.add_parser("list", help="List the available experiments")
    lst.add_argument("--json", action="store_true", help="Print a JSON array")

    hist = subs.add_parser("history", help="Show recorded runs")
    hist.add_argument("--db", default=None, help="Run index path (default: MIXLAB_INDEX_DB or results/runs.db)")
    hist.add_argument("--limit", type=int, default=20, help="Maximum number of runs to show")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            if args.threads is not None and args.threads < 1:
                parser.error("--threads must be positive")
            run_cmd(args.config, args.seed, args.threads, args.out)
        elif args.command == "list":
            list_cmd(args.json)
        elif args.command == "history":
            history_cmd(args.db or Settings.from_env().index_db or str(Path("results") / "runs.db"), args.limit)
        else:
            console = Console()
            console.print(
                Panel(
                    Markdown("# mixlab\n\n"
                             "Run numerical experiments on skew-product suspension flows from JSON configs."),
                    title="Welcome",
                    border_style="green"
                )
            )
            print("\nAvailable commands:")
            parser.print_help()
    except MixlabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
