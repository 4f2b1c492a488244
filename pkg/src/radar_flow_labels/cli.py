"""Command-line interface for radar-derived scene-flow labels."""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import click
import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

# Load .env file from current directory or parent directories
load_dotenv()

from . import __version__
from .config import PipelineConfig, write_default_config
from .exceptions import FrameFormatError, FrameValidationError, RadarFlowError
from .formats import (
    flow_frame_id,
    list_frame_dirs,
    read_flow,
    read_frame,
    write_frame_binary,
    write_frame_dir,
    write_manifest,
)
from .metrics import (
    EvalInput,
    check_acceptance,
    evaluate,
    parse_bin_edges,
    render_report_table,
)
from .models import CLASS_CODES, RunManifest
from .pipeline import OutputOptions, estimate_flow, run_batch, write_outputs
from .synth import PRESETS, generate_sequence, get_preset, load_scene_file

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ACCEPTANCE = 3

app = typer.Typer(
    help="Training-free LiDAR scene-flow labels from 4D-radar Doppler",
    no_args_is_help=True,
)
console = Console()
logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """Global options shared by every subcommand."""

    config_path: Path | None = None
    threads: int = 1
    seed: int | None = None
    overrides: dict[str, str] = field(default_factory=dict)

    def load_config(self) -> PipelineConfig:
        return PipelineConfig.load(self.config_path).with_overrides(**self.overrides)


def _parse_overrides(items: list[str] | None) -> dict[str, str]:
    overrides = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise typer.BadParameter(f"expected KEY=VALUE, got {item!r}", param_hint="--set")
        overrides[key.strip()] = value.strip()
    return overrides


@contextmanager
def _data_errors() -> Iterator[None]:
    """Report pipeline data errors in red and exit with the data-error code."""
    try:
        yield
    except RadarFlowError as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_DATA) from e


@app.callback()
def main_options(
    ctx: typer.Context,
    config: Path = typer.Option(
        None, "--config", "-c", help="TOML config file (see init-config)"
    ),
    threads: int = typer.Option(
        1, "--threads", "-j", min=1, help="Worker threads for frame pairs"
    ),
    seed: int = typer.Option(
        None, "--seed", help="Random seed for synthetic scenes (overrides the preset)"
    ),
    set_: list[str] = typer.Option(
        None,
        "--set",
        help="Override one config value, KEY=VALUE (repeatable). Beats file and env.",
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Radar-to-LiDAR scene-flow labeling."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
    ctx.obj = CliState(
        config_path=config, threads=threads, seed=seed, overrides=_parse_overrides(set_)
    )


def _state(ctx: typer.Context) -> CliState:
    return ctx.obj if isinstance(ctx.obj, CliState) else CliState()


@app.command()
def synth(
    ctx: typer.Context,
    out: Path = typer.Option(..., "--out", "-o", help="Output sequence directory"),
    preset: str = typer.Option(None, "--preset", "-p", help="Preset scene name"),
    scene_file: Path = typer.Option(None, "--scene-file", help="TOML scene description"),
    frames: int = typer.Option(2, "--frames", "-n", min=1, help="Number of frames"),
    binary: bool = typer.Option(False, "--binary", help="Also write frame.bin per frame"),
):
    """Generate a synthetic sequence with ground truth."""
    state = _state(ctx)
    if (preset is None) == (scene_file is None):
        console.print("[red]Give exactly one of --preset or --scene-file[/red]")
        raise typer.Exit(EXIT_USAGE)

    with _data_errors():
        config = state.load_config()
        if preset is not None:
            try:
                spec = get_preset(preset, state.seed)
            except RadarFlowError:
                _print_presets()
                raise
            overrides: dict = {"preset": preset}
        else:
            spec, overrides = load_scene_file(scene_file)
        if state.seed is not None:
            spec = spec.model_copy(update={"seed": state.seed})
            overrides["seed"] = state.seed

        sequence = generate_sequence(spec, frames)
        written = []
        for frame in sequence:
            written.append(write_frame_dir(frame, out).name)
            if binary:
                write_frame_binary(frame, out)

    write_manifest(
        RunManifest(
            input_path=str(scene_file) if scene_file else f"preset:{preset}",
            config=config.model_dump(),
            version=__version__,
            seed=spec.seed,
            command="synth",
            scene=spec.model_dump(),
            overrides=overrides,
            outputs=written,
        ),
        out,
    )
    console.print(f"[green]Wrote {len(sequence)} frame(s) to {out}[/green]")


@app.command()
def flow(
    ctx: typer.Context,
    frame_t: Path = typer.Argument(..., help="Frame directory at time t"),
    frame_t1: Path = typer.Argument(..., help="Frame directory at time t+1"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    binary: bool = typer.Option(False, "--binary", help="Also write the binary flow file"),
    total: bool = typer.Option(False, "--total", help="Also write total (ego + object) flow"),
    debug_dump: bool = typer.Option(
        False, "--debug-dump", help="Write radar clusters (JSON) and a cluster PLY"
    ),
):
    """Estimate the non-ego flow of one frame pair."""
    state = _state(ctx)
    with _data_errors():
        config = state.load_config()
        current = read_frame(frame_t)
        following = read_frame(frame_t1)
        result = estimate_flow(current, following, config)
        output = write_outputs(
            result, current, out, OutputOptions(binary=binary, total=total, debug_dump=debug_dump)
        )

    write_manifest(
        RunManifest(
            input_path=f"{frame_t},{frame_t1}",
            config=config.model_dump(),
            version=__version__,
            seed=state.seed,
            command="flow",
            frame_timings_ms={result.frame_id: round(result.timings.total_ms, 3)},
            overrides=state.overrides,
            outputs=[p.name for p in output.paths],
        ),
        out,
    )
    console.print(
        f"[green]{output.n_dynamic}/{output.n_points} points dynamic, "
        f"{len(result.motion.clusters)} radar cluster(s)[/green]"
    )
    for path in output.paths:
        console.print(f"  {path}")
    if logger.isEnabledFor(logging.DEBUG):
        table = Table(title="Stage timings")
        table.add_column("Stage", style="cyan")
        table.add_column("ms", justify="right")
        for stage, ms in result.timings.stages.items():
            table.add_row(stage, f"{ms:.2f}")
        console.print(table)


@app.command()
def batch(
    ctx: typer.Context,
    sequence: Path = typer.Argument(..., help="Sequence directory of NNNNNN frame folders"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    binary: bool = typer.Option(False, "--binary", help="Also write binary flow files"),
    total: bool = typer.Option(False, "--total", help="Also write total flow files"),
    debug_dump: bool = typer.Option(False, "--debug-dump", help="Write debug dumps"),
):
    """Pseudo-label every consecutive frame pair of a sequence."""
    state = _state(ctx)
    with _data_errors():
        config = state.load_config()
        outputs = run_batch(
            sequence,
            config,
            out,
            threads=state.threads,
            options=OutputOptions(binary=binary, total=total, debug_dump=debug_dump),
            seed=state.seed,
        )

    table = Table(title="Batch Summary")
    table.add_column("Frame", style="cyan")
    table.add_column("Points", justify="right")
    table.add_column("Dynamic", justify="right", style="green")
    table.add_column("ms", justify="right")
    for output in outputs:
        table.add_row(
            output.frame_id,
            str(output.n_points),
            str(output.n_dynamic),
            f"{output.timings.total_ms:.1f}",
        )
    console.print(table)
    console.print(f"[green]Wrote {len(outputs)} flow file(s) to {out}[/green]")


def _collect_flow_files(paths: list[Path]) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for path in paths:
        if path.is_dir():
            files = sorted(path.glob("*.flow.csv")) or sorted(path.glob("*.flow.bin"))
        elif path.exists():
            files = [path]
        else:
            raise FrameFormatError(f"no such flow file or directory: {path}")
        for file in files:
            found.setdefault(flow_frame_id(file), file)
    if not found:
        raise FrameFormatError("no flow files found")
    return found


def _collect_frames(root: Path) -> dict[str, Path]:
    if (root / "lidar.csv").exists() or (root / "frame.bin").exists():
        return {root.name: root}
    return {path.name: path for _, path in list_frame_dirs(root)}


def _eval_inputs(flow_paths: list[Path], frames_root: Path) -> list[EvalInput]:
    flows = _collect_flow_files(flow_paths)
    frames = _collect_frames(frames_root)
    inputs = []
    for frame_id, flow_path in sorted(flows.items()):
        if frame_id not in frames:
            raise FrameFormatError(f"frame {frame_id}: no frame directory under {frames_root}")
        frame = read_frame(frames[frame_id])
        if frame.gt is None:
            raise FrameFormatError(f"frame {frame_id}: no ground truth (gt.csv)")
        predicted = read_flow(flow_path)
        if len(predicted) != len(frame.lidar):
            raise FrameValidationError(
                f"frame {frame_id}: flow has {len(predicted)} points, "
                f"frame has {len(frame.lidar)}"
            )
        inputs.append(
            EvalInput(
                frame_id=frame_id,
                points=frame.lidar.positions,
                pred=predicted.delta,
                gt=frame.gt.flow,
                classes=frame.gt.classes,
            )
        )
    return inputs


@app.command("eval")
def eval_(
    ctx: typer.Context,
    flows: list[Path] = typer.Argument(..., help="Flow files or directories of flow files"),
    frames: Path = typer.Option(
        ..., "--frames", "-f", help="Sequence (or single frame) directory with gt.csv"
    ),
    bins: str = typer.Option("0,35", "--bins", help="Range bin edges in meters, e.g. 0,35"),
    out: Path = typer.Option(None, "--out", "-o", help="Directory for eval_report.json"),
    max_dynamic_epe: float = typer.Option(
        None, "--max-dynamic-epe", help="Fail (exit 3) if any bin's dynamic EPE exceeds this"
    ),
    min_dynamic_iou: float = typer.Option(
        None, "--min-dynamic-iou", help="Fail (exit 3) if any bin's dynamic IoU is below this"
    ),
    max_three_way_mean: float = typer.Option(
        None, "--max-three-way-mean", help="Fail (exit 3) if the three-way mean EPE exceeds this"
    ),
):
    """Evaluate flow files against ground truth."""
    state = _state(ctx)
    try:
        edges = parse_bin_edges(bins)
    except ValueError as e:
        console.print(f"[red]Invalid --bins: {e}[/red]")
        raise typer.Exit(EXIT_USAGE) from e

    with _data_errors():
        config = state.load_config()
        report = evaluate(_eval_inputs(flows, frames), config, edges)

    for table in render_report_table(report):
        console.print(table)

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "eval_report.json"
        report_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        write_manifest(
            RunManifest(
                input_path=str(frames),
                config=config.model_dump(),
                version=__version__,
                seed=state.seed,
                command="eval",
                overrides={"bins": bins, **state.overrides},
                outputs=[report_path.name],
            ),
            out,
        )
        console.print(f"[green]Report written to {report_path}[/green]")

    violations = check_acceptance(report, max_dynamic_epe, min_dynamic_iou, max_three_way_mean)
    if violations:
        for violation in violations:
            console.print(f"[red]FAIL: {violation}[/red]")
        raise typer.Exit(EXIT_ACCEPTANCE)


def _print_presets() -> None:
    table = Table(title="Scene Presets")
    table.add_column("Preset", style="cyan")
    table.add_column("Bodies", justify="right")
    table.add_column("Movers", justify="right", style="green")
    table.add_column("Radars", justify="right")
    table.add_column("Noise", style="magenta")
    fd = CLASS_CODES["FD"]
    for name in PRESETS:
        spec = get_preset(name)
        movers = sum(1 for b in spec.bodies if b.motion_class(spec.dt) == fd)
        noise = ", ".join(
            f"{k}={v}" for k, v in spec.noise.model_dump().items()
            if k in ("clutter_fraction", "ghost_probability", "doppler_sigma", "lidar_sigma") and v
        )
        table.add_row(name, str(len(spec.bodies)), str(movers), str(len(spec.radars)),
                      noise or "none")
    console.print(table)


@app.command()
def presets():
    """List the synthetic scene presets."""
    _print_presets()


@app.command("init-config")
def init_config(
    path: Path = typer.Argument(Path("radar-flow.toml"), help="Where to write the config"),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing file"),
):
    """Write a config file with every parameter at its default."""
    if path.exists() and not force:
        console.print(f"[red]{path} exists; use --force to overwrite[/red]")
        raise typer.Exit(EXIT_USAGE)
    write_default_config(path)
    console.print(f"[green]Wrote {path}[/green]")


def main() -> None:
    """Console entry point; usage errors exit 1 rather than click's 2."""
    try:
        code = app(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
