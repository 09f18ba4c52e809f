"""Command line entry points: bench, sim, agent repl, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agent import Backends, LoopConfig, adhoc_task, run_episode
from .backends import backend_from_uri
from .events import EventSink
from .harness import CONFIG_NAMES, merge_reports, named_config, run_suite
from .kinematics import default_arm
from .perception import OracleDetector, overhead_camera
from .prompts import load_profile
from .registry import default_registry, load_registry
from .report import FORMATS, emit_report
from .sim.actions import step_pick, step_place
from .sim.goals import check_goal
from .sim.scenarios import make_scene
from .skills import SkillExecutor


def _registry(path: str | None):
    return load_registry(path) if path else default_registry()


@click.group()
def main() -> None:
    """Closed-loop tabletop agent: simulator, benchmark and session service."""


# -- bench -------------------------------------------------------------------


@main.group()
def bench() -> None:
    """Benchmark suite over the task registry."""


@bench.command("run")
@click.option("--config", "config_names", multiple=True, default=("full",),
              type=click.Choice(CONFIG_NAMES), help="Configuration(s) to run.")
@click.option("--backend", "backend_uri", default="mock://rule", show_default=True)
@click.option("--registry", "registry_path", default=None, type=click.Path(exists=True))
@click.option("--trials", default=20, show_default=True)
@click.option("--seed", "seed_base", default=0, show_default=True)
@click.option("--fail-prob", default=0.0, show_default=True)
@click.option("--tasks", default=None, help="Comma-separated task ids (default: 20 sim tasks).")
@click.option("--format", "fmt", default="markdown-table", type=click.Choice(FORMATS))
@click.option("--output", "-o", default=None, type=click.Path())
@click.option("--log-dir", default=None, type=click.Path(), help="Persist per-trial JSONL event logs.")
@click.option("--strict", is_flag=True, help="Exit nonzero unless every trial succeeds (ground truth).")
def bench_run(config_names, backend_uri, registry_path, trials, seed_base, fail_prob,
              tasks, fmt, output, log_dir, strict) -> None:
    """Run the suite and emit a report."""
    registry = _registry(registry_path)
    task_ids = [t.strip() for t in tasks.split(",")] if tasks else None
    reports = []
    for name in config_names:
        config = named_config(
            name,
            backend_uri=backend_uri,
            trials_per_task=trials,
            seed_base=seed_base,
            fail_prob=fail_prob,
            log_dir=log_dir,
        )
        reports.append(run_suite(config, registry, task_ids))
    report = merge_reports(reports)
    rendered = emit_report(report, fmt)
    if output:
        Path(output).write_text(rendered)
        click.echo(f"wrote {output}")
    else:
        click.echo(rendered, nl=False)
    if report.incomplete:
        sys.exit(2)
    if strict:
        for record in report.records():
            if not record.ground_truth_success:
                click.echo(
                    f"FAIL {record.config_id}/{record.task_id} seed={record.seed}", err=True
                )
                sys.exit(1)


@bench.command("report")
@click.argument("report_json", type=click.Path(exists=True))
@click.option("--format", "fmt", default="markdown-table", type=click.Choice(FORMATS))
@click.option("--output", "-o", default=None, type=click.Path())
def bench_report(report_json, fmt, output) -> None:
    """Re-render a stored JSON report."""
    payload = json.loads(Path(report_json).read_text())
    rendered = emit_report(payload, fmt)
    if output:
        Path(output).write_text(rendered)
        click.echo(f"wrote {output}")
    else:
        click.echo(rendered, nl=False)


# -- sim ----------------------------------------------------------------------


@main.group()
def sim() -> None:
    """Poke the simulator directly."""


@sim.command("step")
@click.option("--scenario", default="5", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--registry", "registry_path", default=None, type=click.Path(exists=True))
@click.option("--pick", default=None, help="Object label to pick.")
@click.option("--place", default=None, help="Container/object label, 'x,y' pose, or 'table'.")
@click.option("--fail-prob", default=0.0, show_default=True)
@click.option("--check", "check_task", default=None, help="Print the goal verdict for a task id.")
def sim_step(scenario, seed, registry_path, pick, place, fail_prob, check_task) -> None:
    """Build a scenario, optionally apply one pick/place, print the snapshot."""
    registry = _registry(registry_path)
    scene = make_scene(scenario, seed, registry)
    if pick:
        matches = [o.id for o in scene.objects.values() if o.label == pick]
        if not matches:
            raise click.ClickException(f"no object labelled {pick!r}")
        result = step_pick(scene, matches[0], fail_prob=fail_prob)
        click.echo(f"pick {pick}: {result.status}")
        if result.ok and place:
            if "," in place:
                x, y = (float(v) for v in place.split(","))
                target: object = (x, y)
            elif place == "table":
                target = scene.find_free_pose(scene.objects[matches[0]].footprint_radius)
            else:
                named = [c.id for c in scene.containers.values() if c.label == place]
                named += [o.id for o in scene.objects.values() if o.label == place]
                if not named:
                    raise click.ClickException(f"no target labelled {place!r}")
                target = named[0]
            placed = step_place(scene, target)
            click.echo(f"place -> {placed.status}")
    for event in scene.event_log:
        click.echo(f"  [{event.tick}] {event.kind}: {event.subject} -> {event.target}")
    click.echo(scene.to_canonical_json())
    if check_task:
        verdict = check_goal(scene, check_task, registry)
        click.echo(f"goal {check_task}: satisfied={verdict.satisfied} unmet={verdict.unmet}")


# -- agent ---------------------------------------------------------------------


@main.group()
def agent() -> None:
    """Interactive agent."""


@agent.command("repl")
@click.option("--scenario", default="5", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--backend", "backend_uri", default="mock://rule", show_default=True)
@click.option("--registry", "registry_path", default=None, type=click.Path(exists=True))
@click.option("--fail-prob", default=0.0, show_default=True)
@click.option("--max-attempts", default=3, show_default=True)
def agent_repl(scenario, seed, backend_uri, registry_path, fail_prob, max_attempts) -> None:
    """Type instructions, watch the loop run; quit with 'exit' or EOF."""
    registry = _registry(registry_path)
    scene = make_scene(scenario, seed, registry)
    camera = overhead_camera(registry)
    executor = SkillExecutor(
        scene,
        detector=OracleDetector(camera),
        camera=camera,
        arm=default_arm(registry),
        fail_prob=fail_prob,
        registry=registry,
    )
    backend = backend_from_uri(backend_uri, registry)
    config = LoopConfig(max_attempts=max_attempts)
    click.echo(f"scenario {scenario}, seed {seed};"
               f" objects: {', '.join(o.label for o in scene.objects.values())}")
    while True:
        try:
            line = click.prompt("instruction", prompt_suffix="> ")
        except (EOFError, click.Abort):
            break
        if line.strip().lower() in {"exit", "quit"}:
            break
        task = registry.task_by_instruction(line.strip()) or adhoc_task(line.strip(), scenario)
        profile = load_profile("prompted" if task.prompted else "unprompted")
        sink = EventSink()
        result = run_episode(
            Backends.shared(backend), executor, task, config, profile, sink, registry
        )
        for event in sink.events:
            if event.kind in {"plan", "step_result", "verdict", "speech_out"}:
                click.echo(f"  [{event.seq}] {event.kind}: {json.dumps(event.payload)}")
        click.echo(f"verdict: {result.verdict.outcome} (attempts={result.attempts})")


# -- serve ----------------------------------------------------------------------


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8411, show_default=True)
@click.option("--backend", "backend_uri", default="mock://rule", show_default=True)
@click.option("--registry", "registry_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default="./deskloop-sessions", show_default=True, type=click.Path())
@click.option("--fail-prob", default=0.0, show_default=True)
def serve(host, port, backend_uri, registry_path, data_dir, fail_prob) -> None:
    """Run the session service."""
    import uvicorn

    from .service import SessionManager, create_app

    manager = SessionManager(
        registry=_registry(registry_path),
        backend_uri=backend_uri,
        data_dir=data_dir,
        fail_prob=fail_prob,
    )
    uvicorn.run(create_app(manager), host=host, port=port)


if __name__ == "__main__":
    main()
