"""``swarmform`` command line.

Exit codes: 0 success, 1 configuration or input error, 2 at least one run
timed out. Existing output files are only replaced with ``--force``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import scenarios
from .render import render_trace
from .sim_engine import METRIC_COLUMNS, run
from .trace import TraceError
from .world_model import ScenarioConfig, ScenarioError, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_TIMEOUT = 0, 1, 2

log = logging.getLogger("swarmform")


class CliError(Exception):
    """Reported on stderr, exit status 1."""


def _load(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read scenario {path}: {exc.strerror or exc}") from None
    try:
        return load_scenario(text)
    except ScenarioError as exc:
        raise CliError(f"{path}: {exc}") from None


def _override(cfg: ScenarioConfig, seed=None, loss=None, estimator=None) -> ScenarioConfig:
    sections = {}
    if seed is not None:
        sections["sim"] = {"seed": seed}
    if loss is not None:
        sections["comms"] = {"loss_probability": loss}
    if estimator is not None:
        sections["sensing"] = {"estimator": estimator}
    if not sections:
        return cfg
    try:
        return cfg.replace(**sections)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _claim(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise CliError(f"{path} exists; pass --force to overwrite")
    return path


def _parse_list(text: str, kind):
    """``"0,0.1,0.2"`` or, for integers, ``"1..5"`` (inclusive)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if kind is int and ".." in part:
            lo, hi = (int(v) for v in part.split("..", 1))
            out.extend(range(lo, hi + 1))
        else:
            out.append(kind(part))
    if not out:
        raise ValueError("empty list")
    return out


def cmd_run(args) -> int:
    cfg = _override(_load(args.scenario), args.seed, args.loss, args.estimator)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = _claim(out / "trace.jsonl", args.force)
    metrics_path = _claim(out / "metrics.csv", args.force)
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        report = run(cfg, fh)
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(report.metrics_row())
    status = "timeout" if report.timeout else "complete"
    print(f"{status}: ticks={report.ticks} collisions={report.collisions} max_error={report.max_terminal_error:.4f} m")
    return EXIT_TIMEOUT if report.timeout else EXIT_OK


def cmd_validate(args) -> int:
    if args.scenario:
        _load(args.scenario)
        print(f"ok {args.scenario}")
        return EXIT_OK
    for name in scenarios.bundled_names():
        scenarios.load_bundled(name)
        print(f"ok {name} (bundled)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _override(_load(args.scenario), estimator=args.estimator)
    try:
        losses = _parse_list(args.loss if args.loss is not None else str(base.comms.loss_probability), float)
        seeds = _parse_list(args.seed if args.seed is not None else str(base.sim.seed), int)
    except ValueError as exc:
        raise CliError(f"bad sweep grid: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = _claim(out / "sweep.csv", args.force)
    worst = EXIT_OK
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["loss", "seed", "status", *METRIC_COLUMNS], lineterminator="\n")
        writer.writeheader()
        for loss in losses:
            for seed in seeds:
                row = {"loss": loss, "seed": seed}
                try:
                    report = run(_override(base, seed=seed, loss=loss))
                except CliError as exc:
                    log.error("loss=%s seed=%s: %s", loss, seed, exc)
                    row.update(status="error", timeout_flag="")
                    worst = max(worst, EXIT_CONFIG)
                else:
                    row.update(status="timeout" if report.timeout else "complete", **report.metrics_row())
                    if report.timeout:
                        worst = max(worst, EXIT_TIMEOUT)
                writer.writerow(row)
                fh.flush()
                print(f"loss={loss} seed={seed} {row['status']}")
    return worst


def cmd_render(args) -> int:
    out = Path(args.out)
    trace_path = Path(args.trace) if args.trace else out / "trace.jsonl"
    if not trace_path.is_file():
        raise CliError(f"trace not found: {trace_path}")
    try:
        written = render_trace(trace_path, out / "frames", args.stride, args.force)
    except TraceError as exc:
        raise CliError(f"{trace_path}: {exc}") from None
    except FileExistsError as exc:
        raise CliError(f"{exc} exists; pass --force to overwrite") from None
    print(f"wrote {len(written)} frames to {out / 'frames'}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors, not timeouts
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarmform", description="Row-based swarm shape formation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_type=int, loss_type=float, grid=""):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=seed_type, help=f"override sim.seed{grid}")
        p.add_argument("--loss", type=loss_type, help=f"override comms.loss_probability{grid}")
        p.add_argument("--estimator", choices=["complementary", "ekf"], help="override sensing.estimator")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--force", action="store_true", help="overwrite existing output files")

    common(sub.add_parser("run", help="run one scenario, writing trace.jsonl and metrics.csv"))
    common(
        sub.add_parser("sweep", help="run a loss x seed grid, writing sweep.csv"),
        seed_type=str,
        loss_type=str,
        grid="; comma list or a..b integer range",
    )
    p = sub.add_parser("validate", help="check a scenario file (all bundled ones if omitted)")
    p.add_argument("--scenario", help="scenario JSON file")
    p = sub.add_parser("render", help="write SVG frames from a trace")
    p.add_argument("--out", default="out", help="directory holding trace.jsonl; frames go to OUT/frames")
    p.add_argument("--trace", help="trace file (default: OUT/trace.jsonl)")
    p.add_argument("--stride", type=int, default=200, help="ticks between frames (default: 200)")
    p.add_argument("--force", action="store_true", help="overwrite existing frames")
    return parser


def _setup_logging() -> None:
    level = os.environ.get("SWARMFORM_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "sweep": cmd_sweep, "render": cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "stride", 1) <= 0:
        print("error: --stride must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
