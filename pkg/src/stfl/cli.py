"""Command line interface.

Subcommands:

* run         one configured experiment, trace CSV (+ PNG) at --out
* capability  analytic convergence report for a configuration
* timeconst   analytic vs measured time-constant sweep, CSV (+ PNG)
* fig2        the four reference error-trace runs, CSVs (+ combined PNG)
* fig3        the reference time-constant sweep, CSV (+ PNG)
* datagen     dump one device's dataset as CSV

Exit codes: 0 success, 2 invalid configuration, 3 a configuration that
lacks the learning capability where capability is required.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .datagen import generate_dataset
from .harness import (
    ConfigError,
    ExperimentConfig,
    IncapableConfigurationError,
    load_config,
    preset_fig2,
    preset_fig3,
    run_experiment,
    sweep_time_constant,
    write_sweep_csv,
    write_trace_csv,
)
from .theory import build_theory_report


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="path to a JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="override the experiment seed")
    parser.add_argument("--epochs", type=int, help="override the epoch count")
    parser.add_argument("--replicates", type=int, help="override the replicate count")
    parser.add_argument("--out", type=str, help="output path (file or directory by command)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for replicates")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stfl",
        description="Simulator and convergence analytics for outage-compensated federated learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and write its trace CSV")
    _add_common(p_run)

    p_cap = sub.add_parser("capability", help="print the analytic convergence report")
    _add_common(p_cap)
    p_cap.add_argument("--delta", type=float, default=1.0, help="assumed compensation quality")
    p_cap.add_argument("--json", action="store_true", help="emit one JSON object instead of text")

    p_tc = sub.add_parser("timeconst", help="sweep analytic vs measured time constants")
    _add_common(p_tc)
    p_tc.add_argument(
        "--grid",
        type=str,
        help="comma-separated outage-quality products (default: the reference grid)",
    )

    p_f2 = sub.add_parser("fig2", help="run the four reference error-trace configurations")
    _add_common(p_f2)

    p_f3 = sub.add_parser("fig3", help="run the reference time-constant sweep")
    _add_common(p_f3)

    p_dg = sub.add_parser("datagen", help="dump one device's dataset as CSV")
    _add_common(p_dg)
    p_dg.add_argument("--device-id", type=int, default=0, help="device whose dataset to emit")

    return parser


def _config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.epochs is not None:
        config.epochs = args.epochs
    if args.replicates is not None:
        config.replicates = args.replicates
    config.validate()
    return config


def _require_out(args, what: str) -> Path:
    if not args.out:
        raise ConfigError(f"--out is required for {what}")
    return Path(args.out)


def _require_capable_for_optimal(config: ExperimentConfig) -> None:
    if config.alpha != "optimal":
        return
    report = build_theory_report(
        harness.class_jacobians(config.population), q=config.q, delta=1.0, alpha="optimal"
    )
    if report.capable is False:
        raise IncapableConfigurationError(
            "alpha='optimal' requested but the configuration lacks the learning "
            f"capability (worst margin {max(c.margin for c in report.classes):.4f} >= 1)"
        )


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    out = _require_out(args, "run")
    _require_capable_for_optimal(config)
    trace = run_experiment(config, workers=args.workers)
    write_trace_csv(trace, out)
    from .plots import save_trace_figure

    label = config.output_path or out.stem
    save_trace_figure({label: trace}, out.with_suffix(".png"))
    print(f"wrote {out} and {out.with_suffix('.png')}")
    return 0


def _cmd_capability(args) -> int:
    config = _config_from_args(args)
    alpha = config.alpha if config.alpha == "optimal" else float(config.alpha)
    report = build_theory_report(
        harness.class_jacobians(config.population), q=config.q, delta=args.delta, alpha=alpha
    )
    text = report.to_json() if args.json else report.format_text()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _parse_grid(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid --grid value: {raw!r}") from exc


def _cmd_timeconst(args) -> int:
    if args.config:
        base = _config_from_args(args)
        _, grid = preset_fig3()
    else:
        base, grid = preset_fig3()
        if args.seed is not None:
            base.seed = args.seed
        if args.replicates is not None:
            base.replicates = args.replicates
    if args.grid:
        grid = _parse_grid(args.grid)
    out = _require_out(args, "timeconst")
    rows = sweep_time_constant(base, grid, workers=args.workers)
    if not any(row.capable for row in rows):
        raise IncapableConfigurationError(
            "no grid point satisfies the capability condition; nothing to simulate"
        )
    write_sweep_csv(rows, out)
    from .plots import save_sweep_figure

    save_sweep_figure(rows, out.with_suffix(".png"))
    print(f"wrote {out} and {out.with_suffix('.png')}")
    return 0


def _cmd_fig2(args) -> int:
    out_dir = _require_out(args, "fig2")
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = preset_fig2()
    traces = {}
    for config in configs:
        if args.seed is not None:
            config.seed = args.seed
        if args.epochs is not None:
            config.epochs = args.epochs
        if args.replicates is not None:
            config.replicates = args.replicates
        trace = run_experiment(config, workers=args.workers)
        traces[config.output_path] = trace
        write_trace_csv(trace, out_dir / f"{config.output_path}.csv")
    from .plots import save_trace_figure

    save_trace_figure(traces, out_dir / "fig2.png")
    print(f"wrote {len(configs)} traces and fig2.png under {out_dir}")
    return 0


def _cmd_fig3(args) -> int:
    out_dir = _require_out(args, "fig3")
    out_dir.mkdir(parents=True, exist_ok=True)
    base, grid = preset_fig3()
    if args.seed is not None:
        base.seed = args.seed
    if args.replicates is not None:
        base.replicates = args.replicates
    rows = sweep_time_constant(base, grid, workers=args.workers)
    write_sweep_csv(rows, out_dir / "fig3.csv")
    from .plots import save_sweep_figure

    save_sweep_figure(rows, out_dir / "fig3.png")
    print(f"wrote fig3.csv and fig3.png under {out_dir}")
    return 0


def _cmd_datagen(args) -> int:
    config = _config_from_args(args)
    out = _require_out(args, "datagen")
    dataset = generate_dataset(config.population, args.device_id, config.seed)
    dim = dataset.xs.shape[1]
    header = ",".join([f"x{i}" for i in range(dim)] + ["y"])
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for i in range(len(dataset)):
            cells = [format(v, ".17g") for v in dataset.xs[i]]
            cells.append(format(float(dataset.ys[i]), ".17g"))
            f.write(",".join(cells) + "\n")
    print(f"wrote {len(dataset)} points for device {args.device_id} to {out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "capability": _cmd_capability,
    "timeconst": _cmd_timeconst,
    "fig2": _cmd_fig2,
    "fig3": _cmd_fig3,
    "datagen": _cmd_datagen,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IncapableConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
