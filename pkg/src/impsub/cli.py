"""Command-line entry point.

Exit codes: 0 success, 1 solver reported a non-optimal status, 2 usage or
validation error, 3 I/O error.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, seeding
from .data import TimeSeriesTable, format_timestamp, load_csv, synth_generate, write_csv
from .errors import ImpsubError, NotOptimal
from .evaluate import evaluate_design, run_benchmark
from .iss import IssConfig, estimate_design, importance_subsample, kmedoids_sample, random_hour_sample
from .model import VARIANTS, Design, RunLog, SystemConfig, WeightedSample, default_config
from .solve import METHODS

log = logging.getLogger("impsub")

EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _fail(code: int, kind: str, message: str, **extra):
    click.echo(json.dumps({"error": kind, "message": message, **extra}), err=True)
    sys.exit(code)


def guarded(fn):
    """Map toolkit exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NotOptimal as exc:
            _fail(EXIT_SOLVER, "not-optimal", str(exc), status=exc.status)
        except (ImpsubError, ValueError) as exc:
            _fail(EXIT_USAGE, type(exc).__name__, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, "io", str(exc))

    return wrapper


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_inputs(data, synth, config_path):
    """Resolve the table and config; returns ``(table, config, input_record)``."""
    if bool(data) == bool(synth):
        raise click.UsageError("give exactly one of --data or --synth")
    inputs = {}
    if data:
        path = Path(data)
        table = load_csv(path)
        inputs["data"] = {"path": str(data), "sha256": _sha256_bytes(path.read_bytes())}
    else:
        try:
            s, y = (int(v) for v in synth.split(":"))
        except ValueError:
            raise click.BadParameter("expected SEED:YEARS", param_hint="--synth") from None
        table = synth_generate(s, y)
        inputs["data"] = {"synth": {"seed": s, "years": y}}
    if config_path:
        path = Path(config_path)
        config = SystemConfig.load(path)
        inputs["config"] = {"path": str(config_path), "sha256": _sha256_bytes(path.read_bytes())}
    else:
        config = default_config()
        inputs["config"] = {"default": True, "sha256": _sha256_bytes(config.to_json().encode())}
    return table, config, inputs


def _write_manifest(out: Path, command: str, args: dict, inputs: dict, outputs: list, seed=None):
    manifest = {
        "toolkit": "impsub",
        "toolkit_version": __version__,
        "command": command,
        "args": args,
        "inputs": inputs,
        "out": str(out),
        "outputs": sorted(outputs),
    }
    if seed is not None:
        manifest["seed"] = seed
        manifest["sub_seeds"] = seeding.named_seeds(seed)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _parse_seeds(text: str) -> list:
    """``A..B`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            a, b = text.split("..")
            seeds = list(range(int(a), int(b) + 1))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {text!r}", param_hint="--seeds") from None
    if not seeds:
        raise click.BadParameter("empty seed range", param_hint="--seeds")
    return seeds


def _resolve_extreme(days, extreme):
    if days is None:
        return None
    n_extreme = int(round(days / 3)) if extreme is None else extreme
    if n_extreme < 0 or n_extreme > days:
        raise click.UsageError(f"--extreme-days must lie in [0, --days]; got {n_extreme} for {days}")
    return n_extreme


def _operation_csv(table: TimeSeriesTable, op) -> str:
    cols = ["timestamp"]
    cols += [f"gen_{t}_bus{b}" for t, b in op.gen_units]
    cols += [f"flow_{a}_{b}" for a, b in op.corridors]
    cols += [f"unserved_bus{b}" for b in op.demand_buses]
    cols += [f"curtailed_{t}_bus{b}" for t, b in op.wind_units]
    values = np.hstack([op.gen, op.flow, op.unserved, op.curtailed])
    lines = [",".join(cols)]
    for ts, row in zip(table.timestamps(), values):
        lines.append(format_timestamp(ts) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _sample_json(sample: WeightedSample) -> str:
    return json.dumps(
        {"unit": sample.unit, "origin": sample.origin.tolist(), "weights": sample.weights.tolist(),
         "source_count": sample.source_count},
        indent=2,
    ) + "\n"


# -- commands --------------------------------------------------------------------

data_opt = click.option("--data", type=click.Path(dir_okay=False), help="Demand/wind CSV file.")
synth_opt = click.option("--synth", metavar="SEED:YEARS", help="Use synthetic data instead of --data.")
config_opt = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="System config JSON.")
variant_opt = click.option("--variant", type=click.Choice(VARIANTS), default="lp", show_default=True)
solver_opt = click.option("--solver", type=click.Choice(METHODS), default="highs", show_default=True,
                          help="LP engine for node relaxations.")
out_opt = click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")


@click.group()
@click.version_option(__version__, prog_name="impsub")
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Importance subsampling for capacity-expansion planning."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")


@main.command("generate-data")
@click.option("--seed", type=int, required=True)
@click.option("--years", type=click.IntRange(min=1), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="CSV file to write.")
@guarded
def generate_data(seed, years, out):
    """Write a seeded synthetic demand/wind table as CSV."""
    write_csv(synth_generate(seed, years), out)
    click.echo(out)


@main.command("print-default-config")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@guarded
def print_default_config(out):
    """Emit the default system config (with provenance notes) as JSON."""
    text = default_config().to_json()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("plan")
@data_opt
@synth_opt
@config_opt
@variant_opt
@click.option("--sampling", type=click.Choice(["none", "kmedoids", "iss"]), default="iss", show_default=True)
@click.option("--unit", type=click.Choice(["day", "hour"]), default="day", show_default=True,
              help="Sample whole days or single hours (hours: LP variant only).")
@click.option("--days", type=click.IntRange(min=1), default=None, help="Sample size n_d (days, or hours with --unit hour).")
@click.option("--extreme-days", type=int, default=None, help="Extreme blocks n_de (default: --days / 3 rounded).")
@click.option("--seed", type=int, default=0, show_default=True)
@solver_opt
@click.option("--export-lp", type=click.Path(dir_okay=False), default=None,
              help="Also write the final planning instance in CPLEX-LP format.")
@click.option("--evaluate/--no-evaluate", default=True, show_default=True,
              help="Score the design on the full table.")
@out_opt
@guarded
def plan_cmd(data, synth, config_path, variant, sampling, unit, days, extreme_days, seed, solver, export_lp, evaluate, out):
    """Estimate an optimal design from a (sub)sample of the table."""
    if sampling != "none" and days is None:
        raise click.UsageError("--days is required unless --sampling none")
    n_extreme = _resolve_extreme(days, extreme_days)
    if unit == "hour" and variant == "milp":
        raise click.UsageError("--unit hour is only valid for the LP variant")
    table, config, inputs = _load_inputs(data, synth, config_path)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    runs = RunLog()
    outputs = ["design.json", "sample.json"]

    if sampling == "none":
        sample = WeightedSample.full(table)
    elif sampling == "kmedoids":
        sample = kmedoids_sample(table, days, seed) if unit == "day" else random_hour_sample(table, days, seed)
    else:
        iss = IssConfig(days, n_extreme, seed=seed, unit=unit)
        sample, diag = importance_subsample(table, config, iss, variant, method=solver, log=runs)
        (out / "diagnostics.json").write_text(diag.to_json(), encoding="utf-8")
        outputs.append("diagnostics.json")
    design = estimate_design(sample, config, variant, method=solver, log=runs, export_lp=export_lp)
    (out / "design.json").write_text(design.to_json(), encoding="utf-8")
    (out / "sample.json").write_text(_sample_json(sample), encoding="utf-8")
    if evaluate:
        sub = evaluate_design(design, table, config, variant, method=solver)
        (out / "suboptimality.json").write_text(json.dumps(sub.to_dict(), indent=2) + "\n", encoding="utf-8")
        outputs.append("suboptimality.json")
    args = {"variant": variant, "sampling": sampling, "unit": unit, "days": days, "extreme_days": n_extreme,
            "seed": seed, "solver": solver, "evaluate": evaluate}
    _write_manifest(out, "plan", args, inputs, outputs + ["manifest.json"], seed=seed)
    click.echo(str(out / "design.json"))


@main.command("operate")
@data_opt
@synth_opt
@config_opt
@click.option("--design", "design_path", type=click.Path(dir_okay=False), required=True)
@variant_opt
@solver_opt
@click.option("--export-lp", type=click.Path(dir_okay=False), default=None)
@out_opt
@guarded
def operate_cmd(data, synth, config_path, design_path, variant, solver, export_lp, out):
    """Dispatch the full table under a fixed design."""
    table, config, inputs = _load_inputs(data, synth, config_path)
    design = Design.load(design_path).validate(config, variant)
    inputs["design"] = {"path": str(design_path), "sha256": _sha256_bytes(Path(design_path).read_bytes())}
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sub, op = evaluate_design(design, table, config, variant, method=solver, return_operation=True,
                              export_lp=export_lp)
    (out / "operation.csv").write_text(_operation_csv(table, op), encoding="utf-8", newline="\n")
    (out / "suboptimality.json").write_text(json.dumps(sub.to_dict(), indent=2) + "\n", encoding="utf-8")
    _write_manifest(out, "operate", {"variant": variant, "solver": solver}, inputs,
                    ["operation.csv", "suboptimality.json", "manifest.json"])
    click.echo(str(out / "suboptimality.json"))


@main.command("benchmark")
@data_opt
@synth_opt
@config_opt
@variant_opt
@click.option("--days", type=click.IntRange(min=1), required=True)
@click.option("--extreme-days", type=int, default=None)
@click.option("--seeds", default="0..19", show_default=True, help="Inclusive range A..B or comma list.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--target/--no-target", default=False, show_default=True,
              help="Also solve the full-table optimum (short tables only).")
@solver_opt
@click.option("--figures/--no-figures", default=True, show_default=True)
@out_opt
@guarded
def benchmark_cmd(data, synth, config_path, variant, days, extreme_days, seeds, jobs, target, solver, figures, out):
    """Seed sweep comparing k-medoids with importance subsampling."""
    n_extreme = _resolve_extreme(days, extreme_days)
    seed_list = _parse_seeds(seeds)
    table, config, inputs = _load_inputs(data, synth, config_path)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_benchmark(table, config, variant, days, n_extreme, seed_list, target=target, method=solver, jobs=jobs)
    (out / "results.csv").write_text(result.to_csv(), encoding="utf-8", newline="\n")
    (out / "summary.json").write_text(result.summary_json(), encoding="utf-8")
    outputs = ["results.csv", "summary.json", "manifest.json"]
    if figures:
        from .plotting import save_box_figures

        paths = save_box_figures(result, out / "figures")
        outputs += [f"figures/{p.name}" for p in paths]
    args = {"variant": variant, "days": days, "extreme_days": n_extreme, "seeds": seed_list,
            "target": target, "solver": solver, "figures": figures}
    _write_manifest(out, "benchmark", args, inputs, outputs)
    for f in result.failures:
        log.warning("seed %s (%s) failed: %s", f["seed"], f["method"], f["reason"])
    click.echo(str(out / "summary.json"))


@main.command("replay")
@click.argument("manifest", type=click.Path(dir_okay=False, exists=True))
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.pass_context
def replay(ctx, manifest, out):
    """Re-run the command recorded in a result manifest into a new directory."""
    doc = json.loads(Path(manifest).read_text(encoding="utf-8"))
    args = dict(doc.get("args", {}))
    inputs = doc.get("inputs", {})
    argv = [doc["command"]]
    data = inputs.get("data", {})
    if "path" in data:
        argv += ["--data", data["path"]]
    else:
        argv += ["--synth", f"{data['synth']['seed']}:{data['synth']['years']}"]
    cfg = inputs.get("config", {})
    if "path" in cfg:
        argv += ["--config", cfg["path"]]
    if "design" in inputs:
        argv += ["--design", inputs["design"]["path"]]
    for key, value in args.items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, bool):
            argv.append(flag if value else f"--no-{key.replace('_', '-')}")
        elif key == "seeds":
            argv += [flag, ",".join(str(s) for s in value)]
        else:
            argv += [flag, str(value)]
    argv += ["--out", out]
    ctx.exit(main.main(argv, standalone_mode=False) or 0)


if __name__ == "__main__":
    main()
