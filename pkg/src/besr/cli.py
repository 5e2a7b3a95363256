"""Command-line entry point: ``besr <command> --config FILE [options]``.

Exit codes: 0 success, 2 parse/input error, 3 fit non-convergence,
4 integrator failure.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import pipelines
from .config import load_config
from .errors import (ConfigError, DomainError, IntegrationError, NotFoundError,
                     RankDeficiencyError)
from .io import Table, atomic_write, read_csv, table_to_trace, write_json
from .physcore import Dim, parse_quantity

EXIT_OK, EXIT_PARSE, EXIT_FIT, EXIT_INTEGRATOR = 0, 2, 3, 4


class FitFailure(Exception):
    pass


def _fail(msg, code):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def common_options(fn):
    @click.option("--config", "config_path", required=True,
                  type=click.Path(dir_okay=False), help="Configuration file.")
    @click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False),
                  show_default=True, help="Output directory.")
    @click.option("--svg", is_flag=True, help="Also write SVG plots.")
    @click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0),
                  help="Seed of the synthetic-noise generator.")
    @click.option("--format", "fmt", default="csv", show_default=True,
                  type=click.Choice(["csv", "json"]), help="Format of tabular output.")
    @functools.wraps(fn)
    def wrapper(config_path, out_dir, svg, seed, fmt, **kw):
        try:
            cfg = load_config(config_path)
            return fn(cfg=cfg, out=Path(out_dir), svg=svg, seed=seed, fmt=fmt, **kw)
        except (ConfigError, DomainError) as exc:
            _fail(str(exc), EXIT_PARSE)
        except (FitFailure, RankDeficiencyError, NotFoundError) as exc:
            _fail(f"fit failed: {exc}", EXIT_FIT)
        except IntegrationError as exc:
            plan = getattr(exc, "plan", None)
            if plan is not None:
                click.echo(json.dumps(plan, indent=1), err=True)
            _fail(f"integrator failure: {exc}", EXIT_INTEGRATOR)
    return wrapper


def _quantity(text, dim, what):
    if text is None:
        return None
    q = parse_quantity(text)
    if q.dim is not dim:
        raise ConfigError(f"{what}: expected a {dim.value} quantity, got {text!r}")
    return q.value


def _emit(out: Path, name: str, table: Table, fmt: str):
    path = table.write(out / name, fmt)
    click.echo(str(path))
    return path


def _emit_svg(out: Path, name: str, text: str):
    path = atomic_write(out / name, text)
    click.echo(str(path))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="besr")
def main():
    """Spin-lattice relaxation toolkit for resonator-coupled Er spin ensembles."""


@main.command("validate-config")
@common_options
def validate_config(cfg, out, svg, seed, fmt):
    """Parse the configuration and report the resolved values."""
    click.echo(f"ok: {cfg.source} (sha256 {cfg.digest})")
    for key in sorted(cfg.values):
        mark = "" if key in cfg.explicit else "  (default)"
        click.echo(f"  {key} = {cfg.values[key]!r}{mark}")


@main.command()
@click.option("--theta", default=None, help='Field angle from the c axis, e.g. "30 deg".')
@click.option("--b-range", nargs=2, default=None, help='Field range, e.g. "0 mT" "400 mT".')
@common_options
def spectrum(cfg, out, svg, seed, fmt, theta, b_range):
    """Level energies vs field for both isotopes with f0 crossing markers."""
    if b_range:
        lo = _quantity(b_range[0], Dim.FIELD, "--b-range")
        hi = _quantity(b_range[1], Dim.FIELD, "--b-range")
        if hi < lo:
            raise ConfigError("--b-range must be ordered")
        cfg = _override(cfg, {"spectrum.B_start": lo, "spectrum.B_stop": hi})
    th = _quantity(theta, Dim.DIMENSIONLESS, "--theta")
    levels, marks = pipelines.spectrum(cfg, th)
    _emit(out, "spectrum_levels", levels, fmt)
    _emit(out, "spectrum_crossings", marks, fmt)
    if svg:
        _emit_svg(out, "spectrum.svg", pipelines.spectrum_svg(levels, marks))


@main.command()
@common_options
def angles(cfg, out, svg, seed, fmt):
    """Resonance fields and relative coupling across the field angle."""
    table = pipelines.angles(cfg)
    _emit(out, "angles", table, fmt)
    if svg:
        _emit_svg(out, "angles.svg", pipelines.angles_svg(table))


@main.command()
@click.option("--axis", type=click.Choice(["T", "B"]), default=None,
              help="Sweep axis (overrides sweep.axis).")
@common_options
def rates(cfg, out, svg, seed, fmt, axis):
    """Direct, bottleneck, slow and flip-flop rates over a T or B sweep."""
    if axis:
        cfg = _override(cfg, {"sweep.axis": axis})
    table = pipelines.rates(cfg)
    _emit(out, "rates", table, fmt)
    if svg:
        _emit_svg(out, "rates.svg", pipelines.rates_svg(table))


@main.command()
@click.option("--t-pump", default=None, help='Pump duration, e.g. "10 ms".')
@click.option("--pump-rate", default=None, help='Pump saturation rate, e.g. "1000 s^-1".')
@click.option("--field", "field_", default=None, help='Static field, e.g. "38 mT".')
@click.option("--t-bath", default=None, help='Bath temperature, e.g. "20 mK".')
@click.option("--fit/--no-fit", default=True, show_default=True,
              help="Fit the recovery and embed the result in the sidecar.")
@common_options
def simulate(cfg, out, svg, seed, fmt, t_pump, pump_rate, field_, t_bath, fit):
    """Pump, then integrate the free recovery of the bottleneck equations."""
    plan = pipelines.simulation_plan(
        cfg, B0=_quantity(field_, Dim.FIELD, "--field"),
        t_pump=_quantity(t_pump, Dim.TIME, "--t-pump"),
        pump_rate=_quantity(pump_rate, Dim.RATE, "--pump-rate"),
        T_bath=_quantity(t_bath, Dim.TEMPERATURE, "--t-bath"))
    try:
        _, table, sidecar = pipelines.run_simulation(cfg, plan, fit=fit)
    except IntegrationError as exc:
        exc.plan = plan.to_dict()
        raise
    _emit(out, "simulate", table, fmt)
    path = write_json(out / "simulate_sidecar.json", sidecar)
    click.echo(str(path))
    if "slow_constant_s" in sidecar:
        click.echo(f"slow constant: {sidecar['slow_constant_s']:.6g} s")
    if svg:
        _emit_svg(out, "simulate.svg", pipelines.simulation_svg(table))


@main.command()
@click.argument("kind", type=click.Choice(["decay", "sweep", "temperature", "power"]))
@click.option("--input", "inputs", multiple=True, required=True,
              type=click.Path(dir_okay=False, exists=True),
              help="Data CSV; repeat for a joint temperature fit.")
@common_options
def fit(cfg, out, svg, seed, fmt, kind, inputs):
    """Fit decay, resonator-loss, temperature or field-dependence data."""
    if len(inputs) > 1 and kind != "temperature":
        raise ConfigError("only temperature fits accept several inputs")
    traces = [table_to_trace(read_csv(p), kind, source=p) for p in inputs]
    res = pipelines.fit_trace(cfg, kind, traces)
    doc = res.to_dict()
    doc["inputs"] = [str(p) for p in inputs]
    doc["config_sha256"] = cfg.digest
    click.echo(str(write_json(out / f"fit_{kind}.json", doc)))
    _emit(out, f"fit_{kind}_residuals", pipelines.residual_table(cfg, kind, res, traces), fmt)
    for w in res.extras.get("warnings", []):
        click.echo(f"warning: {w}", err=True)
    for name, val in res.params.items():
        click.echo(f"  {name} = {val:.6g} +/- {res.stderr[name]:.2g}")
    if not res.converged:
        raise FitFailure(f"{res.model_id} did not converge in {res.n_iter} iterations")


@main.command()
@click.argument("figure", type=click.Choice(["fig2a", "fig2c", "fig3b", "fig4"]))
@common_options
def reproduce(cfg, out, svg, seed, fmt, figure):
    """Write the data, fits and plots behind one figure into OUT/FIGURE."""
    bundle = pipelines.reproduce(figure, cfg, seed)
    target = out / figure
    for name, item in bundle.items():
        if isinstance(item, Table):
            _emit(target, name, item, fmt)
        elif isinstance(item, dict):
            click.echo(str(write_json(target / f"{name}.json", item)))
        else:
            _emit_svg(target, name, item)


def _override(cfg, updates):
    from dataclasses import replace
    values = dict(cfg.values)
    values.update(updates)
    return replace(cfg, values=values)


if __name__ == "__main__":  # pragma: no cover
    main()
