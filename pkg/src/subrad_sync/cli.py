"""Command-line entry point ``subrad-sync``.

Exit codes: 0 success, 1 invalid input, 2 degenerate spectrum, 3 the modal
result disagrees with the RK4 oracle by more than ``1e-6``.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._csvio import write_csv
from .analysis import (
    DEFAULT_SIGNAL_DT,
    DEFAULT_WINDOW,
    FIG6_PARAMS,
    bloch_series,
    radiation_operator,
    radiation_series,
    sync_and_radiance_at,
    sync_report,
)
from .core import (
    Observable,
    SystemParams,
    check_density_matrix,
    excitation_number,
    local_pauli,
    named_state,
)
from .dynamics import Trajectory, modal_trajectory, rk4_trajectory, write_trajectory_csv
from .spectral import DegenerateSpectrum, IndependentAtoms, collective_states, decompose, sync_constants

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE, EXIT_ORACLE = 0, 1, 2, 3
ORACLE_TOL = 1e-6
PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
DIAGNOSTICS = ("kappaS", "nuS", "C_delayed", "R_I")
FIGURE_IDS = ("fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6")
FIG3_PARAMS = SystemParams(gamma1=1.1, gamma2=0.9, gamma12=0.95, s12=0.6, delta=1.0, omega0=10.0)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    initial_state: object = "plusplus"
    t_max: float = 10.0
    dt: float = DEFAULT_SIGNAL_DT
    observables: list = field(default_factory=lambda: ["sx1", "sx2", "sz1", "sz2", "I"])
    output_dir: str = "."
    emit_svg: bool = False
    grid: dict | None = None
    diagnostics: list = field(default_factory=lambda: ["kappaS", "nuS"])
    t_star: float = 5.0
    window: float = DEFAULT_WINDOW

    OPTION_KEYS = ("initial_state", "t_max", "dt", "observables", "output_dir", "emit_svg",
                   "grid", "diagnostics", "t_star", "window")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(PARAM_FIELDS) - set(cls.OPTION_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        params = SystemParams(**{k: data[k] for k in PARAM_FIELDS if k in data})
        options = {k: data[k] for k in cls.OPTION_KEYS if k in data}
        cfg = cls(params=params, **options)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def validate(self):
        for name in ("t_max", "dt", "t_star", "window"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError(f"{name} must be a positive number")
        if self.dt > self.t_max:
            raise ConfigError("dt must not exceed t_max")
        for name in self.observables:
            observable(name, self.params)
        bad = [d for d in self.diagnostics if d not in DIAGNOSTICS]
        if bad or not self.diagnostics:
            raise ConfigError(f"diagnostics must be chosen from {DIAGNOSTICS}, got {self.diagnostics}")
        if self.grid is not None:
            grid_axes(self.grid)

    def meta(self) -> dict:
        """Everything that determines the numbers in an output file."""
        params = self.params.as_dict()
        # swept values come from the grid, not from the base point
        for name in self.grid or {}:
            params[name] = "grid"
        out = {"params": params}
        for key in ("initial_state", "t_max", "dt", "observables", "grid", "diagnostics",
                    "t_star", "window"):
            out[key] = getattr(self, key)
        if self.grid is not None:
            out["grid"] = {k: [float(a), float(b), int(n)] for k, (a, b, n) in self.grid.items()}
        return out


def observable(name: str, params: SystemParams) -> Observable:
    if name == "I":
        return dataclasses.replace(radiation_operator(params), label="I")
    if name == "n":
        return excitation_number()
    if len(name) == 3 and name[0] == "s" and name[1] in "xyz" and name[2] in "12":
        return local_pauli(int(name[2]), name[1])
    raise ConfigError(f"unknown observable {name!r}; use sx1..sz2, n or I")


def grid_axes(grid) -> list[tuple[str, np.ndarray]]:
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid must map parameter names to [min, max, n]")
    axes = []
    for name, spec in grid.items():
        if name not in PARAM_FIELDS:
            raise ConfigError(f"grid names unknown parameter {name!r}")
        ok = (isinstance(spec, list) and len(spec) == 3
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec)
              and float(spec[2]).is_integer() and spec[2] >= 1)
        if not ok or (spec[2] == 1 and spec[0] != spec[1]):
            raise ConfigError(f"grid entry {name!r} must be [min, max, n] with integer n >= 1")
        axes.append((name, np.linspace(float(spec[0]), float(spec[1]), int(spec[2]))))
    return axes


def initial_density(spec, params: SystemParams) -> np.ndarray:
    if isinstance(spec, str):
        try:
            cs = collective_states(params)
        except IndependentAtoms:
            cs = None
        return named_state(spec, cs, params)
    if isinstance(spec, dict) and set(spec) <= {"re", "im"} and "re" in spec:
        rho = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", 0.0), dtype=float)
    else:
        rho = np.asarray(spec, dtype=float)
    if rho.shape != (4, 4):
        raise ConfigError("explicit initial_state must be a 4x4 matrix")
    check_density_matrix(rho)
    return rho


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _trajectory(rho0, params: SystemParams, dt: float, n: int) -> Trajectory:
    """Modal trajectory when possible, RK4 for degenerate or uncoupled cases."""
    try:
        decomp = decompose(params)
    except IndependentAtoms:
        return rk4_trajectory(rho0, params, dt, n)
    if decomp.degenerate:
        return rk4_trajectory(rho0, params, dt, n)
    return modal_trajectory(rho0, decomp, dt, n)


def _grid_count(cfg: RunConfig) -> int:
    n = round(cfg.t_max / cfg.dt)
    if abs(n * cfg.dt - cfg.t_max) > 1e-9 * cfg.t_max:
        raise ConfigError("t_max must be a multiple of dt")
    return n + 1


def cmd_spectrum(cfg: RunConfig, out: Path) -> list[Path]:
    decomp = decompose(cfg.params)
    decomp.require_nondegenerate()
    json_path = out / "spectrum.json"
    json_path.write_text(json.dumps(decomp.to_dict(), indent=1, sort_keys=True) + "\n")
    rows = [(m.sector, str(m.index), m.eigenvalue.real, m.eigenvalue.imag) for m in decomp.modes]
    csv_path = write_csv(out / "spectrum.csv", ["sector", "index", "re_lambda", "im_lambda"],
                         rows, {"params": cfg.params.as_dict()})
    return [json_path, csv_path]


def cmd_evolve(cfg: RunConfig, out: Path) -> tuple[list[Path], float]:
    """Modal trajectory with RK4 ``_check`` columns; returns the worst deviation."""
    params, n = cfg.params, _grid_count(cfg)
    rho0 = initial_density(cfg.initial_state, params)
    primary = _trajectory(rho0, params, cfg.dt, n)
    oracle = primary if primary.provenance == "rk4" else rk4_trajectory(rho0, params, cfg.dt, n)

    extra, deviation = {}, float(np.max(np.abs(primary.states - oracle.states)))
    for name in cfg.observables:
        obs = observable(name, params)
        extra[name] = primary.expect(obs)
    for name in cfg.observables:
        check = oracle.expect(observable(name, params))
        extra[f"{name}_check"] = check
        deviation = max(deviation, float(np.max(np.abs(check - extra[name]))))
    footer = [f"max_deviation {deviation:.3e} ({primary.provenance} vs rk4)"]
    path = write_trajectory_csv(out / "trajectory.csv", primary, cfg.meta(), extra, footer)
    paths = [path]
    if cfg.emit_svg:
        paths.append(_line_svg(out / "trajectory.svg", primary.times,
                               {k: extra[k] for k in cfg.observables}, "t", "expectation"))
    return paths, deviation


def sweep_rows(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    axes = grid_axes(cfg.grid)
    names = [name for name, _ in axes]
    rows = []
    for point in itertools.product(*(values for _, values in axes)):
        params = cfg.params.replace(**{k: float(v) for k, v in zip(names, point)})
        kappa, nu = sync_constants(params)
        values = {"kappaS": kappa, "nuS": nu}
        if {"C_delayed", "R_I"} & set(cfg.diagnostics):
            values["C_delayed"], values["R_I"] = sync_and_radiance_at(
                params, cfg.t_star, cfg.window, cfg.initial_state, cfg.dt)
        rows.append(tuple(float(v) for v in point) + tuple(values[d] for d in cfg.diagnostics))
    return names + list(cfg.diagnostics), rows


def cmd_sweep(cfg: RunConfig, out: Path, stem: str = "sweep") -> list[Path]:
    if cfg.grid is None:
        raise ConfigError("sweep needs a grid")
    columns, rows = sweep_rows(cfg)
    paths = [write_csv(out / f"{stem}.csv", columns, rows, cfg.meta())]
    if cfg.emit_svg:
        paths.append(_sweep_svg(out / f"{stem}.svg", columns, rows, len(cfg.grid)))
    return paths


def figure_config(fig_id: str) -> RunConfig:
    """Run configuration with every parameter fixed for the given figure."""
    if fig_id == "fig2":
        base = SystemParams(gamma1=1.0, gamma2=1.0, gamma12=0.8)
        return RunConfig(params=base, grid={"delta": [0.0, 2.0, 101], "s12": [0.0, 1.0, 101]},
                         diagnostics=["kappaS"])
    if fig_id == "fig6":
        return RunConfig(params=FIG6_PARAMS, grid={"gamma12": [0.0, 1.0, 21]},
                         diagnostics=["C_delayed", "R_I"], t_star=5.0, window=DEFAULT_WINDOW)
    if fig_id == "fig3":
        return RunConfig(params=FIG3_PARAMS, initial_state="plusplus", t_max=15.0)
    if fig_id in ("fig4a", "fig4b"):
        state = "G_plus_AR" if fig_id == "fig4a" else "G_plus_SR"
        return RunConfig(params=FIG3_PARAMS, initial_state=state, t_max=10.0)
    if fig_id == "fig5":
        return RunConfig(params=FIG3_PARAMS, t_max=10.0)
    raise ConfigError(f"unknown figure id {fig_id!r}")


FIG5_STATES = ("S", "A", "S_R", "A_R", "S_delta", "A_delta", "ee", "IA")


def cmd_figure(fig_id: str, out: Path, emit_svg: bool) -> list[Path]:
    cfg = figure_config(fig_id)
    cfg.emit_svg = emit_svg
    if fig_id in ("fig2", "fig6"):
        return cmd_sweep(cfg, out, stem=fig_id)

    n = _grid_count(cfg)
    if fig_id == "fig5":
        return _figure5(cfg, out, n)

    rho0 = initial_density(cfg.initial_state, cfg.params)
    traj = _trajectory(rho0, cfg.params, cfg.dt, n)
    x1, x2 = bloch_series(traj, 1, "x"), bloch_series(traj, 2, "x")
    series = {"sx1": x1.values, "sx2": x2.values}
    meta = cfg.meta()
    paths = [write_csv(out / f"{fig_id}.csv", ["t", "sx1", "sx2"],
                       np.column_stack([traj.times, x1.values, x2.values]), meta)]
    if fig_id == "fig3":
        report = sync_report(traj, cfg.params, cfg.window)
        rows = np.column_stack([report.plain.times, report.plain.values,
                                report.delayed.values, report.delay.values])
        paths.append(write_csv(out / "fig3_sync.csv", ["t", "C", "C_delayed", "delay"], rows, meta))
    if emit_svg:
        paths.append(_line_svg(out / f"{fig_id}.svg", traj.times, series, "t", "<sigma^x>"))
    return paths


def _figure5(cfg: RunConfig, out: Path, n: int) -> list[Path]:
    independent = cfg.params.replace(gamma1=1.0, gamma2=1.0, gamma12=0.0, s12=0.0)
    curves = {}
    times = None
    for name in FIG5_STATES:
        params = independent if name == "IA" else cfg.params
        rho0 = initial_density("eg" if name == "IA" else name, params)
        traj = _trajectory(rho0, params, cfg.dt, n)
        intensity = radiation_series(traj, params).values
        curves[name] = np.log10(np.maximum(intensity, 1e-300) / (2 * params.gamma0))
        times = traj.times
    meta = dict(cfg.meta(), quantity="log10(I/(2 gamma0))", independent_atoms=independent.as_dict())
    rows = np.column_stack([times] + [curves[k] for k in FIG5_STATES])
    paths = [write_csv(out / "fig5.csv", ["t", *FIG5_STATES], rows, meta)]
    if cfg.emit_svg:
        paths.append(_line_svg(out / "fig5.svg", times, curves, "t", "log10 I/2gamma0"))
    return paths


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "subrad-sync"
    return plt


def _save(plt, fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _line_svg(path: Path, x, curves: dict, xlabel: str, ylabel: str) -> Path:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in curves.items():
        ax.plot(x, y, label=label, linewidth=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    return _save(plt, fig, path)


def _sweep_svg(path: Path, columns, rows, n_axes: int) -> Path:
    data = np.array(rows, dtype=float)
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    if n_axes == 2:
        xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
        z = data[:, 2].reshape(len(xs), len(ys)).T
        mesh = ax.pcolormesh(xs, ys, z, shading="nearest")
        fig.colorbar(mesh, ax=ax, label=columns[2])
        ax.set_ylabel(columns[1])
    else:
        for k, name in enumerate(columns[n_axes:], start=n_axes):
            ax.plot(data[:, 0], data[:, k], marker="o", markersize=3, label=name)
        ax.legend(fontsize=7)
    ax.set_xlabel(columns[0])
    return _save(plt, fig, path)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subrad-sync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "evolve", "sweep", "figure"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "figure", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
        if name == "figure":
            p.add_argument("--id", required=True, choices=FIGURE_IDS, dest="fig_id")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_svg = args.svg or cfg.emit_svg
        cfg.emit_svg = emit_svg
        if args.command == "spectrum":
            paths = cmd_spectrum(cfg, out)
        elif args.command == "evolve":
            paths, deviation = cmd_evolve(cfg, out)
            print(f"max deviation from RK4 oracle: {deviation:.3e}")
            if deviation > ORACLE_TOL:
                print(f"error: modal and RK4 results differ by {deviation:.3e} > {ORACLE_TOL:g}",
                      file=sys.stderr)
                return EXIT_ORACLE
        elif args.command == "sweep":
            paths = cmd_sweep(cfg, out)
        else:
            paths = cmd_figure(args.fig_id, out, emit_svg)
    except DegenerateSpectrum as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
