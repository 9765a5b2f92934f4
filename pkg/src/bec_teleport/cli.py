"""Command-line experiment runner producing plot-ready CSV datasets.

Every file starts with a ``#`` block holding the package version and the
fully resolved experiment settings in INI form; passing the dataset itself
back through ``--config`` reproduces it.
"""
from __future__ import annotations

import argparse
import configparser
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from bec_teleport import __version__
from bec_teleport.metrics import (
    average_error,
    classical_binary_bound,
    phi_grid,
    success_probability,
)
from bec_teleport.protocol import (
    ProtocolConfig,
    conditional_bob_spin,
    measurement_distribution,
    teleport_sample,
)
from bec_teleport.spin_core import expectation_spin

SECTION = "experiment"
FIG1_PANELS = ("a", "b", "c", "d")
FIG2_PANELS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    panel: str | None = None
    n: tuple[int, ...] = (100,)
    phi: float = 0.0
    gamma: tuple[float, ...] = (0.0,)
    k1_cut: tuple[int | None, ...] = (0,)
    tau: float | None = None
    big_t: float | None = None
    seed: int = 0
    shots: int = 1000
    phi_grid: int = 64
    dephase_all_three: bool = True
    workers: int = 1

    def config(self, n: int, gamma: float, k1_cut: int | None, phi: float | None = None) -> ProtocolConfig:
        return ProtocolConfig(
            n_bosons=n,
            phi=self.phi if phi is None else phi,
            tau=self.tau,
            big_t=self.big_t,
            gamma=gamma,
            k1_cut=k1_cut,
            seed=self.seed,
            dephase_all_three=self.dephase_all_three,
        )

    def single(self) -> ProtocolConfig:
        for name in ("n", "gamma", "k1_cut"):
            if len(getattr(self, name)) != 1:
                raise ValueError(f"{self.command} takes a single --{name.replace('_', '-')} value")
        return self.config(self.n[0], self.gamma[0], self.k1_cut[0])


DEFAULTS = {
    "fig1": dict(n=(100,), gamma=(2.0,), k1_cut=(None,), panel="all"),
    "fig2:a": dict(n=(100,), gamma=(0.0, 2.0), k1_cut=(0,)),
    "fig2:b": dict(n=(20, 50, 100, 200), gamma=(0.0,), k1_cut=(0, 10, None)),
    "fig2:c": dict(n=(50, 100, 200), gamma=(0.0,), k1_cut=()),
    "fig2:d": dict(n=(20, 50, 100, 200), gamma=(0.0, 0.2, 2.0), k1_cut=(0,)),
    "sample": dict(n=(20,), gamma=(0.0,), k1_cut=(None,)),
    "sweep": dict(n=(100,), gamma=(0.0,), k1_cut=(0,)),
}


# -- value rendering -------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, (tuple, list)):
        return ",".join(fmt(v) for v in value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _parse_cut(text: str) -> int | None:
    return None if text.strip().lower() == "none" else int(text)


def _parse_optional_float(text: str) -> float | None:
    return None if text.strip().lower() == "none" else float(text)


def _parse_list(text: str, item) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(item(part) for part in text.split(","))


PARSERS = {
    "panel": lambda s: None if s.strip().lower() == "none" else s.strip(),
    "n": lambda s: _parse_list(s, int),
    "phi": float,
    "gamma": lambda s: _parse_list(s, float),
    "k1_cut": lambda s: _parse_list(s, _parse_cut),
    "tau": _parse_optional_float,
    "big_t": _parse_optional_float,
    "seed": int,
    "shots": int,
    "phi_grid": int,
    "dephase_all_three": _parse_bool,
    "workers": int,
}


def read_config(path: str) -> dict:
    """Settings from an INI file or from the header of a previous dataset."""
    text = Path(path).read_text()
    if text.startswith("#"):
        lines = []
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            lines.append(line[1:].strip())
        text = "\n".join(lines[1:])  # drop the version line
    parser = configparser.ConfigParser()
    parser.read_string(text)
    if not parser.has_section(SECTION):
        raise ValueError(f"{path}: no [{SECTION}] section")
    out = {}
    for key, raw in parser.items(SECTION):
        if key == "command":
            continue
        if key not in PARSERS:
            raise ValueError(f"{path}: unknown key {key!r}")
        out[key] = PARSERS[key](raw)
    return out


def header(spec: ExperimentSpec) -> str:
    lines = [f"bec_teleport {__version__}", f"[{SECTION}]"]
    for f in fields(spec):
        if f.name == "workers":
            continue
        lines.append(f"{f.name} = {fmt(getattr(spec, f.name))}")
    return "".join(f"# {line}\n" for line in lines)


def write_dataset(spec: ExperimentSpec, columns: Sequence[str], rows: Iterable[Sequence], out: str) -> None:
    buf = io.StringIO()
    buf.write(header(spec))
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join("" if v == "" else fmt(v) for v in row) + "\n")
    if out == "-":
        sys.stdout.write(buf.getvalue())
        return
    try:
        Path(out).write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc


# -- subcommands -----------------------------------------------------------

def fig1_rows(spec: ExperimentSpec, panel: str):
    n = spec.n[0]
    grid = phi_grid(spec.phi_grid)
    gamma = spec.gamma[0] if panel == "d" else 0.0
    k1 = {"a": n, "b": 0, "d": n}.get(panel)
    rows = []
    for phi in grid:
        dist = measurement_distribution(spec.config(n, gamma, None, phi=float(phi)))
        if panel == "c":
            rows.extend((float(phi), k, float(v)) for k, v in enumerate(dist.k1_marginal()))
        else:
            rows.extend((float(phi), k2, float(v)) for k2, v in enumerate(dist.p[k1]))
    columns = ("phi", "k1", "p_marginal") if panel == "c" else ("phi", "k2", "p")
    return columns, rows


def cmd_fig1(spec: ExperimentSpec, out: str) -> None:
    if len(spec.n) != 1:
        raise ValueError("fig1 takes a single --n value")
    panels = FIG1_PANELS if spec.panel in (None, "all") else (spec.panel,)
    for panel in panels:
        if panel not in FIG1_PANELS:
            raise ValueError(f"fig1 panel must be one of a, b, c, d, all; got {panel!r}")
        target = out
        if len(panels) > 1 and out != "-":
            path = Path(out)
            target = str(path.with_name(f"{path.stem}_{panel}{path.suffix}"))
        columns, rows = fig1_rows(spec, panel)
        write_dataset(replace(spec, panel=panel), columns, rows, target)


def _error_row(args):
    n, gamma, cut, spec = args
    cfg = spec.config(n, gamma, cut)
    return average_error(cfg, spec.phi_grid).epsilon


def _map(spec: ExperimentSpec, func, items):
    items = list(items)
    if spec.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def cmd_fig2(spec: ExperimentSpec, out: str) -> None:
    panel = spec.panel
    bound = classical_binary_bound()
    if panel == "a":
        if len(spec.n) != 1 or len(spec.k1_cut) != 1:
            raise ValueError("fig2 panel a takes a single --n and --k1-cut")
        n, cut = spec.n[0], spec.k1_cut[0]
        rows = []
        for gamma in spec.gamma:
            for phi in phi_grid(spec.phi_grid):
                cfg = spec.config(n, gamma, cut, phi=float(phi))
                s = conditional_bob_spin(cfg)
                rows.append((cfg.phi, gamma, s.sx / n, s.sy / n, math.cos(cfg.phi), math.sin(cfg.phi)))
        columns = ("phi", "gamma", "sx_over_N", "sy_over_N", "ideal_sx_over_N", "ideal_sy_over_N")
    elif panel in ("b", "d"):
        grid = sorted(
            itertools.product(spec.n, spec.gamma, spec.k1_cut),
            key=lambda g: (g[0], g[1], math.inf if g[2] is None else g[2]),
        )
        eps = _map(spec, _error_row, [(n, g, c, spec) for n, g, c in grid])
        rows = [(n, g, c, e, bound, "") for (n, g, c), e in zip(grid, eps)]
        columns = ("N", "gamma", "k1_cut", "epsilon", "epsilon_bin", "epsilon_qse")
    elif panel == "c":
        rows = []
        for n in sorted(spec.n):
            cfg = spec.config(n, spec.gamma[0], None)
            dist = measurement_distribution(cfg)
            cuts = spec.k1_cut or tuple(range(n // 2 + 1))
            for cut in cuts:
                if cut is None:
                    cut = n // 2
                rows.append((n, cut, cut / n, success_probability(cfg.with_(k1_cut=cut), dist)))
        columns = ("N", "k1_cut", "k1_cut_over_N", "p_suc")
    else:
        raise ValueError(f"fig2 needs --panel a, b, c or d; got {panel!r}")
    write_dataset(spec, columns, rows, out)


def cmd_sample(spec: ExperimentSpec, out: str) -> None:
    if spec.shots < 1:
        raise ValueError(f"shots must be >= 1, got {spec.shots}")
    cfg = spec.single()
    spins: dict[int, tuple] = {}
    rows = []
    for i, run in enumerate(teleport_sample(cfg, spec.shots)):
        key = id(run.bob_density)
        if key not in spins:
            s = expectation_spin(run.bob_density)
            spins[key] = (s.sx, s.sy, s.sz)
        rows.append((i, run.k1, run.k2, run.accepted, *spins[key]))
    columns = ("shot_index", "k1", "k2", "accepted", "bob_sx", "bob_sy", "bob_sz")
    write_dataset(spec, columns, rows, out)


def _sweep_point(args):
    n, gamma, cut, spec = args
    cfg = spec.config(n, gamma, cut)
    return average_error(cfg, spec.phi_grid).epsilon, success_probability(cfg)


def cmd_sweep(spec: ExperimentSpec, out: str) -> None:
    grid = sorted(
        itertools.product(spec.n, spec.gamma, spec.k1_cut),
        key=lambda g: (g[0], g[1], math.inf if g[2] is None else g[2]),
    )
    for n, gamma, cut in grid:
        spec.config(n, gamma, cut)  # validate before any work starts
    results = _map(spec, _sweep_point, [(n, g, c, spec) for n, g, c in grid])
    rows = [(n, g, c, e, p) for (n, g, c), (e, p) in zip(grid, results)]
    write_dataset(spec, ("N", "gamma", "k1_cut", "epsilon", "p_suc"), rows, out)


COMMANDS = {"fig1": cmd_fig1, "fig2": cmd_fig2, "sample": cmd_sample, "sweep": cmd_sweep}


# -- argument handling -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", help="boson number(s), comma separated")
    common.add_argument("--phi", help="Alice's azimuth in radians")
    common.add_argument("--gamma", help="dephasing rate(s), comma separated")
    common.add_argument("--k1-cut", dest="k1_cut", help="cutoff(s), comma separated; 'none' keeps all")
    common.add_argument("--tau", help="step-2 gate time (default 1/sqrt(2N))")
    common.add_argument("--big-t", dest="big_t", help="step-1 gate time (default 1/sqrt(2N))")
    common.add_argument("--seed")
    common.add_argument("--shots")
    common.add_argument("--phi-grid", dest="phi_grid")
    common.add_argument("--dephase-all-three", dest="dephase_all_three", choices=("true", "false"))
    common.add_argument("--workers", help="parallel processes for sweeps")
    common.add_argument("--config", help="INI file or previous dataset to take settings from")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")

    parser = argparse.ArgumentParser(prog="bec-teleport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p1 = sub.add_parser("fig1", parents=[common], help="outcome distributions p(k1, k2)")
    p1.add_argument("--panel", choices=FIG1_PANELS + ("all",))
    p2 = sub.add_parser("fig2", parents=[common], help="spin, error and success-probability curves")
    p2.add_argument("--panel", choices=FIG2_PANELS)
    sub.add_parser("sample", parents=[common], help="Monte Carlo shots")
    sub.add_parser("sweep", parents=[common], help="grid over N, gamma, k1_cut")
    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Defaults, then the config file, then explicit flags."""
    settings: dict = {}
    panel = getattr(args, "panel", None)
    if args.config:
        from_file = read_config(args.config)
        panel = panel or from_file.get("panel")
        settings.update(from_file)
    key = f"fig2:{panel}" if args.command == "fig2" else args.command
    if args.command == "fig2" and panel not in FIG2_PANELS:
        raise ValueError("fig2 needs --panel a, b, c or d")
    merged = dict(DEFAULTS[key])
    merged.update(settings)
    for name, parse in PARSERS.items():
        raw = getattr(args, name, None)
        if raw is not None and name != "panel":
            merged[name] = parse(raw)
    if panel is not None:
        merged["panel"] = panel
    return ExperimentSpec(command=args.command, **merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = resolve_spec(args)
        COMMANDS[args.command](spec, args.out)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"bec-teleport: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
