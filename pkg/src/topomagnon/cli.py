"""Command-line entry point: ``topomagnon <subcommand> [options]``.

Global options may appear before or after the subcommand and override the
matching config fields:

  --config FILE   scenario YAML (may name a ``preset:`` to start from)
  --out DIR       output directory          (output.directory)
  --seed N        RNG seed for shot noise   (seed)
  --dt US         sampling step             (evolution.dt)
  --t-max US      evolution window          (evolution.t_max)
  --shots N       shots per point, 0 exact  (readout.shots)
  --noise on|off  decoherence               (noise.enabled)
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import yaml

from . import __version__, experiment, topology
from .errors import ConfigurationError, TopoMagnonError


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    parser.add_argument("--config", metavar="FILE", help="scenario config (YAML)", **d)
    parser.add_argument("--out", metavar="DIR", help="output directory", **d)
    parser.add_argument("--seed", type=int, help="RNG seed", **d)
    parser.add_argument("--dt", type=float, metavar="US", help="sampling step in microseconds", **d)
    parser.add_argument("--t-max", type=float, metavar="US", help="evolution window in microseconds", **d)
    parser.add_argument("--shots", type=int, help="readout shots per time point (0 = exact)", **d)
    parser.add_argument("--noise", choices=("on", "off"), help="enable T1/T2* decoherence", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topomagnon",
        description="Single-magnon dynamics and topology of dimerized qubit chains.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", parents=[common], help="run one scenario and write its files")
    p.add_argument("--preset", help="built-in scenario name")
    p.add_argument("--list-presets", action="store_true", help="print preset names and exit")

    p = sub.add_parser("sweep", parents=[common], help="run a scenario over one config field")
    p.add_argument("--preset", help="built-in scenario name")
    p.add_argument("--axis", required=True, help="dotted config field, e.g. chain.n_qubits")
    p.add_argument("--values", nargs="*", default=[],
                   help="values as YAML literals, e.g. 4 6 8 or '[1,5,1]' '[5,1,5]'")
    p.add_argument("--workers", type=int, default=1, help="worker processes")

    p = sub.add_parser("spectrum", parents=[common], help="in-gap modes vs. chain length")
    p.add_argument("--j1", type=float, default=1.0, help="intracell coupling (MHz)")
    p.add_argument("--j2", type=float, default=5.0, help="intercell coupling (MHz)")
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=41)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("winding", parents=[common], help="analytic winding number and CD average")
    p.add_argument("--j1", type=float, default=1.0)
    p.add_argument("--j2", type=float, default=5.0)
    p.add_argument("--t-window", type=float, default=None,
                   help="also report 2/T * integral of the bulk CD over [0, T]")

    p = sub.add_parser("rwa-check", parents=[common], help="full integration vs. Bessel coupling")
    p.add_argument("--g", type=float, default=None, help="static coupling (MHz)")
    p.add_argument("--alpha", type=float, default=None, help="modulation index eps/mu")
    p.add_argument("--mu", type=float, nargs="+", default=None, help="modulation frequencies (MHz)")
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    if getattr(args, "seed", None) is not None:
        o["seed"] = args.seed
    evo = {}
    if getattr(args, "dt", None) is not None:
        evo["dt"] = args.dt
    if getattr(args, "t_max", None) is not None:
        evo["t_max"] = args.t_max
    if evo:
        o["evolution"] = evo
    if getattr(args, "shots", None) is not None:
        o["readout"] = {"shots": args.shots}
    if getattr(args, "noise", None) is not None:
        o["noise"] = {"enabled": args.noise == "on"}
    if getattr(args, "out", None) is not None:
        o["output"] = {"directory": args.out}
    return o


def _load(args, preset: Optional[str] = None, extra: Optional[dict] = None) -> experiment.ScenarioConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{args.config} is not valid YAML: {exc}") from None
    if preset is not None:
        raw = {**raw, "preset": preset}
    cfg = experiment.ScenarioConfig.from_dict(raw)
    if extra:
        cfg = cfg.with_overrides(extra)
    return cfg.with_overrides(_overrides(args))


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _cmd_run(args) -> int:
    if args.list_presets:
        for name in experiment.preset_names():
            print(f"{name:20s} {experiment.PRESETS[name].get('note', '')}")
        return 0
    if not args.preset and not getattr(args, "config", None):
        raise ConfigurationError("give --preset NAME or --config FILE (see --list-presets)")
    cfg = _load(args, args.preset)
    bundle = experiment.run_scenario(cfg)
    _print_json({"directory": str(bundle.directory),
                 "files": sorted(p.name for p in bundle.files.values()),
                 "summary": bundle.summary})
    return 0


def _parse_values(values):
    out = []
    for v in values:
        try:
            out.append(yaml.safe_load(v))
        except yaml.YAMLError:
            raise ConfigurationError(f"cannot parse sweep value {v!r}") from None
    return out


def _cmd_sweep(args) -> int:
    if not args.preset and not getattr(args, "config", None):
        raise ConfigurationError("give --preset NAME or --config FILE for the sweep base")
    cfg = _load(args, args.preset)
    table = experiment.run_sweep(cfg, args.axis, _parse_values(args.values), args.workers,
                                 out=cfg.output_directory)
    sys.stdout.write(table.to_csv())
    return 0


def _cmd_spectrum(args) -> int:
    if args.n_min < 2 or args.n_max < args.n_min:
        raise ConfigurationError(f"need 2 <= n-min <= n-max, got {args.n_min}..{args.n_max}")
    cfg = _load(args, "spectrum-size", {"chain": {"dimer": [args.j1, args.j2]}})
    table = experiment.run_sweep(cfg, "chain.n_qubits", list(range(args.n_min, args.n_max + 1)),
                                 args.workers, out=cfg.output_directory)
    sys.stdout.write(table.to_csv())
    return 0


def _cmd_winding(args) -> int:
    wr = topology.winding_number(args.j1, args.j2)
    out = {"j1_mhz": args.j1, "j2_mhz": args.j2, "winding_number": wr.nu,
           "raw_integral": wr.raw_integral, "residual": wr.residual, "k_points": wr.n_points}
    if args.t_window is not None:
        out["t_window_us"] = args.t_window
        out["cd_average_estimate"] = topology.winding_from_cd_average(args.j1, args.j2, args.t_window)
    _print_json(out)
    return 0


def _cmd_rwa(args) -> int:
    rwa = {}
    if args.g is not None:
        rwa["g"] = args.g
    if args.alpha is not None:
        rwa["alpha"] = args.alpha
    if args.mu is not None:
        rwa["mu"] = args.mu
    cfg = _load(args, "rwa-check", {"rwa": rwa} if rwa else None)
    if cfg.output_directory is not None:
        bundle = experiment.run_scenario(cfg)
        _print_json(bundle.summary)
    else:
        rows = experiment.rwa_rows(cfg)
        cols = list(rows[0])
        sys.stdout.write(experiment.table_text(cols, [[r[c] for c in cols] for r in rows]))
    return 0


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "spectrum": _cmd_spectrum,
             "winding": _cmd_winding, "rwa-check": _cmd_rwa}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TopoMagnonError as exc:
        print(f"topomagnon {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
