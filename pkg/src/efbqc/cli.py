"""Command-line front end.

Every subcommand resolves its options from built-in defaults, then an
optional JSON config file, then explicit flags, and writes the resolved
configuration to ``manifest.json`` in the output directory.  A manifest can
be passed back with ``--config`` to repeat a run exactly.

Exit codes: 0 success, 2 configuration error, 3 no threshold crossing in the
grid, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (SIDES, EncodingParams, block_stats, erasure_model, logical_success,
                        loss_at_erasure_budget, optimize_j)
from .fusion_mc import ENUMERATION_CAP, enumerate_exact, sample_logical_batch
from .lattice import NETWORK_KINDS, build_network
from .resources import (BOOSTED_FBQC_2_2, EFBQC_2_2, EFBQC_7_4, RESOURCE_COLUMNS,
                        compare_overhead, resource_rows, to_csv, to_markdown)
from .threshold import (TABLE_PAIRS, DEFAULT_GRIDS, DEFAULT_SIZES, DEFAULT_TRIALS, MODES,
                        FitError, NoCrossingError, SweepSpec, ThresholdResult, config_hash,
                        estimate_crossing, loss_threshold, points_csv, run_sweep,
                        threshold_table)

EXIT_OK, EXIT_CONFIG, EXIT_NO_CROSSING, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("efbqc")

# erasure thresholds used only to centre default loss grids
NOMINAL_ERASURE_THRESHOLD = {"four_star": 0.069, "six_ring": 0.1198, "six_ring_parallel": 0.09}

THRESHOLD_PRESETS = {
    "agnostic-six_ring": {"kind": "six_ring", "mode": "agnostic"},
    "agnostic-four_star": {"kind": "four_star", "mode": "agnostic"},
    "optical-2-2-six_ring": {"kind": "six_ring", "mode": "optical", "encoding": [2, 2, 1]},
    "optical-7-4-six_ring": {"kind": "six_ring", "mode": "optical", "encoding": [7, 4, 1]},
    "optical-7-4-four_star": {"kind": "four_star", "mode": "optical", "encoding": [7, 4, 1]},
}

COMPARE_PRESETS = {
    "efbqc-vs-fbqc": (EFBQC_2_2, BOOSTED_FBQC_2_2),
    "efbqc74-vs-efbqc22": (EFBQC_7_4, EFBQC_2_2),
}


class ConfigError(Exception):
    pass


# -- option tables -----------------------------------------------------------
# name -> (default, argparse kwargs); names double as config-file keys

_COMMON = {
    "out": ("results", {"help": "output directory"}),
    "seed": (0, {"type": int, "help": "master seed"}),
    "workers": (None, {"type": int, "help": "worker threads (default: $EFBQC_WORKERS or CPU count)"}),
}

_OPTIONS = {
    "fusion-stats": {
        "n": (None, {"flags": ["-n"], "type": int, "help": "blocks per logical qubit"}),
        "m": (None, {"flags": ["-m"], "type": int, "help": "photons per block"}),
        "j": (None, {"flags": ["-j"], "type": int, "help": "feedforward depth (omit to maximise P_s)"}),
        "eta": (None, {"type": float, "help": "single transmission value"}),
        "eta_grid": (None, {"type": float, "nargs": 3, "metavar": ("START", "STOP", "NUM"),
                            "help": "linear transmission grid"}),
    },
    "mc-validate": {
        "n": (None, {"flags": ["-n"], "type": int}),
        "m": (None, {"flags": ["-m"], "type": int}),
        "j": (None, {"flags": ["-j"], "type": int}),
        "eta": (1.0, {"type": float}),
        "trials": (1_000_000, {"type": int}),
    },
    "threshold": {
        "preset": (None, {"choices": sorted(THRESHOLD_PRESETS)}),
        "kind": ("six_ring", {"choices": NETWORK_KINDS}),
        "mode": ("agnostic", {"choices": MODES}),
        "grid": (None, {"type": float, "nargs": "+", "help": "noise values (erasure or loss)"}),
        "sizes": (list(DEFAULT_SIZES), {"type": int, "nargs": "+"}),
        "trials": (DEFAULT_TRIALS, {"type": int}),
        "p_error": (0.0, {"type": float}),
        "encoding": (None, {"type": int, "nargs": 3, "metavar": ("N", "M", "J")}),
        "side": ("balanced", {"choices": SIDES}),
        "bootstrap": (200, {"type": int}),
    },
    "loss-threshold": {
        "kind": ("six_ring", {"choices": NETWORK_KINDS}),
        "n": (None, {"flags": ["-n"], "type": int}),
        "m": (None, {"flags": ["-m"], "type": int}),
        "j": (None, {"flags": ["-j"], "type": int, "help": "omit for automatic j"}),
        "sizes": (list(DEFAULT_SIZES), {"type": int, "nargs": "+"}),
        "trials": (DEFAULT_TRIALS, {"type": int}),
        "method": ("bisect", {"choices": ["bisect", "budget"]}),
        "side": ("balanced", {"choices": SIDES}),
        "erasure_threshold": (None, {"type": float, "help": "skip measuring the erasure threshold"}),
    },
    "table": {
        "preset": ("appendix_d", {"choices": ["appendix_d"]}),
        "kinds": (["four_star", "six_ring"], {"nargs": "+", "choices": NETWORK_KINDS}),
        "sizes": (list(DEFAULT_SIZES), {"type": int, "nargs": "+"}),
        "trials": (DEFAULT_TRIALS, {"type": int}),
        "method": ("bisect", {"choices": ["bisect", "budget"]}),
        "side": ("balanced", {"choices": SIDES}),
        "erasure_thresholds": (None, {"type": float, "nargs": "+",
                                      "help": "erasure thresholds per kind, in --kinds order"}),
    },
    "resources": {
        "n": (1, {"flags": ["-n"], "type": int}),
        "m": (1, {"flags": ["-m"], "type": int}),
        "kind": ("four_star", {"choices": NETWORK_KINDS}),
        "compare": (None, {"choices": sorted(COMPARE_PRESETS)}),
        "format": ("csv", {"choices": ["csv", "markdown"]}),
    },
    "export-network": {
        "kind": ("six_ring", {"choices": NETWORK_KINDS}),
        "L": (2, {"flags": ["-L", "--L"], "type": int}),
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="efbqc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for command, options in _OPTIONS.items():
        sp = subs.add_parser(command)
        sp.add_argument("--config", default=None, help="JSON config file or manifest")
        sp.add_argument("--dry-run", action="store_true", help="write the manifest and stop")
        sp.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")
        for name, (_, kwargs) in {**_COMMON, **options}.items():
            kwargs = dict(kwargs)
            flags = kwargs.pop("flags", None) or ["--" + name.replace("_", "-")]
            sp.add_argument(*flags, dest=name, default=None, **kwargs)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then preset, then config file, then explicit flags."""
    table = {**_COMMON, **_OPTIONS[command]}
    config = {name: default for name, (default, _) in table.items()}
    loaded = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        if "config" in loaded and "command" in loaded:
            if loaded["command"] != command:
                raise ConfigError(f"manifest is for {loaded['command']!r}, not {command!r}")
            loaded = loaded["config"]
        unknown = sorted(set(loaded) - set(table))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    preset = getattr(args, "preset", None) or loaded.get("preset")
    if command == "threshold" and preset:
        if preset not in THRESHOLD_PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        config.update(THRESHOLD_PRESETS[preset])
    config.update(loaded)
    for name in table:
        value = getattr(args, name, None)
        if value is not None:
            config[name] = value
    return config


def write_manifest(out: Path, command: str, config: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "version": __version__, "config": config,
                "config_hash": config_hash({"command": command, **config})}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _require(config, *names):
    missing = [n for n in names if config.get(n) is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")


def _params(n, m, j):
    try:
        return EncodingParams(n, m, j)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _emit(out: Path, name: str, text: str):
    (out / name).write_text(text)
    sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_fusion_stats(config, out):
    _require(config, "n", "m")
    if config["eta_grid"] is not None:
        start, stop, num = config["eta_grid"]
        etas = np.linspace(start, stop, int(num))
    else:
        etas = [1.0 if config["eta"] is None else config["eta"]]
    rows = []
    for eta in etas:
        eta = float(eta)
        if not 0.0 <= eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {eta}")
        j = config["j"]
        if j is None:
            _params(config["n"], config["m"], 0)
            j, _ = optimize_j(config["n"], config["m"], eta)
        p = _params(config["n"], config["m"], j)
        s, e = block_stats(p, eta), erasure_model(p, eta)
        rows.append({"n": p.n, "m": p.m, "j": p.j, "eta": f"{eta:.6f}",
                     "p_full": f"{s.p_full:.10f}", "p_fail": f"{s.p_fail:.10f}",
                     "P_s": f"{logical_success(p, eta):.10f}",
                     "eps_xx": f"{e.eps_xx:.10f}", "eps_zz": f"{e.eps_zz:.10f}"})
    _emit(out, "fusion_stats.csv", to_csv(rows))
    return EXIT_OK


def cmd_mc_validate(config, out):
    _require(config, "n", "m", "j")
    p = _params(config["n"], config["m"], config["j"])
    eta, trials = float(config["eta"]), int(config["trials"])
    if trials < 1:
        raise ConfigError("trials must be positive")
    analytic = erasure_model(p, eta)
    exact = enumerate_exact(p, eta) if p.n * p.m <= ENUMERATION_CAP else None
    log.info("sampling %d encoded fusions", trials)
    freqs = sample_logical_batch(p, eta, trials, seed=config["seed"]).frequencies()
    rows = []
    for key in ("p_both_known", "eps_xx", "eps_zz", "p_both_erased"):
        a = getattr(analytic, key)
        se = max(np.sqrt(a * (1 - a) / trials), 1e-300)
        z = (freqs[key] - a) / se if a * (1 - a) > 0 else 0.0
        rows.append({"quantity": key, "analytic": f"{a:.12f}",
                     "exact": "" if exact is None else f"{getattr(exact, key):.12f}",
                     "mc": f"{freqs[key]:.6f}", "z": f"{z:.3f}"})
    _emit(out, "mc_validate.csv", to_csv(rows))
    return EXIT_OK


def _threshold_grid(config):
    if config["grid"]:
        return tuple(config["grid"])
    kind = config["kind"]
    if config["mode"] == "agnostic":
        return DEFAULT_GRIDS[kind]
    _require(config, "encoding")
    p = _params(*config["encoding"])
    centre = loss_at_erasure_budget(p, NOMINAL_ERASURE_THRESHOLD[kind], config["side"])
    if centre <= 0.0:
        raise ConfigError("encoding has no positive loss threshold; pass --grid explicitly")
    half = max(0.02, 0.25 * centre)
    return tuple(np.round(np.linspace(max(0.0, centre - half), centre + half, 15), 6))


def cmd_threshold(config, out):
    try:
        spec = SweepSpec(config["kind"], config["mode"], _threshold_grid(config),
                         tuple(config["sizes"]), int(config["trials"]), int(config["seed"]),
                         float(config["p_error"]),
                         tuple(config["encoding"]) if config["encoding"] else None,
                         config["side"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    points = run_sweep(spec, workers=config["workers"], progress=log.info)
    (out / "points.csv").write_text(points_csv(points))
    counts = np.array([[pt.failures for pt in points if pt.L == L] for L in spec.sizes])
    try:
        estimate, ci, pairwise = estimate_crossing(spec.grid, spec.sizes, counts, spec.trials,
                                                   n_boot=int(config["bootstrap"]),
                                                   seed=spec.seed)
    except NoCrossingError as exc:
        log.error("no crossing: %s", exc)
        return EXIT_NO_CROSSING
    result = ThresholdResult(spec, points, estimate, ci, pairwise, config_hash(spec.to_dict()))
    text = json.dumps(result.summary(), indent=2, sort_keys=True) + "\n"
    _emit(out, "threshold.json", text)
    return EXIT_OK


def cmd_loss_threshold(config, out):
    _require(config, "n", "m")
    _params(config["n"], config["m"], config["j"] if config["j"] is not None else 0)
    res = loss_threshold(config["kind"], config["n"], config["m"], config["j"],
                         sizes=config["sizes"], trials=int(config["trials"]),
                         seed=int(config["seed"]), method=config["method"], side=config["side"],
                         erasure_threshold_value=config["erasure_threshold"],
                         workers=config["workers"], progress=log.info)
    _emit(out, "loss_threshold.json", json.dumps(res.summary(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_table(config, out):
    kinds = tuple(config["kinds"])
    budgets = None
    if config["erasure_thresholds"]:
        if len(config["erasure_thresholds"]) != len(kinds):
            raise ConfigError("give one erasure threshold per kind")
        budgets = dict(zip(kinds, config["erasure_thresholds"]))
    rows = threshold_table(TABLE_PAIRS, kinds=kinds, sizes=config["sizes"],
                           trials=int(config["trials"]), seed=int(config["seed"]),
                           method=config["method"], side=config["side"],
                           erasure_thresholds=budgets, workers=config["workers"],
                           progress=log.info)
    table = []
    for r in rows:
        row = {"n": r["n"], "m": r["m"], "photons": r["photons"]}
        # j* is reported for the last kind; per-kind values follow
        row["j_star"] = r[f"j_{kinds[-1]}"]
        for kind in kinds:
            row[f"threshold_{kind}"] = f"{r[f'threshold_{kind}']:.6f}"
        for kind in kinds:
            row[f"j_{kind}"] = r[f"j_{kind}"]
        table.append(row)
    _emit(out, "table.csv", to_csv(table))
    return EXIT_OK


def cmd_resources(config, out):
    if config["compare"]:
        report = compare_overhead(*COMPARE_PRESETS[config["compare"]])
        rows = [dict(r, verdict=report["verdict"]) for r in report["rows"]]
        columns = None
    else:
        _params(config["n"], config["m"], 0)
        rows = resource_rows(config["kind"], [(config["n"], config["m"])])
        columns = RESOURCE_COLUMNS
    (out / "resources.csv").write_text(to_csv(rows, columns))
    sys.stdout.write(to_markdown(rows, columns) if config["format"] == "markdown"
                     else to_csv(rows, columns))
    return EXIT_OK


def cmd_export_network(config, out):
    try:
        net = build_network(config["kind"], config["L"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = out / f"network_{net.kind}_L{net.L}.json"
    path.write_text(json.dumps(net.to_json()) + "\n")
    log.info("wrote %s (%d cells, %d edges)", path, net.n_cells, net.n_edges)
    return EXIT_OK


COMMANDS = {
    "fusion-stats": cmd_fusion_stats,
    "mc-validate": cmd_mc_validate,
    "threshold": cmd_threshold,
    "loss-threshold": cmd_loss_threshold,
    "table": cmd_table,
    "resources": cmd_resources,
    "export-network": cmd_export_network,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if args.quiet else logging.INFO, force=True)
    try:
        config = resolve_config(args.command, args)
        out = Path(config["out"])
        write_manifest(out, args.command, config)
        if args.dry_run:
            log.info("dry run: wrote %s", out / "manifest.json")
            return EXIT_OK
        return COMMANDS[args.command](config, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NoCrossingError as exc:
        log.error("no crossing: %s", exc)
        return EXIT_NO_CROSSING
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (TypeError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
