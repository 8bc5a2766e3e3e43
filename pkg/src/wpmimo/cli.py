"""Batch experiment runner.

Reads a flat ``key=value`` scenario config, runs a figure-preset sweep or an
optimizer comparison, and writes an RFC-4180 CSV plus a JSON run manifest.
Reruns with the same config and seed produce byte-identical CSV bodies.

Units are fixed: watts (powers, thresholds), hertz (bandwidth), meters
(radii), symbols (frame and pilot lengths), joules (``sigma2``, per-symbol
noise energy).  ``p_dl`` is the average transmit power in watts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, mc_oracle, model_core, power_pte, rate_ee
from .model_core import DownlinkConfig, FrameConfig, GeometryModel, HarvesterSpec
from .power_pte import BsPowerModel

ANALYTIC = "analytic"
MONTE_CARLO = "monte_carlo"
OPTIMIZER = "optimizer"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

WORKERS_ENV = "WPMIMO_WORKERS"


class ConfigError(ValueError):
    """Invalid configuration or command line; maps to exit code 1."""


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    points: int
    scale: str  # "linear" | "log"

    def values(self) -> list:
        if self.scale == "log":
            grid = np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        else:
            grid = np.linspace(self.start, self.stop, self.points)
        if self.name in ("m", "k"):
            seen: list[int] = []
            for v in grid:
                iv = int(round(v))
                if not seen or iv != seen[-1]:
                    seen.append(iv)
            return seen
        return [float(v) for v in grid]


@dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    axis: SweepAxis
    params: dict
    n_trials: int
    seed: int


# ---------------------------------------------------------------------------
# Presets: parameter fixtures and sweep defaults

_BASE_WET = {
    "m": 100, "k": 1, "p_dl": 10.0, "xi": 0.1,
    "s": 1800, "b": 1e6, "sigma2": 10.0 ** (-20.4), "tau": None,
    "alpha_wet": None, "alpha_wit": None,
    "r_min": 5.0, "r_max": 20.0, "path_exponent": 3.2, "intercept": 1.76e-4,
    "theta_act": 1e-5, "theta_sat": 1e-3, "eta_eh": 0.5, "eta_pa_eh": 0.3,
    "p_fix": 1.0, "p_bs": 1.0, "kappa_bs": 2e10, "eta_pa_bs": 0.39, "p_dec": 1e-9,
}
# information-transfer variant: higher fixed power, wider cell, short
# harvest phase with the rest of the frame on the uplink
_BASE_WIT = {**_BASE_WET, "k": 2, "r_max": 50.0, "p_fix": 18.0, "alpha_wet": 0.01}

_PRESETS: dict[str, dict] = {
    "fig2_harvest_vs_m": {
        "params": _BASE_WET,
        "axis": SweepAxis("m", 1, 3000, 16, "log"),
        "builder": "_rows_harvest_vs_m",
    },
    "fig3_pte_vs_m": {
        "params": _BASE_WET,
        "axis": SweepAxis("m", 1, 3000, 40, "log"),
        "builder": "_rows_pte_vs_m",
    },
    "fig4_xi_sweep": {
        "params": {**_BASE_WET, "m": 500, "s": 100, "p_dl": 20.0, "r_max": 50.0},
        "axis": SweepAxis("xi", 0.001, 0.5, 50, "log"),
        "builder": "_rows_xi_sweep",
    },
    "fig5_ee_vs_m": {
        "params": _BASE_WIT,
        "axis": SweepAxis("m", 4, 4096, 28, "log"),
        "builder": "_rows_ee_vs_m",
    },
    "fig6_per_antenna_power": {
        "params": _BASE_WIT,
        "axis": SweepAxis("m", 4, 4096, 28, "log"),
        "builder": "_rows_per_antenna_power",
    },
    "fig7_ee_vs_m_k50": {
        "params": {**_BASE_WIT, "k": 50},
        "axis": SweepAxis("m", 52, 4096, 28, "log"),
        "builder": "_rows_ee_vs_m",
    },
    "fig8_rate_vs_m": {
        "params": _BASE_WIT,
        "axis": SweepAxis("m", 4, 4096, 28, "log"),
        "builder": "_rows_rate_vs_m",
    },
    "custom": {
        "params": _BASE_WET,
        "axis": SweepAxis("m", 10, 200, 10, "linear"),
        "builder": "_rows_custom",
    },
}

_FLOAT_KEYS = {
    "p_dl", "xi", "b", "sigma2", "alpha_wet", "alpha_wit",
    "r_min", "r_max", "path_exponent", "intercept",
    "theta_act", "theta_sat", "eta_eh", "eta_pa_eh",
    "p_fix", "p_bs", "kappa_bs", "eta_pa_bs", "p_dec",
    "start", "stop",
}
_INT_KEYS = {"m", "k", "s", "tau", "points", "n_trials", "seed"}
_STR_KEYS = {"preset", "axis", "scale"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS

_AXIS_NAMES = ("m", "k", "xi", "p_dl")
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 1


# ---------------------------------------------------------------------------
# Config parsing

def parse_config(text: str) -> dict:
    """Parse flat ``key=value`` lines ('#' comments) into a typed dict."""
    raw: dict = {}
    unknown: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip().lower(), value.strip()
        if key not in _ALL_KEYS:
            unknown.append(key)
            continue
        try:
            raw[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    return raw


def _coerce(key: str, value: str):
    if key in _STR_KEYS:
        return value.lower()
    if key in _INT_KEYS:
        return int(value)
    x = float(value)  # accepts 'inf' for theta_sat
    return x


def build_spec(raw: dict) -> ExperimentSpec:
    """Resolve raw key/value overrides against the preset's fixture."""
    preset = raw.get("preset", "custom")
    if preset not in _PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r}; choose from {', '.join(sorted(_PRESETS))}"
        )
    entry = _PRESETS[preset]
    params = dict(entry["params"])
    default_axis: SweepAxis = entry["axis"]

    axis_name = raw.get("axis", default_axis.name)
    if axis_name not in _AXIS_NAMES:
        raise ConfigError(f"axis must be one of {', '.join(_AXIS_NAMES)}")
    axis = SweepAxis(
        axis_name,
        raw.get("start", default_axis.start if axis_name == default_axis.name else 1),
        raw.get("stop", default_axis.stop if axis_name == default_axis.name else 10),
        raw.get("points", default_axis.points),
        raw.get("scale", default_axis.scale),
    )
    if axis.scale not in ("linear", "log"):
        raise ConfigError("scale must be 'linear' or 'log'")
    if axis.points < 2:
        raise ConfigError("points must be at least 2")
    if not (axis.start < axis.stop):
        raise ConfigError("need start < stop")
    if axis.scale == "log" and axis.start <= 0:
        raise ConfigError("log scale needs start > 0")

    for key, value in raw.items():
        if key in params:
            params[key] = value

    n_trials = raw.get("n_trials", DEFAULT_TRIALS)
    if n_trials < 1:
        raise ConfigError("n_trials must be positive")
    seed = raw.get("seed", DEFAULT_SEED)
    spec = ExperimentSpec(preset, axis, params, n_trials, seed)
    _context(spec.params, spec.params["k"])  # validate the fixture eagerly
    return spec


# ---------------------------------------------------------------------------
# Model assembly

@dataclass(frozen=True)
class _Context:
    beta: float
    harv: HarvesterSpec
    pm: BsPowerModel
    frame: FrameConfig
    cfg: DownlinkConfig


def _context(p: dict, K: int, M: int | None = None, xi: float | None = None,
             p_dl_w: float | None = None) -> _Context:
    try:
        geom = GeometryModel(p["r_min"], p["r_max"], p["path_exponent"], p["intercept"])
        beta = model_core.mean_large_scale_gain(geom)
        harv = HarvesterSpec(p["theta_act"], p["theta_sat"], p["eta_eh"], p["eta_pa_eh"])
        pm = BsPowerModel(p["p_fix"], p["p_bs"], p["kappa_bs"], p["eta_pa_bs"], p["p_dec"])
        tau = p["tau"] if p["tau"] is not None else K
        if tau < K:
            raise ValueError("pilot length tau must be at least K")
        if p["alpha_wet"] is None:
            frame = FrameConfig.wet_only(p["s"], p["b"], tau, p["sigma2"])
        elif p["alpha_wit"] is None:
            frame = FrameConfig.with_harvest_fraction(
                p["s"], p["b"], tau, p["sigma2"], p["alpha_wet"]
            )
        else:
            frame = FrameConfig(
                p["s"], p["b"], tau / p["s"], p["alpha_wet"], p["alpha_wit"],
                tau, p["sigma2"],
            )
        m = M if M is not None else p["m"]
        watts = p_dl_w if p_dl_w is not None else p["p_dl"]
        cfg = DownlinkConfig.equal_split(
            m, K, watts / (frame.alpha_wet * frame.B), xi if xi is not None else p["xi"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return _Context(beta, harv, pm, frame, cfg)


# ---------------------------------------------------------------------------
# Row builders (one per preset family)

def _rows_harvest_vs_m(spec: ExperimentSpec, values: list):
    header = ["m", "harvested_anl_perfect_w", "harvested_anl_imperfect_w",
              "harvested_mc_w", "mc_stderr_w"]
    K = spec.params["k"]

    def row(item):
        index, M = item
        ctx = _context(spec.params, K, M=M)
        perfect = model_core.harvested_perfect(ctx.cfg, ctx.frame, ctx.harv, ctx.beta)
        imperfect = model_core.harvested_imperfect(ctx.cfg, ctx.frame, ctx.harv, ctx.beta)
        scenario = mc_oracle.McScenario(ctx.frame, ctx.cfg, (ctx.beta,) * K, mc_oracle.LS)
        stats = mc_oracle.estimate_harvested_energy(
            spec.n_trials, spec.seed + index, scenario, ctx.harv
        )
        B = ctx.frame.B
        return [M, B * perfect.harvested, B * imperfect.harvested,
                stats.mean_harvested_power(B), B * stats.std_err]

    return header, _map_rows(row, list(enumerate(values))), [MONTE_CARLO] * len(values)


def _rows_pte_vs_m(spec: ExperimentSpec, values: list):
    header = ["m", "pte", "pte_imperfect"]
    K = spec.params["k"]
    ctx = _context(spec.params, K)

    def row(item):
        _, M = item
        perfect = power_pte.pte(M, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta)
        imperfect = power_pte.pte(
            M, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta, imperfect_csi=True
        )
        return [M, perfect.pte, imperfect.pte]

    return header, _map_rows(row, list(enumerate(values))), [ANALYTIC] * len(values)


def _rows_xi_sweep(spec: ExperimentSpec, values: list):
    header = ["xi", "effective_harvested_w", "is_argmax"]
    K = spec.params["k"]

    def row(item):
        _, xi = item
        ctx = _context(spec.params, K, xi=xi)
        report = model_core.harvested_imperfect(ctx.cfg, ctx.frame, ctx.harv, ctx.beta)
        eff = model_core.effective_harvested(report, xi)
        return [xi, ctx.frame.B * eff, 0]

    rows = _map_rows(row, list(enumerate(values)))
    best = max(range(len(rows)), key=lambda j: rows[j][1])
    rows[best][2] = 1
    return header, rows, [ANALYTIC] * len(values)


def _ee_policies(spec: ExperimentSpec, M: int):
    """EE of the four transmit-power policies at one sweep point."""
    K = spec.params["k"]
    ctx = _context(spec.params, K, M=M)
    ideal = HarvesterSpec.ideal(ctx.harv.eta_eh, ctx.harv.eta_pa_eh)
    args = (M, K, ctx.frame, ctx.pm, ctx.cfg)

    p_ideal = rate_ee.ee_optimal_pdl(*args, ideal, ctx.beta)
    ee_ideal = rate_ee.ee_at_transmit_power(*args, ideal, ctx.beta, p_ideal).ee
    ee_naive = rate_ee.ee_at_transmit_power(*args, ctx.harv, ctx.beta, p_ideal).ee
    p_alg1 = rate_ee.algorithm1_select_pdl(*args, ctx.harv, ctx.beta)
    ee_alg1 = rate_ee.ee_at_transmit_power(*args, ctx.harv, ctx.beta, p_alg1).ee

    p_act = K * ctx.harv.theta_act / (ctx.beta * (M + K - 1))
    p_sat = K * ctx.harv.theta_sat / (ctx.beta * (M + K + 1))
    grid = np.logspace(math.log10(0.01 * p_act), math.log10(100.0 * p_sat), 200)
    best_p, best_ee = 0.0, 0.0
    for p in grid:
        val = rate_ee.ee_at_transmit_power(*args, ctx.harv, ctx.beta, float(p)).ee
        if val > best_ee:
            best_p, best_ee = float(p), val
    return {
        "p_ideal": p_ideal, "ee_ideal": ee_ideal, "ee_naive": ee_naive,
        "p_alg1": p_alg1, "ee_alg1": ee_alg1,
        "p_grid": best_p, "ee_grid": best_ee, "ctx": ctx,
    }


def _rows_ee_vs_m(spec: ExperimentSpec, values: list):
    header = ["m", "ee_ideal", "ee_practical_naive", "ee_algorithm1", "ee_exhaustive"]

    def row(item):
        _, M = item
        pol = _ee_policies(spec, M)
        return [M, pol["ee_ideal"], pol["ee_naive"], pol["ee_alg1"], pol["ee_grid"]]

    return header, _map_rows(row, list(enumerate(values))), [OPTIMIZER] * len(values)


def _rows_per_antenna_power(spec: ExperimentSpec, values: list):
    header = ["m", "per_antenna_pdl_ideal_w", "per_antenna_pdl_alg1_w"]
    K = spec.params["k"]

    def row(item):
        _, M = item
        ctx = _context(spec.params, K, M=M)
        ideal = HarvesterSpec.ideal(ctx.harv.eta_eh, ctx.harv.eta_pa_eh)
        p_ideal = rate_ee.ee_optimal_pdl(M, K, ctx.frame, ctx.pm, ctx.cfg, ideal, ctx.beta)
        p_alg1 = rate_ee.algorithm1_select_pdl(
            M, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta
        )
        return [M, p_ideal / M, p_alg1 / M]

    return header, _map_rows(row, list(enumerate(values))), [OPTIMIZER] * len(values)


def _rows_rate_vs_m(spec: ExperimentSpec, values: list):
    header = ["m", "sum_rate_alg1_bps", "mode_alg1"]
    K = spec.params["k"]

    def row(item):
        _, M = item
        ctx = _context(spec.params, K, M=M)
        p_alg1 = rate_ee.algorithm1_select_pdl(
            M, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta
        )
        eff = _context(spec.params, K, M=M, p_dl_w=p_alg1)
        report = rate_ee.uplink_rate(M, K, eff.frame, eff.cfg, eff.harv, eff.beta)
        return [M, report.sum_rate, report.mode]

    return header, _map_rows(row, list(enumerate(values))), [OPTIMIZER] * len(values)


def _rows_custom(spec: ExperimentSpec, values: list):
    header = [spec.axis.name, "incident_w", "harvested_w", "pte"]
    p = spec.params

    def row(item):
        _, v = item
        kwargs = {}
        K = p["k"]
        if spec.axis.name == "m":
            kwargs["M"] = v
        elif spec.axis.name == "k":
            K = v
        elif spec.axis.name == "xi":
            kwargs["xi"] = v
        else:
            kwargs["p_dl_w"] = v
        ctx = _context(p, K, **kwargs)
        report = model_core.harvested_perfect(ctx.cfg, ctx.frame, ctx.harv, ctx.beta)
        result = power_pte.pte(
            ctx.cfg.M, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta
        )
        return [v, ctx.frame.B * report.incident, ctx.frame.B * report.harvested,
                result.pte]

    return header, _map_rows(row, list(enumerate(values))), [ANALYTIC] * len(values)


def _map_rows(fn, items):
    workers = os.environ.get(WORKERS_ENV)
    try:
        count = int(workers) if workers else min(4, os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None
    if count <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))  # map() keeps axis order


# ---------------------------------------------------------------------------
# Optimizer comparison

def compare_optimizers(spec: ExperimentSpec):
    """Closed-form optimizers against their search oracles for this preset."""
    K = spec.params["k"]
    if spec.preset == "fig3_pte_vs_m" or (spec.preset == "custom" and spec.axis.name == "m"):
        ctx = _context(spec.params, K)
        closed = power_pte.pte_optimal_m(K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta)
        _, m_sat = model_core.antenna_thresholds_perfect(
            model_core.with_users(ctx.cfg, 1, K), ctx.frame, ctx.harv, ctx.beta
        )
        hi = int(math.ceil(1.25 * m_sat))
        sweep = range(1, hi + 1)
        brute = max(
            sweep,
            key=lambda m: power_pte.pte(m, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta).pte,
        )
        val = lambda m: power_pte.pte(m, K, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta).pte
        gap = (val(brute) - val(closed)) / val(brute) if val(brute) > 0 else 0.0
        header = ["target", "closed_form", "brute_force", "relative_gap"]
        return header, [["m", closed, brute, gap]], [OPTIMIZER]

    if spec.preset == "custom" and spec.axis.name == "k":
        ctx = _context(spec.params, K)
        M = spec.params["m"]
        closed = power_pte.pte_optimal_k(M, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta)
        limit = power_pte.k_max(M, ctx.cfg.transmit_power(ctx.frame), ctx.beta, ctx.harv)
        if math.isinf(limit):
            raise ConfigError("k comparison needs a finite activation user limit")
        val = lambda k: power_pte.pte(M, k, ctx.frame, ctx.pm, ctx.cfg, ctx.harv, ctx.beta).pte
        brute = max(range(1, int(limit) + 1), key=val)
        gap = (val(brute) - val(closed)) / val(brute) if val(brute) > 0 else 0.0
        header = ["target", "closed_form", "brute_force", "relative_gap"]
        return header, [["k", closed, brute, gap]], [OPTIMIZER]

    if spec.preset in ("fig5_ee_vs_m", "fig7_ee_vs_m_k50"):
        header = ["m", "lambert_pdl_w", "search_pdl_w", "lambert_ee_gap_rel",
                  "alg1_pdl_w", "grid_pdl_w", "alg1_ee_gap_rel"]
        values = spec.axis.values()

        def row(item):
            _, M = item
            pol = _ee_policies(spec, M)
            ctx = pol["ctx"]
            ideal = HarvesterSpec.ideal(ctx.harv.eta_eh, ctx.harv.eta_pa_eh)
            p_gs, ee_gs = rate_ee.ee_optimal_pdl_search(
                M, K, ctx.frame, ctx.pm, ctx.cfg, ideal, ctx.beta
            )
            gap_l = (ee_gs - pol["ee_ideal"]) / ee_gs if ee_gs > 0 else 0.0
            gap_a = (
                (pol["ee_grid"] - pol["ee_alg1"]) / pol["ee_grid"]
                if pol["ee_grid"] > 0 else 0.0
            )
            return [M, pol["p_ideal"], p_gs, gap_l, pol["p_alg1"], pol["p_grid"], gap_a]

        rows = _map_rows(row, list(enumerate(values)))
        return header, rows, [OPTIMIZER] * len(rows)

    raise ConfigError(f"preset {spec.preset!r} has no optimizer target to compare")


# ---------------------------------------------------------------------------
# Output

def _format_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec):
    """Execute the sweep; returns ``(csv_text, manifest_dict)``."""
    values = spec.axis.values()
    builder = globals()[_PRESETS[spec.preset]["builder"]]
    header, rows, provenance = builder(spec, values)
    return _package(spec, header, rows, provenance)


def _package(spec: ExperimentSpec, header, rows, provenance):
    csv_text = render_csv(header, rows)
    resolved = {**spec.params, "preset": spec.preset, "axis": spec.axis.name,
                "start": spec.axis.start, "stop": spec.axis.stop,
                "points": spec.axis.points, "scale": spec.axis.scale,
                "n_trials": spec.n_trials, "seed": spec.seed}
    canonical = "\n".join(f"{k}={resolved[k]!r}" for k in sorted(resolved))
    manifest = {
        "tool": "wpmimo",
        "version": __version__,
        "preset": spec.preset,
        "seed": spec.seed,
        "n_trials": spec.n_trials,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "rows": [
            {"row": i, "axis": _format_cell(rows[i][0]), "provenance": provenance[i]}
            for i in range(len(rows))
        ],
    }
    return csv_text, manifest


# ---------------------------------------------------------------------------
# Command line

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage problems
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="wpmimo", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run a preset sweep and write CSV + manifest"),
        ("compare", "compare closed-form optimizers against search oracles"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="path to a key=value config file")
        cmd.add_argument("--out", help="output CSV path (default: stdout)")
        cmd.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        cmd.add_argument("--seed", type=int, help="base RNG seed")
        cmd.add_argument("--preset", help="preset name (overrides config)")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a single config key (repeatable)")
    return parser


def _assemble_spec(args) -> ExperimentSpec:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw.update(parse_config(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    elif not args.preset:
        raise ConfigError("provide --config and/or --preset")
    if args.preset:
        raw["preset"] = args.preset.lower()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw.update(parse_config(item))
    if args.trials is not None:
        raw["n_trials"] = args.trials
    if args.seed is not None:
        raw["seed"] = args.seed
    return build_spec(raw)


def _emit(csv_text: str, manifest: dict, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(csv_text)
        return
    tmp = out + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        spec = _assemble_spec(args)
        if args.command == "run":
            csv_text, manifest = run_experiment(spec)
        else:
            header, rows, provenance = compare_optimizers(spec)
            csv_text, manifest = _package(spec, header, rows, provenance)
        _emit(csv_text, manifest, args.out)
    except ConfigError as exc:
        print(f"wpmimo: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit:
        raise
    except BaseException as exc:  # noqa: BLE001 - CLI boundary
        print(f"wpmimo: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
