"""Config-driven command-line runner.

Every run reads one flat YAML or JSON mapping, validates it completely,
computes all artifacts in memory and only then writes them, together with a
``manifest.json``, into the output directory.

Exit codes: 0 success, 2 configuration error, 3 empty post-selection,
4 numerical failure.
"""

from __future__ import annotations

import os


def _apply_thread_env() -> int | None:
    raw = os.environ.get("HHGPS_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        return None
    if n < 1:
        return None
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


# must run before numpy loads its BLAS
_THREADS = _apply_thread_env()

import argparse  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import platform  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from importlib import resources  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Any  # noqa: E402

import numpy as np  # noqa: E402
import scipy  # noqa: E402
import yaml  # noqa: E402

from . import __version__  # noqa: E402
from . import io as hio  # noqa: E402
from .analysis import (  # noqa: E402
    DiagonalFilter,
    accepted_slope,
    cat_state,
    correlation_map,
    default_filter,
    default_fluctuation_pipeline,
    fidelity_scan,
    intensity_fluctuation_state,
    node_c,
)
from .errors import ConfigError, EmptySelectionError, NumericalError  # noqa: E402
from .fock import DensityOperator, coherent_state, purity, suggest_cutoff  # noqa: E402
from .postselect import HHGOutputSpec, PostSelectionSpec, postselect  # noqa: E402
from .tomography import RadonConfig, frobenius_similarity, inverse_radon, sample_homodyne  # noqa: E402
from .wigner import WignerGrid, wigner_metrics, wigner_of_density  # noqa: E402

EXIT_OK, EXIT_CONFIG, EXIT_EMPTY, EXIT_NUMERICAL = 0, 2, 3, 4

EXPERIMENTS = (
    "state",
    "wigner",
    "diagonal-sweep",
    "fidelity-scan",
    "homodyne",
    "radon",
    "kc-sweep",
    "shots-sweep",
    "fluctuations",
    "correlate",
)

DEFAULTS: dict[str, Any] = {
    "experiment": None,
    "seed": 0,
    # state source
    "state": "postselected",
    "alpha": 1.2,
    "delta_alpha": -0.3,
    "orders": [13, 15],
    "chis": None,
    "kappas": None,
    "c": None,
    "sigma": "auto",
    "efficiency": 1.0,
    "weight_floor": 1e-8,
    "band_sigmas": None,
    "cutoff_t": None,
    "cutoff_r": None,
    "cutoff_q": None,
    "truncation_tol": 1e-6,
    "state_amplitude": None,
    "beta": None,
    "delta_beta": None,
    "state_cutoff": None,
    # phase-space grid
    "grid_half_width": 6.0,
    "grid_points": 201,
    "convention": "internal",
    "export_upsample": 1,
    # fidelity scan
    "scan_range": [1e-3, 3.0],
    "scan_resolution": 100,
    # tomography
    "n_phi": 20,
    "n_shots": 100,
    "k_c": 2.0,
    "variant": "per-sample",
    "normalization": "unit",
    "tomography_convention": "unscaled",
    "k_c_values": [1.0, 2.0, 3.0, 4.0],
    "n_shots_values": [10, 100, 1000],
    # sweeps
    "sweep_key": "kappa",
    "sweep_values": None,
    "sigma_tilde_values": [0.02, 0.22, 0.33],
    "n_nodes": 41,
    # correlation map
    "corr_shots": 10000,
    "filters": None,
    "scale_xuv": True,
}

_CHOICES = {
    "experiment": EXPERIMENTS,
    "state": ("postselected", "coherent", "cat"),
    "convention": ("internal", "unscaled"),
    "tomography_convention": ("internal", "unscaled"),
    "variant": ("per-sample", "per-angle-mean"),
    "normalization": ("unit", "pi-squared"),
    "sweep_key": ("kappa", "sigma", "c", "efficiency"),
}


def _number(key, v, *, positive=False, nonneg=False, integer=False, optional=False):
    if v is None and optional:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(key, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    if positive and v <= 0:
        raise ConfigError(key, f"must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(key, f"must be >= 0, got {v!r}")
    return int(v) if integer else float(v)


def _number_list(key, v, **kw):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(key, "expected a non-empty list")
    return [_number(key, x, **kw) for x in v]


def resolve_config(raw: dict) -> dict:
    """Merge ``raw`` over the defaults and type-check every key."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg = {**DEFAULTS, **raw}
    for key, choices in _CHOICES.items():
        if cfg[key] not in choices:
            raise ConfigError(key, f"must be one of {list(choices)}, got {cfg[key]!r}")
    cfg["seed"] = _number("seed", cfg["seed"], integer=True, nonneg=True)
    cfg["alpha"] = _number("alpha", cfg["alpha"], nonneg=True)
    cfg["delta_alpha"] = _number("delta_alpha", cfg["delta_alpha"])
    cfg["orders"] = _number_list("orders", cfg["orders"], integer=True, positive=True)
    if cfg["chis"] is not None:
        cfg["chis"] = _number_list("chis", cfg["chis"], nonneg=True)
        if len(cfg["chis"]) != len(cfg["orders"]):
            raise ConfigError("chis", "need one value per harmonic order")
    if cfg["kappas"] is not None:
        cfg["kappas"] = _number_list("kappas", cfg["kappas"], nonneg=True)
        if len(cfg["kappas"]) != len(cfg["orders"]):
            raise ConfigError("kappas", "need one value per harmonic order")
    cfg["c"] = _number("c", cfg["c"], nonneg=True, optional=True)
    if cfg["sigma"] not in ("auto", "exact"):
        cfg["sigma"] = _number("sigma", cfg["sigma"], positive=True)
    cfg["efficiency"] = _number("efficiency", cfg["efficiency"], positive=True)
    if cfg["efficiency"] > 1:
        raise ConfigError("efficiency", "must lie in (0, 1]")
    cfg["weight_floor"] = _number("weight_floor", cfg["weight_floor"], positive=True)
    cfg["band_sigmas"] = _number("band_sigmas", cfg["band_sigmas"], positive=True, optional=True)
    for key in ("cutoff_t", "cutoff_r", "cutoff_q", "state_cutoff"):
        cfg[key] = _number(key, cfg[key], integer=True, optional=True)
        if cfg[key] is not None and cfg[key] < 1:
            raise ConfigError(key, f"cutoff must be >= 1, got {cfg[key]}")
    cfg["truncation_tol"] = _number("truncation_tol", cfg["truncation_tol"], positive=True)
    cfg["state_amplitude"] = _number("state_amplitude", cfg["state_amplitude"], nonneg=True, optional=True)
    cfg["beta"] = _number("beta", cfg["beta"], nonneg=True, optional=True)
    cfg["delta_beta"] = _number("delta_beta", cfg["delta_beta"], positive=True, optional=True)
    if cfg["state"] == "coherent" and cfg["state_amplitude"] is None:
        raise ConfigError("state_amplitude", "required when state is 'coherent'")
    if cfg["state"] == "cat" and (cfg["beta"] is None or cfg["delta_beta"] is None):
        raise ConfigError("beta" if cfg["beta"] is None else "delta_beta", "required when state is 'cat'")
    cfg["grid_half_width"] = _number("grid_half_width", cfg["grid_half_width"], positive=True)
    cfg["grid_points"] = _number("grid_points", cfg["grid_points"], integer=True, positive=True)
    if cfg["grid_points"] < 3:
        raise ConfigError("grid_points", "need at least 3 points")
    cfg["export_upsample"] = _number("export_upsample", cfg["export_upsample"], integer=True, positive=True)
    cfg["scan_range"] = _number_list("scan_range", cfg["scan_range"], positive=True)
    if len(cfg["scan_range"]) != 2 or cfg["scan_range"][0] >= cfg["scan_range"][1]:
        raise ConfigError("scan_range", "expected [low, high] with low < high")
    cfg["scan_resolution"] = _number("scan_resolution", cfg["scan_resolution"], integer=True, positive=True)
    if cfg["scan_resolution"] < 2:
        raise ConfigError("scan_resolution", "must be >= 2")
    cfg["n_phi"] = _number("n_phi", cfg["n_phi"], integer=True, positive=True)
    cfg["n_shots"] = _number("n_shots", cfg["n_shots"], integer=True, positive=True)
    cfg["k_c"] = _number("k_c", cfg["k_c"], positive=True)
    cfg["k_c_values"] = _number_list("k_c_values", cfg["k_c_values"], positive=True)
    cfg["n_shots_values"] = _number_list("n_shots_values", cfg["n_shots_values"], integer=True, positive=True)
    if cfg["sweep_values"] is not None:
        if not isinstance(cfg["sweep_values"], list) or not cfg["sweep_values"]:
            raise ConfigError("sweep_values", "expected a non-empty list")
        cfg["sweep_values"] = [
            _number_list("sweep_values", v, nonneg=True) if isinstance(v, list) else _number("sweep_values", v, nonneg=True)
            for v in cfg["sweep_values"]
        ]
    elif cfg["experiment"] == "diagonal-sweep":
        raise ConfigError("sweep_values", "required for diagonal-sweep")
    cfg["sigma_tilde_values"] = _number_list("sigma_tilde_values", cfg["sigma_tilde_values"], positive=True)
    cfg["n_nodes"] = _number("n_nodes", cfg["n_nodes"], integer=True, positive=True)
    if cfg["n_nodes"] < 21:
        raise ConfigError("n_nodes", "use at least 21 nodes")
    cfg["corr_shots"] = _number("corr_shots", cfg["corr_shots"], integer=True, positive=True)
    if cfg["filters"] is not None:
        if not isinstance(cfg["filters"], list):
            raise ConfigError("filters", "expected a list of {kappas, c, half_width} mappings")
        parsed = []
        for f in cfg["filters"]:
            if not isinstance(f, dict) or set(f) - {"kappas", "c", "half_width"} or "kappas" not in f:
                raise ConfigError("filters", f"bad filter entry {f!r}")
            kap = _number_list("filters", f["kappas"], nonneg=True)
            if len(kap) != len(cfg["orders"]):
                raise ConfigError("filters", "need one slope per harmonic order")
            parsed.append(
                {
                    "kappas": kap,
                    "c": _number("filters", f.get("c"), nonneg=True, optional=True),
                    "half_width": _number("filters", f.get("half_width", 0.5), nonneg=True),
                }
            )
        cfg["filters"] = parsed
    if not isinstance(cfg["scale_xuv"], bool):
        raise ConfigError("scale_xuv", "expected true or false")
    if cfg["experiment"] is None:
        raise ConfigError("experiment", "required")
    return cfg


def _sigma(cfg, value=None):
    s = cfg["sigma"] if value is None else value
    return None if s == "exact" else s


def _hhg(cfg, alpha=None) -> HHGOutputSpec:
    try:
        return HHGOutputSpec.make(
            cfg["alpha"] if alpha is None else alpha,
            cfg["delta_alpha"],
            cfg["orders"],
            cfg["chis"],
            cfg["cutoff_t"],
            cfg["cutoff_r"],
            cfg["cutoff_q"],
        )
    except ValueError as exc:
        raise ConfigError("orders", str(exc)) from exc


def _ps(cfg, hhg, **overrides) -> PostSelectionSpec:
    params = {
        "kappas": cfg["kappas"],
        "sigma": _sigma(cfg),
        "c": cfg["c"],
        "efficiency": cfg["efficiency"],
    }
    params.update(overrides)
    try:
        return PostSelectionSpec.for_output(
            hhg,
            kappas=params["kappas"],
            sigma=params["sigma"],
            c=params["c"],
            efficiency=params["efficiency"],
            weight_floor=cfg["weight_floor"],
            band_sigmas=cfg["band_sigmas"],
        )
    except ValueError as exc:
        raise ConfigError("sigma", str(exc)) from exc


def _source_state(cfg, **overrides) -> tuple[DensityOperator, dict]:
    """The single-mode state the experiment analyses, plus summary numbers."""
    tol = cfg["truncation_tol"]
    if cfg["state"] == "coherent":
        amp = cfg["state_amplitude"]
        cut = cfg["state_cutoff"] or suggest_cutoff(amp)
        return coherent_state(amp, cut, tol).density(), {"state": f"coherent({amp})"}
    if cfg["state"] == "cat":
        b, d = cfg["beta"], cfg["delta_beta"]
        cut = cfg["state_cutoff"] or suggest_cutoff(b + d)
        return cat_state(b, d, cut).density(), {"state": f"cat({b}, {d})"}
    hhg = _hhg(cfg)
    ps = _ps(cfg, hhg, **overrides)
    res = postselect(hhg, ps, tol)
    summary = {
        "state": f"postselected(alpha={cfg['alpha']}, delta_alpha={cfg['delta_alpha']})",
        "success_probability": res.success_probability,
        "n_tuples": res.n_tuples,
        "dropped_tuples": res.dropped,
        "c": ps.c,
        "kappas": list(ps.kappas),
        "effective_kappas": list(ps.effective_kappas),
        "sigma": ps.sigma,
        "dims": list(hhg.layout.dims),
    }
    return res.rho, summary


def _axis(cfg, scale=1.0):
    return np.linspace(-cfg["grid_half_width"], cfg["grid_half_width"], cfg["grid_points"]) * scale


def _upsample(grid: WignerGrid, factor: int) -> WignerGrid:
    if factor == 1:
        return grid
    from scipy.interpolate import RectBivariateSpline

    spline = RectBivariateSpline(grid.x, grid.p, grid.values, kx=3, ky=3)
    x = np.linspace(grid.x[0], grid.x[-1], (grid.x.size - 1) * factor + 1)
    p = np.linspace(grid.p[0], grid.p[-1], (grid.p.size - 1) * factor + 1)
    return WignerGrid(x, p, spline(x, p))


def _grid_artifact(cfg, name: str, grid: WignerGrid, fmt: str) -> tuple[str, str]:
    grid = _upsample(grid, cfg["export_upsample"])
    if fmt == "csv":
        return f"{name}.csv", hio.wigner_to_csv(grid)
    return f"{name}.json", hio.dumps_json(hio.wigner_to_dict(grid))


def _table_artifact(name: str, columns: dict, fmt: str) -> tuple[str, str]:
    if fmt == "csv":
        return f"{name}.csv", hio.table_to_csv(columns)
    return f"{name}.json", hio.dumps_json({k: np.asarray(v).tolist() for k, v in columns.items()})


def _trace_artifacts(trace, fmt) -> dict[str, str]:
    header = hio.trace_header(trace)
    if fmt == "csv":
        return {"homodyne.csv": hio.trace_to_csv(trace), "homodyne_header.json": hio.dumps_json(header)}
    body = {**header, "phases": trace.phases.tolist(), "outcomes": trace.outcomes.tolist()}
    return {"homodyne.json": hio.dumps_json(body)}


def _wigner(cfg, rho, convention=None):
    conv = convention or cfg["convention"]
    scale = math.sqrt(2) if conv == "unscaled" else 1.0
    return wigner_of_density(rho, _axis(cfg, scale), convention=conv, check_normalization=False)


def _radon_config(cfg, k_c=None) -> RadonConfig:
    scale = math.sqrt(2) if cfg["tomography_convention"] == "unscaled" else 1.0
    return RadonConfig(
        cfg["k_c"] if k_c is None else k_c,
        _axis(cfg, scale),
        variant=cfg["variant"],
        normalization=cfg["normalization"],
    )


def _sample(cfg, rho, descriptor, n_shots=None):
    return sample_homodyne(
        rho,
        cfg["n_phi"],
        cfg["n_shots"] if n_shots is None else n_shots,
        seed=cfg["seed"],
        convention=cfg["tomography_convention"],
        state_descriptor=descriptor,
    )


def _reconstruction_summary(cfg, rho, recon: WignerGrid) -> dict:
    exact = _wigner(cfg, rho, cfg["tomography_convention"])
    return {
        "reconstruction": wigner_metrics(recon).as_dict(),
        "exact": wigner_metrics(exact).as_dict(),
        "similarity": frobenius_similarity(recon, exact),
    }


def _sweep_overrides(cfg, key, value) -> dict:
    n_harm = len(cfg["orders"])
    if key == "kappa":
        kap = value if isinstance(value, list) else [value] * n_harm
        if len(kap) != n_harm:
            raise ConfigError("sweep_values", "kappa entries need one slope per harmonic")
        return {"kappas": kap}
    if isinstance(value, list):
        raise ConfigError("sweep_values", f"{key} sweep values must be scalars")
    if key == "sigma":
        return {"sigma": value if value > 0 else None}
    if key == "efficiency":
        if not 0 < value <= 1:
            raise ConfigError("sweep_values", "efficiency must lie in (0, 1]")
        return {"efficiency": value}
    return {"c": value}


def run(cfg: dict, fmt: str = "csv") -> tuple[dict[str, str], dict]:
    """Execute a resolved config; returns ``(artifacts, summary)`` without touching disk."""
    exp = cfg["experiment"]
    out: dict[str, str] = {}
    summary: dict[str, Any] = {}

    if exp in ("state", "wigner", "fidelity-scan", "homodyne", "radon", "kc-sweep", "shots-sweep"):
        rho, info = _source_state(cfg)
        summary.update(info)
        summary["purity"] = purity(rho)
        summary["mean_photon_number"] = rho.mean_photon_number()
        descriptor = info["state"]

    if exp == "state":
        out["rho.json"] = hio.dumps_json(hio.state_to_dict(rho))
    elif exp == "wigner":
        grid = _wigner(cfg, rho)
        out.update([_grid_artifact(cfg, "wigner", grid, fmt)])
        summary["metrics"] = wigner_metrics(grid).as_dict()
    elif exp == "fidelity-scan":
        res = fidelity_scan(rho, tuple(cfg["scan_range"]), resolution=cfg["scan_resolution"])
        summary["scan"] = res.as_dict()
        out["scan.json"] = hio.dumps_json(res.as_dict())
    elif exp == "homodyne":
        out.update(_trace_artifacts(_sample(cfg, rho, descriptor), fmt))
    elif exp == "radon":
        trace = _sample(cfg, rho, descriptor)
        recon = inverse_radon(trace, _radon_config(cfg))
        out.update(_trace_artifacts(trace, fmt))
        out.update([_grid_artifact(cfg, "reconstruction", recon, fmt)])
        out.update([_grid_artifact(cfg, "exact", _wigner(cfg, rho, cfg["tomography_convention"]), fmt)])
        summary.update(_reconstruction_summary(cfg, rho, recon))
    elif exp == "kc-sweep":
        trace = _sample(cfg, rho, descriptor)
        out.update(_trace_artifacts(trace, fmt))
        rows = []
        for k, kc in enumerate(cfg["k_c_values"]):
            recon = inverse_radon(trace, _radon_config(cfg, kc))
            out.update([_grid_artifact(cfg, f"reconstruction_kc_{k}", recon, fmt)])
            rows.append({"k_c": kc, **_reconstruction_summary(cfg, rho, recon)})
        summary["sweep"] = rows
    elif exp == "shots-sweep":
        rows = []
        for k, n in enumerate(cfg["n_shots_values"]):
            recon = inverse_radon(_sample(cfg, rho, descriptor, n), _radon_config(cfg))
            out.update([_grid_artifact(cfg, f"reconstruction_shots_{k}", recon, fmt)])
            rows.append({"n_shots": n, **_reconstruction_summary(cfg, rho, recon)})
        summary["sweep"] = rows
    elif exp == "diagonal-sweep":
        if cfg["state"] != "postselected":
            raise ConfigError("state", "diagonal-sweep needs the postselected state")
        rows = []
        for k, value in enumerate(cfg["sweep_values"]):
            rho, info = _source_state(cfg, **_sweep_overrides(cfg, cfg["sweep_key"], value))
            grid = _wigner(cfg, rho)
            out.update([_grid_artifact(cfg, f"wigner_{cfg['sweep_key']}_{k}", grid, fmt)])
            rows.append({"value": value, "purity": purity(rho), "metrics": wigner_metrics(grid).as_dict(), **info})
        summary["sweep"] = rows
    elif exp == "fluctuations":
        rows = []
        amax = cfg["alpha"] + 4 * max(cfg["sigma_tilde_values"])
        make_output, _ = default_fluctuation_pipeline(
            cfg["delta_alpha"], cfg["orders"], cfg["cutoff_t"], cfg["cutoff_r"], cfg["cutoff_q"], amax
        )

        def make_selection(hhg):
            c = cfg["c"] if cfg["c"] is not None else node_c(hhg.n0)
            return _ps(cfg, hhg, c=c)

        for k, st in enumerate(cfg["sigma_tilde_values"]):
            rho = intensity_fluctuation_state(
                cfg["alpha"], st, cfg["delta_alpha"], make_output, make_selection, cfg["n_nodes"]
            )
            grid = _wigner(cfg, rho)
            out.update([_grid_artifact(cfg, f"wigner_sigma_tilde_{k}", grid, fmt)])
            rows.append({"sigma_tilde": st, "purity": purity(rho), "metrics": wigner_metrics(grid).as_dict()})
        summary["sweep"] = rows
    elif exp == "correlate":
        hhg = _hhg(cfg)
        if cfg["filters"] is None:
            filters = [default_filter(hhg), default_filter(hhg, [1.0] * len(cfg["orders"]))]
        else:
            filters = [
                DiagonalFilter(tuple(f["kappas"]), f["c"], f["half_width"])
                if f["c"] is not None
                else default_filter(hhg, f["kappas"], f["half_width"])
                for f in cfg["filters"]
            ]
        filters = [f.scaled(cfg["efficiency"]) for f in filters]
        rec = correlation_map(hhg, cfg["corr_shots"], cfg["seed"], filters, cfg["scale_xuv"])
        out.update([_table_artifact("shots", rec.columns(), fmt)])
        stats = []
        for k, f in enumerate(filters):
            row = {"kappas": list(f.kappas), "c": f.c, "half_width": f.half_width,
                   "accepted": int(rec.accepted[:, k].sum())}
            try:
                row["slope"] = accepted_slope(rec, k)
            except ValueError:
                row["slope"] = None
            stats.append(row)
        summary.update(
            {
                "mean_n_r": float(rec.n_r.mean()),
                "var_n_r": float(rec.n_r.var()),
                "mean_m": rec.m.mean(axis=0).tolist(),
                "filters": stats,
            }
        )
    out["summary.json"] = hio.dumps_json(summary)
    return out, summary


def load_recipe(name: str) -> dict:
    path = resources.files("hhgps") / "recipes" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError("--recipe", f"no recipe named {name!r}; available: {', '.join(list_recipes())}")
    return yaml.safe_load(path.read_text()) or {}


def list_recipes() -> list[str]:
    folder = resources.files("hhgps") / "recipes"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("--config", f"file not found: {path}")
    text = p.read_text()
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError("--config", f"cannot parse {path}: {exc}") from exc
    return data or {}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hhgps", description="Simulate post-selected HHG light states.")
    ap.add_argument("--config", help="YAML or JSON config file")
    ap.add_argument("--recipe", help="packaged figure recipe to use as the base config")
    ap.add_argument("--out", help="output directory (required unless --list-recipes)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--format", choices=("csv", "json"), default="csv", help="grid and table format")
    ap.add_argument("--list-recipes", action="store_true", help="print recipe names and exit")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_recipes:
        print("\n".join(list_recipes()))
        return EXIT_OK
    started = time.perf_counter()
    try:
        if not args.out:
            raise ConfigError("--out", "output directory is required")
        raw: dict = {}
        if args.recipe:
            raw.update(load_recipe(args.recipe))
        if args.config:
            overlay = _load_config_file(args.config)
            if not isinstance(overlay, dict):
                raise ConfigError("--config", "config must be a mapping")
            raw.update(overlay)
        if not raw:
            raise ConfigError("--config", "give --config and/or --recipe")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be >= 0")
            raw["seed"] = args.seed
        cfg = resolve_config(raw)
        out_dir = Path(args.out)
        if out_dir.exists() and not out_dir.is_dir():
            raise ConfigError("--out", f"{out_dir} exists and is not a directory")
        artifacts, summary = run(cfg, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptySelectionError as exc:
        print(f"empty post-selection: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = {
        "config": cfg,
        "recipe": args.recipe,
        "seed": cfg["seed"],
        "format": args.format,
        "outputs": sorted(artifacts) + ["manifest.json"],
        "versions": {
            "hhgps": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "threads": _THREADS,
        "runtime_seconds": round(time.perf_counter() - started, 3),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in artifacts.items():
        (out_dir / name).write_text(text)
    (out_dir / "manifest.json").write_text(hio.dumps_json(manifest))
    print(json.dumps({"out": str(out_dir), "outputs": manifest["outputs"]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
