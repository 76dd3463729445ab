"""Experiment pipelines behind the CLI subcommands."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, classical, stochastic, tdse
from .config import ExperimentConfig, write_manifest
from .errors import ConfigError
from .output import Series, emit_csv, emit_svg, emit_table

log = logging.getLogger(__name__)

PER_D_ROUTES = ("averaged", "mc")
NOISE_FREE_ROUTES = ("analytic", "tdse")

FIGURE1_BASE = ExperimentConfig(field="constant", E=0.3)
FIGURE2_BASE = ExperimentConfig(field="femto", E0=0.1, omega=0.114)


@dataclass
class RunResult:
    series: list
    summary: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    report: object = None


# ---------------------------------------------------------------------------
# curve metrics


def peak_and_width(t, j):
    """Peak |j| and the time span where |j| exceeds half of it.

    The span runs from the first up-crossing to the last down-crossing of
    the half level, located by linear interpolation between samples.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(j, dtype=float))
    peak = float(a.max())
    half = 0.5 * peak
    above = np.flatnonzero(a >= half)
    i0, i1 = above[0], above[-1]

    def cross(i, k):
        return float(t[i] + (half - a[i]) * (t[k] - t[i]) / (a[k] - a[i]))

    start = cross(i0 - 1, i0) if i0 > 0 else float(t[0])
    end = cross(i1, i1 + 1) if i1 < a.size - 1 else float(t[-1])
    return peak, end - start


def ordering_windows(t, j_test, j_ref):
    """Maximal time windows where |j_test| > |j_ref| ("enhanced") or < ("suppressed").

    Samples where both magnitudes are equal (e.g. t = 0) are skipped.
    Window edges are the linearly interpolated zero crossings of the
    magnitude difference.
    """
    t = np.asarray(t, dtype=float)
    d = np.abs(np.asarray(j_test, float)) - np.abs(np.asarray(j_ref, float))
    sign = np.sign(d)
    windows = []
    cur = None
    for i in range(t.size):
        s = sign[i]
        if s == 0:
            continue
        if cur is None or s != cur["s"]:
            if cur is not None:
                # boundary between previous sample cur["last"] and i
                k = cur["last"]
                edge = float(t[k] - d[k] * (t[i] - t[k]) / (d[i] - d[k]))
                cur["end"] = edge
                windows.append(cur)
                start = edge
            else:
                start = float(t[i])
            cur = {"s": s, "start": start, "last": i, "first": i}
        cur["last"] = i
    if cur is not None:
        cur["end"] = float(t[cur["last"]])
        windows.append(cur)
    return [{"kind": "enhanced" if w["s"] > 0 else "suppressed",
             "start": w["start"], "end": w["end"],
             "max_ref": float(np.max(np.abs(j_ref[w["first"]:w["last"] + 1])))}
            for w in windows]


# ---------------------------------------------------------------------------
# routes


def route_series(route: str, cfg: ExperimentConfig, D: float, t) -> Series:
    """Flux curve on ``t`` for one route; ``D`` is ignored by noise-free routes."""
    fld, packet, x = cfg.field_model(), cfg.packet(), cfg.x_obs
    if route == "analytic":
        return Series("analytic", t, analytic.gaussian_flux(x, t, packet, fld))
    if route == "averaged":
        return Series(f"averaged_D={D:g}", t,
                      analytic.averaged_flux(x, t, packet, fld, D, cfg.drift_coefficient))
    if route == "mc":
        if D == 0:
            j = analytic.gaussian_flux(x, t, packet, fld)
            return Series(f"mc_D={D:g}", t, j, err=np.zeros_like(j))
        s = stochastic.ensemble_flux(x, t, packet, fld, cfg.noise(D), cfg.n_paths,
                                     workers=cfg.workers, exact=cfg.exact_paths)
        return Series(f"mc_D={D:g}", t, s.values, err=s.stderr)
    if route == "tdse":
        ev = tdse.tdse_flux(fld, packet, cfg.grid(), t, x)
        return Series("tdse", t, ev.flux)
    raise ConfigError(f"route {route!r} does not produce a flux curve; "
                      "use the classical subcommand", key="routes")


def flux_series(cfg: ExperimentConfig, d_values):
    """All requested curves: per-D routes once per D, noise-free routes once."""
    t = cfg.times()
    out = []
    for route in cfg.routes:
        if route in NOISE_FREE_ROUTES:
            out.append(route_series(route, cfg, 0.0, t))
        else:
            for D in d_values:
                log.info("route %s, D=%g", route, D)
                out.append(route_series(route, cfg, D, t))
    return out


def _main_curves(series, route_pref=("averaged", "mc")):
    for route in route_pref:
        picked = [s for s in series if s.name.startswith(route + "_D=")]
        if picked:
            return picked
    return []


def _write(cfg, stem, series, command, title, y2label="", summary=None):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"manifest": write_manifest(cfg, out, command)}
    if cfg.format in ("csv", "both"):
        paths["csv"] = emit_csv(series, out / f"{stem}.csv")
        with_err = [s for s in series if s.err is not None]
        if with_err:
            paths["stderr_csv"] = emit_csv(
                [Series(s.name + "_stderr", s.t, s.err) for s in with_err],
                out / f"{stem}_stderr.csv")
    if cfg.format in ("svg", "both"):
        paths["svg"] = emit_svg(series, out / f"{stem}.svg", title=title, y2label=y2label)
    if summary is not None:
        p = out / f"{stem}_summary.json"
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths["summary"] = p
    return paths


def figure1_summary(series):
    curves = _main_curves(series)
    rows = []
    for s in curves:
        peak, width = peak_and_width(s.t, s.y)
        rows.append({"curve": s.name, "peak": peak, "half_width": width})
    return {"curves": rows}


def figure2_summary(series):
    curves = _main_curves(series)
    ref = next((s for s in curves if s.name.endswith("_D=0")), None)
    rows = []
    for s in curves:
        if s is ref or ref is None:
            continue
        rows.append({"curve": s.name, "windows": ordering_windows(s.t, s.y, ref.y)})
    return {"reference": ref.name if ref else None, "comparisons": rows}


def run_figure1(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Flux at x_obs in a constant field for each noise intensity of the sweep."""
    series = flux_series(cfg, cfg.d_list)
    summary = figure1_summary(series)
    res = RunResult(series=series, summary=summary)
    if write:
        res.paths = _write(cfg, "figure1", series, "figure1",
                           f"flux at x = {cfg.x_obs:g}, constant field", summary=summary)
    return res


def run_figure2(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Flux at x_obs under the femtosecond pulse, plus the field itself."""
    series = flux_series(cfg, cfg.d_list)
    t = cfg.times()
    series.append(Series("field", t, cfg.field_model().field_at(t), axis="right", dashed=True))
    summary = figure2_summary(series)
    res = RunResult(series=series, summary=summary)
    if write:
        res.paths = _write(cfg, "figure2", series, "figure2",
                           f"flux at x = {cfg.x_obs:g}, femtosecond pulse",
                           y2label="field E(t) (dimensionless)", summary=summary)
    return res


def run_flux(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Generic run: the configured routes at the single intensity ``D``."""
    series = flux_series(cfg, [cfg.D])
    res = RunResult(series=series)
    if write:
        res.paths = _write(cfg, "flux", series, "flux", f"flux at x = {cfg.x_obs:g}")
    return res


def run_covariance(cfg: ExperimentConfig, write: bool = True, times=None) -> RunResult:
    spec = cfg.noise()
    times = np.linspace(cfg.t_max / 5, cfg.t_max, 5) if times is None else times
    rep = stochastic.covariance_report(spec, cfg.t_max, cfg.n_paths, times=times,
                                       exact=cfg.exact_paths, slope_window=(1.0, cfg.t_max),
                                       workers=cfg.workers)
    summary = {"D": spec.D, "n_paths": cfg.n_paths,
               "max_abs_z_ff": rep.max_abs_z("ff"),
               "max_abs_z_phiphi_diag": rep.max_abs_z("phiphi", diagonal_only=True),
               "max_abs_z_phif_diag": rep.max_abs_z("phif", diagonal_only=True),
               "var_phi_loglog_slope": rep.var_phi_slope}
    res = RunResult(series=[], summary=summary, report=rep)
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        res.paths = {"manifest": write_manifest(cfg, out, "covariance"),
                     "csv": emit_table(rep.table(), out / "covariance.csv")}
        p = out / "covariance_summary.json"
        p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        res.paths["summary"] = p
    return res


def run_classical(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    fld = cfg.field_model()
    spec = cfg.noise()
    stride = max(1, int(round((cfg.t_max / (cfg.t_samples - 1)) / spec.dt)))
    ens = classical.simulate(fld, spec, cfg.t_max, cfg.n_paths, record_every=stride,
                             workers=cfg.workers)
    mom = ens.moments()
    t = ens.times
    series = [Series("x_mean", t, mom["x"].mean, err=mom["x"].stderr),
              Series("y_mean", t, mom["y"].mean, err=mom["y"].stderr),
              Series("kinetic_mean", t, mom["kinetic"].mean, err=mom["kinetic"].stderr)]
    summary = {"D": spec.D, "n": ens.n}
    if ens.n >= 100:
        rate = classical.energy_rate_report(ens, fld)
        fit = classical.fit_pumping_rate(ens, fld, window=(0.0, min(50.0, cfg.t_max)))
        summary.update({"pumping_rate": fit.rate, "pumping_rate_stderr": fit.stderr,
                        "pumping_relative_error": fit.relative_error,
                        "energy_rate_max_abs_z": rate.max_abs_z})
        rate_series = [Series("rate_empirical", rate.t_mid, rate.empirical, err=rate.stderr),
                       Series("rate_theory", rate.t_mid, rate.theory)]
    else:
        rate_series = []
    res = RunResult(series=series, summary=summary)
    if write:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        res.paths = _write(cfg, "classical", series, "classical",
                           "classical ensemble moments", summary=summary)
        if rate_series and cfg.format in ("csv", "both"):
            res.paths["rate_csv"] = emit_csv(rate_series, out / "classical_energy_rate.csv")
    return res
