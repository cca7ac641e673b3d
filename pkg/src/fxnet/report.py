"""Pipeline orchestration and serialization of all artifacts."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from . import market_data, modes, network, spectral, tails
from .market_data import AssetMeta, PricePanel, ReturnPanel
from .modes import ModeDecomposition
from .network import ClusterReport, Graph, SweepResult
from .spectral import CorrelationMatrix, RmtBounds, SpectralDecomposition

SCHEMA_VERSION = 1
BULK_MARGIN = 0.05
DEFAULT_HISTOGRAM_BINS = 51
DEFAULT_SURROGATES = 10
DEFAULT_SEED = 20120430

STAGES = (
    "ingest",
    "returns",
    "tails",
    "correlation",
    "spectrum",
    "surrogates",
    "decomposition",
    "network",
    "export",
)


class StageError(RuntimeError):
    """Pipeline failure attributed to a named stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    prices_path: str
    metadata_path: str
    out_dir: str
    delta: int = 1
    fill_limit: int = market_data.DEFAULT_FILL_LIMIT
    tail_fraction: float = tails.DEFAULT_TAIL_FRACTION
    n_g: int | str = modes.DEFAULT_N_GROUP  # integer or "auto"
    c_th: float | str = "auto"  # real or "auto" (grid sweep)
    surrogates: int = DEFAULT_SURROGATES
    seed: int = DEFAULT_SEED
    hub_sigma: float = network.DEFAULT_HUB_SIGMA
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS

    def echo(self) -> dict[str, Any]:
        return {
            "prices_path": self.prices_path,
            "metadata_path": self.metadata_path,
            "out_dir": self.out_dir,
            "delta": self.delta,
            "fill_limit": self.fill_limit,
            "tail_fraction": self.tail_fraction,
            "n_g": self.n_g,
            "c_th": self.c_th,
            "surrogates": self.surrogates,
            "seed": self.seed,
            "hub_sigma": self.hub_sigma,
            "histogram_bins": self.histogram_bins,
        }


@dataclass
class AnalysisReport:
    payload: dict[str, Any]

    @property
    def seed(self) -> int:
        return self.payload["config"]["seed"]


# ---------------------------------------------------------------------------
# serialization helpers

def _round_floats(obj: Any) -> Any:
    """Limit reals to 12 significant digits for stable, compact JSON."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def export_json_report(report: AnalysisReport | dict[str, Any], path: str) -> None:
    """UTF-8 JSON with sorted keys and 12-significant-digit reals."""
    payload = report.payload if isinstance(report, AnalysisReport) else report
    payload = dict(payload)
    payload.setdefault("schema_version", SCHEMA_VERSION)
    text = json.dumps(_round_floats(payload), sort_keys=True, indent=2)
    _write_text(path, text + "\n")


def export_pajek(g: Graph, path: str) -> None:
    """Pajek .net file: vertex list in panel order, then the weighted edges
    with 1-based endpoints and 6-decimal weights."""
    lines = [f"*Vertices {g.n_nodes}"]
    for idx, meta in g.nodes:
        lines.append(f'{idx + 1} "{meta.code}"')
    lines.append("*Edges")
    for i, j, w in g.edges:
        lines.append(f"{i + 1} {j + 1} {w:.6f}")
    _write_text(path, "\n".join(lines) + "\n")


def export_graph_json(g: Graph, path: str) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": g.kind,
        "nodes": [
            {
                "index": idx,
                "code": meta.code,
                "name": meta.name,
                "market_class": meta.market_class,
                "region": meta.region,
            }
            for idx, meta in g.nodes
        ],
        "edges": [[i, j, w] for i, j, w in g.edges],
    }
    export_json_report(payload, path)


def export_histogram_csv(
    histograms: list[tuple[float, float]] | dict[str, list[tuple[float, float]]],
    path: str,
) -> None:
    """One histogram -> `bin_center,density`; a dict of component name ->
    histogram adds a trailing `component` column."""
    if isinstance(histograms, dict):
        lines = ["bin_center,density,component"]
        for component, hist in histograms.items():
            for center, density in hist:
                lines.append(f"{_fmt(center)},{_fmt(density)},{component}")
    else:
        lines = ["bin_center,density"]
        for center, density in histograms:
            lines.append(f"{_fmt(center)},{_fmt(density)}")
    _write_text(path, "\n".join(lines) + "\n")


def export_ccdf_csv(points: list[tuple[float, float]], path: str) -> None:
    lines = ["x,ccdf"]
    for x, p in points:
        lines.append(f"{_fmt(x)},{_fmt(p)}")
    _write_text(path, "\n".join(lines) + "\n")


def export_spectrum_csv(sd: SpectralDecomposition, path: str) -> None:
    lines = ["index,eigenvalue"]
    for j, lam in enumerate(sd.eigenvalues):
        lines.append(f"{j},{_fmt(lam)}")
    _write_text(path, "\n".join(lines) + "\n")


def export_eigenvectors_csv(
    sd: SpectralDecomposition, assets: tuple[AssetMeta, ...], path: str
) -> None:
    lines = ["index," + ",".join(a.code for a in assets)]
    for j in range(sd.size):
        row = ",".join(_fmt(x) for x in sd.eigenvectors[j])
        lines.append(f"{j},{row}")
    _write_text(path, "\n".join(lines) + "\n")


def export_matrix_csv(m: np.ndarray, assets: tuple[AssetMeta, ...], path: str) -> None:
    lines = ["code," + ",".join(a.code for a in assets)]
    for i, a in enumerate(assets):
        lines.append(a.code + "," + ",".join(_fmt(x) for x in m[i]))
    _write_text(path, "\n".join(lines) + "\n")


def export_sweep_csv(sweep: SweepResult, path: str) -> None:
    lines = ["c_th,n_active,n_components,clustered,sizes"]
    for e in sweep.entries:
        sizes = ";".join(str(s) for s in e.sizes)
        lines.append(f"{_fmt(e.c_th)},{e.n_active},{e.n_components},{e.clustered},{sizes}")
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# pipeline

def _cluster_summary(report: ClusterReport, g: Graph) -> dict[str, Any]:
    codes = {idx: meta.code for idx, meta in g.nodes}
    return {
        "n_edges": len(g.edges),
        "total_weight": float(sum(w for _, _, w in g.edges)),
        "components": [
            {"size": len(c), "nodes": [codes[i] for i in c]} for c in report.components
        ],
        "isolated": [codes[i] for i in report.isolated],
        "hubs": [{"code": codes[i], "degree": d} for i, d in report.hubs],
    }


def default_threshold_grid(c_group: np.ndarray, points: int = 40) -> np.ndarray:
    """Evenly spaced cutoffs from just above 0 up to the largest off-diagonal
    element (where the network empties out)."""
    n = c_group.shape[0]
    off = c_group[np.triu_indices(n, k=1)]
    top = float(off.max())
    if top <= 0:
        return np.array([0.0])
    return np.linspace(0.0, top, points + 1)[1:]


def _element_stats(m: np.ndarray) -> dict[str, float]:
    n = m.shape[0]
    vals = m[np.triu_indices(n, k=1)]
    return {
        "mean": float(vals.mean()),
        "std": float(vals.std()),
        "min": float(vals.min()),
        "max": float(vals.max()),
    }


def run_pipeline(cfg: PipelineConfig) -> AnalysisReport:
    """Execute the full analysis and write every artifact under cfg.out_dir.

    Any stage failure raises StageError naming the stage; files already
    written for this run are removed first.
    """

    def stage(name: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc

    def read_inputs() -> tuple[str, str]:
        with open(cfg.prices_path, "r", encoding="utf-8") as fh:
            raw_prices = fh.read()
        with open(cfg.metadata_path, "r", encoding="utf-8") as fh:
            raw_meta = fh.read()
        return raw_prices, raw_meta

    raw_prices, raw_meta = stage("ingest", read_inputs)
    panel: PricePanel = stage(
        "ingest", market_data.parse_price_panel, raw_prices, raw_meta, cfg.fill_limit
    )
    rp_raw: ReturnPanel = stage(
        "returns", market_data.compute_log_returns, panel, cfg.delta
    )
    rp: ReturnPanel = stage("returns", market_data.normalize_returns, rp_raw)

    def fit_tails() -> tuple[list[dict[str, Any]], dict[str, list[tuple[float, float]]]]:
        fits = []
        ccdfs: dict[str, list[tuple[float, float]]] = {}
        for i, meta in enumerate(rp.assets):
            row = rp.returns[i]
            record: dict[str, Any] = {"code": meta.code}
            for side in tails.SIDES:
                fit = tails.fit_tail_exponent(row, side, cfg.tail_fraction)
                record[side] = {
                    "alpha": fit.alpha,
                    "tail_fraction": fit.tail_fraction,
                    "k": fit.k,
                    "x_min": fit.x_min,
                }
                ccdfs[f"{meta.code}_{side}"] = tails.tail_survival(row, side)
            fits.append(record)
        return fits, ccdfs

    tail_fits, ccdfs = stage("tails", fit_tails)

    cm: CorrelationMatrix = stage("correlation", spectral.correlation_matrix, rp)
    sd: SpectralDecomposition = stage("spectrum", spectral.eigendecompose, cm)
    bounds: RmtBounds = stage(
        "spectrum", spectral.rmt_bounds, rp.n_assets, rp.n_steps
    )

    def surrogate_stats() -> dict[str, Any]:
        lo = bounds.lambda_min - BULK_MARGIN
        hi = bounds.lambda_max + BULK_MARGIN
        seeds = spectral.derive_seeds(cfg.seed, cfg.surrogates)
        all_vals: list[np.ndarray] = []
        pooled: list[np.ndarray] = []
        for s in seeds:
            surrogate = spectral.shuffle_surrogate(rp, s)
            scm = spectral.correlation_matrix(surrogate)
            ssd = spectral.eigendecompose(scm)
            all_vals.append(ssd.eigenvalues)
            bulk = [j for j, lam in enumerate(ssd.eigenvalues) if lo <= lam <= hi]
            pooled.append(spectral.eigenvector_component_sample(ssd, bulk))
        if not all_vals:
            return {"count": 0, "seed": cfg.seed}
        vals = np.concatenate(all_vals)
        components = np.concatenate(pooled)
        ks = stats.kstest(components, "norm").statistic if components.size else None
        return {
            "count": cfg.surrogates,
            "seed": cfg.seed,
            "bulk_low": lo,
            "bulk_high": hi,
            "bulk_fraction": float(np.mean((vals >= lo) & (vals <= hi))),
            "ks_statistic": float(ks) if ks is not None else None,
        }

    surrogate_summary = stage("surrogates", surrogate_stats)

    def decompose() -> tuple[ModeDecomposition, int, int]:
        n_g_auto = modes.select_ng(sd, bounds)
        if cfg.n_g == "auto":
            n_g_used = n_g_auto
        else:
            # cap so the catalogue default of 6 still works on small panels
            n_g_used = min(int(cfg.n_g), rp.n_assets - 1)
        return modes.decompose_modes(sd, n_g_used), n_g_used, n_g_auto

    md, n_g_used, n_g_auto = stage("decomposition", decompose)

    hist_inputs = {
        "full": cm.values,
        "global": md.c_global,
        "group": md.c_group,
        "random": md.c_random,
    }
    histograms = {
        name: stage("decomposition", modes.element_histogram, m, cfg.histogram_bins)
        for name, m in hist_inputs.items()
    }

    def build_networks() -> tuple[Graph, ClusterReport, Graph, ClusterReport, SweepResult | None, float]:
        d = network.mantegna_distance(cm)
        mst = network.minimum_spanning_tree(d, rp.assets)
        mst_report = network.cluster_report(mst, cfg.hub_sigma)
        sweep = None
        if cfg.c_th == "auto":
            grid = default_threshold_grid(md.c_group)
            sweep = network.threshold_sweep(md.c_group, grid, rp.assets)
            c_th_used = sweep.recommended
        else:
            c_th_used = float(cfg.c_th)
        tnet = network.threshold_network(md.c_group, c_th_used, rp.assets)
        tnet_report = network.cluster_report(tnet, cfg.hub_sigma)
        return mst, mst_report, tnet, tnet_report, sweep, c_th_used

    mst, mst_report, tnet, tnet_report, sweep, c_th_used = stage(
        "network", build_networks
    )

    u0 = sd.eigenvectors[0]
    leading_mode = [
        {
            "code": meta.code,
            "component": float(u0[i]),
            "sign": 1 if u0[i] >= 0 else -1,
            "market_class": meta.market_class,
        }
        for i, meta in enumerate(rp.assets)
    ]

    payload: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.echo(),
        "panel": {
            "n_assets": rp.n_assets,
            "n_dates": panel.n_dates,
            "n_steps": rp.n_steps,
            "codes": [a.code for a in rp.assets],
            "first_date": panel.dates[0].isoformat(),
            "last_date": panel.dates[-1].isoformat(),
        },
        "tail_fits": tail_fits,
        "spectrum": {
            "eigenvalues": [float(x) for x in sd.eigenvalues],
            "rmt": {
                "q": bounds.q,
                "lambda_min": bounds.lambda_min,
                "lambda_max": bounds.lambda_max,
            },
        },
        "leading_mode": leading_mode,
        "surrogates": surrogate_summary,
        "modes": {
            "n_g_used": n_g_used,
            "n_g_auto": n_g_auto,
            "element_stats": {k: _element_stats(v) for k, v in hist_inputs.items()},
        },
        "graphs": {
            "mst": _cluster_summary(mst_report, mst),
            "threshold": {
                "c_th": c_th_used,
                "recommended": sweep.recommended if sweep is not None else None,
                **_cluster_summary(tnet_report, tnet),
            },
        },
    }
    report = AnalysisReport(payload=payload)

    def write_outputs() -> None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        ccdf_dir = os.path.join(cfg.out_dir, "ccdf")
        os.makedirs(ccdf_dir, exist_ok=True)
        written: list[str] = []

        def out(rel: str) -> str:
            path = os.path.join(cfg.out_dir, rel)
            written.append(path)
            return path

        try:
            export_json_report(report, out("report.json"))
            export_spectrum_csv(sd, out("spectrum.csv"))
            export_eigenvectors_csv(sd, rp.assets, out("eigenvectors.csv"))
            export_matrix_csv(cm.values, rp.assets, out("correlation.csv"))
            export_matrix_csv(md.c_global, rp.assets, out("c_global.csv"))
            export_matrix_csv(md.c_group, rp.assets, out("c_group.csv"))
            export_matrix_csv(md.c_random, rp.assets, out("c_random.csv"))
            export_histogram_csv(histograms, out("histograms.csv"))
            export_pajek(mst, out("mst.net"))
            export_graph_json(mst, out("mst.json"))
            export_pajek(tnet, out("threshold.net"))
            export_graph_json(tnet, out("threshold.json"))
            if sweep is not None:
                export_sweep_csv(sweep, out("sweep.csv"))
            for name, points in ccdfs.items():
                export_ccdf_csv(points, out(os.path.join("ccdf", f"{name}.csv")))
        except Exception:
            for path in written:
                if os.path.exists(path):
                    os.unlink(path)
            raise

    stage("export", write_outputs)
    return report
