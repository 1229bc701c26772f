"""Command-line pipeline: build, diagnose, detect, scan, synth.

Every command writes its outputs plus a manifest.json capturing the resolved
configuration, seed, and package version, so a run can be reproduced exactly.
Exit codes: 0 success, 1 computation error, 2 input or configuration error.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import pandas as pd

from . import __version__
from .errors import SkillbasinError
from .graph_core import (
    assortativity,
    node_stats,
    rewire_null,
    sector_edge_share,
    top_edges,
    walk_operators,
)
from .growth import (
    DEFAULT_TAU_REFS,
    compare_ce_re,
    fixed_obs_delta_r2,
    gamma_sensitivity,
    pairwise_delta_r2,
    scan_scales,
)
from .ingest import build_flow_tensor, load_employment, load_sectors, load_transitions
from .multiscale import clusters_per_sector, majority_link, sector_cluster_crosstab, trajectory
from .relatedness import compute_relatedness, threshold
from .stability import sweep as run_sweep
from .synth import PlantedHierarchy, SynthConfig, evaluate_recovery, generate

EXIT_COMPUTE = 1
EXIT_INPUT = 2


def _read_config_file(path):
    """Parse a key=value configuration file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return out


def _resolve(ctx_params, file_config, casts):
    """Merge CLI flags over config-file values; flags win when explicitly set."""
    resolved = dict(ctx_params)
    for key, cast in casts.items():
        if resolved.get(key) is None and key in file_config:
            resolved[key] = cast(file_config[key])
    return resolved


def _write_manifest(outdir: Path, command: str, config: dict):
    payload = {
        "command": command,
        "config": {k: v for k, v in sorted(config.items()) if k != "config"},
        "version": __version__,
    }
    blob = json.dumps(payload, sort_keys=True, default=str)
    payload["config_hash"] = hashlib.sha256(blob.encode()).hexdigest()
    (outdir / "manifest.json").write_text(json.dumps(payload, indent=2, default=str))


def _load_inputs(transitions, employment, sectors, years):
    table = load_transitions(transitions)
    emp = load_employment(employment) if employment else None
    sec = load_sectors(sectors) if sectors else None
    if years:
        lo, hi = years.split(":")
        year_list = range(int(lo), int(hi) + 1)
    else:
        year_list = table.years
    extra = tuple(emp.industries) if emp else ()
    flows = build_flow_tensor(table, year_list, extra_industries=extra)
    if sec is not None:
        missing = [ind for ind in flows.index if ind not in sec]
        if missing:
            raise SkillbasinError(f"industries without sector label: {missing[:10]}")
    return flows, emp, sec


def _build_network(flows, gamma):
    return threshold(compute_relatedness(flows), gamma=gamma)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _guarded(stage_input, func):
    """Run func(), mapping errors to the documented exit codes."""
    try:
        return func()
    except (SkillbasinError, OSError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT if stage_input else EXIT_COMPUTE)


_CASTS = {
    "transitions": str,
    "employment": str,
    "sectors": str,
    "classes": str,
    "years": str,
    "gamma": float,
    "tau_min": int,
    "tau_max": int,
    "tau0": int,
    "runs": int,
    "seed": int,
    "null_reps": int,
    "t0": int,
    "t1": int,
    "subset": str,
    "outdir": str,
    "gamma_list": str,
    "top_k": int,
}


def _common(params, config):
    file_cfg = _read_config_file(config) if config else {}
    return _resolve(params, file_cfg, _CASTS)


@click.group()
def main():
    """Skill-basin labour network pipeline."""


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--transitions", type=str, default=None)
@click.option("--employment", type=str, default=None)
@click.option("--sectors", type=str, default=None)
@click.option("--years", type=str, default=None, help="inclusive range, e.g. 2005:2014")
@click.option("--gamma", type=float, default=None)
@click.option("--outdir", type=str, default=None)
def build(**params):
    """Construct the relatedness network and write its edge list and JSON form."""
    cfg = _common(params, params.pop("config"))
    if not cfg.get("transitions") or not cfg.get("outdir"):
        click.echo("error: --transitions and --outdir are required", err=True)
        sys.exit(EXIT_INPUT)
    cfg.setdefault("gamma", 0.0)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else 0.0
    flows, _, _ = _guarded(
        True,
        lambda: _load_inputs(cfg["transitions"], cfg.get("employment"), cfg.get("sectors"),
                             cfg.get("years")),
    )

    def compute():
        net = _build_network(flows, gamma)
        out = _outdir(cfg["outdir"])
        net.to_edgelist().to_csv(out / "network_edges.csv", index=False)
        (out / "network.json").write_text(net.to_json())
        _write_manifest(out, "build", cfg)
        click.echo(f"wrote network with {len(net.edges())} edges to {out}")

    _guarded(False, compute)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--transitions", type=str, default=None)
@click.option("--sectors", type=str, default=None)
@click.option("--years", type=str, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--null-reps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--top-k", type=int, default=None)
@click.option("--outdir", type=str, default=None)
def diagnose(**params):
    """Node statistics, null-model comparison, assortativity, sector edge shares."""
    cfg = _common(params, params.pop("config"))
    if not cfg.get("transitions") or not cfg.get("outdir"):
        click.echo("error: --transitions and --outdir are required", err=True)
        sys.exit(EXIT_INPUT)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else 0.0
    reps = cfg["null_reps"] if cfg["null_reps"] is not None else 10000
    seed = cfg["seed"] if cfg["seed"] is not None else 0
    top_k = cfg["top_k"] if cfg["top_k"] is not None else 20
    flows, _, sec = _guarded(
        True, lambda: _load_inputs(cfg["transitions"], None, cfg.get("sectors"), cfg.get("years"))
    )

    def compute():
        net = _build_network(flows, gamma)
        out = _outdir(cfg["outdir"])
        stats = node_stats(net)
        stats.to_frame().to_csv(out / "node_stats.csv", index=False)
        report = assortativity(net, stats)
        report.table.to_csv(out / "assortativity.csv", index=False)
        null = rewire_null(net, reps=reps, seed=seed)
        pd.DataFrame(
            {"bin_left": null.degree_bins[:-1], "mean_count": null.degree_hist}
        ).to_csv(out / "null_degree_hist.csv", index=False)
        pd.DataFrame(
            {"bin_left": null.strength_bins[:-1], "mean_count": null.strength_hist}
        ).to_csv(out / "null_strength_hist.csv", index=False)
        top_edges(net, top_k).to_csv(out / "top_edges.csv", index=False)
        if sec is not None:
            sector_edge_share(net, sec).to_csv(out / "sector_edge_share.csv")
        (out / "coefficients.json").write_text(
            json.dumps(
                {
                    "strength_assortativity": report.strength_coefficient,
                    "degree_assortativity": report.degree_coefficient,
                    "null_reps": reps,
                    "seed": seed,
                },
                indent=2,
                allow_nan=True,
            )
        )
        _write_manifest(out, "diagnose", cfg)
        click.echo(f"wrote diagnostics to {out}")

    _guarded(False, compute)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--transitions", type=str, default=None)
@click.option("--employment", type=str, default=None)
@click.option("--sectors", type=str, default=None)
@click.option("--years", type=str, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--tau-min", type=int, default=None)
@click.option("--tau-max", type=int, default=None)
@click.option("--tau0", type=int, default=None, help="dendrogram/trajectory anchor resolution")
@click.option("--runs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--t0", type=int, default=None, help="base year for cluster employment sizes")
@click.option("--outdir", type=str, default=None)
def detect(**params):
    """Multi-scale community sweep, dendrogram, crosstabs, employment trajectories."""
    cfg = _common(params, params.pop("config"))
    if not cfg.get("transitions") or not cfg.get("outdir"):
        click.echo("error: --transitions and --outdir are required", err=True)
        sys.exit(EXIT_INPUT)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else 0.0
    tau_min = cfg["tau_min"] if cfg["tau_min"] is not None else 1
    tau_max = cfg["tau_max"] if cfg["tau_max"] is not None else 15
    tau0 = cfg["tau0"] if cfg["tau0"] is not None else 3
    runs = cfg["runs"] if cfg["runs"] is not None else 100
    seed = cfg["seed"] if cfg["seed"] is not None else 0
    if tau_min < 1 or tau_max < tau_min:
        click.echo("error: need 1 <= tau-min <= tau-max", err=True)
        sys.exit(EXIT_INPUT)
    flows, emp, sec = _guarded(
        True,
        lambda: _load_inputs(cfg["transitions"], cfg.get("employment"), cfg.get("sectors"),
                             cfg.get("years")),
    )

    def compute():
        net = _build_network(flows, gamma)
        w = walk_operators(net)
        sw = run_sweep(w, tau_grid=range(tau_min, tau_max + 1), runs=runs, seed=seed)
        out = _outdir(cfg["outdir"])
        sw.summary().to_csv(out / "sweep_summary.csv", index=False)
        sw.partitions_frame().to_csv(out / "partitions.csv", index=False)
        if len(sw.results) >= 2:
            dendro = majority_link(sw)
            (out / "dendrogram.json").write_text(dendro.to_json())
            (out / "dendrogram.newick").write_text(dendro.to_newick())
        if sec is not None:
            clusters_per_sector(sw, sec).to_csv(out / "clusters_per_sector.csv")
            if tau0 in sw.taus:
                sector_cluster_crosstab(sw.partition_at(tau0), sw.index, sec).to_csv(
                    out / f"sector_cluster_crosstab_tau{tau0}.csv"
                )
        if emp is not None and cfg.get("t0") is not None and tau0 in sw.taus:
            trajectory(sw, emp, cfg["t0"], tau0=tau0).to_csv(out / "trajectory.csv")
        _write_manifest(out, "detect", cfg)
        click.echo(f"wrote sweep over tau {tau_min}..{tau_max} to {out}")

    _guarded(False, compute)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--transitions", type=str, default=None)
@click.option("--employment", type=str, default=None)
@click.option("--sectors", type=str, default=None)
@click.option("--classes", type=str, default=None,
              help="CSV sector,class mapping sectors to services/manufacturing")
@click.option("--years", type=str, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--gamma-list", type=str, default=None, help="comma-separated sensitivity sweep")
@click.option("--tau-min", type=int, default=None)
@click.option("--tau-max", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--t0", type=int, default=None)
@click.option("--t1", type=int, default=None)
@click.option("--subset", type=click.Choice(["all", "services", "manufacturing"]), default=None)
@click.option("--outdir", type=str, default=None)
def scan(**params):
    """Growth-regression scan over resolutions with fixed-observation comparisons."""
    cfg = _common(params, params.pop("config"))
    required = ["transitions", "employment", "outdir", "t0", "t1"]
    missing = [k for k in required if cfg.get(k) is None]
    if missing:
        click.echo(f"error: missing required options: {missing}", err=True)
        sys.exit(EXIT_INPUT)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else 0.0
    tau_min = cfg["tau_min"] if cfg["tau_min"] is not None else 1
    tau_max = cfg["tau_max"] if cfg["tau_max"] is not None else 15
    runs = cfg["runs"] if cfg["runs"] is not None else 100
    seed = cfg["seed"] if cfg["seed"] is not None else 0
    subset = cfg["subset"] if cfg.get("subset") else "all"
    flows, emp, sec = _guarded(
        True,
        lambda: _load_inputs(cfg["transitions"], cfg["employment"], cfg.get("sectors"),
                             cfg.get("years")),
    )
    sector_classes = None
    if cfg.get("classes"):
        if sec is None:
            click.echo("error: --classes requires --sectors", err=True)
            sys.exit(EXIT_INPUT)
        class_map = _guarded(
            True,
            lambda: dict(
                pd.read_csv(cfg["classes"]).itertuples(index=False, name=None)
            ),
        )
        sector_classes = {ind: class_map.get(s, "all") for ind, s in sec.items()}
    if subset != "all" and sector_classes is None:
        click.echo("error: --subset needs --classes and --sectors", err=True)
        sys.exit(EXIT_INPUT)
    if max(flows.years) > cfg["t0"]:
        click.echo(
            f"error: growth base year {cfg['t0']} precedes the last network year "
            f"{max(flows.years)}; pass --years to restrict the network window",
            err=True,
        )
        sys.exit(EXIT_INPUT)

    def compute():
        relat = compute_relatedness(flows)
        net = threshold(relat, gamma=gamma)
        w = walk_operators(net)
        sw = run_sweep(w, tau_grid=range(tau_min, tau_max + 1), runs=runs, seed=seed)
        result = scan_scales(net, sw, emp, cfg["t0"], cfg["t1"], subset=subset,
                             sector_classes=sector_classes)
        out = _outdir(cfg["outdir"])
        result.summary().to_csv(out / "scan_summary.csv", index=False)
        for ref in DEFAULT_TAU_REFS:
            if ref in result.taus:
                fixed_obs_delta_r2(result, ref).to_csv(
                    out / f"delta_r2_ref{ref}.csv", index=False
                )
        pairwise_delta_r2(result).to_csv(out / "delta_r2_pairwise.csv")
        compare_ce_re(result).to_csv(out / "ce_vs_re.csv", index=False)
        report = {
            "gamma": gamma,
            "tau_grid": list(result.taus),
            "subset": subset,
            "seed": seed,
            "runs": runs,
            "se_type": "robust" if result.robust else "classical",
            "regressor_form": "log" if result.log_regressor else "level",
            "t0": cfg["t0"],
            "t1": cfg["t1"],
        }
        (out / "regression_report.json").write_text(json.dumps(report, indent=2))
        if cfg.get("gamma_list"):
            gammas = sorted(float(x) for x in cfg["gamma_list"].split(","))
            sens = gamma_sensitivity(
                relat, emp, gammas, cfg["t0"], cfg["t1"],
                tau_grid=range(tau_min, tau_max + 1), runs=runs, seed=seed,
                subset=subset, sector_classes=sector_classes,
            )
            for gval, bundle in sens.items():
                bundle["scan"].summary().to_csv(
                    out / f"scan_summary_gamma{gval}.csv", index=False
                )
                for ref, table in bundle["deltas"].items():
                    table.to_csv(out / f"delta_r2_gamma{gval}_ref{ref}.csv", index=False)
        _write_manifest(out, "scan", cfg)
        click.echo(f"wrote scan results to {out}")

    _guarded(False, compute)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--branching", type=str, default="4,4", help="blocks per level, coarsest first")
@click.option("--nodes-per-block", type=int, default=4)
@click.option("--intensities", type=str, default="8,5,0.05")
@click.option("--years", type=str, default="2004:2008")
@click.option("--t0", type=int, default=2008)
@click.option("--t1", type=int, default=2010)
@click.option("--employment-location", type=float, default=6.0)
@click.option("--employment-scale", type=float, default=0.35)
@click.option("--growth-intercept", type=float, default=0.0)
@click.option("--growth-slope", type=float, default=0.5)
@click.option("--growth-noise-sd", type=float, default=0.1)
@click.option("--planted-level", type=int, default=1)
@click.option("--planted-tau", type=int, default=2)
@click.option("--bridges-per-pair", type=int, default=1,
              help="strong ties per sibling-block pair; 0 = uniform level intensities")
@click.option("--seed", type=int, default=0)
@click.option("--evaluate/--no-evaluate", default=False,
              help="run detection + scan and write a recovery report")
@click.option("--runs", type=int, default=20)
@click.option("--outdir", type=str, required=True)
def synth(**params):
    """Generate planted-hierarchy synthetic inputs (and optionally evaluate recovery)."""
    cfg = params
    lo, hi = cfg["years"].split(":")

    def make_config():
        return SynthConfig(
            branching=tuple(int(x) for x in cfg["branching"].split(",")),
            nodes_per_block=cfg["nodes_per_block"],
            intensities=tuple(float(x) for x in cfg["intensities"].split(",")),
            years=tuple(range(int(lo), int(hi) + 1)),
            t0=cfg["t0"],
            t1=cfg["t1"],
            employment_location=cfg["employment_location"],
            employment_scale=cfg["employment_scale"],
            growth_intercept=cfg["growth_intercept"],
            growth_slope=cfg["growth_slope"],
            growth_noise_sd=cfg["growth_noise_sd"],
            planted_level=cfg["planted_level"],
            planted_tau=cfg["planted_tau"],
            bridges_per_pair=cfg["bridges_per_pair"],
            seed=cfg["seed"],
        )

    config = _guarded(True, make_config)

    def compute():
        hierarchy: PlantedHierarchy = generate(config)
        out = _outdir(cfg["outdir"])
        hierarchy.write_csvs(out)
        if cfg["evaluate"]:
            net = threshold(compute_relatedness(hierarchy.flows), gamma=0.0)
            w = walk_operators(net)
            sw = run_sweep(w, tau_grid=range(1, 16), runs=cfg["runs"], seed=config.seed)
            scan_result = scan_scales(net, sw, hierarchy.employment, config.t0, config.t1)
            report = evaluate_recovery(hierarchy, sw, scan_result)
            (out / "recovery.json").write_text(report.to_json())
        _write_manifest(out, "synth", cfg)
        click.echo(f"wrote synthetic dataset with {config.n_nodes} industries to {out}")

    _guarded(False, compute)


if __name__ == "__main__":
    main()
