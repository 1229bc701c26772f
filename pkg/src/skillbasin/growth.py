"""Employment growth, pooled-employment regressors, OLS, and the scale scan.

The scan fits, at every resolution, growth on base-year size and the
cluster-employment pool, then compares fits across resolutions on common
observation sets (fixed-observation delta R-squared) to locate the scale at
which labour pooling operates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import CollinearityError
from .ingest import DataWarning, EmploymentTable
from .relatedness import LabourNetwork, RelatednessMatrix, threshold
from .stability import Partition, ScaleSweep

DEFAULT_TAU_REFS = (1, 4, 10)


def employment_vector(employment: EmploymentTable, index, year: int) -> np.ndarray:
    """Employment aligned to a node index; missing industries become 0 with a warning."""
    emp = employment.for_year(year)
    missing = [ind for ind in index if ind not in emp]
    if missing:
        warnings.warn(
            f"{len(missing)} industries missing employment for {year}, treated as 0",
            DataWarning,
            stacklevel=2,
        )
    return np.array([emp.get(ind, 0.0) for ind in index])


def growth(employment: EmploymentTable, index, t0: int, t1: int) -> np.ndarray:
    """Log employment growth ln E1 - ln E0; NaN where either year is zero or absent."""
    emp0 = employment.for_year(t0)
    emp1 = employment.for_year(t1)
    out = np.full(len(index), np.nan)
    for k, ind in enumerate(index):
        e0 = emp0.get(ind, 0.0)
        e1 = emp1.get(ind, 0.0)
        if e0 > 0 and e1 > 0:
            out[k] = np.log(e1) - np.log(e0)
    return out


def related_employment(g: LabourNetwork, e0: np.ndarray) -> np.ndarray:
    """Edge-weight-normalized employment of all neighbours; NaN for isolated nodes."""
    a = g.adjacency
    row_sums = a.sum(axis=1)
    out = np.full(g.n, np.nan)
    positive = row_sums > 0
    out[positive] = (a[positive] @ e0) / row_sums[positive]
    return out


def cluster_employment(g: LabourNetwork, partition: Partition, e0: np.ndarray) -> np.ndarray:
    """Within-cluster related employment; NaN for singletons and zero in-cluster weight.

    Singleton clusters have no pool by construction and those observations are
    dropped from any regression using this regressor.
    """
    if partition.n != g.n:
        raise ValueError(f"partition covers {partition.n} nodes, graph has {g.n}")
    a = g.adjacency
    labels = partition.labels
    same = labels[:, None] == labels[None, :]
    a_in = np.where(same, a, 0.0)
    np.fill_diagonal(a_in, 0.0)
    row_sums = a_in.sum(axis=1)
    sizes = np.bincount(labels, minlength=partition.m)
    out = np.full(g.n, np.nan)
    usable = (row_sums > 0) & (sizes[labels] > 1)
    out[usable] = (a_in[usable] @ e0) / row_sums[usable]
    return out


@dataclass(frozen=True)
class RegressionResult:
    regressor: str
    coefficients: np.ndarray  # intercept, size control, pooled-employment regressor
    standard_errors: np.ndarray
    t_statistics: np.ndarray
    r_squared: float
    n: int
    column_names: tuple[str, ...]

    @property
    def coef(self) -> float:
        """Coefficient on the pooled-employment regressor."""
        return float(self.coefficients[-1])

    @property
    def se(self) -> float:
        return float(self.standard_errors[-1])

    @property
    def t(self) -> float:
        return float(self.t_statistics[-1])


def _solve_ols(x: np.ndarray, y: np.ndarray, columns, robust: bool = False) -> tuple:
    n, p = x.shape
    rank = np.linalg.matrix_rank(x)
    if rank < p:
        # columns whose removal does not reduce rank are part of a dependent set
        bad = [
            columns[j]
            for j in range(p)
            if np.linalg.matrix_rank(np.delete(x, j, axis=1)) == rank
        ]
        raise CollinearityError(
            f"design matrix is rank deficient (rank {rank} < {p}); "
            f"collinear columns: {bad}",
            columns=bad,
        )
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    residuals = y - x @ coef
    ssr = float(residuals @ residuals)
    sst = float(((y - y.mean()) ** 2).sum())
    xtx_inv = np.linalg.inv(x.T @ x)
    if robust:
        meat = x.T @ (residuals[:, None] ** 2 * x)
        cov = xtx_inv @ meat @ xtx_inv * n / (n - p)
    else:
        sigma2 = ssr / (n - p)
        cov = sigma2 * xtx_inv
    se = np.sqrt(np.diag(cov))
    r2 = 1.0 - ssr / sst if sst > 0 else float("nan")
    return coef, se, r2


def fit_ols(
    samples: pd.DataFrame,
    regressor: str,
    subset: str = "all",
    log_regressor: bool = True,
    robust: bool = False,
) -> RegressionResult:
    """OLS of growth on an intercept, log base-year employment, and a pooled-employment regressor.

    ``samples`` needs columns G, E0, the regressor column, and (for subsetting)
    sector_class. Rows with any undefined value are excluded; N reports the
    rows actually used.
    """
    mask = sample_mask(samples, regressor, subset, log_regressor=log_regressor)
    sub = samples[mask]
    n = len(sub)
    if n < 4:
        raise ValueError(f"only {n} usable observations for {regressor} ({subset})")
    reg = sub[regressor].to_numpy(dtype=float)
    reg_col = np.log(reg) if log_regressor else reg
    reg_name = f"ln_{regressor}" if log_regressor else regressor
    columns = ("intercept", "ln_E0", reg_name)
    x = np.column_stack([np.ones(n), np.log(sub["E0"].to_numpy(dtype=float)), reg_col])
    y = sub["G"].to_numpy(dtype=float)
    coef, se, r2 = _solve_ols(x, y, columns, robust=robust)
    return RegressionResult(
        regressor=regressor,
        coefficients=coef,
        standard_errors=se,
        t_statistics=coef / se,
        r_squared=r2,
        n=n,
        column_names=columns,
    )


def sample_mask(
    samples: pd.DataFrame, regressor: str, subset: str = "all", log_regressor: bool = True
) -> np.ndarray:
    """Rows where growth, size, and the given regressor are all defined."""
    g = samples["G"].to_numpy(dtype=float)
    e0 = samples["E0"].to_numpy(dtype=float)
    reg = samples[regressor].to_numpy(dtype=float)
    mask = np.isfinite(g) & (e0 > 0) & np.isfinite(reg)
    if log_regressor:
        mask &= reg > 0
    if subset != "all":
        mask &= (samples["sector_class"] == subset).to_numpy()
    return mask


def build_samples(
    g: LabourNetwork,
    sweep: ScaleSweep,
    employment: EmploymentTable,
    t0: int,
    t1: int,
    sector_classes: dict[str, str] | None = None,
) -> pd.DataFrame:
    """Per-industry regression table: growth, size, RE, and CE at every resolution."""
    e0 = employment_vector(employment, g.index, t0)
    frame = pd.DataFrame(
        {
            "industry": list(g.index),
            "G": growth(employment, g.index, t0, t1),
            "E0": e0,
            "RE": related_employment(g, e0),
        }
    )
    for tau in sweep.taus:
        frame[f"CE_{tau}"] = cluster_employment(g, sweep.partition_at(tau), e0)
    if sector_classes:
        frame["sector_class"] = [sector_classes.get(ind, "all") for ind in g.index]
    else:
        frame["sector_class"] = "all"
    return frame


@dataclass(frozen=True)
class ScanResult:
    taus: tuple[int, ...]
    samples: pd.DataFrame = field(repr=False)
    fits: dict[int, RegressionResult | None] = field(repr=False)  # None = too few observations
    subset: str = "all"
    log_regressor: bool = True
    robust: bool = False

    def summary(self) -> pd.DataFrame:
        rows = []
        for tau in self.taus:
            fit = self.fits[tau]
            if fit is None:
                rows.append((tau, np.nan, np.nan, np.nan, np.nan, 0))
            else:
                rows.append((tau, fit.coef, fit.se, fit.t, fit.r_squared, fit.n))
        return pd.DataFrame(rows, columns=["tau", "coef", "se", "t", "r2", "n"])


def scan_scales(
    g: LabourNetwork,
    sweep: ScaleSweep,
    employment: EmploymentTable,
    t0: int,
    t1: int,
    subset: str = "all",
    sector_classes: dict[str, str] | None = None,
    log_regressor: bool = True,
    robust: bool = False,
) -> ScanResult:
    """Fit the cluster-employment growth model at every resolution of the sweep."""
    samples = build_samples(g, sweep, employment, t0, t1, sector_classes)
    fits: dict[int, RegressionResult | None] = {}
    for tau in sweep.taus:
        try:
            fits[tau] = fit_ols(
                samples, f"CE_{tau}", subset, log_regressor=log_regressor, robust=robust
            )
        except ValueError:
            fits[tau] = None
    return ScanResult(
        taus=sweep.taus,
        samples=samples,
        fits=fits,
        subset=subset,
        log_regressor=log_regressor,
        robust=robust,
    )


def _fit_on_mask(scan: ScanResult, regressor: str, mask: np.ndarray) -> RegressionResult:
    return fit_ols(
        scan.samples[mask],
        regressor,
        subset=scan.subset,
        log_regressor=scan.log_regressor,
        robust=scan.robust,
    )


def fixed_obs_delta_r2(scan: ScanResult, tau_ref: int) -> pd.DataFrame:
    """R-squared advantage of CE at each tau over CE at a reference tau, on common observations.

    Both models are refit on the intersection of their defined-observation
    sets; rows with fewer than 4 common observations are flagged with NaN.
    """
    if tau_ref not in scan.taus:
        raise ValueError(f"tau_ref {tau_ref} not in scan grid {scan.taus}")
    rows = []
    for tau in scan.taus:
        common = sample_mask(
            scan.samples, f"CE_{tau}", scan.subset, scan.log_regressor
        ) & sample_mask(scan.samples, f"CE_{tau_ref}", scan.subset, scan.log_regressor)
        n_common = int(common.sum())
        if n_common < 4:
            rows.append((tau, tau_ref, np.nan, n_common))
            continue
        if tau == tau_ref:
            rows.append((tau, tau_ref, 0.0, n_common))
            continue
        fit_tau = _fit_on_mask(scan, f"CE_{tau}", common)
        fit_ref = _fit_on_mask(scan, f"CE_{tau_ref}", common)
        rows.append((tau, tau_ref, fit_tau.r_squared - fit_ref.r_squared, n_common))
    return pd.DataFrame(rows, columns=["tau", "tau_ref", "delta_r2", "n_common"])


def pairwise_delta_r2(scan: ScanResult) -> pd.DataFrame:
    """Absolute fixed-observation delta R-squared for every tau pair; zero diagonal."""
    taus = scan.taus
    matrix = pd.DataFrame(np.zeros((len(taus), len(taus))), index=taus, columns=taus)
    for i, tau_a in enumerate(taus):
        table = fixed_obs_delta_r2(scan, tau_a)
        for tau_b, value in zip(table["tau"], table["delta_r2"]):
            matrix.loc[tau_b, tau_a] = abs(value)
    return matrix


def compare_ce_re(scan: ScanResult) -> pd.DataFrame:
    """CE versus related employment: per tau, RE fit on all and on common observations.

    delta_r2 is R2(CE_tau) minus R2(RE) on the common observation set.
    """
    re_all = _fit_on_mask(
        scan, "RE", sample_mask(scan.samples, "RE", scan.subset, scan.log_regressor)
    )
    rows = []
    for tau in scan.taus:
        common = sample_mask(
            scan.samples, f"CE_{tau}", scan.subset, scan.log_regressor
        ) & sample_mask(scan.samples, "RE", scan.subset, scan.log_regressor)
        n_common = int(common.sum())
        if n_common < 4:
            rows.append((tau, np.nan, re_all.r_squared, np.nan, np.nan, n_common))
            continue
        fit_ce = _fit_on_mask(scan, f"CE_{tau}", common)
        fit_re = _fit_on_mask(scan, "RE", common)
        rows.append(
            (
                tau,
                fit_ce.r_squared,
                re_all.r_squared,
                fit_re.r_squared,
                fit_ce.r_squared - fit_re.r_squared,
                n_common,
            )
        )
    return pd.DataFrame(
        rows,
        columns=["tau", "r2_ce", "r2_re_all", "r2_re_common", "delta_r2", "n_common"],
    )


def gamma_sensitivity(
    relatedness: RelatednessMatrix,
    employment: EmploymentTable,
    gammas,
    t0: int,
    t1: int,
    tau_grid=range(1, 16),
    runs: int = 100,
    seed: int = 0,
    subset: str = "all",
    sector_classes: dict[str, str] | None = None,
    tau_refs=DEFAULT_TAU_REFS,
) -> dict[float, dict]:
    """Rebuild the threshold -> sweep -> scan pipeline for each edge threshold."""
    from .graph_core import walk_operators
    from .stability import sweep as run_sweep

    gammas = list(gammas)
    if any(b < a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma values must be ascending")
    out = {}
    for gamma in gammas:
        net = threshold(relatedness, gamma)
        w = walk_operators(net)
        sw = run_sweep(w, tau_grid=tau_grid, runs=runs, seed=seed)
        scan = scan_scales(
            net, sw, employment, t0, t1, subset=subset, sector_classes=sector_classes
        )
        deltas = {
            ref: fixed_obs_delta_r2(scan, ref) for ref in tau_refs if ref in scan.taus
        }
        out[float(gamma)] = {"network": net, "sweep": sw, "scan": scan, "deltas": deltas}
    return out
