"""Chain diagnostics: autocorrelation, histograms, total variation, moments,
cumulative errors, and physical observables of the scalar and the flow."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import DivFreeVelocityField, ScalarSpectralField

__all__ = [
    "autocorrelation",
    "Histogram1D",
    "Histogram2D",
    "tv_distance",
    "MomentSummary",
    "moments",
    "compute_observable",
    "OBSERVABLE_NAMES",
    "cumulative_relative_error",
    "default_edges",
    "write_acf_csv",
    "write_moments_csv",
    "write_hist1d_csv",
    "write_hist2d_csv",
    "write_tv_evolution_csv",
    "write_observables_csv",
]


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Biased normalized autocovariance; value at lag 0 is exactly 1.

    The divide-by-n estimator keeps the sequence positive semidefinite.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n <= max_lag:
        raise ValueError("series must be longer than max_lag")
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        raise ValueError("autocorrelation of a constant series is undefined")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(x[:-lag] @ x[lag:]) / (n * var)
    return acf


class Histogram1D:
    """Integer-count histogram on fixed edges; densities are bin masses."""

    def __init__(self, edges):
        self.edges = np.asarray(edges, dtype=float)
        if len(self.edges) < 2 or np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing, length >= 2")
        self.counts = np.zeros(len(self.edges) - 1, dtype=np.int64)

    def accumulate(self, values):
        values = np.asarray(values, dtype=float)
        values = values[(values >= self.edges[0]) & (values <= self.edges[-1])]
        self.counts += np.histogram(values, bins=self.edges)[0]

    def merge(self, other: "Histogram1D") -> "Histogram1D":
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("histogram edges differ")
        out = Histogram1D(self.edges)
        out.counts = self.counts + other.counts
        return out

    def density(self) -> np.ndarray:
        """Probability mass per bin (sums to 1 over bins)."""
        total = self.counts.sum()
        if total == 0:
            raise ValueError("empty histogram has no density")
        return self.counts / total


class Histogram2D:
    def __init__(self, edges_x, edges_y):
        self.edges_x = np.asarray(edges_x, dtype=float)
        self.edges_y = np.asarray(edges_y, dtype=float)
        for e in (self.edges_x, self.edges_y):
            if len(e) < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("edges must be strictly increasing, length >= 2")
        self.counts = np.zeros((len(self.edges_x) - 1, len(self.edges_y) - 1),
                               dtype=np.int64)

    def accumulate(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = ((xs >= self.edges_x[0]) & (xs <= self.edges_x[-1])
                & (ys >= self.edges_y[0]) & (ys <= self.edges_y[-1]))
        self.counts += np.histogram2d(xs[keep], ys[keep],
                                      bins=(self.edges_x, self.edges_y))[0].astype(np.int64)

    def merge(self, other: "Histogram2D") -> "Histogram2D":
        if not (np.array_equal(self.edges_x, other.edges_x)
                and np.array_equal(self.edges_y, other.edges_y)):
            raise ValueError("histogram edges differ")
        out = Histogram2D(self.edges_x, self.edges_y)
        out.counts = self.counts + other.counts
        return out

    def density(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            raise ValueError("empty histogram has no density")
        return self.counts / total


def tv_distance(p, q) -> float:
    """Half the L1 distance between bin masses; a metric on fixed edges."""
    if isinstance(p, (Histogram1D, Histogram2D)):
        if isinstance(p, Histogram1D):
            if not np.array_equal(p.edges, q.edges):
                raise ValueError("histogram edges differ")
        else:
            if not (np.array_equal(p.edges_x, q.edges_x)
                    and np.array_equal(p.edges_y, q.edges_y)):
                raise ValueError("histogram edges differ")
        p, q = p.density(), q.density()
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("densities have different shapes")
    return 0.5 * float(np.abs(p - q).sum())


def default_edges(samples, n_bins: int = 64, half_width_sd: float = 4.0) -> np.ndarray:
    """Uniform bins spanning mean +- half_width_sd standard deviations."""
    samples = np.asarray(samples, dtype=float)
    mu = samples.mean()
    sd = samples.std()
    if sd == 0:
        sd = max(abs(mu), 1.0) * 1e-3
    return np.linspace(mu - half_width_sd * sd, mu + half_width_sd * sd, n_bins + 1)


@dataclass(frozen=True)
class MomentSummary:
    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray


def moments(samples) -> MomentSummary:
    """Per-component mean, unbiased variance, and standardized central
    third/fourth moments (excess kurtosis subtracts 3).  Zero-variance
    components report NaN skew/kurtosis."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 4:
        raise ValueError("need at least 4 samples")
    mean = x.mean(axis=0)
    centered = x - mean
    var = np.sum(centered**2, axis=0) / (n - 1)
    m2 = np.mean(centered**2, axis=0)
    m3 = np.mean(centered**3, axis=0)
    m4 = np.mean(centered**4, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(m2 > 0, m3 / m2**1.5, np.nan)
        exkurt = np.where(m2 > 0, m4 / m2**2 - 3.0, np.nan)
    return MomentSummary(mean, var, skew, exkurt)


OBSERVABLE_NAMES = ("scalar_variance", "scalar_dissipation", "enstrophy",
                    "enstrophy_dissipation", "scalar_difference")


def compute_observable(name: str, subject, params: dict | None = None) -> float:
    """Physical observables evaluated spectrally (Parseval).

    scalar_variance        |theta - mean|^2 over the torus
    scalar_dissipation     2 kappa |grad theta|^2      (params: kappa)
    enstrophy              (1/2) |curl v|^2
    enstrophy_dissipation  |grad curl v|^2
    scalar_difference      theta(x + r) - theta(x)     (params: x, r)
    """
    params = params or {}
    if name == "scalar_variance":
        return _scalar_quadratic(subject, power=0, exclude_mean=True)
    if name == "scalar_dissipation":
        kappa = params["kappa"]
        return 2.0 * kappa * 4.0 * np.pi**2 * _scalar_quadratic(subject, power=1)
    if name == "enstrophy":
        # curl coefficient of an incompressible mode is 2 pi i |k| v_k
        return _flow_quadratic(subject, power=1) * 2.0 * np.pi**2
    if name == "enstrophy_dissipation":
        return _flow_quadratic(subject, power=2) * 16.0 * np.pi**4
    if name == "scalar_difference":
        x = np.asarray(params["x"], dtype=float)
        r = np.asarray(params["r"], dtype=float)
        return subject.evaluate(x + r) - subject.evaluate(x)
    raise ValueError(f"unknown observable {name!r}")


def _scalar_quadratic(theta: ScalarSpectralField, power: int,
                      exclude_mean: bool = False) -> float:
    """sum_k |k|^(2 power) |c_k|^2 over the full signed lattice."""
    m = theta.cutoff
    grid = np.arange(-m, m + 1)
    k2 = grid[:, None] ** 2 + grid[None, :] ** 2
    w = np.abs(theta.coeffs) ** 2 * (k2.astype(float) ** power if power else 1.0)
    total = float(w.sum())
    if exclude_mean and power == 0:
        total -= float(np.abs(theta.coeffs[m, m]) ** 2)
    return total

def _flow_quadratic(field: DivFreeVelocityField, power: int) -> float:
    """sum over signed modes of |k|^(2 power) |v_k|^2 = 2 sum over reps."""
    total = 0.0
    for k, vk in field.modes.items():
        k2 = float(k[0] * k[0] + k[1] * k[1])
        total += 2.0 * k2**power * abs(vk) ** 2
    return total


def cumulative_relative_error(series, truth: float) -> np.ndarray:
    """|running mean - truth| / |truth| per prefix (absolute error if truth = 0)."""
    x = np.asarray(series, dtype=float)
    cma = np.cumsum(x) / np.arange(1, len(x) + 1)
    if truth == 0:
        return np.abs(cma)
    return np.abs(cma - truth) / abs(truth)


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def write_acf_csv(path, acf):
    _write_rows(path, ["lag", "value"],
                [[lag, repr(float(v))] for lag, v in enumerate(np.asarray(acf))])


def write_moments_csv(path, summary: MomentSummary):
    rows = [[i, repr(float(summary.mean[i])), repr(float(summary.variance[i])),
             repr(float(summary.skewness[i])), repr(float(summary.excess_kurtosis[i]))]
            for i in range(len(summary.mean))]
    _write_rows(path, ["component", "mean", "var", "skew", "exkurt"], rows)


def write_hist1d_csv(path, hist: Histogram1D):
    dens = hist.density()
    rows = [[repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])), repr(float(dens[i]))]
            for i in range(len(dens))]
    _write_rows(path, ["edge_lo", "edge_hi", "density"], rows)


def write_hist2d_csv(path, hist: Histogram2D):
    dens = hist.density()
    rows = []
    for i in range(dens.shape[0]):
        for j in range(dens.shape[1]):
            rows.append([repr(float(hist.edges_x[i])), repr(float(hist.edges_x[i + 1])),
                         repr(float(hist.edges_y[j])), repr(float(hist.edges_y[j + 1])),
                         repr(float(dens[i, j]))])
    _write_rows(path, ["x_lo", "x_hi", "y_lo", "y_hi", "density"], rows)


def write_tv_evolution_csv(path, steps, tv_by_component: dict):
    comps = sorted(tv_by_component)
    header = ["step"] + [f"tv_c{c}" for c in comps]
    rows = []
    for i, step in enumerate(steps):
        rows.append([step] + [repr(float(tv_by_component[c][i])) for c in comps])
    _write_rows(path, header, rows)


def write_observables_csv(path, steps, name, values, truth: float):
    values = np.asarray(values, dtype=float)
    cma = np.cumsum(values) / np.arange(1, len(values) + 1)
    rel = cumulative_relative_error(values, truth)
    rows = [[steps[i], name, repr(float(values[i])), repr(float(cma[i])), repr(float(rel[i]))]
            for i in range(len(values))]
    _write_rows(path, ["step", "name", "value", "cma", "rel_err"], rows)
