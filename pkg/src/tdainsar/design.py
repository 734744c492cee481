"""Successful-unwrapping criterion, success rates and baseline optimisation.

A chain of effective baselines B1 < B2 < ... is unwrapped by scaling each
unwrapped phase by B_i / B_(i-1) and rounding the ambiguity of the next
one. The rounding on link i fails when the scaled error exceeds pi, so with
Gaussian phase noise the link error has variance

    (B_i / B_(i-1))**2 * var_(i-1) + var_i

and the worst link (the binding link) sets the success rate.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri

from . import io
from .geometry import (TWO_PI, BaselineConfiguration, BaselineSet, Mode, RadarGeometry, coherence_to_phase_std,
                       effective_baselines, equivalent_baselines, height_ambiguity, height_sensitivity,
                       simplified_baselines, wrap)
from .rng import make_rng


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(float(round(start + k * step, 10)) for k in range(n + 1))


@dataclass(frozen=True)
class DesignSettings:
    significance_alpha: float = 0.02
    coherence: object = 0.99
    expected_height_precision: float = 0.5
    max_height_difference: float = 100.0
    antenna_grid: tuple = field(default_factory=lambda: _grid(0.5, 20.0, 0.1))
    satellite_grid: tuple = field(default_factory=lambda: _grid(10.0, 400.0, 2.0))
    trials: int = 500
    seed: int = 0
    max_int: int = 5

    def __post_init__(self):
        if not 0 < self.significance_alpha < 1:
            raise ValueError("significance_alpha must lie in (0, 1)")
        for name in ("antenna_grid", "satellite_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or any(v <= 0 for v in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be non-empty, positive and strictly ascending")
            object.__setattr__(self, name, grid)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.expected_height_precision > 0 or not self.max_height_difference > 0:
            raise ValueError("expected_height_precision and max_height_difference must be positive")
        gam = np.atleast_1d(np.asarray(self.coherence, dtype=float))
        if np.any(gam <= 0) or np.any(gam > 1):
            raise ValueError("coherence must lie in (0, 1]")


@dataclass(frozen=True)
class DesignPoint:
    l1: float
    l2: float
    mode: Mode
    sr_analytic: float
    sigma_h: float
    h_amb: float
    feasible: bool
    binding_link: int
    sr_empirical: float | None = None
    effective: tuple = ()

    def __post_init__(self):
        if not 0 <= self.sr_analytic <= 1:
            raise ValueError("sr_analytic must be a probability")
        if self.sr_empirical is not None and not 0 <= self.sr_empirical <= 1:
            raise ValueError("sr_empirical must be a probability")

    def selection_key(self):
        # max h_amb, then min sigma_h, then max SR; coordinates make it total
        return (-self.h_amb, self.sigma_h, -self.sr_analytic, self.l1, self.l2)


@dataclass(frozen=True)
class DesignReport:
    mode: Mode
    points: tuple
    selected: DesignPoint | None
    reason: str = ""
    simplified: bool = False

    @property
    def feasible_points(self):
        return [p for p in self.points if p.feasible]

    def max_feasible_satellite_baseline(self, l1=None):
        pts = [p for p in self.feasible_points if l1 is None or abs(p.l1 - l1) < 1e-9]
        return max((p.l2 for p in pts), default=float("nan"))

    def min_feasible_antenna_baseline(self):
        return min((p.l1 for p in self.feasible_points), default=float("nan"))

    def best_sigma_h(self):
        return min((p.sigma_h for p in self.feasible_points), default=float("nan"))


CSV_COLUMNS = ("l1", "l2", "mode", "sr_analytic", "sr_empirical", "sigma_h", "h_amb", "feasible", "binding_link")


def write_report_csv(path, reports):
    if isinstance(reports, DesignReport):
        reports = [reports]
    rows = [(p.l1, p.l2, int(p.mode), p.sr_analytic, p.sr_empirical, p.sigma_h, p.h_amb, p.feasible, p.binding_link)
            for rep in reports for p in rep.points]
    io.write_table_csv(path, CSV_COLUMNS, rows)


def point_to_dict(p: DesignPoint | None):
    if p is None:
        return None
    return {"l1": p.l1, "l2": p.l2, "mode": int(p.mode), "sr_analytic": p.sr_analytic,
            "sr_empirical": p.sr_empirical, "sigma_h": p.sigma_h, "h_amb": p.h_amb, "feasible": p.feasible,
            "binding_link": p.binding_link, "effective_baselines": list(p.effective)}


def two_sided_quantile(alpha):
    """u such that P(|Z| > u) = alpha for a standard normal Z."""
    return float(ndtri(1.0 - alpha / 2.0))


def _physical_variances(bset: BaselineSet, phase_std):
    std = np.broadcast_to(np.asarray(phase_std, dtype=float), (len(bset.physical),))
    if np.any(std < 0):
        raise ValueError("phase std must be non-negative")
    return std ** 2


def link_variances(bset: BaselineSet, phase_std):
    """Error variance of every bootstrap link, chain order (link i joins i-1 and i)."""
    if len(bset) < 2:
        raise ValueError("a chain needs at least two baselines")
    var = bset.chain_variances(_physical_variances(bset, phase_std))
    b = np.asarray(bset.effective)
    ratio = b[1:] / b[:-1]
    return ratio ** 2 * var[:-1] + var[1:]


def su_check(bset: BaselineSet, phase_std, alpha):
    """``(passes, binding_link)``; the link index i joins chain elements i-1 and i."""
    lv = link_variances(bset, phase_std)
    binding = int(np.argmax(lv)) + 1
    limit = (np.pi / two_sided_quantile(alpha)) ** 2
    return bool(lv[binding - 1] < limit), binding


def analytic_success_rate(bset: BaselineSet, phase_std):
    lv = link_variances(bset, phase_std)
    worst = float(lv.max())
    if worst == 0:
        return 1.0
    return float(2.0 * ndtr(np.pi / np.sqrt(worst)) - 1.0)


def predicted_height_precision(geom: RadarGeometry, b4, sigma_l):
    if not b4 > 0:
        raise ValueError("b4 must be positive")
    return float(geom.sensitivity_scale / (4.0 * np.pi * b4) * sigma_l)


@dataclass(frozen=True)
class MonteCarloResult:
    sr_empirical: float
    sigma_h_empirical: float
    link_success: tuple
    sigma_h_elements: tuple
    trials: int

    @property
    def sigma_h_sbi(self):
        return self.sigma_h_elements[0]

    @property
    def sigma_h_mbi(self):
        return self.sigma_h_elements[-2] if len(self.sigma_h_elements) > 1 else float("nan")

    @property
    def sigma_h_lbi(self):
        return self.sigma_h_elements[-1]


def chain_trials(geom: RadarGeometry, bset: BaselineSet, phase_std, trials, rng, independent=False):
    """Single-point bootstrap trials along ``bset``.

    With ``independent`` each chain element gets its own noise with the
    (combination-inflated) chain variance; otherwise noise is drawn per
    physical interferogram and pseudo baselines inherit it by differencing,
    which correlates them with their members. The first element is taken
    as correctly unwrapped.
    """
    chain = np.asarray(bset.effective)
    k = height_sensitivity(geom, chain)
    var = _physical_variances(bset, phase_std)
    amb = float(height_ambiguity(geom, chain[0]))
    h = rng.uniform(-0.25, 0.25, trials) * amb
    if independent:
        noise = rng.standard_normal((trials, len(chain))) * np.sqrt(bset.chain_variances(var))
    else:
        phys = rng.standard_normal((len(bset.physical), trials)) * np.sqrt(var)[:, None]
        noise = np.stack([c.combine(phys) for c in bset.combination_map], axis=1)
    truth = k * h[:, None] + noise
    est = np.empty_like(truth)
    est[:, 0] = truth[:, 0]
    links = []
    for e in range(1, len(chain)):
        d = wrap(truth[:, e])
        pseudo = chain[e] / chain[e - 1] * est[:, e - 1]
        est[:, e] = d + TWO_PI * np.rint((pseudo - d) / TWO_PI)
        links.append(np.abs(est[:, e] - truth[:, e]) < np.pi)
    links = np.array(links).reshape(len(chain) - 1, trials)
    ok = links.all(axis=0)
    return ok, links, est / k - h[:, None]


def _summarise(ok, links, errors):
    trials = ok.size
    good = errors[ok]
    sig = tuple(float(good[:, e].std()) if good.shape[0] > 1 else float("nan") for e in range(errors.shape[1]))
    return MonteCarloResult(float(ok.mean()), sig[-1], tuple(float(v) for v in links.mean(axis=1)), sig, trials)


def design_baseline_set(cfg: BaselineConfiguration, max_int=5, simplified=False):
    physical = simplified_baselines(cfg) if simplified else equivalent_baselines(cfg)
    return effective_baselines(physical, max_int)


def monte_carlo_success_rate(geom: RadarGeometry, cfg: BaselineConfiguration, gamma, trials, seed, max_int=5,
                             simplified=False, cell=()):
    """Empirical SR and height precision from single-point chain trials.

    Returns a ``MonteCarloResult``; ``sr_empirical`` and
    ``sigma_h_empirical`` (longest baseline, successful trials only) are the
    headline numbers, and ``sigma_h_elements`` holds the precision after
    every chain element.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    bset = design_baseline_set(cfg, max_int, simplified)
    sigma = coherence_to_phase_std(gamma)
    rng = make_rng(seed, "monte_carlo", int(cfg.mode), int(simplified), *cell)
    return _summarise(*chain_trials(geom, bset, sigma, trials, rng))


def evaluate_point(geom: RadarGeometry, settings: DesignSettings, mode, l1, l2, simplified=False):
    cfg = BaselineConfiguration(l1, l2, mode)
    try:
        bset = design_baseline_set(cfg, settings.max_int, simplified)
    except ValueError:
        # the configuration is not realisable (baselines collide when L1 >= L2)
        return DesignPoint(float(l1), float(l2), Mode(mode), 0.0, float("nan"), float("nan"), False, 0)
    sigma = coherence_to_phase_std(settings.coherence)
    sigma_phys = np.broadcast_to(np.asarray(sigma, dtype=float), (len(bset.physical),))
    sr = analytic_success_rate(bset, sigma_phys)
    binding = int(np.argmax(link_variances(bset, sigma_phys))) + 1
    sigma_h = predicted_height_precision(geom, bset.longest, sigma_phys[-1])
    h_amb = float(height_ambiguity(geom, bset.shortest))
    alpha = settings.significance_alpha
    feasible = (sr > 1 - alpha and sigma_h < settings.expected_height_precision
                and bset.shortest < geom.sensitivity_scale / (2 * settings.max_height_difference))
    return DesignPoint(float(l1), float(l2), Mode(mode), sr, sigma_h, h_amb, bool(feasible), binding,
                       effective=tuple(bset.effective))


def _map(fn, items, threads):
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, items))


def optimize(geom: RadarGeometry, settings: DesignSettings, mode, simplified=False, refine_top_k=0, threads=1):
    """Evaluate every (L1, L2) cell and select the optimum among feasible ones.

    Selection is lexicographic: largest height ambiguity, then smallest
    height precision, then largest analytic SR, then smallest (L1, L2).
    ``refine_top_k`` attaches Monte Carlo success rates to the best feasible
    cells in that order.
    """
    mode = Mode(mode)
    with np.errstate(all="ignore"):
        points = [evaluate_point(geom, settings, mode, l1, l2, simplified)
                  for l1 in settings.antenna_grid for l2 in settings.satellite_grid]
    feasible = sorted((p for p in points if p.feasible), key=DesignPoint.selection_key)
    if refine_top_k and feasible:
        top = feasible[:refine_top_k]
        index = {(p.l1, p.l2): i for i, p in enumerate(points)}

        def refine(p):
            cell = (settings.antenna_grid.index(p.l1), settings.satellite_grid.index(p.l2))
            mc = monte_carlo_success_rate(geom, BaselineConfiguration(p.l1, p.l2, mode), settings.coherence,
                                          settings.trials, settings.seed, settings.max_int, simplified, cell)
            return replace(p, sr_empirical=mc.sr_empirical)

        for p in _map(refine, top, threads):
            points[index[(p.l1, p.l2)]] = p
        feasible = sorted((p for p in points if p.feasible), key=DesignPoint.selection_key)
    if not feasible:
        return DesignReport(mode, tuple(points), None, "no grid cell satisfies all three constraints", simplified)
    return DesignReport(mode, tuple(points), feasible[0], "", simplified)


@dataclass(frozen=True)
class SweepRow:
    coherence: float
    max_satellite_baseline: float
    min_antenna_baseline: float
    best_sigma_h: float


def coherence_sweep(geom: RadarGeometry, settings: DesignSettings, modes, coherences, simplified=False, threads=1):
    """Per mode, the three design curves as a function of coherence."""
    jobs = [(Mode(m), float(g)) for m in modes for g in coherences]

    def run(job):
        mode, gamma = job
        rep = optimize(geom, replace(settings, coherence=gamma), mode, simplified)
        return SweepRow(gamma, rep.max_feasible_satellite_baseline(), rep.min_feasible_antenna_baseline(),
                        rep.best_sigma_h())

    rows = _map(run, jobs, threads)
    out = {}
    for (mode, _), row in zip(jobs, rows):
        out.setdefault(mode, []).append(row)
    return out


@dataclass(frozen=True)
class SimplifiedComparison:
    coherence: float
    full: SweepRow
    simplified: SweepRow

    @property
    def ratio(self):
        return self.full.max_satellite_baseline / self.simplified.max_satellite_baseline


def simplified_system_sweep(geom: RadarGeometry, settings: DesignSettings, coherences, threads=1):
    """Configuration 2 against the three-channel system with two interferograms."""
    full = coherence_sweep(geom, settings, [Mode.CONFIG2], coherences, threads=threads)[Mode.CONFIG2]
    simp = coherence_sweep(geom, settings, [Mode.CONFIG2], coherences, simplified=True, threads=threads)[Mode.CONFIG2]
    return [SimplifiedComparison(f.coherence, f, s) for f, s in zip(full, simp)]
