"""Run a configured experiment and persist its CSV rows and JSON summary."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import experiments as xp
from .config import ConfigError, ExperimentConfig
from .fk_core import EnumerationCapError, Parameters, exact_distribution
from .geometry import symmetric_box
from .sampler import EstimateReport, sample_bits, wilson_report

CSV_HEADER = ("experiment", "p", "q", "boundary", "n", "N", "event", "trials", "successes",
              "estimate", "ci_low", "ci_high", "seed")


def fmt(v) -> str:
    """Shortest round-trip text for numbers; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_safe(v):
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def report_dict(r: EstimateReport) -> dict:
    return {"trials": r.trials, "successes": r.successes, "estimate": r.point,
            "ci_low": r.ci_low, "ci_high": r.ci_high}


@dataclass
class RunResult:
    rows: list
    summary: dict


class Runner:
    def __init__(self, cfg: ExperimentConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.rows: list = []

    @property
    def params(self) -> Parameters:
        return Parameters(self.cfg.p, self.cfg.q)

    def row(self, n, event, report: EstimateReport | None = None, value=None, N=None, exact=False,
            p=None, q=None):
        c = self.cfg
        if report is not None and not exact:
            vals = (report.trials, report.successes, report.point, report.ci_low, report.ci_high)
        else:
            v = report.point if report is not None else value
            vals = (None, None, v, v, v)
        self.rows.append((c.experiment, c.p if p is None else p, c.q if q is None else q, c.boundary,
                          n, N, event) + vals + (c.seed,))

    def sampling_kw(self) -> dict:
        return {"sweeps": self.cfg.sweeps, "burn_in": self.cfg.burn_in}

    def resolve_theta(self) -> dict:
        c = self.cfg
        if c.theta_value() is not None:
            return {"source": "fixed", "value": c.theta_value()}
        n_ref = max(c.n)
        scan = xp.estimate_theta(self.params, [n_ref], c.replicas, c.seed, self.threads,
                                 **self.sampling_kw())
        r = scan.reports[0]
        self.row(n_ref, "theta_ref", r)
        return {"source": "estimate", "value": r.point, "n": n_ref, "ci_low": r.ci_low,
                "ci_high": r.ci_high, "trials": r.trials, "successes": r.successes}

    def context(self, theta: dict | None) -> xp.EventContext:
        c = self.cfg
        return xp.EventContext(xp.g_function(c.g_family, c.g_coef), c.eps, c.delta,
                               None if theta is None else theta["value"], c.N[0] if c.N else None)

    # -- experiments --

    def run_exact(self) -> dict:
        c = self.cfg
        theta = self.resolve_theta() if c.event in xp.NEEDS_THETA else None
        ctx = self.context(theta)
        out = {}
        for n in c.n:
            V = symmetric_box(n)
            if V.n_edges == 0:
                value = float(xp.failure_event(c.event, V, n, ctx)(np.zeros(0, np.uint8)))
            else:
                law = exact_distribution(V, c.boundary, self.params)
                f = xp.failure_event(c.event, V, n, ctx)
                value = float(sum(pr for b, pr in zip(law.bits_matrix(), law.probs) if f(b)))
            self.row(n, c.event, value=value, exact=True)
            out[str(n)] = value
        return {"exact": out, "theta_ref": theta}

    def run_sample(self) -> dict:
        c = self.cfg
        theta = self.resolve_theta() if c.event in xp.NEEDS_THETA else None
        ctx = self.context(theta)
        out = {}
        for n in c.n:
            V = symmetric_box(n)
            f = xp.failure_event(c.event, V, n, ctx)
            hits = opened = 0
            for b in sample_bits(V, c.boundary, self.params, c.replicas, seed=c.seed, **self.sampling_kw()):
                hits += bool(f(b))
                opened += int(b.sum())
            r = wilson_report(hits, c.replicas, c.seed, self.params)
            self.row(n, c.event, r)
            out[str(n)] = report_dict(r)
            if V.n_edges:
                d = wilson_report(opened, c.replicas * V.n_edges, c.seed, self.params)
                self.row(n, "edge-density", d)
                out[f"{n}:edge-density"] = report_dict(d)
        return {"estimates": out, "theta_ref": theta}

    def run_theta(self) -> dict:
        c = self.cfg
        scan = xp.estimate_theta(self.params, c.n, c.replicas, c.seed, self.threads, c.boundary,
                                 **self.sampling_kw())
        for n, r in zip(scan.ns, scan.reports):
            self.row(n, "theta", r)
        verdicts = {"monotone": scan.monotone}
        if len(scan.ns) >= 2:
            verdicts["top_two_agree"] = scan.agree(-2, -1)
        return {"verdicts": verdicts}

    def run_decay(self) -> dict:
        c = self.cfg
        fits = {}
        bc = c.boundary
        for n in c.n:
            V = symmetric_box(n)
            scan = xp.decay_scan(self.params, V, None, c.replicas, c.seed, bc, self.threads,
                                 **self.sampling_kw())
            for (x, y), r in zip(scan.pairs, scan.reports):
                d = max(abs(x[0] - y[0]), abs(x[1] - y[1]))
                self.row(n, f"connect-d{d}", r, exact=scan.exact)
            fits[str(n)] = dict(scan.fit.as_dict(), exact=scan.exact, boundary=bc)
        return {"fits": fits}

    def run_event(self) -> dict:
        c = self.cfg
        theta = self.resolve_theta() if c.event in xp.NEEDS_THETA else None
        scan = xp.event_scan(c.event, self.params, c.n, c.replicas, c.seed, c.boundary,
                             self.context(theta), self.threads, theta_provenance=theta,
                             **self.sampling_kw())
        for n, r in zip(scan.ns, scan.reports):
            self.row(n, c.event, r, N=c.N[0] if c.event == "Zc" else None)
        comp = scan.comparison
        lin = comp.linear
        return {"fits": comp.as_dict(), "theta_ref": theta,
                "flags": dict(zip(map(str, scan.ns), scan.flags)),
                "verdicts": {"winner": comp.winner,
                             "linear_slope_positive": lin.status == "ok" and lin.slope > 0}}

    def run_renorm(self) -> dict:
        c = self.cfg
        boxes = None
        if c.n:
            boxes = [symmetric_box(min(n for n in c.n if n >= 3 * N)) for N in c.N]
        scan = xp.domination_scan(self.params, c.N, c.replicas, c.seed, c.boundary, boxes,
                                  **self.sampling_kw())
        bins = {}
        for N, r in zip(scan.Ns, scan.reports):
            rep = EstimateReport(r.trials, r.failures, r.estimate, r.ci_low, r.ci_high, r.seed,
                                 c.p, c.q)
            self.row(r.box.shape[0], "X0=0", rep, N=N)
            bins[str(N)] = {"".join(map(str, k)) or "-": v for k, v in r.bins.items()}
        return {"fits": {"slope": scan.slope, "C": scan.C, "r2": scan.r2},
                "verdicts": {"strictly_decreasing": scan.decreasing},
                "conditional_bins": bins}

    def run_lower_bound(self) -> dict:
        c = self.cfg
        pts = xp.lower_bound_check(self.params, c.n, c.replicas, c.seed, self.threads, c.boundary,
                                   **self.sampling_kw())
        out = {}
        for pt in pts:
            self.row(pt.n, "Uc", pt.report, exact=pt.exact)
            out[str(pt.n)] = {"floor": pt.floor, "resolvable": pt.resolvable, "holds": pt.holds,
                              "exact": pt.exact}
        ok = all(pt.holds for pt in pts if pt.resolvable)
        return {"points": out, "verdicts": {"holds_at_resolvable_points": ok}}

    def run_duality(self) -> dict:
        worst = 0.0
        for b, p, q, d in xp.duality_grid():
            self.row(f"{b.shape[0]}x{b.shape[1]}", "duality", value=d, exact=True, p=p, q=q)
            worst = max(worst, d)
        return {"max_discrepancy": worst, "verdicts": {"below_1e-10": worst < 1e-10}}

    def execute(self, given=()) -> RunResult:
        if self.cfg.experiment == "decay" and "boundary" not in given:
            # two-point decay is measured under wired boundary unless asked otherwise
            self.cfg.boundary = "wired"
        name = self.cfg.experiment.replace("-", "_")
        if name == "duality_verify":
            name = "duality"
        summary = getattr(self, f"run_{name}")()
        return RunResult(self.rows, {"config": self.cfg.echo(), **summary})


def write_outputs(cfg: ExperimentConfig, result: RunResult) -> tuple[str, str]:
    os.makedirs(cfg.out, exist_ok=True)
    csv_path = os.path.join(cfg.out, f"{cfg.experiment}.csv")
    json_path = os.path.join(cfg.out, f"{cfg.experiment}.json")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.rows:
            w.writerow([fmt(v) for v in r])
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(result.summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def run(cfg: ExperimentConfig, threads: int = 1, given=()) -> RunResult:
    """Execute and persist; runtime failures surface as :class:`ConfigError` or the original error."""
    try:
        result = Runner(cfg, threads).execute(given)
    except EnumerationCapError as exc:
        raise ConfigError(str(exc), "n") from exc
    write_outputs(cfg, result)
    return result
