"""Solve, certify and report: the path shared by the CLI, scripts and tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .copsos import all_blocks_certified
from .extract import TightnessVerdict, Verdict, certify
from .poly import ProblemInstance
from .relax import RelaxationResult, regularized_ladder, relaxation_sizes, solve_relaxation
from .sdp import SolverOptions, Status

SCHEMA = 1


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class SolveReport:
    instance: ProblemInstance
    order: int
    dense: bool
    result: RelaxationResult
    verdict: TightnessVerdict | None
    timings: dict = field(default_factory=dict)

    @property
    def status(self) -> Status:
        return self.result.status

    @property
    def f_smo(self) -> float:
        return self.result.f_smo

    @property
    def f_spa(self) -> float:
        return self.result.f_spa

    @property
    def tight(self) -> bool:
        return self.verdict is not None and self.verdict.tight

    @property
    def point(self) -> np.ndarray | None:
        return None if self.result.y is None else self.result.point()

    def to_json(self) -> dict:
        inst = self.instance
        sol = self.result.solution
        cert = self.result.certificate
        out = {
            "schema": SCHEMA,
            "instance": inst.name,
            "n": inst.n,
            "blocks": inst.pattern.one_based(),
            "order": self.order,
            "relaxation": "dense" if self.dense else "sparse",
            "status": self.status.value,
            "f_smo": _num(self.f_smo),
            "f_spa": _num(self.f_spa),
            "projection": None if self.point is None else self.point.tolist(),
            "sizes": relaxation_sizes(inst, self.order),
            "solver": {"iterations": sol.iterations,
                       "residuals": {k: _num(v) for k, v in sol.residuals.items()}},
            "timings": self.timings,
        }
        if cert is not None:
            out["certificate"] = {"gamma": cert.gamma, "lambda": cert.lam.tolist(),
                                  "mu": cert.mu.tolist(),
                                  "residual": cert.residual(self.result.relax),
                                  "min_gram_eigenvalue": cert.min_gram_eigenvalue()}
        out["verdict"] = None if self.verdict is None else self.verdict.to_json()
        return out


def solve_and_certify(instance: ProblemInstance, k: int | None = None, dense: bool = False,
                      options: SolverOptions | None = None, backend=None,
                      copsos: bool = True, rounding: str = "up",
                      rank_tol: float | None = None) -> SolveReport:
    """One relaxation solve followed by the tightness checks."""
    k = instance.k0 if k is None else k
    options = options or SolverOptions.from_env()
    res = solve_relaxation(instance, k, dense=dense, options=options, backend=backend,
                           rounding=rounding)
    timings = dict(res.timings)
    verdict = None
    t0 = time.perf_counter()
    if res.y is not None and res.status == Status.OPTIMAL:
        kw = {} if rank_tol is None else {"rank_tol": rank_tol}
        verdict = certify(
            instance, k, res.y, res.f_smo, dense=dense,
            copsos_check=(lambda inst: all_blocks_certified(inst)) if copsos and not dense else None,
            resolve=lambda t: solve_relaxation(instance, t, dense=dense, options=options,
                                               backend=backend, rounding=rounding).f_smo,
            refine=lambda: regularized_ladder(res, options=options, backend=backend),
            **kw)
    timings["certify"] = time.perf_counter() - t0
    return SolveReport(instance, k, dense, res, verdict, timings)


def run_hierarchy(instance: ProblemInstance, k_from: int | None = None, k_to: int | None = None,
                  dense: bool = False, options: SolverOptions | None = None, backend=None,
                  stop_when_tight: bool = False, certify_each: bool = True,
                  rounding: str = "up") -> list[SolveReport]:
    """Orders ``k_from..k_to`` (defaults ``k0..k0+2``)."""
    k_from = instance.k0 if k_from is None else k_from
    k_to = k_from + 2 if k_to is None else k_to
    reports = []
    for k in range(k_from, k_to + 1):
        if certify_each:
            rep = solve_and_certify(instance, k, dense, options, backend, rounding=rounding)
        else:
            res = solve_relaxation(instance, k, dense=dense, options=options, backend=backend,
                                   rounding=rounding)
            rep = SolveReport(instance, k, dense, res, None, dict(res.timings))
        reports.append(rep)
        if stop_when_tight and rep.tight:
            break
    return reports


def monotone(values, slack: float = 1e-7) -> bool:
    """Lower bounds of nested relaxations never decrease (``-inf`` allowed at the start)."""
    vals = [v for v in values if not math.isnan(v)]
    return all(b >= a - slack * (1 + abs(a)) if math.isfinite(a) else True
               for a, b in zip(vals, vals[1:]))


def exit_code(report: SolveReport) -> int:
    """0 for an Optimal solve that is not left inconclusive, else 2 (errors exit 1 upstream)."""
    if report.status != Status.OPTIMAL:
        return 2
    if report.verdict is not None and report.verdict.status == Verdict.INCONCLUSIVE:
        return 2
    return 0
