"""Search over the RF phase and waveshaper weight for a target format.

The objective is evaluated on a short noiseless calibration realisation of
the scenario.  Both controls act linearly on the field, so the received
signal is ``rx1(phi) + alpha * rx2(phi)`` where rx1/rx2 come from the two
parent bands alone; each phi needs one pass through MZM-2 and the receiver
and every alpha after that is free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .aggregator import closest_prediction, solve_for_target
from .errors import InfeasibleTargetError
from .receiver_dsp import receive, recover_symbols
from .signal_core import FilterSpec, apply_filter
from .transmitter import get_format

GOLDEN = (math.sqrt(5) - 1) / 2
CALIBRATION_SYMBOLS = 1000
OBJECTIVES = ("evm", "min_distance_penalized_evm")


@dataclass(frozen=True)
class TuneSpec:
    target: str
    phi_grid: int = 64
    refine_iters: int = 20
    alpha_bounds: tuple = (0.1, 1.0)
    objective: str = "evm"
    seed: Optional[int] = None
    alpha_grid: int = 9
    golden_iters: int = 40
    tol: float = 1e-7

    def __post_init__(self):
        get_format(self.target)
        if self.phi_grid < 8:
            raise ValueError("phi_grid must be >= 8")
        lo, hi = self.alpha_bounds
        if not 0 < lo <= hi <= 1:
            raise ValueError("alpha_bounds must satisfy 0 < lo <= hi <= 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")

    @property
    def alpha_free(self) -> bool:
        return self.alpha_bounds[0] < self.alpha_bounds[1]


@dataclass(frozen=True, eq=False)
class TuneResult:
    target: str
    phi_star_rad: float
    alpha_star: float
    evm_at_opt_pct: float
    coarse_best_pct: float
    objective_landscape: dict
    converged: bool
    rounds: int
    history: list = field(default_factory=list)
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "phi_star_rad": self.phi_star_rad,
            "alpha_star": self.alpha_star,
            "evm_at_opt_pct": self.evm_at_opt_pct,
            "coarse_best_pct": self.coarse_best_pct,
            "converged": self.converged,
            "rounds": self.rounds,
            "history": self.history,
            "evaluations": self.evaluations,
            "objective_landscape": self.objective_landscape,
        }


class CalibrationBench:
    """Cached noiseless objective for one scenario."""

    def __init__(self, scn, target: str, objective: str = "evm", n_symbols: int = CALIBRATION_SYMBOLS,
                 seed: Optional[int] = None):
        from .scenario import build_chain

        if seed is not None:
            scn = scn.with_overrides(seed=int(seed))
        self.scenario = scn
        self.target = get_format(target)
        self.objective = objective
        chain = build_chain(scn, n_symbols=n_symbols, alpha=1.0)
        lo, hi = chain.weight.applied_band_hz
        band2 = FilterSpec("brickwall_bandpass", hi - lo, 0.5 * (lo + hi))
        x = chain.weighted
        self._x2 = apply_filter(x, band2)
        self._x1 = x.with_samples(x.samples - self._x2.samples)
        self._plan = chain.plan
        self._rx = scn.rx_config(chain.plan.superposition_offset_hz)
        self._rate = float(scn.config["transmitter"]["rate_baud"])
        self._pulse = scn.pulse()
        self._cache = {}
        self.evaluations = 0

    def _received(self, phi: float):
        from .aggregator import aggregate

        key = float(phi)
        if key not in self._cache:
            plan = self._plan.with_phi(key)
            z1 = receive(aggregate(self._x1, plan), self._rx)
            z2 = receive(aggregate(self._x2, plan), self._rx)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = (z1, z2.samples)
        return self._cache[key]

    def __call__(self, phi: float, alpha: float) -> float:
        self.evaluations += 1
        z1, s2 = self._received(float(phi) % math.pi)
        z = z1.with_samples(z1.samples + alpha * s2)
        rep = recover_symbols(z, self.target, self._rate, self._pulse)
        val = rep.evm_avg_pct
        if self.objective == "min_distance_penalized_evm":
            populated = len(np.unique(rep.decisions))
            val *= self.target.order / max(populated, 1)
        return float(val)


def golden_section(f, a: float, b: float, tol: float = 1e-7, max_iter: int = 40):
    """Minimise a unimodal ``f`` on [a, b]; returns (x, f(x)) for the best point seen."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        for x, fx in ((c, fc), (d, fd)):
            if fx < best[1]:
                best = (x, fx)
    return best


def check_feasible(scn, spec: TuneSpec):
    f1, f2 = scn.config["transmitter"]["formats"]
    fixed = None if spec.alpha_free else spec.alpha_bounds[0]
    sol = solve_for_target(f1, f2, spec.target, fixed, spec.alpha_bounds)
    if sol is None:
        witness = closest_prediction(f1, f2, spec.target, fixed, spec.alpha_bounds)
        raise InfeasibleTargetError(
            f"{f1}+{f2} cannot form {spec.target} with alpha in {spec.alpha_bounds}", witness)
    return sol


def tune(scn, spec: TuneSpec, bench: Optional[CalibrationBench] = None) -> TuneResult:
    """Coarse (phi, alpha) grid, then alternating golden-section refinement.

    Deterministic for a fixed scenario and spec.  The returned optimum is
    never worse than the best coarse grid point.
    """
    check_feasible(scn, spec)
    f = bench or CalibrationBench(scn, spec.target, spec.objective, seed=spec.seed)
    lo, hi = spec.alpha_bounds
    phis = np.arange(spec.phi_grid) * (math.pi / spec.phi_grid)
    alphas = np.linspace(lo, hi, spec.alpha_grid) if spec.alpha_free else np.array([lo])
    grid = np.array([[f(p, a) for a in alphas] for p in phis])
    i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)
    phi, alpha, best = float(phis[i]), float(alphas[j]), float(grid[i, j])
    coarse = best
    dphi = math.pi / spec.phi_grid
    dalpha = (alphas[1] - alphas[0]) if alphas.size > 1 else 0.0

    history = [best]
    converged = spec.refine_iters == 0
    rounds = 0
    for rounds in range(1, spec.refine_iters + 1):
        start = (phi, alpha, best)
        x, fx = golden_section(lambda p: f(p, alpha), phi - dphi, phi + dphi, spec.tol, spec.golden_iters)
        if fx < best:
            phi, best = x % math.pi, fx
        if spec.alpha_free:
            a0, a1 = max(lo, alpha - dalpha), min(hi, alpha + dalpha)
            x, fx = golden_section(lambda a: f(phi, a), a0, a1, spec.tol, spec.golden_iters)
            if fx < best:
                alpha, best = x, fx
        history.append(best)
        moved = abs(phi - start[0]) + abs(alpha - start[1])
        if start[2] - best <= 1e-9 * max(start[2], 1e-12) or moved <= spec.tol:
            converged = True
            break
        # Later rounds search a tighter bracket around the moving optimum.
        dphi = max(dphi * 0.25, 10 * spec.tol)
        dalpha = max(dalpha * 0.25, 10 * spec.tol)

    landscape = {
        "phi_rad": phis.tolist(),
        "alpha": alphas.tolist(),
        "evm_pct": grid.tolist(),
    }
    return TuneResult(spec.target, phi, alpha, best, coarse, landscape, converged, rounds, history,
                      f.evaluations)


def _row(param, d, plus, minus, base, dmin) -> dict:
    rise = 0.5 * (plus + minus) - base
    return {"param": param, "delta": d, "evm_plus_pct": plus, "evm_minus_pct": minus,
            "rise_per_unit": rise / d if d else 0.0, "rise_per_dmin": rise / dmin}


def sensitivity(scn, at: TuneResult, deltas_deg=(0.0, 1.0, 2.0, 5.0), deltas_alpha_pct=(0.0, 1.0, 2.0, 5.0),
                bench: Optional[CalibrationBench] = None) -> dict:
    """EVM around the optimum for RF-phase and weight errors.

    Alpha deltas are relative (percent of alpha*); both directions are
    evaluated and the mean rise per unit is reported.  ``rise_per_dmin``
    divides the mean rise by the target's minimum distance (unit-power
    constellation), which is what decides how close it comes to errors.
    """
    f = bench or CalibrationBench(scn, at.target)
    base = f(at.phi_star_rad, at.alpha_star)
    dmin = get_format(at.target).min_distance
    rows = []
    for d in deltas_deg:
        r = math.radians(d)
        plus, minus = f(at.phi_star_rad + r, at.alpha_star), f(at.phi_star_rad - r, at.alpha_star)
        rows.append(_row("phi_deg", d, plus, minus, base, dmin))
    for d in deltas_alpha_pct:
        ap = min(at.alpha_star * (1 + d / 100), 1.0)
        am = at.alpha_star * (1 - d / 100)
        plus, minus = f(at.phi_star_rad, ap), f(at.phi_star_rad, am)
        rows.append(_row("alpha_pct", d, plus, minus, base, dmin))
    return {"target": at.target, "evm_at_opt_pct": base, "rows": rows}
