"""Antenna-position optimization for MIMO capacity, multiuser rates, and ISAC trade-offs.

All optimizers share one primitive: alternating per-antenna moves using
projected finite-difference gradient steps with backtracking, where a move is
accepted only if it is feasible (region membership plus minimum spacing) and
improves the objective.  Objective traces are therefore monotone by
construction.  Statistical-CSI objectives average the metric over a fixed,
caller-supplied ensemble of channel draws.
"""

from __future__ import annotations

import numpy as np

from ..beamforming import (mimo_capacity, mmse_combiner, multiuser_channels, user_sinr_and_rates,
                           water_filling, zf_combiner)
from ..channel import Scenario, channel_mimo
from ..errors import InfeasibleError
from ..geometry import MoveRegion
from .report import OptReport
from .sensing import crb_metric_2d, sensing_2d_ao

__all__ = ["mimo_position_ao", "multiuser_position_opt", "isac_constrained_opt"]


def _pairwise_ok(pos: np.ndarray, d_min: float) -> bool:
    if len(pos) < 2 or d_min <= 0:
        return True
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    return bool(d.min() >= d_min * (1 - 1e-12))


def _sweep_antennas(positions: np.ndarray, region: MoveRegion, objective,
                    fd_step: float, step0: float) -> tuple[np.ndarray, float, bool]:
    """One AO sweep: projected finite-difference gradient step per antenna.

    objective(positions) -> float to maximize; returns (positions, value,
    improved_any).
    """
    pos = positions.copy()
    cur = objective(pos)
    improved_any = False
    for i in range(len(pos)):
        grad = np.zeros(3)
        for d in range(3):
            e = np.zeros(3)
            e[d] = fd_step
            hi = region.clip(pos[i] + e)
            lo = region.clip(pos[i] - e)
            denom = hi[d] - lo[d]
            if denom <= 0:
                continue
            # derivative probes ignore the spacing constraint; only accepted
            # moves are feasibility-gated
            p_hi = pos.copy()
            p_hi[i] = hi
            p_lo = pos.copy()
            p_lo[i] = lo
            va = objective(p_hi)
            vb = objective(p_lo)
            if not np.isfinite(va) or not np.isfinite(vb):
                continue
            grad[d] = (va - vb) / denom
        gn = np.linalg.norm(grad)
        if gn == 0:
            continue
        s = step0
        for _ in range(20):
            cand = pos.copy()
            cand[i] = region.clip(pos[i] + s * grad / gn)
            if _pairwise_ok(cand, region.d_min):
                v = objective(cand)
                if v > cur + 1e-12:
                    pos, cur = cand, v
                    improved_any = True
                    break
            s *= 0.5
    return pos, cur, improved_any


def _as_ensemble(scenario) -> list[Scenario]:
    return list(scenario) if isinstance(scenario, (list, tuple)) else [scenario]


def mimo_position_ao(scenario, tx_region: MoveRegion, rx_region: MoveRegion,
                     init_tx: np.ndarray, init_rx: np.ndarray, power: float, sigma2: float,
                     mode: str = "instantaneous", max_sweeps: int = 30,
                     fd_step: float = 5e-3, step0: float = 0.25) -> OptReport:
    """Alternating Tx/Rx antenna-position optimization of MIMO capacity.

    mode 'instantaneous' uses the single scenario; mode 'statistical'
    averages capacity over the supplied scenario ensemble (a fixed list of
    channel draws), which keeps the objective deterministic.  fd_step and
    step0 are in wavelength units and are scaled by the scenario wavelength.
    """
    ensemble = _as_ensemble(scenario)
    if mode == "instantaneous":
        ensemble = ensemble[:1]
    elif mode != "statistical":
        raise ValueError(f"unknown mode {mode!r}")
    lam = ensemble[0].wavelength
    tx = np.asarray(init_tx, dtype=float).reshape(-1, 3).copy()
    rx = np.asarray(init_rx, dtype=float).reshape(-1, 3).copy()
    for p, reg, name in ((tx, tx_region, "tx"), (rx, rx_region, "rx")):
        if not all(reg.contains(q, tol=1e-6) for q in p) or not _pairwise_ok(p, reg.d_min):
            raise InfeasibleError(f"initial {name} placement is infeasible")

    def capacity(t, r):
        return float(np.mean([mimo_capacity(channel_mimo(t, r, sc), power, sigma2)
                              for sc in ensemble]))

    cur = capacity(tx, rx)
    trace = [cur]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        tx, _, imp_t = _sweep_antennas(tx, tx_region, lambda t: capacity(t, rx),
                                       fd_step * lam, step0 * lam)
        rx, cur2, imp_r = _sweep_antennas(rx, rx_region, lambda r: capacity(tx, r),
                                          fd_step * lam, step0 * lam)
        cur = max(cur, cur2)
        trace.append(cur)
        if not (imp_t or imp_r):
            break
    return OptReport(best_placement=np.vstack([tx, rx]), best_score=cur, iterations=sweeps,
                     trace=trace, extra={"tx_positions": tx, "rx_positions": rx})


def _allocate_and_rate(h: np.ndarray, combiner: str, utility: str, budget: str,
                       power: float, sigma2: float):
    """Combiner weights, power allocation, and per-user rates for one placement."""
    n, k = h.shape
    if combiner == "zf":
        w = zf_combiner(h)
        wn2 = np.linalg.norm(w, axis=0) ** 2
        gains = 1.0 / (wn2 * sigma2)  # SINR per unit power, interference-free
        if budget == "max":
            p = np.full(k, power)
        elif utility == "sum":
            p = water_filling(np.sqrt(sigma2 * gains), power, sigma2)
        else:  # equalize SINRs under a sum budget
            inv = 1.0 / gains
            p = power * inv / inv.sum()
    elif combiner == "mmse":
        p = np.full(k, power if budget == "max" else power / k)
        w = mmse_combiner(h, p, sigma2)
    else:
        raise ValueError(f"unknown combiner {combiner!r}")
    _, rates = user_sinr_and_rates(h, w, p, sigma2)
    return w, p, rates


def multiuser_position_opt(user_scenarios, bs_region: MoveRegion, init_rx: np.ndarray,
                           power: float, sigma2: float, combiner: str = "zf",
                           utility: str = "sum", budget: str = "sum", mode: str = "rate",
                           eta: float | None = None, ensembles=None, max_sweeps: int = 20,
                           fd_step: float = 5e-3, step0: float = 0.25,
                           bisection_iters: int = 12) -> OptReport:
    """Base-station antenna placement for multiuser uplink rate or power objectives.

    Rate-centric mode maximizes the rate utility ('sum' or 'min') under the
    power budget ('sum' or 'max' over users).  Power-centric mode finds the
    smallest budget whose rate-centric optimum still meets the target utility
    `eta`, by bisection around the rate-centric solver.  `ensembles`, when
    given, is a list of per-draw user-scenario lists for statistical
    averaging.
    """
    draws = ensembles if ensembles is not None else [user_scenarios]
    lam = draws[0][0].wavelength
    rx0 = np.asarray(init_rx, dtype=float).reshape(-1, 3)
    if not all(bs_region.contains(q, tol=1e-6) for q in rx0) or not _pairwise_ok(rx0, bs_region.d_min):
        raise InfeasibleError("initial base-station placement is infeasible")

    def score_at(positions, budget_power):
        vals = []
        for users in draws:
            h = multiuser_channels(positions, users)
            try:
                _, _, rates = _allocate_and_rate(h, combiner, utility, budget,
                                                 budget_power, sigma2)
            except (ValueError, np.linalg.LinAlgError):
                return -np.inf
            vals.append(np.sum(rates) if utility == "sum" else np.min(rates))
        return float(np.mean(vals))

    def solve_rate(budget_power, start):
        pos = start.copy()
        cur = score_at(pos, budget_power)
        trace = [cur]
        for _ in range(max_sweeps):
            pos, cur2, improved = _sweep_antennas(
                pos, bs_region, lambda q: score_at(q, budget_power), fd_step * lam, step0 * lam)
            cur = max(cur, cur2)
            trace.append(cur)
            if not improved:
                break
        return pos, cur, trace

    if mode == "rate":
        pos, cur, trace = solve_rate(power, rx0)
        h = multiuser_channels(pos, draws[0])
        w, p, rates = _allocate_and_rate(h, combiner, utility, budget, power, sigma2)
        return OptReport(best_placement=pos, best_score=cur, iterations=len(trace) - 1,
                         trace=trace, extra={"weights": w, "powers": p, "rates": rates})
    if mode != "power":
        raise ValueError(f"unknown mode {mode!r}")
    if eta is None:
        raise ValueError("power-centric mode needs a rate target eta")

    p_hi = power
    pos, val, _ = solve_rate(p_hi, rx0)
    grow = 0
    while val < eta and grow < 12:
        p_hi *= 2.0
        pos, val, _ = solve_rate(p_hi, pos)
        grow += 1
    if val < eta:
        raise InfeasibleError(f"rate target {eta} unreachable even at power {p_hi}")
    p_lo, best_pos, best_p = 0.0, pos, p_hi
    for _ in range(bisection_iters):
        mid = 0.5 * (p_lo + p_hi)
        pos_mid, val_mid, _ = solve_rate(mid, best_pos)
        if val_mid >= eta:
            p_hi, best_pos, best_p = mid, pos_mid, mid
        else:
            p_lo = mid
    h = multiuser_channels(best_pos, draws[0])
    w, p, rates = _allocate_and_rate(h, combiner, utility, budget, best_p, sigma2)
    return OptReport(best_placement=best_pos, best_score=best_p, iterations=bisection_iters,
                     trace=[best_p], extra={"weights": w, "powers": p, "rates": rates,
                                            "achieved_utility": float(np.sum(rates) if utility == "sum"
                                                                      else np.min(rates))})


def isac_constrained_opt(scenario, tx_positions: np.ndarray, rx_region: MoveRegion,
                         init_rx: np.ndarray, power: float, sigma2: float,
                         mode: str = "com", threshold: float = np.inf,
                         crb_coef: float = 1.0, crb_metric: str = "max",
                         max_sweeps: int = 30, fd_step: float = 5e-3,
                         step0: float = 0.25) -> OptReport:
    """Receive-array placement trading MIMO capacity against the sensing CRB.

    mode 'com': maximize (ensemble-average) capacity subject to
    crb(rx) <= threshold; mode 'sen': minimize the CRB subject to
    capacity >= threshold.  Feasibility is established first by solving the
    unconstrained dual objective; sweep moves violating the constraint are
    rejected, so the constrained trace stays monotone and feasible.
    """
    ensemble = _as_ensemble(scenario)
    lam = ensemble[0].wavelength
    tx = np.asarray(tx_positions, dtype=float).reshape(-1, 3)

    def capacity(rx):
        return float(np.mean([mimo_capacity(channel_mimo(tx, rx, sc), power, sigma2)
                              for sc in ensemble]))

    def crb(rx):
        return crb_metric_2d(np.asarray(rx)[:, :2], crb_metric, crb_coef)

    rx = np.asarray(init_rx, dtype=float).reshape(-1, 3).copy()
    n_r = len(rx)
    if rx_region.kind != "box":
        raise ValueError("ISAC placement expects a box region")
    extents2 = rx_region.extents[:2]

    if mode == "com":
        crb_opt = sensing_2d_ao(n_r, extents2, rx_region.d_min, metric=crb_metric,
                                coef=crb_coef)
        if crb_opt.best_score > threshold:
            raise InfeasibleError(
                f"CRB threshold {threshold:.3g} below the best achievable {crb_opt.best_score:.3g}")
        if crb(rx) > threshold:  # fall back to the sensing-optimal placement
            rx = np.column_stack([crb_opt.best_placement, np.zeros(n_r)])
        objective, constraint = capacity, lambda q: crb(q) <= threshold
        sense = 1.0
    elif mode == "sen":
        unconstrained, best_cap = _best_capacity(ensemble, tx, rx_region, rx, power, sigma2,
                                                 max_sweeps, fd_step * lam, step0 * lam)
        if best_cap < threshold:
            raise InfeasibleError(f"capacity target {threshold:.3g} unreachable")
        rx = unconstrained
        objective, constraint = lambda q: -crb(q), lambda q: capacity(q) >= threshold
        sense = -1.0
    else:
        raise ValueError(f"unknown mode {mode!r}")

    def guarded(q):
        return objective(q) if constraint(q) else -np.inf

    cur = guarded(rx)
    trace = [sense * cur]
    for _ in range(max_sweeps):
        rx, cur2, improved = _sweep_antennas(rx, rx_region, guarded, fd_step * lam, step0 * lam)
        cur = max(cur, cur2)
        trace.append(sense * cur)
        if not improved:
            break
    return OptReport(best_placement=rx, best_score=sense * cur, iterations=len(trace) - 1,
                     trace=trace, extra={"capacity": capacity(rx), "crb": crb(rx)})


def _best_capacity(ensemble, tx, rx_region, rx0, power, sigma2, max_sweeps, fd, st):
    def capacity(rx):
        return float(np.mean([mimo_capacity(channel_mimo(tx, rx, sc), power, sigma2)
                              for sc in ensemble]))

    rx = rx0.copy()
    cur = capacity(rx)
    for _ in range(max_sweeps):
        rx, cur2, improved = _sweep_antennas(rx, rx_region, capacity, fd, st)
        cur = max(cur, cur2)
        if not improved:
            break
    return rx, cur
