"""Joint sparsity-and-position optimization of a sliding uniform sparse array."""

from __future__ import annotations

import numpy as np

from ..beamforming import gma_rate
from .report import OptReport

__all__ = ["gma_opt"]


def gma_opt(user_scenarios, aperture: float, eta_max: int, n_antennas: int, powers,
            wavelength: float, n_grid: int = 96, max_rounds: int = 10) -> OptReport:
    """Alternate 1D line searches on the array anchor x and the sparsity level eta.

    eta is the integer spacing multiple of lambda/2 of the uniform sparse
    array; only levels whose aperture fits the region are considered.  Stops
    when neither variable improves the multiple-access rate.
    """
    if eta_max < 1:
        raise ValueError("eta_max must be >= 1")

    def span(eta):
        return (n_antennas - 1) * eta * wavelength / 2.0

    feasible_etas = [e for e in range(1, eta_max + 1) if span(e) <= aperture + 1e-12]
    if not feasible_etas:
        raise ValueError("even the dense array does not fit in the region")

    def rate(x, eta):
        return gma_rate(x, eta, user_scenarios, powers, n_antennas, wavelength, aperture)

    eta = feasible_etas[0]
    x = 0.0
    cur = rate(x, eta)
    trace = [cur]
    for _ in range(max_rounds):
        improved = False
        # sparsity search at fixed anchor (re-anchor if the array would overflow)
        for e in feasible_etas:
            xe = min(x, aperture - span(e))
            v = rate(xe, e)
            if v > cur + 1e-12:
                eta, x, cur = e, xe, v
                improved = True
        # anchor line search at fixed sparsity
        hi = aperture - span(eta)
        for c in np.linspace(0.0, hi, n_grid):
            v = rate(c, eta)
            if v > cur + 1e-12:
                x, cur = float(c), v
                improved = True
        trace.append(cur)
        if not improved:
            break
    return OptReport(best_placement=np.array([x]), best_score=cur, iterations=len(trace) - 1,
                     trace=trace, extra={"eta": eta, "anchor": x})
