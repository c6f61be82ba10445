"""Array-geometry beam synthesis: null steering, grating-lobe multibeam, wide beams.

The closed-form constructions exploit two geometric facts about linear
arrays: steering-vector orthogonality (full main-lobe gain with exact nulls
using the matched weight vector) and the grating-lobe condition (full gain
replicated at several angles).  Where no construction exists, alternating
optimization of positions and weights takes over.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from ..beamforming import beam_gain, mrt, steering_vector
from .report import NotConstructible, OptReport

__all__ = [
    "svo_null_apv",
    "grating_lobe_apv",
    "multibeam_ao",
    "widebeam_ao",
    "fpa_ula",
    "max_min_awv",
]

_RATIONAL_TOL = 1e-9
_MAX_DENOMINATOR = 64


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _groupings(primes: list[int], k: int) -> list[tuple[int, ...]]:
    """Distinct ways to multiply the prime multiset into exactly k factors >= 2."""
    if k == 1:
        return [(int(np.prod(primes)),)]
    seen = set()

    def rec(rem: tuple[int, ...], groups: tuple[int, ...]):
        if not rem:
            if len(groups) == k and all(g > 1 for g in groups):
                seen.add(tuple(sorted(groups)))
            return
        if len(groups) > k:
            return
        p = rem[0]
        rest = rem[1:]
        for i in range(len(groups)):
            rec(rest, groups[:i] + (groups[i] * p,) + groups[i + 1:])
        if len(groups) < k:
            rec(rest, groups + (p,))

    rec(tuple(primes), ())
    return [g for g in seen]


def fpa_ula(n: int, wavelength: float, spacing: float | None = None) -> np.ndarray:
    """Fixed half-wavelength uniform linear array used as the baseline geometry."""
    d = wavelength / 2.0 if spacing is None else spacing
    return np.arange(n) * d


def svo_null_apv(theta0: float, null_angles, n: int, aperture: float, d_min: float,
                 wavelength: float):
    """Linear array achieving gain N at theta0 with exact nulls using the matched weight.

    Sequentially builds nested blocks: the array is the sum set of K scaled
    lattices, one per null, each contributing a vanishing geometric sum at
    its null angle.  Requires the null count not to exceed the number of
    prime factors of N (with multiplicity); returns NotConstructible when no
    feasible geometry exists.
    """
    nulls = np.atleast_1d(np.asarray(null_angles, dtype=float))
    if n < 2:
        return NotConstructible("need at least two antennas")
    deltas = np.cos(nulls) - math.cos(theta0)
    deltas = np.array(sorted(set(np.round(deltas, 15))))
    if np.any(np.abs(deltas) < 1e-12):
        return NotConstructible("a null direction coincides with the main-beam direction")
    k = len(deltas)
    primes = _prime_factors(n)
    if k > len(primes):
        return NotConstructible(
            f"{k} nulls exceed the prime-factorization threshold of N={n} ({len(primes)} factors)")

    best = None
    for grouping in _groupings(primes, k):
        for perm in set(itertools.permutations(grouping)):
            pos = _svo_try(deltas, perm, aperture, d_min, wavelength)
            if pos is not None and (best is None or pos[-1] < best[-1]):
                best = pos
    if best is None:
        return NotConstructible("no feasible geometry fits the region at the required spacing")
    return best


def _svo_try(deltas, factors, aperture, d_min, wavelength):
    """Build the nested-lattice array for one factor assignment; None if it does not fit."""
    order = np.argsort([wavelength / (f * abs(dl)) for f, dl in zip(factors, deltas)])
    positions = np.array([0.0])
    span = 0.0
    for idx in order:
        f = factors[idx]
        dl = abs(deltas[idx])
        need = span + d_min
        # spacing family: d = lam * p / (f * |delta|), p a positive integer not divisible by f
        p = max(1, math.ceil(need * f * dl / wavelength - 1e-12))
        while p % f == 0:
            p += 1
        d = wavelength * p / (f * dl)
        positions = (positions[None, :] + d * np.arange(f)[:, None]).ravel()
        span = span + d * (f - 1)
        if span > aperture + 1e-9:
            return None
    return np.sort(positions)


def grating_lobe_apv(theta0: float, desired_angles, n: int, aperture: float, d_min: float,
                     wavelength: float):
    """Equally spaced array replicating the full gain N at every desired angle.

    Exists when every cos(theta_k) - cos(theta0) is rational (detected by
    continued fractions with denominators up to 64, tolerance 1e-9): the
    spacing is a common period of all the difference frequencies.
    """
    desired = np.atleast_1d(np.asarray(desired_angles, dtype=float))
    deltas = [float(math.cos(t) - math.cos(theta0)) for t in desired]
    deltas = [d for d in deltas if abs(d) > 1e-12]
    if not deltas:
        # only the main direction requested: any valid uniform array works
        d = max(d_min, wavelength / 2.0)
        if (n - 1) * d > aperture + 1e-9:
            return NotConstructible("region too small for the array at minimum spacing")
        return np.arange(n) * d

    fracs = []
    for dl in deltas:
        fr = Fraction(dl).limit_denominator(_MAX_DENOMINATOR)
        if fr == 0 or abs(float(fr) - dl) > _RATIONAL_TOL:
            return NotConstructible(
                f"difference frequency {dl:.6g} is not rational within tolerance")
        fracs.append(fr)
    num_gcd = math.gcd(*[abs(f.numerator) for f in fracs])
    den_lcm = math.lcm(*[f.denominator for f in fracs])
    base = wavelength * den_lcm / num_gcd
    mult = max(1, math.ceil(d_min / base - 1e-12))
    d = base * mult
    if (n - 1) * d > aperture + 1e-9:
        return NotConstructible("region too small for the grating spacing")
    return np.arange(n) * d


def max_min_awv(x, thetas, wavelength: float, analog: bool = False, seed: int = 0,
                w0: np.ndarray | None = None, n_iter: int = 300) -> tuple[np.ndarray, float]:
    """Weight vector maximizing the minimum beam gain over the given angles, ||w|| = 1.

    Multi-start projected ascent on the min-gain objective; with analog=True
    the weights are constrained to constant modulus 1/sqrt(N).  Returns
    (weights, min_gain).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = len(x)
    a = np.stack([steering_vector(x, t, wavelength) for t in np.atleast_1d(thetas)])  # (K, N)
    rng = np.random.default_rng(seed)

    def project(w):
        if analog:
            ph = np.angle(w)
            return np.exp(1j * ph) / math.sqrt(n)
        return w / np.linalg.norm(w)

    def score(w):
        return float(np.min(np.abs(a @ w.conj()) ** 2))

    k = a.shape[0]
    pick = range(k) if k <= 12 else np.linspace(0, k - 1, 12).astype(int)
    starts = [mrt(a[i]) for i in pick]
    aligned = mrt(np.sum(a * np.exp(-1j * np.angle(a[:, :1])), axis=0))
    starts.append(aligned)
    if w0 is not None:
        starts.append(np.asarray(w0, dtype=complex).reshape(-1))
    for _ in range(3):
        starts.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))

    best_w, best_v = None, -1.0
    for w in starts:
        w = project(w)
        cur = score(w)
        step = 0.5
        for _ in range(n_iter):
            g = a @ w.conj()
            kmin = int(np.argmin(np.abs(g) ** 2))
            grad = a[kmin] * np.conj(g[kmin])  # ascent direction of the active gain
            improved = False
            s = step
            for _ in range(20):
                cand = project(w + s * grad)
                v = score(cand)
                if v > cur + 1e-15:
                    w, cur, improved = cand, v, True
                    break
                s *= 0.5
            if improved:
                step = min(1.0, s * 2.0)
            else:
                break
        if cur > best_v:
            best_w, best_v = w, cur
    return best_w, best_v


def _uniform_spacing_starts(n, aperture, d_min, wavelength):
    """Uniform-array starting placements over a swept spacing family.

    Collective geometry changes (scaling the common spacing) are moves the
    per-antenna coordinate sweep cannot make, so they enter as starts.
    """
    starts = []
    ula = fpa_ula(n, wavelength, max(d_min, wavelength / 2.0))
    if ula[-1] <= aperture:
        starts.append(ula)
    d_lo = max(d_min, wavelength / 2.0)
    d_hi = aperture / max(n - 1, 1)
    if d_hi > d_lo:
        step = max(wavelength / 10.0, (d_hi - d_lo) / 32.0)
        for d in np.arange(d_lo, d_hi + step / 2, step):
            starts.append(np.arange(n) * min(d, d_hi))
    return starts


def _repair_spacing(x, aperture, d_min):
    """Sort and push positions apart left-to-right to restore minimum gaps."""
    x = np.sort(np.clip(np.asarray(x, dtype=float), 0.0, aperture))
    for i in range(1, len(x)):
        if x[i] - x[i - 1] < d_min:
            x[i] = x[i - 1] + d_min
    if len(x) and x[-1] > aperture:
        x -= x[-1] - aperture
    if x[0] < -1e-9 or (len(x) > 1 and np.min(np.diff(x)) < d_min - 1e-9):
        return None
    return x


def _position_sweep(x, thetas, w, wavelength, aperture, d_min, n_grid: int = 48):
    """One coordinate-descent sweep of antenna positions against a fixed weight vector."""
    x = x.copy()
    a_all = np.atleast_1d(thetas)

    def score(xx):
        return min(beam_gain(xx, w, t, wavelength) for t in a_all)

    cur = score(x)
    for i in range(len(x)):
        lo = x[i - 1] + d_min if i > 0 else 0.0
        hi = x[i + 1] - d_min if i < len(x) - 1 else aperture
        if hi <= lo:
            continue
        cand = np.linspace(lo, hi, n_grid)
        best_xi, best_v = x[i], cur
        for c in cand:
            x[i] = c
            v = score(x)
            if v > best_v + 1e-15:
                best_xi, best_v = c, v
        x[i] = best_xi
        cur = best_v
    return x, cur


def multibeam_ao(thetas, n: int, aperture: float, d_min: float, wavelength: float,
                 analog: bool = False, seed: int = 0, max_sweeps: int = 12) -> OptReport:
    """Alternating position/weight optimization of the max-min gain over given directions.

    Starts include the half-wavelength uniform array and, when every angle
    difference is rational, the grating-lobe construction, so the result is
    never worse than those geometries under the same weight solver.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    rng = np.random.default_rng(seed)
    starts = _uniform_spacing_starts(n, aperture, d_min, wavelength)
    if len(thetas) > 1:
        built = grating_lobe_apv(thetas[0], thetas[1:], n, aperture, d_min, wavelength)
        if not isinstance(built, NotConstructible):
            starts.append(built)
    for _ in range(2):
        guess = _repair_spacing(np.sort(rng.uniform(0, aperture, n)), aperture, d_min)
        if guess is not None:
            starts.append(guess)
    if not starts:
        raise ValueError("no feasible starting placement fits the region")

    candidates = _ao_candidates(starts, thetas, wavelength, aperture, d_min,
                                analog, seed, max_sweeps)
    best = max(candidates, key=lambda c: c[0])
    cur, x, w, trace = best
    return OptReport(best_placement=np.asarray(x, dtype=float), best_score=cur,
                     iterations=len(trace), trace=trace, extra={"weights": w})


def _ao_candidates(starts, thetas, wavelength, aperture, d_min, analog, seed, max_sweeps,
                   n_refine: int = 3):
    """Run the position/weight alternation from the most promising starts."""
    scored = []
    for x0 in starts:
        w, v = max_min_awv(x0, thetas, wavelength, analog=analog, seed=seed)
        scored.append((v, x0, w))
    order = sorted(range(len(scored)), key=lambda i: -scored[i][0])

    out = []
    for i in order[:n_refine]:
        cur, x, w = scored[i]
        trace = [cur]
        for _ in range(max_sweeps):
            x_new, _ = _position_sweep(x, thetas, w, wavelength, aperture, d_min)
            w_new, v_new = max_min_awv(x_new, thetas, wavelength, analog=analog,
                                       seed=seed, w0=w)
            if v_new > cur + 1e-12:
                x, w, cur = x_new, w_new, v_new
                trace.append(cur)
            else:
                break
        out.append((cur, x, w, trace))
    for v, x0, w in (scored[i] for i in order[n_refine:]):
        out.append((v, x0, w, [v]))
    return out


def widebeam_ao(theta_min: float, theta_max: float, n_subregions: int, n: int,
                aperture: float, d_min: float, wavelength: float, seed: int = 0,
                max_sweeps: int = 12) -> OptReport:
    """Uniform coverage of a continuous angular region with analog weights.

    The region is discretized into subregion centers for optimization; the
    reported minimum gain is re-evaluated on a verification grid four times
    finer.
    """
    if not theta_min < theta_max:
        if theta_min == theta_max:
            x = fpa_ula(n, wavelength, max(d_min, wavelength / 2.0))
            w = mrt(steering_vector(x, theta_min, wavelength))
            g = beam_gain(x, w, theta_min, wavelength)
            return OptReport(best_placement=x, best_score=g, iterations=0, trace=[g],
                             extra={"weights": w, "verified_min_gain": g})
        raise ValueError("theta_min must not exceed theta_max")
    centers = theta_min + (np.arange(n_subregions) + 0.5) * (theta_max - theta_min) / n_subregions
    fine = theta_min + (np.arange(4 * n_subregions) + 0.5) \
        * (theta_max - theta_min) / (4 * n_subregions)

    rng = np.random.default_rng(seed)
    starts = _uniform_spacing_starts(n, aperture, d_min, wavelength)
    for _ in range(2):
        guess = _repair_spacing(np.sort(rng.uniform(0, aperture, n)), aperture, d_min)
        if guess is not None:
            starts.append(guess)

    candidates = _ao_candidates(starts, centers, wavelength, aperture, d_min,
                                analog=True, seed=seed, max_sweeps=max_sweeps)
    # rank candidates by the finer verification grid, not the optimization grid
    best = None
    for cur, x, w, trace in candidates:
        verified = min(beam_gain(x, w, t, wavelength) for t in fine)
        if best is None or verified > best.extra["verified_min_gain"]:
            best = OptReport(best_placement=np.asarray(x, dtype=float), best_score=cur,
                             iterations=len(trace), trace=trace,
                             extra={"weights": w, "verified_min_gain": verified})
    return best
