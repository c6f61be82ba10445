"""Channel acquisition from sparse pilot measurements.

Model-based path: orthogonal matching pursuit over a grid of candidate
spatial frequencies recovers each side's wave vectors (successively or
jointly), then least squares recovers the path-response matrix; the full
Tx-to-Rx channel mapping is re-synthesized from the recovered information.
A nearest-measured-position baseline provides the model-free alternative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import PathSet, Scenario, channel_mimo, channel_narrowband
from .geometry import MoveRegion

__all__ = [
    "MeasurementSet",
    "FriEstimate",
    "uv_grid",
    "collect_measurements",
    "omp",
    "omp_successive",
    "omp_joint",
    "ls_prm",
    "nearest_measured_reconstruct",
    "reconstruct_mapping",
    "nmse",
    "export_mapping_csv",
    "load_mapping_csv",
    "save_measurements",
    "load_measurements",
]

JOINT_ATOM_CAP = 2 ** 24


@dataclass(frozen=True)
class MeasurementSet:
    """Pilot measurements at visited Tx/Rx position pairs.

    pilots[m] = sqrt(power) * h(tx_positions[m], rx_positions[m]) + noise,
    with noise variance noise_power.  One-side sweeps keep the other side's
    position constant across rows.
    """

    tx_positions: np.ndarray
    rx_positions: np.ndarray
    pilots: np.ndarray
    power: float
    noise_power: float

    def __post_init__(self):
        t = np.asarray(self.tx_positions, dtype=float).reshape(-1, 3)
        r = np.asarray(self.rx_positions, dtype=float).reshape(-1, 3)
        y = np.asarray(self.pilots, dtype=complex).reshape(-1)
        if not (len(t) == len(r) == len(y)):
            raise ValueError("positions and pilots must have matching counts")
        object.__setattr__(self, "tx_positions", t)
        object.__setattr__(self, "rx_positions", r)
        object.__setattr__(self, "pilots", y)

    def __len__(self) -> int:
        return len(self.pilots)


@dataclass
class FriEstimate:
    """Recovered field-response information: per-side spatial frequencies plus the PRM."""

    tx_uv: np.ndarray
    rx_uv: np.ndarray
    prm: np.ndarray
    residual: float = 0.0
    converged: bool = True
    rank_deficient: bool = False
    poor_fit: bool = False

    def __post_init__(self):
        self.tx_uv = np.asarray(self.tx_uv, dtype=float).reshape(-1, 2)
        self.rx_uv = np.asarray(self.rx_uv, dtype=float).reshape(-1, 2)
        self.prm = np.asarray(self.prm, dtype=complex)
        if np.any(np.abs(self.tx_uv) > 1 + 1e-9) or np.any(np.abs(self.rx_uv) > 1 + 1e-9):
            raise ValueError("spatial frequencies must lie in [-1, 1]")
        if self.prm.shape != (len(self.rx_uv), len(self.tx_uv)):
            raise ValueError("prm shape must match recovered path counts")


def uv_grid(g: int) -> np.ndarray:
    """Quantized spatial-frequency axis: -1 + 2i/G for i = 1..G."""
    return -1.0 + 2.0 * np.arange(1, g + 1) / g


def collect_measurements(scenario: Scenario, tx_region: MoveRegion, rx_region: MoveRegion,
                         schedule: str, count: int, power: float, noise_power: float,
                         seed) -> MeasurementSet:
    """Simulate pilot training over `count` positions drawn uniformly in the regions.

    schedule 'tx-sweep' moves the Tx antenna with the Rx fixed at its
    reference point; 'rx-sweep' is symmetric; 'paired' moves both.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if schedule == "tx-sweep":
        t = tx_region.sample(rng, count)
        r = np.zeros((count, 3))
    elif schedule == "rx-sweep":
        t = np.zeros((count, 3))
        r = rx_region.sample(rng, count)
    elif schedule == "paired":
        t = tx_region.sample(rng, count)
        r = rx_region.sample(rng, count)
    else:
        raise ValueError(f"unknown schedule {schedule!r}")
    h = np.array([channel_narrowband(t[m], r[m], scenario) for m in range(count)])
    y = math.sqrt(power) * h
    if noise_power > 0:
        y = y + math.sqrt(noise_power / 2.0) * (rng.standard_normal(count)
                                                + 1j * rng.standard_normal(count))
    return MeasurementSet(t, r, y, power, noise_power)


def _tx_atoms(uv: np.ndarray, positions: np.ndarray, wavelength: float) -> np.ndarray:
    """(n_atoms, M) entries exp(+j 2 pi/lambda uv . t_m)."""
    return np.exp(2j * np.pi / wavelength * uv @ positions[:, :2].T)


def _rx_atoms(uv: np.ndarray, positions: np.ndarray, wavelength: float) -> np.ndarray:
    """(n_atoms, M) entries exp(-j 2 pi/lambda uv . r_m): the receive side is conjugated."""
    return np.exp(-2j * np.pi / wavelength * uv @ positions[:, :2].T)


def omp(dictionary: np.ndarray, y: np.ndarray, n_atoms: int, noise_power: float = 0.0):
    """Orthogonal matching pursuit on an (M x D) dictionary.

    Stops at n_atoms atoms or when the residual drops below
    1.1 * sqrt(M * noise_power); stagnation (no correlation left) stops early
    with converged=False.  Ties in the correlation argmax take the lowest
    atom index.  Returns (indices, coefficients, residual_norm, converged).
    """
    a = np.asarray(dictionary, dtype=complex)
    y = np.asarray(y, dtype=complex).reshape(-1)
    m = len(y)
    stop = 1.1 * math.sqrt(m * noise_power)
    res = y.copy()
    chosen: list[int] = []
    converged = True
    coef = np.zeros(0, dtype=complex)
    for _ in range(n_atoms):
        if np.linalg.norm(res) <= max(stop, 1e-12 * np.linalg.norm(y)):
            break
        corr = np.abs(a.conj().T @ res)
        corr[chosen] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-12 * np.linalg.norm(y) * math.sqrt(m):
            converged = False
            break
        chosen.append(j)
        sub = a[:, chosen]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        res = y - sub @ coef
    if len(chosen) < n_atoms and converged and np.linalg.norm(res) > max(stop, 1e-12):
        converged = False
    return np.array(chosen, dtype=int), coef, float(np.linalg.norm(res)), converged


def _side_recovery(ms: MeasurementSet, side: str, g: int, n_paths: int, wavelength: float):
    grid = uv_grid(g)
    uu, vv = np.meshgrid(grid, grid, indexing="ij")  # flat index = u-index + G * v-index
    uv = np.column_stack([uu.ravel(order="F"), vv.ravel(order="F")])
    if side == "tx":
        atoms = _tx_atoms(uv, ms.tx_positions, wavelength)
    else:
        atoms = _rx_atoms(uv, ms.rx_positions, wavelength)
    idx, coef, _, ok = omp(atoms.T, ms.pilots, n_paths, ms.noise_power)
    return uv[idx], coef, ok


def omp_successive(ms_tx: MeasurementSet, ms_rx: MeasurementSet, g: int,
                   n_tx_paths: int, n_rx_paths: int, wavelength: float) -> FriEstimate:
    """Two per-side sparse recoveries followed by a least-squares PRM fit.

    ms_tx must be a Tx sweep (Rx fixed) and ms_rx an Rx sweep (Tx fixed).
    One-side sweeps only observe row/column aggregates of a general PRM, so
    with equal path counts the geometric (diagonal) model is assumed: the
    per-side recoveries are paired by coefficient consistency (an assignment
    problem) and the diagonal is re-fit by LS over both pilot sets.  With
    unequal counts the full-PRM minimum-norm fit is returned and flagged
    rank deficient.
    """
    if len(ms_tx) < n_tx_paths or len(ms_rx) < n_rx_paths:
        raise ValueError("need at least as many measurements per side as paths to recover")
    tx_uv, c_t, ok_t = _side_recovery(ms_tx, "tx", g, n_tx_paths, wavelength)
    rx_uv, c_r, ok_r = _side_recovery(ms_rx, "rx", g, n_rx_paths, wavelength)
    power = ms_tx.power
    noise = max(ms_tx.noise_power, ms_rx.noise_power)

    if len(tx_uv) != len(rx_uv):
        t_all = np.vstack([ms_tx.tx_positions, ms_rx.tx_positions])
        r_all = np.vstack([ms_tx.rx_positions, ms_rx.rx_positions])
        y_all = np.concatenate([ms_tx.pilots, ms_rx.pilots])
        prm, residual, rank_def, poor = ls_prm(t_all, r_all, y_all, tx_uv, rx_uv,
                                               power, noise, wavelength)
        return FriEstimate(tx_uv=tx_uv, rx_uv=rx_uv, prm=prm, residual=residual,
                           converged=ok_t and ok_r, rank_deficient=rank_def, poor_fit=poor)

    from scipy.optimize import linear_sum_assignment

    r_fixed = ms_tx.rx_positions[0]
    t_fixed = ms_rx.tx_positions[0]
    l = len(tx_uv)
    # coefficient of tx atom a: sqrt(P) conj(f_b(r_fixed)) sigma_ab; of rx atom b:
    # sqrt(P) sigma_ab g_a(t_fixed): consistent pairs agree on sigma
    f_at_fixed = _rx_atoms(rx_uv, r_fixed.reshape(1, 3), wavelength)[:, 0]  # conj-phased
    g_at_fixed = _tx_atoms(tx_uv, t_fixed.reshape(1, 3), wavelength)[:, 0]
    s_tx = c_t[:, None] / (math.sqrt(power) * f_at_fixed[None, :])  # (a, b)
    s_rx = c_r[None, :] / (math.sqrt(power) * g_at_fixed[:, None])  # (a, b)
    row, col = linear_sum_assignment(np.abs(s_tx - s_rx) ** 2)
    tx_uv = tx_uv[row]
    rx_uv = rx_uv[col]

    # joint diagonal LS over both sweeps
    g_t = _tx_atoms(tx_uv, ms_tx.tx_positions, wavelength)          # (L, Mt)
    f_t = _rx_atoms(rx_uv, ms_tx.rx_positions, wavelength)          # (L, Mt)
    g_r = _tx_atoms(tx_uv, ms_rx.tx_positions, wavelength)
    f_r = _rx_atoms(rx_uv, ms_rx.rx_positions, wavelength)
    design = math.sqrt(power) * np.vstack([(g_t * f_t).T, (g_r * f_r).T])
    y_all = np.concatenate([ms_tx.pilots, ms_rx.pilots])
    diag, _, rank, _ = np.linalg.lstsq(design, y_all, rcond=None)
    residual = float(np.linalg.norm(y_all - design @ diag))
    dof = max(len(y_all) - l, 1)
    poor = residual ** 2 > dof * noise + 5.0 * noise * math.sqrt(dof) + 1e-12
    return FriEstimate(tx_uv=tx_uv, rx_uv=rx_uv, prm=np.diag(diag), residual=residual,
                       converged=ok_t and ok_r, rank_deficient=rank < l, poor_fit=poor)


def omp_joint(ms: MeasurementSet, g: int, n_paths: int, wavelength: float,
              block: int = 512) -> FriEstimate:
    """Joint recovery of Tx/Rx spatial-frequency pairs and PRM entries.

    The dictionary is the elementwise product of every Tx atom with every Rx
    atom (G^4 combined atoms, generated lazily in blocks); coefficients of
    the selected atoms are the scaled PRM entries.
    """
    if g ** 4 > JOINT_ATOM_CAP:
        raise ValueError(f"G^4 = {g ** 4} atoms exceed the {JOINT_ATOM_CAP} cap; use a smaller grid")
    if len(ms) < n_paths:
        raise ValueError("need at least as many measurements as atoms to recover")
    grid = uv_grid(g)
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    uv = np.column_stack([uu.ravel(order="F"), vv.ravel(order="F")])
    at = _tx_atoms(uv, ms.tx_positions, wavelength)  # (G^2, M)
    ar = _rx_atoms(uv, ms.rx_positions, wavelength)  # (G^2, M)
    m = len(ms)
    y = ms.pilots
    stop = 1.1 * math.sqrt(m * ms.noise_power)
    res = y.copy()
    chosen: list[tuple[int, int]] = []
    cols: list[np.ndarray] = []
    coef = np.zeros(0, dtype=complex)
    converged = True
    n2 = at.shape[0]
    for _ in range(n_paths):
        if np.linalg.norm(res) <= max(stop, 1e-12 * np.linalg.norm(y)):
            break
        best_val, best_pq = -1.0, None
        for p0 in range(0, n2, block):
            p1 = min(p0 + block, n2)
            corr = np.abs((at[p0:p1].conj() * res[None, :]) @ ar.conj().T)
            for (pp, qq) in chosen:
                if p0 <= pp < p1:
                    corr[pp - p0, qq] = -1.0
            flat = int(np.argmax(corr))
            val = float(corr.ravel()[flat])
            if val > best_val + 1e-15:
                best_val = val
                best_pq = (p0 + flat // corr.shape[1], flat % corr.shape[1])
        if best_pq is None or best_val <= 1e-12 * np.linalg.norm(y) * math.sqrt(m):
            converged = False
            break
        chosen.append(best_pq)
        cols.append(at[best_pq[0]] * ar[best_pq[1]])
        sub = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        res = y - sub @ coef
    if not chosen:
        raise ValueError("joint recovery selected no atoms")
    if len(chosen) < n_paths and np.linalg.norm(res) > max(stop, 1e-12):
        converged = False

    tx_idx = sorted({pq[0] for pq in chosen})
    rx_idx = sorted({pq[1] for pq in chosen})
    prm = np.zeros((len(rx_idx), len(tx_idx)), dtype=complex)
    for (pp, qq), c in zip(chosen, coef):
        prm[rx_idx.index(qq), tx_idx.index(pp)] = c / math.sqrt(ms.power)
    return FriEstimate(tx_uv=uv[tx_idx], rx_uv=uv[rx_idx], prm=prm,
                       residual=float(np.linalg.norm(res)), converged=converged)


def ls_prm(tx_positions, rx_positions, pilots, tx_uv, rx_uv, power: float,
           noise_power: float, wavelength: float):
    """Least-squares PRM from pilots given recovered per-side spatial frequencies.

    Builds the stacked linear system pilots = sqrt(P) (g(t_m)^T kron f(r_m)^H)
    vec(PRM) and solves it in the minimum-norm sense.  Returns
    (prm, residual, rank_deficient, poor_fit); poor_fit flags a residual far
    above the noise floor (wrong wave vectors or model mismatch).
    """
    t = np.asarray(tx_positions, dtype=float).reshape(-1, 3)
    r = np.asarray(rx_positions, dtype=float).reshape(-1, 3)
    y = np.asarray(pilots, dtype=complex).reshape(-1)
    tx_uv = np.asarray(tx_uv, dtype=float).reshape(-1, 2)
    rx_uv = np.asarray(rx_uv, dtype=float).reshape(-1, 2)
    lt, lr = len(tx_uv), len(rx_uv)
    gt = _tx_atoms(tx_uv, t, wavelength)  # (Lt, M)
    fr = _rx_atoms(rx_uv, r, wavelength)  # (Lr, M), already conjugate-phased
    # row m, column (i + j*Lr) = g_j(t_m) * conj(f_i(r_m))
    design = math.sqrt(power) * (gt.T[:, :, None] * fr.T[:, None, :]).reshape(len(y), lt * lr)
    sol, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.linalg.norm(y - design @ sol))
    dof = max(len(y) - lr * lt, 1)
    floor = dof * noise_power
    poor = residual ** 2 > floor + 5.0 * noise_power * math.sqrt(dof) + 1e-12
    return sol.reshape(lr, lt, order="F"), residual, rank < lr * lt, poor


def nearest_measured_reconstruct(ms: MeasurementSet, query_positions) -> np.ndarray:
    """Model-free channel estimate: copy the nearest measured Rx position's value.

    Each query position gets pilots[argmin distance]/sqrt(P); distance ties
    resolve to the lowest measurement index.
    """
    if len(ms) < 1:
        raise ValueError("need at least one measurement")
    q = np.asarray(query_positions, dtype=float).reshape(-1, 3)
    d = np.linalg.norm(q[:, None, :] - ms.rx_positions[None, :, :], axis=2)
    nearest = np.argmin(d, axis=1)
    return ms.pilots[nearest] / math.sqrt(ms.power)


def reconstruct_mapping(fri: FriEstimate, tx_grid, rx_grid, wavelength: float) -> np.ndarray:
    """Channel map over grid pairs from recovered information: H[q, p] = f^H PRM g.

    An estimate with no recovered paths on either side (channel below the
    noise floor) reconstructs as the zero map.
    """
    if len(fri.tx_uv) == 0 or len(fri.rx_uv) == 0:
        return np.zeros((len(rx_grid), len(tx_grid)), dtype=complex)
    sc = Scenario(wavelength=wavelength,
                  tx_paths=PathSet.from_spatial_frequencies(fri.tx_uv),
                  rx_paths=PathSet.from_spatial_frequencies(fri.rx_uv),
                  prm=fri.prm)
    return channel_mimo(tx_grid, rx_grid, sc)


def nmse(h: np.ndarray, h_hat: np.ndarray) -> float:
    """Normalized squared reconstruction error ||H - Hhat||_F^2 / ||H||_F^2."""
    h = np.asarray(h, dtype=complex)
    h_hat = np.asarray(h_hat, dtype=complex)
    if h.shape != h_hat.shape:
        raise ValueError("shapes do not match")
    denom = np.linalg.norm(h) ** 2
    if denom == 0:
        raise ValueError("reference channel is zero")
    return float(np.linalg.norm(h - h_hat) ** 2 / denom)


def export_mapping_csv(path, tx_grid, rx_grid, h: np.ndarray) -> None:
    """Write a reconstructed map as rows (tx_x, tx_y, rx_x, rx_y, re, im), tx-major order."""
    tx = np.asarray(tx_grid, dtype=float).reshape(len(tx_grid), -1)
    rx = np.asarray(rx_grid, dtype=float).reshape(len(rx_grid), -1)
    h = np.asarray(h, dtype=complex)
    with open(path, "w") as fh:
        fh.write("tx_x,tx_y,rx_x,rx_y,re,im\n")
        for p in range(len(tx)):
            for q in range(len(rx)):
                vals = (tx[p, 0], tx[p, 1], rx[q, 0], rx[q, 1], h[q, p].real, h[q, p].imag)
                fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def load_mapping_csv(path):
    """Inverse of export_mapping_csv; returns (tx_grid, rx_grid, H)."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    tx = np.unique(rows[:, :2], axis=0)
    rx = np.unique(rows[:, 2:4], axis=0)
    tx_index = {tuple(t): i for i, t in enumerate(tx)}
    rx_index = {tuple(r): i for i, r in enumerate(rx)}
    h = np.zeros((len(rx), len(tx)), dtype=complex)
    for row in rows:
        h[rx_index[tuple(row[2:4])], tx_index[tuple(row[:2])]] = row[4] + 1j * row[5]
    return tx, rx, h


def save_measurements(ms: MeasurementSet, path) -> None:
    doc = {
        "tx_positions": ms.tx_positions.tolist(),
        "rx_positions": ms.rx_positions.tolist(),
        "pilots": np.stack([ms.pilots.real, ms.pilots.imag], axis=-1).tolist(),
        "power": ms.power,
        "noise_power": ms.noise_power,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_measurements(path) -> MeasurementSet:
    with open(path) as fh:
        doc = json.load(fh)
    pilots = np.asarray(doc["pilots"], dtype=float)
    return MeasurementSet(np.asarray(doc["tx_positions"]), np.asarray(doc["rx_positions"]),
                          pilots[:, 0] + 1j * pilots[:, 1], doc["power"], doc["noise_power"])
