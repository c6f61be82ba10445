"""Steering vectors, beamformers/combiners, power allocation, and rate metrics.

Weight vectors are plain complex arrays; a beamformer is "normalized" when
||w||_2 = 1 and "analog" when every entry has modulus 1/sqrt(N).  All rates
are base-2 (bits/s/Hz).
"""

from __future__ import annotations

import numpy as np

from .channel import channel_mimo

__all__ = [
    "steering_vector",
    "beam_gain",
    "mrt",
    "zf_combiner",
    "mmse_combiner",
    "water_filling",
    "mimo_capacity",
    "user_sinr_and_rates",
    "sum_rate",
    "min_rate",
    "multiuser_channels",
    "gma_positions",
    "gma_rate",
]

_MMSE_FLOOR = 1e-15


def steering_vector(x, theta: float, wavelength: float) -> np.ndarray:
    """Array response exp(j 2 pi / lambda * x_n cos(theta)) of a linear array."""
    if wavelength <= 0:
        raise ValueError("wavelength must be > 0")
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.exp(2j * np.pi / wavelength * x * np.cos(theta))


def beam_gain(x, w, theta: float, wavelength: float) -> float:
    """Beam gain |a(x, theta)^H w|^2."""
    a = steering_vector(x, theta, wavelength)
    w = np.asarray(w, dtype=complex).reshape(-1)
    if len(a) != len(w):
        raise ValueError("weight vector length does not match the array")
    return abs(a.conj() @ w) ** 2


def mrt(h) -> np.ndarray:
    """Maximal-ratio weight w = h / ||h||_2."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    n = np.linalg.norm(h)
    if n == 0:
        raise ValueError("cannot match a zero channel")
    return h / n


def zf_combiner(h: np.ndarray) -> np.ndarray:
    """Zero-forcing combiner W with W^H H = I_K for an (N x K) channel, K <= N."""
    h = np.asarray(h, dtype=complex)
    n, k = h.shape
    if k > n:
        raise ValueError("zero forcing needs at least as many antennas as users")
    if np.linalg.matrix_rank(h) < k:
        raise ValueError("channel matrix is rank deficient")
    return h @ np.linalg.inv(h.conj().T @ h)


def mmse_combiner(h: np.ndarray, powers, sigma2: float) -> np.ndarray:
    """Per-user MMSE combiners w_k ~ (sum_q p_q h_q h_q^H + sigma2 I)^-1 h_k, unit norm."""
    if sigma2 <= 0:
        raise ValueError("noise power must be > 0")
    h = np.asarray(h, dtype=complex)
    p = np.asarray(powers, dtype=float).reshape(-1)
    n, k = h.shape
    cov = (h * p) @ h.conj().T + (sigma2 + _MMSE_FLOOR) * np.eye(n)
    w = np.linalg.solve(cov, h)
    return w / np.linalg.norm(w, axis=0, keepdims=True)


def water_filling(singular_values, total_power: float, sigma2: float,
                  tol: float = 1e-12) -> np.ndarray:
    """Power allocation p_i = max(0, mu - sigma2/s_i^2) with sum(p) = total_power."""
    s = np.asarray(singular_values, dtype=float).reshape(-1)
    if total_power <= 0:
        raise ValueError("power budget must be > 0")
    active = s > 1e-300
    if not np.any(active):
        raise ValueError("all singular values are zero")
    inv = np.full_like(s, np.inf)
    inv[active] = sigma2 / s[active] ** 2
    lo = float(np.min(inv))
    hi = lo + total_power + float(np.max(inv[np.isfinite(inv)]))
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        p = np.maximum(0.0, mu - inv)
        if abs(p.sum() - total_power) < tol:
            break
        if p.sum() > total_power:
            hi = mu
        else:
            lo = mu
    p = np.maximum(0.0, 0.5 * (lo + hi) - inv)
    # exact renormalization on the active set removes bisection residue
    on = p > 0
    if np.any(on):
        p[on] += (total_power - p.sum()) / on.sum()
        p = np.maximum(p, 0.0)
    return p


def mimo_capacity(h: np.ndarray, total_power: float, sigma2: float) -> float:
    """Capacity log2 det(I + H Q H^H / sigma2) under the optimal eigenmode allocation."""
    h = np.asarray(h, dtype=complex)
    s = np.linalg.svd(h, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0.0
    p = water_filling(s, total_power, sigma2)
    return float(np.sum(np.log2(1.0 + p * s ** 2 / sigma2)))


def user_sinr_and_rates(h: np.ndarray, w: np.ndarray, powers, sigma2: float):
    """Per-user SINR and rate for uplink combining.

    h, w are (N x K); user k's SINR is
    |w_k^H h_k|^2 p_k / (sum_{q != k} |w_k^H h_q|^2 p_q + ||w_k||^2 sigma2).
    Returns (sinr, rates) arrays of length K.
    """
    h = np.asarray(h, dtype=complex)
    w = np.asarray(w, dtype=complex)
    p = np.asarray(powers, dtype=float).reshape(-1)
    if h.shape != w.shape or h.shape[1] != len(p):
        raise ValueError("channel, combiner, and power dimensions do not match")
    cross = np.abs(w.conj().T @ h) ** 2  # (K, K): |w_k^H h_q|^2 at [k, q]
    sig = np.diag(cross) * p
    interference = cross @ p - np.diag(cross) * p
    noise = np.linalg.norm(w, axis=0) ** 2 * sigma2
    sinr = sig / (interference + noise)
    return sinr, np.log2(1.0 + sinr)


def sum_rate(rates) -> float:
    return float(np.sum(rates))


def min_rate(rates) -> float:
    return float(np.min(rates))


def multiuser_channels(positions, user_scenarios) -> np.ndarray:
    """Stack per-user uplink channel vectors into an (N x K) matrix.

    Each user is described by a Scenario whose Tx side is the user's own
    antenna (kept at its reference point) and whose Rx side is the base
    station; `positions` are the base-station antenna positions.
    """
    cols = []
    for sc in user_scenarios:
        h = channel_mimo([np.zeros(3)], positions, sc).reshape(-1)
        cols.append(h)
    return np.stack(cols, axis=1)


def gma_positions(x: float, eta: int, n_antennas: int, wavelength: float) -> np.ndarray:
    """Uniform sparse array of sparsity eta anchored at x: x + n * eta * lambda/2."""
    if eta < 1:
        raise ValueError("sparsity must be >= 1")
    out = np.zeros((n_antennas, 3))
    out[:, 0] = x + np.arange(n_antennas) * eta * wavelength / 2.0
    return out


def gma_rate(x: float, eta: int, user_scenarios, powers, n_antennas: int,
             wavelength: float, aperture: float) -> float:
    """Multiple-access rate sum_k log2(1 + p_k h_k^H C_k^-1 h_k) of a sliding sparse array.

    powers are per-user transmit powers normalized by the noise power; C_k is
    the interference-plus-noise covariance I + sum_{i != k} p_i h_i h_i^H.
    """
    pos = gma_positions(x, eta, n_antennas, wavelength)
    if x < 0 or pos[-1, 0] > aperture + 1e-12:
        raise ValueError("sparse array does not fit in the movement region")
    h = multiuser_channels(pos, user_scenarios)
    p = np.asarray(powers, dtype=float).reshape(-1)
    n, k = h.shape
    total = np.eye(n, dtype=complex) + (h * p) @ h.conj().T
    rate = 0.0
    for j in range(k):
        ck = total - p[j] * np.outer(h[:, j], h[:, j].conj())
        rate += np.log2(1.0 + np.real(p[j] * h[:, j].conj() @ np.linalg.solve(ck, h[:, j])))
    return float(rate)
