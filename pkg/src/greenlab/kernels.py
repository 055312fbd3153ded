"""Pair-interaction kernels and O(n^2) pair-energy sums.

Kernels in force:

* ``green_t1`` -- closed-form Green's function of -d^2/dx^2 on T^1,
  G(u) = u^2/2 - u/2 + 1/12 on the wrapped distance u.
* ``green_torus_spectral`` -- the spectral Green's function on T^d (d >= 2),
  sum over nonzero frequencies of e^{2 pi i k.z} / (4 pi^2 |k|^2), evaluated by
  an Ewald split: the short-time part of the heat integral summed analytically
  over Gaussian images (incomplete-gamma terms), the rest as a rapidly
  converging smoothed Fourier sum.
* ``green_sphere2`` -- mean-zero spectral Green's function on S^2 via a
  truncated Legendre series.
* ``coulomb_sphere`` / ``riesz`` / ``log_sphere2`` -- chordal power-law and
  logarithmic kernels on spheres.

Energies use the ordered-pair convention: every unordered pair is counted
twice, matching double-index sums with k != l.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc, exp1

from .errors import InvalidInputError, NumericalFailureError, SingularityError
from .geometry import (FLAT_TORUS, SPHERE, Manifold, PointConfiguration,
                       pairwise_distances, sphere_surface_area,
                       wrap_displacement)

DEFAULT_SPLIT_TIME = 0.02  # Ewald crossover: one image shell suffices in real space

GREEN_T1 = "green_t1"
GREEN_TORUS_SPECTRAL = "green_torus_spectral"
GREEN_SPHERE2 = "green_sphere2"
COULOMB_SPHERE = "coulomb_sphere"
LOG_SPHERE2 = "log_sphere2"
RIESZ = "riesz"

_SINGULAR = {GREEN_TORUS_SPECTRAL, GREEN_SPHERE2, COULOMB_SPHERE, LOG_SPHERE2, RIESZ}


@dataclass(frozen=True)
class KernelSpec:
    """Which pair interaction is in force, plus its normalization.

    ``normalization`` is ``raw`` or ``mean_zero``; mean-zero subtracts the
    kernel's average over the manifold (c_d for the Coulomb kernel).  The
    Green kernels are mean-zero by construction.
    """

    kind: str
    dim: int = 1
    truncation: int = 0          # K for torus spectral, L for sphere series
    split_time: float = 0.0
    s: float = 0.0               # Riesz exponent
    normalization: str = "raw"

    def __post_init__(self):
        if self.kind == COULOMB_SPHERE and self.dim < 3:
            raise InvalidInputError("CoulombSphere requires d >= 3")
        if self.kind == GREEN_TORUS_SPECTRAL and self.dim < 2:
            raise InvalidInputError("spectral torus Green requires d >= 2")
        if self.normalization not in ("raw", "mean_zero"):
            raise InvalidInputError(f"unknown normalization {self.normalization!r}")

    @property
    def singular(self) -> bool:
        return self.kind in _SINGULAR

    def label(self) -> str:
        bits = [self.kind, f"d={self.dim}"]
        if self.kind == RIESZ:
            bits.append(f"s={self.s:g}")
        if self.normalization == "mean_zero":
            bits.append("mean_zero")
        return " ".join(bits)


def green_t1_kernel() -> KernelSpec:
    return KernelSpec(GREEN_T1, dim=1)


def green_torus_spectral_kernel(d: int, K: int = 0,
                                T: float = DEFAULT_SPLIT_TIME) -> KernelSpec:
    K = K or _default_fourier_cutoff(T)
    return KernelSpec(GREEN_TORUS_SPECTRAL, dim=d, truncation=K, split_time=T)


def green_sphere2_kernel(L: int = 2000) -> KernelSpec:
    return KernelSpec(GREEN_SPHERE2, dim=2, truncation=L)


def coulomb_sphere_kernel(d: int, normalization: str = "raw") -> KernelSpec:
    return KernelSpec(COULOMB_SPHERE, dim=d, s=float(d - 2), normalization=normalization)


def log_sphere2_kernel(normalization: str = "raw") -> KernelSpec:
    return KernelSpec(LOG_SPHERE2, dim=2, normalization=normalization)


def riesz_kernel(s: float, d: int = 2, normalization: str = "raw") -> KernelSpec:
    return KernelSpec(RIESZ, dim=d, s=float(s), normalization=normalization)


# ---------------------------------------------------------------------------
# T^1 closed form
# ---------------------------------------------------------------------------

def green_t1(u):
    """G(u) = u^2/2 - u/2 + 1/12 for wrapped distances u in [0, 1]."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise InvalidInputError("green_t1 expects wrapped distances in [0, 1]")
    out = 0.5 * u * u - 0.5 * u + 1.0 / 12.0
    return float(out) if out.ndim == 0 else out


def green_t1_deriv(u):
    """dG/du = u - 1/2."""
    return np.asarray(u, dtype=float) - 0.5


# ---------------------------------------------------------------------------
# spectral torus Green via Ewald split
# ---------------------------------------------------------------------------

def _default_fourier_cutoff(T: float, tol: float = 1e-12) -> int:
    # smallest K with e^{-4 pi^2 K^2 T} / (4 pi^2 K^2) below tol
    K = 1
    while math.exp(-4.0 * math.pi ** 2 * K * K * T) / (4.0 * math.pi ** 2 * K * K) > tol:
        K += 1
    return K


@lru_cache(maxsize=32)
def _fourier_modes(d: int, K: int):
    """Nonzero integer modes with |k|_inf <= K, deduplicated to half-space.

    Returns (modes, weights): cos-sum weights are 2 for the retained
    half-space representatives so that sum_k w cos(2 pi k.z) equals the full
    symmetric sum.
    """
    rng = np.arange(-K, K + 1)
    mesh = np.meshgrid(*([rng] * d), indexing="ij")
    modes = np.stack([g.ravel() for g in mesh], axis=-1)
    modes = modes[np.any(modes != 0, axis=1)]
    # keep one of each +-k pair: first nonzero entry positive
    keep = np.zeros(len(modes), dtype=bool)
    for i in range(d):
        earlier_zero = np.all(modes[:, :i] == 0, axis=1)
        keep |= earlier_zero & (modes[:, i] > 0)
    modes = modes[keep]
    return modes.astype(float), np.full(len(modes), 2.0)


@lru_cache(maxsize=32)
def _image_shifts(d: int, mmax: int = 3):
    rng = np.arange(-mmax, mmax + 1)
    mesh = np.meshgrid(*([rng] * d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1).astype(float)


def _realspace_sum(z: np.ndarray, d: int, T: float, want_grad: bool):
    """Analytic short-time heat integral summed over Gaussian images.

    For each image m, the term is the closed form of
    int_0^T (4 pi t)^{-d/2} exp(-|z+m|^2 / 4t) dt.
    """
    if d not in (2, 3):
        raise InvalidInputError("spectral torus Green supports d in {2, 3}")
    a = 2.0 * math.sqrt(T)
    rcut = max(1.499, 10.6 * math.sqrt(T))  # erfc/E1 terms beyond rcut are < 1e-14
    shifts = _image_shifts(d, max(1, math.floor(rcut + 0.5)))
    r_vec = z[:, None, :] + shifts[None, :, :]
    r2 = np.sum(r_vec * r_vec, axis=-1)
    mask = r2 < rcut * rcut
    r = np.sqrt(np.where(mask, r2, 1.0))
    if d == 3:
        vals = erfc(r / a) / (4.0 * math.pi * r)
        if want_grad:
            dvals = (-erfc(r / a) / (4.0 * math.pi * r * r)
                     - np.exp(-r2 / (a * a)) / (2.0 * math.pi ** 1.5 * a * r))
    else:
        vals = exp1(r2 / (a * a)) / (4.0 * math.pi)
        if want_grad:
            dvals = -np.exp(-r2 / (a * a)) / (2.0 * math.pi * r)
    vals = np.where(mask, vals, 0.0)
    total = vals.sum(axis=1)
    if not want_grad:
        return total, None
    dvals = np.where(mask, dvals, 0.0)
    grad = np.sum((dvals / r)[:, :, None] * r_vec, axis=1)
    return total, grad


def _fourier_tail(z: np.ndarray, d: int, K: int, T: float, want_grad: bool):
    modes, weights = _fourier_modes(d, K)
    lam = 4.0 * math.pi ** 2 * np.sum(modes * modes, axis=-1)
    coeff = weights * np.exp(-lam * T) / lam
    phase = 2.0 * math.pi * (z @ modes.T)
    total = np.cos(phase) @ coeff
    if not want_grad:
        return total, None
    grad = -2.0 * math.pi * (np.sin(phase) * coeff) @ modes
    return total, grad


def _ewald_sums(pts: np.ndarray, d: int, K: int, T: float, want_grad: bool):
    """Ordered-pair spectral-Green energy (and per-point gradients) on T^d.

    The Fourier half of the Ewald split is accumulated through the structure
    factor S(k) = sum_j e^{2 pi i k.x_j}, turning its cost from O(n^2 modes)
    into O(n modes); only the fast-decaying real-space half runs over pairs.
    Assumes coincident pairs have already been ruled out.
    """
    n = len(pts)
    off = ~np.eye(n, dtype=bool)
    delta = wrap_displacement(pts[:, None, :] - pts[None, :, :])
    flat = delta[off]
    rs, rs_grad = _realspace_sum(flat, d, T, want_grad)
    total = float(rs.sum()) - n * (n - 1) * T
    modes, weights = _fourier_modes(d, K)
    lam = 4.0 * math.pi ** 2 * np.sum(modes * modes, axis=-1)
    coeff = weights * np.exp(-lam * T) / lam
    phases = np.exp(2.0j * math.pi * (pts @ modes.T))       # (n, modes)
    S = phases.sum(axis=0)
    total += float(coeff @ (np.abs(S) ** 2 - n))
    if not want_grad:
        return total, None
    grads = np.zeros((n, n, d))
    grads[off] = rs_grad
    grad = 2.0 * grads.sum(axis=1)
    # d|S(k)|^2 / dx_j = -4 pi Im(e^{2 pi i k.x_j} conj(S(k))) k
    im = np.imag(phases * np.conj(S)[None, :])
    grad += -4.0 * math.pi * (im * coeff[None, :]) @ modes
    return total, grad


def _green_torus_core(z: np.ndarray, d: int, K: int, T: float, want_grad: bool):
    z = wrap_displacement(z)
    rs, rs_grad = _realspace_sum(z, d, T, want_grad)
    ft, ft_grad = _fourier_tail(z, d, K, T, want_grad)
    vals = rs - T + ft
    if want_grad:
        return vals, rs_grad + ft_grad
    return vals, None


def green_torus_spectral(z, d: int, K: int = 0, T: float = DEFAULT_SPLIT_TIME):
    """Spectral Green's function on T^d at displacement(s) z (d >= 2).

    Evaluates sum_{k != 0} e^{2 pi i k.z} / (4 pi^2 |k|^2) by an Ewald split
    with crossover time T; the value is independent of (K, T) once converged.
    """
    if d < 2:
        raise InvalidInputError("green_torus_spectral requires d >= 2")
    z_in = np.asarray(z, dtype=float)
    scalar = z_in.ndim == 1
    z2 = np.atleast_2d(z_in)
    if z2.shape[-1] != d:
        raise InvalidInputError(f"displacement has {z2.shape[-1]} coords, expected {d}")
    K = K or _default_fourier_cutoff(T)
    zw = wrap_displacement(z2)
    if np.any(np.linalg.norm(zw, axis=-1) < 1e-14):
        raise SingularityError("green_torus_spectral is singular at z = 0")
    vals, _ = _green_torus_core(z2, d, K, T, want_grad=False)
    return float(vals[0]) if scalar else vals


def green_torus_spectral_tail_bound(K: int, T: float, d: int) -> float:
    """Upper bound on the omitted smoothed-Fourier modes beyond |k|_inf = K."""
    theta = sum(math.exp(-4.0 * math.pi ** 2 * m * m * T) for m in range(-40, 41))
    lam_min = 4.0 * math.pi ** 2 * (K + 1) ** 2
    return math.exp(-lam_min * T / 2.0) / lam_min * theta ** d


# ---------------------------------------------------------------------------
# sphere kernels
# ---------------------------------------------------------------------------

def _legendre_green_sum(t: np.ndarray, L: int, want_deriv: bool = False):
    """sum_{l=1}^{L} (2l+1)/(4 pi l(l+1)) P_l(t), by upward recurrence."""
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)       # P_0
    p = t.copy()                   # P_1
    dp_prev = np.zeros_like(t)
    dp = np.ones_like(t)
    acc = (3.0 / (4.0 * math.pi * 2.0)) * p
    dacc = (3.0 / (4.0 * math.pi * 2.0)) * dp
    for ell in range(1, L):
        p_next = ((2 * ell + 1) * t * p - ell * p_prev) / (ell + 1)
        if want_deriv:
            dp_next = ((2 * ell + 1) * (p + t * dp) - ell * dp_prev) / (ell + 1)
            dp_prev, dp = dp, dp_next
        p_prev, p = p, p_next
        l1 = ell + 1
        c = (2 * l1 + 1) / (4.0 * math.pi * l1 * (l1 + 1))
        acc = acc + c * p
        if want_deriv:
            dacc = dacc + c * dp
    if want_deriv:
        return acc, dacc
    return acc


def green_sphere2(x, y, L: int = 2000) -> float:
    """Mean-zero spectral Green's function on S^2, truncated at degree L."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = float(np.clip(np.dot(x, y), -1.0, 1.0))
    if t >= 1.0 - 1e-15:
        raise SingularityError("green_sphere2 is singular on the diagonal")
    return float(_legendre_green_sum(np.asarray([t]), L)[0])


def coulomb_sphere(x, y, d: int):
    """Chordal Coulomb kernel ||x - y||^{-(d-2)} on S^d, d >= 3."""
    if d < 3:
        raise InvalidInputError("coulomb_sphere requires d >= 3")
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if r < 1e-14:
        raise SingularityError("coulomb_sphere is singular on the diagonal")
    return r ** (-(d - 2))


@lru_cache(maxsize=64)
def riesz_mean_on_sphere(s: float, d: int) -> float:
    """Average of the chordal Riesz kernel ||x-y||^{-s} over S^d x S^d.

    Reduced to a polar-angle integral against the sin^{d-1} density and
    evaluated by Gauss-Legendre with a refinement check.
    """
    if s >= d:
        raise InvalidInputError("Riesz mean diverges for s >= d")
    ratio = sphere_surface_area(d - 1) / sphere_surface_area(d)

    def quad(nodes: int) -> float:
        x, w = np.polynomial.legendre.leggauss(nodes)
        theta = 0.5 * math.pi * (x + 1.0)
        vals = (2.0 * np.sin(theta / 2.0)) ** (-s) * np.sin(theta) ** (d - 1)
        return ratio * 0.5 * math.pi * float(np.dot(w, vals))

    coarse, fine = quad(400), quad(800)
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)):
        raise NumericalFailureError(
            f"Riesz mean quadrature did not converge (s={s}, d={d})")
    return fine


def cd_constant(d: int) -> float:
    """c_d = |S^d|^{-2} int int ||x-y||^{-(d-2)} dx dy, the Coulomb mean."""
    if d < 3:
        raise InvalidInputError("cd_constant requires d >= 3")
    return riesz_mean_on_sphere(float(d - 2), d)


@lru_cache(maxsize=1)
def log_sphere2_mean() -> float:
    """Average of -ln||x - y|| over S^2 x S^2 (equals 1/2 - ln 2)."""
    x, w = np.polynomial.legendre.leggauss(800)
    theta = 0.5 * math.pi * (x + 1.0)
    vals = -np.log(2.0 * np.sin(theta / 2.0)) * np.sin(theta)
    return 0.5 * (0.5 * math.pi) * float(np.dot(w, vals))


# ---------------------------------------------------------------------------
# pair energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    """Result of the double sum over ordered pairs k != l."""

    total: float
    normalized: float
    n: int
    min_separation: float
    kernel: KernelSpec

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.label(),
            "n": self.n,
            "total": self.total,
            "normalized": self.normalized,
            "min_separation": self.min_separation,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def kernel_mean(kernel: KernelSpec) -> float:
    """Manifold average subtracted under mean-zero normalization."""
    if kernel.kind in (GREEN_T1, GREEN_TORUS_SPECTRAL, GREEN_SPHERE2):
        return 0.0
    if kernel.kind == COULOMB_SPHERE:
        return cd_constant(kernel.dim)
    if kernel.kind == LOG_SPHERE2:
        return log_sphere2_mean()
    if kernel.kind == RIESZ:
        return riesz_mean_on_sphere(kernel.s, kernel.dim)
    raise InvalidInputError(f"unknown kernel kind {kernel.kind!r}")


def _expected_manifold(kernel: KernelSpec) -> str:
    return FLAT_TORUS if kernel.kind in (GREEN_T1, GREEN_TORUS_SPECTRAL) else SPHERE


def _check_compatible(config: PointConfiguration, kernel: KernelSpec) -> None:
    man = config.manifold
    if man.kind != _expected_manifold(kernel):
        raise InvalidInputError(
            f"kernel {kernel.kind} expects a {_expected_manifold(kernel)} manifold")
    if man.dim != kernel.dim:
        raise InvalidInputError(
            f"kernel dimension {kernel.dim} does not match manifold dim {man.dim}")


def pair_values(config: PointConfiguration, kernel: KernelSpec) -> np.ndarray:
    """(n, n) matrix of raw kernel values with zeros on the diagonal."""
    _check_compatible(config, kernel)
    pts = config.points
    n = config.n
    if n < 2:
        return np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    if kernel.kind == GREEN_T1:
        dist = pairwise_distances(config)
        vals = np.where(off, green_t1(np.clip(dist, 0.0, 1.0)), 0.0)
        return vals
    if kernel.kind == GREEN_TORUS_SPECTRAL:
        delta = wrap_displacement(pts[:, None, :] - pts[None, :, :])
        flat = delta[off]
        _raise_if_coincident(np.linalg.norm(flat, axis=-1), off, "torus Green")
        vals = np.zeros((n, n))
        core, _ = _green_torus_core(flat, kernel.dim, kernel.truncation,
                                    kernel.split_time or DEFAULT_SPLIT_TIME, False)
        vals[off] = core
        return vals
    # sphere kernels work from the Gram matrix / chordal distances
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    chord = np.sqrt(np.maximum(2.0 - 2.0 * gram, 0.0))
    if kernel.singular:
        _raise_if_coincident(chord[off], off, kernel.kind)
    safe = np.where(off, chord, 1.0)
    if kernel.kind == GREEN_SPHERE2:
        vals = np.zeros((n, n))
        vals[off] = _legendre_green_sum(gram[off], kernel.truncation or 2000)
        return vals
    if kernel.kind == COULOMB_SPHERE:
        return np.where(off, safe ** (-(kernel.dim - 2.0)), 0.0)
    if kernel.kind == RIESZ:
        return np.where(off, safe ** (-kernel.s), 0.0)
    if kernel.kind == LOG_SPHERE2:
        return np.where(off, -np.log(safe), 0.0)
    raise InvalidInputError(f"unknown kernel kind {kernel.kind!r}")


def _raise_if_coincident(dists: np.ndarray, off: np.ndarray, label: str) -> None:
    if dists.size and np.min(dists) < 1e-12:
        idx = np.argwhere(off)
        bad = idx[np.argmin(dists)]
        raise SingularityError(
            f"coincident points {bad[0]} and {bad[1]} with singular kernel {label}",
            indices=(int(bad[0]), int(bad[1])))


def pair_energy(config: PointConfiguration, kernel: KernelSpec) -> EnergyReport:
    """Sum of kernel values over ordered pairs k != l (each pair counted twice)."""
    n = config.n
    if kernel.kind == GREEN_TORUS_SPECTRAL and n >= 2:
        _check_compatible(config, kernel)
        off = ~np.eye(n, dtype=bool)
        dist = pairwise_distances(config)
        _raise_if_coincident(dist[off], off, "torus Green")
        total, _ = _ewald_sums(config.points, kernel.dim, kernel.truncation,
                               kernel.split_time or DEFAULT_SPLIT_TIME, False)
        return EnergyReport(total=total, normalized=total / (n * n), n=n,
                            min_separation=float(np.min(dist[off])), kernel=kernel)
    vals = pair_values(config, kernel)
    total = float(vals.sum())
    if kernel.normalization == "mean_zero":
        total -= n * (n - 1) * kernel_mean(kernel)
    if n >= 2:
        dist = pairwise_distances(config)
        min_sep = float(np.min(dist[~np.eye(n, dtype=bool)]))
    else:
        min_sep = math.inf
    normalized = total / (n * n) if n else 0.0
    return EnergyReport(total=total, normalized=normalized, n=n,
                        min_separation=min_sep, kernel=kernel)
