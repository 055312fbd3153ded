"""Frequency-side machinery on T^d and S^d.

Conventions: Laplacian eigenvalues are those of -Delta with eigenfunctions
e^{2 pi i k.x} on the unit torus (lambda = 4 pi^2 |k|^2) and spherical
harmonics of degree l on S^d (lambda_l = l (l + d - 1)).  Under this weight
the T^1 diaphony squared equals the diagonal-included Green double sum
divided by n^2, exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import polygamma, roots_jacobi

from .errors import InvalidInputError, NumericalFailureError
from .geometry import (FLAT_TORUS, SPHERE, Manifold, PointConfiguration,
                       sphere_surface_area, wrap_displacement)


def torus_eigenvalue(k: np.ndarray) -> np.ndarray:
    """lambda = 4 pi^2 |k|^2 for integer frequency vectors k."""
    k = np.asarray(k, dtype=float)
    return 4.0 * math.pi ** 2 * np.sum(np.atleast_2d(k) ** 2, axis=-1)


def sphere_eigenvalue(ell, d: int):
    """lambda_l = l (l + d - 1) on S^d."""
    ell = np.asarray(ell, dtype=float)
    return ell * (ell + d - 1.0)


def harmonic_dimension(ell: int, d: int) -> int:
    """Dimension N(l, d) of the degree-l spherical-harmonic space on S^d."""
    if ell == 0:
        return 1
    return math.comb(ell + d, d) - math.comb(ell + d - 2, d)


def gegenbauer_normalized(lmax: int, t: np.ndarray, d: int) -> np.ndarray:
    """Normalized Gegenbauer polynomials P~_l(t) with P~_l(1) = 1, l = 0..lmax.

    Returns an array of shape (lmax + 1,) + t.shape, computed by the stable
    three-term recurrence for ultraspherical polynomials with alpha=(d-1)/2.
    """
    t = np.asarray(t, dtype=float)
    alpha = (d - 1) / 2.0
    out = np.empty((lmax + 1,) + t.shape)
    c_prev = np.ones_like(t)
    out[0] = c_prev
    if lmax == 0:
        return out
    c = 2.0 * alpha * t
    norm = 2.0 * alpha  # C_l^alpha(1) tracked alongside
    out[1] = c / norm
    norm_prev = 1.0
    for ell in range(1, lmax):
        c_next = (2.0 * (ell + alpha) * t * c - (ell + 2.0 * alpha - 1.0) * c_prev) / (ell + 1.0)
        norm_next = (2.0 * (ell + alpha) * norm - (ell + 2.0 * alpha - 1.0) * norm_prev) / (ell + 1.0)
        c_prev, c = c, c_next
        norm_prev, norm = norm, norm_next
        out[ell + 1] = c / norm
    return out


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _torus_mode_grid(d: int, K: int) -> np.ndarray:
    rng = np.arange(-K, K + 1)
    mesh = np.meshgrid(*([rng] * d), indexing="ij")
    modes = np.stack([g.ravel() for g in mesh], axis=-1)
    return modes[np.any(modes != 0, axis=1)]


@dataclass(frozen=True)
class SpectralMeasure:
    """Truncated frequency content of an empirical measure with heat time t.

    Torus measures carry complex Fourier coefficients mu_hat(k) over all
    0 < |k|_inf <= K; sphere measures carry per-degree powers p_l for
    1 <= l <= L.  ``tail_bound`` bounds the omitted-mode contribution to the
    squared H^-1 norm of the heat-smoothed centered measure (inf when the
    omitted sum diverges, which happens only at t = 0 in d >= 2).
    """

    manifold: Manifold
    truncation: int
    heat_time: float
    n: int = 0
    modes: np.ndarray | None = field(default=None, repr=False)
    coefficients: np.ndarray | None = field(default=None, repr=False)
    degree_powers: np.ndarray | None = field(default=None, repr=False)
    tail_bound: float = 0.0

    def to_dict(self) -> dict:
        out = {
            "manifold": self.manifold.kind,
            "dim": self.manifold.dim,
            "truncation": self.truncation,
            "heat_time": self.heat_time,
            "tail_bound": self.tail_bound,
        }
        if self.coefficients is not None:
            out["coefficients"] = [[float(c.real), float(c.imag)] for c in self.coefficients]
            out["modes"] = self.modes.tolist()
        if self.degree_powers is not None:
            out["degree_powers"] = self.degree_powers.tolist()
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _theta1(t: float) -> float:
    """sum_m e^{-4 pi^2 m^2 t} over the integers."""
    total, m = 1.0, 1
    while True:
        term = 2.0 * math.exp(-4.0 * math.pi ** 2 * m * m * t)
        total += term
        if term < 1e-300 or term < 1e-17 * total:
            return total
        m += 1


def _torus_tail_bound(K: int, t: float, d: int) -> float:
    if t <= 0.0:
        if d == 1:
            return float(polygamma(1, K + 1)) / (2.0 * math.pi ** 2)
        return math.inf
    lam_min = 4.0 * math.pi ** 2 * (K + 1) ** 2
    return math.exp(-lam_min * t) / lam_min * _theta1(t) ** d


def _sphere_tail_bound(L: int, t: float, d: int) -> float:
    if t <= 0.0:
        return math.inf
    area = sphere_surface_area(d)
    total = 0.0
    for ell in range(L + 1, L + 20000):
        lam = ell * (ell + d - 1.0)
        term = math.exp(-2.0 * lam * t) * harmonic_dimension(ell, d) / (area * lam)
        total += term
        if term < 1e-300 or term < 1e-17 * max(total, 1e-300):
            break
    return total


def spectral_measure(config: PointConfiguration, truncation: int,
                     heat_time: float = 0.0) -> SpectralMeasure:
    """Fourier coefficients (torus) or per-degree powers (sphere) of mu.

    Sphere degree powers avoid explicit harmonics via the addition theorem:
    p_l = (1/n^2) (N(l,d)/|S^d|) sum_{j,k} P~_l(<x_j, x_k>).
    """
    if heat_time < 0.0:
        raise InvalidInputError("heat_time must be >= 0")
    if truncation < 1:
        raise InvalidInputError("truncation must be >= 1")
    man = config.manifold
    n = config.n
    if man.kind == FLAT_TORUS:
        modes = _torus_mode_grid(man.dim, truncation)
        phase = -2.0j * math.pi * (config.points @ modes.T.astype(float))
        coeffs = np.exp(phase).mean(axis=0) if n else np.zeros(len(modes), dtype=complex)
        return SpectralMeasure(man, truncation, heat_time, n=n, modes=modes,
                               coefficients=coeffs,
                               tail_bound=_torus_tail_bound(truncation, heat_time, man.dim))
    gram = np.clip(config.points @ config.points.T, -1.0, 1.0)
    ptilde = gegenbauer_normalized(truncation, gram.ravel(), man.dim)
    pair_sums = ptilde.reshape(truncation + 1, -1).sum(axis=1)
    area = sphere_surface_area(man.dim)
    dims = np.array([harmonic_dimension(ell, man.dim) for ell in range(truncation + 1)])
    powers = (dims / area) * pair_sums / (n * n) if n else np.zeros(truncation + 1)
    return SpectralMeasure(man, truncation, heat_time, n=n, degree_powers=powers[1:],
                           tail_bound=_sphere_tail_bound(truncation, heat_time, man.dim))


def _diag_tail_t1(K: int, t: float, n: int) -> float:
    """Exact diagonal part (1/n per mode) of the omitted T^1 tail."""
    if t <= 0.0:
        return float(polygamma(1, K + 1)) / (2.0 * math.pi ** 2 * n)
    total, k0 = 0.0, K + 1
    while True:
        ks = np.arange(k0, k0 + 100000, dtype=float)
        terms = np.exp(-8.0 * math.pi ** 2 * ks * ks * t) / (4.0 * math.pi ** 2 * ks * ks)
        total += 2.0 * float(terms.sum())
        if terms[-1] < 1e-300 or terms[-1] < 1e-17 * max(total, 1e-300):
            return total / n
        k0 += 100000


def hminus1_norm(sm: SpectralMeasure):
    """Squared-root H^-1 norm of the heat-smoothed centered measure.

    Returns (value, tail_bound): value is the truncated norm (not squared),
    tail_bound bounds the omitted contribution to the squared norm.  On T^1
    the diagonal part of the omitted tail (each mass contributes 1/n^2 per
    mode) is restored exactly, which cancels the leading truncation error.
    """
    t = sm.heat_time
    if sm.coefficients is not None:
        lam = torus_eigenvalue(sm.modes)
        sq = float(np.sum(np.exp(-2.0 * lam * t) * np.abs(sm.coefficients) ** 2 / lam))
        if sm.manifold.dim == 1 and sm.n:
            sq += _diag_tail_t1(sm.truncation, t, sm.n)
    else:
        ell = np.arange(1, sm.truncation + 1)
        lam = sphere_eigenvalue(ell, sm.manifold.dim)
        sq = float(np.sum(np.exp(-2.0 * lam * t) * sm.degree_powers / lam))
    return math.sqrt(max(sq, 0.0)), sm.tail_bound


# ---------------------------------------------------------------------------
# diaphony on T^1
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiaphonyResult:
    value: float           # F_N
    value_squared: float   # truncated F_N^2 with exact diagonal tail restored
    tail_bound: float      # bound on the omitted off-diagonal contribution to F_N^2
    truncation: int

    def to_dict(self) -> dict:
        return {"value": self.value, "value_squared": self.value_squared,
                "tail_bound": self.tail_bound, "truncation": self.truncation}


def diaphony_t1(config: PointConfiguration, K: int = 4096) -> DiaphonyResult:
    """Diaphony F_N with weights 1/(4 pi^2 k^2).

    Under this weight F_N^2 = (1/n^2) sum_{j,k} G(x_j - x_k) exactly, with the
    diagonal included.  The diagonal part of the omitted tail is restored in
    closed form (trigamma); the remaining off-diagonal truncation error is
    bounded per pair by min of the crude 1/(2 pi^2 K) bound and a Dirichlet
    summation-by-parts bound 1/(pi^2 (K+1)^2 sin(pi delta)).
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if config.manifold.kind != FLAT_TORUS or config.manifold.dim != 1:
        raise InvalidInputError("diaphony_t1 requires a T^1 configuration")
    x = config.points[:, 0]
    n = len(x)
    if n == 0:
        raise InvalidInputError("empty configuration")
    k = np.arange(1, K + 1)
    phases = np.exp(-2.0j * math.pi * np.outer(k, x))
    mu_hat = phases.mean(axis=1)
    trunc = float(np.sum(2.0 * np.abs(mu_hat) ** 2 / (4.0 * math.pi ** 2 * k ** 2)))
    # exact diagonal tail: each point mass contributes 1/n^2 per mode
    diag_tail = float(polygamma(1, K + 1)) / (2.0 * math.pi ** 2 * n)
    sq = trunc + diag_tail
    # off-diagonal tail bound
    delta = wrap_displacement(x[:, None] - x[None, :])[~np.eye(n, dtype=bool)]
    crude = float(polygamma(1, K + 1)) / (2.0 * math.pi ** 2)
    if delta.size:
        s = np.abs(np.sin(math.pi * delta))
        sharp = np.where(s > 0, 1.0 / (math.pi ** 2 * (K + 1) ** 2 * np.maximum(s, 1e-300)),
                         np.inf)
        tail = float(np.sum(np.minimum(crude, sharp))) / (n * n)
    else:
        tail = 0.0
    return DiaphonyResult(value=math.sqrt(max(sq, 0.0)), value_squared=sq,
                          tail_bound=tail, truncation=K)


# ---------------------------------------------------------------------------
# heat densities
# ---------------------------------------------------------------------------

HEAT_CROSSOVER = 1.0 / (4.0 * math.pi)  # per-axis switch between representations


def _heat1d(v: np.ndarray, t: float, representation: str) -> np.ndarray:
    """Periodic heat kernel on T^1 at wrapped displacement v."""
    v = np.asarray(v, dtype=float)
    if representation == "auto":
        representation = "image" if t < HEAT_CROSSOVER else "fourier"
    if representation == "fourier":
        out = np.ones_like(v)
        kmod = 1
        while True:
            term = 2.0 * math.exp(-4.0 * math.pi ** 2 * kmod * kmod * t)
            if term < 1e-17:
                break
            out = out + term * np.cos(2.0 * math.pi * kmod * v)
            kmod += 1
        return out
    if representation == "image":
        out = np.zeros_like(v)
        pref = 1.0 / math.sqrt(4.0 * math.pi * t)
        m = 0
        while True:
            if m == 0:
                term = pref * np.exp(-v * v / (4.0 * t))
            else:
                term = pref * (np.exp(-(v + m) ** 2 / (4.0 * t))
                               + np.exp(-(v - m) ** 2 / (4.0 * t)))
            out = out + term
            if m > 0 and np.max(term) < 1e-17 * max(np.max(out), pref * 1e-16):
                break
            m += 1
        return out
    raise InvalidInputError(f"unknown representation {representation!r}")


def heat_density_torus(x, center, t: float, d: int = 1,
                       representation: str = "auto"):
    """Heat-kernel density e^{t Delta} delta_center evaluated at x on T^d.

    The Fourier and Gaussian-image representations agree to ~1e-12 at the
    per-axis crossover 4 pi t = 1; ``auto`` switches there.
    """
    if t <= 0.0:
        raise InvalidInputError("heat_density_torus requires t > 0")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    center = np.asarray(center, dtype=float)
    v = wrap_displacement(x - center)
    out = np.ones(v.shape[0])
    for i in range(d):
        out = out * _heat1d(v[:, i], t, representation)
    return float(out[0]) if out.size == 1 else out


@lru_cache(maxsize=256)
def _sphere_heat_degrees(d: int, t: float) -> int:
    ell = 1
    area = sphere_surface_area(d)
    while True:
        lam = ell * (ell + d - 1.0)
        if math.exp(-lam * t) * harmonic_dimension(ell, d) / area < 1e-16:
            return ell
        ell += 1
        if ell > 100000:
            raise NumericalFailureError("sphere heat kernel did not truncate")


def heat_density_sphere(cos_angle, d: int, t: float):
    """Heat-kernel density on S^d as a zonal spectral sum in cos(angle)."""
    if t <= 0.0:
        raise InvalidInputError("heat_density_sphere requires t > 0")
    cos_angle = np.asarray(cos_angle, dtype=float)
    lmax = _sphere_heat_degrees(d, t)
    area = sphere_surface_area(d)
    ptilde = gegenbauer_normalized(lmax, cos_angle, d)
    out = np.zeros_like(cos_angle, dtype=float)
    for ell in range(lmax + 1):
        lam = ell * (ell + d - 1.0)
        out = out + math.exp(-lam * t) * harmonic_dimension(ell, d) / area * ptilde[ell]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Funk-Hecke eigenvalues and the Coulomb-kernel Laplacian
# ---------------------------------------------------------------------------

def funk_hecke_eigenvalue(d: int, ell: int) -> float:
    """Eigenvalue of the averaged Riesz operator on degree-l harmonics of S^d.

    a_l = (|S^{d-1}|/|S^d|) int_{-1}^{1} ||x-y||^{-(d-2)} P~_l(t) (1-t^2)^{(d-2)/2} dt
    with ||x-y|| = sqrt(2-2t); the chordal singularity cancels against the
    surface-measure weight, leaving a Gauss-Jacobi integral that is evaluated
    essentially exactly.  a_0 equals c_d.
    """
    if d < 3:
        raise InvalidInputError("funk_hecke_eigenvalue requires d >= 3")
    if ell < 0:
        raise InvalidInputError("degree must be >= 0")
    beta = (d - 2) / 2.0
    pref = (sphere_surface_area(d - 1) / sphere_surface_area(d)) * 2.0 ** (-beta)

    def quad(nodes: int) -> float:
        x, w = roots_jacobi(nodes, 0.0, beta)
        vals = gegenbauer_normalized(ell, x, d)[ell]
        return pref * float(np.dot(w, vals))

    nodes = ell // 2 + 12
    coarse, fine = quad(nodes), quad(nodes + 8)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        raise NumericalFailureError(f"Funk-Hecke quadrature did not converge (d={d}, l={ell})")
    return fine


_FD_STENCIL = np.array([  # 8th-order central first derivative, h-weights
    1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280])
_FD2_STENCIL = np.array([
    -1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560])


def riesz_laplacian_constant(d: int, angles=None, h: float = 1e-2,
                             rel_tol: float = 1e-6) -> float:
    """Constant c1 in Delta_y ||x-y||^{-(d-2)} = c1 ||x-y||^{-(d-2)} - c2 delta_x.

    Estimated by applying the zonal Laplace-Beltrami operator
    f'' + (d-1) cot(theta) f' to f(theta) = (2-2 cos theta)^{-(d-2)/2} with
    8th-order finite differences away from the pole; the ratio Delta f / f
    must be constant to ``rel_tol`` or a numerical-failure error is raised.
    """
    if d < 3:
        raise InvalidInputError("riesz_laplacian_constant requires d >= 3")
    if angles is None:
        angles = np.linspace(0.25 * math.pi, 0.75 * math.pi, 9)
    angles = np.asarray(angles, dtype=float)

    def f(theta):
        return (2.0 - 2.0 * np.cos(theta)) ** (-(d - 2) / 2.0)

    offsets = h * np.arange(-4, 5)
    samples = f(angles[:, None] + offsets[None, :])
    f0 = f(angles)
    d1 = samples @ _FD_STENCIL / h
    d2 = samples @ _FD2_STENCIL / (h * h)
    ratios = (d2 + (d - 1) / np.tan(angles) * d1) / f0
    c1 = float(np.mean(ratios))
    if np.max(np.abs(ratios - c1)) > rel_tol * max(abs(c1), 1e-300):
        raise NumericalFailureError(
            f"Delta f / f is not constant to {rel_tol} (d={d}): spread "
            f"{np.max(np.abs(ratios - c1)):.3e}")
    return c1
