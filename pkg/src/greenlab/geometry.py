"""Manifold descriptors, distances and point-set generation on T^d and S^d.

The flat torus uses the unit cell [0, 1)^d with total volume 1; sphere points
are stored as ambient (d+1)-vectors of unit length.  All functions are pure
and configurations are immutable after construction.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

_UNIT_TOL = 1e-12

FLAT_TORUS = "flat_torus"
SPHERE = "sphere"


def sphere_surface_area(d: int) -> float:
    """Surface area |S^d| of the unit d-sphere embedded in R^{d+1}."""
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


@dataclass(frozen=True)
class Manifold:
    """Ambient space descriptor: flat torus T^d or unit sphere S^d."""

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (FLAT_TORUS, SPHERE):
            raise InvalidInputError(f"unknown manifold kind {self.kind!r}")
        if self.dim < 1:
            raise InvalidInputError(f"dim must be >= 1, got {self.dim}")

    @property
    def volume(self) -> float:
        if self.kind == FLAT_TORUS:
            return 1.0
        return sphere_surface_area(self.dim)

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.kind == FLAT_TORUS else self.dim + 1

    @property
    def diameter(self) -> float:
        """Geodesic diameter (used to scale entropic regularization)."""
        if self.kind == FLAT_TORUS:
            return 0.5 * math.sqrt(self.dim)
        return math.pi


def flat_torus(d: int) -> Manifold:
    return Manifold(FLAT_TORUS, d)


def sphere(d: int) -> Manifold:
    return Manifold(SPHERE, d)


@dataclass(frozen=True)
class PointConfiguration:
    """An ordered list of points on a manifold.

    Torus coordinates are wrapped into [0, 1) on ingestion; sphere points must
    be unit vectors to 1e-12 (duplicates are permitted, kernels decide whether
    they are an error).
    """

    manifold: Manifold
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, self.manifold.ambient_dim)
        if pts.shape[1] != self.manifold.ambient_dim:
            raise InvalidInputError(
                f"points have {pts.shape[1]} coordinates, expected "
                f"{self.manifold.ambient_dim} for {self.manifold.kind} d={self.manifold.dim}"
            )
        if self.manifold.kind == FLAT_TORUS:
            pts = np.mod(pts, 1.0)
            # mod can return 1.0 for tiny negative inputs
            pts[pts >= 1.0] -= 1.0
        else:
            norms = np.linalg.norm(pts, axis=1)
            if pts.shape[0] and np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
                raise InvalidInputError("sphere points must be unit vectors to 1e-12")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# manifold={self.manifold.kind} dim={self.manifold.dim} n={self.n}\n")
        for row in self.points:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def config_from_csv(text: str) -> PointConfiguration:
    """Parse the CSV serialization produced by :meth:`PointConfiguration.to_csv`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise InvalidInputError("missing '# manifold=... dim=... n=...' header")
    header = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
    try:
        kind, dim, n = header["manifold"], int(header["dim"]), int(header["n"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"bad configuration header: {lines[0]!r}") from exc
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    if len(rows) != n:
        raise InvalidInputError(f"header says n={n} but {len(rows)} rows present")
    man = Manifold(kind, dim)
    pts = np.array(rows, dtype=float).reshape(len(rows), man.ambient_dim)
    return PointConfiguration(man, pts)


def load_config_csv(path) -> PointConfiguration:
    with open(path) as fh:
        return config_from_csv(fh.read())


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def wrap_displacement(delta: np.ndarray) -> np.ndarray:
    """Wrap componentwise displacements into [-1/2, 1/2)."""
    return np.mod(np.asarray(delta, dtype=float) + 0.5, 1.0) - 0.5


def torus_distance(a, b) -> float:
    """Flat geodesic distance on T^d: per-coordinate wrap combined in the 2-norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(wrap_displacement(a - b)))


def sphere_distance(a, b, mode: str = "chordal") -> float:
    """Distance between unit vectors: chordal in [0, 2] or geodesic in [0, pi]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise InvalidInputError("sphere_distance requires unit vectors")
    if mode == "chordal":
        return float(np.linalg.norm(a - b))
    if mode == "geodesic":
        return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))
    raise InvalidInputError(f"unknown mode {mode!r}")


def pairwise_distances(config: PointConfiguration, mode: str = "geodesic") -> np.ndarray:
    """(n, n) matrix of manifold distances; `mode` selects chordal/geodesic on spheres."""
    pts = config.points
    if config.manifold.kind == FLAT_TORUS:
        delta = wrap_displacement(pts[:, None, :] - pts[None, :, :])
        return np.linalg.norm(delta, axis=-1)
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    if mode == "chordal":
        return np.sqrt(np.maximum(2.0 - 2.0 * gram, 0.0))
    return np.arccos(gram)


def cross_distances(a: PointConfiguration, b_points: np.ndarray,
                    mode: str = "geodesic") -> np.ndarray:
    """(n_a, n_b) distance matrix between a configuration and raw points."""
    pts = a.points
    b_points = np.asarray(b_points, dtype=float)
    if a.manifold.kind == FLAT_TORUS:
        delta = wrap_displacement(pts[:, None, :] - b_points[None, :, :])
        return np.linalg.norm(delta, axis=-1)
    gram = np.clip(pts @ b_points.T, -1.0, 1.0)
    if mode == "chordal":
        return np.sqrt(np.maximum(2.0 - 2.0 * gram, 0.0))
    return np.arccos(gram)


# ---------------------------------------------------------------------------
# point generation
# ---------------------------------------------------------------------------

def uniform_sample(manifold: Manifold, n: int, seed: int) -> PointConfiguration:
    """n independent uniform points, deterministic given the seed."""
    if n < 0:
        raise InvalidInputError("n must be >= 0")
    rng = np.random.default_rng(seed)
    if manifold.kind == FLAT_TORUS:
        pts = rng.random((n, manifold.dim))
    else:
        g = rng.standard_normal((n, manifold.dim + 1))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    return PointConfiguration(manifold, pts)


def grid_torus(m: int, d: int) -> PointConfiguration:
    """The m^d cube centers ((2i-1)/(2m), ...); minimum separation exactly 1/m."""
    if m < 1 or d < 1:
        raise InvalidInputError("grid_torus requires m >= 1 and d >= 1")
    axis = (2.0 * np.arange(1, m + 1) - 1.0) / (2.0 * m)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    return PointConfiguration(flat_torus(d), pts)


GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


def van_der_corput(n: int, base: int = 2) -> np.ndarray:
    """First n radical-inverse values in the given base (k = 1..n)."""
    if base < 2:
        raise InvalidInputError("van der Corput base must be >= 2")
    out = np.empty(n)
    for i, k in enumerate(range(1, n + 1)):
        x, denom = 0.0, 1.0
        while k > 0:
            k, digit = divmod(k, base)
            denom *= base
            x += digit / denom
        out[i] = x
    return out


def lowdisc_sequence(kind: str, n: int, alpha: float = GOLDEN_RATIO,
                     base: int = 2) -> PointConfiguration:
    """Low-discrepancy point set on T^1: Kronecker frac(k*alpha) or van der Corput.

    Prefix property: the first points of the length-n and length-(n+1) sets agree.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if kind == "kronecker":
        pts = np.mod(np.arange(1, n + 1) * float(alpha), 1.0)
    elif kind == "van_der_corput":
        pts = van_der_corput(n, base)
    else:
        raise InvalidInputError(f"unknown low-discrepancy kind {kind!r}")
    return PointConfiguration(flat_torus(1), pts[:, None])


def tangent_project(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project an ambient vector onto the tangent space of the sphere at x."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - np.dot(v, x) * x


# ---------------------------------------------------------------------------
# quadrature node sets for the uniform measure
# ---------------------------------------------------------------------------

def torus_quadrature(d: int, m: int):
    """Equal-weight grid nodes on T^d with their exact covering radius.

    Returns (points, weights, covering_radius); every point of the torus is
    within covering_radius of a node (half the cell diagonal).
    """
    cfg = grid_torus(m, d)
    M = cfg.n
    weights = np.full(M, 1.0 / M)
    covering = 0.5 * math.sqrt(d) / m
    return cfg.points, weights, covering


def _fibonacci_sphere2(M: int) -> np.ndarray:
    k = np.arange(M) + 0.5
    z = 1.0 - 2.0 * k / M
    phi = 2.0 * math.pi * k * (GOLDEN_RATIO - 1.0)
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _halton_hypersphere(d: int, M: int) -> np.ndarray:
    """Map a (d)-dim Halton set through hyperspherical inverse CDFs onto S^d."""
    from scipy.stats import qmc
    from scipy.special import betaincinv

    u = qmc.Halton(d=d, scramble=False, seed=0).random(M + 1)[1:]  # drop the origin
    # angles theta_1..theta_{d-1} with densities sin^{d-1-i}; phi uniform on [0, 2pi)
    angles = np.empty((M, d))
    for i in range(d - 1):
        p = d - i  # sin^{p-1} density; cos(theta) = 1 - 2*I^{-1}(u; p/2, p/2)
        angles[:, i] = np.arccos(1.0 - 2.0 * betaincinv(p / 2.0, p / 2.0, u[:, i]))
    angles[:, d - 1] = 2.0 * math.pi * u[:, d - 1]
    pts = np.empty((M, d + 1))
    sin_prod = np.ones(M)
    for i in range(d - 1):
        pts[:, i] = sin_prod * np.cos(angles[:, i])
        sin_prod = sin_prod * np.sin(angles[:, i])
    pts[:, d - 1] = sin_prod * np.cos(angles[:, d - 1])
    pts[:, d] = sin_prod * np.sin(angles[:, d - 1])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def sphere_quadrature(d: int, M: int, probe: int = 4096):
    """Equal-weight, well-spread nodes on S^d with an estimated covering radius.

    S^2 uses a Fibonacci spiral; other dimensions map a Halton set through the
    hyperspherical-angle inverse CDFs.  The covering radius (geodesic) is
    estimated from seeded probe points with a 25% safety margin.
    """
    if M < 1:
        raise InvalidInputError("M must be >= 1")
    pts = _fibonacci_sphere2(M) if d == 2 else _halton_hypersphere(d, M)
    rng = np.random.default_rng(12345)
    g = rng.standard_normal((probe, d + 1))
    probes = g / np.linalg.norm(g, axis=1, keepdims=True)
    # nearest-node geodesic distance, chunked to bound memory
    worst = 0.0
    for start in range(0, probe, 512):
        chunk = probes[start:start + 512]
        gram = np.clip(chunk @ pts.T, -1.0, 1.0)
        worst = max(worst, float(np.arccos(gram.max(axis=1)).max()))
    weights = np.full(M, 1.0 / M)
    return pts, weights, 1.25 * worst
