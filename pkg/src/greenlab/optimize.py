"""Pair-energy minimization by projected/Riemannian gradient descent.

Plain gradient descent with Armijo backtracking; retraction is renormalize
(sphere) or wrap (torus).  Random restarts keep the best final energy; no
global-optimality claim is made.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SingularityError, StallError
from .geometry import (FLAT_TORUS, SPHERE, PointConfiguration,
                       pairwise_distances, uniform_sample, wrap_displacement)
from .kernels import (COULOMB_SPHERE, GREEN_SPHERE2, GREEN_T1,
                      GREEN_TORUS_SPECTRAL, LOG_SPHERE2, RIESZ,
                      DEFAULT_SPLIT_TIME, KernelSpec, _check_compatible,
                      _ewald_sums, _legendre_green_sum, green_t1_deriv,
                      pair_energy)

_COLLISION_GUARD = 1e-9
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class OptimizerParams:
    max_iters: int = 500
    grad_tol: float = 1e-6
    initial_step: float = 0.0     # 0 -> auto n^{1-2/d} scaling
    shrink: float = 0.5
    armijo_c: float = 1e-4
    seed: int = 0
    restarts: int = 0

    def __post_init__(self):
        if not (0.0 < self.shrink < 1.0) or not (0.0 < self.armijo_c < 1.0):
            raise InvalidInputError("shrink and armijo_c must lie in (0, 1)")
        if self.max_iters < 1 or self.grad_tol <= 0.0:
            raise InvalidInputError("max_iters must be >= 1 and grad_tol > 0")


@dataclass(frozen=True)
class MinimizationResult:
    config: PointConfiguration
    energy_history: list
    grad_norm_final: float
    iterations_used: int
    converged: bool
    min_separation: float

    @property
    def energy(self) -> float:
        return self.energy_history[-1]

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "iterations_used": self.iterations_used,
            "grad_norm_final": self.grad_norm_final,
            "converged": self.converged,
            "min_separation": self.min_separation,
            "n": self.config.n,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def min_separation(config: PointConfiguration) -> float:
    """Minimum pairwise manifold distance; requires n >= 2."""
    if config.n < 2:
        raise InvalidInputError("min_separation requires n >= 2")
    dist = pairwise_distances(config)
    return float(np.min(dist[~np.eye(config.n, dtype=bool)]))


def energy_gradient(config: PointConfiguration, kernel: KernelSpec) -> np.ndarray:
    """Per-point gradient of the ordered-pair energy; tangent on spheres."""
    _check_compatible(config, kernel)
    pts = config.points
    n = config.n
    if n < 2:
        return np.zeros_like(pts)
    off = ~np.eye(n, dtype=bool)
    if kernel.kind == GREEN_T1:
        delta = wrap_displacement(pts[:, 0][:, None] - pts[:, 0][None, :])
        u = np.abs(delta)
        if np.min(u[off]) < _COLLISION_GUARD:
            pass  # G' is bounded; coincident points are fine for this kernel
        contrib = np.where(off, green_t1_deriv(u) * np.sign(delta), 0.0)
        return 2.0 * contrib.sum(axis=1)[:, None]
    if kernel.kind == GREEN_TORUS_SPECTRAL:
        delta = wrap_displacement(pts[:, None, :] - pts[None, :, :])
        dists = np.linalg.norm(delta[off], axis=-1)
        if np.min(dists) < _COLLISION_GUARD:
            raise SingularityError("coincident points in spectral torus gradient")
        _, grad = _ewald_sums(pts, kernel.dim, kernel.truncation,
                              kernel.split_time or DEFAULT_SPLIT_TIME, True)
        return grad
    # sphere kernels
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    diff = pts[:, None, :] - pts[None, :, :]
    chord2 = np.maximum(np.sum(diff * diff, axis=-1), 0.0)
    if kernel.singular and np.min(chord2[off]) < _COLLISION_GUARD ** 2:
        raise SingularityError("coincident points with singular sphere kernel")
    safe2 = np.where(off, chord2, 1.0)
    if kernel.kind == GREEN_SPHERE2:
        _, dsum = _legendre_green_sum(gram[off], kernel.truncation or 2000, want_deriv=True)
        weights = np.zeros((n, n))
        weights[off] = dsum
        # d/dx_j of sum S(<x_j, x_k>) is sum S'(t) x_k
        amb = 2.0 * weights @ pts
    elif kernel.kind == COULOMB_SPHERE:
        s = kernel.dim - 2.0
        w = np.where(off, -s * safe2 ** (-(s + 2.0) / 2.0), 0.0)
        amb = 2.0 * np.sum(w[:, :, None] * diff, axis=1)
    elif kernel.kind == RIESZ:
        w = np.where(off, -kernel.s * safe2 ** (-(kernel.s + 2.0) / 2.0), 0.0)
        amb = 2.0 * np.sum(w[:, :, None] * diff, axis=1)
    elif kernel.kind == LOG_SPHERE2:
        w = np.where(off, -1.0 / safe2, 0.0)
        amb = 2.0 * np.sum(w[:, :, None] * diff, axis=1)
    else:
        raise InvalidInputError(f"unknown kernel kind {kernel.kind!r}")
    # project to the tangent spaces
    return amb - np.sum(amb * pts, axis=1, keepdims=True) * pts


def _retract(manifold_kind: str, pts: np.ndarray) -> np.ndarray:
    if manifold_kind == FLAT_TORUS:
        return np.mod(pts, 1.0)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _min_pair_dist(manifold_kind: str, pts: np.ndarray) -> float:
    n = len(pts)
    if n < 2:
        return math.inf
    if manifold_kind == FLAT_TORUS:
        d = np.linalg.norm(wrap_displacement(pts[:, None, :] - pts[None, :, :]), axis=-1)
    else:
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return float(np.min(d[~np.eye(n, dtype=bool)]))


def _descend(config0: PointConfiguration, kernel: KernelSpec,
             params: OptimizerParams) -> MinimizationResult:
    man = config0.manifold
    pts = config0.points.copy()
    n = config0.n
    energy = pair_energy(PointConfiguration(man, pts), kernel).total
    history = [energy]
    step = params.initial_step or max(n ** (1.0 - 2.0 / man.dim) * 1e-3, 1e-6)
    grad = energy_gradient(PointConfiguration(man, pts), kernel)
    grad_norm = float(np.sqrt(np.sum(grad * grad)))
    iters = 0
    converged = grad_norm <= params.grad_tol
    while iters < params.max_iters and not converged:
        iters += 1
        halvings = 0
        while True:
            proposal = _retract(man.kind, pts - step * grad)
            if kernel.singular and _min_pair_dist(man.kind, proposal) < _COLLISION_GUARD:
                accept = False
            else:
                cand = PointConfiguration(man, proposal)
                new_energy = pair_energy(cand, kernel).total
                accept = new_energy <= energy - params.armijo_c * step * grad_norm ** 2
            if accept:
                pts = proposal
                energy = new_energy
                history.append(energy)
                step /= params.shrink ** 0.5  # cautious re-growth
                break
            halvings += 1
            step *= params.shrink
            if halvings >= _MAX_HALVINGS:
                result = _finalize(man, pts, kernel, history, grad_norm, iters, False)
                raise StallError("line search failed 60 consecutive halvings",
                                 result=result)
        grad = energy_gradient(PointConfiguration(man, pts), kernel)
        grad_norm = float(np.sqrt(np.sum(grad * grad)))
        converged = grad_norm <= params.grad_tol
    return _finalize(man, pts, kernel, history, grad_norm, iters, converged)


def _finalize(man, pts, kernel, history, grad_norm, iters, converged):
    cfg = PointConfiguration(man, pts)
    sep = min_separation(cfg) if cfg.n >= 2 else math.inf
    return MinimizationResult(config=cfg, energy_history=history,
                              grad_norm_final=grad_norm, iterations_used=iters,
                              converged=converged, min_separation=sep)


def minimize(config0: PointConfiguration, kernel: KernelSpec,
             params: OptimizerParams = OptimizerParams()) -> MinimizationResult:
    """Monotone-descent minimization; returns the best result over restarts."""
    best = _descend(config0, kernel, params)
    for r in range(params.restarts):
        start = uniform_sample(config0.manifold, config0.n,
                               seed=params.seed + 1000003 * (r + 1))
        try:
            cand = _descend(start, kernel, params)
        except StallError as exc:
            cand = exc.result
        if cand is not None and cand.energy < best.energy:
            best = cand
    return best
