"""CSL decoherence rates for superposed particle configurations.

The exact pairwise form sums the smeared kernel G over all particle pairs of
the two branches; the cluster shortcut lambda * sum(n_i^2) is its
coarse-grained limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from collapsim.errors import DomainError, PreconditionError, StructuralError
from collapsim.params import CollapseParams

CUTOFF_RADII = 8.0  # neighbour cutoff in units of r_C
_BLOCK = 1024


def _check_rc(r_C):
    if not (math.isfinite(r_C) and r_C > 0):
        raise DomainError(f"r_C must be positive, got {r_C!r}")


def smearing_g(x, r_C: float):
    """Normalized Gaussian smearing function of width r_C, in m^-3.

    ``x`` is a 3-vector or an array of 3-vectors (last axis).
    """
    _check_rc(r_C)
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    return (2.0 * math.pi * r_C**2) ** -1.5 * np.exp(-r2 / (2.0 * r_C**2))


def kernel_G(x, r_C: float):
    """Self-convolution of :func:`smearing_g`: a Gaussian of width sqrt(2) r_C."""
    _check_rc(r_C)
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    return (4.0 * math.pi * r_C**2) ** -1.5 * np.exp(-r2 / (4.0 * r_C**2))


@dataclass(frozen=True, eq=False)
class BranchConfiguration:
    """Positions (m) of the same N particles in two superposed branches."""

    branch_a: np.ndarray
    branch_b: np.ndarray

    def __post_init__(self):
        a = np.array(self.branch_a, dtype=float)
        b = np.array(self.branch_b, dtype=float)
        for name, arr in (("branch_a", a), ("branch_b", b)):
            if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
                raise StructuralError(f"{name} must be a non-empty list of 3-vectors")
        if a.shape != b.shape:
            raise StructuralError(
                f"branch lengths differ: {a.shape[0]} vs {b.shape[0]} particles"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise StructuralError("coordinates must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "branch_a", a)
        object.__setattr__(self, "branch_b", b)

    @property
    def size(self) -> int:
        return self.branch_a.shape[0]

    def swapped(self) -> BranchConfiguration:
        return BranchConfiguration(self.branch_b, self.branch_a)

    def translated(self, shift) -> BranchConfiguration:
        shift = np.asarray(shift, dtype=float)
        return BranchConfiguration(self.branch_a + shift, self.branch_b + shift)

    @classmethod
    def rigid_displacement(cls, positions, displacement) -> BranchConfiguration:
        positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        return cls(positions, positions + np.asarray(displacement, dtype=float))


def load_configuration(path) -> BranchConfiguration:
    """Read ``x' y' z' x'' y'' z''`` rows (metres); ``#`` starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6:
            raise StructuralError(f"{path}:{lineno}: expected 6 floats, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise StructuralError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise StructuralError(f"{path}: no particles")
    data = np.array(rows)
    return BranchConfiguration(data[:, :3], data[:, 3:])


def _sum_expm1(p, q, r_C):
    """sum_ij expm1(-|p_i - q_j|^2 / 4 r_C^2), blockwise to bound memory."""
    total = 0.0
    scale = 4.0 * r_C**2
    for start in range(0, p.shape[0], _BLOCK):
        d = p[start : start + _BLOCK, None, :] - q[None, :, :]
        total += float(np.sum(np.expm1(-np.einsum("ijk,ijk->ij", d, d) / scale)))
    return total


def _sum_gauss_within(p, q, r_C, cutoff):
    """sum over pairs closer than cutoff of exp(-d^2 / 4 r_C^2)."""
    tp, tq = cKDTree(p), cKDTree(q)
    dist = tp.sparse_distance_matrix(tq, cutoff, output_type="ndarray")
    d = np.sort(dist["v"])
    return float(np.sum(np.exp(-(d * d) / (4.0 * r_C**2))))


def gamma_pairwise(
    config: BranchConfiguration, params: CollapseParams, use_cutoff: bool = False
) -> float:
    """Decay rate (s^-1) of the coherence between two branch configurations.

    (gamma/2) sum_ij [G(a_i - a_j) + G(b_i - b_j) - 2 G(a_i - b_j)]. The exact
    path is written with expm1 so that tiny displacements do not cancel
    catastrophically. ``use_cutoff`` drops pairs further apart than
    8 r_C (relative error below 1e-6) and scales as O(N) for sparse systems.
    """
    a, b, r_C = config.branch_a, config.branch_b, params.r_C
    # (gamma/2) * G(0) == lambda / 2
    prefactor = 0.5 * params.lambda_csl
    if use_cutoff:
        cutoff = CUTOFF_RADII * r_C
        s = (
            _sum_gauss_within(a, a, r_C, cutoff)
            + _sum_gauss_within(b, b, r_C, cutoff)
            - 2.0 * _sum_gauss_within(a, b, r_C, cutoff)
        )
    else:
        s = _sum_expm1(a, a, r_C) + _sum_expm1(b, b, r_C) - 2.0 * _sum_expm1(a, b, r_C)
    return prefactor * s


@dataclass(frozen=True)
class ClusterSpec:
    """N clusters of n particles each; n may be a real nucleon-count weight."""

    n: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.n) and self.n > 0):
            raise DomainError(f"n must be positive, got {self.n!r}")
        if not (self.N >= 1 and float(self.N).is_integer()):
            raise DomainError(f"N must be an integer >= 1, got {self.N!r}")


def gamma_clusters(spec: ClusterSpec, lambda_csl: float) -> float:
    return lambda_csl * spec.n**2 * spec.N


def offdiagonal_decay(gamma_rate: float, t: float) -> float:
    """Suppression factor exp(-Gamma t) of an off-diagonal density-matrix element."""
    if gamma_rate < 0 or t < 0:
        raise DomainError("gamma_rate and t must be non-negative")
    return math.exp(-gamma_rate * t)


@dataclass(frozen=True)
class ConsistencyReport:
    pairwise: float
    cluster_estimate: float
    cluster_sizes: tuple
    ratio: float

    @property
    def compliant(self) -> bool:
        return 0.5 <= self.ratio <= 2.0


def _clusters(points, link):
    tree = cKDTree(points)
    graph = tree.sparse_distance_matrix(tree, link, output_type="coo_matrix")
    _, labels = connected_components(graph, directed=False)
    return labels


def gamma_consistency_report(
    config: BranchConfiguration, params: CollapseParams
) -> ConsistencyReport:
    """Compare the pairwise rate with the cluster shortcut lambda * sum(n_i^2).

    Requires branch_a to consist of compact clusters (span < r_C/4) separated
    by more than 4 r_C, and branch_b to be branch_a rigidly displaced by at
    least 5 r_C.
    """
    a, b, r_C = config.branch_a, config.branch_b, params.r_C
    shift = b - a
    if not np.allclose(shift, shift[0], rtol=0.0, atol=1e-9 * r_C):
        raise PreconditionError("branch_b is not a rigid displacement of branch_a")
    if np.linalg.norm(shift[0]) < 5.0 * r_C:
        raise PreconditionError(
            f"displacement {np.linalg.norm(shift[0]) / r_C:.3g} r_C is not >> r_C (need >= 5 r_C)"
        )
    labels = _clusters(a, r_C)
    sizes = []
    for label in np.unique(labels):
        members = a[labels == label]
        sizes.append(members.shape[0])
        span = np.max(np.linalg.norm(members[:, None] - members[None], axis=-1))
        if span >= 0.25 * r_C:
            raise PreconditionError(
                f"cluster {label} spans {span / r_C:.3g} r_C (must be < 0.25 r_C)"
            )
    if len(sizes) > 1:
        tree = cKDTree(a)
        close = tree.query_pairs(4.0 * r_C, output_type="ndarray")
        if close.size and np.any(labels[close[:, 0]] != labels[close[:, 1]]):
            raise PreconditionError("clusters are closer than 4 r_C to each other")
    pairwise = gamma_pairwise(config, params)
    estimate = params.lambda_csl * float(sum(s * s for s in sizes))
    return ConsistencyReport(pairwise, estimate, tuple(sizes), pairwise / estimate)
