"""Confidence polytopes built from POVM counts.

Each POVM element ``E_i`` with observed count ``n_i`` contributes one
half-space in Bloch coordinates,

    (d - 1) eta_i . r  <=  m_i (n_i / n + delta_i) - 1,

which is the Born-rule statement ``tr(E_i sigma) <= n_i / n + delta_i``. The
error budget ``eps`` is split over facets; the region (facets intersected with
the state body) contains the true state with probability at least ``1 - eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .clopper_pearson import delta_bounds
from .errors import BasisMismatch, DimensionMismatch, DomainError, InvalidGroup, InvalidSplit
from .quantum import TAU_PSD, HermitianBasis, Povm, embed_state, is_psd

FACET_SLACK = 1e-12


@dataclass(frozen=True)
class Facet:
    """Half-space ``normal . r <= offset``."""

    normal: np.ndarray
    offset: float
    eps_i: float
    clamped: bool = False
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "normal": [float(v) for v in self.normal],
            "offset": float(self.offset),
            "eps_i": float(self.eps_i),
            "clamped": bool(self.clamped),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            normal=np.asarray(data["normal"], dtype=float),
            offset=float(data["offset"]),
            eps_i=float(data["eps_i"]),
            clamped=bool(data.get("clamped", False)),
            provenance=dict(data.get("provenance", {})),
        )


@dataclass(frozen=True)
class ConfidencePolytope:
    """Intersection of facet half-spaces with the state body.

    ``epsilon_total`` is the error probability the region is certified for. It
    equals the sum of the facet shares plus ``eps_reserve``, the budget carried
    by factors that contributed no facets (e.g. an empty polytope in a
    combination).
    """

    dim: int
    basis: HermitianBasis = field(repr=False)
    facets: tuple
    epsilon_total: float
    eps_reserve: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        budget = sum(f.eps_i for f in self.facets) + self.eps_reserve
        if abs(budget - self.epsilon_total) > 1e-12:
            raise InvalidSplit(
                f"facet budgets sum to {budget!r}, polytope claims {self.epsilon_total!r}"
            )

    def __len__(self):
        return len(self.facets)

    @property
    def normals(self):
        if not self.facets:
            return np.zeros((0, self.basis.size))
        return np.array([f.normal for f in self.facets])

    @property
    def offsets(self):
        return np.array([f.offset for f in self.facets], dtype=float)

    def active(self):
        """``(A, b)`` for the non-vacuous facets only."""
        keep = [f for f in self.facets if not f.clamped]
        if not keep:
            return np.zeros((0, self.basis.size)), np.zeros(0)
        return np.array([f.normal for f in keep]), np.array([f.offset for f in keep])

    def to_dict(self):
        return {
            "dim": self.dim,
            "epsilon_total": self.epsilon_total,
            "eps_reserve": self.eps_reserve,
            "facets": [f.to_dict() for f in self.facets],
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class EpsilonSplit:
    strategy: str = "uniform"
    weights: tuple | None = None

    def to_dict(self):
        out = {"strategy": self.strategy}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


def split_epsilon(eps, k, split=None):
    """Divide ``eps`` into ``k`` positive shares.

    >>> split_epsilon(0.01, 3, EpsilonSplit("weighted", (1, 1, 2)))
    [0.0025, 0.0025, 0.005]
    """
    split = split or EpsilonSplit()
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if int(k) != k or k < 1:
        raise InvalidSplit(f"need at least one share, got k={k}")
    if split.strategy == "uniform":
        return [eps / k] * k
    if split.strategy != "weighted":
        raise InvalidSplit(f"unknown split strategy {split.strategy!r}")
    weights = np.asarray(split.weights if split.weights is not None else [], dtype=float)
    if weights.shape != (k,):
        raise InvalidSplit(f"expected {k} weights, got {weights.size}")
    if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise InvalidSplit("weights must be finite and strictly positive")
    return [float(v) for v in eps * weights / weights.sum()]


def _as_counts(counts, k):
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.shape[0] != k:
        raise DimensionMismatch(f"expected {k} counts, got shape {counts.shape}")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise DomainError("counts must be non-negative integers")
    counts = counts.astype(np.int64)
    if counts.sum() < 1:
        raise DomainError("need at least one measurement round")
    return counts


def _facets_for(weights, normals, n_sub, n, eps_shares, provenances):
    _, bound, clamped, _ = delta_bounds(n_sub, n, eps_shares)
    offsets = weights * bound - 1.0
    return [
        Facet(np.array(a, dtype=float), float(b), float(e), bool(c), p)
        for a, b, e, c, p in zip(normals, offsets, eps_shares, clamped, provenances)
    ]


def _validate_groups(groups, k):
    seen = set()
    out = []
    for g in groups:
        key = tuple(sorted(set(int(i) for i in g)))
        if len(key) != len(list(g)):
            raise InvalidGroup(f"group {list(g)} repeats an index")
        if not key or len(key) >= k:
            raise InvalidGroup(f"group {list(g)} must be a non-empty proper subset")
        if key[0] < 0 or key[-1] >= k:
            raise InvalidGroup(f"group {list(g)} has an index outside 0..{k - 1}")
        if key in seen:
            raise InvalidGroup(f"duplicate group {list(key)}")
        seen.add(key)
        out.append(key)
    return out


def group_facets(povm, counts, groups, eps_budget):
    """Extra facets from coarse-grained elements ``E_G = sum_{i in G} E_i``.

    Indices are 0-based. ``eps_budget`` holds one share per group.
    """
    counts = _as_counts(counts, len(povm))
    groups = _validate_groups(groups, len(povm))
    eps_budget = np.asarray(eps_budget, dtype=float)
    if eps_budget.shape != (len(groups),):
        raise InvalidSplit(f"expected {len(groups)} epsilon shares, got {eps_budget.size}")
    if not groups:
        return []
    n = int(counts.sum())
    # 1/m_G and eta_G/m_G are additive over members
    inv_m = 1.0 / povm.weights
    weights = []
    normals = []
    n_sub = []
    for g in groups:
        idx = list(g)
        w = 1.0 / inv_m[idx].sum()
        eta = w * (povm.etas[idx] * inv_m[idx, None]).sum(axis=0)
        weights.append(w)
        normals.append((povm.dim - 1) * eta)
        n_sub.append(counts[idx].sum())
    prov = [{"group": list(g)} for g in groups]
    return _facets_for(np.array(weights), normals, np.array(n_sub), n, eps_budget, prov)


def build_polytope(povm, counts, eps, split=None, groups=None):
    """Confidence polytope for one POVM.

    With ``groups``, the budget is split over ``len(povm) + len(groups)`` facets
    (base elements first, then groups in the given order).
    """
    if not isinstance(povm, Povm):
        raise TypeError("povm must be a Povm; see embed_povm")
    k = len(povm)
    counts = _as_counts(counts, k)
    groups = list(groups or [])
    shares = split_epsilon(eps, k + len(groups), split)
    n = int(counts.sum())
    prov = [{"povm_index": i} for i in range(k)]
    facets = _facets_for(povm.weights, povm.normals, counts, n, np.array(shares[:k]), prov)
    facets += group_facets(povm, counts, groups, shares[k:])
    meta = {"n": n, "povm": povm.fingerprint(), "groups": [list(g) for g in groups]}
    return ConfidencePolytope(povm.dim, povm.basis, tuple(facets), sum(shares), 0.0, meta)


def empty_polytope(basis, eps):
    """Facet-free region (the whole state body) holding ``eps`` in reserve."""
    return ConfidencePolytope(basis.dim, basis, (), float(eps), float(eps), {})


def combine_polytopes(polys):
    """Intersection of independently certified regions; error budgets add."""
    polys = list(polys)
    if not polys:
        raise DomainError("nothing to combine")
    basis = polys[0].basis
    for p in polys[1:]:
        if p.basis != basis:
            raise BasisMismatch("polytopes use different embeddings")
    facets = []
    for j, p in enumerate(polys):
        facets += [replace(f, provenance={**f.provenance, "measurement": j}) for f in p.facets]
    total = sum(p.epsilon_total for p in polys)
    reserve = sum(p.eps_reserve for p in polys)
    meta = {"combined": [p.metadata for p in polys]}
    return ConfidencePolytope(basis.dim, basis, tuple(facets), total, reserve, meta)


def facet_slack(poly, r):
    """``offset - normal . r`` for every facet (non-negative means satisfied)."""
    r = np.asarray(r, dtype=float)
    if not poly.facets:
        return np.zeros(0) if r.ndim == 1 else np.zeros((len(r), 0))
    return poly.offsets - r @ poly.normals.T


def contains_bloch(poly, r, tol=FACET_SLACK):
    """Facet test only, vectorised over rows of ``r``."""
    return np.all(facet_slack(poly, r) >= -tol, axis=-1)


def contains(poly, rho, tol=FACET_SLACK):
    """Whether state ``rho`` lies in the confidence region.

    The matrix must be Hermitian, trace one and PSD; a Bloch point inside all
    facets but outside the state body is rejected.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (poly.dim, poly.dim):
        raise DimensionMismatch(f"state has shape {rho.shape}, polytope dimension is {poly.dim}")
    if np.abs(rho - rho.conj().T).max() > 1e-9 or abs(np.trace(rho) - 1) > 1e-9:
        return False
    if not is_psd(rho, TAU_PSD):
        return False
    return bool(contains_bloch(poly, embed_state(rho, poly.basis), tol))


def grouping_scheme(k, sizes):
    """All groups of the given sizes, e.g. ``grouping_scheme(4, (2, 2))``.

    A scheme ``(a, b)`` with ``a + b = k`` yields every subset of size ``a`` and
    every subset of size ``b`` (deduplicated); each split into two parts gives
    both one-sided facets.
    """
    if sum(sizes) != k:
        raise InvalidGroup(f"scheme {sizes} does not partition {k} elements")
    out = []
    seen = set()
    for s in sorted(set(sizes)):
        for g in combinations(range(k), s):
            if g not in seen:
                seen.add(g)
                out.append(list(g))
    return out
