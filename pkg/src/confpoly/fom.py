"""Figures of merit, a maximum-likelihood reference estimate, and
sample-based confidence intervals for figures of merit over a region."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import warnings

import numpy as np

from .errors import DimensionMismatch, DomainError
from .geometry import SamplerOptions, hit_and_run_sample

log = logging.getLogger(__name__)

EIG_CLIP = 1e-12


def _pair(rho, sigma):
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2:
        raise DimensionMismatch(f"shapes {rho.shape} and {sigma.shape} differ")
    return rho, sigma


def _psd_sqrt(a):
    w, v = np.linalg.eigh(a)
    w = np.where(w < EIG_CLIP, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def _pure_vector(sigma, tol=1e-12):
    w, v = np.linalg.eigh(sigma)
    if w[-1] >= 1.0 - tol:
        return v[:, -1]
    return None


def fidelity(rho, sigma):
    """Squared Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    If either argument is pure this reduces to ``<psi|other|psi>``.
    """
    rho, sigma = _pair(rho, sigma)
    for pure, other in ((sigma, rho), (rho, sigma)):
        psi = _pure_vector(pure)
        if psi is not None:
            return float(np.clip((psi.conj() @ other @ psi).real, 0.0, 1.0))
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    return float(np.clip(np.sqrt(np.clip(w, 0.0, None)).sum() ** 2, 0.0, 1.0))


def trace_distance(rho, sigma):
    rho, sigma = _pair(rho, sigma)
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho - sigma)).sum())


def partial_transpose(rho, dims, cut):
    """Transpose the subsystems ``dims[cut:]``."""
    dims = [int(v) for v in dims]
    rho = np.asarray(rho, dtype=complex)
    d = int(np.prod(dims))
    if rho.shape != (d, d):
        raise DimensionMismatch(f"dims {dims} do not match a {rho.shape} matrix")
    if not 1 <= cut < len(dims):
        raise DimensionMismatch(f"cut must lie in 1..{len(dims) - 1}, got {cut}")
    s = len(dims)
    t = rho.reshape(dims + dims)
    axes = list(range(2 * s))
    for j in range(cut, s):
        axes[j], axes[s + j] = axes[s + j], axes[j]
    return t.transpose(axes).reshape(d, d)


def negativity(rho, dims, cut=1):
    """``(||rho^T_B||_1 - 1) / 2`` across the cut between ``dims[:cut]`` and ``dims[cut:]``."""
    w = np.linalg.eigvalsh(partial_transpose(rho, dims, cut))
    return float(max((np.abs(w).sum() - 1.0) / 2.0, 0.0))


def log_likelihood(rho, povm, counts):
    p = povm.probabilities(rho)
    mask = counts > 0
    with np.errstate(divide="ignore"):
        return float(np.sum(counts[mask] * np.log(np.clip(p[mask], 0.0, None))))


@dataclass
class MleResult:
    state: np.ndarray = field(repr=False)
    iterations: int
    log_likelihood: float
    history: list = field(default_factory=list, repr=False)
    converged: bool = True

    def to_dict(self):
        return {"iterations": self.iterations, "log_likelihood": self.log_likelihood,
                "converged": self.converged}


def _r_operator(rho, povm, freqs):
    p = povm.probabilities(rho)
    ratio = np.where(freqs > 0, freqs / np.where(p > 0, p, 1.0), 0.0)
    return np.tensordot(ratio, povm.elements, axes=1), p


def mle_estimate(povm, counts, max_iter=100_000, tol=1e-12, gamma=1e-6, history=False):
    """Maximum-likelihood state by the R rho R fixed-point iteration.

    A full step ``rho <- R rho R / tr`` is taken when it does not lower the
    likelihood; otherwise the diluted step ``(I + t R) rho (I + t R)`` is used
    with ``t`` halved until it does, so the log-likelihood never decreases.
    Iterates with a zero-probability observed outcome are mixed with
    ``gamma * I / d``.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (len(povm),):
        raise DimensionMismatch(f"expected {len(povm)} counts, got {counts.shape}")
    n = counts.sum()
    if n <= 0:
        raise DomainError("no data")
    freqs = counts / n
    d = povm.dim
    ident = np.eye(d)
    if np.linalg.matrix_rank(povm.elements.reshape(len(povm), -1), tol=1e-9) < d * d:
        warnings.warn("POVM is not informationally complete; the MLE is not unique", stacklevel=2)
    rho = ident / d
    ll = log_likelihood(rho, povm, counts)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        R, p = _r_operator(rho, povm, freqs)
        if np.any((p <= 0) & (freqs > 0)):
            rho = (1 - gamma) * rho + gamma * ident / d
            ll = log_likelihood(rho, povm, counts)
            continue
        cand = R @ rho @ R
        cand = 0.5 * (cand + cand.conj().T)
        cand /= np.trace(cand).real
        ll_new = log_likelihood(cand, povm, counts)
        t = 1.0
        while ll_new < ll and t > 1e-12:
            t *= 0.5
            G = ident + t * R
            cand = G @ rho @ G
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            ll_new = log_likelihood(cand, povm, counts)
        if ll_new < ll:
            converged = True
            break
        gain = ll_new - ll
        rho, ll = cand, ll_new
        if history:
            trace.append(ll)
        if gain < tol:
            converged = True
            break
    else:
        log.warning("MLE stopped after %d iterations without converging", max_iter)
    return MleResult(rho, it, ll, trace, converged)


FOM_NAMES = ("fidelity", "trace_distance", "negativity")


@dataclass(frozen=True)
class FomSpec:
    name: str
    reference: np.ndarray | None = None
    dims: tuple | None = None
    cut: int = 1

    def __post_init__(self):
        if self.name not in FOM_NAMES:
            raise DomainError(f"unknown figure of merit {self.name!r}")
        if self.name == "negativity" and self.dims is None:
            raise DomainError("negativity needs an explicit bipartition (dims, cut)")
        if self.name != "negativity" and self.reference is None:
            raise DomainError(f"{self.name} needs a reference state")

    def evaluate(self, rho):
        if self.name == "fidelity":
            return fidelity(rho, self.reference)
        if self.name == "trace_distance":
            return trace_distance(rho, self.reference)
        return negativity(rho, self.dims, self.cut)


@dataclass(frozen=True)
class FomInterval:
    name: str
    lower: float
    upper: float
    sample_count: int
    seed: int
    argmin: int
    argmax: int
    reference: np.ndarray | None = field(default=None, repr=False)
    bipartition: tuple | None = None

    def to_dict(self):
        out = {"name": self.name, "lower": self.lower, "upper": self.upper,
               "sample_count": self.sample_count, "seed": self.seed}
        if self.bipartition is not None:
            out["bipartition"] = {"dims": list(self.bipartition[0]), "cut": self.bipartition[1]}
        return out


def fom_interval(poly, spec, count=10_000, seed=0, opts=None, samples=None):
    """Empirical ``(min, max)`` of a figure of merit over states sampled from the region.

    Pass ``samples`` to reuse an existing :class:`SampleSet`.
    """
    if samples is None:
        samples = hit_and_run_sample(poly, count, seed, opts or SamplerOptions())
    values = np.array([spec.evaluate(s) for s in samples.states])
    lo, hi = int(np.argmin(values)), int(np.argmax(values))
    bip = (tuple(spec.dims), spec.cut) if spec.name == "negativity" else None
    return FomInterval(spec.name, float(values[lo]), float(values[hi]), len(values),
                       int(samples.seed), lo, hi, spec.reference, bip)
