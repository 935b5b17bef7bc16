"""Bayesian credibility of a confidence polytope under the Hilbert-Schmidt prior.

The posterior is ``mu(rho) ~ prod_i tr(E_i rho)^{n_i}`` times the prior. The
Hilbert-Schmidt measure is flat (Lebesgue) in Bloch coordinates on the state
body, which allows two self-normalised importance samplers:

``"prior"``
    draws from the prior itself; weights are the likelihood. Exact but the
    effective sample size collapses once the posterior is narrow.
``"laplace"``
    draws from a multivariate Student-t centred on the MLE with covariance
    from the Fisher information (inflated, heavy-tailed); weights are
    likelihood / proposal density, zero outside the state body.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging

import numpy as np

from .errors import DegenerateWeights, DomainError
from .fom import mle_estimate
from .polytope import build_polytope, contains_bloch
from .quantum import embed_state
from .simulation import default_povm, random_state_hs, random_states_hs, sample_counts

log = logging.getLogger(__name__)

MIN_ESS = 10.0
WARN_ESS = 100.0
CHUNK = 50_000


@dataclass(frozen=True)
class CredibilityEstimate:
    eps_b_hat: float
    std_error: float
    effective_sample_size: float
    mc_samples: int
    seed: int
    method: str

    def to_dict(self):
        return {
            "eps_b_hat": self.eps_b_hat, "std_error": self.std_error,
            "effective_sample_size": self.effective_sample_size,
            "mc_samples": self.mc_samples, "seed": self.seed, "method": self.method,
        }


def _bloch_log_likelihood(rs, povm, counts):
    p = (1.0 + (povm.dim - 1) * rs @ povm.etas.T) / povm.weights
    mask = counts > 0
    if not mask.any():
        return np.zeros(len(rs))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.clip(p[:, mask], 0.0, None)) @ counts[mask]


def _psd_mask(rs, basis):
    d = basis.dim
    c = np.sqrt(d * (d - 1) / 2.0)
    mats = (np.eye(d) + c * np.tensordot(rs, basis.elements, axes=1)) / d
    return np.linalg.eigvalsh(mats)[:, 0] >= 0.0


def _prior_draws(povm, counts, poly, mc, rng):
    logw = np.empty(mc)
    inside = np.empty(mc, dtype=bool)
    for start in range(0, mc, CHUNK):
        m = min(CHUNK, mc - start)
        states = random_states_hs(povm.dim, m, rng)
        rs = np.einsum("jab,nba->nj", povm.basis.elements, states).real
        rs *= povm.dim / (2.0 * np.sqrt(povm.dim * (povm.dim - 1) / 2.0))
        logw[start:start + m] = _bloch_log_likelihood(rs, povm, counts)
        inside[start:start + m] = contains_bloch(poly, rs)
    return logw, inside


def laplace_proposal(povm, counts, inflate=1.5):
    """Centre and scale matrix of the Student-t proposal."""
    n = counts.sum()
    mle = mle_estimate(povm, counts, max_iter=20_000, tol=1e-10).state
    center = embed_state(mle, povm.basis)
    g = (povm.dim - 1) * povm.etas / povm.weights[:, None]
    p = (1.0 + (povm.dim - 1) * povm.etas @ center) / povm.weights
    p = np.maximum(p, (counts + 1.0) / (n + len(counts)))
    fisher = n * (g.T / p) @ g
    fisher += 1e-9 * np.trace(fisher) * np.eye(len(fisher))
    return center, inflate**2 * np.linalg.inv(fisher)


def _laplace_draws(povm, counts, poly, mc, rng, df=4.0):
    center, scale = laplace_proposal(povm, counts)
    D = len(center)
    chol = np.linalg.cholesky(scale)
    logw = np.empty(mc)
    inside = np.empty(mc, dtype=bool)
    for start in range(0, mc, CHUNK):
        m = min(CHUNK, mc - start)
        z = rng.standard_normal((m, D))
        chi = rng.chisquare(df, m)
        rs = center + (z @ chol.T) * np.sqrt(df / chi)[:, None]
        maha = np.sum(z**2, axis=1) * df / chi
        log_q = -0.5 * (df + D) * np.log1p(maha / df)
        lw = _bloch_log_likelihood(rs, povm, counts) - log_q
        lw[~_psd_mask(rs, povm.basis)] = -np.inf
        logw[start:start + m] = lw
        inside[start:start + m] = contains_bloch(poly, rs)
    return logw, inside


def estimate_credibility(poly, povm, counts, mc=200_000, seed=0, method="auto"):
    """Posterior mass outside ``poly``, i.e. the credibility level ``eps_b``.

    ``method="auto"`` uses the prior sampler when there is no data and the
    Laplace proposal otherwise. The standard error is the delta-method error
    of the self-normalised ratio.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (len(povm),):
        raise DomainError(f"expected {len(povm)} counts, got {counts.shape}")
    if mc < 1000:
        raise DomainError("need at least 1000 Monte-Carlo samples")
    if method == "auto":
        method = "prior" if counts.sum() == 0 else "laplace"
    rng = np.random.default_rng(seed)
    if method == "prior":
        logw, inside = _prior_draws(povm, counts, poly, mc, rng)
    elif method == "laplace":
        logw, inside = _laplace_draws(povm, counts, poly, mc, rng)
    else:
        raise DomainError(f"unknown method {method!r}")

    if not np.isfinite(logw).any():
        raise DegenerateWeights("all importance weights vanish; use fewer counts or more samples")
    w = np.exp(logw - logw.max())
    w /= np.sum(w)
    ess = 1.0 / np.sum(w * w)
    if ess < MIN_ESS:
        raise DegenerateWeights(f"effective sample size {ess:.1f} below {MIN_ESS}")
    if ess < WARN_ESS:
        log.warning("effective sample size is only %.1f", ess)
    outside = (~inside).astype(float)
    eps_b = float(np.sum(w * outside))
    se = float(np.sqrt(np.sum(w * w * (outside - eps_b) ** 2)))
    return CredibilityEstimate(eps_b, se, float(ess), int(mc), int(seed), method)


SCAN_MAX_DIM = 4
SCAN_MAX_N = 5000


def ratio_scan(dims, ns, reps, eps, seed, mc=200_000, method="auto", threads=1):
    """``eps / eps_b`` for random Hilbert-Schmidt states over a grid of ``(d, n)``.

    Returns a list of row dicts with keys
    ``d, n, rep, eps, eps_b_hat, stderr, ess, ratio, flag``.
    """
    for d in dims:
        if not 2 <= d <= SCAN_MAX_DIM:
            raise DomainError(f"scan supports 2 <= d <= {SCAN_MAX_DIM}, got {d}")
    for n in ns:
        if not 1 <= n <= SCAN_MAX_N:
            raise DomainError(f"scan supports 1 <= n <= {SCAN_MAX_N}, got {n}")
    cells = [(d, n, rep) for d in dims for n in ns for rep in range(reps)]
    children = np.random.SeedSequence(seed).spawn(len(cells))
    povms = {d: default_povm(d) for d in dims}

    def one(args):
        (d, n, rep), child = args
        s_state, s_counts, s_mc = child.spawn(3)
        povm = povms[d]
        rho = random_state_hs(d, s_state)
        counts = sample_counts(rho, povm, n, s_counts)
        poly = build_polytope(povm, counts, eps)
        row = {"d": d, "n": n, "rep": rep, "eps": eps}
        try:
            est = estimate_credibility(poly, povm, counts, mc,
                                       int(s_mc.generate_state(1, np.uint64)[0]), method)
        except DegenerateWeights as exc:
            log.warning("d=%d n=%d rep=%d: %s", d, n, rep, exc)
            return {**row, "eps_b_hat": float("nan"), "stderr": float("nan"),
                    "ess": float("nan"), "ratio": float("nan"), "flag": "DegenerateWeights"}
        ratio = eps / est.eps_b_hat if est.eps_b_hat > 0 else float("inf")
        return {**row, "eps_b_hat": est.eps_b_hat, "stderr": est.std_error,
                "ess": est.effective_sample_size, "ratio": ratio, "flag": ""}

    jobs = list(zip(cells, children))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def median_ratio(rows):
    vals = [r["ratio"] for r in rows if np.isfinite(r["ratio"])]
    return float(np.median(vals)) if vals else float("nan")
