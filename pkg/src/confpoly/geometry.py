"""Geometric queries on confidence polytopes.

Linear programs run on the facet system only (the state body is not
polyhedral); sampling respects both the facets and positivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import linalg, optimize

from .errors import ChainStall, EmptyRegion, UnboundedAxis
from .polytope import contains_bloch, facet_slack
from .quantum import bloch_direction_matrix, embed_state, unembed_state

log = logging.getLogger(__name__)

LP_TOL = 1e-9


@dataclass(frozen=True)
class LinearProgram:
    """Maximise ``objective . x`` subject to ``A x <= b``."""

    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    value: float | None = None
    dual: np.ndarray | None = None

    @property
    def optimal(self):
        return self.status == "optimal"


def _certify(lp, x, y):
    """Check primal feasibility, dual feasibility and the duality gap."""
    A, b, c = lp.A, lp.b, lp.objective
    scale = 1.0 + np.abs(b).max(initial=0.0) + np.abs(c).max(initial=0.0)
    if np.any(A @ x - b > LP_TOL * scale):
        return False
    if np.any(y < -LP_TOL * scale) or np.abs(A.T @ y - c).max(initial=0.0) > LP_TOL * scale:
        return False
    return abs(c @ x - b @ y) <= LP_TOL * scale * (1.0 + abs(c @ x))


def solve_lp(lp):
    """Solve a dense LP with HiGHS and verify the optimality certificate.

    Returns an :class:`LPResult` whose ``status`` is ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``.
    """
    c = np.asarray(lp.objective, dtype=float)
    A = np.asarray(lp.A, dtype=float).reshape(-1, c.size)
    b = np.asarray(lp.b, dtype=float)
    lp = LinearProgram(c, A, b)
    res = optimize.linprog(
        -c, A_ub=A if len(A) else None, b_ub=b if len(A) else None,
        bounds=[(None, None)] * c.size, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    x = res.x
    y = -res.ineqlin.marginals if len(A) else np.zeros(0)
    if not _certify(lp, x, y):
        raise RuntimeError("LP solution failed its optimality certificate")
    return LPResult("optimal", x, float(c @ x), y)


@dataclass(frozen=True)
class BoundingBox:
    intervals: np.ndarray  # shape (D, 2)

    @property
    def lengths(self):
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def longest_axis(self):
        """Axis whose extra measurement would shrink the box most."""
        return int(np.argmax(self.lengths))

    def contains(self, r, tol=1e-9):
        r = np.asarray(r, dtype=float)
        return np.all((r >= self.intervals[:, 0] - tol) & (r <= self.intervals[:, 1] + tol), axis=-1)

    def to_dict(self):
        return {
            "intervals": [[float(lo), float(hi)] for lo, hi in self.intervals],
            "lengths": [float(v) for v in self.lengths],
            "suggested_axis": self.longest_axis,
        }


def bounding_box(poly):
    """Axis-aligned outer box of the facet system (positivity ignored)."""
    A, b = poly.active()
    D = poly.basis.size
    intervals = np.empty((D, 2))
    for j in range(D):
        for col, sign in ((1, 1.0), (0, -1.0)):
            e = np.zeros(D)
            e[j] = sign
            res = solve_lp(LinearProgram(e, A, b))
            if res.status == "infeasible":
                raise EmptyRegion("facet system is infeasible")
            if res.status == "unbounded":
                raise UnboundedAxis(j)
            intervals[j, col] = sign * res.value
    return BoundingBox(intervals)


def chebyshev_center(poly):
    """Centre and radius of the largest ball inside the facet system.

    Positivity is ignored. Vacuous facets are dropped.
    """
    A, b = poly.active()
    D = poly.basis.size
    norms = np.linalg.norm(A, axis=1) if len(A) else np.zeros(0)
    c = np.zeros(D + 1)
    c[-1] = 1.0
    A_ext = np.hstack([A, norms[:, None]]) if len(A) else np.zeros((0, D + 1))
    # R >= 0
    A_ext = np.vstack([A_ext, np.r_[np.zeros(D), -1.0]])
    b_ext = np.r_[b, 0.0]
    res = solve_lp(LinearProgram(c, A_ext, b_ext))
    if res.status == "infeasible":
        raise EmptyRegion("facet system is infeasible")
    if res.status == "unbounded":
        box = bounding_box(poly)  # raises UnboundedAxis with the offending axis
        raise UnboundedAxis(int(np.argmax(box.lengths)))
    return res.x[:D], float(res.x[D])


def _min_eig(m):
    return float(np.linalg.eigvalsh(m)[0])


def _strictly_inside(poly, r, margin=1e-10):
    rho = unembed_state(r, poly.basis)
    slack = facet_slack(poly, r)
    return _min_eig(rho) > margin and (slack.size == 0 or slack.min() > margin)


def _cutting_plane_center(poly, max_iter=200):
    """Point maximising the smaller of facet slack and minimum eigenvalue.

    ``lambda_min(rho(r)) >= s`` is enforced through linear cuts
    ``v^H rho(r) v >= s`` at the current minimum eigenvectors (Kelley's method);
    the LP relaxation's optimum upper-bounds the true one, so a negative value
    proves the region empty and a zero value proves it has no interior.
    """
    basis = poly.basis
    d, D = basis.dim, basis.size
    A, b = poly.active()
    norms = np.linalg.norm(A, axis=1) if len(A) else np.zeros(0)
    scale = np.sqrt(d * (d - 1) / 2.0) / d
    rows = [np.hstack([A, norms[:, None]])] if len(A) else []
    rhs = [b] if len(A) else []
    cuts_A, cuts_b = [], []
    obj = np.zeros(D + 1)
    obj[-1] = 1.0
    cap = (np.r_[np.zeros(D), 1.0], 1.0 / d)
    r = np.zeros(D)
    for _ in range(max_iter):
        w, v = np.linalg.eigh(unembed_state(r, basis))
        vec = v[:, 0]
        # v^H rho v = 1/d + scale * sum_j r_j v^H lambda_j v
        coeff = scale * np.einsum("a,jab,b->j", vec.conj(), basis.elements, vec).real
        cuts_A.append(np.r_[-coeff, 1.0])
        cuts_b.append(1.0 / d)
        A_lp = np.vstack(rows + [np.array(cuts_A), cap[0][None, :]])
        b_lp = np.concatenate(rhs + [np.array(cuts_b), [cap[1]]])
        res = solve_lp(LinearProgram(obj, A_lp, b_lp))
        if res.status != "optimal":
            raise EmptyRegion("no state satisfies the facets")
        r, s_bound = res.x[:D], res.x[D]
        if s_bound < -1e-12:
            raise EmptyRegion("no state satisfies the facets")
        if s_bound < 1e-12:
            raise ChainStall("region has no interior")
        s_true = min(_min_eig(unembed_state(r, basis)), (b - A @ r).min() if len(A) else np.inf)
        if s_true >= 0.5 * s_bound:
            return r
    if _strictly_inside(poly, r, 0.0):
        return r
    raise EmptyRegion("could not locate a strictly feasible state")


def interior_point(poly):
    """A state strictly inside the region.

    Tries the maximally mixed state, then the facet Chebyshev centre with
    negative eigenvalues clipped, then a cutting-plane search that also
    certifies emptiness.
    """
    basis = poly.basis
    r0 = np.zeros(basis.size)
    if _strictly_inside(poly, r0):
        return unembed_state(r0, basis)
    try:
        center, _ = chebyshev_center(poly)
    except UnboundedAxis:
        center = None
    if center is not None:
        w, v = np.linalg.eigh(unembed_state(center, basis))
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
        rho /= np.trace(rho).real
        if _strictly_inside(poly, embed_state(rho, basis)):
            return rho
    return unembed_state(_cutting_plane_center(poly), basis)


@dataclass(frozen=True)
class SamplerOptions:
    burn_in: int = 1000
    thinning: int = 10
    chains: int = 1
    psd_method: str = "analytic"  # or "bisect"
    stall_limit: int = 100

    def to_dict(self):
        return {
            "burn_in": self.burn_in, "thinning": self.thinning, "chains": self.chains,
            "psd_method": self.psd_method, "stall_limit": self.stall_limit,
        }


@dataclass(frozen=True)
class SampleSet:
    states: np.ndarray = field(repr=False)  # (N, d, d)
    bloch: np.ndarray = field(repr=False)  # (N, D)
    seed: int
    burn_in: int
    thinning: int
    chain_count: int

    def __len__(self):
        return len(self.states)

    def to_dict(self):
        return {
            "seed": self.seed, "burn_in": self.burn_in, "thinning": self.thinning,
            "chain_count": self.chain_count,
            "bloch": [[float(v) for v in row] for row in self.bloch],
        }


def _facet_chord(A, b, x, u):
    """Parameter range ``[lo, hi]`` with ``A (x + t u) <= b``."""
    au = A @ u
    slack = b - A @ x
    with np.errstate(divide="ignore", invalid="ignore"):
        t = slack / au
    hi = t[au > 0].min(initial=np.inf)
    lo = t[au < 0].max(initial=-np.inf)
    return max(lo, -np.inf), hi


def _psd_chord_analytic(rho, U):
    """Exact ``t`` range where ``rho + t U`` stays PSD, ``rho`` positive definite."""
    try:
        L = np.linalg.cholesky(rho)
    except np.linalg.LinAlgError:
        return 0.0, 0.0
    Linv = linalg.solve_triangular(L, np.eye(len(L)), lower=True)
    mu = np.linalg.eigvalsh(Linv @ U @ Linv.conj().T)
    hi = -1.0 / mu[0] if mu[0] < 0 else np.inf
    lo = -1.0 / mu[-1] if mu[-1] > 0 else -np.inf
    return lo, hi


def _psd_edge_bisect(rho, U, t_out, tol=1e-10, max_iter=200):
    """Largest ``t`` in ``[0, t_out]`` (up to ``tol``) keeping ``rho + t U`` PSD."""
    if _min_eig(rho + t_out * U) >= 0:
        return t_out
    lo, hi = 0.0, t_out
    for _ in range(max_iter):
        if abs(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        if _min_eig(rho + mid * U) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _run_chain(poly, start, n_keep, rng, opts):
    basis = poly.basis
    A, b = poly.active()
    D = basis.size
    x = embed_state(start, basis)
    rho = np.asarray(start, dtype=complex)
    kept_r = np.empty((n_keep, D))
    kept = 0
    step = 0
    stalls = 0
    total = opts.burn_in + n_keep * opts.thinning
    while step < total:
        u = rng.standard_normal(D)
        u /= np.linalg.norm(u)
        lo, hi = _facet_chord(A, b, x, u) if len(A) else (-np.inf, np.inf)
        U = bloch_direction_matrix(u, basis)
        if opts.psd_method == "analytic":
            plo, phi = _psd_chord_analytic(rho, U)
            lo, hi = max(lo, plo), min(hi, phi)
        else:
            # pure states have |r| = 1, so the state body fits in a radius-2 chord
            hi = _psd_edge_bisect(rho, U, min(hi, 2.0))
            lo = -_psd_edge_bisect(rho, -U, min(-lo, 2.0))
        if not hi - lo >= 1e-14:
            stalls += 1
            if stalls >= opts.stall_limit:
                raise ChainStall(f"{stalls} consecutive degenerate chords; region has no interior")
            continue
        stalls = 0
        t = rng.uniform(lo, hi)
        x = x + t * u
        rho = rho + t * U
        step += 1
        if step > opts.burn_in and (step - opts.burn_in) % opts.thinning == 0:
            kept_r[kept] = x
            kept += 1
    return kept_r


def hit_and_run_sample(poly, count, seed, opts=None):
    """Approximately uniform states from the region via hit-and-run.

    Uniform is with respect to Lebesgue measure in Bloch coordinates, i.e. the
    Hilbert-Schmidt measure restricted to the region. Each chain draws its own
    stream from ``numpy.random.SeedSequence(seed).spawn``.
    """
    opts = opts or SamplerOptions()
    if count < 1:
        raise ValueError("count must be positive")
    start = interior_point(poly)
    streams = np.random.SeedSequence(seed).spawn(opts.chains)
    per_chain = [count // opts.chains + (1 if i < count % opts.chains else 0) for i in range(opts.chains)]
    parts = [
        _run_chain(poly, start, m, np.random.default_rng(s), opts)
        for m, s in zip(per_chain, streams) if m > 0
    ]
    bloch = np.vstack(parts)
    d = poly.dim
    c = np.sqrt(d * (d - 1) / 2.0)
    states = (np.eye(d) + c * np.tensordot(bloch, poly.basis.elements, axes=1)) / d
    return SampleSet(states, bloch, int(seed), opts.burn_in, opts.thinning, opts.chains)


def estimate_volume(poly, samples, seed, box=None):
    """Monte-Carlo volume of the region (facets and positivity) in Bloch space.

    Points are drawn uniformly from ``box`` (an ``(D, 2)`` array, default the
    cube ``[-1, 1]^D`` which holds the whole state body). Returns
    ``(volume, standard_error)``.
    """
    D = poly.basis.size
    box = np.tile([-1.0, 1.0], (D, 1)) if box is None else np.asarray(box, dtype=float)
    rng = np.random.default_rng(seed)
    pts = box[:, 0] + rng.random((samples, D)) * (box[:, 1] - box[:, 0])
    inside = contains_bloch(poly, pts)
    if inside.any():
        d = poly.dim
        c = np.sqrt(d * (d - 1) / 2.0)
        idx = np.flatnonzero(inside)
        mats = (np.eye(d) + c * np.tensordot(pts[idx], poly.basis.elements, axes=1)) / d
        inside[idx] = np.linalg.eigvalsh(mats)[:, 0] >= 0
    frac = inside.mean()
    vol_box = float(np.prod(box[:, 1] - box[:, 0]))
    return vol_box * frac, vol_box * np.sqrt(frac * (1 - frac) / samples)
