"""Hermitian algebra for finite-dimensional tomography.

States and POVM elements are dense complex numpy arrays. A state is mapped to
a real Bloch vector ``r`` of length ``d**2 - 1`` through

    rho = (1/d) * (I + c * sum_j r_j lambda_j),   c = sqrt(d (d - 1) / 2),

where ``lambda_j`` are generalised Gell-Mann matrices with
``tr(lambda_i lambda_j) = 2 delta_ij``. With this scaling pure states sit on the
unit sphere and Euclidean distance is proportional to Hilbert-Schmidt distance.
A POVM element is written the same way with its own weight ``m_i``:

    E_i = (1/m_i) * (I + c * eta_i . lambda).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import hashlib

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, InvalidPovm, InvalidState

TAU_HERM = 1e-9
TAU_TRACE = 1e-9
TAU_PSD = 1e-9


def _bloch_scale(d):
    return np.sqrt(d * (d - 1) / 2.0)


@dataclass(frozen=True)
class HermitianBasis:
    """Traceless Hermitian basis ``lambda_1 .. lambda_{d^2-1}``.

    ``elements`` has shape ``(d**2 - 1, d, d)``.
    """

    dim: int
    elements: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.dim * self.dim - 1

    def __eq__(self, other):
        if not isinstance(other, HermitianBasis):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.elements, other.elements)

    def __hash__(self):
        return hash((self.dim, self.elements.tobytes()))


@lru_cache(maxsize=None)
def _gellmann_cached(d):
    mats = []
    # symmetric, then antisymmetric off-diagonal pairs, row-major over j < k
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(complex))
    elements = np.array(mats)
    elements.setflags(write=False)
    return HermitianBasis(d, elements)


def gellmann_basis(d):
    """Generalised Gell-Mann basis for dimension ``d``.

    Ordering: symmetric off-diagonal matrices (row-major over ``j < k``), then
    the antisymmetric ones in the same order, then the ``d - 1`` diagonal
    matrices. For ``d = 2`` this is ``(X, Y, Z)``.
    """
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {d!r}")
    return _gellmann_cached(int(d))


def _check_square(a, d=None, what="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got shape {a.shape}")
    if d is not None and a.shape[0] != d:
        raise DimensionMismatch(f"{what} has dimension {a.shape[0]}, expected {d}")
    return a


def is_psd(a, tol=TAU_PSD):
    return bool(np.linalg.eigvalsh(a).min() >= -tol)


def as_density_matrix(rho, d=None):
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Raises :class:`InvalidState` when it is not Hermitian, not trace one or not
    positive semidefinite (within the module tolerances). Nothing is repaired.
    """
    rho = _check_square(rho, d, "density matrix")
    if rho.shape[0] < 2:
        raise InvalidDimension("density matrix dimension must be >= 2")
    if np.abs(rho - rho.conj().T).max() > TAU_HERM:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TAU_TRACE:
        raise InvalidState(f"trace is {np.trace(rho).real:.12g}, expected 1")
    if not is_psd(rho):
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def embed_state(rho, basis):
    """Bloch vector of a Hermitian trace-one matrix."""
    rho = _check_square(rho, basis.dim, "state")
    d = basis.dim
    traces = np.einsum("jab,ba->j", basis.elements, rho).real
    return traces * d / (2.0 * _bloch_scale(d))


def unembed_state(r, basis):
    """Inverse of :func:`embed_state`.

    The result is Hermitian with unit trace but need not be positive.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (basis.size,):
        raise DimensionMismatch(f"Bloch vector must have length {basis.size}, got {r.shape}")
    d = basis.dim
    return (np.eye(d) + _bloch_scale(d) * np.tensordot(r, basis.elements, axes=1)) / d


def unembed_many(rs, basis):
    """Vectorised :func:`unembed_state` for an ``(N, d^2-1)`` array."""
    rs = np.asarray(rs, dtype=float)
    d = basis.dim
    return (np.eye(d) + _bloch_scale(d) * np.tensordot(rs, basis.elements, axes=1)) / d


def bloch_direction_matrix(u, basis):
    """Matrix increment of ``unembed_state`` along Bloch direction ``u``."""
    d = basis.dim
    return _bloch_scale(d) * np.tensordot(np.asarray(u, dtype=float), basis.elements, axes=1) / d


@dataclass(frozen=True)
class Povm:
    """A validated POVM with its Bloch parametrisation.

    Attributes
    ----------
    elements : ndarray, shape (k, d, d)
    weights : ndarray, shape (k,)
        The constants ``m_i = d / tr(E_i)``; ``sum(1 / weights) == 1``.
    etas : ndarray, shape (k, d^2 - 1)
    """

    dim: int
    elements: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    etas: np.ndarray = field(repr=False)
    basis: HermitianBasis = field(repr=False)

    def __len__(self):
        return len(self.elements)

    @property
    def normals(self):
        """Facet normals ``(d - 1) * eta_i``."""
        return (self.dim - 1) * self.etas

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.elements).tobytes())
        return h.hexdigest()[:16]

    def probabilities(self, rho):
        return np.einsum("kab,ba->k", self.elements, rho).real


def embed_povm(elements, basis=None, tol=TAU_PSD):
    """Validate raw POVM elements and compute ``(m_i, eta_i)``.

    Parameters
    ----------
    elements : sequence of (d, d) arrays
    basis : HermitianBasis, optional
        Defaults to the Gell-Mann basis of the matching dimension.
    """
    elements = np.asarray(elements, dtype=complex)
    if elements.ndim != 3 or elements.shape[1] != elements.shape[2] or len(elements) == 0:
        raise InvalidPovm(f"POVM must be a non-empty stack of square matrices, got shape {elements.shape}")
    d = elements.shape[1]
    if basis is None:
        basis = gellmann_basis(d)
    elif basis.dim != d:
        raise DimensionMismatch(f"POVM dimension {d} does not match basis dimension {basis.dim}")
    for i, e in enumerate(elements):
        if np.abs(e - e.conj().T).max() > TAU_HERM:
            raise InvalidPovm(f"element {i} is not Hermitian", index=i)
        if np.linalg.eigvalsh(e).min() < -tol:
            raise InvalidPovm(f"element {i} is not positive semidefinite", index=i)
        if np.trace(e).real < tol:
            raise InvalidPovm(f"element {i} has vanishing trace", index=i)
    if np.abs(elements.sum(axis=0) - np.eye(d)).max() > tol:
        raise InvalidPovm("elements do not sum to the identity")

    weights = d / np.einsum("kaa->k", elements).real
    traces = np.einsum("kab,jba->kj", elements, basis.elements).real
    etas = weights[:, None] * traces / np.sqrt(2.0 * d * (d - 1))
    for a in (elements, weights, etas):
        a.setflags(write=False)
    return Povm(d, elements, weights, etas, basis)


def born_probability(rho, element, tol=TAU_PSD):
    """``tr(E rho)``; values outside ``[-tol, 1 + tol]`` raise."""
    rho = _check_square(rho, what="state")
    element = _check_square(element, rho.shape[0], "POVM element")
    p = float(np.trace(element @ rho).real)
    if p < -tol or p > 1 + tol:
        raise InvalidState(f"Born probability {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def bloch_probabilities(r, povm):
    """Outcome probabilities from the Bloch form ``(1/m_i)(1 + (d-1) r.eta_i)``."""
    return (1.0 + (povm.dim - 1) * (povm.etas @ np.asarray(r, dtype=float))) / povm.weights
