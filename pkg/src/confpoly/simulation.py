"""Standard measurements, test states and simulated count data.

Random streams come from numpy's ``default_rng`` (PCG64). Repetitions use
child seeds from ``SeedSequence(seed).spawn`` so results do not depend on
execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .errors import DomainError, InvalidDimension, InvalidPovm
from .polytope import build_polytope, contains_bloch
from .quantum import embed_povm, embed_state

RNG_ALGORITHM = f"numpy-{np.__version__}/PCG64"

_I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SKEWED_SIC_ETAS = np.array([
    [0.0, 0.0, 1.0],
    [3 / 10, 0.0, -1 / 3],
    [-3 / 20, 3 / 20, -1 / 3],
    [-3 / 20, -3 / 20, -1 / 3],
])


def _qubit_elements(weights, vectors):
    sig = np.array([PAULI["X"], PAULI["Y"], PAULI["Z"]])
    return np.array([(_I2 + np.tensordot(v, sig, axes=1)) / w for w, v in zip(weights, vectors)])


def tetrahedron():
    """Unit vectors of a regular tetrahedron with one vertex on +z."""
    s = 2 * np.sqrt(2) / 3
    phis = [0.0, 2 * np.pi / 3, 4 * np.pi / 3]
    return np.array([[0.0, 0.0, 1.0]] + [[s * np.cos(p), s * np.sin(p), -1 / 3] for p in phis])


def sic_qubit():
    return embed_povm(_qubit_elements([4] * 4, tetrahedron()))


def mub_qubit():
    """Six elements ``(1 +/- sigma_k) / 6`` ordered +X, -X, +Y, -Y, +Z, -Z."""
    vecs = []
    for k in range(3):
        for sign in (1.0, -1.0):
            v = np.zeros(3)
            v[k] = sign
            vecs.append(v)
    return embed_povm(_qubit_elements([6] * 6, vecs))


def skewed_sic_qubit():
    """Four-element skewed SIC; prefactor 1/4 so the elements sum to identity."""
    return embed_povm(_qubit_elements([4] * 4, SKEWED_SIC_ETAS))


def axis_povm(axis):
    """Projective two-outcome measurement of ``X``, ``Y`` or ``Z``."""
    p = PAULI[axis.upper()]
    return embed_povm(np.array([(_I2 + p) / 2, (_I2 - p) / 2]))


def tensor_povm(*povms):
    """Elementwise tensor products, first factor most significant."""
    elems = [reduce(np.kron, combo) for combo in product(*(p.elements for p in povms))]
    return embed_povm(np.array(elems))


def pauli_settings_povm(s):
    """Uniformly chosen local Pauli settings on ``s`` qubits as one POVM.

    Elements are ordered setting-major (``X, Y, Z`` per qubit, first qubit most
    significant), then by outcome (``+`` before ``-``). ``6**s`` elements.
    """
    if int(s) != s or not 1 <= s <= 5:
        raise DomainError(f"number of qubits must be in 1..5, got {s}")
    proj = {(a, sign): (_I2 + sign * PAULI[a]) / 2 for a in "XYZ" for sign in (1, -1)}
    elems = []
    for setting in product("XYZ", repeat=s):
        for signs in product((1, -1), repeat=s):
            elems.append(reduce(np.kron, [proj[a, g] for a, g in zip(setting, signs)]) / 3**s)
    return embed_povm(np.array(elems))


# Commuting pairs of two-qubit Paulis; their joint eigenbases are five MUBs in d=4.
_MUB4_PAIRS = (("XI", "IX"), ("YI", "IY"), ("ZI", "IZ"), ("XY", "YZ"), ("YX", "ZY"))


def _two_qubit_pauli(label):
    mats = {"I": _I2, **PAULI}
    return np.kron(mats[label[0]], mats[label[1]])


def _mub4_elements():
    elems = []
    for a, b in _MUB4_PAIRS:
        A, B = _two_qubit_pauli(a), _two_qubit_pauli(b)
        for s, t in product((1, -1), repeat=2):
            elems.append((np.eye(4) + s * A) @ (np.eye(4) + t * B) / 20)
    return np.array(elems)


def mub_povm(d):
    """All ``d + 1`` mutually unbiased bases, weight ``1/(d+1)``.

    Implemented for prime ``d`` (quadratic-phase construction) and for
    ``d = 4``, where the bases are the joint eigenbases of five commuting
    pairs of two-qubit Pauli operators.
    """
    if d == 2:
        return mub_qubit()
    if d == 4:
        return embed_povm(_mub4_elements())
    if d < 2 or any(d % q == 0 for q in range(2, int(np.sqrt(d)) + 1)):
        raise InvalidDimension(f"MUB construction implemented for prime d and d=4, got {d}")
    omega = np.exp(2j * np.pi / d)
    bases = [np.eye(d, dtype=complex)]
    ns = np.arange(d)
    for k in range(d):
        basis = np.array([omega ** (k * ns * ns + m * ns) for m in range(d)]) / np.sqrt(d)
        bases.append(basis)
    elems = [np.outer(v, v.conj()) / (d + 1) for basis in bases for v in basis]
    return embed_povm(np.array(elems))


def default_povm(d):
    """IC measurement used for scans: SIC for d=2, MUBs for d=3 and d=4 (and
    other primes), uniformly mixed local Pauli settings for larger powers of two."""
    if d == 2:
        return sic_qubit()
    s = int(round(np.log2(d)))
    if 2**s == d and 3 <= s <= 5:
        return pauli_settings_povm(s)
    return mub_povm(d)


def standard_povm(kind):
    """Build a POVM from a short name.

    ``sic``, ``mub``, ``skewed_sic``, ``x``/``y``/``z``, ``pauli:S``, ``mub:D``,
    or a ``*``-separated tensor product such as ``sic*sic``.
    """
    kind = kind.strip().lower()
    if "*" in kind:
        return tensor_povm(*(standard_povm(k) for k in kind.split("*")))
    name, _, arg = kind.partition(":")
    name = name.removesuffix("_qubit")
    if name == "sic":
        return sic_qubit()
    if name == "skewed_sic":
        return skewed_sic_qubit()
    if name == "mub":
        return mub_povm(int(arg)) if arg else mub_qubit()
    if name in ("x", "y", "z"):
        return axis_povm(name)
    if name == "pauli":
        return pauli_settings_povm(int(arg or 1))
    raise ValueError(f"unknown POVM kind {kind!r}")


def pure_state(vector):
    v = np.asarray(vector, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if v.size < 2 or norm == 0:
        raise DomainError("need a non-zero vector of length >= 2")
    v = v / norm
    return np.outer(v, v.conj())


def ghz_state(s):
    if int(s) != s or s < 1:
        raise DomainError(f"GHZ needs a positive number of qubits, got {s}")
    v = np.zeros(2**s, dtype=complex)
    v[0] = v[-1] = 1.0
    return pure_state(v)


def bell_state():
    """``|Phi+> = (|00> + |11>) / sqrt(2)``."""
    return ghz_state(2)


def noisy_bell(p):
    """Depolarised Bell state ``(1 - p) |Phi+><Phi+| + p I / 4``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"noise parameter must be in [0, 1], got {p}")
    return (1 - p) * bell_state() + p * np.eye(4) / 4


def mixed_state(d):
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {d}")
    return np.eye(d, dtype=complex) / d


def bloch_qubit(x, y, z):
    sig = [PAULI["X"], PAULI["Y"], PAULI["Z"]]
    return (_I2 + x * sig[0] + y * sig[1] + z * sig[2]) / 2


def make_state(kind):
    """Parse ``ghz:S``, ``bell``, ``noisy_bell:P``, ``mixed:D``, ``bloch:X,Y,Z`` or
    ``pure:A,B,...`` (amplitudes, normalised on construction)."""
    name, _, arg = kind.strip().lower().partition(":")
    if name == "ghz":
        return ghz_state(int(arg))
    if name == "bell":
        return bell_state()
    if name == "noisy_bell":
        return noisy_bell(float(arg))
    if name == "mixed":
        return mixed_state(int(arg))
    if name == "bloch":
        return bloch_qubit(*(float(v) for v in arg.split(",")))
    if name == "pure":
        return pure_state([complex(v) for v in arg.split(",")])
    raise ValueError(f"unknown state kind {kind!r}")


def random_state_hs(d, seed):
    """Hilbert-Schmidt random state: partial trace of a Haar-random pure state on d x d."""
    return random_states_hs(d, 1, seed)[0]


def random_states_hs(d, count, seed):
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))
    rho = g @ g.conj().transpose(0, 2, 1)
    return rho / np.einsum("nii->n", rho).real[:, None, None]


def outcome_probabilities(rho, povm, tol=1e-9):
    p = povm.probabilities(rho)
    if abs(p.sum() - 1.0) > tol or p.min() < -tol:
        raise InvalidPovm(f"outcome probabilities are not a distribution (sum {p.sum():.12g})")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def sample_counts(rho, povm, n, seed):
    """Multinomial counts for ``n`` rounds of measuring ``povm`` on ``rho``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.multinomial(int(n), outcome_probabilities(rho, povm))


@dataclass(frozen=True)
class CoverageResult:
    hits: int
    reps: int
    epsilon: float

    @property
    def rate(self):
        return self.hits / self.reps

    @property
    def sigma(self):
        """Binomial standard error at the nominal level ``1 - epsilon``."""
        return float(np.sqrt(self.epsilon * (1 - self.epsilon) / self.reps))

    def to_dict(self):
        return {"hits": self.hits, "reps": self.reps, "epsilon": self.epsilon,
                "rate": self.rate, "sigma": self.sigma}


def coverage(rho, povm, n, eps, reps, seed, groups=None, split=None, threads=1):
    """Fraction of simulated experiments whose polytope contains ``rho``.

    ``rho`` is a valid state, so only the facet inequalities need checking.
    """
    r = embed_state(rho, povm.basis)
    probs = outcome_probabilities(rho, povm)
    children = np.random.SeedSequence(seed).spawn(reps)

    def one(child):
        counts = np.random.default_rng(child).multinomial(int(n), probs)
        poly = build_polytope(povm, counts, eps, split, groups)
        return bool(contains_bloch(poly, r))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            hits = sum(pool.map(one, children))
    else:
        hits = sum(one(c) for c in children)
    return CoverageResult(int(hits), int(reps), float(eps))
