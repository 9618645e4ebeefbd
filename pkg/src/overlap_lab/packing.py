"""Random qubit packings.

Two constructions place m qubit pairs on 2^n dimensions with small
pairwise overlap: random unit vectors fed into a Clifford-algebra
representation, and the same vectors fed into fermion operators on the
exterior algebra.  The achieved coherence of the sampled vectors is
measured and reported, never promised: desk-scale Johnson-Lindenstrauss
constants are weak, so the packing quality is an observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, StructuralError
from .operators import (
    ID2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    QubitSystem,
    qubit_system,
)
from .rng import substream

# Expanding a cross-pair commutator in either construction leaves at most
# four swap terms, each bounded by twice a cross-pair inner product, so
# overlaps are at most 8x the vector coherence.
OVERLAP_BOUND_CONSTANT = 8.0

_DEGENERACY_EPS = 1e-8
_MAX_RESAMPLE = 64


@dataclass(frozen=True)
class UnitVectorFamily:
    """Rows of ``vectors`` are unit vectors in R^ambient_dim."""

    ambient_dim: int
    vectors: np.ndarray
    max_coherence: float

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


def _coherence(rows: np.ndarray) -> float:
    if rows.shape[0] < 2:
        return 0.0
    g = rows @ rows.T
    np.fill_diagonal(g, 0.0)
    return float(np.abs(g).max())


def _family(rows: np.ndarray) -> UnitVectorFamily:
    norms = np.linalg.norm(rows, axis=1)
    if np.abs(norms - 1.0).max() > 1e-12:
        raise StructuralError("vector family lost normalization")
    rows = rows.copy()
    rows.flags.writeable = False
    return UnitVectorFamily(rows.shape[1], rows, _coherence(rows))


def _orthonormalize(rows: np.ndarray) -> np.ndarray:
    """Gram-Schmidt via QR with sign-fixed diagonal; raises on rank deficiency."""
    q, r = np.linalg.qr(rows.T)
    d = np.diagonal(r)
    if np.abs(d).min() < _DEGENERACY_EPS:
        raise StructuralError("linearly dependent sample")
    return (q * np.sign(d)).T


def jl_pack(ambient_dim: int, count: int, seed: int, orthogonalize: bool = False) -> UnitVectorFamily:
    """Sample ``count`` independent Gaussian unit vectors in R^ambient_dim.

    With ``orthogonalize`` the whole family is Gram-Schmidt'd (requires
    count <= ambient_dim), giving coherence exactly 0.
    """
    if ambient_dim < 1 or count < 1:
        raise InvalidInputError("ambient_dim and count must be >= 1")
    if orthogonalize and count > ambient_dim:
        raise InvalidInputError(
            f"cannot orthogonalize {count} vectors in R^{ambient_dim}"
        )
    rows = None
    for attempt in range(_MAX_RESAMPLE):
        rng = substream(seed, f"jl-pack/{attempt}")
        g = rng.standard_normal((count, ambient_dim))
        norms = np.linalg.norm(g, axis=1)
        if norms.min() < _DEGENERACY_EPS:
            continue
        rows = g / norms[:, None]
        if orthogonalize:
            try:
                rows = _orthonormalize(rows)
            except StructuralError:
                rows = None
                continue
        break
    if rows is None:  # pragma: no cover - vanishing probability
        raise StructuralError("repeated degenerate Gaussian samples")
    return _family(rows)


# ---------------------------------------------------------------------------
# Clifford-algebra construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CliffordRep:
    """2n Hermitian generators on 2^n dimensions with {C_i, C_j} = 2 δ_ij I."""

    n: int
    generators: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return 2**self.n


def clifford_generators(n: int) -> CliffordRep:
    """Jordan-Wigner generators: k-1 leading σ^z factors, then σ^x or σ^y."""
    if not 1 <= n <= 13:
        raise InvalidInputError(f"n={n} outside supported range 1..13")
    gens = []
    for k in range(1, n + 1):
        for tail in (SIGMA_X, SIGMA_Y):
            factors = [SIGMA_Z] * (k - 1) + [tail] + [ID2] * (n - k)
            g = np.eye(1, dtype=complex)
            for f in factors:
                g = np.kron(g, f)
            g.flags.writeable = False
            gens.append(g)
    rep = CliffordRep(n, tuple(gens))
    if n <= 6:
        _check_car(rep)
    return rep


def _check_car(rep: CliffordRep, tol: float = 1e-10) -> None:
    eye = np.eye(rep.dim)
    for i, ci in enumerate(rep.generators):
        for j in range(i, 2 * rep.n):
            cj = rep.generators[j]
            target = 2.0 * eye if i == j else 0.0
            defect = np.abs(ci @ cj + cj @ ci - target).max()
            if defect > tol:
                raise StructuralError(f"CAR violation {defect:.3g} at generators ({i},{j})")


@dataclass(frozen=True)
class PackingResult:
    system: QubitSystem
    vector_family: UnitVectorFamily
    epsilon_achieved: float
    construction: str
    within_bound: bool

    def to_dict(self, n: int, m: int, seed: int) -> dict:
        return {
            "construction": self.construction,
            "n": n,
            "m": m,
            "seed": seed,
            "epsilon_achieved": self.epsilon_achieved,
            "overlap_matrix": self.system.overlap_matrix.tolist(),
            "max_overlap": self.system.max_overlap,
            "overlap_bound": OVERLAP_BOUND_CONSTANT * self.epsilon_achieved,
            "within_bound": self.within_bound,
        }


def _grouped_vectors(
    ambient_dim: int, group: int, m: int, seed: int, orthogonalize_all: bool
) -> np.ndarray:
    """m groups of ``group`` orthonormal vectors, resampling degenerate groups."""
    fam = jl_pack(ambient_dim, group * m, seed, orthogonalize=orthogonalize_all)
    rows = np.array(fam.vectors)
    for j in range(m):
        block = slice(group * j, group * (j + 1))
        for attempt in range(_MAX_RESAMPLE):
            try:
                rows[block] = _orthonormalize(rows[block])
                break
            except StructuralError:
                # Degenerate group: resample it from the next substream.
                rng = substream(seed, f"group-resample/{j}/{attempt}")
                g = rng.standard_normal((group, ambient_dim))
                rows[block] = g / np.linalg.norm(g, axis=1)[:, None]
        else:  # pragma: no cover - vanishing probability
            raise StructuralError(f"group {j} stayed degenerate after resampling")
    return rows


def _result(pairs, rows: np.ndarray, construction: str) -> PackingResult:
    fam = _family(rows)
    system = qubit_system(pairs)
    ok = bool(
        system.max_overlap <= OVERLAP_BOUND_CONSTANT * fam.max_coherence + 1e-12
    )
    return PackingResult(system, fam, fam.max_coherence, construction, ok)


def pack_clifford(n: int, m: int, seed: int, orthogonalize_all: bool = False) -> PackingResult:
    """Pack m qubits into 2^n dimensions through the Clifford algebra.

    Samples 3m unit vectors in R^{2n}, orthonormalizes each triple
    {e_j, f_j, g_j}, contracts them against the generators to E_j, F_j,
    G_j, and sets X_j = i E_j F_j, Z_j = i E_j G_j.
    """
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    rep = clifford_generators(n)
    if orthogonalize_all and 3 * m > 2 * n:
        raise InvalidInputError(f"cannot fit {3 * m} orthogonal vectors in R^{2 * n}")
    rows = _grouped_vectors(2 * n, 3, m, seed, orthogonalize_all)
    gens = np.stack(rep.generators)
    pairs = []
    for j in range(m):
        e, f, g = rows[3 * j], rows[3 * j + 1], rows[3 * j + 2]
        ej = np.tensordot(e, gens, axes=(0, 0))
        fj = np.tensordot(f, gens, axes=(0, 0))
        gj = np.tensordot(g, gens, axes=(0, 0))
        pairs.append((1j * ej @ fj, 1j * ej @ gj))
    return _result(pairs, rows, "clifford")


# ---------------------------------------------------------------------------
# Exterior-algebra construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExteriorBasis:
    """Basis of the 2^n-dimensional exterior algebra over R^n.

    States are indexed by subsets of the n modes, stored as increasing
    index tuples and ordered by their bitmask value.  Creation prepends
    the new mode and counts transpositions for the sign, so serialized
    operators are reproducible.
    """

    n: int
    subsets: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return 2**self.n

    def index(self, subset) -> int:
        mask = 0
        for i in subset:
            mask |= 1 << i
        return mask


def exterior_basis(n: int) -> ExteriorBasis:
    if not 1 <= n <= 13:
        raise InvalidInputError(f"n={n} outside supported range 1..13")
    subsets = tuple(
        tuple(i for i in range(n) if (mask >> i) & 1) for mask in range(2**n)
    )
    return ExteriorBasis(n, subsets)


def _mode_creation(basis: ExteriorBasis, i: int) -> np.ndarray:
    a_dag = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, subset in enumerate(basis.subsets):
        if i in subset:
            continue
        sign = -1.0 if sum(1 for k in subset if k < i) % 2 else 1.0
        a_dag[basis.index(subset + (i,)), col] = sign
    return a_dag


def fermion_ops(basis: ExteriorBasis, v) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation/creation pair (a_v, a_v†) for a unit vector of mode amplitudes.

    a_v† |w⟩ = |v⟩ ∧ |w⟩; a_v is its adjoint.  Satisfies a_v² = 0 and
    {a_u, a_v†} = ⟨u|v⟩ I.
    """
    vec = np.asarray(v, dtype=complex).reshape(-1)
    if vec.shape[0] != basis.n:
        raise InvalidInputError(f"vector has {vec.shape[0]} modes, basis has {basis.n}")
    if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
        raise InvalidInputError("fermion_ops requires a unit vector")
    a_dag = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i in range(basis.n):
        if vec[i] != 0:
            a_dag += vec[i] * _mode_creation(basis, i)
    return a_dag.conj().T, a_dag


def pack_exterior(n: int, m: int, seed: int, orthogonalize_all: bool = False) -> PackingResult:
    """Pack m qubits into the 2^n-dimensional exterior algebra.

    Samples 2m unit vectors in R^n, orthonormalizes each pair {u_j, v_j},
    and sets X_j = (-a_u + a_u†)(a_v + a_v†), Z_j = 2 a_v a_v† - I.
    """
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    basis = exterior_basis(n)
    if orthogonalize_all and 2 * m > n:
        raise InvalidInputError(f"cannot fit {2 * m} orthogonal vectors in R^{n}")
    rows = _grouped_vectors(n, 2, m, seed, orthogonalize_all)
    eye = np.eye(basis.dim)
    pairs = []
    for j in range(m):
        a_u, a_u_dag = fermion_ops(basis, rows[2 * j])
        a_v, a_v_dag = fermion_ops(basis, rows[2 * j + 1])
        x = (-a_u + a_u_dag) @ (a_v + a_v_dag)
        z = 2.0 * a_v @ a_v_dag - eye
        pairs.append((x, z))
    return _result(pairs, rows, "exterior")
