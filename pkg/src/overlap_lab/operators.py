"""Dense complex-operator substrate.

Hermitian certification, spectral routines, tensor operations, Pauli
building blocks, and the pairwise overlap measure for qubit systems.
All operators are dense ``complex128`` square matrices; the ambient
dimension is capped at ``MAX_DIM`` (memory bound, asserted at
construction).  Every function here is pure: inputs are never mutated,
and certified wrappers carry read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidInputError,
    NumericError,
    StructuralError,
)
from .rng import substream

MAX_DIM = 2**13

# Default certification tolerances (global config).
TOL_HERM = 1e-12
TOL_REFL = 1e-10
TOL_PROJ = 1e-10
TOL_PAIR = 1e-10
TOL_STATE = 1e-12
TOL_DENSITY = 1e-10

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"i": ID2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex, order="C")
    out.flags.writeable = False
    return out


def complex_matrix(entries) -> np.ndarray:
    """Validate and return a square, finite complex128 matrix (read-only)."""
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InvalidInputError("dimension must be >= 1")
    if a.shape[0] > MAX_DIM:
        raise InvalidInputError(f"dimension {a.shape[0]} exceeds MAX_DIM={MAX_DIM}")
    if not np.all(np.isfinite(a.view(float))):
        raise InvalidInputError("matrix has non-finite entries")
    return _freeze(a)


def _mat(x) -> np.ndarray:
    """Coerce an operator wrapper or array-like to its ndarray."""
    if isinstance(x, HermitianOperator):
        return x.mat
    if isinstance(x, (Reflection, Projection, DensityOperator)):
        return x.op.mat
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class HermitianOperator:
    """A matrix certified Hermitian: max-entry |A - A†| <= tolerance."""

    mat: np.ndarray
    hermiticity_defect: float

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def hermitian(entries, tol: float = TOL_HERM) -> HermitianOperator:
    a = complex_matrix(_mat(entries))
    defect = float(np.abs(a - a.conj().T).max())
    if defect > tol:
        raise InvalidInputError(f"hermiticity defect {defect:.3g} > {tol:.3g}")
    return HermitianOperator(a, defect)


@dataclass(frozen=True)
class Reflection:
    """Hermitian operator with ||op^2 - I|| <= tolerance (eigenvalues ±1)."""

    op: HermitianOperator
    square_defect: float

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


def reflection(entries, tol: float = TOL_REFL, tol_herm: float = TOL_HERM) -> Reflection:
    h = entries if isinstance(entries, HermitianOperator) else hermitian(entries, tol_herm)
    a = h.mat
    defect = operator_norm(a @ a - np.eye(h.dim))
    if defect > tol:
        raise InvalidInputError(f"reflection defect {defect:.3g} > {tol:.3g}")
    return Reflection(h, defect)


@dataclass(frozen=True)
class Projection:
    """Hermitian operator with ||op^2 - op|| <= tolerance (eigenvalues 0/1)."""

    op: HermitianOperator
    square_defect: float

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


def projection(entries, tol: float = TOL_PROJ, tol_herm: float = TOL_HERM) -> Projection:
    h = entries if isinstance(entries, HermitianOperator) else hermitian(entries, tol_herm)
    a = h.mat
    defect = operator_norm(a @ a - a)
    if defect > tol:
        raise InvalidInputError(f"projection defect {defect:.3g} > {tol:.3g}")
    return Projection(h, defect)


@dataclass(frozen=True)
class QubitPair:
    """An anti-commuting pair of reflections (X, Z) defining one qubit."""

    x: Reflection
    z: Reflection
    anticomm_defect: float

    @property
    def dim(self) -> int:
        return self.x.dim


def qubit_pair(
    x,
    z,
    tol_pair: float = TOL_PAIR,
    tol_refl: float = TOL_REFL,
) -> QubitPair:
    """Certify (X, Z) as a qubit: both reflections, ||{X, Z}|| <= tol_pair.

    Exact constructions should keep the default 1e-10 tolerance;
    deliberately approximate pairs may pass a looser one.
    """
    rx = x if isinstance(x, Reflection) else reflection(x, tol_refl)
    rz = z if isinstance(z, Reflection) else reflection(z, tol_refl)
    if rx.dim != rz.dim:
        raise DimensionMismatchError(f"X dim {rx.dim} != Z dim {rz.dim}")
    _, anti = commutator_norms(rx.mat, rz.mat)
    if anti > tol_pair:
        raise InvalidInputError(f"anticommutator norm {anti:.3g} > {tol_pair:.3g}")
    return QubitPair(rx, rz, anti)


@dataclass(frozen=True)
class QubitSystem:
    """An ordered family of qubit pairs on one ambient space.

    ``overlap_matrix[i, j] = max_{S,T in {X,Z}} ||[S_i, T_j]||`` with zero
    diagonal by convention; ``overlap_argmax`` records the maximizing
    letter pair, e.g. ``"XZ"`` for ``[X_i, Z_j]``.
    """

    dim: int
    pairs: tuple[QubitPair, ...]
    overlap_matrix: np.ndarray
    overlap_argmax: tuple[tuple[str, ...], ...]

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def max_overlap(self) -> float:
        if self.n < 2:
            return 0.0
        return float(self.overlap_matrix.max())


def overlap(pairs) -> tuple[np.ndarray, tuple[tuple[str, ...], ...]]:
    """Pairwise overlap matrix of a family of qubit pairs.

    Returns the symmetric matrix of max cross-commutator norms together
    with the argmax letters per entry ("" on the diagonal).
    """
    pairs = tuple(pairs)
    n = len(pairs)
    m = np.zeros((n, n))
    labels = [["" for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            best, best_lab = -1.0, ""
            for si, s in (("X", pairs[i].x), ("Z", pairs[i].z)):
                for tj, t in (("X", pairs[j].x), ("Z", pairs[j].z)):
                    c, _ = commutator_norms(s.mat, t.mat)
                    if c > best:
                        best, best_lab = c, si + tj
            m[i, j] = m[j, i] = best
            labels[i][j] = best_lab
            # [T_j, S_i] has the same norm; record the transposed letters.
            labels[j][i] = best_lab[::-1]
    m.flags.writeable = False
    return m, tuple(tuple(row) for row in labels)


def qubit_system(pairs, tol_pair: float = TOL_PAIR, tol_refl: float = TOL_REFL) -> QubitSystem:
    """Assemble a QubitSystem, certifying pairs and filling the overlap matrix."""
    certified = []
    for p in pairs:
        if isinstance(p, QubitPair):
            certified.append(p)
        else:
            certified.append(qubit_pair(p[0], p[1], tol_pair, tol_refl))
    certified = tuple(certified)
    if not certified:
        raise InvalidInputError("system needs at least one pair")
    dim = certified[0].dim
    if any(p.dim != dim for p in certified):
        raise DimensionMismatchError("all pairs must share the ambient dimension")
    m, labels = overlap(certified)
    return QubitSystem(dim, certified, m, labels)


@dataclass(frozen=True)
class StateVector:
    """Unit vector (2-norm 1 within 1e-12)."""

    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


def state_vector(amplitudes, tol: float = TOL_STATE) -> StateVector:
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if v.shape[0] < 1 or not np.all(np.isfinite(v.view(float))):
        raise InvalidInputError("state must be a finite nonempty vector")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > tol:
        raise InvalidInputError(f"state norm {nrm} is not 1 within {tol:.3g}")
    v = v.copy()
    v.flags.writeable = False
    return StateVector(v)


@dataclass(frozen=True)
class DensityOperator:
    """Positive-semidefinite Hermitian operator with unit trace."""

    op: HermitianOperator

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


def density_operator(entries, tol: float = TOL_DENSITY) -> DensityOperator:
    h = entries if isinstance(entries, HermitianOperator) else hermitian(entries)
    w = np.linalg.eigvalsh(h.mat)
    if w.min() < -tol:
        raise InvalidInputError(f"negative eigenvalue {w.min():.3g}")
    tr = float(np.trace(h.mat).real)
    if abs(tr - 1.0) > tol:
        raise InvalidInputError(f"trace {tr} is not 1 within {tol:.3g}")
    return DensityOperator(h)


def pure_density(psi: StateVector) -> DensityOperator:
    v = psi.amplitudes
    return density_operator(np.outer(v, v.conj()))


# ---------------------------------------------------------------------------
# Spectral routines
# ---------------------------------------------------------------------------


def operator_norm(a) -> float:
    """Spectral norm (largest singular value).

    Uses the Hermitian eigendecomposition when the input is Hermitian to
    machine precision, otherwise singular values.
    """
    m = _mat(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise InvalidInputError("matrix has non-finite entries")
    if m.shape[0] == 1:
        return float(abs(m[0, 0]))
    if np.abs(m - m.conj().T).max() <= TOL_HERM:
        return float(np.abs(np.linalg.eigvalsh(m)).max())
    return float(np.linalg.svd(m, compute_uv=False)[0])


def commutator_norms(a, b) -> tuple[float, float]:
    """Return (||AB - BA||, ||AB + BA||) in spectral norm."""
    ma, mb = _mat(a), _mat(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shape {ma.shape} vs {mb.shape}")
    ab = ma @ mb
    ba = mb @ ma
    return operator_norm(ab - ba), operator_norm(ab + ba)


def kron(a, b) -> np.ndarray:
    """Kronecker product of two operators."""
    return np.kron(_mat(a), _mat(b))


def partial_trace(a, factor_dims, keep) -> np.ndarray:
    """Trace out the tensor factors not listed in ``keep``.

    ``factor_dims`` must multiply to the matrix dimension; the kept
    factors stay in their original order.
    """
    m = _mat(a)
    dims = [int(d) for d in factor_dims]
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise InvalidInputError(
            f"factor dims {dims} inconsistent with matrix shape {m.shape}"
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise InvalidInputError(f"keep indices {keep} out of range")
    k = len(dims)
    t = m.reshape(dims + dims)
    # Contract row/column axes of every traced factor, highest axis first
    # so remaining axis numbers stay valid.
    traced = [i for i in range(k) if i not in keep]
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns (eigenvalues ascending, orthonormal eigenvector columns) and
    certifies the reconstruction residual; raises NumericError if the
    decomposition misses its advertised accuracy.
    """
    m = _mat(h)
    if np.abs(m - m.conj().T).max() > TOL_HERM * max(1.0, float(np.abs(m).max())):
        raise InvalidInputError("input is not Hermitian within tolerance")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    scale = max(1.0, float(np.linalg.norm(m)))
    resid = float(np.linalg.norm((v * w) @ v.conj().T - m)) / scale
    ortho = float(np.abs(v.conj().T @ v - np.eye(m.shape[0])).max())
    if resid > 1e-10 or ortho > 1e-10:
        raise NumericError(
            f"eigendecomposition residual {resid:.3g}, orthonormality defect {ortho:.3g}"
        )
    return w, v


def round_spectrum(h, targets) -> Projection | Reflection:
    """Replace each eigenvalue by the nearest target, keeping eigenvectors.

    ``targets`` is {0, 1} (projection) or {-1, +1} (reflection).  A tie at
    the midpoint rounds toward the upper target.  This is the
    distance-minimizing operator with the target spectrum among those
    diagonal in the input's eigenbasis.
    """
    lo, hi = sorted(float(t) for t in targets)
    if (lo, hi) not in ((0.0, 1.0), (-1.0, 1.0)):
        raise InvalidInputError(f"unsupported target spectrum {targets}")
    w, v = eigh(h)
    mid = (lo + hi) / 2.0
    rounded = np.where(w >= mid, hi, lo)
    out = (v * rounded) @ v.conj().T
    out = (out + out.conj().T) / 2.0
    if (lo, hi) == (0.0, 1.0):
        return projection(out)
    return reflection(out)


def tensor_normal_form(pair: QubitPair, tol: float = 1e-9) -> np.ndarray:
    """Unitary U with U† Z U = σ^z ⊗ I and U† X U = σ^x ⊗ I.

    Constructive change of basis for an exact qubit pair: the ±1
    eigenspaces of Z are paired in eigendecomposition output order and
    X's action aligns the pairing.  Requires even dimension and equal
    eigenspace ranks; anything else cannot be a qubit.
    """
    d = pair.dim
    if d % 2 != 0:
        raise StructuralError(f"odd dimension {d} cannot carry a qubit")
    half = d // 2
    w, v = eigh(pair.z.op)
    n_minus = int(np.sum(w < 0))
    if n_minus != half:
        raise StructuralError(
            f"rank(P+)={d - n_minus} != rank(P-)={n_minus}; not a qubit pair"
        )
    minus, plus = v[:, :half], v[:, half:]
    pi_plus = plus @ plus.conj().T
    pi_minus = minus @ minus.conj().T
    s = plus @ minus.conj().T + minus @ plus.conj().T
    u0 = pi_plus @ pair.x.mat @ pi_minus @ s + pi_minus
    # Relabel |u_j^±⟩ → |0,j⟩,|1,j⟩: columns of the basis change are the
    # paired eigenvectors.
    wmat = np.hstack([plus, minus])
    u = u0 @ wmat
    uni = operator_norm(u.conj().T @ u - np.eye(d))
    if uni > 1e-10:
        raise NumericError(f"normal-form unitarity defect {uni:.3g}")
    zt = u.conj().T @ pair.z.mat @ u
    xt = u.conj().T @ pair.x.mat @ u
    eye_half = np.eye(half)
    if (
        operator_norm(zt - np.kron(SIGMA_Z, eye_half)) > tol
        or operator_norm(xt - np.kron(SIGMA_X, eye_half)) > tol
    ):
        raise NumericError("conjugation identities exceed tolerance")
    return u


# ---------------------------------------------------------------------------
# Seeded fixtures
# ---------------------------------------------------------------------------


def haar_unitary(dim: int, seed: int, label: str = "haar-unitary") -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian with phase-fixed R diagonal."""
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    rng = substream(seed, label)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_state(dim: int, seed: int, label: str = "random-state") -> StateVector:
    """Deterministic Haar-random unit vector for the given seed."""
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    rng = substream(seed, label)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return state_vector(v / np.linalg.norm(v))


def random_hermitian(dim: int, seed: int, label: str = "random-hermitian") -> np.ndarray:
    """Random Hermitian matrix normalized to unit spectral norm."""
    rng = substream(seed, label)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2.0
    return h / operator_norm(h)


def random_reflection(dim: int, seed: int, label: str = "random-reflection") -> Reflection:
    """Haar-conjugated random ±1 spectrum."""
    u = haar_unitary(dim, seed, label + "/basis")
    rng = substream(seed, label + "/signs")
    signs = rng.integers(0, 2, size=dim) * 2.0 - 1.0
    r = (u * signs) @ u.conj().T
    return reflection((r + r.conj().T) / 2.0)


def pauli_on(label: str, slot: int, n_qubits: int) -> np.ndarray:
    """The single-qubit Pauli ``label`` acting on ``slot`` (0-based) of n qubits."""
    if label not in PAULIS:
        raise InvalidInputError(f"unknown Pauli label {label!r}")
    if not 0 <= slot < n_qubits:
        raise InvalidInputError(f"slot {slot} out of range for {n_qubits} qubits")
    out = np.eye(1, dtype=complex)
    for k in range(n_qubits):
        out = np.kron(out, PAULIS[label] if k == slot else ID2)
    return out


def standard_pauli_system(n: int) -> QubitSystem:
    """n exactly independent qubits: the standard Paulis on (C^2)^{⊗n}."""
    pairs = [(pauli_on("x", j, n), pauli_on("z", j, n)) for j in range(n)]
    return qubit_system(pairs)


def perturbed_pauli_system(n: int, theta: float, seed: int) -> QubitSystem:
    """Standard Paulis with each pair conjugated by its own random e^{iθK_j}.

    Pairs stay exact; cross-pair overlaps grow with ``theta``.
    """
    pairs = []
    for j in range(n):
        k = random_hermitian(2**n, seed, f"perturb/{j}")
        w, v = np.linalg.eigh(k)
        u = (v * np.exp(1j * theta * w)) @ v.conj().T
        x = u @ pauli_on("x", j, n) @ u.conj().T
        z = u @ pauli_on("z", j, n) @ u.conj().T
        pairs.append(((x + x.conj().T) / 2.0, (z + z.conj().T) / 2.0))
    return qubit_system(pairs)
