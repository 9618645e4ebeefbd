"""State-dependent independence testing.

The pairwise measure-twice commutation test with its exact closed form,
the n-qubit ordered-measurement protocol (exact channel evaluation and
Born-rule sampling), the constructions showing pairwise testing is too
weak, the EPR-lifted simulation of overlapping qubits by exactly
independent ones, and the singular-value dimension certificate.

Exact protocol evaluation composes dephasing channels on density
matrices (O(dim^3) per measurement) instead of enumerating measurement
branch trees; the trajectory sampler provides an independent path to
the same numbers.  Qubit indices are 0-based throughout, including in
reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    ConsistencyError,
    DimensionMismatchError,
    InvalidInputError,
    MemoryBudgetError,
    StructuralError,
)
from .operators import (
    ID2,
    PAULIS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityOperator,
    HermitianOperator,
    QubitSystem,
    Reflection,
    StateVector,
    density_operator,
    hermitian,
    kron,
    operator_norm,
    pauli_on,
    qubit_system,
    reflection,
    state_vector,
)
from .rng import substream

EPR_LIFT_MAX_DIM = 2**16
_RANK_CERT_MAX_ENTRIES = 2**24

_WILSON_Z = 1.959963984540054  # two-sided 95%


def _require_exact_pairs(system: QubitSystem, tol: float = 1e-10) -> None:
    for j, pair in enumerate(system.pairs):
        if (
            pair.anticomm_defect > tol
            or pair.x.square_defect > tol
            or pair.z.square_defect > tol
        ):
            raise InvalidInputError(
                f"pair {j} is not an exact qubit pair (protocol semantics need reflections)"
            )


def dephase(rho: DensityOperator, r) -> DensityOperator:
    """Measure the reflection and discard the result: ρ ↦ Π₊ρΠ₊ + Π₋ρΠ₋."""
    rr = r if isinstance(r, Reflection) else reflection(r)
    if rr.dim != rho.dim:
        raise DimensionMismatchError(f"dim {rr.dim} vs {rho.dim}")
    return density_operator(_dephase_mat(rho.mat, rr.mat))


def _dephase_mat(rho: np.ndarray, r: np.ndarray) -> np.ndarray:
    eye = np.eye(r.shape[0])
    pp = (eye + r) / 2.0
    pm = (eye - r) / 2.0
    out = pp @ rho @ pp + pm @ rho @ pm
    return (out + out.conj().T) / 2.0


def pairwise_test(s, t, psi: StateVector) -> float:
    """Acceptance of: measure S, measure T (ignored), measure S again.

    Evaluates the measurement channel and the closed form
    1 - ||[S,T]ψ||²/8, checks they agree to 1e-10, and returns the
    closed form.
    """
    rs = s if isinstance(s, Reflection) else reflection(s)
    rt = t if isinstance(t, Reflection) else reflection(t)
    if rs.dim != rt.dim or rs.dim != psi.dim:
        raise DimensionMismatchError("S, T and ψ must share one space")
    v = psi.amplitudes
    comm = rs.mat @ (rt.mat @ v) - rt.mat @ (rs.mat @ v)
    closed = 1.0 - float(np.vdot(comm, comm).real) / 8.0

    eye = np.eye(rs.dim)
    rho = np.outer(v, v.conj())
    channel = 0.0
    for sign in (1.0, -1.0):
        proj = (eye + sign * rs.mat) / 2.0
        branch = _dephase_mat(proj @ rho @ proj, rt.mat)
        channel += float(np.trace(proj @ branch @ proj).real)
    if abs(channel - closed) > 1e-10:
        raise ConsistencyError(
            f"channel acceptance {channel!r} vs closed form {closed!r}"
        )
    return closed


# ---------------------------------------------------------------------------
# n-qubit protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementPlan:
    """One branch of the n-qubit protocol.

    ``ordering`` is "xz" (X first within each qubit) or "zx"; the
    repeated reflection is the second-basis operator of qubit
    ``repeat_index``, re-measured after the full sweep.
    """

    ordering: str
    repeat_index: int
    sequence: tuple[tuple[int, str], ...]
    repeat_position: int

    @property
    def pre(self) -> tuple[tuple[int, str], ...]:
        return self.sequence[: self.repeat_position]

    @property
    def repeated(self) -> tuple[int, str]:
        return self.sequence[self.repeat_position]

    @property
    def mid(self) -> tuple[tuple[int, str], ...]:
        return self.sequence[self.repeat_position + 1 :]


def measurement_plan(ordering: str, j: int, n: int) -> MeasurementPlan:
    if ordering not in ("xz", "zx"):
        raise InvalidInputError(f"ordering must be 'xz' or 'zx', got {ordering!r}")
    if not 0 <= j < n:
        raise InvalidInputError(f"repeat index {j} out of range for n={n}")
    first, second = ordering[0], ordering[1]
    seq = []
    for i in range(n):
        seq.append((i, first))
        seq.append((i, second))
    plan = MeasurementPlan(ordering, j, tuple(seq), 2 * j + 1)
    if plan.repeated != (j, second):
        raise StructuralError("repeat reflection violates the second-basis rule")
    return plan


@dataclass(frozen=True)
class ProtocolReport:
    """Outcome of the n-qubit independence test.

    ``epsilon`` is the conservative per-qubit failure mean: with
    eps_per_qubit[j] = 1 - min over the two orderings of branch (j)
    acceptance, epsilon = mean(eps_per_qubit), so the per-qubit values
    sum to n*epsilon by construction.
    """

    n: int
    acceptance_exact: float
    per_branch: tuple[tuple[str, int, float], ...]
    eps_per_qubit: tuple[float, ...]
    epsilon: float
    monte_carlo: dict | None = None
    mc_consistent: bool | None = None

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "acceptance_exact": self.acceptance_exact,
            "one_minus_acceptance": 1.0 - self.acceptance_exact,
            "per_branch": [
                {"ordering": o, "j": j, "acceptance": a} for o, j, a in self.per_branch
            ],
            "eps_per_qubit": list(self.eps_per_qubit),
            "epsilon": self.epsilon,
        }
        if self.monte_carlo is not None:
            out["monte_carlo"] = dict(self.monte_carlo)
            out["mc_consistent"] = self.mc_consistent
        return out


def _branch_acceptance(system: QubitSystem, rho0: np.ndarray, plan: MeasurementPlan) -> float:
    ops = {(i, "x"): system.pairs[i].x.mat for i in range(system.n)}
    ops.update({(i, "z"): system.pairs[i].z.mat for i in range(system.n)})
    rho = rho0
    for key in plan.pre:
        rho = _dephase_mat(rho, ops[key])
    r = ops[plan.repeated]
    eye = np.eye(system.dim)
    acc = 0.0
    for sign in (1.0, -1.0):
        proj = (eye + sign * r) / 2.0
        branch = proj @ rho @ proj
        for key in plan.mid:
            branch = _dephase_mat(branch, ops[key])
        acc += float(np.trace(proj @ branch @ proj).real)
    if not -1e-10 <= acc <= 1.0 + 1e-10:
        raise ConsistencyError(f"branch acceptance {acc} outside [0, 1]")
    return min(max(acc, 0.0), 1.0)


def nqubit_test_exact(system: QubitSystem, psi: StateVector) -> ProtocolReport:
    """Exact acceptance of the ordered-measurement independence test.

    Sweeps the reflections in order (both X-first and Z-first), then
    re-measures the second-basis operator of one qubit; acceptance is
    averaged uniformly over the 2n (ordering, j) branches, which are
    exposed individually.
    """
    _require_exact_pairs(system)
    if psi.dim != system.dim:
        raise DimensionMismatchError(f"state dim {psi.dim} vs system dim {system.dim}")
    v = psi.amplitudes
    rho0 = np.outer(v, v.conj())
    branches = []
    for ordering in ("xz", "zx"):
        for j in range(system.n):
            acc = _branch_acceptance(system, rho0, measurement_plan(ordering, j, system.n))
            branches.append((ordering, j, acc))
    acc_by = {(o, j): a for o, j, a in branches}
    eps_j = tuple(
        1.0 - min(acc_by[("xz", j)], acc_by[("zx", j)]) for j in range(system.n)
    )
    return ProtocolReport(
        n=system.n,
        acceptance_exact=float(np.mean([a for _, _, a in branches])),
        per_branch=tuple(branches),
        eps_per_qubit=eps_j,
        epsilon=float(np.mean(eps_j)),
    )


def wilson_interval(accepts: int, shots: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    p = accepts / shots
    denom = 1.0 + z * z / shots
    center = (p + z * z / (2 * shots)) / denom
    half = z * math.sqrt(p * (1.0 - p) / shots + z * z / (4 * shots * shots)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def nqubit_test_sample(
    system: QubitSystem,
    psi: StateVector,
    shots: int,
    seed: int,
    exact: ProtocolReport | None = None,
) -> ProtocolReport:
    """Monte Carlo estimate of the n-qubit test via measurement trajectories.

    Simulates Born-rule state collapse shot by shot; all draws come from
    one counter-based substream so tallies are reproducible for a given
    seed regardless of batching.  The returned report embeds the exact
    evaluation (computing it if not supplied) plus the Monte Carlo
    tallies and a 4σ-consistency flag.
    """
    if shots < 1:
        raise InvalidInputError("shots must be >= 1")
    if exact is None:
        exact = nqubit_test_exact(system, psi)
    n, dim = system.n, system.dim
    rng = substream(seed, "nqubit-sample")
    orderings = rng.integers(0, 2, size=shots)
    indices = rng.integers(0, n, size=shots)
    uniforms = rng.random((shots, 2 * n + 1))

    accepts = 0
    eye = np.eye(dim)
    ops = {(i, "x"): system.pairs[i].x.mat for i in range(n)}
    ops.update({(i, "z"): system.pairs[i].z.mat for i in range(n)})
    for o_idx, ordering in enumerate(("xz", "zx")):
        for j in range(n):
            mask = (orderings == o_idx) & (indices == j)
            batch = int(mask.sum())
            if batch == 0:
                continue
            plan = measurement_plan(ordering, j, n)
            seq = list(plan.sequence) + [plan.repeated]
            states = np.tile(psi.amplitudes, (batch, 1))
            u = uniforms[mask]
            first = np.zeros(batch, dtype=bool)
            last = np.zeros(batch, dtype=bool)
            for step, key in enumerate(seq):
                proj = (eye + ops[key]) / 2.0
                amp_plus = states @ proj.T
                p_plus = np.clip(np.einsum("bi,bi->b", amp_plus.conj(), amp_plus).real, 0.0, 1.0)
                take_plus = u[:, step] < p_plus
                amp_minus = states - amp_plus
                norms = np.where(take_plus, np.sqrt(p_plus), np.sqrt(np.maximum(1.0 - p_plus, 1e-300)))
                states = np.where(take_plus[:, None], amp_plus, amp_minus) / norms[:, None]
                if step == plan.repeat_position:
                    first = take_plus
                elif step == len(seq) - 1:
                    last = take_plus
            accepts += int(np.sum(first == last))

    rate = accepts / shots
    lo, hi = wilson_interval(accepts, shots)
    sigma = math.sqrt(max(exact.acceptance_exact * (1.0 - exact.acceptance_exact), 0.0) / shots)
    consistent = abs(rate - exact.acceptance_exact) <= 4.0 * sigma + 1e-12
    mc = {
        "shots": shots,
        "seed": seed,
        "accepts": accepts,
        "rate": rate,
        "wilson95": [lo, hi],
    }
    return ProtocolReport(
        n=exact.n,
        acceptance_exact=exact.acceptance_exact,
        per_branch=exact.per_branch,
        eps_per_qubit=exact.eps_per_qubit,
        epsilon=exact.epsilon,
        monte_carlo=mc,
        mc_consistent=bool(consistent),
    )


# ---------------------------------------------------------------------------
# Counterexample constructions
# ---------------------------------------------------------------------------


def _weight_le_basis(n: int, k: int) -> list[tuple[int, ...]]:
    basis: list[tuple[int, ...]] = []
    for w in range(k + 1):
        basis.extend(combinations(range(n), w))
    return basis


def kcommute_construct(n: int, k: int) -> tuple[QubitSystem, StateVector]:
    """n qubits whose length-k operator words all commute on ψ = |0^n⟩.

    The ambient basis is all n-bit strings of Hamming weight at most k
    (plus a pad state when that count is odd).  Each X_j flips bit j
    where the weight budget allows; weight-k strings with bit j clear
    are matched consecutively in basis order, any leftover pairing with
    the pad.  Z_j is (-1)^{x_j} with the override (+1, -1) on each
    matched pair (in pair order) and -1 on the pad.
    """
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={n}")
    basis = _weight_le_basis(n, k)
    pad = len(basis) % 2 == 1
    dim = len(basis) + (1 if pad else 0)
    index = {s: i for i, s in enumerate(basis)}
    pad_idx = dim - 1 if pad else None

    boundary_size = math.comb(n - 1, k)
    if pad != (boundary_size % 2 == 1):
        raise StructuralError("pad parity disagrees with boundary parity")

    pairs = []
    for j in range(n):
        boundary = [s for s in basis if len(s) == k and j not in s]
        x = np.zeros((dim, dim), dtype=complex)
        z_diag = np.array(
            [-1.0 if j in s else 1.0 for s in basis] + ([-1.0] if pad else []),
            dtype=complex,
        )
        matched = set()
        for s in basis:
            if len(s) == k and j not in s:
                continue
            partner = tuple(sorted(set(s) ^ {j}))
            x[index[partner], index[s]] = 1.0
        for a, b in zip(boundary[0::2], boundary[1::2]):
            x[index[a], index[b]] = x[index[b], index[a]] = 1.0
            z_diag[index[a]] = 1.0
            z_diag[index[b]] = -1.0
            matched.update((a, b))
        leftover = [s for s in boundary if s not in matched]
        if pad:
            if len(leftover) != 1:
                raise StructuralError("expected exactly one leftover boundary string")
            x[pad_idx, index[leftover[0]]] = x[index[leftover[0]], pad_idx] = 1.0
            z_diag[index[leftover[0]]] = 1.0
        elif leftover:
            raise StructuralError("leftover boundary strings without a pad state")
        z = np.diag(z_diag)
        if np.abs(x @ x - np.eye(dim)).max() > 1e-13 or np.abs(x @ z + z @ x).max() > 1e-13:
            raise StructuralError(f"qubit {j} fails reflection/anticommutation")
        pairs.append((x, z))

    system = qubit_system(pairs)
    psi = state_vector(np.eye(dim, dtype=complex)[index[()]])
    if k >= 2:
        v = psi.amplitudes
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for s in (system.pairs[i].x.mat, system.pairs[i].z.mat):
                    for t in (system.pairs[j].x.mat, system.pairs[j].z.mat):
                        resid = np.linalg.norm(s @ (t @ v) - t @ (s @ v))
                        if resid > 1e-13:
                            raise StructuralError(
                                f"[S_{i}, T_{j}]ψ = {resid:.3g}; construction bug"
                            )
    return system, psi


@dataclass(frozen=True)
class BlockdiagCounterexample:
    """Operators for which block-diagonalization ruins state-commutation."""

    p: HermitianOperator
    q: HermitianOperator
    r: HermitianOperator
    psi: StateVector
    delta: float
    diagnostics: dict = field(default_factory=dict)


def blockdiag_counterexample(delta: float) -> BlockdiagCounterexample:
    """The 4-dimensional (P, Q, R, ψ) instance with tunable δ.

    [Q,R]ψ = 0 exactly and ||[P,Q]ψ||, ||[P,R]ψ|| = O(δ), yet after
    block-diagonalizing Q and R against P the state-commutator is Ω(δ).
    P is a projection only up to O(δ²).
    """
    if not 0.0 < delta < 0.25:
        raise InvalidInputError(f"delta={delta} outside (0, 1/4)")
    p = np.array(
        [
            [1.0, 0.0, 0.0, delta],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5, 0.0],
            [delta, 0.0, 0.0, 0.0],
        ],
        dtype=complex,
    )
    q = np.diag([1.0, 0.0, 1.0, 0.0]).astype(complex)
    r = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
        ],
        dtype=complex,
    )
    v = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)

    eye = np.eye(4)
    comp = eye - p
    bd_q = p @ q @ p + comp @ q @ comp
    bd_r = p @ r @ p + comp @ r @ comp
    diag = {
        "state_comm_pq": float(np.linalg.norm((p @ q - q @ p) @ v)),
        "state_comm_pr": float(np.linalg.norm((p @ r - r @ p) @ v)),
        "state_comm_qr": float(np.linalg.norm((q @ r - r @ q) @ v)),
        "projection_defect_p": operator_norm(p @ p - p),
        "state_comm_after_blockdiag": float(
            np.linalg.norm((bd_q @ bd_r - bd_r @ bd_q) @ v)
        ),
    }
    return BlockdiagCounterexample(
        hermitian(p), hermitian(q), hermitian(r), state_vector(v), float(delta), diag
    )


def remark_construct(n: int) -> tuple[QubitSystem, StateVector]:
    """Hamming-truncated near-miss: n qubits on 2^n - 2 dimensions.

    Drops |0^n⟩ and |1^n⟩; Z_j is the restricted σ^z_j, and X_j acts as
    σ^x_j except that the two strings it would map outside the space are
    mapped to each other.  Only empirical acceptance reporting is
    supported; no inequality is claimed for this fixture.
    """
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    masks = [m for m in range(2**n) if m not in (0, 2**n - 1)]
    index = {m: i for i, m in enumerate(masks)}
    dim = len(masks)
    all_ones = 2**n - 1
    pairs = []
    for j in range(n):
        bit = 1 << (n - 1 - j)
        x = np.zeros((dim, dim), dtype=complex)
        for m in masks:
            flip = m ^ bit
            if flip == 0:
                partner = all_ones ^ bit
            elif flip == all_ones:
                partner = bit
            else:
                partner = flip
            x[index[partner], index[m]] = 1.0
        z = np.diag([1.0 if (m & bit) == 0 else -1.0 for m in masks]).astype(complex)
        pairs.append((x, z))
    psi = state_vector(np.full(dim, 1.0 / math.sqrt(dim), dtype=complex))
    return qubit_system(pairs), psi


# ---------------------------------------------------------------------------
# EPR lift, simulation error, dimension certificate
# ---------------------------------------------------------------------------


def _embed_on(m2: np.ndarray, slot: int, n_qubits: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for k in range(n_qubits):
        out = np.kron(out, m2 if k == slot else ID2)
    return out


def pauli_decompose(u: np.ndarray) -> tuple[complex, complex, complex, complex]:
    """Coefficients (α, β, γ, δ) with U = αI + βσ^x + γσ^z + δσ^y."""
    m = np.asarray(u, dtype=complex)
    if m.shape != (2, 2):
        raise InvalidInputError("expected a 2x2 matrix")
    return (
        complex(np.trace(m)) / 2.0,
        complex(np.trace(SIGMA_X @ m)) / 2.0,
        complex(np.trace(SIGMA_Z @ m)) / 2.0,
        complex(np.trace(SIGMA_Y @ m)) / 2.0,
    )


@dataclass(frozen=True)
class LiftedSystem:
    """Overlapping qubits embedded next to n EPR pairs.

    The lifted space is H ⊗ (C²_{1'} ⊗ C²_{1''}) ⊗ … ⊗ (C²_{n'} ⊗ C²_{n''});
    Ψ = S_n … S_1 (ψ ⊗ EPR^{⊗n}) where S_j swaps the (X_j, Z_j) qubit
    with ancilla j'.  The hat operators are the swap-conjugated
    originals; they commute pairwise exactly and simulate the originals
    on Ψ.
    """

    system: QubitSystem
    psi: StateVector
    n: int
    h_dim: int
    dim: int
    psi0: np.ndarray
    psi_lifted: np.ndarray
    swaps: tuple[np.ndarray, ...]
    lifted_x: tuple[np.ndarray, ...]
    lifted_z: tuple[np.ndarray, ...]
    hat_x: tuple[np.ndarray, ...]
    hat_z: tuple[np.ndarray, ...]

    def ancilla_slot(self, j: int, double_primed: bool) -> int:
        return 2 * j + (1 if double_primed else 0)

    def ancilla_pauli(self, label: str, j: int, double_primed: bool) -> np.ndarray:
        return kron(
            np.eye(self.h_dim), pauli_on(label, self.ancilla_slot(j, double_primed), 2 * self.n)
        )

    def correlation(self, j: int, basis: str) -> float:
        """⟨Ψ| S_j ⊗ σ^{basis}_{j''} |Ψ⟩ for basis in {x, z}."""
        s = self.lifted_x[j] if basis == "x" else self.lifted_z[j]
        op = s @ self.ancilla_pauli(basis, j, True)
        v = self.psi_lifted
        return float(np.vdot(v, op @ v).real)

    def lifted_branch_acceptance(self, j: int, basis: str) -> float:
        return 0.5 * (1.0 + self.correlation(j, basis))

    def embed_qubit_operator(self, j: int, u2: np.ndarray, hat: bool) -> np.ndarray:
        """Lift a single-qubit operator to the (X_j, Z_j) qubit or its hat copy."""
        a, b, g, d = pauli_decompose(u2)
        x = self.hat_x[j] if hat else self.lifted_x[j]
        z = self.hat_z[j] if hat else self.lifted_z[j]
        return a * np.eye(self.dim) + b * x + g * z + d * (1j * (x @ z))


def epr_lift(system: QubitSystem, psi: StateVector) -> LiftedSystem:
    """Append n EPR pairs and swap each qubit with its primed half.

    Verifies at construction that the hat operators commute pairwise
    (within 1e-12), that Ψ stays normalized, and that the transpose
    identity Û_j Ψ = U^T_{j''} Ψ holds within 1e-10 on probe operators.
    """
    _require_exact_pairs(system)
    if psi.dim != system.dim:
        raise DimensionMismatchError(f"state dim {psi.dim} vs system dim {system.dim}")
    n, h_dim = system.n, system.dim
    dim = h_dim * 4**n
    if dim > EPR_LIFT_MAX_DIM:
        raise MemoryBudgetError(
            f"lifted dim {dim} exceeds the hard budget {EPR_LIFT_MAX_DIM}"
        )
    epr = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / math.sqrt(2.0)
    psi0 = psi.amplitudes
    for _ in range(n):
        psi0 = np.kron(psi0, epr)

    eye_anc = np.eye(4**n)
    eye_d = np.eye(dim)
    lifted_x = tuple(kron(p.x.mat, eye_anc) for p in system.pairs)
    lifted_z = tuple(kron(p.z.mat, eye_anc) for p in system.pairs)
    swaps = []
    for j, pair in enumerate(system.pairs):
        slot = 2 * j
        s = 0.5 * (
            eye_d
            + kron(pair.x.mat, pauli_on("x", slot, 2 * n))
            + kron(pair.z.mat, pauli_on("z", slot, 2 * n))
            + 1j * kron(pair.x.mat @ pair.z.mat, pauli_on("y", slot, 2 * n))
        )
        swaps.append(s)

    v = psi0
    for s in swaps:
        v = s @ v
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > 1e-10:
        raise StructuralError(f"lifted state norm {nrm} drifted from 1")

    hat_x: list[np.ndarray] = [None] * n
    hat_z: list[np.ndarray] = [None] * n
    w = eye_d
    for i in range(n - 1, -1, -1):
        # w = S_n … S_{i+1}; conjugation keeps the paper's order.
        hat_x[i] = w @ lifted_x[i] @ w.conj().T
        hat_z[i] = w @ lifted_z[i] @ w.conj().T
        w = w @ swaps[i]

    lifted = LiftedSystem(
        system=system,
        psi=psi,
        n=n,
        h_dim=h_dim,
        dim=dim,
        psi0=psi0,
        psi_lifted=v,
        swaps=tuple(swaps),
        lifted_x=lifted_x,
        lifted_z=lifted_z,
        hat_x=tuple(hat_x),
        hat_z=tuple(hat_z),
    )
    _verify_lift(lifted)
    return lifted


def _verify_lift(lifted: LiftedSystem) -> None:
    n = lifted.n
    hats = [(j, "x", lifted.hat_x[j]) for j in range(n)] + [
        (j, "z", lifted.hat_z[j]) for j in range(n)
    ]
    for idx, (i, si, a) in enumerate(hats):
        for j, sj, b in hats[idx + 1 :]:
            if i == j:
                continue
            if np.abs(a @ b - b @ a).max() > 1e-12:
                raise StructuralError(
                    f"hat operators ({si}_{i}, {sj}_{j}) fail to commute"
                )
    # Transpose identity on probe operators: the four Paulis of qubit 0..n-1.
    v = lifted.psi_lifted
    for j in range(n):
        for label, u2 in (("x", SIGMA_X), ("z", SIGMA_Z), ("y", SIGMA_Y)):
            hat_side = lifted.embed_qubit_operator(j, u2, hat=True) @ v
            anc = kron(np.eye(lifted.h_dim), _embed_on(u2.T, lifted.ancilla_slot(j, True), 2 * n))
            if np.linalg.norm(hat_side - anc @ v) > 1e-10:
                raise StructuralError(
                    f"transpose identity fails for σ^{label} on qubit {j}"
                )


def simulation_error(lifted: LiftedSystem, op_sequence) -> float:
    """||U_{j1}…U_{jk} Ψ - Û_{j1}…Û_{jk} Ψ|| for single-qubit operators.

    Each entry of ``op_sequence`` is (qubit index, 2x2 operator with
    spectral norm at most 1); the leftmost operator acts last.
    """
    seq = [(int(j), np.asarray(u, dtype=complex)) for j, u in op_sequence]
    for j, u in seq:
        if not 0 <= j < lifted.n:
            raise InvalidInputError(f"qubit index {j} out of range")
        if operator_norm(u) > 1.0 + 1e-12:
            raise InvalidInputError("operator norm exceeds 1")
    v_plain = lifted.psi_lifted.copy()
    v_hat = lifted.psi_lifted.copy()
    for j, u in reversed(seq):
        v_plain = lifted.embed_qubit_operator(j, u, hat=False) @ v_plain
        v_hat = lifted.embed_qubit_operator(j, u, hat=True) @ v_hat
    return float(np.linalg.norm(v_plain - v_hat))


@dataclass(frozen=True)
class DimensionCertificate:
    """Singular-value profile of the shifted-state matrix B.

    B collects the 4^n states (X_n^{a_n} Z_n^{b_n})…(X_1^{a_1} Z_1^{b_1})Ψ
    as columns; near-isometry of B forces rank, which lower-bounds the
    ambient dimension through rank ≤ (dim H)².
    """

    n: int
    h_dim: int
    epsilon: float
    singular_values: tuple[float, ...]
    sum_sq_dev: float
    sum_sq_dev_bound: float
    rank_lower_bound: int
    rank_cap: int

    @property
    def satisfied(self) -> bool:
        return (
            self.sum_sq_dev <= self.sum_sq_dev_bound + 1e-9
            and self.rank_lower_bound <= self.rank_cap
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "h_dim": self.h_dim,
            "epsilon": self.epsilon,
            "singular_values": list(self.singular_values),
            "sum_sq_dev": self.sum_sq_dev,
            "sum_sq_dev_bound": self.sum_sq_dev_bound,
            "rank_lower_bound": self.rank_lower_bound,
            "rank_cap": self.rank_cap,
            "satisfied": self.satisfied,
        }


def shifted_state(lifted: LiftedSystem, a: tuple[int, ...], b: tuple[int, ...], hat: bool = False) -> np.ndarray:
    """Ψ_{a,b} (or its hat version): qubit-j factor X_j^{a_j} Z_j^{b_j}, j ascending applied first."""
    xs = lifted.hat_x if hat else lifted.lifted_x
    zs = lifted.hat_z if hat else lifted.lifted_z
    v = lifted.psi_lifted
    for j in range(lifted.n):
        if b[j]:
            v = zs[j] @ v
        if a[j]:
            v = xs[j] @ v
    return v


def rank_certificate(lifted: LiftedSystem, epsilon: float | None = None) -> DimensionCertificate:
    """Build B = Σ_{a,b} |Ψ_{a,b}⟩⟨a,b| and certify its singular values.

    ``epsilon`` defaults to the exact n-qubit test failure of the
    underlying system; the deviation bound asserted is 128·4^n·n²·ε and
    the half-threshold rank count must fit under (dim H)².
    """
    n = lifted.n
    if 4**n * lifted.dim > _RANK_CERT_MAX_ENTRIES:
        raise MemoryBudgetError(f"B with {4**n} columns of length {lifted.dim} exceeds budget")
    if epsilon is None:
        epsilon = nqubit_test_exact(lifted.system, lifted.psi).epsilon
    cols = np.empty((lifted.dim, 4**n), dtype=complex)
    for a_int in range(2**n):
        a = tuple((a_int >> (n - 1 - j)) & 1 for j in range(n))
        for b_int in range(2**n):
            b = tuple((b_int >> (n - 1 - j)) & 1 for j in range(n))
            cols[:, a_int * 2**n + b_int] = shifted_state(lifted, a, b)
    svals = np.linalg.svd(cols, compute_uv=False)
    svals = np.sort(svals)[::-1]
    sum_sq_dev = float(np.sum((svals - 1.0) ** 2))
    bound = 128.0 * 4**n * n**2 * float(epsilon)
    rank_lb = int(np.sum(svals >= 0.5))
    cert = DimensionCertificate(
        n=n,
        h_dim=lifted.h_dim,
        epsilon=float(epsilon),
        singular_values=tuple(float(s) for s in svals),
        sum_sq_dev=sum_sq_dev,
        sum_sq_dev_bound=bound,
        rank_lower_bound=rank_lb,
        rank_cap=lifted.h_dim**2,
    )
    if not cert.satisfied:
        raise StructuralError(
            f"dimension certificate violated: dev {sum_sq_dev:.3g} vs {bound:.3g}, "
            f"rank {rank_lb} vs cap {cert.rank_cap}"
        )
    return cert
