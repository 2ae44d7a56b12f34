"""Finite-dimensional operator algebra used by every other module.

Conventions fixed here once and used everywhere:

* Operators are dense complex ``numpy`` arrays.  All frequencies/rates are
  angular, in rad/ns.
* Qubit basis order is (excited ``|1>``, ground ``|0>``), so
  ``sigma_z = diag(1, -1)`` and ``sigma_minus = [[0,0],[1,0]]`` lowers the
  excited state into the ground state.
* Fock bases are ordered ``|0>, |1>, ..., |N-1>``.
* Tensor ordering is principal system first, ancillas after.
* Vectorization is column-stacking: ``vec(rho)[j*d + i] = rho[i, j]``, hence
  ``vec(A @ X @ B) = kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError

# Tolerance for identities that hold in exact arithmetic (construction-time
# checks) versus identities degraded by time integration.
ATOL_STRUCT = 1e-12
ATOL_EVOLVE = 1e-9

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    "minus": np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex),
    "plus": np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
}


def annihilation(n_levels: int) -> np.ndarray:
    """Truncated-Fock annihilation operator, entry sqrt(k) at (k-1, k).

    On the truncated space ``[a, a.dag]`` equals the identity except for the
    top diagonal entry, which is ``1 - n_levels``.
    """
    if n_levels < 2:
        raise DimensionError(f"annihilation needs n_levels >= 2, got {n_levels}")
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


def number_operator(n_levels: int) -> np.ndarray:
    """Fock number operator diag(0, 1, ..., N-1)."""
    if n_levels < 2:
        raise DimensionError(f"number_operator needs n_levels >= 2, got {n_levels}")
    return np.diag(np.arange(n_levels, dtype=float)).astype(complex)


def pauli(which: str) -> np.ndarray:
    """Pauli or ladder matrix: one of 'x', 'y', 'z', 'minus', 'plus'."""
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}") from None


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def fock_dm(n_levels: int, k: int = 0) -> np.ndarray:
    """Density matrix of the Fock state |k> on an n_levels space."""
    if not 0 <= k < n_levels:
        raise DimensionError(f"Fock index {k} out of range for {n_levels} levels")
    rho = np.zeros((n_levels, n_levels), dtype=complex)
    rho[k, k] = 1.0
    return rho


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def kron(a: np.ndarray, b: np.ndarray, *rest: np.ndarray) -> np.ndarray:
    """Kronecker product, principal factor leftmost."""
    out = np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    for op in rest:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _require_square(op: np.ndarray, name: str = "operator") -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {op.shape}")
    return op


def _require_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def is_hermitian(op: np.ndarray, tol: float = ATOL_STRUCT) -> bool:
    return bool(np.max(np.abs(op - op.conj().T)) <= tol)


def require_hermitian(op: np.ndarray, tol: float = ATOL_STRUCT,
                      name: str = "operator") -> np.ndarray:
    op = _require_square(op, name)
    dev = float(np.max(np.abs(op - op.conj().T)))
    if dev > tol:
        raise DimensionError(f"{name} is not Hermitian (max deviation {dev:.3e})")
    return op


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = a b - b a."""
    a = _require_square(a)
    b = _require_square(b)
    _require_same_dim(a, b)
    return a @ b - b @ a


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Adjoint Lindblad term L rho L.dag - (L.dag L rho + rho L.dag L)/2.

    Trace-free for any inputs; identically equal to the symmetrized
    commutator form ([L rho, L.dag] + [L, rho L.dag])/2.
    """
    L = _require_square(L, "coupling")
    rho = _require_square(rho, "rho")
    _require_same_dim(L, rho)
    Ld = L.conj().T
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def master_rhs(H: np.ndarray, Ls: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_k dissipator(L_k, rho).

    This is the direct (unvectorized) form; it doubles as the oracle for
    the vectorized generator.
    """
    out = -1j * commutator(H, rho)
    for L in Ls:
        out += dissipator(L, rho)
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a stacked square matrix")
    return v.reshape(d, d, order="F")


def vectorize_liouvillian(H: np.ndarray, Ls: Sequence[np.ndarray]) -> np.ndarray:
    """Dense superoperator M with d(vec rho)/dt = M @ vec(rho).

    Uses vec(A X B) = kron(B.T, A) vec(X); trace preservation shows up as
    vec(I) being a left null vector of M.
    """
    H = _require_square(H, "hamiltonian")
    d = H.shape[0]
    eye = np.eye(d, dtype=complex)
    M = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L in Ls:
        L = _require_square(L, "coupling")
        _require_same_dim(L, H)
        LdL = L.conj().T @ L
        M += np.kron(L.conj(), L) \
            - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return M


def liouvillian_sparse(H: np.ndarray, Ls: Sequence[np.ndarray]) -> sp.csr_matrix:
    """Sparse CSR variant of :func:`vectorize_liouvillian`.

    Same generator and stacking convention; used where the augmented space
    is large enough (dot/resonator studies) that the dense superoperator
    would be wasteful.
    """
    H = _require_square(H, "hamiltonian")
    d = H.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    Hs = sp.csr_matrix(H)
    M = -1j * (sp.kron(eye, Hs) - sp.kron(Hs.T, eye))
    for L in Ls:
        L = _require_square(L, "coupling")
        _require_same_dim(L, H)
        Lk = sp.csr_matrix(L)
        LdL = Lk.conj().T @ Lk
        M = M + sp.kron(Lk.conj(), Lk) \
            - 0.5 * sp.kron(eye, LdL) - 0.5 * sp.kron(LdL.T, eye)
    return M.tocsr()


def lift(op: np.ndarray, dims: Sequence[int], slot: int) -> np.ndarray:
    """Embed a single-subsystem operator into the tensor product space.

    ``dims`` lists the subsystem dimensions in tensor order; the operator
    must match ``dims[slot]`` and is padded with identities elsewhere.
    """
    dims = list(dims)
    if not 0 <= slot < len(dims):
        raise DimensionError(f"slot {slot} out of range for {len(dims)} subsystems")
    op = _require_square(op)
    if op.shape[0] != dims[slot]:
        raise DimensionError(
            f"operator dim {op.shape[0]} does not match dims[{slot}] = {dims[slot]}")
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == slot else np.eye(d, dtype=complex))
    return out


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out every subsystem except ``keep``.

    ``dims`` must multiply to the dimension of ``rho``; the trace of the
    result equals the trace of the input.
    """
    rho = _require_square(rho, "rho")
    dims = list(dims)
    total = int(np.prod(dims))
    if total != rho.shape[0]:
        raise DimensionError(
            f"factorization {dims} has product {total}, but rho has dim {rho.shape[0]}")
    if not 0 <= keep < len(dims):
        raise DimensionError(f"keep index {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    tens = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems for partial_trace")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i != keep:
            col[i] = row[i]
    expr = "".join(row) + "".join(col) + "->" + row[keep] + col[keep]
    return np.einsum(expr, tens)
