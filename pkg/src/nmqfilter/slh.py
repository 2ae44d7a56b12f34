"""(S, L, H) triples and their composition by direct coupling.

The scattering matrix is always the identity; constructors reject anything
else.  A principal system and one or more linear ancillas are merged into a
single triple whose Hamiltonian carries the energy-exchange interaction
i(c.dag z - z.dag c), and whose coupling list stacks the ancilla couplings
above the principal probes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import operators as ops
from .errors import DimensionError
from .operators import ATOL_STRUCT


@dataclass(frozen=True)
class SLHTriple:
    """Open-system description (S, L, H) with S = I.

    ``couplings`` is the stacked coupling vector L (one operator per noise
    channel); ``hamiltonian`` is Hermitian, in rad/ns.
    """

    couplings: tuple
    hamiltonian: np.ndarray
    scattering: str = "I"

    def __post_init__(self):
        if self.scattering != "I":
            raise ValueError("only identity scattering is supported")
        H = ops.require_hermitian(self.hamiltonian, ATOL_STRUCT, "hamiltonian")
        object.__setattr__(self, "hamiltonian", H)
        coup = tuple(np.asarray(L, dtype=complex) for L in self.couplings)
        for L in coup:
            if L.shape != H.shape:
                raise DimensionError(
                    f"coupling shape {L.shape} does not match Hamiltonian {H.shape}")
        object.__setattr__(self, "couplings", coup)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class DirectCoupling:
    """Colored-noise operators c and principal-side operators z, already
    embedded on the common augmented space, one pair per exchange channel."""

    c: tuple
    z: tuple

    def __post_init__(self):
        c = tuple(np.asarray(x, dtype=complex) for x in self.c)
        z = tuple(np.asarray(x, dtype=complex) for x in self.z)
        if not c or len(c) != len(z):
            raise DimensionError("c and z must be nonempty lists of equal length")
        for ck, zk in zip(c, z):
            if ck.shape != zk.shape:
                raise DimensionError(
                    f"coupling pair shapes differ: {ck.shape} vs {zk.shape}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "z", z)


def embed(G: SLHTriple, dims: Sequence[int], slot: int) -> SLHTriple:
    """Lift a triple onto the tensor-product space, identity on other slots."""
    dims = list(dims)
    if not 0 <= slot < len(dims):
        raise DimensionError(f"slot {slot} out of range")
    if G.dim != dims[slot]:
        raise DimensionError(
            f"triple dim {G.dim} does not match dims[{slot}] = {dims[slot]}")
    H = ops.lift(G.hamiltonian, dims, slot)
    Ls = tuple(ops.lift(L, dims, slot) for L in G.couplings)
    return SLHTriple(couplings=Ls, hamiltonian=H)


def direct_coupling_hamiltonian(dc: DirectCoupling) -> np.ndarray:
    """Energy-exchange Hamiltonian i sum_k (c_k.dag z_k - z_k.dag c_k)."""
    H = np.zeros_like(dc.c[0])
    for ck, zk in zip(dc.c, dc.z):
        H += 1j * (ck.conj().T @ zk - zk.conj().T @ ck)
    return ops.require_hermitian(H, ATOL_STRUCT, "direct-coupling Hamiltonian")


def concatenate(Gp: SLHTriple, Ga: SLHTriple, dc: DirectCoupling) -> SLHTriple:
    """Merge principal and ancilla triples on the common augmented space.

    The coupling list stacks the ancilla channels above the principal
    probes; the Hamiltonian is H_p + H_a plus the direct interaction.
    """
    if Gp.dim != Ga.dim:
        raise DimensionError("triples must already live on the common space")
    Hpa = direct_coupling_hamiltonian(dc)
    if Hpa.shape != Gp.hamiltonian.shape:
        raise DimensionError("direct coupling dim does not match triples")
    return SLHTriple(
        couplings=tuple(Ga.couplings) + tuple(Gp.couplings),
        hamiltonian=Gp.hamiltonian + Ga.hamiltonian + Hpa,
    )


def augmented_liouvillian(GT: SLHTriple, sparse: bool = False):
    """Vectorized generator of the augmented master equation.

    The direct-coupling terms enter through the commutator with the total
    Hamiltonian; this is algebraically identical to writing them as
    [c.dag z, rho] + [rho, z.dag c] separately (checked by tests).
    """
    if sparse:
        return ops.liouvillian_sparse(GT.hamiltonian, GT.couplings)
    return ops.vectorize_liouvillian(GT.hamiltonian, GT.couplings)


def ancilla_slh(realization, n_levels: int):
    """Fock-space triple and colored-noise operators of a linear ancilla.

    ``realization`` is an AnnihilationRealization (F, G, H); each of its n
    modes is truncated to ``n_levels`` Fock states.  Returns
    ``(triple, c_ops)`` where the triple has Hamiltonian a.dag Omega a and
    couplings N_a a (rows), and ``c_ops`` lists the rows of H_a a, the
    operators through which the ancilla couples to a principal system.
    """
    F = np.atleast_2d(np.asarray(realization.F, dtype=complex))
    G = np.atleast_2d(np.asarray(realization.G, dtype=complex))
    Hmat = np.atleast_2d(np.asarray(realization.H, dtype=complex))
    n = F.shape[0]
    Omega = 0.5j * (F - F.conj().T)
    Omega = ops.require_hermitian(Omega, 1e-10, "ancilla frequency matrix")
    Na = -G.conj().T
    dims = [n_levels] * n
    a_modes = [ops.lift(ops.annihilation(n_levels), dims, j) for j in range(n)]
    dim = n_levels ** n
    H = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        for k in range(n):
            if Omega[j, k] != 0.0:
                H += Omega[j, k] * (a_modes[j].conj().T @ a_modes[k])
    couplings = []
    for r in range(Na.shape[0]):
        L = np.zeros((dim, dim), dtype=complex)
        for k in range(n):
            L += Na[r, k] * a_modes[k]
        couplings.append(L)
    c_ops = []
    for r in range(Hmat.shape[0]):
        c = np.zeros((dim, dim), dtype=complex)
        for k in range(n):
            c += Hmat[r, k] * a_modes[k]
        c_ops.append(c)
    triple = SLHTriple(couplings=tuple(couplings),
                       hamiltonian=0.5 * (H + H.conj().T))
    return triple, c_ops
