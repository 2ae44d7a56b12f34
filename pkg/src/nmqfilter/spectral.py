"""Synthesis of linear ancillas with a prescribed rational power spectral density.

The chain is: rational PSD S(omega)  ->  stable spectral factor Gamma(s) with
S = Gamma Gamma~ and Gamma~(s) = Gamma(s).conj composed with s -> -s* ->
companion-form state space (F0, G0, H0)  ->  coordinate change T with
T.dag T = P^-1 from the controllability Lyapunov equation, giving a
physically realizable (F, G, H) with F + F.dag + G G.dag = 0.  The realized
system's internal frequency matrix is Omega = i(F - F.dag)/2 and its white
noise coupling is L = -G.dag a.

Everything is scalar-channel (one noise input, one colored-noise output).
Polynomial coefficient lists are ascending; the frequency mapping is
s = -i omega throughout, so on-axis evaluation is S(omega) = |Gamma(-i omega)|^2.
Spectral factors are unique only up to a phase; all comparisons are made on
PSDs and moduli.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.polynomial.polynomial as npp
from scipy.linalg import solve_continuous_lyapunov

from .errors import (ControllabilityError, DimensionError, FactorizationError,
                     MarginalSpectrumError, PSDValidationError, StabilityError)

GRID_POINTS = 512
REALIZABILITY_TOL = 1e-10
FACTOR_GRID_TOL = 1e-8


def _trim(coeffs) -> np.ndarray:
    """Drop trailing (leading-order) coefficients that are numerically zero."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return c[:1]
    keep = len(c)
    while keep > 1 and abs(c[keep - 1]) <= 1e-14 * scale:
        keep -= 1
    return c[:keep]


def _poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial.

    Degrees one and two use closed forms (with the usual cancellation-safe
    branch) so that synthesized model parameters survive exactly.
    """
    c = _trim(coeffs)
    deg = len(c) - 1
    if deg <= 0:
        return np.zeros(0, dtype=complex)
    if deg == 1:
        return np.array([-c[0] / c[1]])
    if deg == 2:
        a, b, cc = c[2], c[1], c[0]
        disc = np.sqrt(b * b - 4.0 * a * cc + 0j)
        if abs(-b + disc) < abs(-b - disc):
            disc = -disc
        r1 = (-b + disc) / (2.0 * a)
        r2 = cc / (a * r1) if r1 != 0 else (-b - disc) / (2.0 * a)
        return np.array([r1, r2])
    return npp.polyroots(c)


@dataclass(frozen=True)
class RationalPSD:
    """Scalar rational PSD as s-domain polynomial coefficient lists.

    Strictly proper (deg num < deg den) and real nonnegative on the real
    frequency axis; both facts are validated on a feature-resolving grid at
    construction time.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if len(num) >= len(den):
            raise PSDValidationError(
                f"PSD must be strictly proper: deg num {len(num)-1} "
                f">= deg den {len(den)-1}")
        omegas = self.default_grid()
        vals = npp.polyval(-1j * omegas, num) / npp.polyval(-1j * omegas, den)
        scale = float(np.max(np.abs(vals)))
        if scale == 0.0:
            raise PSDValidationError("PSD is identically zero")
        if float(np.max(np.abs(vals.imag))) > 1e-9 * scale:
            raise PSDValidationError("PSD is not real on the frequency axis")
        if float(np.min(vals.real)) < -1e-10 * max(1.0, scale):
            raise PSDValidationError("PSD is negative on the frequency axis")

    @classmethod
    def from_omega(cls, num, den) -> "RationalPSD":
        """Convert omega-domain coefficient lists, substituting omega = i s."""
        num = np.atleast_1d(np.asarray(num, dtype=complex))
        den = np.atleast_1d(np.asarray(den, dtype=complex))
        phases_n = 1j ** np.arange(len(num))
        phases_d = 1j ** np.arange(len(den))
        return cls(num=num * phases_n, den=den * phases_d)

    def default_grid(self, n: int = GRID_POINTS) -> np.ndarray:
        roots = np.concatenate([_poly_roots(self.num), _poly_roots(self.den)])
        return frequency_grid(roots, n)

    def __call__(self, omegas) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float)
        s = -1j * omegas
        return (npp.polyval(s, self.num) / npp.polyval(s, self.den)).real


def frequency_grid(roots: Sequence[complex], n: int = GRID_POINTS) -> np.ndarray:
    """Uniform omega grid wide enough to resolve every pole/zero feature.

    Each s-plane root contributes a feature at omega = -Im(root) with width
    |Re(root)|; the grid spans all features with a 20x width margin.
    """
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        return np.linspace(-1.0, 1.0, n)
    centers = -roots.imag
    widths = np.abs(roots.real)
    wmax = max(float(np.max(widths)), 1e-3 * max(1.0, float(np.max(np.abs(roots)))))
    lo = float(np.min(centers)) - 20.0 * wmax
    hi = float(np.max(centers)) + 20.0 * wmax
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class TransferFunction:
    """Strictly proper scalar transfer function with monic stable denominator.

    ``beta`` are numerator coefficients (ascending, length <= n) and
    ``alpha`` the non-leading denominator coefficients (ascending, length n).
    """

    beta: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        beta = _trim(self.beta)
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        if len(beta) > len(alpha):
            raise PSDValidationError("transfer function must be strictly proper")
        poles = self.poles()
        if poles.size and float(np.max(poles.real)) >= 0.0:
            raise StabilityError(
                f"denominator roots must lie in the open left half plane; "
                f"max real part {float(np.max(poles.real)):.3e}")

    @property
    def order(self) -> int:
        return len(self.alpha)

    def den_full(self) -> np.ndarray:
        return np.concatenate([self.alpha, [1.0 + 0j]])

    def poles(self) -> np.ndarray:
        return _poly_roots(self.den_full())

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return npp.polyval(s, self.beta) / npp.polyval(s, self.den_full())


@dataclass(frozen=True)
class AnnihilationRealization:
    """Complex state-space triple (F, G, H) of an annihilation-only system.

    When ``realizable`` is set the triple satisfies F + F.dag + G G.dag = 0,
    so it corresponds to a genuine open quantum system with frequency matrix
    Omega = i(F - F.dag)/2 and coupling L = -G.dag a.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    realizable: bool = False

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=complex))
        G = np.asarray(self.G, dtype=complex)
        H = np.asarray(self.H, dtype=complex)
        if G.ndim == 1:
            G = G.reshape(-1, 1)
        if H.ndim == 1:
            H = H.reshape(1, -1)
        n = F.shape[0]
        if F.shape != (n, n):
            raise DimensionError(f"F must be square, got {F.shape}")
        if G.shape[0] != n or H.shape[1] != n:
            raise DimensionError("G/H dimensions do not match F")
        eigs = np.linalg.eigvals(F)
        if float(np.max(eigs.real)) >= 0.0:
            raise StabilityError("F must be Hurwitz")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)
        if self.realizable:
            resid = realizability_residual(F, G)
            if resid > REALIZABILITY_TOL:
                raise FactorizationError(
                    f"realizability residual {resid:.3e} exceeds "
                    f"{REALIZABILITY_TOL:.1e}")

    @property
    def n_modes(self) -> int:
        return self.F.shape[0]

    def omega_matrix(self) -> np.ndarray:
        return 0.5j * (self.F - self.F.conj().T)

    def coupling_matrix(self) -> np.ndarray:
        """N_a with L_a = N_a a."""
        return -self.G.conj().T


def realizability_residual(F: np.ndarray, G: np.ndarray) -> float:
    F = np.atleast_2d(F)
    G = np.atleast_2d(G)
    return float(np.max(np.abs(F + F.conj().T + G @ G.conj().T)))


def spectral_factor(psd: RationalPSD) -> TransferFunction:
    """Stable/minimum-phase factor Gamma with Gamma Gamma~ = S.

    Denominator and numerator roots of S come in pairs mirrored across the
    imaginary s-axis; the left-half-plane member of each pair goes to Gamma.
    Roots on the axis (within 1e-9 relative) are rejected.  The result is
    checked pointwise against S on a feature grid.
    """
    num = psd.num
    den = psd.den
    if (len(den) - 1) % 2 != 0 or (len(num) - 1) % 2 != 0:
        raise FactorizationError(
            "PSD numerator/denominator degrees must be even for a scalar factor")
    n = (len(den) - 1) // 2
    q = (len(num) - 1) // 2

    def split_roots(coeffs, label):
        roots = _poly_roots(coeffs)
        if roots.size == 0:
            return roots
        scale = float(np.max(np.abs(roots)))
        on_axis = np.abs(roots.real) <= 1e-9 * max(1.0, scale)
        if np.any(on_axis):
            raise MarginalSpectrumError(
                f"PSD {label} has roots on the imaginary s-axis: "
                f"{roots[on_axis]}")
        left = roots[roots.real < 0.0]
        if 2 * len(left) != len(roots):
            raise FactorizationError(
                f"PSD {label} roots do not pair across the imaginary axis")
        return left

    zeros_left = split_roots(num, "numerator")
    poles_left = split_roots(den, "denominator")

    ratio = (num[-1] / den[-1]) * (-1.0 + 0j) ** (n - q)
    if abs(ratio.imag) > 1e-9 * abs(ratio) or ratio.real <= 0.0:
        raise PSDValidationError(
            f"leading-coefficient ratio {ratio} is not positive real; "
            "input is not a valid PSD")
    gain = np.sqrt(ratio.real)

    beta = gain * npp.polyfromroots(zeros_left) if zeros_left.size else \
        np.array([gain + 0j])
    den_left = npp.polyfromroots(poles_left)
    gamma = TransferFunction(beta=beta, alpha=den_left[:-1])

    grid = psd.default_grid()
    target = psd(grid)
    got = np.abs(gamma(-1j * grid)) ** 2
    err = float(np.max(np.abs(got - target))) / float(np.max(np.abs(target)))
    if err > FACTOR_GRID_TOL:
        raise FactorizationError(
            f"factor verification failed: grid error {err:.3e}")
    return gamma


def canonical_realization(gamma: TransferFunction):
    """Controllable companion realization (F0, G0, H0) of Gamma.

    Bottom-row companion F0, G0 the last basis vector, H0 the numerator
    coefficients; H0 (s I - F0)^-1 G0 equals Gamma exactly (the overall sign
    of the factor is immaterial to the PSD).
    """
    n = gamma.order
    F0 = np.zeros((n, n), dtype=complex)
    if n > 1:
        F0[np.arange(n - 1), np.arange(1, n)] = 1.0
    F0[-1, :] = -gamma.alpha
    G0 = np.zeros((n, 1), dtype=complex)
    G0[-1, 0] = 1.0
    H0 = np.zeros((1, n), dtype=complex)
    H0[0, :len(gamma.beta)] = gamma.beta
    return F0, G0, H0


def solve_lyapunov(F: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Unique P > 0 with F P + P F.dag + Q = 0, for Hurwitz F."""
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    if F.shape != Q.shape:
        raise DimensionError("F and Q must have equal shapes")
    eigs = np.linalg.eigvals(F)
    if float(np.max(eigs.real)) >= 0.0:
        raise StabilityError(
            f"Lyapunov equation needs Hurwitz F; max Re eig = "
            f"{float(np.max(eigs.real)):.3e}")
    P = solve_continuous_lyapunov(F, -Q)
    P = 0.5 * (P + P.conj().T)
    resid = float(np.max(np.abs(F @ P + P @ F.conj().T + Q)))
    scale = max(1.0, float(np.max(np.abs(Q))))
    if resid > 1e-10 * scale:
        raise FactorizationError(f"Lyapunov residual {resid:.3e} too large")
    w = np.linalg.eigvalsh(P)
    if w[0] <= 1e-12 * max(w[-1], 1.0):
        raise ControllabilityError(
            f"Lyapunov solution nearly singular (min eig {w[0]:.3e}); "
            "realization is not controllable")
    return P


def physical_realization(F0: np.ndarray, G0: np.ndarray, H0: np.ndarray):
    """Coordinate change to a physically realizable triple.

    Solves F0 P + P F0.dag + G0 G0.dag = 0, factors P^-1 = T.dag T
    (Cholesky), and conjugates the realization by T.  Returns
    ``(realization, Omega, Na)``; the realization satisfies
    F + F.dag + G G.dag = 0 and preserves the PSD of the input triple.
    """
    F0 = np.atleast_2d(np.asarray(F0, dtype=complex))
    G0 = np.asarray(G0, dtype=complex).reshape(F0.shape[0], -1)
    H0 = np.asarray(H0, dtype=complex).reshape(-1, F0.shape[0])
    P = solve_lyapunov(F0, G0 @ G0.conj().T)
    Pinv = np.linalg.inv(P)
    Pinv = 0.5 * (Pinv + Pinv.conj().T)
    Lchol = np.linalg.cholesky(Pinv)
    T = Lchol.conj().T
    Tinv = np.linalg.inv(T)
    Fa = T @ F0 @ Tinv
    Ga = T @ G0
    Ha = H0 @ Tinv
    resid = realizability_residual(Fa, Ga)
    if resid > REALIZABILITY_TOL:
        raise FactorizationError(
            f"physical realizability residual {resid:.3e} exceeds tolerance")
    realization = AnnihilationRealization(F=Fa, G=Ga, H=Ha, realizable=True)
    Omega = realization.omega_matrix()
    Na = realization.coupling_matrix()

    grid = frequency_grid(np.linalg.eigvals(F0))
    before = _state_space_psd(F0, G0, H0, grid)
    after = psd_of_realization(realization, grid)
    err = float(np.max(np.abs(before - after))) / max(float(np.max(before)), 1e-300)
    if err > 1e-9:
        raise FactorizationError(
            f"coordinate change altered the PSD (grid error {err:.3e})")
    return realization, Omega, Na


def lorentzian_ancilla(omega0: float, gamma0: float) -> AnnihilationRealization:
    """Single-mode realization of Lorentzian noise, closed form.

    F = -(gamma0/2 + i omega0), G = -sqrt(gamma0), H = -sqrt(gamma0)/2;
    peak value 1 at omega0, half maximum at omega0 +- gamma0/2.
    """
    if gamma0 <= 0.0:
        raise PSDValidationError(f"gamma0 must be positive, got {gamma0}")
    F = np.array([[-(0.5 * gamma0 + 1j * omega0)]])
    G = np.array([[-np.sqrt(gamma0)]], dtype=complex)
    H = np.array([[-0.5 * np.sqrt(gamma0)]], dtype=complex)
    return AnnihilationRealization(F=F, G=G, H=H, realizable=True)


def lorentzian_psd(omega0: float, gamma0: float) -> RationalPSD:
    """Rational form of the Lorentzian PSD g^2/4 / (g^2/4 + (w - w0)^2)."""
    if gamma0 <= 0.0:
        raise PSDValidationError(f"gamma0 must be positive, got {gamma0}")
    quarter = 0.25 * gamma0 * gamma0
    num = np.array([quarter + 0j])
    den = np.array([quarter + omega0 * omega0, -2j * omega0, -1.0 + 0j])
    return RationalPSD(num=num, den=den)


def _state_space_psd(F, G, H, omegas) -> np.ndarray:
    F = np.atleast_2d(F)
    G = np.asarray(G).reshape(F.shape[0], -1)
    H = np.asarray(H).reshape(-1, F.shape[0])
    n = F.shape[0]
    eye = np.eye(n, dtype=complex)
    out = np.empty(len(omegas), dtype=float)
    for i, w in enumerate(np.asarray(omegas, dtype=float)):
        g = H @ np.linalg.solve(-1j * w * eye - F, G)
        out[i] = float(np.abs(g[0, 0]) ** 2)
    return out


def psd_of_realization(realization: AnnihilationRealization, omegas) -> np.ndarray:
    """|H (sI - F)^-1 G|^2 on s = -i omega for each grid frequency."""
    return _state_space_psd(realization.F, realization.G, realization.H, omegas)


def factorize_pipeline(psd: RationalPSD) -> dict:
    """Full synthesis chain PSD -> realizable ancilla, with verification data.

    Returns the realization together with Omega, Na, the realizability
    residual, and the worst normalized PSD error on the verification grid.
    """
    gamma = spectral_factor(psd)
    F0, G0, H0 = canonical_realization(gamma)
    realization, Omega, Na = physical_realization(F0, G0, H0)
    grid = psd.default_grid()
    target = psd(grid)
    got = psd_of_realization(realization, grid)
    err = float(np.max(np.abs(got - target))) / float(np.max(np.abs(target)))
    return {
        "realization": realization,
        "Omega": Omega,
        "Na": Na,
        "residual": realizability_residual(realization.F, realization.G),
        "psd_grid_error": err,
        "grid": grid,
    }
