"""Ion chain geometry and instantaneous normal modes.

A chain of N ions sits in a common harmonic well with spring constant
u0(t) = m_1 w1(t)^2 (every species sees the same u0, so lighter ions have
higher bare frequencies).  Equilibrium positions factor into a length
scale l = (C_c/u0)^(1/3) times dimensionless coordinates u_i that depend
only on N.  Linearizing the Coulomb-coupled potential about equilibrium
gives a mass-weighted stiffness matrix whose eigenvalues scale as w1^2,
so each mode frequency is a fixed multiple A_nu of the trap frequency.

Ions are ordered by decreasing position: q_1 > q_2 > ... > q_N.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np

from .constants import AMU, COULOMB_COEFF
from .errors import DegenerateModesError, EquilibriumError


@dataclass(frozen=True)
class IonSpecies:
    """One ion: mass in kg and charge as a multiple of e."""

    mass: float
    charge_multiple: int = 1

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("ion mass must be positive, got %r" % (self.mass,))
        if self.charge_multiple < 1:
            raise ValueError("charge multiple must be >= 1")

    @classmethod
    def from_amu(cls, mass_amu, charge_multiple=1):
        return cls(mass=mass_amu * AMU, charge_multiple=charge_multiple)


@dataclass(frozen=True)
class Chain:
    """An ordered ion chain; index i runs over decreasing position."""

    species: Tuple[IonSpecies, ...]

    def __post_init__(self):
        if len(self.species) < 1:
            raise ValueError("chain needs at least one ion")
        object.__setattr__(self, "species", tuple(self.species))

    @classmethod
    def equal(cls, mass_amu, n):
        """n identical singly charged ions of the given mass in amu."""
        one = IonSpecies.from_amu(mass_amu)
        return cls(species=(one,) * n)

    @property
    def n(self):
        return len(self.species)

    @property
    def masses(self):
        return np.array([s.mass for s in self.species])

    @property
    def coulomb_coeff(self):
        """Z^2 e^2/(4 pi eps0) for the chain's common charge state."""
        zs = {s.charge_multiple for s in self.species}
        if len(zs) != 1:
            raise ValueError("mixed charge states are not supported")
        (z,) = zs
        return z * z * COULOMB_COEFF


@dataclass(frozen=True)
class EquilibriumGeometry:
    """Static minimum of the chain potential at a given trap frequency."""

    u: np.ndarray          # dimensionless coordinates, strictly decreasing
    l: float               # length scale [m], l^3 = C_c/u0
    positions: np.ndarray  # q_i = l * u_i [m]
    u0: float              # spring constant [N/m]


@dataclass(frozen=True)
class NormalModeBasis:
    """Mass-weighted eigenvectors (rows) and frequency ratios A_nu.

    Modes are sorted by ascending A_nu; Omega_nu(t) = A_nu * w1(t).  Each
    row is sign-fixed so its largest-magnitude component is positive.
    """

    vectors: np.ndarray
    frequency_ratios: np.ndarray

    @property
    def n(self):
        return len(self.frequency_ratios)


def spring_constant(chain, omega1):
    """Common spring constant u0 = m_1 w1^2 [N/m]."""
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    return chain.species[0].mass * omega1**2


def _u_gradient(u):
    """Gradient of the dimensionless chain potential at coordinates u."""
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    inv2 = d**-2
    upper = np.triu(inv2, 1).sum(axis=1)
    lower = np.tril(inv2, -1).sum(axis=1)
    return u - upper + lower


def _u_stiffness(u):
    """Dimensionless stiffness matrix K(u); also the Newton Jacobian."""
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    inv3 = np.abs(d) ** -3
    k = -2.0 * inv3
    np.fill_diagonal(k, 0.0)
    np.fill_diagonal(k, 1.0 + 2.0 * inv3.sum(axis=1))
    return k


@lru_cache(maxsize=64)
def _solve_equilibrium_u_cached(n):
    if n == 1:
        return (0.0,)
    # Damped Newton on the force-balance system.  The uniform starting
    # guess (spacing 0.6) keeps the ordering correct from the first step;
    # the backtracking line search never lets two ions swap.
    u = 0.6 * np.linspace(n / 2.0, -n / 2.0, n)
    residual = np.inf
    for _ in range(200):
        g = _u_gradient(u)
        residual = np.max(np.abs(g))
        if residual < 1e-14:
            break
        step = np.linalg.solve(_u_stiffness(u), g)
        lam = 1.0
        for _ in range(60):
            trial = u - lam * step
            if np.all(np.diff(trial) < 0):
                break
            lam *= 0.5
        u = trial
        # the solution is antisymmetric; project back onto that subspace
        # to kill roundoff drift
        u = 0.5 * (u - u[::-1])
    else:
        raise EquilibriumError(
            "equilibrium solve did not converge for N=%d (residual %.3e)"
            % (n, residual),
            residual=residual,
        )
    return tuple(u)


def solve_equilibrium_u(n):
    """Dimensionless equilibrium coordinates for n equal-charge ions.

    Returns an array sorted in decreasing order, u_1 > ... > u_N, with
    force-balance residuals below 1e-12 and exact antisymmetry
    u_i = -u_{N+1-i} up to roundoff.
    """
    if n < 1:
        raise ValueError("need at least one ion")
    return np.array(_solve_equilibrium_u_cached(int(n)))


def equilibrium_geometry(chain, omega1):
    """Equilibrium positions of the chain at trap frequency omega1.

    The dimensionless shape depends only on N; masses enter only through
    the length scale l = (C_c/u0)^(1/3) with u0 = m_1 w1^2.
    """
    u0 = spring_constant(chain, omega1)
    u = solve_equilibrium_u(chain.n)
    length = (chain.coulomb_coeff / u0) ** (1.0 / 3.0)
    return EquilibriumGeometry(u=u, l=length, positions=length * u, u0=u0)


def hessian(chain, geometry):
    """Mass-weighted second-derivative matrix at equilibrium [1/s^2]."""
    m = chain.masses
    k = _u_stiffness(geometry.u)
    return geometry.u0 * k / np.sqrt(np.outer(m, m))


def jacobi_eigh(matrix, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Sweeps plane rotations over all upper-triangle pairs until the
    off-diagonal Frobenius norm falls below tol times the matrix norm.
    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    unsorted.  Plenty fast for the N <= 16 matrices used here, and
    accurate to machine precision.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), v
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * math.atan2(2.0 * apq, a[q, q] - a[p, p])
                c = math.cos(theta)
                s = math.sin(theta)
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p] = rot_p
                a[:, q] = rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :] = rot_p
                a[q, :] = rot_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p] = rot_p
                v[:, q] = rot_q
    else:
        raise RuntimeError("Jacobi sweep limit reached without convergence")
    return np.diag(a).copy(), v


def normal_mode_basis(chain, omega1_ref):
    """Instantaneous normal modes of the chain.

    The returned frequency ratios A_nu satisfy Omega_nu = A_nu * w1 at
    every trap frequency, not just the reference value used to build the
    basis (the stiffness matrix scales uniformly with w1^2).
    """
    geometry = equilibrium_geometry(chain, omega1_ref)
    vmat = hessian(chain, geometry)
    eigenvalues, eigenvectors = jacobi_eigh(vmat)
    order = np.argsort(eigenvalues)
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    ratios = np.sqrt(np.maximum(eigenvalues, 0.0)) / omega1_ref

    gaps = np.diff(ratios)
    if np.any(gaps < 1e-9):
        nu = int(np.argmax(gaps < 1e-9))
        raise DegenerateModesError(
            "modes %d and %d are degenerate to 1e-9 (A=%.12g, %.12g); "
            "refusing to pick an arbitrary basis" % (nu, nu + 1, ratios[nu], ratios[nu + 1])
        )

    rows = eigenvectors.T.copy()
    for i in range(rows.shape[0]):
        j = int(np.argmax(np.abs(rows[i])))
        if rows[i, j] < 0:
            rows[i] = -rows[i]
    return NormalModeBasis(vectors=rows, frequency_ratios=ratios)


def two_ion_analytic(mu):
    """Closed-form two-ion modes for mass ratio mu = m_2/m_1.

    Returns (A_minus, A_plus, a_plus, b_plus, a_minus, b_minus) where the
    A are frequency ratios and (a, b) the normalized mass-weighted
    eigenvector components on ions 1 and 2.
    """
    if not mu > 0:
        raise ValueError("mass ratio must be positive")
    root = math.sqrt(1.0 - 1.0 / mu + 1.0 / mu**2)
    a_plus2 = 1.0 + 1.0 / mu + root
    a_minus2 = 1.0 + 1.0 / mu - root
    big_a_minus = math.sqrt(a_minus2)
    big_a_plus = math.sqrt(a_plus2)

    t_plus = 1.0 - 1.0 / mu - root
    t_minus = 1.0 - 1.0 / mu + root
    a_p = 1.0 / math.sqrt(1.0 + t_plus**2 * mu)
    b_p = t_plus * math.sqrt(mu) * a_p
    a_m = 1.0 / math.sqrt(1.0 + t_minus**2 * mu)
    b_m = t_minus * math.sqrt(mu) * a_m
    return big_a_minus, big_a_plus, a_p, b_p, a_m, b_m
