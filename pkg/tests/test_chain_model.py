"""Equilibrium geometry and normal-mode structure of the chain."""

import math

import numpy as np
import pytest

import ionramp as ir
from ionramp.constants import AMU, COULOMB_COEFF

OMEGA0 = 2.0 * math.pi * 1.2e6


def test_two_ion_dimensionless_positions():
    u = ir.solve_equilibrium_u(2)
    ref = (0.25) ** (1.0 / 3.0)
    assert u[0] == pytest.approx(ref, rel=1e-13)
    assert u[1] == pytest.approx(-ref, rel=1e-13)


def test_three_ion_dimensionless_positions():
    u = ir.solve_equilibrium_u(3)
    ref = (1.25) ** (1.0 / 3.0)
    assert u[0] == pytest.approx(ref, rel=1e-13)
    assert u[1] == pytest.approx(0.0, abs=1e-14)
    assert u[2] == pytest.approx(-ref, rel=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8, 12])
def test_equilibrium_gradient_vanishes(n):
    u = ir.solve_equilibrium_u(n)
    # force balance in dimensionless form, checked term by term
    for i in range(n):
        g = u[i]
        for j in range(n):
            if j == i:
                continue
            g -= np.sign(u[i] - u[j]) / (u[i] - u[j]) ** 2
        assert abs(g) < 1e-12
    assert np.all(np.diff(u) < 0)
    # reflection antisymmetry of the ordered chain
    assert np.max(np.abs(u + u[::-1])) < 1e-12


def test_spring_constant_value():
    chain = ir.Chain.equal(39.9626, 1)
    u0 = ir.spring_constant(chain, OMEGA0)
    assert u0 == pytest.approx(39.9626 * AMU * OMEGA0**2, rel=1e-15)
    assert u0 == pytest.approx(3.772463637e-12, rel=1e-9)


def test_two_ion_separation_physical():
    chain = ir.Chain.equal(39.9626, 2)
    geo = ir.equilibrium_geometry(chain, OMEGA0)
    sep = geo.positions[0] - geo.positions[1]
    u0 = ir.spring_constant(chain, OMEGA0)
    ref = 2.0 * (COULOMB_COEFF / (4.0 * u0)) ** (1.0 / 3.0)
    assert sep == pytest.approx(ref, rel=1e-12)
    assert sep == pytest.approx(4.9638925910e-06, rel=1e-9)


def test_length_scale_shrinks_with_stiffer_trap():
    chain = ir.Chain.equal(39.9626, 2)
    g1 = ir.equilibrium_geometry(chain, OMEGA0)
    g2 = ir.equilibrium_geometry(chain, 2.0 * OMEGA0)
    assert g2.l == pytest.approx(g1.l / 2.0 ** (2.0 / 3.0), rel=1e-13)


def test_jacobi_against_numpy():
    rng = np.random.default_rng(42)
    for n in (2, 3, 5, 8):
        m = rng.standard_normal((n, n))
        m = 0.5 * (m + m.T)
        vals, vecs = ir.jacobi_eigh(m)
        order = np.argsort(vals)
        vals = vals[order]
        vecs = vecs[:, order]
        ref = np.linalg.eigvalsh(m)
        assert np.max(np.abs(vals - ref)) < 1e-12 * max(1.0, np.max(np.abs(ref)))
        # orthonormality and the eigen relation itself
        assert np.max(np.abs(vecs.T @ vecs - np.eye(n))) < 1e-12
        assert np.max(np.abs(m @ vecs - vecs * vals)) < 1e-11


def test_jacobi_diagonal_input():
    d = np.diag([3.0, -1.0, 7.5])
    vals, vecs = ir.jacobi_eigh(d)
    assert np.max(np.abs(np.sort(vals) - np.array([-1.0, 3.0, 7.5]))) == 0.0
    assert np.max(np.abs(np.abs(vecs) - np.eye(3))) < 1e-15


@pytest.mark.parametrize("n", [2, 3, 4, 6, 8])
def test_breathing_mode_ratio_sqrt3(n):
    """Equal-mass chains of any length share one exact mode ratio."""
    chain = ir.Chain.equal(39.9626, n)
    basis = ir.normal_mode_basis(chain, OMEGA0)
    ratios = basis.frequency_ratios
    assert np.min(np.abs(ratios - math.sqrt(3.0))) < 1e-10
    # that mode displaces each ion in proportion to its position
    idx = int(np.argmin(np.abs(ratios - math.sqrt(3.0))))
    u = ir.solve_equilibrium_u(n)
    vec = basis.vectors[idx]
    proj = vec @ (u / np.linalg.norm(u))
    assert abs(abs(proj) - 1.0) < 1e-10


def test_three_ion_highest_mode():
    chain = ir.Chain.equal(39.9626, 3)
    basis = ir.normal_mode_basis(chain, OMEGA0)
    assert basis.frequency_ratios[2] == pytest.approx(math.sqrt(29.0 / 5.0),
                                                      rel=1e-12)


def test_ratios_independent_of_reference_frequency():
    chain = ir.Chain.equal(39.9626, 4)
    b1 = ir.normal_mode_basis(chain, OMEGA0)
    b2 = ir.normal_mode_basis(chain, 0.37 * OMEGA0)
    assert np.max(np.abs(b1.frequency_ratios - b2.frequency_ratios)) < 1e-12


def test_basis_orthonormal_mixed_masses():
    chain = ir.Chain((ir.IonSpecies.from_amu(9.01218),
                      ir.IonSpecies.from_amu(39.9626),
                      ir.IonSpecies.from_amu(9.01218)))
    basis = ir.normal_mode_basis(chain, OMEGA0)
    g = basis.vectors @ basis.vectors.T
    assert np.max(np.abs(g - np.eye(3))) < 1e-12
    assert np.all(np.diff(basis.frequency_ratios) > 0)


@pytest.mark.parametrize("mu", [1.0, 40.0 / 9.0, 9.0 / 40.0, 2.5])
def test_two_ion_closed_form_matches_numeric(mu):
    m1 = 9.0
    chain = ir.Chain((ir.IonSpecies.from_amu(m1),
                      ir.IonSpecies.from_amu(m1 * mu)))
    basis = ir.normal_mode_basis(chain, OMEGA0)
    a_minus, a_plus, a_p, b_p, a_m, b_m = ir.two_ion_analytic(mu)
    ana = np.sort([a_minus, a_plus])
    num = basis.frequency_ratios
    assert np.max(np.abs(num - ana) / ana) < 1e-10
    # eigenvectors agree up to overall sign
    for row, ref in ((basis.vectors[0], np.array([a_m, b_m])),
                     (basis.vectors[1], np.array([a_p, b_p]))):
        err = min(np.max(np.abs(row - ref)), np.max(np.abs(row + ref)))
        assert err < 1e-10


def test_two_ion_closed_form_normalized():
    for mu in (0.3, 1.0, 4.4343):
        _, _, a_p, b_p, a_m, b_m = ir.two_ion_analytic(mu)
        assert a_p**2 + b_p**2 == pytest.approx(1.0, abs=1e-13)
        assert a_m**2 + b_m**2 == pytest.approx(1.0, abs=1e-13)
        # eigenvectors of a symmetric matrix with distinct eigenvalues
        assert abs(a_p * a_m + b_p * b_m) < 1e-13


def test_two_ion_analytic_rejects_nonpositive():
    with pytest.raises(ValueError):
        ir.two_ion_analytic(0.0)
    with pytest.raises(ValueError):
        ir.two_ion_analytic(-2.0)


def test_hessian_scaling():
    """The mass-weighted curvature matrix scales as the trap frequency squared."""
    chain = ir.Chain.equal(39.9626, 3)
    v1 = ir.hessian(chain, ir.equilibrium_geometry(chain, OMEGA0))
    v2 = ir.hessian(chain, ir.equilibrium_geometry(chain, 2.0 * OMEGA0))
    assert np.max(np.abs(v2 - 4.0 * v1)) < 4.0 * np.max(np.abs(v1)) * 1e-12
    assert np.max(np.abs(v1 - v1.T)) == 0.0


def test_chain_rejects_mixed_charges():
    a = ir.IonSpecies(mass=9.01218 * AMU, charge_multiple=1)
    b = ir.IonSpecies(mass=39.9626 * AMU, charge_multiple=2)
    with pytest.raises(ValueError):
        ir.Chain((a, b)).coulomb_coeff


def test_species_requires_positive_mass():
    with pytest.raises(ValueError):
        ir.IonSpecies.from_amu(-1.0)
