import math

import numpy as np
import pytest

import ionramp as ir

OMEGA0 = 2.0 * math.pi * 1.2e6  # rad/s, the standard working point
GAMMA_SQUARED = 3.0


@pytest.fixture(scope="session")
def omega0():
    return OMEGA0


@pytest.fixture(scope="session")
def ca_pair():
    return ir.Chain.equal(39.9626, 2)


@pytest.fixture(scope="session")
def ca_pair_basis(ca_pair):
    return ir.normal_mode_basis(ca_pair, OMEGA0)


@pytest.fixture(scope="session")
def boundary():
    def make(tf_us, gamma_squared=GAMMA_SQUARED, omega0=OMEGA0):
        return ir.BoundarySpec.from_gamma_squared(omega0, gamma_squared,
                                                  tf_us * 1e-6)
    return make


@pytest.fixture(scope="session")
def smoothstep_protocol(boundary):
    def make(tf_us, a_ref=1.0, gamma_squared=GAMMA_SQUARED):
        b = boundary(tf_us, gamma_squared)
        return ir.omega_from_rho(ir.make_smoothstep_ansatz(b.gamma), b, a_ref)
    return make


@pytest.fixture(scope="session")
def shooting_result_25(ca_pair, ca_pair_basis, boundary):
    """Optimized order-11 ramp at tf = 2.5 us, shared by the slow tests."""
    return ir.optimize_free_params(ca_pair, ca_pair_basis, boundary(2.5), 11)
