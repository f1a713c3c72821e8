"""Full classical verification of trap ramps.

No mode expansion here: the chain's exact Hamilton equations (harmonic
well plus all pairwise Coulomb terms) are integrated in the laboratory
frame, starting from the initial equilibrium at rest.  The final excess
energy over the expanded equilibrium, decomposed into final-time normal
modes, is the ground truth the designed ramps are judged against.

Integration runs in chain-scaled units (lengths in the equilibrium
scale at w0, energies in m1 l0^2 w0^2) where the Coulomb coefficient
drops out entirely.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .constants import HBAR
from .errors import IntegrationError, IonCrossingError, IonRampError
from .chain_model import (
    equilibrium_geometry,
    normal_mode_basis,
    solve_equilibrium_u,
    spring_constant,
)
from .protocol_design import (
    BoundarySpec,
    cosine_protocol,
    linear_protocol,
    make_smoothstep_ansatz,
    omega_from_rho,
)


@dataclass(frozen=True)
class PhaseState:
    q: np.ndarray  # positions [m], strictly decreasing
    p: np.ndarray  # momenta [kg m/s]
    t: float


@dataclass(frozen=True)
class LabTrajectory:
    t: np.ndarray       # [K]
    q: np.ndarray       # [K, N]
    p: np.ndarray       # [K, N]
    protocol: object
    energy_error: float  # relative residual of the work-energy balance

    @property
    def final(self):
        return PhaseState(q=self.q[-1], p=self.p[-1], t=float(self.t[-1]))


@dataclass(frozen=True)
class ExcitationReport:
    total_excess: float           # J above the final equilibrium minimum
    per_mode_quanta: np.ndarray   # mode energy / (hbar Omega_nu(tf))
    total_quanta: float
    mode_frequencies: np.ndarray  # Omega_nu(tf) [rad/s]
    residual: float               # total_excess - sum of mode energies [J]
    metadata: dict = field(default_factory=dict)


def potential_and_forces(chain, q, u0):
    """Potential energy [J] and per-ion forces [N] at positions q."""
    q = np.asarray(q, dtype=float)
    n = q.size
    if n > 1 and not np.all(np.diff(q) < 0):
        raise IonCrossingError("positions are not strictly decreasing")
    cc = chain.coulomb_coeff
    v = 0.5 * u0 * np.sum(q * q)
    f = -u0 * q
    if n > 1:
        iu, ju = np.triu_indices(n, 1)
        d = q[iu] - q[ju]
        v += np.sum(cc / d)
        pair = cc / (d * d)
        np.add.at(f, iu, pair)
        np.add.at(f, ju, -pair)
    return float(v), f


def integrate_hamilton(chain, protocol, rtol=1e-10, atol=1e-12, n_samples=201):
    """Integrate the chain's classical motion over one ramp.

    The initial state is the equilibrium of the initial trap at rest.
    An extra quadrature accumulates the work done by the time-dependent
    spring constant; its mismatch with the actual energy change is
    reported as `energy_error` (it doubles as an integrator health
    check: with a frozen trap it reduces to plain energy conservation).
    """
    n = chain.n
    bnd = protocol.boundary
    omega0 = bnd.omega0
    tau_f = bnd.tau_f
    m1 = chain.species[0].mass
    mtilde = chain.masses / m1
    u = solve_equilibrium_u(n)
    iu, ju = np.triu_indices(n, 1)

    def hamiltonian(tau, y):
        x = y[:n]
        ptil = y[n : 2 * n]
        w, _, _ = protocol.scaled(tau / tau_f)
        h = np.sum(ptil * ptil / (2.0 * mtilde)) + 0.5 * w * w * np.sum(x * x)
        if n > 1:
            h += np.sum(1.0 / (x[iu] - x[ju]))
        return h

    def rhs(tau, y):
        x = y[:n]
        ptil = y[n : 2 * n]
        w, dw, _ = protocol.scaled(tau / tau_f)
        force = -w * w * x
        if n > 1:
            d = x[iu] - x[ju]
            pair = 1.0 / (d * d)
            np.add.at(force, iu, pair)
            np.add.at(force, ju, -pair)
        xdot = ptil / mtilde
        work_rate = w * dw * np.sum(x * x)
        return np.concatenate([xdot, force, [work_rate]])

    events = None
    if n > 1:
        def crossing(tau, y):
            x = y[:n]
            return float(np.min(x[:-1] - x[1:]))
        crossing.terminal = True
        crossing.direction = -1
        events = crossing

    y0 = np.concatenate([u, np.zeros(n), [0.0]])
    t_eval = np.linspace(0.0, tau_f, int(n_samples))
    sol = solve_ivp(rhs, (0.0, tau_f), y0, method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval, events=events)
    if events is not None and sol.t_events[0].size:
        raise IonCrossingError(
            "ions crossed at t=%.6e s; the result would be unphysical"
            % (sol.t_events[0][0] / omega0,)
        )
    if not sol.success:
        raise IntegrationError("lab-frame integration failed: %s" % sol.message)

    h0 = hamiltonian(0.0, y0)
    hf = hamiltonian(tau_f, sol.y[:, -1])
    work = sol.y[2 * n, -1]
    scale = max(abs(h0), abs(hf), 1e-300)
    energy_error = abs(hf - h0 - work) / scale

    l0 = (chain.coulomb_coeff / (m1 * omega0**2)) ** (1.0 / 3.0)
    p_unit = m1 * l0 * omega0
    return LabTrajectory(
        t=sol.t / omega0,
        q=sol.y[:n].T * l0,
        p=sol.y[n : 2 * n].T * p_unit,
        protocol=protocol,
        energy_error=float(energy_error),
    )


def excitation_report(chain, final_state, omegaf, metadata=None):
    """Final excess energy over the target equilibrium, per normal mode.

    The excess is total energy minus the potential minimum of the final
    trap; the per-mode split projects mass-weighted displacements and
    velocities onto the final-time normal modes.  The anharmonic
    remainder (excess not captured by the quadratic modes) is reported
    as `residual`.
    """
    geometry = equilibrium_geometry(chain, omegaf)
    basis = normal_mode_basis(chain, omegaf)
    u0f = spring_constant(chain, omegaf)

    v_min, _ = potential_and_forces(chain, geometry.positions, u0f)
    v_final, _ = potential_and_forces(chain, final_state.q, u0f)
    kinetic = np.sum(final_state.p**2 / (2.0 * chain.masses))
    total_excess = float(kinetic + v_final - v_min)

    root_m = np.sqrt(chain.masses)
    delta = root_m * (final_state.q - geometry.positions)
    vel = final_state.p / root_m
    coords = basis.vectors @ delta
    momenta = basis.vectors @ vel
    omega_modes = basis.frequency_ratios * omegaf
    energies = 0.5 * momenta**2 + 0.5 * omega_modes**2 * coords**2
    quanta = energies / (HBAR * omega_modes)

    return ExcitationReport(
        total_excess=total_excess,
        per_mode_quanta=quanta,
        total_quanta=float(quanta.sum()),
        mode_frequencies=omega_modes,
        residual=float(total_excess - energies.sum()),
        metadata=dict(metadata or {}),
    )


def simulate_protocol(chain, protocol, rtol=1e-10, atol=1e-12, n_samples=201,
                      metadata=None):
    """Run one ramp end to end: integrate, then score the final state."""
    traj = integrate_hamilton(chain, protocol, rtol=rtol, atol=atol,
                              n_samples=n_samples)
    meta = dict(metadata or {})
    meta.setdefault("protocol_kind", protocol.kind)
    meta.setdefault("energy_error", traj.energy_error)
    report = excitation_report(chain, traj.final, protocol.boundary.omegaf,
                               metadata=meta)
    return traj, report


def make_protocol_family(kind, chain, omega0, gamma_squared, order=11,
                         design_mode=0, optimizer_opts=None):
    """A callable tf -> ProtocolCurve for sweep runs.

    kind: 'linear', 'cosine', 'smoothstep' (plain designed ramp) or
    'shooting' (re-optimized at every tf).
    """
    optimizer_opts = dict(optimizer_opts or {})
    if kind in ("smoothstep", "shooting"):
        basis = normal_mode_basis(chain, omega0)
        a_ref = basis.frequency_ratios[design_mode]

    def family(tf):
        boundary = BoundarySpec.from_gamma_squared(omega0, gamma_squared, tf)
        if kind == "linear":
            return linear_protocol(boundary)
        if kind == "cosine":
            return cosine_protocol(boundary)
        if kind == "smoothstep":
            ansatz = make_smoothstep_ansatz(boundary.gamma)
            return omega_from_rho(ansatz, boundary, a_ref)
        if kind == "shooting":
            from .auxiliary_dynamics import optimize_free_params

            result = optimize_free_params(chain, basis, boundary, order,
                                          design_mode=design_mode,
                                          **optimizer_opts)
            return result.protocol
        raise ValueError("unknown protocol family %r" % (kind,))

    return family


@dataclass(frozen=True)
class SweepRow:
    tf: float
    total_quanta: Optional[float]
    per_mode_quanta: Optional[np.ndarray]
    free_params: tuple = ()
    error: Optional[str] = None


def sweep_tf(chain, family, tf_list, rtol=1e-10, atol=1e-12, threads=1):
    """Excitation versus ramp duration for one protocol family.

    `family` maps tf [s] to a ProtocolCurve (see make_protocol_family).
    Rows are independent; a failing tf is recorded with its error text
    and the sweep continues.  `threads` > 1 fans rows out over a thread
    pool, results keep tf order either way.
    """
    tf_list = list(tf_list)
    if any(tf <= 0 for tf in tf_list):
        raise ValueError("tf values must be positive")
    if sorted(tf_list) != tf_list:
        raise ValueError("tf values must be ascending")

    def run_one(tf):
        try:
            protocol = family(tf)
            _, report = simulate_protocol(chain, protocol, rtol=rtol, atol=atol)
            return SweepRow(tf=tf, total_quanta=report.total_quanta,
                            per_mode_quanta=report.per_mode_quanta,
                            free_params=tuple(protocol.free_params))
        except IonRampError as exc:
            return SweepRow(tf=tf, total_quanta=None, per_mode_quanta=None,
                            error="%s: %s" % (type(exc).__name__, exc))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            return list(pool.map(run_one, tf_list))
    return [run_one(tf) for tf in tf_list]
