"""Per-mode auxiliary dynamics and the shooting optimization.

Each normal mode of the chain behaves, up to quadratic order, like a
harmonic oscillator with frequency Omega_nu(t) = A_nu w1(t) whose center
is driven by the moving equilibrium.  Two auxiliary functions describe
it: a scaling factor rho_nu obeying the Ermakov equation

    rho'' + Omega^2 rho = Omega0^2 / rho^3

and a center trajectory alpha_nu obeying a driven Newton equation

    alpha'' + Omega^2 alpha = p0dot_nu.

A ramp leaves a mode unexcited when rho ends at gamma with zero slope
and alpha returns to rest.  The designed ansatz guarantees this for the
design mode; the remaining modes are handled either approximately (plain
smoothstep ramp) or by tuning the free polynomial coefficients until the
total final excess energy vanishes (shooting).

All integrations run in scaled time tau = w0 t with dimensionless state;
public interfaces accept and return SI quantities.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize

from .constants import HBAR
from .errors import IntegrationError, InvalidProtocolError, SingularErmakovError
from .protocol_design import build_extended_ansatz, omega_from_rho, shift_weights_scaled

# objective value substituted when a trial parameter vector asks for an
# inverted trap; finite so the simplex can walk back out
PENALTY_QUANTA = 1.0e6

_RHO_FLOOR = 1e-9


def _check_ivp(sol, what):
    if not sol.success:
        raise IntegrationError("%s integration failed: %s" % (what, sol.message))


def integrate_ermakov(omega, omega0, rho0, drho0, tf,
                      rtol=1e-10, atol=1e-12, n_samples=401):
    """Integrate the Ermakov equation for one mode.

    omega is a callable of time in seconds returning the instantaneous
    mode frequency in rad/s; omega0 is the reference (initial) frequency
    entering the inverse-cube term.  Returns (t, rho, drho) arrays with
    drho in 1/s.  Raises SingularErmakovError if rho collapses.
    """
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    tau_f = omega0 * tf

    def rhs(tau, y):
        r, dr = y
        ratio = omega(tau / omega0) / omega0
        return (dr, -(ratio * ratio) * r + 1.0 / (r * r * r))

    def hit_floor(tau, y):
        return y[0] - _RHO_FLOOR

    hit_floor.terminal = True
    hit_floor.direction = -1

    t_eval = np.linspace(0.0, tau_f, int(n_samples))
    sol = solve_ivp(rhs, (0.0, tau_f), [float(rho0), float(drho0) / omega0],
                    method="RK45", rtol=rtol, atol=atol,
                    t_eval=t_eval, events=hit_floor)
    if sol.t_events[0].size:
        raise SingularErmakovError(
            "scaling factor collapsed at t=%.6e s; the protocol is far "
            "outside its validity range" % (sol.t_events[0][0] / omega0,)
        )
    _check_ivp(sol, "Ermakov")
    return sol.t / omega0, sol.y[0], sol.y[1] * omega0


def integrate_newton(omega, p0dot, tf, omega0=None,
                     rtol=1e-10, atol=1e-12, n_samples=401):
    """Integrate the driven center equation with resting initial data.

    omega and p0dot are callables of time in seconds.  The solve is
    normalized by the peak drive so tolerances are meaningful for any
    physical magnitude; a vanishing drive short-circuits to alpha = 0.
    """
    if omega0 is None:
        omega0 = float(omega(0.0))
    tau_f = omega0 * tf
    t_eval = np.linspace(0.0, tau_f, int(n_samples))

    probe = np.array([abs(p0dot(t)) for t in np.linspace(0.0, tf, 101)])
    scale = probe.max()
    if scale == 0.0:
        t = t_eval / omega0
        return t, np.zeros_like(t), np.zeros_like(t)

    def rhs(tau, y):
        a, da = y
        t = tau / omega0
        ratio = omega(t) / omega0
        return (da, -(ratio * ratio) * a + p0dot(t) / scale)

    sol = solve_ivp(rhs, (0.0, tau_f), [0.0, 0.0], method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval)
    _check_ivp(sol, "Newton")
    # undo the normalization: alpha_bar = alpha * Omega0^2 / scale
    return sol.t / omega0, sol.y[0] * scale / omega0**2, sol.y[1] * scale / omega0


@dataclass(frozen=True)
class ModeEnergy:
    value: float   # J
    mode: int
    n: int = 0


def mode_energy(n, rho, drho, alpha, dalpha, omega, omega0, p0dot,
                center_variant="printed"):
    """Expansion-mode average energy at one instant, in joules.

    Implemented with the initial-frequency divisor on the center offset
    (center_variant='printed'); pass 'instantaneous' to divide by the
    current Omega^2 instead.  The two agree wherever p0dot vanishes, in
    particular at both ends of a designed ramp.
    """
    osc = (2 * n + 1) * HBAR / (4.0 * omega0) * (
        drho**2 + omega**2 * rho**2 + omega0**2 / rho**2
    )
    divisor = omega0**2 if center_variant == "printed" else omega**2
    center = alpha - p0dot / divisor
    drive = 0.5 * dalpha**2 + 0.5 * omega**2 * center**2
    return ModeEnergy(value=float(osc + drive), mode=-1, n=n)


@dataclass(frozen=True)
class AuxiliaryTrajectory:
    """Joint auxiliary solution for all modes of a chain under one ramp.

    Arrays are indexed [mode, time].  alpha and dalpha are in SI
    mass-weighted units (sqrt(kg) m and sqrt(kg) m/s).
    """

    t: np.ndarray
    rho: np.ndarray
    drho: np.ndarray
    alpha: np.ndarray
    dalpha: np.ndarray
    frequency_ratios: np.ndarray
    omega0: float
    protocol: object
    design_mode: Optional[int] = None

    @property
    def omega0_modes(self):
        return self.frequency_ratios * self.omega0


def _scaled_drive_rate(w, dw, ddw):
    """d/dtau of the scaled momentum shift, divided by the mode weight."""
    return -(2.0 / 3.0) * (ddw * w ** (-5.0 / 3.0)
                           - (5.0 / 3.0) * dw * dw * w ** (-8.0 / 3.0))


def integrate_auxiliary(chain, basis, protocol, rtol=1e-10, atol=1e-12,
                        n_samples=201, analytic_design_mode=None):
    """Integrate rho and alpha for every mode of the chain.

    If analytic_design_mode is given, that mode's rho is taken from the
    protocol's ansatz (it satisfies the Ermakov equation by construction)
    and only its center equation is integrated.
    """
    ratios = basis.frequency_ratios
    n_modes = len(ratios)
    weights = shift_weights_scaled(chain, basis)
    tau_f = protocol.boundary.tau_f
    omega0 = protocol.boundary.omega0

    rho_modes = [m for m in range(n_modes) if m != analytic_design_mode]
    n_rho = len(rho_modes)

    def rhs(tau, y):
        s = tau / tau_f
        w, dw, ddw = protocol.scaled(s)
        w2 = w * w
        rate = _scaled_drive_rate(w, dw, ddw)
        out = np.empty_like(y)
        for k, m in enumerate(rho_modes):
            r, dr = y[2 * k], y[2 * k + 1]
            a2 = ratios[m] ** 2
            out[2 * k] = dr
            out[2 * k + 1] = -a2 * w2 * r + a2 / (r * r * r)
        base = 2 * n_rho
        for m in range(n_modes):
            a, da = y[base + 2 * m], y[base + 2 * m + 1]
            a2 = ratios[m] ** 2
            out[base + 2 * m] = da
            out[base + 2 * m + 1] = -a2 * w2 * a + weights[m] * rate
        return out

    y0 = np.zeros(2 * n_rho + 2 * n_modes)
    for k in range(n_rho):
        y0[2 * k] = 1.0

    def hit_floor(tau, y):
        if n_rho == 0:
            return 1.0
        return min(y[2 * k] for k in range(n_rho)) - _RHO_FLOOR

    hit_floor.terminal = True
    hit_floor.direction = -1

    t_eval = np.linspace(0.0, tau_f, int(n_samples))
    sol = solve_ivp(rhs, (0.0, tau_f), y0, method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval, events=hit_floor)
    if sol.t_events[0].size:
        raise SingularErmakovError(
            "a mode scaling factor collapsed at t=%.6e s"
            % (sol.t_events[0][0] / omega0,)
        )
    _check_ivp(sol, "auxiliary")

    k_t = sol.t.size
    rho = np.empty((n_modes, k_t))
    drho = np.empty((n_modes, k_t))
    for k, m in enumerate(rho_modes):
        rho[m] = sol.y[2 * k]
        drho[m] = sol.y[2 * k + 1] * omega0
    if analytic_design_mode is not None:
        svals = sol.t / tau_f
        ansatz = protocol.ansatz
        vals = ansatz.evaluate(svals)
        rho[analytic_design_mode] = vals[0]
        drho[analytic_design_mode] = vals[1] / tau_f * omega0

    base = 2 * n_rho
    m1 = chain.species[0].mass
    l0 = (chain.coulomb_coeff / (m1 * omega0**2)) ** (1.0 / 3.0)
    alpha_unit = math.sqrt(m1) * l0
    alpha = sol.y[base::2] * alpha_unit
    dalpha = sol.y[base + 1 :: 2] * alpha_unit * omega0

    return AuxiliaryTrajectory(
        t=sol.t / omega0, rho=rho, drho=drho, alpha=alpha, dalpha=dalpha,
        frequency_ratios=np.array(ratios), omega0=omega0, protocol=protocol,
        design_mode=analytic_design_mode,
    )


def final_mode_excess(chain, basis, traj, n=0, center_variant="printed"):
    """Final-time excess energy per mode [J], relative to the ground level.

    The design mode's oscillator term is evaluated from its analytic
    endpoint state (exactly the ground level) when the trajectory was
    integrated that way.
    """
    protocol = traj.protocol
    bnd = protocol.boundary
    omega0 = bnd.omega0
    ratios = traj.frequency_ratios
    weights = shift_weights_scaled(chain, basis)
    w, dw, ddw = protocol.scaled(1.0)
    rate = _scaled_drive_rate(w, dw, ddw)

    m1 = chain.species[0].mass
    l0 = (chain.coulomb_coeff / (m1 * omega0**2)) ** (1.0 / 3.0)
    e_unit = m1 * l0**2 * omega0**2

    out = np.empty(len(ratios))
    for m, a_nu in enumerate(ratios):
        omega_f = a_nu * omega0 * w
        omega_init = a_nu * omega0
        ground = (2 * n + 1) * HBAR * omega_f / 2.0
        if m == traj.design_mode:
            osc = ground
        else:
            rho_f = traj.rho[m, -1]
            drho_f = traj.drho[m, -1]
            osc = (2 * n + 1) * HBAR / (4.0 * omega_init) * (
                drho_f**2 + omega_f**2 * rho_f**2 + omega_init**2 / rho_f**2
            )
        # center part in scaled units
        a_scaled = traj.alpha[m, -1] / (math.sqrt(m1) * l0)
        da_scaled = traj.dalpha[m, -1] / (math.sqrt(m1) * l0 * omega0)
        p0rate = weights[m] * rate
        divisor = a_nu**2 if center_variant == "printed" else (a_nu * w) ** 2
        center = a_scaled - p0rate / divisor
        drive = e_unit * (0.5 * da_scaled**2 + 0.5 * (a_nu * w) ** 2 * center**2)
        out[m] = osc + drive - ground
    return out


def harmonic_excitation(chain, basis, protocol, n=0, center_variant="printed",
                        rtol=1e-10, atol=1e-12, analytic_design_mode=None):
    """Predicted final excitation from the quadratic mode picture.

    Returns a dict with per-mode excess energies [J], per-mode quanta
    (divided by hbar Omega_nu(tf)) and their total.
    """
    traj = integrate_auxiliary(chain, basis, protocol, rtol=rtol, atol=atol,
                               analytic_design_mode=analytic_design_mode)
    excess = final_mode_excess(chain, basis, traj, n=n,
                               center_variant=center_variant)
    w_final = protocol.scaled(1.0)[0]
    omega_final = basis.frequency_ratios * protocol.boundary.omega0 * w_final
    quanta = excess / (HBAR * omega_final)
    return {
        "excess_j": excess,
        "quanta": quanta,
        "total_quanta": float(quanta.sum()),
        "trajectory": traj,
    }


def shooting_objective(free_params, chain, basis, boundary, design_mode=0,
                       order=11, center_variant="printed",
                       rtol=1e-10, atol=1e-12, return_trajectory=False):
    """Total final excess energy [J] of the ramp built from free_params.

    Parameter vectors that would invert the trap return a large finite
    penalty instead of raising, so a simplex optimizer can recover.
    """
    a_ref = basis.frequency_ratios[design_mode]
    ansatz = build_extended_ansatz(boundary.gamma, order, free_params)
    try:
        protocol = omega_from_rho(ansatz, boundary, a_ref)
    except InvalidProtocolError:
        penalty = PENALTY_QUANTA * HBAR * boundary.omega0
        if return_trajectory:
            return penalty, None
        return penalty
    traj = integrate_auxiliary(chain, basis, protocol, rtol=rtol, atol=atol,
                               analytic_design_mode=design_mode)
    excess = final_mode_excess(chain, basis, traj, n=0,
                               center_variant=center_variant)
    value = float(excess.sum())
    if return_trajectory:
        return value, traj
    return value


@dataclass(frozen=True)
class ShootingResult:
    free_params: Tuple[float, ...]
    objective: float          # J
    objective_quanta: float   # objective / (hbar * mean final mode quantum)
    iterations: int
    n_evaluations: int
    converged: bool
    protocol: object
    final_state: dict         # per mode: (rho, drho, alpha, dalpha) at tf
    bc_residuals: dict


def optimize_free_params(chain, basis, boundary, order, design_mode=0,
                         center_variant="printed", rtol=1e-10, atol=1e-12,
                         maxiter=2000, maxfev=4000, xatol=1e-8):
    """Tune the ansatz free parameters to cancel the final excitation.

    Nelder-Mead from the plain smoothstep point (all parameters zero)
    with a fixed initial simplex, so results are reproducible run to
    run.  Non-convergence is reported, not raised: the best simplex
    point so far is returned with converged=False.
    """
    n_free = order - 9

    def objective(x):
        return shooting_objective(x, chain, basis, boundary,
                                  design_mode=design_mode, order=order,
                                  center_variant=center_variant,
                                  rtol=rtol, atol=atol)

    x0 = np.zeros(n_free)
    simplex = np.vstack([x0] + [x0 + 0.5 * np.eye(n_free)[i] for i in range(n_free)])
    fatol = 1e-12 * HBAR * boundary.omega0
    counter = {"n": 0}

    def counted(x):
        counter["n"] += 1
        return objective(x)

    res = minimize(counted, x0, method="Nelder-Mead",
                   options=dict(initial_simplex=simplex, xatol=xatol,
                                fatol=fatol, maxiter=maxiter, maxfev=maxfev))

    best = tuple(float(v) for v in res.x)
    value, traj = shooting_objective(best, chain, basis, boundary,
                                     design_mode=design_mode, order=order,
                                     center_variant=center_variant,
                                     rtol=rtol, atol=atol,
                                     return_trajectory=True)

    a_ref = basis.frequency_ratios[design_mode]
    ansatz = build_extended_ansatz(boundary.gamma, order, best)
    protocol = omega_from_rho(ansatz, boundary, a_ref)

    final_state = {}
    residual_rho = 0.0
    max_alpha = 0.0
    if traj is not None:
        for m in range(len(basis.frequency_ratios)):
            final_state[m] = (
                float(traj.rho[m, -1]), float(traj.drho[m, -1]),
                float(traj.alpha[m, -1]), float(traj.dalpha[m, -1]),
            )
            if m != design_mode:
                residual_rho = max(residual_rho,
                                   abs(traj.rho[m, -1] - boundary.gamma))
            max_alpha = max(max_alpha, abs(traj.alpha[m, -1]))

    omega_final = basis.frequency_ratios * boundary.omegaf
    quanta = value / (HBAR * float(np.mean(omega_final)))

    return ShootingResult(
        free_params=best,
        objective=value,
        objective_quanta=quanta,
        iterations=int(res.nit),
        n_evaluations=counter["n"],
        converged=bool(res.success),
        protocol=protocol,
        final_state=final_state,
        bc_residuals={
            "max_final_alpha": max_alpha,
            "max_rho_minus_gamma": residual_rho,
        },
    )


def report_text(result):
    """Human-readable summary of a shooting run."""
    bnd = result.protocol.boundary
    lines = []
    lines.append("shooting report")
    lines.append("  omega0/2pi [MHz]: %.6f" % (bnd.omega0 / (2e6 * math.pi)))
    lines.append("  gamma^2: %.6f" % bnd.gamma**2)
    lines.append("  tf [us]: %.6f" % (bnd.tf * 1e6))
    lines.append("  order: %s" % (result.protocol.ansatz.order,))
    lines.append("  free parameters: %s"
                 % ", ".join("%.9e" % v for v in result.free_params))
    lines.append("  objective [J]: %.9e" % result.objective)
    lines.append("  objective [quanta, mean final mode]: %.6e" % result.objective_quanta)
    lines.append("  iterations: %d  evaluations: %d  converged: %s"
                 % (result.iterations, result.n_evaluations, result.converged))
    lines.append("  residuals: max|alpha(tf)|=%.3e  max|rho(tf)-gamma|=%.3e"
                 % (result.bc_residuals["max_final_alpha"],
                    result.bc_residuals["max_rho_minus_gamma"]))
    for m in sorted(result.final_state):
        r, dr, a, da = result.final_state[m]
        lines.append("  mode %d final: rho=%.9f drho=%.3e alpha=%.3e dalpha=%.3e"
                     % (m, r, dr, a, da))
    return "\n".join(lines) + "\n"
