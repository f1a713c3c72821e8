"""Trap-frequency ramp construction.

The designed ramps come from choosing a smooth scaling function rho(s),
s = t/tf, that carries the reference mode from width 1 to width
gamma = sqrt(w0/wf), and inverting its Ermakov equation for the trap
frequency:

    w1(t) = sqrt( w0^2/rho^4 - rho''(t)/(A^2 rho) )

with A the frequency ratio of the design mode (A = 1 for the lowest mode
of an equal-mass chain).  Internally everything is evaluated in scaled
time tau = w0 t against the dimensionless ratio w = w1/w0; the public
accessors speak SI.

Baseline ramps (linear and half-cosine sweeps of w1) are provided for
comparison, deliberately violating the boundary conditions on the
derivatives of w1.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import __version__ as _version
from .errors import InvalidProtocolError

# amplitudes of the three-cosine scaling ansatz; the combination sums to
# -128 so the endpoints land exactly on 1 and gamma
COSINE3_AMPLITUDES = (-150.0, 25.0, -3.0)

_RADICAND_PROBE_POINTS = 2050  # endpoints plus 2048 interior samples


@dataclass(frozen=True)
class BoundarySpec:
    """Endpoint data of one expansion/compression ramp.

    gamma is stored; the final frequency is derived as w0/gamma^2 so the
    pair can never disagree.
    """

    omega0: float
    gamma: float
    tf: float

    def __post_init__(self):
        if not (self.omega0 > 0 and self.gamma > 0 and self.tf > 0):
            raise ValueError("omega0, gamma and tf must all be positive")

    @property
    def omegaf(self):
        return self.omega0 / self.gamma**2

    @property
    def tau_f(self):
        """Ramp duration in scaled time units."""
        return self.omega0 * self.tf

    @classmethod
    def from_omegas(cls, omega0, omegaf, tf):
        return cls(omega0=omega0, gamma=math.sqrt(omega0 / omegaf), tf=tf)

    @classmethod
    def from_gamma_squared(cls, omega0, gamma_squared, tf):
        return cls(omega0=omega0, gamma=math.sqrt(gamma_squared), tf=tf)


def _polyval(coeffs, s):
    """Horner evaluation, fast path for python scalars."""
    if isinstance(s, (float, int)):
        acc = 0.0
        for c in coeffs[::-1]:
            acc = acc * s + c
        return acc
    return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)


def _smoothstep_coefficients(gamma):
    c = np.zeros(10)
    c[0] = 1.0
    g1 = gamma - 1.0
    c[5] = 126.0 * g1
    c[6] = -420.0 * g1
    c[7] = 540.0 * g1
    c[8] = -315.0 * g1
    c[9] = 70.0 * g1
    return c


@dataclass(frozen=True)
class RhoAnsatz:
    """A scaling function rho(s) with four analytic derivatives.

    kind is one of 'smoothstep9', 'extended_poly', 'cosine3'.  Polynomial
    kinds store ascending monomial coefficients; the cosine kind stores
    the fixed amplitude triple.
    """

    kind: str
    gamma: float
    coefficients: np.ndarray
    free_params: Tuple[float, ...] = ()
    _derivs: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))
        if self.kind in ("smoothstep9", "extended_poly"):
            tables = [self.coefficients]
            for _ in range(4):
                tables.append(np.polynomial.polynomial.polyder(tables[-1]))
            object.__setattr__(self, "_derivs", tuple(tables))
        elif self.kind != "cosine3":
            raise ValueError("unknown ansatz kind %r" % (self.kind,))

    @property
    def order(self):
        if self.kind == "cosine3":
            return None
        return len(self.coefficients) - 1

    def evaluate(self, s):
        """Return (rho, rho', rho'', rho''', rho'''') with respect to s."""
        if self.kind == "cosine3":
            return _cosine3_evaluate(self.gamma, s)
        d = self._derivs
        return tuple(_polyval(d[k], s) for k in range(5))


def _cosine3_evaluate(gamma, s):
    s = s if isinstance(s, float) else np.asarray(s, dtype=float)
    scale = (gamma - 1.0) / 256.0
    rho = (1.0 + gamma) / 2.0 + 0.0 * (s if not isinstance(s, float) else 0.0)
    d1 = d2 = d3 = d4 = 0.0 * (s if not isinstance(s, float) else 0.0)
    for n, amp in enumerate(COSINE3_AMPLITUDES, start=1):
        k = (2 * n - 1) * math.pi
        phase = k * s
        c = np.cos(phase)
        sn = np.sin(phase)
        rho = rho + scale * amp * c
        d1 = d1 - scale * amp * k * sn
        d2 = d2 - scale * amp * k**2 * c
        d3 = d3 + scale * amp * k**3 * sn
        d4 = d4 + scale * amp * k**4 * c
    return rho, d1, d2, d3, d4


def make_smoothstep_ansatz(gamma):
    """The minimal ninth-order polynomial meeting all ten endpoint conditions."""
    return RhoAnsatz(kind="smoothstep9", gamma=gamma,
                     coefficients=_smoothstep_coefficients(gamma))


def smoothstep_rho(gamma, s):
    """Value and four s-derivatives of the ninth-order scaling polynomial."""
    return make_smoothstep_ansatz(gamma).evaluate(s)


def make_cosine_ansatz(gamma):
    return RhoAnsatz(kind="cosine3", gamma=gamma,
                     coefficients=np.array(COSINE3_AMPLITUDES))


def cosine_ansatz(gamma, s):
    """Value and four s-derivatives of the three-cosine scaling ansatz."""
    return _cosine3_evaluate(gamma, s)


def _falling_factorial(n, k):
    out = 1.0
    for j in range(k):
        out *= n - j
    return out


def build_extended_ansatz(gamma, order, free_params):
    """Polynomial scaling function with adjustable top coefficients.

    The top order-9 monomial coefficients are taken verbatim from
    free_params (a_10, a_11[, a_12, a_13]); the ten lowest are then the
    unique solution of the endpoint conditions rho(0)=1, rho(1)=gamma,
    and vanishing first-through-fourth derivatives at both ends.
    """
    order = int(order)
    if order not in (11, 13):
        raise ValueError("extended ansatz supports order 11 or 13, got %d" % order)
    free = tuple(float(x) for x in free_params)
    if len(free) != order - 9:
        raise ValueError(
            "order %d needs %d free parameters, got %d" % (order, order - 9, len(free))
        )

    a = np.zeros((10, 10))
    b = np.zeros(10)
    # conditions at s=0: k! a_k = [1, 0, 0, 0, 0]
    for k in range(5):
        a[k, k] = math.factorial(k)
    b[0] = 1.0
    # conditions at s=1: sum_n n(n-1)...(n-k+1) a_n = gamma delta_k0,
    # moving the known top-coefficient contributions to the right side
    for k in range(5):
        for n in range(10):
            a[5 + k, n] = _falling_factorial(n, k)
        rhs = gamma if k == 0 else 0.0
        for m, val in enumerate(free):
            rhs -= _falling_factorial(10 + m, k) * val
        b[5 + k] = rhs
    try:
        low = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cannot happen
        raise RuntimeError("endpoint-condition system is singular") from exc

    coeffs = np.concatenate([low, np.array(free)])
    return RhoAnsatz(kind="extended_poly", gamma=gamma, coefficients=coeffs,
                     free_params=free)


@dataclass(frozen=True)
class ProtocolCurve:
    """A trap-frequency ramp w1(t) with two analytic time derivatives.

    `scaled` evaluates (w, dw/dtau, d2w/dtau2) at s = t/tf with
    w = w1/w0 and tau = w0 t; the SI accessors wrap it.  Instances are
    immutable and safe to share between threads.
    """

    boundary: BoundarySpec
    kind: str                       # designed | linear | cosine | reversed
    ansatz: Optional[RhoAnsatz] = None
    a_ref: Optional[float] = None
    _scaled_eval: callable = field(default=None, repr=False, compare=False)

    def scaled(self, s):
        return self._scaled_eval(s)

    def omega1(self, t):
        t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        w, _, _ = self._scaled_eval(np.divide(t, self.boundary.tf))
        return self.boundary.omega0 * w

    def domega1(self, t):
        _, dw, _ = self._scaled_eval(np.divide(t, self.boundary.tf))
        return self.boundary.omega0**2 * dw

    def ddomega1(self, t):
        _, _, ddw = self._scaled_eval(np.divide(t, self.boundary.tf))
        return self.boundary.omega0**3 * ddw

    def spring_constant(self, chain, t):
        return chain.species[0].mass * self.omega1(t) ** 2

    def length_scale(self, chain, t):
        """Equilibrium length scale l(t) [m] of the chain under this ramp."""
        m1 = chain.species[0].mass
        return (chain.coulomb_coeff / m1) ** (1.0 / 3.0) * self.omega1(t) ** (-2.0 / 3.0)

    @property
    def free_params(self):
        if self.ansatz is not None:
            return self.ansatz.free_params
        return ()

    def reversed(self):
        """The same spring-constant history run backwards (compression)."""
        old = self
        bnd = old.boundary
        new_bnd = BoundarySpec(omega0=bnd.omegaf, gamma=1.0 / bnd.gamma, tf=bnd.tf)
        k = bnd.omega0 / bnd.omegaf  # = gamma^2

        def eval_reversed(s):
            w, dw, ddw = old._scaled_eval(1.0 - np.asarray(s, dtype=float) if np.ndim(s) else 1.0 - s)
            return k * w, -(k**2) * dw, (k**3) * ddw

        return ProtocolCurve(boundary=new_bnd, kind="reversed",
                             ansatz=old.ansatz, a_ref=old.a_ref,
                             _scaled_eval=eval_reversed)


def omega_from_rho(ansatz, boundary, a_ref):
    """Invert the design mode's Ermakov equation for the trap frequency.

    Raises InvalidProtocolError if the squared frequency is nonpositive
    anywhere on the probe grid (tf too short for this scaling function:
    the trap would have to invert transiently, which is rejected).
    """
    if abs(ansatz.gamma - boundary.gamma) > 1e-12 * boundary.gamma:
        raise ValueError("ansatz gamma %.12g does not match boundary gamma %.12g"
                         % (ansatz.gamma, boundary.gamma))
    a2 = float(a_ref) ** 2
    tau_f2 = boundary.tau_f**2

    def radicand(s):
        rho, _, d2, _, _ = ansatz.evaluate(s)
        return rho**-4 - d2 / (a2 * rho * tau_f2)

    grid = np.linspace(0.0, 1.0, _RADICAND_PROBE_POINTS)
    vals = radicand(grid)
    bad = np.nonzero(vals <= 0.0)[0]
    if bad.size:
        s_bad = grid[bad[0]]
        t_bad = s_bad * boundary.tf
        raise InvalidProtocolError(
            "trap frequency squared becomes nonpositive at t=%.6e s "
            "(s=%.4f) for tf=%.6e s; the ramp is too fast for this ansatz"
            % (t_bad, s_bad, boundary.tf),
            t_violation=t_bad,
        )

    def eval_scaled(s):
        rho, d1, d2, d3, d4 = ansatz.evaluate(s)
        f = rho**-4 - d2 / (a2 * rho * tau_f2)
        fp = -4.0 * d1 * rho**-5 - (d3 * rho - d2 * d1) / (a2 * rho**2 * tau_f2)
        fpp = ((20.0 * d1**2 - 4.0 * rho * d2) * rho**-6
               - (d4 * rho**2 - 2.0 * d3 * d1 * rho - d2**2 * rho + 2.0 * d2 * d1**2)
               / (a2 * rho**3 * tau_f2))
        w = np.sqrt(f)
        tau_f = boundary.tau_f
        dw = fp / (2.0 * w * tau_f)
        ddw = (fpp / (2.0 * w) - fp**2 / (4.0 * f * w)) / tau_f**2
        return w, dw, ddw

    return ProtocolCurve(boundary=boundary, kind="designed", ansatz=ansatz,
                         a_ref=float(a_ref), _scaled_eval=eval_scaled)


def linear_protocol(boundary):
    """Straight-line sweep of w1; endpoint slopes are deliberately nonzero."""
    wf = boundary.omegaf / boundary.omega0
    tau_f = boundary.tau_f

    def eval_scaled(s):
        s = np.asarray(s, dtype=float) if np.ndim(s) else s
        w = 1.0 + (wf - 1.0) * s
        dw = (wf - 1.0) / tau_f * np.ones_like(w) if np.ndim(w) else (wf - 1.0) / tau_f
        ddw = np.zeros_like(w) if np.ndim(w) else 0.0
        return w, dw, ddw

    return ProtocolCurve(boundary=boundary, kind="linear", _scaled_eval=eval_scaled)


def cosine_protocol(boundary):
    """Half-cosine sweep of w1; endpoint slopes vanish but curvatures do not."""
    wf = boundary.omegaf / boundary.omega0
    mid = (1.0 + wf) / 2.0
    amp = (1.0 - wf) / 2.0
    tau_f = boundary.tau_f

    def eval_scaled(s):
        phase = math.pi * (np.asarray(s, dtype=float) if np.ndim(s) else s)
        w = mid + amp * np.cos(phase)
        dw = -amp * math.pi * np.sin(phase) / tau_f
        ddw = -amp * math.pi**2 * np.cos(phase) / tau_f**2
        return w, dw, ddw

    return ProtocolCurve(boundary=boundary, kind="cosine", _scaled_eval=eval_scaled)


@dataclass(frozen=True)
class MomentumShift:
    """Mass-weighted momentum shift of one mode under a ramp.

    p0 tracks the velocity of the moving equilibrium projected on the
    mode, p0 = W * dl/dt with W = sum_i a_i sqrt(m_i) u_i; it vanishes at
    the ramp endpoints whenever the frequency slope does.
    """

    mode: int
    weight: float            # W [sqrt(kg)]
    weight_scaled: float     # W / sqrt(m_1) in units of the length scale
    protocol: ProtocolCurve
    _l_coeff: float          # (C_c/m_1)^(1/3)

    def p0(self, t):
        w1 = self.protocol.omega1(t)
        dw1 = self.protocol.domega1(t)
        ldot = -(2.0 / 3.0) * self._l_coeff * w1 ** (-5.0 / 3.0) * dw1
        return self.weight * ldot

    def p0dot(self, t):
        w1 = self.protocol.omega1(t)
        dw1 = self.protocol.domega1(t)
        ddw1 = self.protocol.ddomega1(t)
        lddot = -(2.0 / 3.0) * self._l_coeff * (
            ddw1 * w1 ** (-5.0 / 3.0) - (5.0 / 3.0) * dw1**2 * w1 ** (-8.0 / 3.0)
        )
        return self.weight * lddot


def shift_weights_scaled(chain, basis):
    """Per-mode drive weights W_nu/sqrt(m_1), used by the scaled pipeline."""
    from .chain_model import solve_equilibrium_u

    u = solve_equilibrium_u(chain.n)
    root_m = np.sqrt(chain.masses / chain.species[0].mass)
    return basis.vectors @ (root_m * u)


def momentum_shifts(chain, basis, protocol):
    """One MomentumShift per mode, ordered like the basis."""
    from .chain_model import solve_equilibrium_u

    u = solve_equilibrium_u(chain.n)
    root_m = np.sqrt(chain.masses)
    weights = basis.vectors @ (root_m * u)
    m1 = chain.species[0].mass
    l_coeff = (chain.coulomb_coeff / m1) ** (1.0 / 3.0)
    scaled = weights / math.sqrt(m1)
    return [
        MomentumShift(mode=i, weight=float(weights[i]),
                      weight_scaled=float(scaled[i]),
                      protocol=protocol, _l_coeff=l_coeff)
        for i in range(basis.n)
    ]


def export_protocol_csv(protocol, path, samples=1000, metadata=None):
    """Write the ramp to CSV: t[s], omega1[rad/s], domega1, ddomega1.

    The header carries provenance in '#' comment lines.  Output is
    byte-deterministic for identical inputs: fixed formatting, no
    timestamps.
    """
    bnd = protocol.boundary
    lines = []
    lines.append("# ionramp %s protocol export" % _version)
    lines.append("# kind: %s" % protocol.kind)
    if protocol.ansatz is not None:
        lines.append("# ansatz: %s order=%s" % (protocol.ansatz.kind, protocol.ansatz.order))
    if protocol.a_ref is not None:
        lines.append("# a_ref: %.12g" % protocol.a_ref)
    if protocol.free_params:
        lines.append("# free_params: %s" % ",".join("%.12e" % x for x in protocol.free_params))
    lines.append("# omega0_rad_s: %.12e" % bnd.omega0)
    lines.append("# gamma: %.12e" % bnd.gamma)
    lines.append("# tf_s: %.12e" % bnd.tf)
    if metadata:
        for key in sorted(metadata):
            lines.append("# %s: %s" % (key, metadata[key]))
    lines.append("t,omega1,domega1,ddomega1")
    ts = np.linspace(0.0, bnd.tf, int(samples))
    for t in ts:
        s = t / bnd.tf
        w, dw, ddw = protocol.scaled(float(s))
        lines.append("%.12e,%.12e,%.12e,%.12e"
                     % (t, bnd.omega0 * w, bnd.omega0**2 * dw, bnd.omega0**3 * ddw))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
