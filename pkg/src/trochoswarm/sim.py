"""
Dynamic checks: the consensus protocol integrated numerically, unicycle
tracking of the closed-form paths, and perturbed-start experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .design import AgentTrochoid, SwarmDesign, build_line_laplacian, recompute_from_positions, trochoid_coefficients
from .errors import HeadingUndefined, NonFiniteState
from .trajectory import (
    extremal_origin_distances,
    pairwise_extremal_distances,
    sampled_extrema,
    speed_profile,
)

SKEW = np.array([[0.0, -1.0], [1.0, 0.0]])
INTEGRATORS = ("rk4", "euler")


def rk4_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def euler_step(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    return y + h * f(t, y)


_STEPPERS = {"rk4": rk4_step, "euler": euler_step}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 1.0
    K_P: float = 4.0
    K_I: float = 0.5
    V_max: Optional[float] = None
    omega_max: Optional[float] = None
    integrator: str = "rk4"
    scale: float = 1.0
    controller: str = "pi_ff"  # or "p"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.V_max is not None and not self.V_max > 0:
            raise ValueError("V_max must be positive when given")
        if self.omega_max is not None and self.omega_max < 0:
            raise ValueError("omega_max must be non-negative when given")
        if self.controller not in ("pi_ff", "p"):
            raise ValueError("controller must be 'pi_ff' or 'p'")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


# --------------------------------------------------------------- consensus


def cp_matrix(beta, scale: float = 1.0) -> np.ndarray:
    """(B L) kron S acting on the stacked state (x1, y1, x2, y2, x3, y3)."""
    B = np.diag([scale * float(b) for b in beta])
    return np.kron(B @ build_line_laplacian(), SKEW)


@dataclass(frozen=True)
class CPRun:
    t: np.ndarray
    positions: np.ndarray  # (n, 3, 2)


def integrate_cp(beta, x0, config: SimConfig) -> CPRun:
    x0 = np.asarray(x0, dtype=float).reshape(3, 2)
    A = cp_matrix(beta, config.scale)
    step = _STEPPERS[config.integrator]
    n = config.n_steps
    h = config.duration / n if n else config.dt
    out = np.empty((n + 1, 6))
    out[0] = x0.ravel()
    y = out[0]

    def f(_t, s):
        return A @ s

    for m in range(n):
        y = step(f, m * h, y, h)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"state became non-finite at step {m + 1}")
        out[m + 1] = y
    return CPRun(np.arange(n + 1) * h, out.reshape(-1, 3, 2))


def cp_control_outputs(beta, x, previous_heading=None, tol: float = 1e-12):
    """Per-agent speed and reference heading from the consensus input.

    When an agent's input vanishes its heading is taken from
    ``previous_heading``; without one, HeadingUndefined is raised.
    """
    x = np.asarray(x, dtype=float).reshape(3, 2)
    u = (cp_matrix(beta) @ x.ravel()).reshape(3, 2)
    V = np.hypot(u[:, 0], u[:, 1])
    gamma = np.arctan2(u[:, 1], u[:, 0])
    scale = max(1.0, float(np.abs(x).max())) * max(abs(float(b)) for b in beta)
    still = V <= tol * scale
    if np.any(still):
        if previous_heading is None:
            raise HeadingUndefined(f"zero consensus input for agents {np.flatnonzero(still) + 1}")
        gamma = np.where(still, np.asarray(previous_heading, dtype=float), gamma)
    return V, gamma


# ---------------------------------------------------------------- unicycle


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


@dataclass
class UnicycleState:
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    integral: np.ndarray


@dataclass
class TrackingReport:
    t: np.ndarray
    states: np.ndarray  # (n, agents, 4): x, y, gamma, integral
    reference: np.ndarray  # (n, agents, 2)
    error: np.ndarray  # (n, agents)
    rms_error: np.ndarray
    max_error: np.ndarray
    peak_V: np.ndarray
    peak_omega: np.ndarray
    flags: list = field(default_factory=list)


def _reference_rates(tr: AgentTrochoid, t):
    """Speed, heading and heading rate of the reference at time t."""
    v = tr.complex_velocity(t)
    theta = abs(tr.lambda_min) * np.asarray(t, dtype=float)
    _, w = speed_profile(tr, theta, physical=True, on_cusp="nan")
    return np.abs(v), np.angle(v), np.nan_to_num(np.asarray(w, dtype=float))


def unicycle_track(references: Sequence[AgentTrochoid], config: SimConfig) -> TrackingReport:
    """Track each reference with a unicycle, starting on the path with matched heading.

    Speed is fed forward from the reference.  Turn rate is either
    K_P e + K_I int(e) + d(gamma_ref)/dt (``pi_ff``) or K_P e (``p``),
    with e the heading error wrapped to (-pi, pi].
    """
    refs = [tr.scaled_in_time(config.scale) if config.scale != 1 else tr for tr in references]
    n = config.n_steps
    h = config.duration / n if n else config.dt
    flags = []
    if config.omega_max == 0:
        flags.append("steering disabled: omega_max = 0")
    V_cap = config.V_max if config.V_max is not None else math.inf
    W_cap = config.omega_max if config.omega_max is not None else math.inf
    n_ag = len(refs)

    def controls(t, s):
        V_ref = np.empty(n_ag)
        g_ref = np.empty(n_ag)
        w_ff = np.empty(n_ag)
        for a, tr in enumerate(refs):
            V_ref[a], g_ref[a], w_ff[a] = (float(np.asarray(q)) for q in _reference_rates(tr, t))
        e = wrap_angle(g_ref - s[:, 2])
        if config.controller == "pi_ff":
            w_cmd = config.K_P * e + config.K_I * s[:, 3] + w_ff
        else:
            w_cmd = config.K_P * e
        w = np.clip(w_cmd, -W_cap, W_cap)
        V = np.minimum(V_ref, V_cap)
        saturated = w != w_cmd
        return V, w, np.where(saturated, 0.0, e)

    def f(t, flat):
        s = flat.reshape(n_ag, 4)
        V, w, de = controls(t, s)
        ds = np.column_stack([V * np.cos(s[:, 2]), V * np.sin(s[:, 2]), w, de])
        return ds.ravel()

    state = np.zeros((n_ag, 4))
    for a, tr in enumerate(refs):
        p = tr.complex_position(0.0)
        state[a] = [p.real, p.imag, float(np.angle(tr.complex_velocity(0.0))), 0.0]

    step = _STEPPERS[config.integrator]
    hist = np.empty((n + 1, n_ag, 4))
    hist[0] = state
    y = state.ravel()
    peak_V = np.zeros(n_ag)
    peak_W = np.zeros(n_ag)
    for m in range(n + 1):
        V, w, _ = controls(m * h, hist[m])
        peak_V = np.maximum(peak_V, V)
        peak_W = np.maximum(peak_W, np.abs(w))
        if m == n:
            break
        y = step(f, m * h, y, h)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"unicycle state non-finite at step {m + 1}")
        hist[m + 1] = y.reshape(n_ag, 4)
    hist[..., 2] = wrap_angle(hist[..., 2])
    t = np.arange(n + 1) * h
    ref = np.stack([tr.position(t) for tr in refs], axis=1)
    err = np.linalg.norm(hist[..., :2] - ref, axis=-1)
    rms = np.sqrt(np.mean(err**2, axis=0))
    return TrackingReport(t, hist, ref, err, rms, err.max(axis=0), peak_V, peak_W, flags)


# ------------------------------------------------------------ perturbation


@dataclass
class PerturbationReport:
    eps: np.ndarray
    psi: np.ndarray
    positions: np.ndarray
    modal: object
    trochoids: tuple
    origin_sampled: list  # per agent (min, max)
    origin_base: list  # per agent (min, max) of the unperturbed design
    pair_sampled: dict  # (i, j) -> (min, max)
    pair_formula: dict  # (i, j) -> (min, max) at (R_cp, d_cp)
    violations: list
    shift_exceeded: list

    @property
    def ok(self) -> bool:
        return not self.violations


def perturb_and_assess(
    design: SwarmDesign,
    eps=None,
    psi=None,
    seed: Optional[int] = None,
    max_eps: float = 1.0,
    n_samples: int = 4096,
    tol: float = 1e-6,
) -> PerturbationReport:
    """Displace each agent's start by eps_i at angle psi_i and re-check every distance bound.

    Missing eps / psi are drawn from ``np.random.default_rng(seed)``:
    eps uniform on [0, max_eps], psi uniform on [0, 2 pi).
    """
    rng = np.random.default_rng(seed)
    eps = rng.uniform(0.0, max_eps, 3) if eps is None else np.broadcast_to(np.asarray(eps, float), (3,))
    psi = rng.uniform(0.0, 2 * math.pi, 3) if psi is None else np.broadcast_to(np.asarray(psi, float), (3,))
    base = design.positions
    pos = base + np.column_stack([eps * np.cos(psi), eps * np.sin(psi)])
    modal = recompute_from_positions(design.eig, pos)
    trs = trochoid_coefficients(
        design.eig, modal.R_c, modal.d_c, modal.phi_r, modal.phi_d, modal.c_0, modal.phi_0
    )
    spec = design.spec
    period = design.period
    violations, shift = [], []
    origin, origin_base = [], []
    for tr, tr0 in zip(trs, design.trochoids):
        lo, hi = sampled_extrema(lambda t, tr=tr: np.abs(tr.complex_position(t)), period, n_samples)
        b_lo, b_hi, _, _ = extremal_origin_distances(tr0)
        origin.append((lo, hi))
        origin_base.append((b_lo, b_hi))
        if lo < spec.d0_min - tol:
            violations.append((f"origin-min {tr.agent_id}", lo))
        if hi > spec.d0_max + tol:
            violations.append((f"origin-max {tr.agent_id}", hi))
        bound = float(eps.max())
        if abs(lo - b_lo) > bound + tol or abs(hi - b_hi) > bound + tol:
            shift.append((tr.agent_id, lo - b_lo, hi - b_hi))
    pair_s, pair_f = {}, {}
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = trs[i], trs[j]
            lo, hi = sampled_extrema(
                lambda t, a=a, b=b: np.abs(a.complex_position(t) - b.complex_position(t)),
                period,
                n_samples,
            )
            key = (i + 1, j + 1)
            pair_s[key] = (lo, hi)
            pair_f[key] = pairwise_extremal_distances(a, b)
            if lo < spec.d_CT - tol:
                violations.append((f"pair-min {i + 1}-{j + 1}", lo))
            if hi > spec.d_CR + tol:
                violations.append((f"pair-max {i + 1}-{j + 1}", hi))
    return PerturbationReport(
        np.array(eps), np.array(psi), pos, modal, trs, origin, origin_base, pair_s, pair_f, violations, shift
    )


@dataclass
class MonteCarloSummary:
    n_runs: int
    n_violating: int
    violations: list
    max_pair_formula_gap: float
    n_shift_exceeded: int


def perturbation_study(design: SwarmDesign, delta: float, n_runs: int, seed: int, n_samples: int = 2048):
    """Seeded Monte Carlo of perturbations with |eps_i| <= delta.

    Each run draws from its own child of ``np.random.SeedSequence(seed)``,
    so results do not depend on execution order.
    """
    children = np.random.SeedSequence(seed).spawn(n_runs)
    bad, gap, shifted = [], 0.0, 0
    for run, child in enumerate(children):
        rep = perturb_and_assess(design, seed=child, max_eps=delta, n_samples=n_samples)
        if rep.violations:
            bad.append((run, rep.violations))
        if rep.shift_exceeded:
            shifted += 1
        for key, (lo, hi) in rep.pair_sampled.items():
            f_lo, f_hi = rep.pair_formula[key]
            gap = max(gap, abs(lo - f_lo), abs(hi - f_hi))
    return MonteCarloSummary(n_runs, len(bad), bad, gap, shifted)


@dataclass(frozen=True)
class PerturbationGains:
    """Upper bounds on how far a distance can move per unit of start displacement."""

    origin: tuple[float, float, float]
    pair: dict  # (i, j) -> gain

    @property
    def worst(self) -> float:
        return max(max(self.origin), max(self.pair.values()))


def perturbation_gains(eig) -> PerturbationGains:
    """Lipschitz constants of the distance extrema with respect to max_i |eps_i|.

    A displacement splits into the two rotating modes and a CoR shift; each
    modal amplitude moves by at most ||Gamma||_1 * eps and the CoR by
    ||w||_1 / |sum w| * eps with w_i = 1 / beta_i.
    """
    gR = float(np.abs(eig.gamma_R).sum())
    gd = float(np.abs(eig.gamma_d).sum())
    w = np.array([1.0 / float(b) for b in eig.beta])
    g0 = float(np.abs(w).sum() / abs(w.sum()))
    ar, ad = eig.alpha_r, eig.alpha_d
    origin = tuple(float(abs(ar[i]) * gR + abs(ad[i]) * gd + g0) for i in range(3))
    pair = {
        (i + 1, j + 1): float(abs(ar[i] - ar[j]) * gR + abs(ad[i] - ad[j]) * gd)
        for i in range(3)
        for j in range(i + 1, 3)
    }
    return PerturbationGains(origin, pair)
