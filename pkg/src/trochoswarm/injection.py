"""
Injecting extra agents on epitrochoidal paths at phase offsets pi/2, pi, 3pi/2.

An agent injected on path i at offset phi sits where agent i will be after
the path parameter advances by phi.  It must stay at least d_CT away from
the base agent of every other path j.  Closed-form minima of the squared
separation exist for these three offsets; ``brute_force_min_separation``
is the numerical check used for everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .design import EPITROCHOID, AgentTrochoid, Eigenstructure
from .errors import SignDegenerate, UnsupportedType
from .region import PAIRS, Disjunction, abs_at_least

OFFSETS = (0.5 * math.pi, math.pi, 1.5 * math.pi)
OFFSET_LABELS = {0.5 * math.pi: "pi/2", math.pi: "pi", 1.5 * math.pi: "3pi/2"}


def _require_epi(*trochoids: AgentTrochoid):
    for tr in trochoids:
        if tr.trochoid_type != EPITROCHOID:
            raise UnsupportedType("injection analysis is only defined for epitrochoids")


def injected_position(tr: AgentTrochoid, phi: float, theta) -> np.ndarray:
    """Position of an agent injected on ``tr`` at offset ``phi``, at path parameter theta.

    Uses x = (k+1) r cos(theta+phi) - d cos((k+1)(theta+phi)) (and the sine
    counterpart) with r = c_r/(k+1) and d = -c_d, so the signs of the
    modal coefficients carry over.
    """
    _require_epi(tr)
    k1 = tr.k + 1
    r, d = tr.c_r / k1, -tr.c_d
    s = np.asarray(theta, dtype=float) + phi
    x = k1 * r * np.cos(s + tr.phi_r) - d * np.cos(k1 * s + tr.phi_d)
    y = k1 * r * np.sin(s + tr.phi_r) - d * np.sin(k1 * s + tr.phi_d)
    c = tr.cor
    return np.stack([x + c.real, y + c.imag], axis=-1)


def min_separation_phase_quadrature(tr_i: AgentTrochoid, tr_j: AgentTrochoid, d_CT: float) -> float:
    """Minimum over theta of d_mij^2 - d_CT^2 for phi = pi/2 (and 3pi/2).

    k even: ((k+1) sqrt(r_i^2 + r_j^2) - sqrt(d_i^2 + d_j^2))^2 - d_CT^2.
    k odd:  ((k+1) sqrt(r_i^2 + r_j^2) - |D|)^2 - d_CT^2 with D = d_i + d_j
    when (k+1)/2 is odd and D = d_j - d_i when it is even (signed d).
    """
    _require_epi(tr_i, tr_j)
    k = tr_i.k
    k1 = k + 1
    ri, rj = tr_i.c_r / k1, tr_j.c_r / k1
    di, dj = -tr_i.c_d, -tr_j.c_d
    A = k1 * math.hypot(ri, rj)
    if k % 2 == 0:
        B = math.hypot(di, dj)
    else:
        B = abs(di + dj) if (k1 // 2) % 2 == 1 else abs(dj - di)
    return (A - B) ** 2 - d_CT**2


def min_separation_phase_pi(
    tr_i: AgentTrochoid,
    tr_j: AgentTrochoid,
    d_CT: float,
    alpha: Optional[Sequence[float]] = None,
    tol: float = 1e-12,
) -> float:
    """Minimum of d_mij^2 - d_CT^2 for phi = pi, picked from the four sign cases.

    Here r = c_r/(k+1) and d = c_d keep the signs of their alpha
    coefficients.  The branch is chosen by the sign of
    (a_ir + a_jr)(a_id + a_jd) for even k, (a_ir + a_jr)(a_jd - a_id) for odd k.
    """
    _require_epi(tr_i, tr_j)
    k = tr_i.k
    k1 = k + 1
    ri, rj = tr_i.c_r / k1, tr_j.c_r / k1
    di, dj = tr_i.c_d, tr_j.c_d
    if alpha is not None:
        a = np.asarray(alpha, dtype=float)
        i, j = tr_i.agent_id - 1, tr_j.agent_id - 1
        air, aid, ajr, ajd = a[2 * i], a[2 * i + 1], a[2 * j], a[2 * j + 1]
    else:
        air, aid, ajr, ajd = tr_i.c_r, tr_i.c_d, tr_j.c_r, tr_j.c_d
    if k % 2 == 0:
        product = (air + ajr) * (aid + ajd)
        D = di + dj
    else:
        product = (air + ajr) * (ajd - aid)
        D = dj - di
    scale = max(abs(air), abs(ajr), abs(aid), abs(ajd)) ** 2
    if abs(product) <= tol * scale:
        raise SignDegenerate(
            f"sign product for agents {tr_i.agent_id},{tr_j.agent_id} is zero; use the numerical check"
        )
    R = k1 * (ri + rj)
    if product > 0:
        return (R - D) ** 2 - d_CT**2
    return (R + D) ** 2 - d_CT**2


@lru_cache(maxsize=32)
def _grid_positions(tr: AgentTrochoid, n: int) -> np.ndarray:
    theta = np.arange(n) * (2 * math.pi / n)
    return tr.complex_position(theta / abs(tr.lambda_min))


def brute_force_min_separation(
    tr_i: AgentTrochoid,
    tr_j: AgentTrochoid,
    phi: float,
    d_CT: float,
    grid_n: int = 1_000_000,
) -> float:
    """Numerical min over theta of |z_i(theta + phi) - z_j(theta)|^2 - d_CT^2.

    Evaluates the time-domain closed form on a uniform grid over one period,
    then polishes the best grid point with a bounded Brent search.
    """
    if grid_n < 1000:
        raise ValueError("grid_n must be at least 1000")
    lam = abs(tr_i.lambda_min)
    h = 2 * math.pi / grid_n
    shift = phi / h
    zj = _grid_positions(tr_j, grid_n)
    if abs(shift - round(shift)) < 1e-9:
        zi = np.roll(_grid_positions(tr_i, grid_n), -int(round(shift)))
    else:
        theta = np.arange(grid_n) * h
        zi = tr_i.complex_position((theta + phi) / lam)
    sq = np.abs(zi - zj) ** 2
    idx = int(np.argmin(sq))
    theta0 = idx * h

    def f(th):
        dz = tr_i.complex_position((th + phi) / lam) - tr_j.complex_position(th / lam)
        return float(abs(dz) ** 2)

    res = minimize_scalar(
        f, bounds=(theta0 - h, theta0 + h), method="bounded", options={"xatol": 1e-13}
    )
    return min(float(res.fun), float(sq[idx])) - d_CT**2


def closed_form_min_separation(tr_i, tr_j, phi: float, d_CT: float, alpha=None) -> float:
    """Dispatch on phi; falls back to the grid search where no closed form applies."""
    if math.isclose(phi % (2 * math.pi), 0.5 * math.pi) or math.isclose(
        phi % (2 * math.pi), 1.5 * math.pi
    ):
        return min_separation_phase_quadrature(tr_i, tr_j, d_CT)
    if math.isclose(phi % (2 * math.pi), math.pi):
        try:
            return min_separation_phase_pi(tr_i, tr_j, d_CT, alpha)
        except SignDegenerate:
            return brute_force_min_separation(tr_i, tr_j, phi, d_CT)
    return brute_force_min_separation(tr_i, tr_j, phi, d_CT)


def same_path_min_distance(tr: AgentTrochoid, phi_a: float, phi_b: float, n: int = 20000) -> float:
    """Minimum distance between two agents on one path separated by a phase offset."""
    lam = abs(tr.lambda_min)
    theta = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    dz = tr.complex_position((theta + phi_a) / lam) - tr.complex_position((theta + phi_b) / lam)
    dist = np.abs(dz)
    idx = int(np.argmin(dist))
    h = 2 * math.pi / n

    def f(th):
        return float(
            abs(tr.complex_position((th + phi_a) / lam) - tr.complex_position((th + phi_b) / lam))
        )

    res = minimize_scalar(f, bounds=(theta[idx] - h, theta[idx] + h), method="bounded")
    return min(float(res.fun), float(dist[idx]))


def refresh_period(period: float, offsets: Sequence[float]) -> float:
    """Largest gap between consecutive agents on a closed path, in time units."""
    pts = sorted({0.0, *[o % (2 * math.pi) for o in offsets]})
    gaps = np.diff(pts + [2 * math.pi])
    return float(gaps.max() / (2 * math.pi) * period)


@dataclass
class InjectionPlan:
    offsets: dict  # path id -> tuple of feasible offsets (radians)
    delta_sq: dict  # (i, j, label) -> min d^2 - d_CT^2
    agent_count: int
    refresh_periods: dict  # path id -> time
    period: float
    same_path_min: dict = field(default_factory=dict)  # path id -> min distance among its agents
    d_CT: float = 0.0

    @property
    def same_path_safe(self) -> bool:
        return all(v >= self.d_CT for v in self.same_path_min.values())


def injection_feasible(trochoids: Sequence[AgentTrochoid], d_CT: float, alpha=None) -> InjectionPlan:
    """Evaluate the 18 added constraints and collect the feasible offsets per path."""
    _require_epi(*trochoids)
    table = {}
    for tr_i in trochoids:
        for tr_j in trochoids:
            if tr_i is tr_j:
                continue
            for phi in OFFSETS:
                value = closed_form_min_separation(tr_i, tr_j, phi, d_CT, alpha)
                table[(tr_i.agent_id, tr_j.agent_id, OFFSET_LABELS[phi])] = value
    offsets, refresh, same = {}, {}, {}
    period = trochoids[0].period
    for tr_i in trochoids:
        ok = tuple(
            phi
            for phi in OFFSETS
            if all(
                table[(tr_i.agent_id, tr_j.agent_id, OFFSET_LABELS[phi])] >= 0
                for tr_j in trochoids
                if tr_j is not tr_i
            )
        )
        offsets[tr_i.agent_id] = ok
        refresh[tr_i.agent_id] = refresh_period(period, ok)
        phases = (0.0,) + ok
        dists = [
            same_path_min_distance(tr_i, a, b)
            for n, a in enumerate(phases)
            for b in phases[n + 1 :]
        ]
        same[tr_i.agent_id] = min(dists) if dists else math.inf
    count = len(trochoids) + sum(len(v) for v in offsets.values())
    return InjectionPlan(offsets, table, count, refresh, period, same, d_CT)


def injected_start_points(trochoids: Sequence[AgentTrochoid], plan: Optional[InjectionPlan] = None):
    """Start points (theta = 0) of base and injected agents: list of (path, offset, x, y)."""
    out = []
    for tr in trochoids:
        phases = (0.0,) + (plan.offsets[tr.agent_id] if plan else OFFSETS)
        for phi in phases:
            x, y = injected_position(tr, phi, 0.0)
            out.append((tr.agent_id, phi, float(x), float(y)))
    return out


def injection_constraints(eig: Eigenstructure, d_CT: float) -> list[Disjunction]:
    """The injection conditions as |p R_c - q d_c| >= d_CT rows in the (R_c, d_c) plane.

    (k+1) r_i = |alpha_ir| R_c and d_i = |alpha_id| d_c, so every closed form
    above is linear in (R_c, d_c) inside the absolute value.
    """
    if eig.trochoid_type != EPITROCHOID:
        raise UnsupportedType("injection analysis is only defined for epitrochoids")
    ar, ad = eig.alpha_r, eig.alpha_d
    k = eig.k
    out = []
    for i, j in PAIRS:
        tag = f"{i + 1}-{j + 1}"
        p = math.hypot(ar[i], ar[j])
        if k % 2 == 0:
            q = math.hypot(ad[i], ad[j])
        else:
            q = abs(ad[i] + ad[j]) if ((k + 1) // 2) % 2 == 1 else abs(ad[i] - ad[j])
        out.append(abs_at_least(p, q, d_CT, f"inject pi/2 {tag}"))
        p = abs(ar[i] + ar[j])
        q = abs(ad[i] + ad[j]) if k % 2 == 0 else abs(ad[i] - ad[j])
        out.append(abs_at_least(p, q, d_CT, f"inject pi {tag}"))
    return out
