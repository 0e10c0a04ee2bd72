"""
Closed-form trajectory evaluation and path diagnostics.

The path parameter is ``theta = |lambda_min| t``.  In terms of theta each
agent's path is a sum of two rotating vectors with integer frequencies
``m1 = sign(lambda_min)`` and ``m2 = lambda_max / |lambda_min|`` (k+1 for
epitrochoids, k-1 for hypotrochoids), so speed and turn rate have closed
forms in ``cos(k theta + phi_d - phi_r)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .design import EPITROCHOID, AgentTrochoid
from .errors import CuspSingularity

TWO_PI = 2 * math.pi


def evaluate(trochoids: Sequence[AgentTrochoid], t) -> np.ndarray:
    """Positions with shape t.shape + (n_agents, 2)."""
    return np.stack([tr.position(t) for tr in trochoids], axis=-2)


def _freqs(tr: AgentTrochoid) -> tuple[int, int]:
    m1 = 1 if tr.lambda_min > 0 else -1
    m2 = int(round(tr.lambda_max / abs(tr.lambda_min)))
    return m1, m2


# ------------------------------------------------------------------ extrema


def extremal_origin_distances(tr: AgentTrochoid) -> tuple[float, float, float, float]:
    """(d_min, d_max, t_min, t_max) about the origin for a CoR-centred path.

    |z|^2 = c_r^2 + c_d^2 + 2 c_r c_d cos(dlam t + phi_d - phi_r); the
    extreme values follow from cos = +-1 and the sign of c_r c_d decides
    which of the two is the nearest approach.  Times are the first
    non-negative instants.
    """
    cr, cd = abs(tr.c_r), abs(tr.c_d)
    d_min, d_max = abs(cr - cd), cr + cd
    dlam = tr.lambda_max - tr.lambda_min
    offset = tr.phi_d - tr.phi_r
    aligned = ((-offset) % TWO_PI) / dlam  # cos(...) = +1
    opposed = ((math.pi - offset) % TWO_PI) / dlam  # cos(...) = -1
    if tr.c_r * tr.c_d >= 0:
        t_min, t_max = opposed, aligned
    else:
        t_min, t_max = aligned, opposed
    return d_min, d_max, t_min, t_max


def pairwise_extremal_distances(tr_i: AgentTrochoid, tr_j: AgentTrochoid) -> tuple[float, float]:
    """(d_min, d_max) of |z_i - z_j| over time; the difference is itself a trochoid."""
    p = abs(tr_i.c_r - tr_j.c_r)
    q = abs(tr_i.c_d - tr_j.c_d)
    return abs(p - q), p + q


def sampled_extrema(values_fn, period: float, n: int = 20000) -> tuple[float, float]:
    """Min and max of a smooth periodic scalar function by grid search plus Brent refinement."""
    t = np.linspace(0.0, period, n, endpoint=False)
    v = values_fn(t)
    h = period / n
    out = []
    for sign in (1.0, -1.0):
        idx = int(np.argmin(sign * v))
        res = minimize_scalar(
            lambda s: sign * float(values_fn(np.array([s]))[0]),
            bounds=(t[idx] - h, t[idx] + h),
            method="bounded",
            options={"xatol": 1e-12 * max(1.0, period)},
        )
        out.append(sign * min(res.fun, sign * v[idx]))
    return out[0], out[1]


def sampled_origin_extrema(tr: AgentTrochoid, n: int = 20000) -> tuple[float, float]:
    """Origin-distance extrema for any path, including a shifted CoR."""
    return sampled_extrema(lambda t: np.abs(tr.complex_position(t)), tr.period, n)


# ------------------------------------------------------------- speed, turn


def _rate_terms(tr: AgentTrochoid, theta):
    m1, m2 = _freqs(tr)
    theta = np.asarray(theta, dtype=float)
    cos_rel = np.cos((m2 - m1) * theta + tr.phi_d - tr.phi_r)
    cr, cd = tr.c_r, tr.c_d
    v2 = (m1 * cr) ** 2 + (m2 * cd) ** 2 + 2 * m1 * m2 * cr * cd * cos_rel
    num = m1**3 * cr**2 + m2**3 * cd**2 + cr * cd * m1 * m2 * (m1 + m2) * cos_rel
    scale = (abs(m1 * cr) + abs(m2 * cd)) ** 2
    return np.maximum(v2, 0.0), num, scale


def speed_profile(tr: AgentTrochoid, theta, physical: bool = False, on_cusp: str = "raise"):
    """(V, omega) along the path.

    With ``physical=False`` both are derivatives with respect to theta; for an
    epitrochoid written as (k+1) r e^{i theta} - d e^{i(k+1) theta} this is

        V     = (k+1) sqrt(r^2 + d^2 - 2 r d cos k theta)
        omega = (r^2 + (k+1) d^2 - (k+2) r d cos k theta) / (r^2 + d^2 - 2 r d cos k theta)

    With ``physical=True`` both are multiplied by |lambda_min| (time rates).
    ``on_cusp`` is "raise" (CuspSingularity) or "nan".
    """
    v2, num, scale = _rate_terms(tr, theta)
    V = np.sqrt(v2)
    cusp = v2 <= 1e-18 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(cusp, np.nan, num / np.where(cusp, 1.0, v2))
    if np.any(cusp) and scale > 0:
        if on_cusp == "raise":
            raise CuspSingularity(
                f"agent {tr.agent_id}: speed vanishes (cusp) at theta="
                f"{np.asarray(theta)[cusp] if np.ndim(theta) else theta}"
            )
    if physical:
        rate = abs(tr.lambda_min)
        V, omega = V * rate, omega * rate
    if np.ndim(theta) == 0:
        return float(V), float(omega)
    return V, omega


def heading(tr: AgentTrochoid, t) -> np.ndarray:
    """Direction of travel at time t (radians, four-quadrant)."""
    v = tr.complex_velocity(t)
    return np.angle(v)


@dataclass(frozen=True)
class SpeedExtrema:
    """Peak speed and turn-rate figures in theta units.

    ``V_peak_formula`` and ``omega_at_peak_formula`` are the values at the
    speed maximum, (k+1)(r+d) and 1 + k u/(1+u) with u = d/r (epitrochoids
    only).  The grid-refined fields are independent numerical extrema.
    """

    V_peak_formula: Optional[float]
    omega_at_peak_formula: Optional[float]
    V_max: float
    V_min: float
    omega_max: float
    omega_min: float


def speed_extrema(tr: AgentTrochoid, n: int = 4096) -> SpeedExtrema:
    m1, m2 = _freqs(tr)
    period = TWO_PI / abs(m2 - m1)

    def V(th):
        return np.sqrt(_rate_terms(tr, th)[0])

    def W(th):
        v2, num, scale = _rate_terms(tr, th)
        return num / np.maximum(v2, 1e-300)

    V_min, V_max = sampled_extrema(V, period, n)
    w_min, w_max = sampled_extrema(W, period, n)
    V_f = w_f = None
    if tr.trochoid_type == EPITROCHOID:
        r, d = tr.r_param, tr.d_param
        V_f = (tr.k + 1) * (r + d)
        if r > 0:
            u = d / r
            w_f = ((u + 1) ** 2 + tr.k * u * (u + 1)) / (u + 1) ** 2
    return SpeedExtrema(V_f, w_f, V_max, V_min, w_max, w_min)


# ---------------------------------------------------------------- coverage


def adaptive_simpson(f, a: float, b: float, tol: float, max_evals: int = 1_000_000, panels: int = 1):
    """Adaptive Simpson quadrature with interval bisection.

    Returns (value, n_evals).  Each accepted panel carries the Richardson
    correction (S2 - S1)/15.
    """
    evals = 0

    def fv(x):
        nonlocal evals
        evals += 1
        return float(f(x))

    edges = np.linspace(a, b, panels + 1)
    stack = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = fv(lo), fv(mid), fv(hi)
        whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
        stack.append((lo, hi, flo, fmid, fhi, whole, tol / panels, 0))
    total = 0.0
    # deterministic left-to-right accumulation
    stack.reverse()
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fv(lm), fv(rm)
        left = (mid - lo) / 6 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * frm + fhi)
        delta = left + right - whole
        if abs(delta) <= 15 * eps or depth >= 50 or evals >= max_evals:
            total += left + right + delta / 15
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2, depth + 1))
    return total, evals


def arc_length(tr: AgentTrochoid, rel_tol: float = 1e-10) -> float:
    """Length of one full period of the path (theta from 0 to 2 pi)."""
    m1, m2 = _freqs(tr)
    scale = abs(m1 * tr.c_r) + abs(m2 * tr.c_d)
    if scale == 0:
        return 0.0
    if tr.c_d == 0 or tr.c_r == 0:
        return TWO_PI * scale
    value, _ = adaptive_simpson(
        lambda th: math.sqrt(_rate_terms(tr, th)[0]),
        0.0,
        TWO_PI,
        tol=rel_tol * TWO_PI * scale,
        panels=4 * abs(m2 - m1),
    )
    return value


@dataclass(frozen=True)
class CoverageReport:
    arc_lengths: tuple[float, ...]
    areas: tuple[float, ...]
    total: float
    R_sense: float


def sensing_area(tr: AgentTrochoid, R_sense: float) -> float:
    """Area swept by a sensing disc of radius R_sense over one period (revisits counted)."""
    if not R_sense > 0:
        raise ValueError("R_sense must be positive")
    return 2 * R_sense * arc_length(tr)


def coverage(trochoids: Sequence[AgentTrochoid], R_sense: float) -> CoverageReport:
    lengths = tuple(arc_length(tr) for tr in trochoids)
    areas = tuple(2 * R_sense * L for L in lengths)
    return CoverageReport(lengths, areas, sum(areas), R_sense)


# ------------------------------------------------------------- sampling, IO


@dataclass(frozen=True)
class TrajectorySample:
    t: np.ndarray
    positions: np.ndarray  # (n, agents, 2)
    V: np.ndarray  # (n, agents), length / time
    omega: np.ndarray  # (n, agents), rad / time


def sample(trochoids: Sequence[AgentTrochoid], t) -> TrajectorySample:
    t = np.asarray(t, dtype=float)
    pos = evaluate(trochoids, t)
    V, W = [], []
    for tr in trochoids:
        v = tr.complex_velocity(t)
        a = tr.complex_acceleration(t)
        speed2 = np.abs(v) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(speed2 > 0, (np.conj(v) * a).imag / speed2, np.nan)
        V.append(np.sqrt(speed2))
        W.append(w)
    return TrajectorySample(t, pos, np.stack(V, -1), np.stack(W, -1))


def csv_header(n_agents: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_agents + 1):
        cols += [f"x{i}", f"y{i}"]
    for i in range(1, n_agents + 1):
        cols += [f"V{i}", f"omega{i}"]
    return cols


def _fmt(v: float) -> str:
    return format(float(v), ".9g")


def write_trajectory_csv(sample_: TrajectorySample, fh) -> None:
    n_agents = sample_.positions.shape[1] if sample_.positions.ndim == 3 else 0
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(csv_header(n_agents))
    for idx in range(len(sample_.t)):
        row = [_fmt(sample_.t[idx])]
        for a in range(n_agents):
            row += [_fmt(sample_.positions[idx, a, 0]), _fmt(sample_.positions[idx, a, 1])]
        for a in range(n_agents):
            row += [_fmt(sample_.V[idx, a]), _fmt(sample_.omega[idx, a])]
        w.writerow(row)


def trajectory_csv(sample_: TrajectorySample) -> str:
    buf = io.StringIO()
    write_trajectory_csv(sample_, buf)
    return buf.getvalue()


def read_trajectory_csv(fh) -> TrajectorySample:
    rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    n_agents = (len(header) - 1) // 4
    pos = body[:, 1 : 1 + 2 * n_agents].reshape(-1, n_agents, 2)
    rates = body[:, 1 + 2 * n_agents :].reshape(-1, n_agents, 2)
    return TrajectorySample(body[:, 0], pos, rates[..., 0], rates[..., 1])
