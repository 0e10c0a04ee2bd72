"""
Feasible (R_c, d_c) regions.

Every distance constraint is linear in (R_c, d_c) once the absolute values
are resolved.  A constraint ``| p R_c - q d_c | >= m`` is the disjunction of
two half-planes; enumerating one branch per disjunction and clipping gives a
union of convex polygons.  Branches of one disjunction are disjoint for
m > 0, so the pieces do not overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .design import EPITROCHOID, DesignSpec, Eigenstructure
from .errors import EmptyRegion

PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class HalfPlane:
    """a*R_c + b*d_c >= c."""

    a: float
    b: float
    c: float
    tag: str

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise ValueError(f"degenerate half-plane {self.tag!r}: (a, b) == (0, 0)")

    def slack(self, R, d):
        return self.a * R + self.b * d - self.c

    def with_rhs(self, c: float) -> "HalfPlane":
        return replace(self, c=c)


@dataclass(frozen=True)
class Disjunction:
    """Either branch must hold; produced by splitting an absolute value."""

    branches: tuple[HalfPlane, HalfPlane]
    tag: str

    def slack(self, R, d):
        return np.maximum(self.branches[0].slack(R, d), self.branches[1].slack(R, d))


def abs_at_least(p: float, q: float, m: float, tag: str) -> Disjunction:
    """| p R - q d | >= m, with p, q >= 0.

    With p = q = 0 the left side is identically zero; for m > 0 the pair
    returned (-R >= m or -d >= m) has no solution in the quarter-plane.
    """
    if p == 0 and q == 0:
        return Disjunction(
            (HalfPlane(-1.0, 0.0, m, tag + " [+]"), HalfPlane(0.0, -1.0, m, tag + " [-]")), tag
        )
    return Disjunction(
        (HalfPlane(p, -q, m, tag + " [+]"), HalfPlane(-p, q, m, tag + " [-]")), tag
    )


@dataclass(frozen=True)
class ConstraintSet:
    """Linear half-planes plus disjunctive pairs over the (R_c, d_c) quarter-plane."""

    linear: tuple[HalfPlane, ...]
    disjunctive: tuple[Disjunction, ...]
    d0_max: float = math.inf

    @property
    def entries(self) -> list[HalfPlane]:
        out = []
        for dj in self.disjunctive:
            out.extend(dj.branches)
        out.extend(self.linear)
        return out

    def extended(self, linear=(), disjunctive=()) -> "ConstraintSet":
        return replace(
            self,
            linear=self.linear + tuple(linear),
            disjunctive=self.disjunctive + tuple(disjunctive),
        )

    def bounding_box(self) -> tuple[float, float]:
        """Largest R_c and d_c allowed by the single-variable restrictions of the linear rows."""
        r_max = d_max = math.inf
        for hp in self.linear:
            # -p R - q d >= -M with p, q > 0 bounds each coordinate on its own
            if hp.a < 0 and hp.b <= 0 and hp.c < 0:
                r_max = min(r_max, hp.c / hp.a)
            if hp.b < 0 and hp.a <= 0 and hp.c < 0:
                d_max = min(d_max, hp.c / hp.b)
        if not (math.isfinite(r_max) and math.isfinite(d_max)):
            raise ValueError("constraint set does not bound the quarter-plane")
        return r_max, d_max


def constraint_halfplanes(alpha: Sequence[float], spec: DesignSpec) -> ConstraintSet:
    """Distance constraints on origin and pairwise extrema, plus R_c, d_c >= 0."""
    alpha = np.asarray(alpha, dtype=float)
    ar, ad = alpha[0::2], alpha[1::2]
    a_r, a_d = np.abs(ar), np.abs(ad)

    disjunctive = []
    linear = []
    for i in range(3):
        disjunctive.append(abs_at_least(a_r[i], a_d[i], spec.d0_min, f"origin-min {i + 1}"))
    for i in range(3):
        linear.append(HalfPlane(-a_r[i], -a_d[i], -spec.d0_max, f"origin-max {i + 1}"))
    for i, j in PAIRS:
        p, q = abs(ar[i] - ar[j]), abs(ad[i] - ad[j])
        disjunctive.append(abs_at_least(p, q, spec.d_CT, f"pair-min {i + 1}-{j + 1}"))
    for i, j in PAIRS:
        p, q = abs(ar[i] - ar[j]), abs(ad[i] - ad[j])
        if p == 0 and q == 0:
            continue
        linear.append(HalfPlane(-p, -q, -spec.d_CR, f"pair-max {i + 1}-{j + 1}"))
    linear.append(HalfPlane(1.0, 0.0, 0.0, "nonneg R_c"))
    linear.append(HalfPlane(0.0, 1.0, 0.0, "nonneg d_c"))
    return ConstraintSet(tuple(linear), tuple(disjunctive), spec.d0_max)


def apply_perturbation_margin(constraints: ConstraintSet, delta: float) -> ConstraintSet:
    """Raise every origin-min bound by ``delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return constraints
    out = []
    for dj in constraints.disjunctive:
        if dj.tag.startswith("origin-min"):
            dj = Disjunction(tuple(h.with_rhs(h.c + delta) for h in dj.branches), dj.tag)
        out.append(dj)
    return replace(constraints, disjunctive=tuple(out))


@dataclass(frozen=True)
class CuspBand:
    """Excluded wedge slope_low <= d_c/R_c <= slope_high around one agent's cusp ray."""

    agent: int
    slope: float
    slope_low: float
    slope_high: float
    constraint: Disjunction


def cusp_exclusion_bands(
    alpha: Sequence[float], k: int, epsilon: float = 0.0, trochoid_type: str = EPITROCHOID
) -> list[CuspBand]:
    """Cusp rays d_param = r_param, widened to (1-eps) <= d_param/r_param <= (1+eps)."""
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    mult = k + 1 if trochoid_type == EPITROCHOID else k - 1
    alpha = np.asarray(alpha, dtype=float)
    bands = []
    for i in range(3):
        ar, ad = abs(alpha[2 * i]), abs(alpha[2 * i + 1])
        if ad == 0 or ar == 0:
            continue
        slope = ar / (mult * ad)
        # rho = mult*ad*d / (ar*R); feasible when rho <= 1-eps or rho >= 1+eps
        dj = Disjunction(
            (
                HalfPlane((1 - epsilon) * ar, -mult * ad, 0.0, f"cusp {i + 1} [below]"),
                HalfPlane(-(1 + epsilon) * ar, mult * ad, 0.0, f"cusp {i + 1} [above]"),
            ),
            f"cusp {i + 1}",
        )
        bands.append(CuspBand(i + 1, slope, slope * (1 - epsilon), slope * (1 + epsilon), dj))
    return bands


# ---------------------------------------------------------------- geometry


def clip_convex(poly: np.ndarray, hp: HalfPlane, tol: float = 0.0) -> np.ndarray:
    """Clip a convex polygon (n, 2) against one half-plane (Sutherland-Hodgman step)."""
    if len(poly) == 0:
        return poly
    s = hp.a * poly[:, 0] + hp.b * poly[:, 1] - hp.c
    inside = s >= -tol
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    n = len(poly)
    for idx in range(n):
        p, q = poly[idx], poly[(idx + 1) % n]
        sp, sq = s[idx], s[(idx + 1) % n]
        if sp >= -tol:
            out.append(p)
        if (sp >= -tol) != (sq >= -tol):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return np.array(out) if out else poly[:0]


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _dedupe(poly: np.ndarray, tol: float) -> np.ndarray:
    if len(poly) == 0:
        return poly
    keep = [poly[0]]
    for p in poly[1:]:
        if np.hypot(*(p - keep[-1])) > tol:
            keep.append(p)
    if len(keep) > 1 and np.hypot(*(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep)


@dataclass(frozen=True)
class Polygon:
    vertices: np.ndarray
    provenance: tuple[int, ...]

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def contains(self, R, d, tol: float = 0.0):
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        R = np.asarray(R, dtype=float)[..., None]
        d = np.asarray(d, dtype=float)[..., None]
        cross = e[:, 0] * (d - v[:, 1]) - e[:, 1] * (R - v[:, 0])
        return (cross >= -tol).all(axis=-1)

    def boundary_distance(self, R, d):
        """Distance from points to the polygon boundary."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        P = np.stack([np.asarray(R, float), np.asarray(d, float)], axis=-1)[..., None, :]
        seg = w - v
        t = np.clip(((P - v) * seg).sum(-1) / (seg * seg).sum(-1), 0.0, 1.0)
        near = v + t[..., None] * seg
        return np.linalg.norm(P - near, axis=-1).min(axis=-1)

    def chebyshev_centre(self) -> tuple[np.ndarray, float]:
        """Centre and radius of the largest inscribed disc."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        # inward normal of a ccw edge is (-ey, ex)
        n = np.column_stack([-e[:, 1], e[:, 0]])
        norm = np.linalg.norm(n, axis=1)
        n = n / norm[:, None]
        b = (n * v).sum(1)
        # maximise r subject to n.x - r >= b
        A_ub = np.column_stack([-n, np.ones(len(n))])
        res = linprog(
            c=[0.0, 0.0, -1.0],
            A_ub=A_ub,
            b_ub=-b,
            bounds=[(None, None), (None, None), (0, None)],
            method="highs",
        )
        if not res.success:  # pragma: no cover - polygon has positive area
            return v.mean(axis=0), 0.0
        return res.x[:2], float(res.x[2])


@dataclass(frozen=True)
class FeasibleRegion:
    polygons: tuple[Polygon, ...]
    box: tuple[float, float]
    constraints: ConstraintSet = field(repr=False)

    @property
    def area(self) -> float:
        return sum(p.area for p in self.polygons)

    def contains(self, R, d, tol: float = 0.0):
        R = np.asarray(R, dtype=float)
        hit = np.zeros(R.shape, dtype=bool)
        for p in self.polygons:
            hit |= p.contains(R, d, tol)
        return hit

    def boundary_distance(self, R, d):
        return np.min([p.boundary_distance(R, d) for p in self.polygons], axis=0)

    def largest(self) -> Polygon:
        return max(self.polygons, key=lambda p: p.area)

    def deepest_point(self) -> tuple[float, float]:
        """Chebyshev centre of the largest polygon."""
        c, _ = self.largest().chebyshev_centre()
        return float(c[0]), float(c[1])

    def rows(self, polygon: Polygon) -> list[HalfPlane]:
        """Half-planes that cut out ``polygon`` (its branch choices plus the linear rows)."""
        picked = [dj.branches[b] for dj, b in zip(self.constraints.disjunctive, polygon.provenance)]
        return picked + list(self.constraints.linear)

    def margin_point(self) -> tuple[float, float, float]:
        """Point with the largest worst-case slack, measured in length units.

        Every distance row reads |alpha| R_c +- |alpha| d_c >= bound, so its
        slack is a distance.  The sign rows R_c, d_c >= 0 are kept as hard
        limits but do not count toward the margin.  Returns (R_c, d_c, margin).
        """
        best = None
        for poly in self.polygons:
            A, b, soft = [], [], []
            for hp in self.rows(poly):
                A.append([-hp.a, -hp.b])
                b.append(-hp.c)
                soft.append(0.0 if hp.tag.startswith("nonneg") else 1.0)
            A_ub = np.column_stack([np.array(A), np.array(soft)])
            res = linprog(
                c=[0.0, 0.0, -1.0],
                A_ub=A_ub,
                b_ub=np.array(b),
                bounds=[(0, None), (0, None), (None, None)],
                method="highs",
            )
            if res.success and (best is None or res.x[2] > best[2]):
                best = (float(res.x[0]), float(res.x[1]), float(res.x[2]))
        if best is None:  # pragma: no cover - polygons are non-empty
            raise EmptyRegion("no polygon admits a margin point")
        return best


def enumerate_regions(constraints: ConstraintSet, min_area: float = 1e-9) -> FeasibleRegion:
    """Union of convex pieces, one per feasible branch combination.

    Depth-first over the disjunctions with pruning: a partial clip that is
    already empty cuts the whole subtree.
    """
    r_max, d_max = constraints.bounding_box()
    box = np.array([[0.0, 0.0], [r_max, 0.0], [r_max, d_max], [0.0, d_max]])
    diag = math.hypot(r_max, d_max)
    vtol = 1e-9 * diag

    base = box
    for hp in constraints.linear:
        base = clip_convex(base, hp)
        if len(base) < 3:
            raise EmptyRegion("linear constraints alone are infeasible")

    pieces: list[Polygon] = []
    disj = constraints.disjunctive

    def walk(poly, depth, path):
        if depth == len(disj):
            poly = _dedupe(poly, vtol)
            if len(poly) >= 3 and polygon_area(poly) >= min_area:
                pieces.append(Polygon(poly, tuple(path)))
            return
        for branch_idx, hp in enumerate(disj[depth].branches):
            clipped = clip_convex(poly, hp)
            if len(clipped) >= 3 and polygon_area(clipped) >= min_area:
                walk(clipped, depth + 1, path + [branch_idx])

    walk(base, 0, [])

    unique: list[Polygon] = []
    for p in sorted(pieces, key=lambda p: p.provenance):
        if not any(_same_polygon(p.vertices, q.vertices, vtol * 10) for q in unique):
            unique.append(p)
    if not unique:
        raise EmptyRegion("no branch combination of the constraints is feasible")
    return FeasibleRegion(tuple(unique), (r_max, d_max), constraints)


def _same_polygon(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if len(a) != len(b):
        return False
    for shift in range(len(b)):
        if np.abs(a - np.roll(b, shift, axis=0)).max() <= tol:
            return True
    return False


@dataclass(frozen=True)
class Classification:
    feasible: bool
    violated: tuple[str, ...]


def classify_point(constraints: ConstraintSet, R_c: float, d_c: float, tol: float = 0.0):
    """Evaluate every constraint directly at one point."""
    violated = []
    for dj in constraints.disjunctive:
        if dj.slack(R_c, d_c) < -tol:
            violated.append(dj.tag)
    for hp in constraints.linear:
        if hp.slack(R_c, d_c) < -tol:
            violated.append(hp.tag)
    return Classification(not violated, tuple(violated))


def classify_points(constraints: ConstraintSet, R, d) -> np.ndarray:
    """Vectorised feasibility mask (no tag bookkeeping)."""
    R = np.asarray(R, dtype=float)
    d = np.asarray(d, dtype=float)
    ok = np.ones(np.broadcast(R, d).shape, dtype=bool)
    for dj in constraints.disjunctive:
        ok &= dj.slack(R, d) >= 0
    for hp in constraints.linear:
        ok &= hp.slack(R, d) >= 0
    return ok


def design_constraints(
    spec: DesignSpec,
    eig: Eigenstructure,
    delta: float = 0.0,
    subtract_cusps: bool = False,
    extra: Iterable[Disjunction] = (),
) -> ConstraintSet:
    """Constraint set for a design, optionally hardened and with cusp bands removed."""
    cs = constraint_halfplanes(eig.alpha, spec)
    cs = apply_perturbation_margin(cs, delta)
    extra = tuple(extra)
    if subtract_cusps:
        extra += tuple(
            b.constraint
            for b in cusp_exclusion_bands(eig.alpha, eig.k, spec.epsilon_cusp, eig.trochoid_type)
        )
    return cs.extended(disjunctive=extra)


def feasible_region(spec: DesignSpec, eig: Eigenstructure, **kwargs) -> FeasibleRegion:
    return enumerate_regions(design_constraints(spec, eig, **kwargs))
