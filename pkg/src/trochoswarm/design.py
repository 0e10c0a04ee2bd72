"""
Protocol design for a three-agent swarm on a path graph.

Everything here is a pure function of its inputs.  The pipeline is

    triple, k  ->  beta  ->  eigenstructure (lambdas, alpha, Gamma)
               ->  (R_c, d_c)  ->  collinear initial positions

and the reverse map ``recompute_from_positions`` takes arbitrary initial
positions back to modal amplitudes and phases.

Positions are handled as complex numbers ``z = x + iy`` internally; the
skew-symmetric matrix S then acts as multiplication by ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateBeta,
    DesignSpecError,
    SingularBetaD,
    SingularCoR,
    SingularSystem,
)

EPITROCHOID = "epitrochoid"
HYPOTROCHOID = "hypotrochoid"
TROCHOID_TYPES = (EPITROCHOID, HYPOTROCHOID)


def _check_type(trochoid_type: str) -> str:
    if trochoid_type not in TROCHOID_TYPES:
        raise DesignSpecError(f"unknown trochoid type {trochoid_type!r}")
    return trochoid_type


@dataclass(frozen=True)
class DesignSpec:
    """User inputs for one swarm design.

    Lengths share a single unit.  ``d0_max`` may be left as None when
    ``d_CR`` is given, in which case it defaults to ``0.5 * d_CR``.
    """

    k: int
    triple: tuple[int, int, int]
    trochoid_type: str = EPITROCHOID
    d0_min: float = 1.5
    d0_max: Optional[float] = None
    d_CT: float = 0.5
    d_CR: float = 15.0
    R_rob: Optional[float] = None
    R_sense: Optional[float] = None
    epsilon_cusp: float = 0.0

    def __post_init__(self):
        triple = tuple(int(s) for s in self.triple)
        if len(triple) != 3 or any(int(s) != s for s in self.triple):
            raise DesignSpecError(f"triple must be three integers, got {self.triple!r}")
        object.__setattr__(self, "triple", triple)
        s1, s2, s3 = triple
        if min(triple) <= 0:
            raise DesignSpecError(f"triple entries must be positive, got {triple}")
        if s1 * s1 + s2 * s2 != s3 * s3:
            raise DesignSpecError(f"{triple} is not a Pythagorean triple")
        if int(self.k) != self.k or self.k < 2:
            raise DesignSpecError(f"cusp count k must be an integer >= 2, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        _check_type(self.trochoid_type)
        if self.d0_max is None:
            object.__setattr__(self, "d0_max", 0.5 * self.d_CR)
        # d0_min > d0_max is accepted on purpose: it is reported downstream as an
        # empty feasible region rather than rejected here.
        if not self.d0_min >= 0 or not self.d0_max > 0:
            raise DesignSpecError("need d0_min >= 0 and d0_max > 0")
        if not 0 < self.d_CT < self.d_CR:
            raise DesignSpecError(f"need 0 < d_CT < d_CR, got {self.d_CT}, {self.d_CR}")
        if self.R_rob is not None and not self.d_CT > 2 * self.R_rob:
            raise DesignSpecError(f"d_CT={self.d_CT} must exceed 2*R_rob={2 * self.R_rob}")
        if self.R_sense is not None and not self.R_sense > 0:
            raise DesignSpecError("R_sense must be positive")
        if not 0 <= self.epsilon_cusp < 1:
            raise DesignSpecError("epsilon_cusp must lie in [0, 1)")


def build_line_laplacian() -> np.ndarray:
    """Laplacian of the path graph 1 - 2 - 3."""
    return np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])


def design_beta_exact(triple: Sequence[int], k: int, trochoid_type: str = EPITROCHOID):
    """Diagonal gains as exact rationals. Raises DegenerateBeta if beta_1 == 0."""
    s1, s2, s3 = (int(s) for s in triple)
    k = int(k)
    _check_type(trochoid_type)
    sign = 1 if trochoid_type == EPITROCHOID else -1
    b1 = Fraction(sign * 2 * s3 - k * (s2 + s1 - s3), 2 * k)
    if b1 == 0:
        raise DegenerateBeta(
            f"beta_1 = 0 for triple {tuple(triple)} and k={k}; agent 1 would be stationary"
        )
    return (b1, Fraction(s2, 2), b1 + s1)


def design_beta(triple: Sequence[int], k: int, trochoid_type: str = EPITROCHOID):
    """(beta_1, beta_2, beta_3) as floats."""
    return tuple(float(b) for b in design_beta_exact(triple, k, trochoid_type))


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    """Square root of a non-negative rational when it is itself rational."""
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class Eigenstructure:
    """Eigenvalues of BL and the alpha / Gamma coefficient families.

    ``alpha`` is ordered (a1r, a1d, a2r, a2d, a3r, a3d).  ``alpha_r`` and
    ``alpha_d`` expose the same numbers per mode; they are also the right
    eigenvectors of BL for lambda_min and lambda_max, scaled by 1/beta_d.
    """

    beta: tuple[float, float, float]
    k: int
    trochoid_type: str
    a: float
    b: float
    beta_d: float
    lambda_min: float
    lambda_max: float
    alpha: tuple[float, ...]
    gamma_R: np.ndarray = field(repr=False)
    gamma_d: np.ndarray = field(repr=False)
    gamma_phi_r: np.ndarray = field(repr=False)
    gamma_phi_d: np.ndarray = field(repr=False)

    @property
    def alpha_r(self) -> np.ndarray:
        return np.array(self.alpha[0::2])

    @property
    def alpha_d(self) -> np.ndarray:
        return np.array(self.alpha[1::2])

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.lambda_min)

    @property
    def ratio(self) -> float:
        return self.lambda_max / self.lambda_min

    @property
    def fast_multiple(self) -> int:
        """lambda_max / |lambda_min| as an integer: k+1 (epi) or k-1 (hypo)."""
        return self.k + 1 if self.trochoid_type == EPITROCHOID else self.k - 1

    @property
    def slow_sign(self) -> int:
        """Direction of the slow mode: +1 for epitrochoids, -1 for hypotrochoids."""
        return 1 if self.lambda_min > 0 else -1

    def scaled(self, s: float) -> "Eigenstructure":
        """Eigenstructure of s*beta."""
        return eigenstructure(tuple(s * b for b in self.beta), self.k, self.trochoid_type)


def _auxiliaries(beta):
    b1, b2, b3 = beta
    exact = all(isinstance(v, Rational) for v in beta)
    if exact:
        b1, b2, b3 = (Fraction(v) for v in beta)
        a = b1 / 2 + b2 + b3 / 2
        disc = (b1 - b3) ** 2 + (2 * b2) ** 2
        root = _exact_sqrt(disc)
        b = root / 2 if root is not None else 0.5 * math.sqrt(disc)
    else:
        b1, b2, b3 = (float(v) for v in beta)
        a = b1 / 2 + b2 + b3 / 2
        b = 0.5 * math.hypot(b1 - b3, 2 * b2)
    return (b1, b2, b3), a, b


def gamma_vectors(beta):
    """Coefficient vectors (Gamma_R, Gamma_d, Gamma_phi_r, Gamma_phi_d)."""
    (b1, b2, b3), _, b = _auxiliaries(beta)
    common = b1 * b1 + 2 * b2 * b2 - b1 * b3 - b2 * b3 + b1 * b2
    g_r = (
        b2 * (b1 + 2 * b2 + b3 + 2 * b),
        b1 * (b1 - b3 + 2 * b) - 2 * b2 * b3,
        -(common + 2 * b * b1 + 2 * b * b2),
    )
    g_d = (
        b2 * (b1 + 2 * b2 + b3 - 2 * b),
        b1 * (b1 - b3 - 2 * b) - 2 * b2 * b3,
        -(common - 2 * b * b1 - 2 * b * b2),
    )
    g_phi_r = (
        -b2 * (b1 + b3 + 2 * b2 + 2 * b),
        -b1 * (b1 - b3 + 2 * b) + 2 * b2 * b3,
        common + 2 * b * b1 + 2 * b * b2,
    )
    g_phi_d = (
        b2 * (b1 + b3 + 2 * b2 - 2 * b),
        b1 * (b1 - b3 - 2 * b) - 2 * b2 * b3,
        -(common - 2 * b * b1 - 2 * b * b2),
    )
    as_array = lambda g: np.array([float(v) for v in g])
    return as_array(g_r), as_array(g_d), as_array(g_phi_r), as_array(g_phi_d)


def eigenstructure(beta, k: int, trochoid_type: str = EPITROCHOID) -> Eigenstructure:
    """Closed-form eigenvalues, alpha and Gamma for B = diag(beta) on the path graph.

    Exact rational arithmetic is used whenever beta is given as Fractions/ints
    and the discriminant is a perfect square (always true for designed betas).
    """
    _check_type(trochoid_type)
    (b1, b2, b3), a, b = _auxiliaries(beta)
    lam_max = a + b
    lam_min = a - b
    if lam_min == 0:
        raise SingularBetaD("beta1*beta2 + beta2*beta3 + beta1*beta3 = 0")
    pair_sum = b1 * b2 + b2 * b3 + b1 * b3
    beta_d = 4 * b * pair_sum
    if beta_d == 0:
        raise SingularBetaD(f"beta_d vanishes for beta={tuple(beta)}")

    expected = (k + 1) if trochoid_type == EPITROCHOID else -(k - 1)
    ratio = lam_max / lam_min
    if abs(float(ratio) - expected) > 1e-9 * abs(expected):
        raise DesignSpecError(
            f"beta={tuple(float(v) for v in beta)} gives eigen-ratio {float(ratio):.12g},"
            f" not {expected} for a {trochoid_type} with k={k}"
        )

    alpha = (
        b1 * (lam_min - b2 - b3) / (b2 * beta_d),
        b1 * (lam_max - b2 - b3) / (b2 * beta_d),
        (b3 - lam_min) / beta_d,
        (b3 - lam_max) / beta_d,
        b3 / beta_d,
        b3 / beta_d,
    )
    g_r, g_d, g_phi_r, g_phi_d = gamma_vectors((b1, b2, b3))
    return Eigenstructure(
        beta=(float(b1), float(b2), float(b3)),
        k=int(k),
        trochoid_type=trochoid_type,
        a=float(a),
        b=float(b),
        beta_d=float(beta_d),
        lambda_min=float(lam_min),
        lambda_max=float(lam_max),
        alpha=tuple(float(v) for v in alpha),
        gamma_R=g_r,
        gamma_d=g_d,
        gamma_phi_r=g_phi_r,
        gamma_phi_d=g_phi_d,
    )


def design_eigenstructure(spec: DesignSpec) -> Eigenstructure:
    return eigenstructure(
        design_beta_exact(spec.triple, spec.k, spec.trochoid_type), spec.k, spec.trochoid_type
    )


@dataclass(frozen=True)
class AgentTrochoid:
    """Closed-form path of one agent.

    Position at time t (complex form)::

        z(t) = c_r e^{i(lambda_min t + phi_r)} + c_d e^{i(lambda_max t + phi_d)}
               + c_0 e^{i phi_0}
    """

    agent_id: int
    c_r: float
    c_d: float
    k: int
    lambda_min: float
    lambda_max: float
    trochoid_type: str = EPITROCHOID
    phi_r: float = 0.0
    phi_d: float = 0.0
    c_0: float = 0.0
    phi_0: float = 0.0

    @property
    def fast_multiple(self) -> int:
        return self.k + 1 if self.trochoid_type == EPITROCHOID else self.k - 1

    @property
    def r_param(self) -> float:
        """Rolling-circle radius r with (k+1) r = |c_r| (k-1 for hypotrochoids)."""
        return abs(self.c_r) / self.fast_multiple

    @property
    def d_param(self) -> float:
        return abs(self.c_d)

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.lambda_min)

    @property
    def cor(self) -> complex:
        return self.c_0 * complex(math.cos(self.phi_0), math.sin(self.phi_0))

    def complex_position(self, t):
        t = np.asarray(t, dtype=float)
        return (
            self.c_r * np.exp(1j * (self.lambda_min * t + self.phi_r))
            + self.c_d * np.exp(1j * (self.lambda_max * t + self.phi_d))
            + self.cor
        )

    def position(self, t) -> np.ndarray:
        """(..., 2) array of x, y."""
        z = self.complex_position(t)
        return np.stack([z.real, z.imag], axis=-1)

    def complex_velocity(self, t):
        t = np.asarray(t, dtype=float)
        return 1j * (
            self.c_r * self.lambda_min * np.exp(1j * (self.lambda_min * t + self.phi_r))
            + self.c_d * self.lambda_max * np.exp(1j * (self.lambda_max * t + self.phi_d))
        )

    def complex_acceleration(self, t):
        t = np.asarray(t, dtype=float)
        return -(
            self.c_r * self.lambda_min**2 * np.exp(1j * (self.lambda_min * t + self.phi_r))
            + self.c_d * self.lambda_max**2 * np.exp(1j * (self.lambda_max * t + self.phi_d))
        )

    def scaled_in_time(self, s: float) -> "AgentTrochoid":
        return _replace(self, lambda_min=s * self.lambda_min, lambda_max=s * self.lambda_max)


def _replace(obj, **changes):
    from dataclasses import replace

    return replace(obj, **changes)


def trochoid_coefficients(
    eig: Eigenstructure,
    R_c: float,
    d_c: float,
    phi_r: float = 0.0,
    phi_d: float = 0.0,
    c_0: float = 0.0,
    phi_0: float = 0.0,
) -> tuple[AgentTrochoid, AgentTrochoid, AgentTrochoid]:
    """Per-agent trochoids with c_ir = alpha_ir R_c and c_id = alpha_id d_c."""
    if R_c < 0 or d_c < 0:
        raise ValueError(f"R_c and d_c must be non-negative, got {R_c}, {d_c}")
    a_r, a_d = eig.alpha_r, eig.alpha_d
    return tuple(
        AgentTrochoid(
            agent_id=i + 1,
            c_r=float(a_r[i] * R_c),
            c_d=float(a_d[i] * d_c),
            k=eig.k,
            lambda_min=eig.lambda_min,
            lambda_max=eig.lambda_max,
            trochoid_type=eig.trochoid_type,
            phi_r=phi_r,
            phi_d=phi_d,
            c_0=c_0,
            phi_0=phi_0,
        )
        for i in range(3)
    )


def centre_of_rotation(beta, positions) -> complex:
    """Fixed point of the consensus dynamics reached from ``positions``.

    The left null vector of BL has entries 1/beta_i.
    """
    z = _as_complex(positions)
    w = np.array([1.0 / float(b) for b in beta])
    total = w.sum()
    if abs(total) < 1e-14 * np.abs(w).max():
        raise SingularCoR(f"sum(1/beta_i) vanishes for beta={tuple(beta)}")
    return complex(np.dot(w, z) / total)


def _as_complex(positions) -> np.ndarray:
    p = np.asarray(positions)
    if np.iscomplexobj(p):
        return p.astype(complex).reshape(3)
    p = p.astype(float)
    if p.shape == (3,):
        return p.astype(complex)
    if p.shape != (3, 2):
        raise ValueError(f"expected three 2-D points, got shape {p.shape}")
    return p[:, 0] + 1j * p[:, 1]


@dataclass(frozen=True)
class InitialPlacement:
    """Collinear placement on the X axis before and after the CoR shift."""

    raw: np.ndarray
    cor_x: float
    positions: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]


def initial_positions(eig: Eigenstructure, R_c: float, d_c: float) -> InitialPlacement:
    """Place the agents on the X axis so the modal amplitudes are (R_c, d_c) with zero phases.

    Agent 3 starts at the origin; agents 1 and 2 solve
    ``Gamma_R . x = -R_c`` and ``Gamma_d . x = d_c``.  All three are then
    shifted so that the common centre of rotation sits at the origin.
    """
    if R_c < 0 or d_c < 0:
        raise ValueError(f"R_c and d_c must be non-negative, got {R_c}, {d_c}")
    m = np.array([eig.gamma_R[:2], eig.gamma_d[:2]])
    det = np.linalg.det(m)
    scale = np.abs(m).max() ** 2
    if abs(det) <= 1e-12 * scale:
        raise SingularSystem(f"Gamma 2x2 determinant {det:.3g} is singular")
    x12 = np.linalg.solve(m, np.array([-R_c, d_c]))
    raw_x = np.array([x12[0], x12[1], 0.0])
    cor = centre_of_rotation(eig.beta, raw_x).real
    shifted = raw_x - cor
    zeros = np.zeros(3)
    return InitialPlacement(
        raw=np.column_stack([raw_x, zeros]),
        cor_x=float(cor),
        positions=np.column_stack([shifted, zeros]),
    )


@dataclass(frozen=True)
class ModalState:
    """Modal amplitudes and phases recovered from arbitrary initial positions."""

    R_c: float
    d_c: float
    phi_r: float
    phi_d: float
    c_0: float
    phi_0: float


def recompute_from_positions(eig: Eigenstructure, positions) -> ModalState:
    """Forward map from initial positions (3 points) to (R_c, d_c, phases, CoR)."""
    z = _as_complex(positions)
    x, y = z.real, z.imag
    R_c = math.hypot(eig.gamma_R @ x, eig.gamma_R @ y)
    d_c = math.hypot(eig.gamma_d @ x, eig.gamma_d @ y)
    phi_r = math.atan2(eig.gamma_phi_r @ y, eig.gamma_phi_r @ x) if R_c > 0 else 0.0
    phi_d = math.atan2(eig.gamma_phi_d @ y, eig.gamma_phi_d @ x) if d_c > 0 else 0.0
    cor = centre_of_rotation(eig.beta, z)
    return ModalState(
        R_c=R_c,
        d_c=d_c,
        phi_r=phi_r,
        phi_d=phi_d,
        c_0=abs(cor),
        phi_0=math.atan2(cor.imag, cor.real) if cor != 0 else 0.0,
    )


def trochoids_from_positions(eig: Eigenstructure, positions):
    """Trochoids traced from arbitrary initial positions (phases and CoR included)."""
    m = recompute_from_positions(eig, positions)
    return trochoid_coefficients(eig, m.R_c, m.d_c, m.phi_r, m.phi_d, m.c_0, m.phi_0)


@dataclass(frozen=True)
class SwarmDesign:
    """A complete design: inputs, eigenstructure, chosen point, placement, paths."""

    spec: DesignSpec
    eig: Eigenstructure
    R_c: float
    d_c: float
    placement: InitialPlacement
    trochoids: tuple

    @property
    def positions(self) -> np.ndarray:
        return self.placement.positions

    @property
    def period(self) -> float:
        return self.eig.period


def make_design(spec: DesignSpec, R_c: float, d_c: float, eig: Optional[Eigenstructure] = None):
    eig = eig or design_eigenstructure(spec)
    placement = initial_positions(eig, R_c, d_c)
    return SwarmDesign(
        spec=spec,
        eig=eig,
        R_c=float(R_c),
        d_c=float(d_c),
        placement=placement,
        trochoids=trochoid_coefficients(eig, R_c, d_c),
    )
