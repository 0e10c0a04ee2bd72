"""Exception hierarchy shared across the package."""


class TrochoidError(Exception):
    """Base class for all design and simulation errors raised here."""


class DesignSpecError(TrochoidError, ValueError):
    """A DesignSpec violates one of its invariants."""


class DegenerateBeta(TrochoidError):
    """beta_1 vanishes for the chosen triple and cusp count; agent 1 would not move."""


class SingularBetaD(TrochoidError):
    """beta_d is zero so the alpha coefficients are undefined."""


class SingularSystem(TrochoidError):
    """The 2x2 system mapping (R_c, d_c) to on-axis positions is singular."""


class SingularCoR(TrochoidError):
    """sum(1/beta_i) vanishes; the centre of rotation is undefined."""


class EmptyRegion(TrochoidError):
    """No branch combination of the inequality system is feasible."""


class CuspSingularity(TrochoidError):
    """Turn rate is undefined because the path passes through a cusp."""


class UnsupportedType(TrochoidError):
    """Operation only defined for epitrochoids."""


class SignDegenerate(TrochoidError):
    """Sign-discriminating product is zero; closed form cannot pick a branch."""


class NonFiniteState(TrochoidError):
    """Numerical integration produced a non-finite state."""


class HeadingUndefined(TrochoidError):
    """Consensus input is zero so the reference heading is undefined."""
