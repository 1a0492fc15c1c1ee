"""Exception hierarchy for projlab."""


class LabError(Exception):
    """Base class for every error raised by projlab."""


class BadParams(LabError, ValueError):
    """Invalid or out-of-range parameters."""


class EigFailure(LabError):
    """The QL iteration did not converge within its budget."""

    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual norm {residual:.3e})")
        self.residual = residual


class TieAtThreshold(LabError):
    """An eigenvalue sits on the threshold, so open/closed membership is ambiguous."""

    def __init__(self, threshold, eigenvalue, tie_tol):
        super().__init__(
            f"eigenvalue {eigenvalue!r} lies within {tie_tol:.3e} of threshold {threshold!r}"
        )
        self.threshold = threshold
        self.eigenvalue = eigenvalue
        self.tie_tol = tie_tol


class QuadratureFailure(LabError):
    """Adaptive quadrature could not reach the requested accuracy."""


class NotAProjectionDifference(LabError):
    """Spectrum leaves [-1, 1], so the input cannot be a difference of projections."""


class GapNotEmpty(LabError):
    """The interval handed to a gap count contains eigenvalues of the base operator."""


class ProbeExhausted(LabError):
    """No admissible direction is left for the next probe vector."""


class NothingToCheck(LabError):
    """The vector is cyclic, so its Krylov complement is trivial."""


class CorrectionInfeasible(LabError):
    """The decay budget cannot absorb the required eigenvalue shifts."""

    def __init__(self, msg, required):
        super().__init__(msg)
        self.required = required


class SingularShift(LabError):
    """Shifted operator could not be inverted."""


class OutOfRange(LabError, ValueError):
    """Spectral parameter outside the domain of the resolvent map."""


class DegenerateSpectrum(LabError):
    """Eigenvalues too close to define an atomic measure."""

    def __init__(self, msg, index):
        super().__init__(msg)
        self.index = index


class NotCyclic(LabError):
    """The generating vector misses an eigenvector."""

    def __init__(self, msg, index):
        super().__init__(msg)
        self.index = index


class AtomCollision(LabError):
    """Atoms of the two measures coincide, where the divided difference is singular."""
