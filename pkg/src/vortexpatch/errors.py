"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration problems (2),
solver/module failures (3) and failed verification checks (4).
"""


class VortexError(Exception):
    exit_code = 3


class ConfigInvalid(VortexError):
    exit_code = 2

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class SolverError(VortexError):
    exit_code = 3


class VerificationError(VortexError):
    exit_code = 4


# domain
class SingularBoundary(SolverError): pass
class IllConditioned(SolverError): pass
class CoincidentPoints(SolverError): pass
class ExteriorPoint(SolverError): pass
class IndexOutOfRange(SolverError): pass

# point vortices
class CollidingVortices(SolverError): pass
class NoConvergence(SolverError): pass
class LeftDomain(SolverError): pass
class CollisionDetected(SolverError): pass
class NewtonSubstepFailure(SolverError): pass

# patch geometry
class NonConformal(SolverError): pass
class NotNearCircle(SolverError): pass
class MeanNotZero(SolverError): pass
class NonUniqueness(SolverError): pass

# induction / steady / stability
class QuadratureNotConverged(SolverError): pass
class PatchOverlap(SolverError): pass
class OnInterface(SolverError): pass
class DegenerateCritical(SolverError): pass
class NotSteady(SolverError): pass
class DimensionMismatch(SolverError): pass
class EigSolverFailure(SolverError): pass
class FixedPointDiverged(SolverError): pass

# contour dynamics
class StepTooLarge(SolverError): pass
class PatchCollision(SolverError): pass

# smooth profiles
class NoSolutionInWindow(SolverError): pass
class DegenerateLinearization(SolverError): pass
class NewtonDiverged(SolverError): pass
class ProfileIncompatible(SolverError): pass
