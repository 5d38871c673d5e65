"""Exception hierarchy shared by all modules."""


class BoxPoissonError(Exception):
    """Base class; `stage` is filled in by the solver pipeline."""

    stage = None

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigError(BoxPoissonError):
    pass


# geometry
class NonPositiveRadius(BoxPoissonError):
    pass


class CurveIntersection(BoxPoissonError):
    pass


# quadtree
class MaxLevelExceeded(BoxPoissonError):
    pass


class PointOutsideLeaf(BoxPoissonError):
    pass


# boxfmm
class PrecisionUnachievable(BoxPoissonError):
    pass


# bie
class QuadratureNonConvergent(BoxPoissonError):
    pass


class SingularMatrix(BoxPoissonError):
    pass


class SolveFailed(BoxPoissonError):
    pass


# qbx
class CenterCollision(BoxPoissonError):
    pass


class WrongSide(BoxPoissonError):
    pass


# solver
class PointOutsideDomain(BoxPoissonError):
    pass


NUMERICAL_ERRORS = (
    NonPositiveRadius,
    CurveIntersection,
    MaxLevelExceeded,
    PointOutsideLeaf,
    PrecisionUnachievable,
    QuadratureNonConvergent,
    SingularMatrix,
    SolveFailed,
    CenterCollision,
    WrongSide,
    PointOutsideDomain,
)
