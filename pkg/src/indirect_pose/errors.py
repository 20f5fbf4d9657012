"""Exception types raised across the pipeline."""


class PoseError(Exception):
    """Base class for pipeline failures."""


class BehindCamera(PoseError):
    """A point projected with non-positive camera depth."""


class NotEnoughPoints(PoseError):
    """Too few usable correspondences to solve for a pose."""


class DegenerateConfiguration(PoseError):
    """Correspondence geometry does not determine a unique pose."""


class DivergedBehindCamera(PoseError):
    """An iterative refinement left the model behind the camera."""


class JointLimitViolation(ValueError):
    """A joint angle lies outside its configured limits."""
