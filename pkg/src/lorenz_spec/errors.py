"""Exception hierarchy shared by every module."""


class ModelError(Exception):
    """Base class for errors raised by the geometric Lorenz laboratory."""


class InvalidParams(ModelError):
    pass


class BackwardThroughTube(ModelError):
    """Backward flow would have to leave the model through a tube entry."""


class OnStableManifold(ModelError):
    """The orbit lies on the stable manifold of the singularity and never exits."""


class DomainGamma(ModelError):
    """The return map is undefined on the line x = 0 of the cross-section."""


class NoneFound(ModelError):
    pass


class DegenerateOrbit(ModelError):
    pass


class MuTooLarge(ModelError):
    pass


class NoGap(ModelError):
    pass


class InsufficientSampling(ModelError):
    pass
