"""Exception hierarchy shared by all modules."""


class NlsGraphError(Exception):
    """Base class for all computational errors raised by the package."""


class DegenerateProfile(NlsGraphError):
    pass


class NoZeroCrossing(NlsGraphError):
    pass


class NoPeriodicOrbit(NlsGraphError):
    pass


class TargetOutOfRange(NlsGraphError):
    pass


class InterpolationOutOfRange(NlsGraphError):
    pass


class NotACrossing(NlsGraphError):
    pass


class MultiplicityAboveOne(NlsGraphError):
    pass


class SeedNotACrossing(NlsGraphError):
    pass


class CorrectorDiverged(NlsGraphError):
    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class InsufficientPoints(NlsGraphError):
    pass


class BothFormsVanish(NlsGraphError):
    pass


class NonRegularInteriorCrossing(NlsGraphError):
    pass


class DegenerateConcavity(NlsGraphError):
    pass


class NearSpectrum(NlsGraphError):
    pass


class EigenvalueNotSimple(NlsGraphError):
    pass


class TauPairingZero(NlsGraphError):
    pass
