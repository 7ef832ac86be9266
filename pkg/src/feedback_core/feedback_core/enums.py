from enum import StrEnum


class MirrorModel(StrEnum):
    """Which single-excitation system decays in front of the mirror."""

    EMITTER = "emitter"
    CAVITY = "cavity"


class InitialKind(StrEnum):
    EMITTER_EXCITED = "emitter_excited"
    CAVITY_PHOTONS = "cavity_photons"


class RhsVariant(StrEnum):
    """Right-hand side used for the general interval block."""

    DERIVED = "derived"
    PRINTED = "printed"


class Channel(StrEnum):
    """The four two-time correlator families of an interval block."""

    CC = "cc"
    PC = "pc"
    CP = "cp"
    PP = "pp"
