from enum import StrEnum


class SolverName(StrEnum):
    ANALYTIC = "analytic"
    DDE = "dde"
    CONTINUUM = "continuum"
    HIERARCHY = "hierarchy"
    FACTORIZED = "factorized"
    BENCHMARK = "benchmark"


class SystemModel(StrEnum):
    """Single-excitation system handed to the amplitude solvers."""

    MIRROR = "mirror"
    CAVITY = "cavity"
    JCM = "jcm"
    EMPTY_CAVITY = "empty-cavity"


class BenchmarkKind(StrEnum):
    HIERARCHY_VS_DDE = "hierarchy-vs-dde"
    CONTINUUM_VS_ANALYTIC = "continuum-vs-analytic"
    FACTORIZED_VS_HIERARCHY = "factorized-vs-hierarchy"
    PRINTED_VS_DERIVED = "printed-vs-derived"
    SELF = "self"


class SweepAxis(StrEnum):
    M = "M"
    GAMMA = "gamma"
    TAU = "tau"
    PHASE = "phase"
    N0 = "N0"
