"""Exception hierarchy. Each category maps to a distinct CLI exit code."""


class LabError(Exception):
    exit_code = 1


class GeometryError(LabError):
    exit_code = 2


class NumericError(LabError):
    exit_code = 3


class PreconditionError(LabError):
    exit_code = 4
