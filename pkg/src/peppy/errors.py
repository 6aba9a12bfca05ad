"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`PeppyError`;
the CLI maps these to exit code 1 and prints the class name.
"""


class PeppyError(Exception):
    """Base class for all domain errors."""


class UnknownResidue(PeppyError):
    def __init__(self, token):
        super().__init__(f"unknown residue code {token!r}")
        self.token = token


class EmptyChain(PeppyError):
    pass


class UnknownConformation(PeppyError):
    def __init__(self, name):
        super().__init__(f"unknown conformation {name!r}")
        self.name = name


class MalformedRecord(PeppyError):
    def __init__(self, line_number, message="malformed record"):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyStructure(PeppyError):
    pass


class UnknownChain(PeppyError):
    def __init__(self, chain):
        super().__init__(f"chain {chain!r} not present")
        self.chain = chain


class DegenerateDihedral(PeppyError):
    pass


class ChainTooShort(PeppyError):
    pass


class ShapeMismatch(PeppyError):
    pass


class BadFeature(PeppyError):
    pass


class BadBinning(PeppyError):
    pass


class BadFormat(PeppyError):
    pass


class InvalidMesh(PeppyError):
    pass


class MalformedPBM(PeppyError):
    def __init__(self, position, message="malformed PBM document"):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnsupportedVersion(PeppyError):
    def __init__(self, version):
        super().__init__(f"unsupported format_version {version!r}")
        self.version = version
