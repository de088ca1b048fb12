"""Exception hierarchy shared by every unihand layer.

Crypto-level failures (AuthFailure, InvalidSignature, ...) are raised by the
primitive modules; ProtocolAbort subclasses are what role handlers raise, and
every abort freezes the session (status -> rejected) without emitting a reply.
"""


class UnihandError(Exception):
    """Base class for every error raised by this package."""


# ---- primitive-layer errors -------------------------------------------------

class InvalidElement(UnihandError):
    """Byte string is not a valid group element, or is the identity."""


class AuthFailure(UnihandError):
    """AEAD tag verification failed: tampering or wrong key."""


class BadDescriptor(UnihandError):
    """Admissibility descriptor references out-of-range blocks."""


class Inadmissible(UnihandError):
    """Modification touches a block outside the admissible set."""


class InvalidSignature(UnihandError):
    """Signature input to sanitisation does not verify."""


class DuplicateElement(UnihandError):
    """Element already present in the accumulator."""


class ElementAccumulated(UnihandError):
    """No non-membership witness exists: the element was accumulated (revoked)."""


class StaleWitness(UnihandError):
    """Witness version does not match the accumulator version it is updated from."""


class MalformedCertificate(UnihandError):
    """Certificate bytes violate the framing rules."""


# ---- protocol / deployment errors -------------------------------------------

class DuplicateRegistration(UnihandError):
    """A gNB with this identity is already registered."""


class UnknownTid(UnihandError):
    """Temporary identity resolves to no registered (unrevoked) subscriber."""


class VersionGap(UnihandError):
    """Revocation delta is not the immediate successor of the local version."""


class NoCredential(UnihandError):
    """UE asked to hand over without a stored certificate and witness."""


class AlreadyCorrupted(UnihandError):
    """The adversary already corrupted this key in the current scenario."""


class ScenarioError(UnihandError):
    """Scenario file is malformed or references messages that never existed."""


class ProtocolAbort(UnihandError):
    """Base for every handler abort; freezes the session, emits nothing."""

    reason = "abort"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.reason}{': ' + detail if detail else ''}")


class AbortInvalidCert(ProtocolAbort):
    reason = "invalid-cert"


class AbortShareMismatch(ProtocolAbort):
    reason = "share-mismatch"


class AbortInvalidSig(ProtocolAbort):
    reason = "invalid-sig"


class AbortAuthFailure(ProtocolAbort):
    reason = "auth-failure"


class AbortTidMismatch(ProtocolAbort):
    reason = "tid-mismatch"


class AbortRevoked(ProtocolAbort):
    reason = "revoked"


class AbortExpired(ProtocolAbort):
    reason = "expired"
