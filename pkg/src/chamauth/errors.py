"""Exception hierarchy shared across the package."""


class ChamAuthError(Exception):
    """Base class for all library errors."""


class UnsupportedSecurityLevel(ChamAuthError):
    """Requested a security level no backend provides."""


class DecodeError(ChamAuthError):
    """A byte string is not a valid canonical encoding."""


class DegenerateBaseError(ChamAuthError):
    """Signing base h/m' is the group identity; the signature would be vacuous."""


class WatermarkError(ChamAuthError):
    """Watermark embed/extract misuse (double embed, extract without embed)."""


class LedgerError(ChamAuthError):
    """Ledger lookup failure or chain violation."""


class RegistrationError(ChamAuthError):
    """IDP registration rejected (duplicate anonymous identity, bad key)."""


class ProtocolError(ChamAuthError):
    """Protocol state machine or transport failure."""



class TransportClosed(ProtocolError):
    """Peer closed the connection mid-protocol."""
