"""Exception hierarchy shared by every setforge module.

The CLI reports a domain failure by printing the class name, so names are
part of the public surface and should not be renamed casually.
"""


class SetForgeError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# numtheory
class ZeroModulus(SetForgeError, ZeroDivisionError):
    pass


class NotInvertible(SetForgeError, ValueError):
    pass


# rsa
class BadParameters(SetForgeError, ValueError):
    pass


class MessageTooLarge(SetForgeError, ValueError):
    pass


class MalformedCiphertext(SetForgeError, ValueError):
    pass


class AuthenticationFailed(SetForgeError):
    pass


class KeyFileError(SetForgeError, ValueError):
    pass


# blockcipher
class PaddingError(SetForgeError, ValueError):
    pass


# pki
class FieldError(SetForgeError, ValueError):
    pass


class FieldTooLong(FieldError):
    pass


class EmptyField(FieldError):
    pass


class MalformedCertificate(SetForgeError, ValueError):
    pass


# envelope
class WrongRecipient(SetForgeError):
    pass


class SignatureInvalid(SetForgeError):
    pass


class MalformedEnvelope(SetForgeError, ValueError):
    pass


# channel
class NoCommonStrength(SetForgeError):
    pass


class CertificateRejected(SetForgeError):
    pass


class MacFailure(SetForgeError):
    pass


class ReplayOrReorder(SetForgeError):
    pass


class BadLength(SetForgeError, ValueError):
    pass


class MalformedMessage(SetForgeError, ValueError):
    pass


# setflow
class DuplicateName(SetForgeError, ValueError):
    pass


class AmountMismatch(SetForgeError, ValueError):
    pass


class OrderIdMismatch(SetForgeError, ValueError):
    pass


class DuplicateOrder(SetForgeError):
    pass


class MalformedCard(SetForgeError, ValueError):
    pass


class CardUnknown(SetForgeError):
    pass


class CardExpired(SetForgeError):
    pass


class InsufficientFunds(SetForgeError):
    pass


class AmountDisagreement(SetForgeError):
    pass


class DuplicateAuthorization(SetForgeError):
    pass


class UnexpectedMessage(SetForgeError):
    pass


# cracker
class IndexOutOfRange(SetForgeError, ValueError):
    pass


class NotFound(SetForgeError):
    pass


class BadRate(SetForgeError, ValueError):
    pass
