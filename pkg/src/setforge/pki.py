"""A one-level toy certification authority.

A certificate binds a subject name to an RSA public key.  The CA signs the
canonical encoding of (subject, issuer, n, e) with the blockwise
message-recovery signature from :mod:`setforge.rsa`; verification recovers
the signed bytes and compares them with a fresh encoding.  There is no
digest, no expiry and no chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import rsa
from .errors import EmptyField, FieldTooLong, MalformedCertificate, SetForgeError
from .numtheory import SeededRng, bytes_to_int, int_to_bytes
from .wire import Reader, field

CERT_MAGIC = b"SFC1"
MAX_NAME_BYTES = 255


def _name_bytes(name: str) -> bytes:
    raw = name.encode("utf-8")
    if not raw:
        raise EmptyField("names must be non-empty")
    if len(raw) > MAX_NAME_BYTES:
        raise FieldTooLong(f"name is {len(raw)} bytes, limit {MAX_NAME_BYTES}")
    return raw


def canonical_cert_bytes(subject_name: str, subject_public_key: rsa.RsaPublicKey,
                         issuer_name: str) -> bytes:
    return (field(_name_bytes(subject_name))
            + field(_name_bytes(issuer_name))
            + field(int_to_bytes(subject_public_key.n))
            + field(int_to_bytes(subject_public_key.e)))


@dataclass(frozen=True)
class Certificate:
    subject_name: str
    subject_public_key: rsa.RsaPublicKey
    issuer_name: str
    signature: bytes

    def canonical_bytes(self) -> bytes:
        return canonical_cert_bytes(self.subject_name, self.subject_public_key, self.issuer_name)

    def to_bytes(self) -> bytes:
        return CERT_MAGIC + self.canonical_bytes() + field(self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        r = Reader(data, MalformedCertificate)
        if r.fixed(4) != CERT_MAGIC:
            raise MalformedCertificate("bad certificate magic")
        subject = r.text()
        issuer = r.text()
        n = bytes_to_int(r.field())
        e = bytes_to_int(r.field())
        signature = r.field()
        r.done()
        try:
            key = rsa.RsaPublicKey(n, e)
            _name_bytes(subject)
            _name_bytes(issuer)
        except SetForgeError as exc:
            raise MalformedCertificate(str(exc)) from exc
        return cls(subject, key, issuer, signature)


@dataclass(frozen=True)
class CertificationAuthority:
    name: str
    keypair: rsa.RsaKeyPair

    def __post_init__(self):
        _name_bytes(self.name)

    @classmethod
    def create(cls, name: str, rng: SeededRng, bits: int = rsa.DEFAULT_BITS) -> "CertificationAuthority":
        return cls(name, rsa.generate_keypair(bits, rsa.DEFAULT_E, rng))

    @property
    def public(self) -> rsa.RsaPublicKey:
        return self.keypair.public


def issue_certificate(ca: CertificationAuthority, subject_name: str,
                      subject_public_key: rsa.RsaPublicKey) -> Certificate:
    body = canonical_cert_bytes(subject_name, subject_public_key, ca.name)
    return Certificate(subject_name, subject_public_key, ca.name,
                       rsa.sign_message(body, ca.keypair.private))


def verify_certificate(cert: Certificate, issuer_public: rsa.RsaPublicKey) -> bool:
    try:
        expected = cert.canonical_bytes()
        recovered = rsa.verify_message(cert.signature, issuer_public)
    except SetForgeError:
        return False
    return recovered == expected
