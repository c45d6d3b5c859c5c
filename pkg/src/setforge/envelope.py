"""Digital envelopes: sign, encrypt under a fresh TDEA bundle, wrap the bundle for the recipient.

Layout of the RSA-wrapped key block::

    b"SK" || 24-byte TDEA bundle || 8-byte copy of the IV

Textbook RSA decryption under the wrong private key does not fail, it just
yields noise.  The magic and the IV copy turn "this envelope was not
addressed to you" into a detectable error.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import rsa
from .blockcipher import KeyBundle, cbc_open, cbc_seal
from .errors import MalformedCiphertext, MalformedEnvelope, SignatureInvalid, WrongRecipient
from .numtheory import SeededRng
from .pki import Certificate
from .wire import Reader, field

ENVELOPE_MAGIC = b"ENV1"
KEY_BLOCK_MAGIC = b"SK"
KEY_BLOCK_LEN = 2 + 24 + 8


@dataclass(frozen=True)
class Envelope:
    sender_name: str
    wrapped_key: bytes
    iv: int
    body: bytes

    def to_bytes(self) -> bytes:
        return (ENVELOPE_MAGIC + field(self.sender_name.encode("utf-8"))
                + field(self.wrapped_key) + self.iv.to_bytes(8, "big") + field(self.body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        r = Reader(data, MalformedEnvelope)
        if r.fixed(4) != ENVELOPE_MAGIC:
            raise MalformedEnvelope("bad envelope magic")
        sender = r.text()
        wrapped = r.field()
        iv = int.from_bytes(r.fixed(8), "big")
        body = r.field()
        r.done()
        if not body or len(body) % 8:
            raise MalformedEnvelope("body must be a positive multiple of 8 bytes")
        return cls(sender, wrapped, iv, body)


def seal(msg: bytes, sender_name: str, sender_key: rsa.RsaPrivateKey,
         recipient_cert: Certificate, rng: SeededRng) -> Envelope:
    """Seal ``msg`` for the subject of ``recipient_cert``.

    The caller is expected to have verified ``recipient_cert`` already.
    """
    payload = rsa.sign_message(msg, sender_key)
    bundle_bytes = rng.randbytes(24)
    iv_bytes = rng.randbytes(8)
    iv = int.from_bytes(iv_bytes, "big")
    body = cbc_seal(payload, KeyBundle.from_bytes(bundle_bytes), iv)
    key_block = KEY_BLOCK_MAGIC + bundle_bytes + iv_bytes
    wrapped = rsa.encrypt_message(key_block, recipient_cert.subject_public_key)
    return Envelope(sender_name, wrapped, iv, body)


def unwrap_key(env: Envelope, recipient_key: rsa.RsaPrivateKey) -> KeyBundle:
    try:
        block = rsa.decrypt_message(env.wrapped_key, recipient_key)
    except MalformedCiphertext as exc:
        raise WrongRecipient("key block does not decrypt under this key") from exc
    if (len(block) != KEY_BLOCK_LEN or block[:2] != KEY_BLOCK_MAGIC
            or block[26:] != env.iv.to_bytes(8, "big")):
        raise WrongRecipient("key block magic or IV check failed")
    return KeyBundle.from_bytes(block[2:26])


def open_envelope(env: Envelope, recipient_key: rsa.RsaPrivateKey,
                  sender_cert: Certificate) -> bytes:
    """Unwrap, decrypt and check the sender's signature; returns the message."""
    bundle = unwrap_key(env, recipient_key)
    payload = cbc_open(env.body, bundle, env.iv)
    if env.sender_name != sender_cert.subject_name:
        raise SignatureInvalid(
            f"envelope claims sender {env.sender_name!r}, certificate is for {sender_cert.subject_name!r}")
    return rsa.verify_message(payload, sender_cert.subject_public_key)
