"""Textbook RSA: key generation, residue operations and a block scheme for byte strings.

There is deliberately no padding.  Textbook RSA is deterministic and
multiplicative (E(a) * E(b) = E(a*b mod n)), which is exactly why deployed
systems use OAEP/PSS; this module keeps the bare construction so that each
step stays visible.

Byte strings are cut into blocks that encode as
``[length byte][payload][zero fill]`` in ``k - 1`` bytes, where ``k`` is the
modulus byte length.  The encoded value is therefore always below ``n``, and
each transformed block is written back as exactly ``k`` bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from pathlib import Path

from .errors import (
    AuthenticationFailed,
    BadParameters,
    KeyFileError,
    MalformedCiphertext,
    MessageTooLarge,
    SetForgeError,
    SignatureInvalid,
)
from .numtheory import SeededRng, byte_length, gen_prime, is_probable_prime, mod_inverse, mod_pow

DEFAULT_BITS = 512
DEFAULT_E = 17
KEY_FILE_MAGIC = "setforge-key v1"


@dataclass(frozen=True)
class RsaPublicKey:
    n: int
    e: int

    def __post_init__(self):
        if not 1 < self.e < self.n or self.e % 2 == 0:
            raise BadParameters("public exponent must be odd with 1 < e < n")

    @property
    def byte_len(self) -> int:
        return byte_length(self.n)


@dataclass(frozen=True)
class RsaPrivateKey:
    n: int
    d: int
    p: int
    q: int

    def __post_init__(self):
        if self.p == self.q or self.p * self.q != self.n:
            raise BadParameters("private key needs n = p*q with p != q")

    @property
    def byte_len(self) -> int:
        return byte_length(self.n)

    @property
    def phi(self) -> int:
        return (self.p - 1) * (self.q - 1)

    def public_key(self) -> RsaPublicKey:
        """Recover the paired public key (e = d^-1 mod phi)."""
        return RsaPublicKey(self.n, mod_inverse(self.d, self.phi))


@dataclass(frozen=True)
class RsaKeyPair:
    public: RsaPublicKey
    private: RsaPrivateKey


def keypair_from_primes(p: int, q: int, e: int = DEFAULT_E) -> RsaKeyPair:
    check = SeededRng(p ^ q)
    if p == q:
        raise BadParameters("p and q must differ")
    if not (is_probable_prime(p, 40, check) and is_probable_prime(q, 40, check)):
        raise BadParameters("p and q must be prime")
    phi = (p - 1) * (q - 1)
    if e < 3 or gcd(e, phi) != 1:
        raise BadParameters(f"e={e} is not invertible modulo phi={phi}")
    n = p * q
    d = mod_inverse(e, phi)
    return RsaKeyPair(RsaPublicKey(n, e), RsaPrivateKey(n, d, p, q))


def generate_keypair(bits: int = DEFAULT_BITS, e: int = DEFAULT_E,
                     rng: SeededRng | None = None) -> RsaKeyPair:
    if bits < 16 or bits % 2:
        raise BadParameters("key size must be an even number of bits, at least 16")
    if e < 3 or e % 2 == 0:
        raise BadParameters("public exponent must be odd and at least 3")
    if rng is None:
        rng = SeededRng()
    half = bits // 2
    while True:
        p = gen_prime(half, rng)
        q = gen_prime(half, rng)
        if p != q and gcd(e, (p - 1) * (q - 1)) == 1:
            return keypair_from_primes(p, q, e)


# -- residue operations ------------------------------------------------------

def _check_residue(m: int, n: int) -> None:
    if not 0 <= m < n:
        raise MessageTooLarge("residue must lie in [0, n)")


def encrypt_residue(m: int, key: RsaPublicKey) -> int:
    """Encryption path: m^e mod n."""
    _check_residue(m, key.n)
    return mod_pow(m, key.e, key.n)


def decrypt_residue(c: int, key: RsaPrivateKey) -> int:
    _check_residue(c, key.n)
    return mod_pow(c, key.d, key.n)


def sign_residue(m: int, key: RsaPrivateKey) -> int:
    """Authentication path: m^d mod n."""
    _check_residue(m, key.n)
    return mod_pow(m, key.d, key.n)


def verify_residue(s: int, key: RsaPublicKey) -> int:
    """Returns s^e mod n; a signature is valid when this recovers the message."""
    _check_residue(s, key.n)
    return mod_pow(s, key.e, key.n)


# -- block scheme ------------------------------------------------------------

def block_capacity(n: int) -> int:
    """Payload bytes per block for modulus n."""
    cap = min(byte_length(n) - 2, 255)
    if cap < 1:
        raise BadParameters("modulus too small for the block scheme (needs at least 3 bytes)")
    return cap


def _transform(msg: bytes, exp: int, n: int) -> bytes:
    k = byte_length(n)
    cap = block_capacity(n)
    out = bytearray()
    for i in range(0, len(msg), cap):
        chunk = msg[i:i + cap]
        encoded = bytes([len(chunk)]) + chunk + bytes(cap - len(chunk))
        # cap + 1 <= k - 1 bytes, so the value is below n
        m = int.from_bytes(encoded, "big")
        out += pow(m, exp, n).to_bytes(k, "big")
    return bytes(out)


def _untransform(data: bytes, exp: int, n: int) -> bytes:
    k = byte_length(n)
    cap = block_capacity(n)
    if len(data) % k:
        raise MalformedCiphertext(f"length {len(data)} is not a multiple of {k}")
    nblocks = len(data) // k
    out = bytearray()
    for b in range(nblocks):
        c = int.from_bytes(data[b * k:(b + 1) * k], "big")
        if c >= n:
            raise MalformedCiphertext("block value is not below the modulus")
        m = pow(c, exp, n)
        if m >> (8 * (cap + 1)):
            raise MalformedCiphertext("decoded block overflows its frame")
        encoded = m.to_bytes(cap + 1, "big")
        length = encoded[0]
        last = b == nblocks - 1
        if not 1 <= length <= cap or (not last and length != cap):
            raise MalformedCiphertext("bad length byte")
        if any(encoded[1 + length:]):
            raise MalformedCiphertext("non-zero fill")
        out += encoded[1:1 + length]
    return bytes(out)


def encrypt_message(msg: bytes, key: RsaPublicKey) -> bytes:
    return _transform(msg, key.e, key.n)


def decrypt_message(ct: bytes, key: RsaPrivateKey) -> bytes:
    return _untransform(ct, key.d, key.n)


def sign_message(msg: bytes, key: RsaPrivateKey) -> bytes:
    """Blockwise signature with message recovery."""
    return _transform(msg, key.d, key.n)


def verify_message(sig: bytes, key: RsaPublicKey) -> bytes:
    """Recover the signed message, raising SignatureInvalid if it is not well formed."""
    try:
        return _untransform(sig, key.e, key.n)
    except MalformedCiphertext as exc:
        raise SignatureInvalid(str(exc)) from exc


def sign_then_encrypt(msg: bytes, sender: RsaPrivateKey, recipient: RsaPublicKey) -> bytes:
    """Encrypt for the recipient, then sign the ciphertext bytes.

    The inner ciphertext is re-blocked for the sender's modulus, so the two
    moduli may have any sizes.
    """
    return sign_message(encrypt_message(msg, recipient), sender)


def decrypt_then_verify(blob: bytes, recipient: RsaPrivateKey, sender: RsaPublicKey) -> bytes:
    try:
        inner = verify_message(blob, sender)
        return decrypt_message(inner, recipient)
    except SetForgeError as exc:
        raise AuthenticationFailed(f"{exc.name}: {exc}") from exc


# -- key files ---------------------------------------------------------------

def dump_key(key: RsaPublicKey | RsaPrivateKey) -> str:
    if isinstance(key, RsaPublicKey):
        fields = [("n", key.n), ("e", key.e)]
        kind = "public"
    else:
        fields = [("n", key.n), ("d", key.d), ("p", key.p), ("q", key.q)]
        kind = "private"
    lines = [KEY_FILE_MAGIC, f"kind={kind}"] + [f"{k}={v:x}" for k, v in fields]
    return "\n".join(lines) + "\n"


def load_key(text: str) -> RsaPublicKey | RsaPrivateKey:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2 or lines[0] != KEY_FILE_MAGIC:
        raise KeyFileError("missing key file header")
    expected = {"kind=public": ("n", "e"), "kind=private": ("n", "d", "p", "q")}
    if lines[1] not in expected:
        raise KeyFileError(f"unknown line: {lines[1]!r}")
    names = expected[lines[1]]
    if len(lines) - 2 != len(names):
        raise KeyFileError("wrong number of fields")
    values = []
    for name, line in zip(names, lines[2:]):
        prefix = name + "="
        digits = line[len(prefix):]
        if (not line.startswith(prefix) or not digits
                or any(ch not in "0123456789abcdef" for ch in digits)):
            raise KeyFileError(f"unknown line: {line!r}")
        values.append(int(digits, 16))
    try:
        if len(values) == 2:
            return RsaPublicKey(*values)
        return RsaPrivateKey(*values)
    except BadParameters as exc:
        raise KeyFileError(str(exc)) from exc


def save_key(key, path) -> None:
    Path(path).write_text(dump_key(key), newline="\n")


def read_key(path) -> RsaPublicKey | RsaPrivateKey:
    return load_key(Path(path).read_text())


def as_public(key: RsaPublicKey | RsaPrivateKey) -> RsaPublicKey:
    return key if isinstance(key, RsaPublicKey) else key.public_key()
