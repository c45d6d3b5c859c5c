"""SSL-style handshake and record layer over the package's own primitives.

The handshake is three messages::

    client -> server  HELO  allowed strengths, client name
    server -> client  SHLO  chosen strength, server certificate
    client -> server  CKEX  session key wrapped under the certified server key

The session key is ``strength / 8`` random bytes; export-grade sessions
are weak because the key has 40 bits of entropy, not because of the
cipher.  Both directions use TDEA-CBC bundles derived from it plus a
length-prefixed CBC-MAC.

Sequence numbers on the wire carry a direction flag in the top bit
(set for server-to-client records) so a record cannot be reflected back
to its sender.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from . import rsa
from .blockcipher import ZERO_BUNDLE, DesKey, KeyBundle, cbc_mac, cbc_open, cbc_seal
from .errors import (
    BadLength,
    CertificateRejected,
    MacFailure,
    MalformedMessage,
    NoCommonStrength,
    ReplayOrReorder,
    SetForgeError,
)
from .numtheory import SeededRng
from .pki import Certificate, verify_certificate
from .wire import Reader, field, u64

EXPORT = "export"
DOMESTIC = "domestic"
STRENGTHS = frozenset({40, 128})
SERVER_DIRECTION = 1 << 63
SESSION_MATERIAL_LEN = 16


@dataclass(frozen=True)
class StrengthPolicy:
    allowed: frozenset
    jurisdiction: str = DOMESTIC

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        if self.jurisdiction not in (EXPORT, DOMESTIC):
            raise ValueError(f"unknown jurisdiction {self.jurisdiction!r}")
        if not self.allowed <= STRENGTHS:
            raise ValueError(f"strengths must be drawn from {sorted(STRENGTHS)}")
        if self.jurisdiction == EXPORT and not self.allowed <= {40}:
            raise ValueError("export policy permits 40-bit session keys only")

    @classmethod
    def export(cls) -> "StrengthPolicy":
        return cls(frozenset({40}), EXPORT)

    @classmethod
    def domestic(cls) -> "StrengthPolicy":
        return cls(frozenset({40, 128}), DOMESTIC)


@dataclass
class SessionState:
    strength: int
    enc_bundle: KeyBundle
    mac_bundle: KeyBundle
    peer_name: str
    is_server: bool = False
    send_seq: int = 0
    recv_seq: int = 0

    def outgoing_seq(self) -> int:
        return self.send_seq | (SERVER_DIRECTION if self.is_server else 0)

    def expected_seq(self) -> int:
        return self.recv_seq | (0 if self.is_server else SERVER_DIRECTION)


@dataclass(frozen=True)
class Record:
    seq: int
    iv: int
    ct: bytes
    mac: int

    def to_bytes(self) -> bytes:
        return (u64(self.seq) + u64(self.iv) + len(self.ct).to_bytes(4, "big")
                + self.ct + u64(self.mac))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Record":
        r = Reader(data)
        seq = r.u64()
        iv = r.u64()
        ct = r.field()
        mac = r.u64()
        r.done()
        return cls(seq, iv, ct, mac)


@dataclass(frozen=True)
class ClientConfig:
    trusted_ca: rsa.RsaPublicKey
    allowed: frozenset = dc_field(default_factory=lambda: frozenset({40, 128}))
    name: str = "client"
    expected_server: str | None = None


@dataclass(frozen=True)
class ServerConfig:
    cert: Certificate
    keypair: rsa.RsaKeyPair
    policy: StrengthPolicy


def negotiate(client_allowed, server_policy: StrengthPolicy) -> int:
    """Strongest strength both sides allow."""
    common = frozenset(client_allowed) & server_policy.allowed
    if not common:
        raise NoCommonStrength(
            f"client offers {sorted(client_allowed)}, server allows {sorted(server_policy.allowed)}")
    return max(common)


def derive_bundles(session_key: bytes, strength: int) -> tuple[KeyBundle, KeyBundle]:
    """Expand a session key into (encryption, MAC) bundles.

    Key i is cbc_mac(material || i || strength) under the all-zero bundle,
    where material is the session key zero-extended to 16 bytes.  The
    strength byte keeps a 40-bit key apart from a 128-bit key that happens
    to share its prefix and end in zeros.
    """
    if strength % 8 or not 8 <= strength <= 8 * SESSION_MATERIAL_LEN:
        raise BadLength(f"unsupported strength {strength}")
    if len(session_key) != strength // 8:
        raise BadLength(f"{strength}-bit session key must be {strength // 8} bytes, got {len(session_key)}")
    material = session_key + bytes(SESSION_MATERIAL_LEN - len(session_key))
    keys = [DesKey(cbc_mac(material + bytes([label, strength]), ZERO_BUNDLE))
            for label in range(1, 7)]
    return KeyBundle(*keys[:3]), KeyBundle(*keys[3:])


def _mac_input(seq: int, iv: int, ct: bytes) -> bytes:
    return u64(seq) + u64(iv) + ct


def seal_record(state: SessionState, msg: bytes, rng: SeededRng) -> Record:
    iv = rng.randbits(64)
    ct = cbc_seal(msg, state.enc_bundle, iv)
    seq = state.outgoing_seq()
    mac = cbc_mac(_mac_input(seq, iv, ct), state.mac_bundle)
    state.send_seq += 1
    return Record(seq, iv, ct, mac)


def open_record(state: SessionState, record: Record) -> bytes:
    if cbc_mac(_mac_input(record.seq, record.iv, record.ct), state.mac_bundle) != record.mac:
        raise MacFailure("record MAC does not verify")
    if record.seq != state.expected_seq():
        raise ReplayOrReorder(f"expected sequence {state.expected_seq():#x}, got {record.seq:#x}")
    try:
        msg = cbc_open(record.ct, state.enc_bundle, record.iv)
    except SetForgeError as exc:
        raise MacFailure(f"authenticated record failed to decrypt: {exc}") from exc
    state.recv_seq += 1
    return msg


# -- handshake ---------------------------------------------------------------

def _client_hello(cfg: ClientConfig) -> bytes:
    return b"HELO" + field(bytes(sorted(cfg.allowed))) + field(cfg.name.encode("utf-8"))


def _parse_client_hello(data: bytes) -> tuple[frozenset, str]:
    r = Reader(data)
    if r.fixed(4) != b"HELO":
        raise MalformedMessage("expected HELO")
    allowed = frozenset(r.field())
    name = r.text()
    r.done()
    return allowed, name


def _server_hello(strength: int, cert: Certificate) -> bytes:
    return b"SHLO" + bytes([strength]) + field(cert.to_bytes())


def _parse_server_hello(data: bytes) -> tuple[int, Certificate]:
    r = Reader(data)
    if r.fixed(4) != b"SHLO":
        raise MalformedMessage("expected SHLO")
    strength = r.fixed(1)[0]
    try:
        cert = Certificate.from_bytes(r.field())
    except SetForgeError as exc:
        raise CertificateRejected(f"unparseable certificate: {exc}") from exc
    r.done()
    return strength, cert


def perform_handshake(client: ClientConfig, server: ServerConfig, rng: SeededRng,
                      transcript: list | None = None) -> tuple[SessionState, SessionState]:
    """Run the three-message handshake in-process; returns (client_state, server_state).

    Every message is appended to ``transcript`` when one is given, which is
    what a passive observer would see.
    """
    sent = transcript if transcript is not None else []

    hello = _client_hello(client)
    sent.append(hello)
    offered, client_name = _parse_client_hello(hello)
    strength = negotiate(offered, server.policy)

    server_hello = _server_hello(strength, server.cert)
    sent.append(server_hello)
    strength, cert = _parse_server_hello(server_hello)
    if not verify_certificate(cert, client.trusted_ca):
        raise CertificateRejected(f"certificate for {cert.subject_name!r} does not verify")
    if client.expected_server is not None and cert.subject_name != client.expected_server:
        raise CertificateRejected(
            f"expected server {client.expected_server!r}, certificate names {cert.subject_name!r}")
    if strength not in client.allowed:
        raise NoCommonStrength(f"server chose {strength} bits, which the client does not allow")

    session_key = rng.randbytes(strength // 8)
    kex = b"CKEX" + field(rsa.encrypt_message(session_key, cert.subject_public_key))
    sent.append(kex)

    r = Reader(kex)
    if r.fixed(4) != b"CKEX":
        raise MalformedMessage("expected CKEX")
    wrapped = r.field()
    r.done()
    server_key = rsa.decrypt_message(wrapped, server.keypair.private)
    if len(server_key) != strength // 8:
        raise MalformedMessage("session key length does not match the negotiated strength")

    c_enc, c_mac = derive_bundles(session_key, strength)
    s_enc, s_mac = derive_bundles(server_key, strength)
    client_state = SessionState(strength, c_enc, c_mac, cert.subject_name, is_server=False)
    server_state = SessionState(strength, s_enc, s_mac, client_name, is_server=True)
    return client_state, server_state
