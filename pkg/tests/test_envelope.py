import dataclasses

import pytest

from setforge.envelope import Envelope, open_envelope, seal, unwrap_key
from setforge.errors import (
    MalformedEnvelope, PaddingError, SignatureInvalid, WrongRecipient,
)
from setforge.numtheory import SeededRng
from setforge.setflow import flip_bit


@pytest.fixture(scope="module")
def ab(pki_world):
    _, parties = pki_world
    return parties["alice"], parties["bob"], parties["carol"]


def test_roundtrip_lengths(ab):
    (a_kp, a_cert), (b_kp, b_cert), _ = ab
    rng = SeededRng(1)
    for n in (0, 1, 7, 8, 61, 62, 63, 200, 1000):
        msg = rng.randbytes(n)
        env = seal(msg, "alice", a_kp.private, b_cert, rng)
        assert open_envelope(Envelope.from_bytes(env.to_bytes()), b_kp.private, a_cert) == msg


def test_fresh_key_per_seal(ab):
    (a_kp, _), (_, b_cert), _ = ab
    one = seal(b"same", "alice", a_kp.private, b_cert, SeededRng(1))
    two = seal(b"same", "alice", a_kp.private, b_cert, SeededRng(2))
    assert one.body != two.body and one.wrapped_key != two.wrapped_key
    assert seal(b"same", "alice", a_kp.private, b_cert, SeededRng(1)) == one


def test_wrong_recipient(ab):
    (a_kp, a_cert), (_, b_cert), (c_kp, _) = ab
    rng = SeededRng(3)
    for _ in range(20):
        env = seal(rng.randbytes(30), "alice", a_kp.private, b_cert, rng)
        with pytest.raises(WrongRecipient):
            open_envelope(env, c_kp.private, a_cert)


def test_wrong_sender_cert(ab):
    (a_kp, _), (b_kp, b_cert), (_, c_cert) = ab
    env = seal(b"hello", "alice", a_kp.private, b_cert, SeededRng(4))
    with pytest.raises(SignatureInvalid):
        open_envelope(env, b_kp.private, c_cert)


def test_claimed_sender_must_match_cert(ab):
    (a_kp, a_cert), (b_kp, b_cert), _ = ab
    env = seal(b"hello", "mallory", a_kp.private, b_cert, SeededRng(5))
    with pytest.raises(SignatureInvalid):
        open_envelope(env, b_kp.private, a_cert)


def test_body_bit_flips(ab):
    (a_kp, a_cert), (b_kp, b_cert), _ = ab
    rng = SeededRng(6)
    env = seal(rng.randbytes(100), "alice", a_kp.private, b_cert, rng)
    for _ in range(100):
        bad = dataclasses.replace(env, body=flip_bit(env.body, rng.randbelow(8 * len(env.body))))
        with pytest.raises((PaddingError, SignatureInvalid)):
            open_envelope(bad, b_kp.private, a_cert)


def test_wrapped_key_and_iv_flips(ab):
    (a_kp, a_cert), (b_kp, b_cert), _ = ab
    rng = SeededRng(7)
    env = seal(b"pay 5", "alice", a_kp.private, b_cert, rng)
    for _ in range(30):
        bad = dataclasses.replace(env, wrapped_key=flip_bit(env.wrapped_key, rng.randbelow(512)))
        with pytest.raises(WrongRecipient):
            unwrap_key(bad, b_kp.private)
    with pytest.raises(WrongRecipient):
        unwrap_key(dataclasses.replace(env, iv=env.iv ^ 1), b_kp.private)


def test_parse_errors():
    for data in (b"", b"ENV1", b"XXXX" + bytes(20), b"ENV1" + bytes(4) + bytes(4) + bytes(8) + bytes(4)):
        with pytest.raises(MalformedEnvelope):
            Envelope.from_bytes(data)


def test_key_wrap_is_one_rsa_block(ab):
    # bulk confidentiality is symmetric: the RSA-wrapped part never grows with the message
    (a_kp, _), (b_kp, b_cert), _ = ab
    rng = SeededRng(8)
    for n in (0, 1024, 16 * 1024):
        env = seal(rng.randbytes(n), "alice", a_kp.private, b_cert, rng)
        assert len(env.wrapped_key) == b_kp.public.byte_len
        assert len(env.body) > n


def test_marker_absent(ab):
    (a_kp, _), (_, b_cert), _ = ab
    rng = SeededRng(9)
    for i in range(100):
        marker = b"SECRET-MARKER-%03d" % i
        msg = rng.randbytes(rng.randbelow(40)) + marker + rng.randbytes(rng.randbelow(40))
        assert marker not in seal(msg, "alice", a_kp.private, b_cert, rng).to_bytes()
