import pytest
from hypothesis import given, strategies as st

import des_reference as ref
from setforge import blockcipher as bc
from setforge.errors import BadLength, MalformedCiphertext, PaddingError
from setforge.numtheory import SeededRng
from setforge.setflow import flip_bit

M64 = (1 << 64) - 1
KEY = 0x133457799BBCDFF1
PLAIN = 0x0123456789ABCDEF
CIPHER = 0x85E813540F0AB405


def random_bundle(rng):
    return bc.KeyBundle.from_bytes(rng.randbytes(24))


class TestDes:
    def test_known_answer(self):
        assert ref.encrypt(PLAIN, KEY) == CIPHER
        assert bc.des_encrypt_block(PLAIN, KEY) == CIPHER
        assert bc.des_decrypt_block(CIPHER, KEY) == PLAIN

    def test_second_published_vector(self):
        # "Now is t" under 0123456789ABCDEF
        assert bc.des_encrypt_block(0x4E6F772069732074, 0x0123456789ABCDEF) == 0x3FA40E8A984D4815

    def test_agrees_with_reference(self):
        rng = SeededRng(100)
        for _ in range(200):
            p, k = rng.randbits(64), rng.randbits(64)
            c = bc.des_encrypt_block(p, k)
            assert c == ref.encrypt(p, k)
            assert bc.des_decrypt_block(c, k) == ref.decrypt(c, k) == p

    def test_subkeys_agree_with_reference(self):
        rng = SeededRng(101)
        for _ in range(50):
            k = rng.randbits(64)
            want = tuple(int("".join(map(str, sk)), 2) for sk in ref.subkeys(k))
            assert bc.DesKey(k).subkeys == want
            assert bc.unpack_schedule(bc._slow_schedule(k)) == want

    def test_parity_bits_ignored(self):
        rng = SeededRng(102)
        for _ in range(50):
            p, k = rng.randbits(64), rng.randbits(64)
            assert bc.des_encrypt_block(p, k) == bc.des_encrypt_block(p, k ^ bc.PARITY_MASK)

    def test_complementation(self):
        rng = SeededRng(103)
        for _ in range(1000):
            p, k = rng.randbits(64), rng.randbits(64)
            assert bc.des_encrypt_block(p ^ M64, k ^ M64) == bc.des_encrypt_block(p, k) ^ M64

    def test_weak_key_is_an_involution(self):
        rng = SeededRng(104)
        weak = 0x0101010101010101
        for _ in range(100):
            p = rng.randbits(64)
            assert bc.des_encrypt_block(bc.des_encrypt_block(p, weak), weak) == p

    def test_roundtrip_and_wrong_key(self):
        rng = SeededRng(105)
        wrong = 0
        for _ in range(1000):
            p, k = rng.randbits(64), rng.randbits(64)
            c = bc.des_encrypt_block(p, k)
            assert bc.des_decrypt_block(c, k) == p
            wrong += bc.des_decrypt_block(c, k ^ (2 << 8 * rng.randbelow(8))) != p
        assert wrong >= 999

    def test_ip_fp_inverse(self):
        rng = SeededRng(106)
        for _ in range(100):
            x = rng.randbits(64)
            assert bc.final_permutation(bc.initial_permutation(x)) == x
            assert bc.initial_permutation(x) == bc.permute(x, bc.IP, 64)

    def test_key_bytes(self):
        key = bc.DesKey.from_bytes(bytes.fromhex("133457799bbcdff1"))
        assert key.raw == KEY and key.to_bytes().hex() == "133457799bbcdff1"
        with pytest.raises(BadLength):
            bc.DesKey.from_bytes(b"short")


class TestTdea:
    def test_equal_keys_collapse(self):
        rng = SeededRng(200)
        for _ in range(1000):
            k, p = rng.randbits(64), rng.randbits(64)
            assert bc.tdea_encrypt_block(p, bc.KeyBundle.single(bc.DesKey(k))) == bc.des_encrypt_block(p, k)

    def test_matches_reference_composition(self):
        rng = SeededRng(201)
        for _ in range(30):
            b = random_bundle(rng)
            p = rng.randbits(64)
            want = ref.encrypt(ref.decrypt(ref.encrypt(p, b.k1.raw), b.k2.raw), b.k3.raw)
            assert bc.tdea_encrypt_block(p, b) == want

    def test_roundtrip(self):
        rng = SeededRng(202)
        for _ in range(1000):
            b, p = random_bundle(rng), rng.randbits(64)
            assert bc.tdea_decrypt_block(bc.tdea_encrypt_block(p, b), b) == p

    def test_distinct_keys_differ_from_single(self):
        rng = SeededRng(203)
        b = random_bundle(rng)
        for _ in range(100):
            p = rng.randbits(64)
            assert bc.tdea_encrypt_block(p, b) != bc.des_encrypt_block(p, b.k1)

    def test_bundle_bytes(self):
        raw = bytes(range(24))
        assert bc.KeyBundle.from_bytes(raw).to_bytes() == raw
        with pytest.raises(BadLength):
            bc.KeyBundle.from_bytes(raw[:23])


class TestCbc:
    def test_padding_rule(self):
        assert bc.pad(b"1234567") == b"1234567\x01"
        assert bc.pad(b"12345678") == b"12345678" + b"\x08" * 8
        assert bc.pad(b"") == b"\x08" * 8

    @given(st.binary(max_size=64))
    def test_pad_unpad(self, msg):
        padded = bc.pad(msg)
        assert len(padded) % 8 == 0 and 1 <= len(padded) - len(msg) <= 8
        assert bc.unpad(padded) == msg

    @pytest.mark.parametrize("data", [b"", b"1234567", b"1234567\x00", b"1234567\x09",
                                      b"123456\x01\x02", b"1234\x04\x04\x03\x04"])
    def test_unpad_rejects(self, data):
        with pytest.raises(PaddingError):
            bc.unpad(data)

    def test_roundtrip_lengths(self):
        rng = SeededRng(300)
        b = random_bundle(rng)
        for n in range(258):
            msg = rng.randbytes(n)
            iv = rng.randbits(64)
            ct = bc.cbc_seal(msg, b, iv)
            assert len(ct) == (n // 8 + 1) * 8
            assert bc.cbc_open(ct, b, iv) == msg

    def test_padding_visible_after_raw_decrypt(self):
        b = random_bundle(SeededRng(301))
        ct = bc.cbc_seal(b"abcdefg", b, 5)
        assert len(ct) == 8
        assert bc.tdea_decrypt_block(int.from_bytes(ct, "big"), b) ^ 5 == int.from_bytes(b"abcdefg\x01", "big")
        ct = bc.cbc_seal(b"abcdefgh", b, 5)
        last = bc.tdea_decrypt_block(int.from_bytes(ct[8:], "big"), b) ^ int.from_bytes(ct[:8], "big")
        assert last == int.from_bytes(b"\x08" * 8, "big")

    def test_open_rejects_shapes(self):
        b = random_bundle(SeededRng(302))
        for bad in (b"", b"1234567"):
            with pytest.raises(MalformedCiphertext):
                bc.cbc_open(bad, b, 0)


class TestCbcMac:
    def test_deterministic(self):
        b = random_bundle(SeededRng(400))
        assert bc.cbc_mac(b"hello", b) == bc.cbc_mac(b"hello", b)

    def test_empty_message_unrolled(self):
        b = random_bundle(SeededRng(401))
        assert bc.cbc_mac(b"", b) == bc.tdea_encrypt_block(0, b)

    def test_bit_flips_change_mac(self):
        rng = SeededRng(402)
        b = random_bundle(rng)
        msg = rng.randbytes(40)
        tag = bc.cbc_mac(msg, b)
        changed = sum(bc.cbc_mac(flip_bit(msg, rng.randbelow(320)), b) != tag for _ in range(1000))
        assert changed >= 999

    def test_length_extension_closed(self):
        # the classic forgery m || (m xor tag) is valid for plain CBC-MAC
        b = random_bundle(SeededRng(403))
        m = b"8 bytes!"
        t = bc.tdea_encrypt_block(int.from_bytes(m, "big"), b)
        forged = m + (int.from_bytes(m, "big") ^ t).to_bytes(8, "big")
        assert bc.cbc_mac(forged, b) != t


class TestInvariants:
    def test_avalanche(self):
        rng = SeededRng(500)
        total = 0
        for _ in range(1000):
            p, k = rng.randbits(64), rng.randbits(64)
            flipped = p ^ (1 << rng.randbelow(64))
            total += bin(bc.des_encrypt_block(p, k) ^ bc.des_encrypt_block(flipped, k)).count("1")
        assert total / 1000 >= 20

    def test_exactly_eight_bits_ignored(self):
        assert bin(bc.PARITY_MASK).count("1") == 8 and bin(bc.KEY_MASK).count("1") == 56
        assert bc.KEYSPACE_SIZE == 72_057_594_037_927_936
        # every non-parity key bit reaches some subkey; no parity bit does
        for i in range(64):
            reaches = bc.packed_schedule(1 << i) != 0
            assert reaches == bool((1 << i) & bc.KEY_MASK)
