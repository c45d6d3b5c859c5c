"""DES, Triple-DES (EDE) and CBC helpers.

Blocks and keys are plain 64-bit ints, most significant bit = bit 1 in the
FIPS 46-3 numbering.  The permutation tables below are the standard ones;
at import time they are folded into byte-indexed lookup tables so that a
block costs a few dozen table lookups instead of hundreds of bit moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import BadLength, MalformedCiphertext, PaddingError

BLOCK_SIZE = 8
M32 = 0xFFFFFFFF
M48 = (1 << 48) - 1
M64 = (1 << 64) - 1
PARITY_MASK = 0x0101010101010101
KEY_MASK = M64 ^ PARITY_MASK
EFFECTIVE_KEY_BITS = 56
KEYSPACE_SIZE = 1 << EFFECTIVE_KEY_BITS

# -- FIPS 46-3 tables (1-based bit positions, MSB first) ---------------------

IP = (
    58, 50, 42, 34, 26, 18, 10, 2,
    60, 52, 44, 36, 28, 20, 12, 4,
    62, 54, 46, 38, 30, 22, 14, 6,
    64, 56, 48, 40, 32, 24, 16, 8,
    57, 49, 41, 33, 25, 17, 9, 1,
    59, 51, 43, 35, 27, 19, 11, 3,
    61, 53, 45, 37, 29, 21, 13, 5,
    63, 55, 47, 39, 31, 23, 15, 7,
)

FP = (
    40, 8, 48, 16, 56, 24, 64, 32,
    39, 7, 47, 15, 55, 23, 63, 31,
    38, 6, 46, 14, 54, 22, 62, 30,
    37, 5, 45, 13, 53, 21, 61, 29,
    36, 4, 44, 12, 52, 20, 60, 28,
    35, 3, 43, 11, 51, 19, 59, 27,
    34, 2, 42, 10, 50, 18, 58, 26,
    33, 1, 41, 9, 49, 17, 57, 25,
)

E = (
    32, 1, 2, 3, 4, 5,
    4, 5, 6, 7, 8, 9,
    8, 9, 10, 11, 12, 13,
    12, 13, 14, 15, 16, 17,
    16, 17, 18, 19, 20, 21,
    20, 21, 22, 23, 24, 25,
    24, 25, 26, 27, 28, 29,
    28, 29, 30, 31, 32, 1,
)

P = (
    16, 7, 20, 21, 29, 12, 28, 17,
    1, 15, 23, 26, 5, 18, 31, 10,
    2, 8, 24, 14, 32, 27, 3, 9,
    19, 13, 30, 6, 22, 11, 4, 25,
)

PC1 = (
    57, 49, 41, 33, 25, 17, 9,
    1, 58, 50, 42, 34, 26, 18,
    10, 2, 59, 51, 43, 35, 27,
    19, 11, 3, 60, 52, 44, 36,
    63, 55, 47, 39, 31, 23, 15,
    7, 62, 54, 46, 38, 30, 22,
    14, 6, 61, 53, 45, 37, 29,
    21, 13, 5, 28, 20, 12, 4,
)

PC2 = (
    14, 17, 11, 24, 1, 5,
    3, 28, 15, 6, 21, 10,
    23, 19, 12, 4, 26, 8,
    16, 7, 27, 20, 13, 2,
    41, 52, 31, 37, 47, 55,
    30, 40, 51, 45, 33, 48,
    44, 49, 39, 56, 34, 53,
    46, 42, 50, 36, 29, 32,
)

ROTATIONS = (1, 1, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 2, 2, 1)

SBOXES = (
    (
        (14, 4, 13, 1, 2, 15, 11, 8, 3, 10, 6, 12, 5, 9, 0, 7),
        (0, 15, 7, 4, 14, 2, 13, 1, 10, 6, 12, 11, 9, 5, 3, 8),
        (4, 1, 14, 8, 13, 6, 2, 11, 15, 12, 9, 7, 3, 10, 5, 0),
        (15, 12, 8, 2, 4, 9, 1, 7, 5, 11, 3, 14, 10, 0, 6, 13),
    ),
    (
        (15, 1, 8, 14, 6, 11, 3, 4, 9, 7, 2, 13, 12, 0, 5, 10),
        (3, 13, 4, 7, 15, 2, 8, 14, 12, 0, 1, 10, 6, 9, 11, 5),
        (0, 14, 7, 11, 10, 4, 13, 1, 5, 8, 12, 6, 9, 3, 2, 15),
        (13, 8, 10, 1, 3, 15, 4, 2, 11, 6, 7, 12, 0, 5, 14, 9),
    ),
    (
        (10, 0, 9, 14, 6, 3, 15, 5, 1, 13, 12, 7, 11, 4, 2, 8),
        (13, 7, 0, 9, 3, 4, 6, 10, 2, 8, 5, 14, 12, 11, 15, 1),
        (13, 6, 4, 9, 8, 15, 3, 0, 11, 1, 2, 12, 5, 10, 14, 7),
        (1, 10, 13, 0, 6, 9, 8, 7, 4, 15, 14, 3, 11, 5, 2, 12),
    ),
    (
        (7, 13, 14, 3, 0, 6, 9, 10, 1, 2, 8, 5, 11, 12, 4, 15),
        (13, 8, 11, 5, 6, 15, 0, 3, 4, 7, 2, 12, 1, 10, 14, 9),
        (10, 6, 9, 0, 12, 11, 7, 13, 15, 1, 3, 14, 5, 2, 8, 4),
        (3, 15, 0, 6, 10, 1, 13, 8, 9, 4, 5, 11, 12, 7, 2, 14),
    ),
    (
        (2, 12, 4, 1, 7, 10, 11, 6, 8, 5, 3, 15, 13, 0, 14, 9),
        (14, 11, 2, 12, 4, 7, 13, 1, 5, 0, 15, 10, 3, 9, 8, 6),
        (4, 2, 1, 11, 10, 13, 7, 8, 15, 9, 12, 5, 6, 3, 0, 14),
        (11, 8, 12, 7, 1, 14, 2, 13, 6, 15, 0, 9, 10, 4, 5, 3),
    ),
    (
        (12, 1, 10, 15, 9, 2, 6, 8, 0, 13, 3, 4, 14, 7, 5, 11),
        (10, 15, 4, 2, 7, 12, 9, 5, 6, 1, 13, 14, 0, 11, 3, 8),
        (9, 14, 15, 5, 2, 8, 12, 3, 7, 0, 4, 10, 1, 13, 11, 6),
        (4, 3, 2, 12, 9, 5, 15, 10, 11, 14, 1, 7, 6, 0, 8, 13),
    ),
    (
        (4, 11, 2, 14, 15, 0, 8, 13, 3, 12, 9, 7, 5, 10, 6, 1),
        (13, 0, 11, 7, 4, 9, 1, 10, 14, 3, 5, 12, 2, 15, 8, 6),
        (1, 4, 11, 13, 12, 3, 7, 14, 10, 15, 6, 8, 0, 5, 9, 2),
        (6, 11, 13, 8, 1, 4, 10, 7, 9, 5, 0, 15, 14, 2, 3, 12),
    ),
    (
        (13, 2, 8, 4, 6, 15, 11, 1, 10, 9, 3, 14, 5, 0, 12, 7),
        (1, 15, 13, 8, 10, 3, 7, 4, 12, 5, 6, 11, 0, 14, 9, 2),
        (7, 11, 4, 1, 9, 12, 14, 2, 0, 6, 10, 13, 15, 3, 5, 8),
        (2, 1, 14, 7, 4, 10, 8, 13, 15, 12, 9, 0, 3, 5, 6, 11),
    ),
)


def permute(value: int, table, in_bits: int) -> int:
    """Bit-selection: output bit i takes input bit table[i] (both MSB-first)."""
    out = 0
    for pos in table:
        out = (out << 1) | ((value >> (in_bits - pos)) & 1)
    return out


def _byte_tables(table, in_bits: int):
    """Split a bit permutation into per-input-byte lookup tables."""
    nbytes = in_bits // 8
    return tuple(
        tuple(permute(b << (8 * (nbytes - 1 - j)), table, in_bits) for b in range(256))
        for j in range(nbytes)
    )


def _sbox(n: int, six: int) -> int:
    row = ((six >> 4) & 2) | (six & 1)
    col = (six >> 1) & 0xF
    return SBOXES[n][row][col]


def _sp_pair_table(pair: int):
    """S-boxes 2p and 2p+1 followed by P, indexed by their 12 input bits."""
    shift = 32 - 8 * (pair + 1)
    out = []
    for x in range(4096):
        nib = (_sbox(2 * pair, x >> 6) << 4) | _sbox(2 * pair + 1, x & 63)
        out.append(permute(nib << shift, P, 32))
    return tuple(out)


def _slow_schedule(key: int) -> int:
    """Reference key schedule; all sixteen subkeys packed into one int."""
    cd = permute(key, PC1, 64)
    c, d = cd >> 28, cd & 0xFFFFFFF
    packed = 0
    for rot in ROTATIONS:
        c = ((c << rot) | (c >> (28 - rot))) & 0xFFFFFFF
        d = ((d << rot) | (d >> (28 - rot))) & 0xFFFFFFF
        packed = (packed << 48) | permute((c << 28) | d, PC2, 56)
    return packed


def _schedule_tables():
    # The key schedule is a pure bit selection, hence linear over GF(2):
    # the schedule of a key is the XOR of the schedules of its set bits.
    unit = [_slow_schedule(1 << (63 - i)) for i in range(64)]
    tables = []
    for j in range(8):
        t = [0] * 256
        for b in range(1, 256):
            low = b & -b
            t[b] = t[b ^ low] ^ unit[8 * j + 7 - (low.bit_length() - 1)]
        tables.append(tuple(t))
    return tuple(tables)


_IP0, _IP1, _IP2, _IP3, _IP4, _IP5, _IP6, _IP7 = _byte_tables(IP, 64)
_FP0, _FP1, _FP2, _FP3, _FP4, _FP5, _FP6, _FP7 = _byte_tables(FP, 64)
_E0, _E1, _E2, _E3 = _byte_tables(E, 32)
_SP0, _SP1, _SP2, _SP3 = (_sp_pair_table(p) for p in range(4))
_KS0, _KS1, _KS2, _KS3, _KS4, _KS5, _KS6, _KS7 = _schedule_tables()
_SUBKEY_SHIFTS = tuple(48 * (15 - r) for r in range(16))


def initial_permutation(block: int) -> int:
    return (_IP0[block >> 56] | _IP1[(block >> 48) & 255] | _IP2[(block >> 40) & 255]
            | _IP3[(block >> 32) & 255] | _IP4[(block >> 24) & 255]
            | _IP5[(block >> 16) & 255] | _IP6[(block >> 8) & 255] | _IP7[block & 255])


def final_permutation(block: int) -> int:
    return (_FP0[block >> 56] | _FP1[(block >> 48) & 255] | _FP2[(block >> 40) & 255]
            | _FP3[(block >> 32) & 255] | _FP4[(block >> 24) & 255]
            | _FP5[(block >> 16) & 255] | _FP6[(block >> 8) & 255] | _FP7[block & 255])


def packed_schedule(key: int) -> int:
    """All sixteen 48-bit subkeys of ``key`` packed round 1 first.

    Parity bits select zero table rows, so they never reach a subkey.
    """
    return (_KS0[key >> 56] ^ _KS1[(key >> 48) & 255] ^ _KS2[(key >> 40) & 255]
            ^ _KS3[(key >> 32) & 255] ^ _KS4[(key >> 24) & 255]
            ^ _KS5[(key >> 16) & 255] ^ _KS6[(key >> 8) & 255] ^ _KS7[key & 255])


def unpack_schedule(packed: int) -> tuple[int, ...]:
    return tuple((packed >> s) & M48 for s in _SUBKEY_SHIFTS)


def feistel(ip_block: int, subkeys) -> int:
    """Sixteen rounds on an IP-permuted block; returns the pre-FP output R16L16."""
    l = ip_block >> 32
    r = ip_block & M32
    for k in subkeys:
        x = (_E0[r >> 24] | _E1[(r >> 16) & 255] | _E2[(r >> 8) & 255] | _E3[r & 255]) ^ k
        l, r = r, l ^ (_SP0[x >> 36] | _SP1[(x >> 24) & 4095]
                       | _SP2[(x >> 12) & 4095] | _SP3[x & 4095])
    return (r << 32) | l


@lru_cache(maxsize=4096)
def _subkeys(key: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ks = unpack_schedule(packed_schedule(key & KEY_MASK))
    return ks, ks[::-1]


@dataclass(frozen=True)
class DesKey:
    """64-bit DES key; the eight parity-position bits are ignored."""

    raw: int

    def __post_init__(self):
        if not 0 <= self.raw <= M64:
            raise ValueError("DES key must fit in 64 bits")

    @classmethod
    def from_bytes(cls, b: bytes) -> "DesKey":
        if len(b) != 8:
            raise BadLength("DES key must be 8 bytes")
        return cls(int.from_bytes(b, "big"))

    def to_bytes(self) -> bytes:
        return self.raw.to_bytes(8, "big")

    @property
    def effective(self) -> int:
        return self.raw & KEY_MASK

    @property
    def subkeys(self) -> tuple[int, ...]:
        return _subkeys(self.effective)[0]

    @property
    def reversed_subkeys(self) -> tuple[int, ...]:
        return _subkeys(self.effective)[1]


@dataclass(frozen=True)
class KeyBundle:
    """TDEA key bundle (k1 is applied first when encrypting)."""

    k1: DesKey
    k2: DesKey
    k3: DesKey

    @classmethod
    def from_bytes(cls, b: bytes) -> "KeyBundle":
        if len(b) != 24:
            raise BadLength("key bundle must be 24 bytes")
        return cls(DesKey.from_bytes(b[:8]), DesKey.from_bytes(b[8:16]),
                   DesKey.from_bytes(b[16:]))

    @classmethod
    def single(cls, k: DesKey) -> "KeyBundle":
        return cls(k, k, k)

    def to_bytes(self) -> bytes:
        return self.k1.to_bytes() + self.k2.to_bytes() + self.k3.to_bytes()


ZERO_BUNDLE = KeyBundle.single(DesKey(0))


def _as_key(k) -> DesKey:
    return k if isinstance(k, DesKey) else DesKey(k)


def des_encrypt_block(block: int, key) -> int:
    key = _as_key(key)
    return final_permutation(feistel(initial_permutation(block), key.subkeys))


def des_decrypt_block(block: int, key) -> int:
    key = _as_key(key)
    return final_permutation(feistel(initial_permutation(block), key.reversed_subkeys))


def tdea_encrypt_block(block: int, bundle: KeyBundle) -> int:
    # IP and FP cancel between consecutive DES passes.
    x = feistel(initial_permutation(block), bundle.k1.subkeys)
    x = feistel(x, bundle.k2.reversed_subkeys)
    x = feistel(x, bundle.k3.subkeys)
    return final_permutation(x)


def tdea_decrypt_block(block: int, bundle: KeyBundle) -> int:
    x = feistel(initial_permutation(block), bundle.k3.reversed_subkeys)
    x = feistel(x, bundle.k2.subkeys)
    x = feistel(x, bundle.k1.reversed_subkeys)
    return final_permutation(x)


def pad(msg: bytes) -> bytes:
    k = BLOCK_SIZE - len(msg) % BLOCK_SIZE
    return msg + bytes([k]) * k


def unpad(data: bytes) -> bytes:
    if not data or len(data) % BLOCK_SIZE:
        raise PaddingError("padded data is not a whole number of blocks")
    k = data[-1]
    if not 1 <= k <= BLOCK_SIZE or data[-k:] != bytes([k]) * k:
        raise PaddingError("invalid padding")
    return data[:-k]


def cbc_encrypt_raw(data: bytes, bundle: KeyBundle, iv: int) -> bytes:
    """CBC over whole blocks, no padding."""
    out = bytearray()
    prev = iv
    for i in range(0, len(data), BLOCK_SIZE):
        prev = tdea_encrypt_block(int.from_bytes(data[i:i + BLOCK_SIZE], "big") ^ prev, bundle)
        out += prev.to_bytes(BLOCK_SIZE, "big")
    return bytes(out)


def cbc_seal(msg: bytes, bundle: KeyBundle, iv: int) -> bytes:
    return cbc_encrypt_raw(pad(msg), bundle, iv)


def cbc_open(ct: bytes, bundle: KeyBundle, iv: int) -> bytes:
    if not ct or len(ct) % BLOCK_SIZE:
        raise MalformedCiphertext("CBC ciphertext must be a positive multiple of 8 bytes")
    out = bytearray()
    prev = iv
    for i in range(0, len(ct), BLOCK_SIZE):
        c = int.from_bytes(ct[i:i + BLOCK_SIZE], "big")
        out += (tdea_decrypt_block(c, bundle) ^ prev).to_bytes(BLOCK_SIZE, "big")
        prev = c
    return unpad(bytes(out))


def cbc_mac(msg: bytes, bundle: KeyBundle) -> int:
    """Length-prefixed CBC-MAC with a zero IV.

    Plain CBC-MAC is forgeable across messages of different lengths (a MAC
    of m can be extended to m || (m' xor tag)); prepending the length makes
    the set of valid inputs prefix-free, which closes that.
    """
    data = len(msg).to_bytes(8, "big") + msg
    if len(data) % BLOCK_SIZE:
        data += bytes(BLOCK_SIZE - len(data) % BLOCK_SIZE)
    mac = 0
    for i in range(0, len(data), BLOCK_SIZE):
        mac = tdea_encrypt_block(int.from_bytes(data[i:i + BLOCK_SIZE], "big") ^ mac, bundle)
    return mac
