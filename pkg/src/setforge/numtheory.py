"""Modular arithmetic, primality testing and a reproducible RNG.

Python's ``int`` already is an arbitrary-precision non-negative-capable
integer with a canonical form, so it serves as the big-number type
throughout the package.  Byte conversions are always big-endian.
"""

from __future__ import annotations

from .errors import NotInvertible, ZeroModulus

MASK64 = (1 << 64) - 1

DEFAULT_MR_ROUNDS = 40


class SeededRng:
    """SplitMix64 generator.

    Bit-exact across platforms, which is what makes seeded demos and tests
    reproducible.  Not thread safe; give each owner its own instance.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randbits(self, k: int) -> int:
        """Return a uniform integer in [0, 2**k).

        Words are concatenated most-significant first and the surplus low
        bits of the last word are dropped.
        """
        if k < 0:
            raise ValueError("number of bits must be non-negative")
        if k == 0:
            return 0
        words = (k + 63) // 64
        acc = 0
        for _ in range(words):
            acc = (acc << 64) | self.next_u64()
        return acc >> (64 * words - k)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("upper bound must be positive")
        k = n.bit_length()
        while True:
            r = self.randbits(k)
            if r < n:
                return r

    def randrange(self, lo: int, hi: int) -> int:
        if hi <= lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo)

    def randbytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:n])


def int_to_bytes(x: int, length: int | None = None) -> bytes:
    """Big-endian encoding; minimal length (at least one byte) by default."""
    if x < 0:
        raise ValueError("negative integers have no encoding")
    if length is None:
        length = max(1, (x.bit_length() + 7) // 8)
    return x.to_bytes(length, "big")


def bytes_to_int(b: bytes) -> int:
    return int.from_bytes(b, "big")


def byte_length(n: int) -> int:
    return max(1, (n.bit_length() + 7) // 8)


def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus.

    Delegates to the built-in three-argument ``pow`` (square-and-multiply
    in C); the tests check it against iterated multiplication.
    """
    if modulus == 0:
        raise ZeroModulus("modulus must be at least 1")
    if modulus < 0 or exponent < 0 or base < 0:
        raise ValueError("mod_pow is defined on non-negative integers")
    return pow(base, exponent, modulus)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Iterative extended Euclid: returns (g, x, y) with a*x + b*y = g."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def mod_inverse(a: int, m: int) -> int:
    if m < 2:
        raise ValueError("modulus must be at least 2")
    g, x, _ = egcd(a % m, m)
    if g != 1:
        raise NotInvertible(f"gcd({a}, {m}) = {g}")
    return x % m


def is_probable_prime(n: int, rounds: int = DEFAULT_MR_ROUNDS,
                      rng: SeededRng | None = None) -> bool:
    """Miller-Rabin with witnesses drawn uniformly from [2, n-2]."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    if rng is None:
        rng = SeededRng(n)

    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1

    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def gen_prime(bits: int, rng: SeededRng) -> int:
    """Random prime with exactly ``bits`` bits (top bit forced, odd)."""
    if bits < 4:
        raise ValueError("bits must be at least 4")
    top = 1 << (bits - 1)
    while True:
        candidate = rng.randbits(bits) | top | 1
        if is_probable_prime(candidate, DEFAULT_MR_ROUNDS, rng):
            return candidate
