import math

import pytest
from hypothesis import given, strategies as st

from setforge.errors import NotInvertible, ZeroModulus
from setforge.numtheory import (
    SeededRng, byte_length, bytes_to_int, egcd, gen_prime, int_to_bytes,
    is_probable_prime, mod_inverse, mod_pow,
)


def iterated_pow(b, e, m):
    acc = 1 % m
    for _ in range(e):
        acc = acc * b % m
    return acc


def trial_division(n):
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


class TestSeededRng:
    def test_reference_vector(self):
        # SplitMix64 outputs for seed 1234567, checked against a separate transcription
        rng = SeededRng(1234567)
        assert [rng.next_u64() for _ in range(5)] == [
            6457827717110365317, 3203168211198807973, 9817491932198370423,
            4593380528125082431, 16408922859458223821]

    def test_same_seed_same_stream(self):
        a, b = SeededRng(9), SeededRng(9)
        assert [a.randbits(100) for _ in range(5)] == [b.randbits(100) for _ in range(5)]

    def test_randbits_range_and_layout(self):
        rng = SeededRng(3)
        first = SeededRng(3).next_u64()
        assert rng.randbits(8) == first >> 56
        assert all(SeededRng(s).randbits(13) < 1 << 13 for s in range(50))
        assert SeededRng(1).randbits(0) == 0

    def test_randbelow_and_randrange(self):
        rng = SeededRng(4)
        draws = [rng.randbelow(7) for _ in range(700)]
        assert set(draws) == set(range(7))
        assert all(10 <= rng.randrange(10, 13) < 13 for _ in range(100))
        with pytest.raises(ValueError):
            rng.randrange(5, 5)

    def test_randbytes(self):
        rng = SeededRng(8)
        assert rng.randbytes(3) == SeededRng(8).next_u64().to_bytes(8, "big")[:3]
        assert len(rng.randbytes(21)) == 21


class TestModPow:
    @pytest.mark.parametrize("b,e,m,want", [(2, 10, 1000, 24), (5, 0, 7, 1), (7, 560, 561, 1)])
    def test_examples(self, b, e, m, want):
        assert mod_pow(b, e, m) == want

    def test_carmichael_value_matches_iteration(self):
        assert iterated_pow(7, 560, 561) == 1

    def test_zero_modulus(self):
        with pytest.raises(ZeroModulus):
            mod_pow(3, 4, 0)

    @given(st.integers(0, 500), st.integers(0, 60), st.integers(1, 500))
    def test_matches_iterated_multiplication(self, b, e, m):
        assert mod_pow(b, e, m) == iterated_pow(b, e, m)


class TestModInverse:
    def test_textbook_exponent(self):
        scan = [x for x in range(1, 3120) if 17 * x % 3120 == 1]
        assert scan == [2753]
        assert mod_inverse(17, 3120) == 2753

    def test_identity_and_failure(self):
        assert mod_inverse(1, 97) == 1
        with pytest.raises(NotInvertible):
            mod_inverse(6, 9)

    @given(st.integers(1, 10**6), st.integers(2, 10**6))
    def test_inverse_property(self, a, m):
        g, x, y = egcd(a, m)
        assert a * x + m * y == g == math.gcd(a, m)
        if g == 1:
            assert a * mod_inverse(a, m) % m == 1
        else:
            with pytest.raises(NotInvertible):
                mod_inverse(a, m)


class TestPrimality:
    @pytest.mark.parametrize("n,want", [(2, True), (561, False), (7919, True), (1, False), (9, False)])
    def test_examples(self, n, want):
        assert is_probable_prime(n, 20) is want
        assert trial_division(n) is want

    def test_agrees_with_trial_division_below_5000(self):
        assert all(is_probable_prime(n, 20) == trial_division(n) for n in range(5000))

    def test_carmichael_numbers_rejected(self):
        for n in (561, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265):
            assert not is_probable_prime(n)


class TestGenPrime:
    def test_sixteen_bits(self):
        p = gen_prime(16, SeededRng(1))
        assert 32768 <= p < 65536 and trial_division(p)

    def test_four_bit_primes(self):
        assert {gen_prime(4, SeededRng(s)) for s in range(40)} == {11, 13}

    def test_deterministic(self):
        assert gen_prime(16, SeededRng(7)) == gen_prime(16, SeededRng(7))

    def test_too_small(self):
        with pytest.raises(ValueError):
            gen_prime(3, SeededRng(0))


def test_byte_conversions():
    assert int_to_bytes(0) == b"\x00"
    assert int_to_bytes(256) == b"\x01\x00"
    assert int_to_bytes(5, 3) == b"\x00\x00\x05"
    assert bytes_to_int(b"\x01\x00") == 256
    assert byte_length(3233) == 2


class TestInvariants:
    def test_exponent_additivity(self):
        rng = SeededRng(60)
        for _ in range(500):
            b, x, y, m = rng.randbelow(10**9), rng.randbelow(10**6), rng.randbelow(10**6), 1 + rng.randbelow(10**9)
            assert mod_pow(b, x + y, m) == mod_pow(b, x, m) * mod_pow(b, y, m) % m

    def test_randomized_sweep_against_iteration(self):
        rng = SeededRng(61)
        for _ in range(10_000):
            b, e, m = rng.randbelow(10**6), rng.randbelow(1001), 1 + rng.randbelow(10**6)
            assert mod_pow(b, e, m) == iterated_pow(b, e, m)

    def test_gen_prime_is_odd(self):
        rng = SeededRng(62)
        for bits in range(4, 40):
            assert gen_prime(bits, rng) % 2 == 1
