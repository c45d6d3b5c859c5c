"""Educational secure-transaction toolkit: RSA, DES/TDEA, envelopes, certificates,
an SSL-style channel, a SET-style payment flow and a brute-force key search."""

__version__ = "0.1.0"
