"""Command-line entry point: ``setforge <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (the error class name is
printed on standard output) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cracker, rsa
from .channel import (
    ClientConfig,
    ServerConfig,
    StrengthPolicy,
    open_record,
    perform_handshake,
    seal_record,
)
from .envelope import Envelope, open_envelope, seal
from .errors import SetForgeError
from .numtheory import SeededRng
from .pki import Certificate, CertificationAuthority, issue_certificate, verify_certificate
from .setflow import (
    Adversary,
    CardholderState,
    GatewayState,
    MerchantState,
    OrderInfo,
    PaymentInfo,
    SimNetwork,
    flip_bit,
    initialize_participants,
    run_purchase,
)

DEFAULT_SEED = 0xC0FFEE
DEFAULT_CA_NAME = "SetForge Root CA"

DEMO_CARD = "4111111111111111"
DEMO_NAMES = ("Alice Cardholder", "Bob's Books", "Acme Payment Gateway")


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _write(path: str, data: bytes) -> None:
    Path(path).write_bytes(data)


def _private(path: str) -> rsa.RsaPrivateKey:
    key = rsa.read_key(path)
    if not isinstance(key, rsa.RsaPrivateKey):
        raise UsageError(f"{path} holds a public key; a private key is required")
    return key


def _public(path: str) -> rsa.RsaPublicKey:
    return rsa.as_public(rsa.read_key(path))


# -- file commands -----------------------------------------------------------

def cmd_keygen(args) -> int:
    kp = rsa.generate_keypair(args.bits, args.e, SeededRng(args.seed))
    rsa.save_key(kp.private, args.out)
    if args.pub:
        rsa.save_key(kp.public, args.pub)
    print(f"generated {kp.public.n.bit_length()}-bit modulus, e={kp.public.e}")
    return 0


def cmd_certify(args) -> int:
    ca_key = _private(args.ca)
    ca = CertificationAuthority(args.issuer, rsa.RsaKeyPair(ca_key.public_key(), ca_key))
    cert = issue_certificate(ca, args.subject, _public(args.key))
    _write(args.out, cert.to_bytes())
    print(f"issued certificate for {args.subject!r} signed by {args.issuer!r}")
    return 0


def cmd_verify_cert(args) -> int:
    cert = Certificate.from_bytes(_read(args.cert))
    ok = verify_certificate(cert, _public(args.ca))
    print(f"subject={cert.subject_name!r} issuer={cert.issuer_name!r} valid={ok}")
    return 0 if ok else 1


def cmd_encrypt(args) -> int:
    _write(args.out, rsa.encrypt_message(_read(args.input), _public(args.key)))
    return 0


def cmd_decrypt(args) -> int:
    _write(args.out, rsa.decrypt_message(_read(args.input), _private(args.key)))
    return 0


def cmd_sign(args) -> int:
    _write(args.out, rsa.sign_message(_read(args.input), _private(args.key)))
    return 0


def cmd_verify(args) -> int:
    _write(args.out, rsa.verify_message(_read(args.input), _public(args.key)))
    print("signature verified")
    return 0


def cmd_seal(args) -> int:
    cert = Certificate.from_bytes(_read(args.to))
    env = seal(_read(args.input), args.sender, _private(args.key), cert, SeededRng(args.seed))
    _write(args.out, env.to_bytes())
    return 0


def cmd_open(args) -> int:
    env = Envelope.from_bytes(_read(args.input))
    sender = Certificate.from_bytes(_read(args.sender_cert))
    _write(args.out, open_envelope(env, _private(args.key), sender))
    print(f"opened envelope from {env.sender_name!r}")
    return 0


# -- demos -------------------------------------------------------------------

def cmd_handshake_demo(args) -> int:
    rng = SeededRng(args.seed)
    ca = CertificationAuthority.create(DEFAULT_CA_NAME, rng)
    server_kp = rsa.generate_keypair(rsa.DEFAULT_BITS, rsa.DEFAULT_E, rng)
    cert = issue_certificate(ca, "shop.example", server_kp.public)
    policy = StrengthPolicy.export() if args.export else StrengthPolicy.domestic()
    client = ClientConfig(ca.public, frozenset({40, 128}), "browser", "shop.example")
    server = ServerConfig(cert, server_kp, policy)

    print(f"server policy: {policy.jurisdiction}, allows {sorted(policy.allowed)} bits")
    transcript: list[bytes] = []
    c_state, s_state = perform_handshake(client, server, rng, transcript)
    for label, msg in zip(("ClientHello", "ServerHello", "ClientKeyExchange"), transcript):
        print(f"  {label:<18} {len(msg):>4} bytes")
    print(f"certificate for {cert.subject_name!r} verified under {ca.name!r}")
    print(f"negotiated {c_state.strength}-bit session key")
    print(f"enc bundle {c_state.enc_bundle.to_bytes().hex()}")
    print(f"mac bundle {c_state.mac_bundle.to_bytes().hex()}")

    request = seal_record(c_state, b"GET /checkout HTTP/1.0", rng)
    print(f"client record seq={request.seq:#x} {request.to_bytes().hex()}")
    print(f"server reads: {open_record(s_state, request).decode()}")
    reply = seal_record(s_state, b"HTTP/1.0 200 OK", rng)
    print(f"client reads: {open_record(c_state, reply).decode()}")

    for label, attempt in (
        ("replayed record", lambda: open_record(s_state, request)),
        ("tampered record", lambda: open_record(
            s_state, type(request)(request.seq, request.iv, flip_bit(request.ct, 5), request.mac))),
    ):
        try:
            attempt()
            print(f"{label}: ACCEPTED")
        except SetForgeError as exc:
            print(f"{label}: rejected with {exc.name}")
    return 0


def cmd_set_demo(args) -> int:
    try:
        adversary = Adversary.parse(args.adversary)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = SeededRng(args.seed)
    ca = CertificationAuthority.create(DEFAULT_CA_NAME, rng)
    ch, mp, gw = initialize_participants(ca, DEMO_NAMES, rng)
    issuer_db = {DEMO_CARD: args.funds}
    order = OrderInfo("ORD-0001", "two paperback books", args.amount)
    payment = PaymentInfo(DEMO_CARD, "202812", args.amount, order.order_id)
    network = SimNetwork(adversary)

    print(f"adversary: {adversary}")
    print(f"issuer funds before: {issuer_db[DEMO_CARD]} cents")
    outcome = run_purchase(network, ca, CardholderState(ch), MerchantState(mp),
                           GatewayState.create(gw, rng), order, payment, issuer_db, rng)
    for line in outcome.trace:
        print(line)
    if adversary.kind == "eavesdrop":
        leaked = any(DEMO_CARD.encode() in m for m in outcome.transcript)
        print(f"eavesdropper saw {len(outcome.transcript)} messages; card number visible: {leaked}")
    if outcome.replay_error:
        print(f"replay rejected: {outcome.replay_error}")
    print(f"issuer funds after: {issuer_db[DEMO_CARD]} cents")
    if outcome.approved:
        print(f"outcome: APPROVED (auth code {outcome.auth_code:016x})")
        return 0
    print(f"outcome: REJECTED ({outcome.error})")
    return 1


# -- cracking ----------------------------------------------------------------

def _maybe_csv(path, reports) -> None:
    if path:
        Path(path).write_text(cracker.reports_to_csv(reports))


def cmd_crack(args) -> int:
    rng = SeededRng(args.seed)
    spec = cracker.ReducedKeySpec(args.bits)
    planted = rng.randbelow(spec.size)
    pair = cracker.make_pair(planted, spec, rng.randbits(64))
    print(f"planted key index {planted} in a {args.bits}-bit space; "
          f"plaintext {pair.plaintext:016x} ciphertext {pair.ciphertext:016x}")
    report = cracker.brute_force(pair, spec, args.workers, full_scan=args.full_scan,
                                 max_bits=args.max_bits)
    print(f"found key index {report.found_index} "
          f"(key {cracker.key_from_index(report.found_index, spec).raw:016x})")
    print(cracker.format_report_table([report]))
    _maybe_csv(args.csv, [report])
    return 0


def cmd_project(args) -> int:
    if args.rate is None and not args.table2:
        raise UsageError("project needs --rate, --table2 or both")
    if args.rate is not None:
        proj = cracker.time_to_crack(args.bits, args.rate)
        print(f"{args.bits}-bit keyspace at {args.rate:.4g} keys/s: "
              f"worst {cracker.format_duration(proj.worst)}, "
              f"expected {cracker.format_duration(proj.expected)}")
        if args.csv:
            Path(args.csv).write_text(
                "bits,keys_per_sec,worst_s,expected_s\n"
                f"{args.bits},{args.rate!r},{proj.worst!r},{proj.expected!r}\n")
    if args.table2:
        print("Estimates of breaking 56-bit DES (rates derived from the stated times)")
        print(f"{'attacker':<22} {'budget US$':>12} {'keys/s':>11} {'worst':>14} "
              f"{'expected':>14} {'stated':>12}")
        for row in cracker.estimate_rows():
            print(f"{row['attacker']:<22} {row['budget_usd']:>12,} {row['keys_per_sec']:>11.3e} "
                  f"{cracker.format_duration(row['worst_s']):>14} "
                  f"{cracker.format_duration(row['expected_s']):>14} {row['stated']:>12}")
        print("DES challenge results (historical; aggregate rate under the full-sweep reading)")
        for when, who, stated, seconds in cracker.DES_CHALLENGES:
            print(f"  {when:<14} {who:<32} {stated:>20} {2.0 ** 56 / seconds:>11.3e} keys/s")
    return 0


def cmd_bench(args) -> int:
    try:
        bits_list = [int(b) for b in args.bits_list.split(",") if b]
    except ValueError as exc:
        raise UsageError(f"bad --bits-list {args.bits_list!r}") from exc
    reports = cracker.scaling_experiment(bits_list, args.workers, SeededRng(args.seed))
    print(cracker.format_report_table(reports))
    for a, b in zip(reports, reports[1:]):
        if b.bits > a.bits:
            ratio = b.elapsed / a.elapsed
            print(f"time ratio {b.bits} vs {a.bits} bits: {ratio:.2f} "
                  f"(ideal {2 ** (b.bits - a.bits)})")
    _maybe_csv(args.csv, reports)
    return 0


# -- parser ------------------------------------------------------------------

def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                        help="seed for all randomness (default 0xC0FFEE)")

    parser = argparse.ArgumentParser(prog="setforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("keygen", cmd_keygen, "generate an RSA keypair")
    p.add_argument("--bits", type=int, default=rsa.DEFAULT_BITS)
    p.add_argument("--e", type=int, default=rsa.DEFAULT_E)
    p.add_argument("--out", required=True, help="private key file")
    p.add_argument("--pub", help="optional public key file")

    p = add("certify", cmd_certify, "issue a certificate")
    p.add_argument("--ca", required=True, help="CA private key file")
    p.add_argument("--issuer", default=DEFAULT_CA_NAME)
    p.add_argument("--subject", required=True)
    p.add_argument("--key", required=True, help="subject key file (public or private)")
    p.add_argument("--out", required=True)

    p = add("verify-cert", cmd_verify_cert, "check a certificate against a CA key")
    p.add_argument("--cert", required=True)
    p.add_argument("--ca", required=True)

    for name, func, text in (("encrypt", cmd_encrypt, "RSA-encrypt a file"),
                             ("decrypt", cmd_decrypt, "RSA-decrypt a file"),
                             ("sign", cmd_sign, "sign a file (message recovery)"),
                             ("verify", cmd_verify, "verify a signature and recover the file")):
        p = add(name, func, text)
        p.add_argument("--key", required=True)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out", required=True)

    p = add("seal", cmd_seal, "seal a digital envelope")
    p.add_argument("--key", required=True, help="sender private key")
    p.add_argument("--sender", required=True, help="sender name (must match the sender's certificate)")
    p.add_argument("--to", required=True, help="recipient certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("open", cmd_open, "open a digital envelope")
    p.add_argument("--key", required=True, help="recipient private key")
    p.add_argument("--from", dest="sender_cert", required=True, help="sender certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = add("handshake-demo", cmd_handshake_demo, "run the SSL-style handshake")
    p.add_argument("--export", action="store_true", help="use the export (40-bit) server policy")

    p = add("set-demo", cmd_set_demo, "run a three-party SET purchase")
    p.add_argument("--adversary", default="none",
                   help="none | eavesdrop | tamper:<msg>:<bit> | replay:<msg>")
    p.add_argument("--funds", type=int, default=100_00, help="card balance in cents")
    p.add_argument("--amount", type=int, default=25_00, help="purchase amount in cents")

    p = add("crack", cmd_crack, "brute-force a planted key in a reduced keyspace")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-scan", action="store_true")
    p.add_argument("--max-bits", type=int, default=cracker.DESK_SCALE_MAX_BITS)
    p.add_argument("--csv")

    p = add("project", cmd_project, "project brute-force times")
    p.add_argument("--rate", type=float, help="keys per second")
    p.add_argument("--bits", type=int, default=56)
    p.add_argument("--table2", action="store_true", help="reprint the 56-bit DES estimates")
    p.add_argument("--csv")

    p = add("bench", cmd_bench, "full-scan timing across keyspace sizes")
    p.add_argument("--bits-list", required=True, help="comma-separated, e.g. 12,14,16")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"setforge {args.command}: {exc}", file=sys.stderr)
        return 2
    except SetForgeError as exc:
        print(f"error: {exc.name}: {exc}")
        return 1
    except (OSError, ValueError) as exc:
        print(f"setforge {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
