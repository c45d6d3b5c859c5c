"""Three-party SET-style purchase over a simulated, possibly hostile network.

The cardholder sends two envelopes in one request: the order, sealed for
the merchant, and the payment details, sealed for the payment gateway.  The
merchant can open only the order; it forwards the payment envelope with its
own claim of order id and amount, and the gateway cross-checks that claim
against the signed payment before debiting the issuer.

Honest message sequence (indices are what the adversary addresses)::

    0  cardholder -> merchant  PREQ  order envelope + payment envelope
    1  merchant   -> gateway   AREQ  payment envelope + claimed order id/amount
    2  gateway    -> merchant  envelope(ARES)  approval or decline
    3  merchant   -> cardholder envelope(PRES) final answer

When something fails after the gateway has approved, the merchant sends a
signed reversal so that the issuer's funds are restored; a cardholder that
rejects the final answer first sends the merchant a signed cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from . import rsa
from .blockcipher import KeyBundle, cbc_mac
from .envelope import Envelope, open_envelope, seal
from .errors import (
    AmountDisagreement,
    AmountMismatch,
    CardExpired,
    CardUnknown,
    CertificateRejected,
    DuplicateAuthorization,
    DuplicateName,
    DuplicateOrder,
    InsufficientFunds,
    MalformedCard,
    MalformedMessage,
    OrderIdMismatch,
    SetForgeError,
    SignatureInvalid,
    UnexpectedMessage,
)
from .numtheory import SeededRng
from .pki import Certificate, CertificationAuthority, issue_certificate, verify_certificate
from .wire import Reader, field, fields, u64

CARDHOLDER = "cardholder"
MERCHANT = "merchant"
GATEWAY = "gateway"
ROLES = (CARDHOLDER, MERCHANT, GATEWAY)

# Fixed demo clock (YYYYMM); expiry checks never read the wall clock.
DEFAULT_PERIOD = 202610
HONEST_MESSAGE_COUNT = 4


def luhn_valid(digits: str) -> bool:
    if not digits.isdigit():
        return False
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def _tagged(tag: bytes, data: bytes) -> Reader:
    r = Reader(data)
    if r.fixed(4) != tag:
        raise MalformedMessage(f"expected {tag.decode()} message")
    return r


@dataclass(frozen=True)
class Participant:
    role: str
    name: str
    keypair: rsa.RsaKeyPair
    cert: Certificate

    @property
    def private(self) -> rsa.RsaPrivateKey:
        return self.keypair.private


@dataclass(frozen=True)
class OrderInfo:
    order_id: str
    description: str
    amount: int

    def __post_init__(self):
        if not self.order_id:
            raise ValueError("order_id must be non-empty")
        if self.amount < 0:
            raise ValueError("amount must be non-negative")

    def to_bytes(self) -> bytes:
        return (b"ORDR" + fields(self.order_id.encode(), self.description.encode())
                + u64(self.amount))

    @classmethod
    def from_bytes(cls, data: bytes) -> "OrderInfo":
        r = _tagged(b"ORDR", data)
        order_id, description, amount = r.text(), r.text(), r.u64()
        r.done()
        try:
            return cls(order_id, description, amount)
        except ValueError as exc:
            raise MalformedMessage(str(exc)) from exc


@dataclass(frozen=True)
class PaymentInfo:
    card_number: str
    expiry: str
    amount: int
    order_id: str

    def __post_init__(self):
        if not (12 <= len(self.card_number) <= 19 and luhn_valid(self.card_number)):
            raise MalformedCard("card number must be 12-19 digits and pass the Luhn check")
        if not (len(self.expiry) == 6 and self.expiry.isdigit() and 1 <= int(self.expiry[4:]) <= 12):
            raise MalformedCard("expiry must be YYYYMM")
        if self.amount < 0:
            raise ValueError("amount must be non-negative")

    def to_bytes(self) -> bytes:
        return (b"PAYI" + fields(self.order_id.encode(), self.card_number.encode(),
                                 self.expiry.encode()) + u64(self.amount))

    @classmethod
    def from_bytes(cls, data: bytes) -> "PaymentInfo":
        r = _tagged(b"PAYI", data)
        order_id, card, expiry, amount = r.text(), r.text(), r.text(), r.u64()
        r.done()
        return cls(card, expiry, amount, order_id)


@dataclass(frozen=True)
class PurchaseRequest:
    order_env: Envelope
    payment_env: Envelope

    def to_bytes(self) -> bytes:
        return b"PREQ" + fields(self.order_env.to_bytes(), self.payment_env.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "PurchaseRequest":
        r = _tagged(b"PREQ", data)
        order_env, payment_env = Envelope.from_bytes(r.field()), Envelope.from_bytes(r.field())
        r.done()
        return cls(order_env, payment_env)


@dataclass(frozen=True)
class AuthRequest:
    payment_env: Envelope
    order_id: str
    amount: int

    def to_bytes(self) -> bytes:
        return b"AREQ" + fields(self.payment_env.to_bytes(), self.order_id.encode()) + u64(self.amount)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuthRequest":
        r = _tagged(b"AREQ", data)
        env, order_id, amount = Envelope.from_bytes(r.field()), r.text(), r.u64()
        r.done()
        return cls(env, order_id, amount)


@dataclass(frozen=True)
class AuthResponse:
    """Gateway verdict; also reused, under another tag, for the merchant's answer."""

    order_id: str
    amount: int
    approved: bool
    auth_code: int = 0
    reason: str = ""

    TAG = b"ARES"

    def to_bytes(self) -> bytes:
        return (self.TAG + field(self.order_id.encode()) + u64(self.amount)
                + bytes([int(self.approved)]) + u64(self.auth_code) + field(self.reason.encode()))

    @classmethod
    def from_bytes(cls, data: bytes):
        r = _tagged(cls.TAG, data)
        order_id, amount = r.text(), r.u64()
        flag = r.fixed(1)[0]
        if flag not in (0, 1):
            raise MalformedMessage("approval flag must be 0 or 1")
        code, reason = r.u64(), r.text()
        r.done()
        return cls(order_id, amount, bool(flag), code, reason)


@dataclass(frozen=True)
class PurchaseResponse(AuthResponse):
    TAG = b"PRES"


@dataclass(frozen=True)
class Reversal:
    """Merchant asks the gateway to undo an authorization (also used as cardholder cancel)."""

    order_id: str
    amount: int

    TAG = b"REVR"

    def to_bytes(self) -> bytes:
        return self.TAG + field(self.order_id.encode()) + u64(self.amount)

    @classmethod
    def from_bytes(cls, data: bytes):
        r = _tagged(cls.TAG, data)
        order_id, amount = r.text(), r.u64()
        r.done()
        return cls(order_id, amount)


@dataclass(frozen=True)
class Cancel(Reversal):
    TAG = b"CNCL"


# -- participant state machines ---------------------------------------------

@dataclass
class CardholderState:
    participant: Participant
    pending: dict = dc_field(default_factory=dict)
    completed: dict = dc_field(default_factory=dict)


@dataclass
class MerchantState:
    participant: Participant
    pending: dict = dc_field(default_factory=dict)
    completed: dict = dc_field(default_factory=dict)
    opened: list = dc_field(default_factory=list)


@dataclass
class GatewayState:
    participant: Participant
    bundle: KeyBundle
    authorized: dict = dc_field(default_factory=dict)
    reversed: set = dc_field(default_factory=set)

    @classmethod
    def create(cls, participant: Participant, rng: SeededRng) -> "GatewayState":
        return cls(participant, KeyBundle.from_bytes(rng.randbytes(24)))


def initialize_participants(ca: CertificationAuthority, names, rng: SeededRng,
                            bits: int = rsa.DEFAULT_BITS) -> tuple[Participant, Participant, Participant]:
    """Fresh keypair and CA-issued certificate for cardholder, merchant and gateway."""
    names = tuple(names)
    if len(names) != 3:
        raise ValueError("need exactly three names: cardholder, merchant, gateway")
    if len(set(names)) != 3:
        raise DuplicateName(f"participant names must be distinct: {names}")
    out = []
    for role, name in zip(ROLES, names):
        kp = rsa.generate_keypair(bits, rsa.DEFAULT_E, rng)
        out.append(Participant(role, name, kp, issue_certificate(ca, name, kp.public)))
    return tuple(out)


def create_purchase_request(cardholder: Participant, order: OrderInfo, payment: PaymentInfo,
                            merchant_cert: Certificate, gateway_cert: Certificate,
                            rng: SeededRng) -> PurchaseRequest:
    if payment.order_id != order.order_id:
        raise OrderIdMismatch(f"payment is for {payment.order_id!r}, order is {order.order_id!r}")
    if payment.amount != order.amount:
        raise AmountMismatch(f"payment amount {payment.amount} != order amount {order.amount}")
    order_env = seal(order.to_bytes(), cardholder.name, cardholder.private, merchant_cert, rng)
    payment_env = seal(payment.to_bytes(), cardholder.name, cardholder.private, gateway_cert, rng)
    return PurchaseRequest(order_env, payment_env)


def merchant_process(merchant: MerchantState, req: PurchaseRequest,
                     cardholder_cert: Certificate) -> tuple[OrderInfo, AuthRequest]:
    """Open the order, record it as pending, and forward the payment envelope unopened."""
    plaintext = open_envelope(req.order_env, merchant.participant.private, cardholder_cert)
    merchant.opened.append(plaintext)
    order = OrderInfo.from_bytes(plaintext)
    if req.payment_env.sender_name != req.order_env.sender_name:
        raise SignatureInvalid("order and payment envelopes name different senders")
    if order.order_id in merchant.pending or order.order_id in merchant.completed:
        raise DuplicateOrder(f"order {order.order_id!r} already seen")
    merchant.pending[order.order_id] = order
    return order, AuthRequest(req.payment_env, order.order_id, order.amount)


def authorization_code(gateway: GatewayState, order_id: str, amount: int) -> int:
    return cbc_mac(order_id.encode() + u64(amount), gateway.bundle)


def gateway_authorize(gateway: GatewayState, auth_req: AuthRequest, cardholder_cert: Certificate,
                      issuer_db: dict, current_period: int = DEFAULT_PERIOD) -> AuthResponse:
    """Open and verify the payment, check it against the merchant's claim, debit the issuer."""
    plaintext = open_envelope(auth_req.payment_env, gateway.participant.private, cardholder_cert)
    payment = PaymentInfo.from_bytes(plaintext)
    if int(payment.expiry) < current_period:
        raise CardExpired(f"card expired {payment.expiry}")
    if payment.order_id in gateway.authorized:
        raise DuplicateAuthorization(f"order {payment.order_id!r} was already authorized")
    if payment.order_id != auth_req.order_id:
        raise OrderIdMismatch(
            f"merchant claims order {auth_req.order_id!r}, cardholder signed {payment.order_id!r}")
    if payment.amount != auth_req.amount:
        raise AmountDisagreement(
            f"merchant claims {auth_req.amount}, cardholder authorized {payment.amount}")
    if payment.card_number not in issuer_db:
        raise CardUnknown("card is not known to the issuer")
    if issuer_db[payment.card_number] < payment.amount:
        raise InsufficientFunds("insufficient funds")
    issuer_db[payment.card_number] -= payment.amount
    gateway.authorized[payment.order_id] = (payment.card_number, payment.amount)
    code = authorization_code(gateway, payment.order_id, payment.amount)
    return AuthResponse(payment.order_id, payment.amount, True, code, "approved")


def gateway_reverse(gateway: GatewayState, reversal: Reversal, issuer_db: dict) -> bool:
    """Undo an authorization; returns False when there is nothing to undo."""
    entry = gateway.authorized.get(reversal.order_id)
    if entry is None or reversal.order_id in gateway.reversed:
        return False
    card, amount = entry
    if amount != reversal.amount:
        raise AmountDisagreement("reversal amount does not match the authorization")
    issuer_db[card] += amount
    gateway.reversed.add(reversal.order_id)
    return True


# -- simulated network -------------------------------------------------------

@dataclass(frozen=True)
class Adversary:
    kind: str = "none"
    message: int = -1
    bit: int = 0

    KINDS = ("none", "eavesdrop", "tamper", "replay")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown adversary {self.kind!r}")

    @classmethod
    def parse(cls, spec: str) -> "Adversary":
        """``none`` | ``eavesdrop`` | ``tamper:<msg>:<bit>`` | ``replay:<msg>``"""
        parts = spec.split(":")
        try:
            if parts == ["none"] or parts == ["eavesdrop"]:
                return cls(parts[0])
            if parts[0] == "tamper" and len(parts) == 3:
                return cls("tamper", int(parts[1]), int(parts[2]))
            if parts[0] == "replay" and len(parts) == 2:
                return cls("replay", int(parts[1]))
        except ValueError:
            pass
        raise ValueError(f"bad adversary spec {spec!r}")

    def __str__(self):
        if self.kind == "tamper":
            return f"tamper:{self.message}:{self.bit}"
        if self.kind == "replay":
            return f"replay:{self.message}"
        return self.kind


def flip_bit(data: bytes, bit: int) -> bytes:
    """Flip bit ``bit`` (0 = most significant bit of byte 0), wrapping around the length."""
    if not data:
        return data
    bit %= 8 * len(data)
    out = bytearray(data)
    out[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(out)


class SimNetwork:
    """In-process network; every delivered message is kept verbatim in ``transcript``."""

    def __init__(self, adversary: Adversary | None = None):
        self.adversary = adversary or Adversary()
        self.transcript: list[bytes] = []
        self.log: list[tuple[int, str, str, str]] = []
        self.sent = 0

    def deliver(self, sender: str, recipient: str, label: str, data: bytes) -> bytes:
        index = self.sent
        self.sent += 1
        adv = self.adversary
        if adv.kind == "tamper" and adv.message == index:
            data = flip_bit(data, adv.bit)
        self.transcript.append(data)
        self.log.append((index, sender, recipient, label))
        return data

    def replays(self, index: int) -> bool:
        return self.adversary.kind == "replay" and self.adversary.message == index

    def redeliver(self, index: int) -> bytes:
        data = self.transcript[index]
        _, sender, recipient, label = self.log[index]
        self.transcript.append(data)
        self.log.append((index, sender, recipient, label + " (replayed)"))
        return data


@dataclass
class Outcome:
    approved: bool
    error: str | None = None
    replay_error: str | None = None
    auth_code: int | None = None
    transcript: list = dc_field(default_factory=list)
    trace: list = dc_field(default_factory=list)


def run_purchase(network: SimNetwork, ca: CertificationAuthority, cardholder: CardholderState,
                 merchant: MerchantState, gateway: GatewayState, order: OrderInfo,
                 payment: PaymentInfo, issuer_db: dict, rng: SeededRng,
                 current_period: int = DEFAULT_PERIOD) -> Outcome:
    """Drive one purchase end to end and report what the cardholder ends up with.

    ``error`` is the first failure any party detected; the purchase is
    approved only if the cardholder receives and verifies an approval.
    """
    ch, mp, gw = cardholder.participant, merchant.participant, gateway.participant
    out = Outcome(False, transcript=network.transcript)
    trace = out.trace

    def fail(who: str, exc: SetForgeError) -> None:
        trace.append(f"  ! {who} rejected: {exc.name}: {exc}")
        if out.error is None:
            out.error = exc.name

    def send(src: Participant, dst: Participant, label: str, data: bytes) -> bytes:
        trace.append(f"[{network.sent}] {src.role} -> {dst.role}: {label} ({len(data)} bytes)")
        return network.deliver(src.role, dst.role, label, data)

    def seal_for(src: Participant, dst: Participant, message) -> bytes:
        return seal(message.to_bytes(), src.name, src.private, dst.cert, rng).to_bytes()

    def open_from(dst: Participant, src: Participant, data: bytes) -> bytes:
        return open_envelope(Envelope.from_bytes(data), dst.private, src.cert)

    def replay(index: int, who: str, handler) -> None:
        if not network.replays(index):
            return
        trace.append(f"[{index}] adversary replays message {index} to {who}")
        try:
            handler(network.redeliver(index))
        except SetForgeError as exc:
            trace.append(f"  ! {who} rejected replay: {exc.name}: {exc}")
            out.replay_error = exc.name
        else:
            trace.append(f"  ! {who} ACCEPTED a replayed message")

    def reverse(order_id: str, amount: int) -> None:
        data = send(mp, gw, "REVR reversal", seal_for(mp, gw, Reversal(order_id, amount)))
        try:
            rev = Reversal.from_bytes(open_from(gw, mp, data))
            undone = gateway_reverse(gateway, rev, issuer_db)
            trace.append(f"  gateway {'reversed' if undone else 'had nothing to reverse for'} {rev.order_id}")
        except SetForgeError as exc:
            fail("gateway", exc)

    # initialisation: everyone checks the certificates they were handed
    for owner, peers in ((ch, (mp, gw)), (mp, (ch, gw)), (gw, (ch, mp))):
        for peer in peers:
            if not verify_certificate(peer.cert, ca.public):
                fail(owner.role, CertificateRejected(f"{peer.name}'s certificate does not verify"))
                return out
    trace.append(f"certificates verified under CA {ca.name!r}")

    # cardholder: two envelopes, order for the merchant and payment for the gateway
    req = create_purchase_request(ch, order, payment, mp.cert, gw.cert, rng)
    cardholder.pending[order.order_id] = order
    data = send(ch, mp, "PREQ purchase request", req.to_bytes())

    # merchant: open the order, forward the payment
    def on_request(raw: bytes) -> AuthRequest:
        _, areq = merchant_process(merchant, PurchaseRequest.from_bytes(raw), ch.cert)
        return areq

    try:
        auth_req = on_request(data)
        trace.append(f"  merchant opened order {auth_req.order_id} for {auth_req.amount} cents")
    except SetForgeError as exc:
        fail("merchant", exc)
        return out
    replay(0, "merchant", on_request)
    claimed_id = auth_req.order_id
    data = send(mp, gw, "AREQ authorization request", auth_req.to_bytes())

    # gateway: verify and authorize, answer the merchant either way
    def on_auth(raw: bytes) -> AuthResponse:
        return gateway_authorize(gateway, AuthRequest.from_bytes(raw), ch.cert, issuer_db,
                                 current_period)

    try:
        verdict = on_auth(data)
        trace.append(f"  gateway approved {verdict.order_id}, auth code {verdict.auth_code:016x}")
    except SetForgeError as exc:
        fail("gateway", exc)
        verdict = AuthResponse(claimed_id, auth_req.amount, False, 0, exc.name)
    replay(1, "gateway", on_auth)
    data = send(gw, mp, "ARES authorization response", seal_for(gw, mp, verdict))

    # merchant: read the verdict and answer the cardholder
    def on_verdict(raw: bytes) -> AuthResponse:
        resp = AuthResponse.from_bytes(open_from(mp, gw, raw))
        merchant.opened.append(resp.to_bytes())
        if resp.order_id != claimed_id or claimed_id not in merchant.pending:
            raise UnexpectedMessage(f"no pending order matches response for {resp.order_id!r}")
        if resp.amount != merchant.pending[claimed_id].amount:
            raise AmountDisagreement("response amount differs from the pending order")
        merchant.completed[claimed_id] = merchant.pending.pop(claimed_id)
        return resp

    try:
        resp = on_verdict(data)
    except SetForgeError as exc:
        fail("merchant", exc)
        merchant.pending.pop(claimed_id, None)
        reverse(claimed_id, auth_req.amount)
        resp = AuthResponse(claimed_id, auth_req.amount, False, 0, exc.name)
    replay(2, "merchant", on_verdict)
    answer = PurchaseResponse(resp.order_id, resp.amount, resp.approved, resp.auth_code, resp.reason)
    data = send(mp, ch, "PRES purchase response", seal_for(mp, ch, answer))

    # cardholder: accept only an approval for the order it placed
    def on_answer(raw: bytes) -> PurchaseResponse:
        final = PurchaseResponse.from_bytes(open_from(ch, mp, raw))
        expected = cardholder.pending.get(final.order_id)
        if expected is None:
            raise UnexpectedMessage(f"no pending purchase {final.order_id!r}")
        if final.amount != expected.amount:
            raise AmountDisagreement("merchant answered with a different amount")
        cardholder.completed[final.order_id] = cardholder.pending.pop(final.order_id)
        return final

    try:
        final = on_answer(data)
    except SetForgeError as exc:
        fail("cardholder", exc)
        cardholder.pending.pop(order.order_id, None)
        data = send(ch, mp, "CNCL cancel", seal_for(ch, mp, Cancel(order.order_id, order.amount)))
        try:
            cancel = Cancel.from_bytes(open_from(mp, ch, data))
            merchant.opened.append(cancel.to_bytes())
            reverse(cancel.order_id, cancel.amount)
        except SetForgeError as exc2:
            fail("merchant", exc2)
        return out
    replay(3, "cardholder", on_answer)

    if final.approved:
        out.approved = True
        out.auth_code = final.auth_code
        trace.append(f"  cardholder: purchase {final.order_id} approved")
    else:
        trace.append(f"  cardholder: purchase {final.order_id} declined ({final.reason})")
        if out.error is None:
            out.error = final.reason or "Declined"
    return out
