"""Known-plaintext brute force over reduced DES keyspaces, and crack-time projections.

A reduced keyspace of ``b`` bits holds the DES keys whose 56 effective bits
are zero except for the lowest ``b``.  The 56-bit pattern maps onto the
64-bit key layout seven bits per byte, high bits first, with every parity
position left at zero.

The search reports the *smallest* matching index whatever the worker
count: the range is cut into contiguous chunks handed out in ascending
order, and workers share one best-so-far cell that only ever decreases.  A
worker gives up on its chunk once the chunk lies entirely above that cell.
"""

from __future__ import annotations

import csv
import io
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import blockcipher as bc
from .errors import BadRate, IndexOutOfRange, NotFound
from .numtheory import SeededRng

DESK_SCALE_MAX_BITS = 28
SCALING_MAX_BITS = 24
SECONDS_PER_YEAR = 3.156e7  # 365.25 days
SECONDS_PER_DAY = 86400.0
CHECK_EVERY = 1024
NO_MATCH = -1


@dataclass(frozen=True)
class ReducedKeySpec:
    effective_bits: int

    def __post_init__(self):
        if not 1 <= self.effective_bits <= bc.EFFECTIVE_KEY_BITS:
            raise ValueError("effective_bits must be in 1..56")

    @property
    def size(self) -> int:
        return 1 << self.effective_bits


@dataclass(frozen=True)
class KnownPair:
    plaintext: int
    ciphertext: int


@dataclass(frozen=True)
class CrackReport:
    found_index: int | None
    keys_tried: int
    elapsed: float
    bits: int = 0
    workers: int = 1

    @property
    def keys_per_sec(self) -> float:
        return self.keys_tried / self.elapsed if self.elapsed > 0 else float("inf")


@dataclass(frozen=True)
class Projection:
    worst: float
    expected: float


def pattern_to_key(pattern: int) -> int:
    """Spread a 56-bit pattern over the 64-bit key layout (parity bits zero)."""
    key = 0
    for b in range(8):
        key |= ((pattern >> (7 * (7 - b))) & 0x7F) << (8 * (7 - b) + 1)
    return key


def key_to_pattern(key: int) -> int:
    pattern = 0
    for b in range(8):
        pattern = (pattern << 7) | ((key >> (8 * (7 - b) + 1)) & 0x7F)
    return pattern


def key_from_index(i: int, spec: ReducedKeySpec) -> bc.DesKey:
    if not 0 <= i < spec.size:
        raise IndexOutOfRange(f"index {i} outside [0, 2^{spec.effective_bits})")
    return bc.DesKey(pattern_to_key(i))


def make_pair(index: int, spec: ReducedKeySpec, plaintext: int) -> KnownPair:
    return KnownPair(plaintext, bc.des_encrypt_block(plaintext, key_from_index(index, spec)))


# -- search worker -----------------------------------------------------------

_best = None  # shared multiprocessing.Value in worker processes


def _init_worker(best) -> None:
    global _best
    _best = best


def _scan(plaintext: int, ciphertext: int, lo: int, hi: int, full_scan: bool,
          best) -> tuple[int, int]:
    """Scan [lo, hi); returns (smallest match or NO_MATCH, keys tried)."""
    # Compare the pre-FP round output against IP(ciphertext); FP is a bijection.
    ip_plain = bc.initial_permutation(plaintext)
    target = bc.initial_permutation(ciphertext)
    feistel = bc.feistel
    unpack = bc.unpack_schedule
    schedule = bc.packed_schedule
    to_key = pattern_to_key
    tried = 0
    i = lo
    while i < hi:
        if not full_scan and best is not None and 0 <= best.value <= i:
            break
        stop = min(hi, i + CHECK_EVERY)
        for j in range(i, stop):
            if feistel(ip_plain, unpack(schedule(to_key(j)))) == target:
                tried += j - i + 1
                if best is not None:
                    with best.get_lock():
                        if best.value == NO_MATCH or j < best.value:
                            best.value = j
                if not full_scan:
                    return j, tried
                # full scan: keep going but remember the first hit
                rest = _scan(plaintext, ciphertext, j + 1, hi, True, None)
                return j, tried + rest[1]
        tried += stop - i
        i = stop
    return NO_MATCH, tried


def _scan_task(args) -> tuple[int, int]:
    plaintext, ciphertext, lo, hi, full_scan = args
    return _scan(plaintext, ciphertext, lo, hi, full_scan, _best)


def _chunks(size: int, workers: int) -> list[tuple[int, int]]:
    n = min(size, max(1, workers * 8))
    step = -(-size // n)
    return [(lo, min(size, lo + step)) for lo in range(0, size, step)]


def brute_force(pair: KnownPair, spec: ReducedKeySpec, workers: int = 1, *,
                full_scan: bool = False, max_bits: int = DESK_SCALE_MAX_BITS) -> CrackReport:
    """Find the smallest key index mapping pair.plaintext to pair.ciphertext.

    ``full_scan`` disables early exit so every index is tried (used for
    timing).  Raises NotFound when no index matches.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if spec.effective_bits > max_bits:
        raise ValueError(f"{spec.effective_bits} bits exceeds the desk-scale guard of {max_bits}")
    start = time.perf_counter()
    if workers == 1:
        found, tried = _scan(pair.plaintext, pair.ciphertext, 0, spec.size, full_scan, None)
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        best = ctx.Value("q", NO_MATCH)
        tasks = [(pair.plaintext, pair.ciphertext, lo, hi, full_scan)
                 for lo, hi in _chunks(spec.size, workers)]
        with ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker,
                                 initargs=(best,)) as pool:
            results = list(pool.map(_scan_task, tasks))
        hits = [f for f, _ in results if f != NO_MATCH]
        found = min(hits) if hits else NO_MATCH
        tried = sum(t for _, t in results)
    elapsed = max(time.perf_counter() - start, 1e-9)
    if found == NO_MATCH:
        raise NotFound(f"no key in the {spec.effective_bits}-bit space matches")
    return CrackReport(found, tried, elapsed, spec.effective_bits, workers)


# -- projections -------------------------------------------------------------

def time_to_crack(bits: int, keys_per_sec: float) -> Projection:
    if not keys_per_sec > 0:
        raise BadRate("key rate must be positive")
    worst = 2.0 ** bits / keys_per_sec
    return Projection(worst, worst / 2)


@dataclass(frozen=True)
class TableRow:
    attacker: str
    budget_usd: int
    stated: str
    stated_seconds: float

    @property
    def rate(self) -> float:
        """Keys per second implied by the stated time, read as a full keyspace sweep."""
        return 2.0 ** 56 / self.stated_seconds


# Published 56-bit DES cracking estimates by attacker budget; times read as full sweeps.
DES_ESTIMATES = (
    TableRow("Pedestrian hacker", 400, "38 years", 38 * SECONDS_PER_YEAR),
    TableRow("Small business", 10_000, "556 days", 556 * SECONDS_PER_DAY),
    TableRow("Corporate department", 300_000, "3 hours", 3 * 3600.0),
    TableRow("Large company", 10_000_000, "6 minutes", 6 * 60.0),
    TableRow("Intelligence Agency", 300_000_000, "12 seconds", 12.0),
)

# Public DES challenge results; historical only, no per-machine rate is derivable.
DES_CHALLENGES = (
    ("January 1997", "team led by Rocke Verser", "96 days", 96 * SECONDS_PER_DAY),
    ("February 1998", "Distributed.Net", "41 days", 41 * SECONDS_PER_DAY),
    ("July 1998", "Electronic Frontier Foundation", "56 hours", 56 * 3600.0),
    ("January 1999", "EFF Deep Crack + ~100,000 PCs", "22 hours 15 minutes", 22 * 3600.0 + 15 * 60.0),
)


def format_duration(seconds: float) -> str:
    """Render in the unit a person would pick: years, days, hours, minutes or seconds."""
    if seconds >= 2 * SECONDS_PER_YEAR:
        return f"{seconds / SECONDS_PER_YEAR:.1f} years"
    if seconds >= 2 * SECONDS_PER_DAY:
        return f"{seconds / SECONDS_PER_DAY:.1f} days"
    if seconds >= 2 * 3600:
        return f"{seconds / 3600:.1f} hours"
    if seconds >= 2 * 60:
        return f"{seconds / 60:.1f} minutes"
    return f"{seconds:.1f} seconds"


def estimate_rows() -> list[dict]:
    rows = []
    for row in DES_ESTIMATES:
        proj = time_to_crack(56, row.rate)
        rows.append({
            "attacker": row.attacker,
            "budget_usd": row.budget_usd,
            "keys_per_sec": row.rate,
            "worst_s": proj.worst,
            "expected_s": proj.expected,
            "stated": row.stated,
            "stated_s": row.stated_seconds,
        })
    return rows


# -- scaling experiment ------------------------------------------------------

def scaling_experiment(bits_list, workers: int, rng: SeededRng) -> list[CrackReport]:
    """Plant a random key per size, sweep the whole space, and time it."""
    reports = []
    for bits in bits_list:
        if bits > SCALING_MAX_BITS:
            raise ValueError(f"scaling runs are limited to {SCALING_MAX_BITS} bits")
        spec = ReducedKeySpec(bits)
        planted = rng.randbelow(spec.size)
        pair = make_pair(planted, spec, rng.randbits(64))
        reports.append(brute_force(pair, spec, workers, full_scan=True))
    return reports


CSV_COLUMNS = ("bits", "keys_tried", "elapsed_s", "keys_per_sec", "projected_56bit_worst_s")


def report_rows(reports) -> list[dict]:
    return [{
        "bits": r.bits,
        "keys_tried": r.keys_tried,
        "elapsed_s": r.elapsed,
        "keys_per_sec": r.keys_per_sec,
        "projected_56bit_worst_s": time_to_crack(56, r.keys_per_sec).worst,
    } for r in reports]


def format_report_table(reports) -> str:
    lines = [f"{'bits':>4} {'keys_tried':>12} {'elapsed_s':>10} {'keys_per_sec':>14} "
             f"{'56-bit worst':>16} {'56-bit expected':>16}"]
    for r in reports:
        proj = time_to_crack(56, r.keys_per_sec)
        lines.append(f"{r.bits:>4} {r.keys_tried:>12} {r.elapsed:>10.3f} {r.keys_per_sec:>14.0f} "
                     f"{format_duration(proj.worst):>16} {format_duration(proj.expected):>16}")
    return "\n".join(lines)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report_rows(reports):
        writer.writerow(row)
    return buf.getvalue()


# -- session keys ------------------------------------------------------------

def session_key_search(known_prefix: bytes, unknown_bits: int, strength: int,
                       matches) -> tuple[bytes, int]:
    """Enumerate session keys sharing ``known_prefix`` whose last ``unknown_bits`` bits vary.

    ``matches(enc_bundle, mac_bundle)`` decides whether a candidate is right,
    e.g. by checking an intercepted record's MAC.  The cost depends only on
    the session-key space, never on the derived 168-bit bundles.
    """
    from .channel import derive_bundles

    nbytes = strength // 8
    if len(known_prefix) > nbytes or unknown_bits > 8 * nbytes:
        raise ValueError("prefix and unknown bits exceed the key length")
    base = int.from_bytes(known_prefix.ljust(nbytes, b"\0"), "big")
    tried = 0
    for i in range(1 << unknown_bits):
        candidate = (base | i).to_bytes(nbytes, "big")
        tried += 1
        if matches(*derive_bundles(candidate, strength)):
            return candidate, tried
    raise NotFound("no session key in the search space matches")
