"""Shared authorization-check machinery for caches and producers.

The check order is fixed: nonce duplication, then timestamp validity, then
signature verification.  A nonce is recorded only after the whole check
passes.  Nonce memory is scoped to a per-name window; once the window
elapses the stored nonces are erased, and timestamps older than the window
are rejected outright.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import crypto
from .wire import AuthorizationPayload

DEFAULT_SKEW_MS = 1000.0


class FailReason(enum.Enum):
    DUPLICATE_NONCE = "DuplicateNonce"
    STALE_TIMESTAMP = "StaleTimestamp"
    BAD_SIGNATURE = "BadSignature"
    UNKNOWN_GROUP = "UnknownGroup"
    UNKNOWN_GROUP_KEY = "UnknownGroupKey"
    MISSING_PAYLOAD = "MissingPayload"

    def __str__(self) -> str:
        return self.value


@dataclass
class NonceWindow:
    """Nonces seen for one content name within the current window."""

    window_start: float
    nonces: set[bytes] = field(default_factory=set)
    window_ms: float | None = None  # retention period, for sweeping

    def roll(self, now: float, window_ms: float) -> None:
        if now - self.window_start >= window_ms:
            self.nonces.clear()
            self.window_start = now


def timestamp_valid(timestamp: int, now: float, window_ms: float, skew_ms: float) -> bool:
    return now - window_ms <= timestamp <= now + skew_ms


@dataclass
class CheckOutcome:
    failure: FailReason | None
    verifies: int = 0  # signature verifications actually performed

    @property
    def passed(self) -> bool:
        return self.failure is None


def run_authorization_check(
    payload: AuthorizationPayload | None,
    name_bytes: bytes,
    candidates,
    nonce_window: NonceWindow,
    now: float,
    window_ms: float,
    skew_ms: float = DEFAULT_SKEW_MS,
    pending_nonces: frozenset | set = frozenset(),
) -> CheckOutcome:
    """Authorize one interest payload against cached/registered keys.

    ``candidates`` is the list of (SignatureGroup, signing_public) pairs the
    signature may verify under; it has one entry when the payload names a
    group in cleartext and every carried key when the group id is encrypted
    (a cache cannot decrypt, so it trial-verifies).  On success the nonce is
    recorded in ``nonce_window``.
    """
    if payload is None or not payload.has_auth_info():
        return CheckOutcome(FailReason.MISSING_PAYLOAD)
    nonce_window.roll(now, window_ms)
    if payload.nonce in nonce_window.nonces or payload.nonce in pending_nonces:
        return CheckOutcome(FailReason.DUPLICATE_NONCE)
    if not timestamp_valid(payload.timestamp, now, window_ms, skew_ms):
        return CheckOutcome(FailReason.STALE_TIMESTAMP)
    candidates = list(candidates)
    if not candidates:
        return CheckOutcome(FailReason.UNKNOWN_GROUP_KEY)
    verifies = 0
    for group, signing_public in candidates:
        verifies += 1
        if crypto.verify_payload(
            group,
            signing_public,
            name_bytes,
            payload.group_id,
            payload.nonce,
            payload.timestamp,
            payload.signature,
        ):
            nonce_window.nonces.add(payload.nonce)
            return CheckOutcome(None, verifies)
    return CheckOutcome(FailReason.BAD_SIGNATURE, verifies)
