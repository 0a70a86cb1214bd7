"""Forwarding engine: FIB longest-prefix routing, PIT aggregation, and a
content store that authorizes every cache hit of key-carrying content.

Cache hits on content that carries verification keys run the full
authorization check (nonce, timestamp, signature) before anything leaves
the store; content without keys is served unconditionally.  When content
arrives for aggregated interests, each pending payload is checked against
the arriving keys the moment they are available, so collapsed requesters
cannot bypass authorization.  Nonce memory lives and dies with the cache
entry: the entry's remaining lifetime is the replay window, and eviction
erases the nonces.

Routers never hold obfuscation keys; every decision here keys off the
binary name bytes only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import crypto
from .authcheck import (
    DEFAULT_SKEW_MS,
    CheckOutcome,
    FailReason,
    NonceWindow,
    run_authorization_check,
    timestamp_valid,
)
from .wire import (
    AuthorizationPayload,
    ContentObject,
    Interest,
    encode_content,
    encode_name,
    longest_prefix_match,
)

PIT_LIFETIME_MS = 4000.0


class DropReason(enum.Enum):
    NO_ROUTE = "NoRoute"
    UNSOLICITED = "Unsolicited"
    MALFORMED = "Malformed"
    CACHE_EXPIRED = "CacheExpired"

    def __str__(self) -> str:
        return self.value


class VerifyStrategy(enum.Enum):
    INDIVIDUAL = "INDIVIDUAL"
    BATCH = "BATCH"


@dataclass(frozen=True)
class VerifyMode:
    strategy: VerifyStrategy = VerifyStrategy.INDIVIDUAL
    batch_size: int = 10
    batch_timeout_ms: float = 100.0

    @classmethod
    def individual(cls) -> "VerifyMode":
        return cls()

    @classmethod
    def batch(cls, batch_size: int, batch_timeout_ms: float = 100.0) -> "VerifyMode":
        return cls(VerifyStrategy.BATCH, batch_size, batch_timeout_ms)


@dataclass
class CacheEntry:
    content: ContentObject
    inserted_at: float
    expires_at: float

    @property
    def window_ms(self) -> float:
        return self.expires_at - self.inserted_at


@dataclass
class PitEntry:
    records: list  # (iface, AuthorizationPayload | None)
    created_at: float


class EventKind(enum.Enum):
    SERVE_FROM_CACHE = "cs_hit_served"
    FORWARD_INTEREST = "int_forwarded"
    AGGREGATE = "int_aggregated"
    DROP_INTEREST = "int_drop"
    FORWARD_CONTENT = "content_sent"
    PENDING_DROP = "pending_drop"
    CACHE_INSERT = "content_cached"
    DROP_CONTENT = "content_drop"
    CACHE_EVICT = "cache_evicted"
    BATCH_ENQUEUE = "batch_enqueued"
    BATCH_TIMER = "batch_timer"


@dataclass
class RouterEvent:
    kind: EventKind
    name_bytes: bytes = b""
    iface: int | None = None
    wire: bytes | None = None
    reason: object | None = None
    verified: bool = False
    at: float | None = None  # BATCH_TIMER: when to flush
    batch_key: tuple | None = None


@dataclass
class _QueuedCheck:
    iface: int
    payload: AuthorizationPayload


class Router:
    def __init__(
        self,
        verify_mode: VerifyMode | None = None,
        pit_lifetime_ms: float = PIT_LIFETIME_MS,
        skew_ms: float = DEFAULT_SKEW_MS,
        batch_rng=None,
    ):
        self.verify_mode = verify_mode or VerifyMode.individual()
        self.pit_lifetime_ms = pit_lifetime_ms
        self.skew_ms = skew_ms
        self.batch_rng = batch_rng
        self.fib: dict[tuple[bytes, ...], int] = {}
        self.pit: dict[bytes, PitEntry] = {}
        self.cs: dict[bytes, CacheEntry] = {}
        self.nonce_table: dict[bytes, NonceWindow] = {}
        self._batch_queues: dict[tuple, list[_QueuedCheck]] = {}
        self._queued_nonces: dict[bytes, set[bytes]] = {}
        # emission-safety instrumentation: protected cache serves must pair
        # with a passed check
        self.auth_passes = 0
        self.protected_serves = 0

    def add_route(self, prefix, iface: int) -> None:
        self.fib[tuple(prefix)] = iface

    # -- authorization against cached content ----------------------------

    def _candidates(self, payload: AuthorizationPayload, content: ContentObject):
        keys = content.verification_keys
        if payload.group_id_encrypted:
            # a cache cannot decrypt the id, so it trial-verifies every key
            selected = keys
        else:
            selected = [kv for kv in keys if kv[0] == payload.group_id]
        out = []
        for _, key_bytes in selected:
            try:
                group = crypto.signature_group(len(key_bytes) * 8)
            except crypto.UnsupportedParameter:
                continue
            out.append((group, int.from_bytes(key_bytes, "big")))
        return out

    def router_authorization_check(
        self, interest: Interest, entry: CacheEntry, now: float
    ) -> CheckOutcome:
        """Nonce, timestamp, then signature; records the nonce on pass."""
        name_bytes = encode_name(interest.name)
        payload = interest.payload
        if payload is None or not payload.has_auth_info():
            return CheckOutcome(FailReason.MISSING_PAYLOAD)
        window = self.nonce_table.get(name_bytes)
        if window is None:
            window = self.nonce_table[name_bytes] = NonceWindow(entry.inserted_at)
        outcome = run_authorization_check(
            payload,
            name_bytes,
            self._candidates(payload, entry.content),
            window,
            now,
            entry.window_ms,
            self.skew_ms,
            pending_nonces=self._queued_nonces.get(name_bytes, frozenset()),
        )
        if outcome.passed:
            self.auth_passes += 1
        return outcome

    # -- interest pipeline -------------------------------------------------

    def on_interest(self, interest: Interest, in_iface: int, now: float):
        """Process one interest; returns (events, signature verifications)."""
        events: list[RouterEvent] = []
        verifies = 0
        name_bytes = encode_name(interest.name)
        entry = self.cs.get(name_bytes)
        if entry is not None and entry.expires_at <= now:
            self._evict(name_bytes, events)
            entry = None
        if entry is not None:
            if not entry.content.verification_keys:
                events.append(
                    RouterEvent(
                        EventKind.SERVE_FROM_CACHE,
                        name_bytes,
                        in_iface,
                        encode_content(entry.content),
                        reason="public",
                    )
                )
            elif self.verify_mode.strategy is VerifyStrategy.INDIVIDUAL:
                outcome = self.router_authorization_check(interest, entry, now)
                verifies += outcome.verifies
                if outcome.passed:
                    self.protected_serves += 1
                    events.append(
                        RouterEvent(
                            EventKind.SERVE_FROM_CACHE,
                            name_bytes,
                            in_iface,
                            encode_content(entry.content),
                            reason="verified",
                            verified=True,
                        )
                    )
                else:
                    events.append(
                        RouterEvent(
                            EventKind.DROP_INTEREST,
                            name_bytes,
                            reason=outcome.failure,
                        )
                    )
            else:
                batch_events, batch_verifies = self._enqueue_batch(
                    interest, entry, in_iface, name_bytes, now
                )
                events.extend(batch_events)
                verifies += batch_verifies
            return events, verifies

        pit = self.pit.get(name_bytes)
        if pit is not None and pit.created_at + self.pit_lifetime_ms <= now:
            del self.pit[name_bytes]
            pit = None
        if pit is not None:
            pit.records.append((in_iface, interest.payload))
            events.append(RouterEvent(EventKind.AGGREGATE, name_bytes))
            return events, verifies

        out_iface = longest_prefix_match(self.fib, interest.name)
        if out_iface is None:
            events.append(
                RouterEvent(EventKind.DROP_INTEREST, name_bytes, reason=DropReason.NO_ROUTE)
            )
            return events, verifies
        self.pit[name_bytes] = PitEntry([(in_iface, interest.payload)], now)
        from .wire import encode_interest

        events.append(
            RouterEvent(
                EventKind.FORWARD_INTEREST,
                name_bytes,
                out_iface,
                encode_interest(interest),
            )
        )
        return events, verifies

    # -- batched cache-hit verification -----------------------------------

    def _precheck(self, payload, entry, name_bytes, now):
        """Nonce and timestamp part of the check, run at enqueue time."""
        if payload is None or not payload.has_auth_info():
            return FailReason.MISSING_PAYLOAD
        window = self.nonce_table.get(name_bytes)
        if window is None:
            window = self.nonce_table[name_bytes] = NonceWindow(entry.inserted_at)
        window.roll(now, entry.window_ms)
        queued = self._queued_nonces.get(name_bytes, set())
        if payload.nonce in window.nonces or payload.nonce in queued:
            return FailReason.DUPLICATE_NONCE
        if not timestamp_valid(payload.timestamp, now, entry.window_ms, self.skew_ms):
            return FailReason.STALE_TIMESTAMP
        if not self._candidates(payload, entry.content):
            return FailReason.UNKNOWN_GROUP_KEY
        return None

    def _enqueue_batch(self, interest, entry, in_iface, name_bytes, now):
        events: list[RouterEvent] = []
        reason = self._precheck(interest.payload, entry, name_bytes, now)
        if reason is not None:
            events.append(RouterEvent(EventKind.DROP_INTEREST, name_bytes, reason=reason))
            return events, 0
        key = (name_bytes, interest.payload.group_id)
        queue = self._batch_queues.setdefault(key, [])
        queue.append(_QueuedCheck(in_iface, interest.payload))
        self._queued_nonces.setdefault(name_bytes, set()).add(interest.payload.nonce)
        events.append(RouterEvent(EventKind.BATCH_ENQUEUE, name_bytes))
        if len(queue) >= self.verify_mode.batch_size:
            flush_events, verifies = self.flush_batch(key, now)
            events.extend(flush_events)
            return events, verifies
        if len(queue) == 1:
            events.append(
                RouterEvent(
                    EventKind.BATCH_TIMER,
                    name_bytes,
                    at=now + self.verify_mode.batch_timeout_ms,
                    batch_key=key,
                )
            )
        return events, 0

    def flush_batch(self, key: tuple, now: float):
        """Verify one queued batch; a failed batch falls back to per-item checks."""
        events: list[RouterEvent] = []
        verifies = 0
        queue = self._batch_queues.pop(key, [])
        if not queue:
            return events, verifies
        name_bytes = key[0]
        queued_nonces = self._queued_nonces.get(name_bytes, set())
        for item in queue:
            queued_nonces.discard(item.payload.nonce)
        entry = self.cs.get(name_bytes)
        if entry is None or entry.expires_at <= now:
            for item in queue:
                events.append(
                    RouterEvent(
                        EventKind.DROP_INTEREST,
                        name_bytes,
                        reason=DropReason.CACHE_EXPIRED,
                    )
                )
            return events, verifies
        window = self.nonce_table.setdefault(name_bytes, NonceWindow(entry.inserted_at))

        candidates = self._candidates(queue[0].payload, entry.content)
        all_pass = False
        if len(candidates) == 1 and not queue[0].payload.group_id_encrypted:
            group, signing_public = candidates[0]
            items = [
                (
                    (name_bytes, q.payload.group_id, q.payload.nonce, q.payload.timestamp),
                    q.payload.signature,
                )
                for q in queue
            ]
            verifies += 1
            all_pass = crypto.batch_verify(group, signing_public, items, self.batch_rng)
        wire = encode_content(entry.content)
        for item in queue:
            if all_pass:
                passed = True
            else:
                outcome = run_authorization_check(
                    item.payload,
                    name_bytes,
                    self._candidates(item.payload, entry.content),
                    NonceWindow(entry.inserted_at),  # nonce already pre-checked
                    now,
                    entry.window_ms,
                    self.skew_ms,
                )
                verifies += outcome.verifies
                passed = outcome.passed
            if passed:
                window.nonces.add(item.payload.nonce)
                self.auth_passes += 1
                self.protected_serves += 1
                events.append(
                    RouterEvent(
                        EventKind.SERVE_FROM_CACHE,
                        name_bytes,
                        item.iface,
                        wire,
                        reason="verified",
                        verified=True,
                    )
                )
            else:
                events.append(
                    RouterEvent(
                        EventKind.DROP_INTEREST,
                        name_bytes,
                        reason=FailReason.BAD_SIGNATURE,
                    )
                )
        return events, verifies

    # -- content pipeline ---------------------------------------------------

    def on_content(self, content: ContentObject, in_iface: int, now: float):
        events: list[RouterEvent] = []
        verifies = 0
        name_bytes = encode_name(content.name)
        pit = self.pit.pop(name_bytes, None)
        if pit is not None and pit.created_at + self.pit_lifetime_ms <= now:
            pit = None
        if pit is None:
            events.append(
                RouterEvent(EventKind.DROP_CONTENT, name_bytes, reason=DropReason.UNSOLICITED)
            )
            return events, verifies

        expires = float(content.expiry_time)
        if expires > now:
            entry = CacheEntry(content, now, expires)
            self.cs[name_bytes] = entry
            self.nonce_table[name_bytes] = NonceWindow(now)
            events.append(RouterEvent(EventKind.CACHE_INSERT, name_bytes))
        else:
            entry = CacheEntry(content, now, now)

        wire = encode_content(content)
        for iface, payload in pit.records:
            if not content.verification_keys:
                events.append(
                    RouterEvent(
                        EventKind.FORWARD_CONTENT, name_bytes, iface, wire, reason="public"
                    )
                )
                continue
            window = self.nonce_table.get(name_bytes) or NonceWindow(now)
            outcome = run_authorization_check(
                payload,
                name_bytes,
                self._candidates(payload, content) if payload else [],
                window,
                now,
                max(entry.window_ms, 1.0),
                self.skew_ms,
            )
            verifies += outcome.verifies
            if outcome.passed:
                self.auth_passes += 1
                events.append(
                    RouterEvent(
                        EventKind.FORWARD_CONTENT,
                        name_bytes,
                        iface,
                        wire,
                        reason="verified",
                        verified=True,
                    )
                )
            else:
                events.append(
                    RouterEvent(
                        EventKind.PENDING_DROP, name_bytes, iface, reason=outcome.failure
                    )
                )
        return events, verifies

    # -- expiry --------------------------------------------------------------

    def _evict(self, name_bytes: bytes, events: list[RouterEvent]) -> None:
        self.cs.pop(name_bytes, None)
        self.nonce_table.pop(name_bytes, None)
        self._queued_nonces.pop(name_bytes, None)
        events.append(RouterEvent(EventKind.CACHE_EVICT, name_bytes))

    def expire(self, now: float) -> list[RouterEvent]:
        """Flush every cache entry past its expiry together with its nonces."""
        events: list[RouterEvent] = []
        for name_bytes in [nb for nb, e in self.cs.items() if e.expires_at <= now]:
            self._evict(name_bytes, events)
        for name_bytes in [
            nb for nb, p in self.pit.items() if p.created_at + self.pit_lifetime_ms <= now
        ]:
            del self.pit[name_bytes]  # expired pending interests drop silently
        return events
