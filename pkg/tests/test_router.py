import random

from ibac import crypto
from ibac.authcheck import FailReason
from ibac.consumer import ConsumerContext, ConsumerMode, interest_generation
from ibac.producer import Producer, ProtectionPolicy
from ibac.router import DropReason, EventKind, Router, VerifyMode
from ibac.wire import Interest, Name, SchemeTag, decode_content, encode_name

PREFIX = (b"edu", b"uci")
HOME = Name.from_uri("/edu/uci/ics/home.html", 2)


def build_world(policy=ProtectionPolicy.FULL, scheme=SchemeTag.ENC, lifetime=60_000,
                verify_mode=None, groups=1):
    materials = [crypto.gen_group(128, seed + 1) for seed in range(groups)]
    producer = Producer(PREFIX)
    for material in materials:
        producer.register_group(material)
    shared = producer.publish(
        HOME, b"data", [m.group_id for m in materials], scheme, lifetime, policy
    )
    router = Router(verify_mode=verify_mode, batch_rng=random.Random(0))
    router.add_route(PREFIX, 9)  # iface 9 points at the producer
    return materials, producer, router, shared


def consumer_ctx(material, clock_value=1000.0, mode=ConsumerMode.FULL,
                 scheme=SchemeTag.ENC, rng_seed=1, content_key=None):
    ctx = ConsumerContext(
        group=material,
        mode=mode,
        scheme=scheme,
        clock=lambda: clock_value,
        rng=random.Random(rng_seed),
    )
    if content_key is not None:
        ctx.content_keys[HOME.components] = content_key
    return ctx


def fetch(material, **kwargs):
    return interest_generation(consumer_ctx(material, **kwargs), PREFIX, HOME)


def serve_and_cache(router, producer, interest, now):
    """Producer answers and the router ingests the content for one pending."""
    events, _ = router.on_interest(interest, in_iface=0, now=now)
    assert events[-1].kind is EventKind.FORWARD_INTEREST
    response = producer.content_object_generation(interest, now)
    assert response.served
    events, verifies = router.on_content(response.content, in_iface=9, now=now + 1)
    return response.content, events, verifies


# ---------------------------------------------------------------------------
# cache-hit authorization

def test_check_pass_records_nonce_then_duplicate_fails():
    (material,), producer, router, _ = build_world()
    first = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, first, 1000.0)
    name_bytes = encode_name(first.name)

    second = fetch(material, rng_seed=2)
    entry = router.cs[name_bytes]
    outcome = router.router_authorization_check(second, entry, 1500.0)
    assert outcome.passed
    assert second.payload.nonce in router.nonce_table[name_bytes].nonces
    replay = router.router_authorization_check(second, entry, 1600.0)
    assert replay.failure is FailReason.DUPLICATE_NONCE


def test_check_stale_timestamp():
    (material,), producer, router, _ = build_world(lifetime=2000)
    first = fetch(material, clock_value=1000.0)
    serve_and_cache(router, producer, first, 1000.0)
    old = fetch(material, clock_value=900.0, rng_seed=3)
    entry = router.cs[encode_name(first.name)]
    outcome = router.router_authorization_check(old, entry, 3500.0)
    assert outcome.failure is FailReason.STALE_TIMESTAMP


def test_check_unknown_group_key():
    (material,), producer, router, shared = build_world(scheme=SchemeTag.HASH)
    first = fetch(material, scheme=SchemeTag.HASH)
    serve_and_cache(router, producer, first, 1000.0)
    outsider = crypto.gen_group(128, 50)
    foreign = interest_generation(
        consumer_ctx(
            outsider, scheme=SchemeTag.HASH, rng_seed=4, content_key=material.obfuscation_key
        ),
        PREFIX,
        HOME,
    )
    entry = router.cs[encode_name(first.name)]
    outcome = router.router_authorization_check(foreign, entry, 1500.0)
    assert outcome.failure is FailReason.UNKNOWN_GROUP_KEY


def test_check_missing_payload():
    (material,), producer, router, _ = build_world()
    first = fetch(material)
    serve_and_cache(router, producer, first, 1000.0)
    bare = Interest(first.name)
    entry = router.cs[encode_name(first.name)]
    assert router.router_authorization_check(bare, entry, 1500.0).failure is FailReason.MISSING_PAYLOAD


# ---------------------------------------------------------------------------
# interest pipeline

def test_miss_forwards_and_creates_pit():
    (material,), producer, router, _ = build_world()
    interest = fetch(material)
    events, _ = router.on_interest(interest, in_iface=0, now=1000.0)
    assert [e.kind for e in events] == [EventKind.FORWARD_INTEREST]
    assert events[0].iface == 9
    assert encode_name(interest.name) in router.pit


def test_second_pending_interest_aggregates():
    (material,), producer, router, _ = build_world()
    first = fetch(material, rng_seed=1)
    second = fetch(material, rng_seed=2)
    router.on_interest(first, in_iface=0, now=1000.0)
    events, _ = router.on_interest(second, in_iface=3, now=1001.0)
    assert [e.kind for e in events] == [EventKind.AGGREGATE]
    records = router.pit[encode_name(first.name)].records
    assert [iface for iface, _ in records] == [0, 3]


def test_no_route_drop():
    router = Router()
    interest = Interest(Name((b"nowhere",), 1))
    events, _ = router.on_interest(interest, in_iface=0, now=0.0)
    assert events[0].kind is EventKind.DROP_INTEREST
    assert events[0].reason is DropReason.NO_ROUTE


def test_cache_hit_pass_serves_and_replay_drops():
    (material,), producer, router, _ = build_world()
    first = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, first, 1000.0)
    second = fetch(material, rng_seed=2)
    events, verifies = router.on_interest(second, in_iface=4, now=1500.0)
    assert verifies == 1
    assert events[0].kind is EventKind.SERVE_FROM_CACHE
    assert events[0].iface == 4
    assert decode_content(events[0].wire).data == b"data"
    replay_events, _ = router.on_interest(second, in_iface=4, now=1600.0)
    assert replay_events[0].kind is EventKind.DROP_INTEREST
    assert replay_events[0].reason is FailReason.DUPLICATE_NONCE


def test_forwarding_depends_only_on_name_bytes():
    (material,), producer, router, _ = build_world()
    a = fetch(material, rng_seed=1)
    b = fetch(material, rng_seed=2)  # same name, different payload
    events_a, _ = router.on_interest(a, in_iface=0, now=1000.0)
    fresh = Router()
    fresh.add_route(PREFIX, 9)
    events_b, _ = fresh.on_interest(b, in_iface=0, now=1000.0)
    assert [e.kind for e in events_a] == [e.kind for e in events_b]
    assert events_a[0].iface == events_b[0].iface
    assert events_a[0].name_bytes == events_b[0].name_bytes


# ---------------------------------------------------------------------------
# content pipeline

def test_unsolicited_content_dropped():
    (material,), producer, router, _ = build_world()
    interest = fetch(material)
    response = producer.content_object_generation(interest, 1000.0)
    events, _ = router.on_content(response.content, in_iface=9, now=1001.0)
    assert events[0].kind is EventKind.DROP_CONTENT
    assert events[0].reason is DropReason.UNSOLICITED
    assert encode_name(interest.name) not in router.cs


def test_two_authorized_pendings_both_served_and_pit_removed():
    (material,), producer, router, _ = build_world()
    first = fetch(material, rng_seed=1)
    second = fetch(material, rng_seed=2)
    router.on_interest(first, in_iface=0, now=1000.0)
    router.on_interest(second, in_iface=3, now=1001.0)
    response = producer.content_object_generation(first, 1002.0)
    events, verifies = router.on_content(response.content, in_iface=9, now=1003.0)
    kinds = [e.kind for e in events]
    assert kinds.count(EventKind.FORWARD_CONTENT) == 2
    assert {e.iface for e in events if e.kind is EventKind.FORWARD_CONTENT} == {0, 3}
    assert verifies == 2
    assert encode_name(first.name) not in router.pit
    # nonces of both pendings are recorded: replaying either now fails
    entry = router.cs[encode_name(first.name)]
    assert router.router_authorization_check(first, entry, 1004.0).failure is FailReason.DUPLICATE_NONCE


def test_unauthorized_pending_gets_nothing():
    materials, producer, router, shared = build_world(scheme=SchemeTag.HASH, groups=2)
    g1, g2 = materials
    authorized = interest_generation(
        consumer_ctx(g1, scheme=SchemeTag.HASH, rng_seed=1, content_key=shared), PREFIX, HOME
    )
    outsider_material = crypto.gen_group(128, 60)
    outsider = interest_generation(
        consumer_ctx(outsider_material, scheme=SchemeTag.HASH, rng_seed=2, content_key=shared),
        PREFIX,
        HOME,
    )
    router.on_interest(authorized, in_iface=0, now=1000.0)
    router.on_interest(outsider, in_iface=3, now=1001.0)
    response = producer.content_object_generation(authorized, 1002.0)
    events, _ = router.on_content(response.content, in_iface=9, now=1003.0)
    forwarded = [e for e in events if e.kind is EventKind.FORWARD_CONTENT]
    dropped = [e for e in events if e.kind is EventKind.PENDING_DROP]
    assert [e.iface for e in forwarded] == [0]
    assert [e.iface for e in dropped] == [3]
    assert dropped[0].reason is FailReason.UNKNOWN_GROUP_KEY


def test_public_content_forwarded_unconditionally():
    producer = Producer(PREFIX)
    producer.publish(HOME, b"pub", [], SchemeTag.ENC, 60_000, ProtectionPolicy.PUBLIC)
    router = Router()
    router.add_route(PREFIX, 9)
    interest = Interest(Name(HOME.components, len(HOME.components)))
    router.on_interest(interest, in_iface=0, now=0.0)
    response = producer.content_object_generation(interest, 1.0)
    events, verifies = router.on_content(response.content, in_iface=9, now=2.0)
    assert verifies == 0
    assert any(e.kind is EventKind.FORWARD_CONTENT and e.reason == "public" for e in events)
    # cached copy served without any check
    again = Interest(Name(HOME.components, len(HOME.components)))
    events, verifies = router.on_interest(again, in_iface=5, now=3.0)
    assert verifies == 0
    assert events[0].kind is EventKind.SERVE_FROM_CACHE


# ---------------------------------------------------------------------------
# expiry

def test_expire_flushes_cache_and_nonces():
    (material,), producer, router, _ = build_world(lifetime=2000)
    interest = fetch(material)
    content, _, _ = serve_and_cache(router, producer, interest, 1000.0)
    name_bytes = encode_name(interest.name)
    assert name_bytes in router.cs and name_bytes in router.nonce_table
    router.expire(content.expiry_time - 1.0)
    assert name_bytes in router.cs  # boundary: one ms early keeps the entry
    events = router.expire(float(content.expiry_time))
    assert any(e.kind is EventKind.CACHE_EVICT for e in events)
    assert name_bytes not in router.cs and name_bytes not in router.nonce_table


def test_expired_entry_treated_as_miss_on_interest():
    (material,), producer, router, _ = build_world(lifetime=2000)
    first = fetch(material, clock_value=1000.0)
    content, _, _ = serve_and_cache(router, producer, first, 1000.0)
    late = fetch(material, clock_value=float(content.expiry_time + 10), rng_seed=8)
    events, _ = router.on_interest(late, in_iface=0, now=float(content.expiry_time + 10))
    kinds = [e.kind for e in events]
    assert EventKind.CACHE_EVICT in kinds
    assert EventKind.FORWARD_INTEREST in kinds


def test_shorter_expiry_bounds_revoked_access():
    # a revoked member can hit the cache only until the entry expires
    (material,), producer, router, _ = build_world(lifetime=1500)
    first = fetch(material, clock_value=1000.0)
    content, _, _ = serve_and_cache(router, producer, first, 1000.0)
    producer.revoke_group(material.group_id)
    within = fetch(material, clock_value=1200.0, rng_seed=5)
    events, _ = router.on_interest(within, in_iface=0, now=1200.0)
    assert events[0].kind is EventKind.SERVE_FROM_CACHE
    after = fetch(material, clock_value=4000.0, rng_seed=6)
    events, _ = router.on_interest(after, in_iface=0, now=4000.0)
    assert EventKind.FORWARD_INTEREST in [e.kind for e in events]
    assert not producer.content_object_generation(after, 4001.0).served


# ---------------------------------------------------------------------------
# batched verification

def test_batch_mode_flushes_at_size():
    (material,), producer, router, _ = build_world(
        verify_mode=VerifyMode.batch(batch_size=3)
    )
    warm = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, warm, 1000.0)
    all_events = []
    verifies_total = 0
    for i in range(3):
        interest = fetch(material, rng_seed=10 + i)
        events, verifies = router.on_interest(interest, in_iface=i, now=1500.0 + i)
        all_events += events
        verifies_total += verifies
    serves = [e for e in all_events if e.kind is EventKind.SERVE_FROM_CACHE]
    assert len(serves) == 3
    assert {e.iface for e in serves} == {0, 1, 2}
    assert verifies_total == 1  # one batched check covered all three


def test_batch_mode_timer_requested_for_partial_batch():
    (material,), producer, router, _ = build_world(
        verify_mode=VerifyMode.batch(batch_size=5, batch_timeout_ms=50)
    )
    warm = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, warm, 1000.0)
    interest = fetch(material, rng_seed=2)
    events, _ = router.on_interest(interest, in_iface=0, now=1500.0)
    timers = [e for e in events if e.kind is EventKind.BATCH_TIMER]
    assert len(timers) == 1
    assert timers[0].at == 1550.0
    flush_events, verifies = router.flush_batch(timers[0].batch_key, 1550.0)
    assert [e.kind for e in flush_events] == [EventKind.SERVE_FROM_CACHE]
    assert verifies == 1


def test_batch_mode_fallback_identifies_passers():
    (material,), producer, router, _ = build_world(
        verify_mode=VerifyMode.batch(batch_size=3)
    )
    warm = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, warm, 1000.0)
    good1 = fetch(material, rng_seed=20)
    good2 = fetch(material, rng_seed=21)
    bad = fetch(material, rng_seed=22)
    bad = Interest(
        bad.name,
        type(bad.payload)(
            bad.payload.group_id,
            False,
            bad.payload.nonce,
            bad.payload.timestamp,
            bad.payload.signature[:-1] + b"\xff",
        ),
    )
    all_events = []
    total_verifies = 0
    for i, interest in enumerate((good1, bad, good2)):
        events, verifies = router.on_interest(interest, in_iface=i, now=1500.0 + i)
        all_events += events
        total_verifies += verifies
    serves = {e.iface for e in all_events if e.kind is EventKind.SERVE_FROM_CACHE}
    drops = [e for e in all_events if e.kind is EventKind.DROP_INTEREST]
    assert serves == {0, 2}
    assert len(drops) == 1 and drops[0].reason is FailReason.BAD_SIGNATURE
    assert total_verifies == 1 + 3  # failed batch, then one check per item


def test_batch_mode_duplicate_nonce_rejected_at_enqueue():
    (material,), producer, router, _ = build_world(
        verify_mode=VerifyMode.batch(batch_size=4)
    )
    warm = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, warm, 1000.0)
    interest = fetch(material, rng_seed=30)
    router.on_interest(interest, in_iface=0, now=1500.0)
    events, _ = router.on_interest(interest, in_iface=1, now=1501.0)
    assert events[0].kind is EventKind.DROP_INTEREST
    assert events[0].reason is FailReason.DUPLICATE_NONCE


def test_encrypted_group_id_trial_verified_at_cache():
    pair = crypto.gen_producer_keypair(5)
    materials = [crypto.gen_group(128, seed + 1) for seed in range(2)]
    producer = Producer(PREFIX, keypair=pair)
    for material in materials:
        producer.register_group(material)
    shared = producer.publish(
        HOME, b"data", [m.group_id for m in materials], SchemeTag.HASH, 60_000,
        ProtectionPolicy.FULL,
    )
    router = Router()
    router.add_route(PREFIX, 9)

    def enc_ctx(material, rng_seed):
        ctx = consumer_ctx(material, scheme=SchemeTag.HASH, rng_seed=rng_seed,
                           content_key=shared)
        ctx.producer_public = pair.public
        return ctx

    warm = interest_generation(enc_ctx(materials[0], 1), PREFIX, HOME)
    serve_and_cache(router, producer, warm, 1000.0)
    # second group member also hides its id; the cache cannot decrypt, so it
    # trial-verifies against both carried keys
    hidden = interest_generation(enc_ctx(materials[1], 2), PREFIX, HOME)
    assert hidden.payload.group_id_encrypted
    events, verifies = router.on_interest(hidden, in_iface=2, now=1500.0)
    assert events[0].kind is EventKind.SERVE_FROM_CACHE
    assert verifies >= 1


# ---------------------------------------------------------------------------
# instrumentation

def test_protected_serves_never_exceed_passes():
    (material,), producer, router, _ = build_world()
    first = fetch(material, rng_seed=1)
    serve_and_cache(router, producer, first, 1000.0)
    for i in range(5):
        router.on_interest(fetch(material, rng_seed=40 + i), in_iface=0, now=2000.0 + i)
    bare = Interest(first.name)
    router.on_interest(bare, in_iface=0, now=2010.0)
    assert router.protected_serves <= router.auth_passes
    assert router.protected_serves == 5
