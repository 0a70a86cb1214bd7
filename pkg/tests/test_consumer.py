import random

import pytest

from ibac import crypto
from ibac.consumer import ConsumerContext, ConsumerMode, interest_generation
from ibac.wire import Name, ObfuscatedName, SchemeTag, encode_name

PREFIX = (b"edu", b"uci")
NAME = Name.from_uri("/edu/uci/ics/home.html", routable_prefix_len=2)


def make_ctx(mode=ConsumerMode.FULL, scheme=SchemeTag.ENC, seed=1, clock=lambda: 5000.0,
             producer_public=None, rng_seed=42):
    return ConsumerContext(
        group=crypto.gen_group(128, seed),
        mode=mode,
        scheme=scheme,
        clock=clock,
        rng=random.Random(rng_seed),
        producer_public=producer_public,
    )


def test_full_enc_interest_decrypts_and_verifies():
    ctx = make_ctx()
    interest = interest_generation(ctx, PREFIX, NAME)
    assert isinstance(interest.name, ObfuscatedName)
    assert interest.name.scheme_tag is SchemeTag.ENC
    recovered = crypto.deobfuscate_enc(
        ctx.group.obfuscation_key, interest.name.obfuscated_suffix
    )
    assert recovered == [b"ics", b"home.html"]
    p = interest.payload
    assert crypto.verify_payload(
        ctx.group.group,
        ctx.group.signing_public,
        encode_name(interest.name),
        p.group_id,
        p.nonce,
        p.timestamp,
        p.signature,
    )


def test_auth_only_keeps_cleartext_name():
    ctx = make_ctx(mode=ConsumerMode.AUTH_ONLY)
    interest = interest_generation(ctx, PREFIX, NAME)
    assert isinstance(interest.name, Name)
    assert encode_name(interest.name) == encode_name(Name(NAME.components, len(NAME.components)))
    p = interest.payload
    assert p.has_auth_info()
    assert crypto.verify_payload(
        ctx.group.group,
        ctx.group.signing_public,
        encode_name(interest.name),
        p.group_id,
        p.nonce,
        p.timestamp,
        p.signature,
    )


def test_obfuscate_only_payload_is_identity_only():
    ctx = make_ctx(mode=ConsumerMode.OBFUSCATE_ONLY)
    interest = interest_generation(ctx, PREFIX, NAME)
    p = interest.payload
    assert p.group_id == ctx.group.group_id
    assert p.nonce is None and p.timestamp is None and p.signature is None


def test_repeat_calls_same_name_fresh_nonce_and_signature():
    ctx = make_ctx()
    a = interest_generation(ctx, PREFIX, NAME)
    b = interest_generation(ctx, PREFIX, NAME)
    assert encode_name(a.name) == encode_name(b.name)
    assert a.payload.nonce != b.payload.nonce
    assert a.payload.signature != b.payload.signature


def test_obfuscated_name_identical_across_group_members():
    a = interest_generation(make_ctx(rng_seed=1), PREFIX, NAME)
    b = interest_generation(make_ctx(rng_seed=2), PREFIX, NAME)
    assert encode_name(a.name) == encode_name(b.name)


def test_hash_scheme_uses_keyed_digest():
    ctx = make_ctx(scheme=SchemeTag.HASH)
    interest = interest_generation(ctx, PREFIX, NAME)
    expected = crypto.obfuscate_hash(ctx.group.obfuscation_key, [b"ics", b"home.html"])
    assert interest.name.obfuscated_suffix == expected


def test_content_key_override():
    ctx = make_ctx(scheme=SchemeTag.HASH)
    shared = bytes(range(16))
    ctx.content_keys[NAME.components] = shared
    interest = interest_generation(ctx, PREFIX, NAME)
    assert interest.name.obfuscated_suffix == crypto.obfuscate_hash(
        shared, [b"ics", b"home.html"]
    )


def test_timestamp_equals_clock():
    ctx = make_ctx(clock=lambda: 123456.0)
    interest = interest_generation(ctx, PREFIX, NAME)
    assert interest.payload.timestamp == 123456


def test_nonces_never_repeat_at_desk_scale():
    ctx = make_ctx()
    seen = set()
    for _ in range(50_000):
        nonce = ctx.rng.getrandbits(128).to_bytes(16, "big")
        assert nonce not in seen
        seen.add(nonce)


def test_group_id_linkability_cleartext_vs_encrypted():
    pair = crypto.gen_producer_keypair(77)
    plain_ctx = make_ctx()
    ids = {interest_generation(plain_ctx, PREFIX, NAME).payload.group_id for _ in range(5)}
    assert len(ids) == 1  # cleartext ids are linkable by design

    enc_ctx = make_ctx(producer_public=pair.public)
    blobs = [interest_generation(enc_ctx, PREFIX, NAME).payload for _ in range(5)]
    assert all(p.group_id_encrypted for p in blobs)
    assert len({p.group_id for p in blobs}) == 5  # pairwise distinct ciphertexts
    for p in blobs:
        assert crypto.decrypt_group_id(pair, p.group_id) == enc_ctx.group.group_id


def test_suffix_errors_propagate():
    ctx = make_ctx()
    with pytest.raises(ValueError):
        interest_generation(ctx, (b"com",), NAME)


def test_mode_scheme_validation():
    with pytest.raises(ValueError):
        make_ctx(scheme=SchemeTag.NONE)
