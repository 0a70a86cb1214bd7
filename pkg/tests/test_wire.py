import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibac import wire
from ibac.wire import (
    AuthorizationPayload,
    ContentObject,
    DecodeError,
    EmptySuffix,
    EncodeError,
    Interest,
    Name,
    ObfuscatedName,
    PrefixMismatch,
    SchemeTag,
    decode_content,
    decode_interest,
    decode_message,
    encode_content,
    encode_interest,
    longest_prefix_match,
    suffix,
)

# Hand-encoded oracle for the minimal interest /a (one component, no payload):
#   interest  0001 len=9
#     name    0010 len=5
#       comp  0011 len=1 'a'
MINIMAL_INTEREST_HEX = "00010009001000050011000161"


def make_name(uri, prefix_len=None):
    return Name.from_uri(uri, prefix_len)


# ---------------------------------------------------------------------------
# strategies

components = st.lists(st.binary(min_size=1, max_size=12), min_size=1, max_size=5)


@st.composite
def names(draw):
    comps = tuple(draw(components))
    return Name(comps, len(comps))


@st.composite
def obfuscated_names(draw):
    prefix = tuple(draw(components))
    scheme = draw(st.sampled_from([SchemeTag.ENC, SchemeTag.HASH]))
    suffix_bytes = draw(st.binary(min_size=1, max_size=48))
    return ObfuscatedName(prefix, suffix_bytes, scheme)


@st.composite
def payloads(draw):
    group_id = draw(st.binary(min_size=1, max_size=32))
    encrypted = draw(st.booleans())
    if draw(st.booleans()):
        return AuthorizationPayload(group_id, encrypted)
    return AuthorizationPayload(
        group_id,
        encrypted,
        nonce=draw(st.binary(min_size=16, max_size=16)),
        timestamp=draw(st.integers(min_value=0, max_value=2**64 - 1)),
        signature=draw(st.binary(min_size=1, max_size=96)),
    )


@st.composite
def interests(draw):
    name = draw(st.one_of(names(), obfuscated_names()))
    return Interest(
        name,
        payload=draw(st.none() | payloads()),
        key_id=draw(st.none() | st.binary(min_size=1, max_size=32)),
        content_object_hash=draw(st.none() | st.binary(min_size=1, max_size=32)),
    )


@st.composite
def contents(draw):
    keys = draw(
        st.lists(
            st.tuples(st.binary(min_size=1, max_size=32), st.binary(min_size=1, max_size=64)),
            max_size=3,
        )
    )
    return ContentObject(
        name=draw(st.one_of(names(), obfuscated_names())),
        data=draw(st.binary(max_size=128)),
        verification_keys=tuple(keys),
        expiry_time=draw(st.integers(min_value=0, max_value=2**64 - 1)),
        producer_signature=draw(st.binary(max_size=64)),
    )


# ---------------------------------------------------------------------------
# suffix

def test_suffix_example():
    name = make_name("/edu/uci/ics/home.html")
    assert suffix(name, [b"edu", b"uci"]) == [b"ics", b"home.html"]


def test_suffix_full_prefix_is_error():
    with pytest.raises(EmptySuffix):
        suffix(make_name("/a/b"), [b"a", b"b"])


def test_suffix_mismatch():
    with pytest.raises(PrefixMismatch):
        suffix(make_name("/a/b/c"), [b"x"])
    with pytest.raises(PrefixMismatch):
        suffix(make_name("/a/b"), [b"a", b"b", b"c"])


@given(names(), st.integers(min_value=1, max_value=4))
def test_suffix_reconstructs(name, cut):
    if cut >= len(name.components):
        return
    prefix = name.components[:cut]
    rest = suffix(name, prefix)
    assert tuple(prefix) + tuple(rest) == name.components


# ---------------------------------------------------------------------------
# longest prefix match

def test_lpm_longer_prefix_wins():
    table = {(b"a",): 1, (b"a", b"b"): 2}
    assert longest_prefix_match(table, make_name("/a/b/c")) == 2


def test_lpm_no_match():
    assert longest_prefix_match({(b"a",): 1}, make_name("/z/q")) is None


def test_lpm_partial_divergence():
    # oracle: enumerate all prefixes of /a/x by hand: (a,), (a,x); only (a,) is in the table
    table = {(b"a",): 1, (b"a", b"b"): 2}
    assert longest_prefix_match(table, make_name("/a/x")) == 1


@given(names(), st.dictionaries(st.tuples(st.binary(min_size=1, max_size=3)), st.integers(), max_size=8))
def test_lpm_matches_bruteforce(name, table):
    def oracle():
        best = None
        best_len = -1
        for prefix, iface in table.items():
            if len(prefix) > best_len and name.components[: len(prefix)] == prefix:
                best, best_len = iface, len(prefix)
        return best

    assert longest_prefix_match(table, name) == oracle()


def test_obfuscated_name_components_for_lpm():
    obf = ObfuscatedName((b"edu", b"uci"), b"\x01\x02", SchemeTag.ENC)
    table = {(b"edu", b"uci"): 7}
    assert longest_prefix_match(table, obf) == 7


# ---------------------------------------------------------------------------
# canonical encoding

def test_minimal_interest_matches_hand_encoding():
    interest = Interest(Name((b"a",), 1))
    assert encode_interest(interest).hex() == MINIMAL_INTEREST_HEX
    assert decode_interest(bytes.fromhex(MINIMAL_INTEREST_HEX)) == interest


def test_equal_records_encode_identically():
    a = Interest(
        ObfuscatedName((b"edu",), b"\xaa\xbb", SchemeTag.HASH),
        AuthorizationPayload(b"gid", False, b"n" * 16, 42, b"sig"),
    )
    b = Interest(
        ObfuscatedName((b"edu",), b"\xaa\xbb", SchemeTag.HASH),
        AuthorizationPayload(b"gid", False, b"n" * 16, 42, b"sig"),
    )
    assert encode_interest(a) == encode_interest(b)


@given(interests())
@settings(max_examples=300)
def test_interest_roundtrip(interest):
    assert decode_interest(encode_interest(interest)) == interest


@given(contents())
@settings(max_examples=300)
def test_content_roundtrip(content):
    assert decode_content(encode_content(content)) == content


def test_bulk_roundtrip_10k_messages():
    rng = random.Random(0xC0FFEE)

    def rand_comps():
        return tuple(
            rng.randbytes(rng.randint(1, 10)) for _ in range(rng.randint(1, 4))
        )

    def rand_name():
        if rng.random() < 0.5:
            comps = rand_comps()
            return Name(comps, len(comps))
        return ObfuscatedName(
            rand_comps(),
            rng.randbytes(rng.randint(1, 40)),
            rng.choice([SchemeTag.ENC, SchemeTag.HASH]),
        )

    for i in range(10_000):
        if i % 2 == 0:
            payload = None
            if rng.random() < 0.7:
                payload = AuthorizationPayload(
                    rng.randbytes(32),
                    bool(rng.getrandbits(1)),
                    rng.randbytes(16),
                    rng.getrandbits(48),
                    rng.randbytes(96),
                )
            msg = Interest(rand_name(), payload)
            assert decode_message(encode_interest(msg)) == msg
        else:
            msg = ContentObject(
                rand_name(),
                rng.randbytes(rng.randint(0, 64)),
                tuple(
                    (rng.randbytes(32), rng.randbytes(64))
                    for _ in range(rng.randint(0, 2))
                ),
                rng.getrandbits(48),
                rng.randbytes(32),
            )
            assert decode_message(encode_content(msg)) == msg


def test_truncation_always_fails():
    interest = Interest(
        ObfuscatedName((b"edu", b"uci"), b"\x01" * 20, SchemeTag.ENC),
        AuthorizationPayload(b"g" * 32, False, b"n" * 16, 7, b"s" * 96),
    )
    data = encode_interest(interest)
    for cut in range(len(data)):
        with pytest.raises(DecodeError):
            decode_interest(data[:cut])


def test_trailing_bytes_rejected():
    data = bytes.fromhex(MINIMAL_INTEREST_HEX) + b"\x00"
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_duplicate_name_tlv_rejected():
    name_tlv = bytes.fromhex("00100005" "0011000161")
    body = name_tlv + name_tlv
    data = bytes.fromhex("0001") + len(body).to_bytes(2, "big") + body
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_unknown_type_rejected():
    body = bytes.fromhex("00100005" "0011000161") + bytes.fromhex("7fff0000")
    data = bytes.fromhex("0001") + len(body).to_bytes(2, "big") + body
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_out_of_order_fields_rejected():
    # key id before name violates the ascending-type canon
    body = bytes.fromhex("00400001aa") + bytes.fromhex("00100005" "0011000161")
    data = bytes.fromhex("0001") + len(body).to_bytes(2, "big") + body
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_oversized_value_rejected_on_encode():
    with pytest.raises(EncodeError):
        encode_content(ContentObject(Name((b"a",), 1), b"x" * 70_000))


def test_two_key_entries_in_list_order():
    content = ContentObject(
        Name((b"a",), 1),
        b"data",
        ((b"g1" * 16, b"k1" * 32), (b"g2" * 16, b"k2" * 32)),
        expiry_time=5,
        producer_signature=b"sig",
    )
    data = encode_content(content)
    # oracle: locate the two VerificationKeyEntry TLVs by scanning the raw bytes
    first = data.find(bytes.fromhex("0031"))
    second = data.find(bytes.fromhex("0031"), first + 2)
    assert first != -1 and second != -1
    assert data.find(b"g1" * 16) < data.find(b"g2" * 16)
    decoded = decode_content(data)
    assert decoded.verification_keys == content.verification_keys


def test_scheme_none_permits_empty_suffix():
    name = ObfuscatedName((b"edu",), b"", SchemeTag.NONE)
    interest = Interest(name)
    assert decode_interest(encode_interest(interest)) == interest


def test_enc_scheme_requires_nonempty_suffix():
    with pytest.raises(ValueError):
        ObfuscatedName((b"edu",), b"", SchemeTag.ENC)


def test_bad_scheme_tag_rejected():
    # scheme tag byte 9 is undefined
    body = bytes.fromhex("0011000161") + bytes.fromhex("0012000101") + bytes.fromhex("0013000109")
    name_tlv = bytes.fromhex("0010") + len(body).to_bytes(2, "big") + body
    data = bytes.fromhex("0001") + len(name_tlv).to_bytes(2, "big") + name_tlv
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_timestamp_must_be_eight_bytes():
    payload_body = (
        bytes.fromhex("00210001aa")
        + bytes.fromhex("0023000401020304")
        + bytes.fromhex("0025000100")
    )
    payload_tlv = bytes.fromhex("0020") + len(payload_body).to_bytes(2, "big") + payload_body
    body = bytes.fromhex("00100005" "0011000161") + payload_tlv
    data = bytes.fromhex("0001") + len(body).to_bytes(2, "big") + body
    with pytest.raises(DecodeError):
        decode_interest(data)


def test_pack_unpack_components_roundtrip():
    comps = [b"a", b"bb", b"\x00\xff"]
    assert wire.unpack_components(wire.pack_components(comps)) == comps
