"""Names, message records, and the binary wire format shared by all entities.

Every message is a TLV tree: 2-byte big-endian type, 2-byte big-endian
length, value.  Within a container, fields appear in ascending type order
(repeatable types stay adjacent, in list order) and non-repeatable types
appear at most once, so records with equal fields always encode to
identical bytes.  Routers index PIT/CS/FIB by those bytes, which makes the
canonical encoding a correctness requirement, not a nicety.

Type codes:

    0x0001 Interest                  0x0002 ContentObject
    0x0010 Name                      0x0011 NameComponent (repeatable)
    0x0012 ObfuscatedComponent       0x0013 SchemeTag (1 byte: 0/1/2)
    0x0020 AuthPayload               0x0021 GroupID
    0x0022 Nonce                     0x0023 Timestamp (8-byte BE ms)
    0x0024 PayloadSignature          0x0025 GroupIDEncryptedFlag (1 byte)
    0x0030 ContentData               0x0031 VerificationKeyEntry
    0x0032 ExpiryTime (8-byte BE ms) 0x0033 ProducerSignature
    0x0040 KeyID                     0x0041 ContentObjectHash

A VerificationKeyEntry value is a GroupID TLV followed by the raw key
bytes.  Values are limited to 65535 bytes and whole messages to 1 MiB.

A clear name travels as its components only; the split between routable
prefix and the rest is consumer-side addressing state, so decoded clear
names treat the whole name as routable.  An obfuscated name travels as its
cleartext prefix components followed by one ObfuscatedComponent and a
SchemeTag; the obfuscated suffix is a single opaque component whose
display form is lowercase hex.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

TYPE_INTEREST = 0x0001
TYPE_CONTENT = 0x0002
TYPE_NAME = 0x0010
TYPE_NAME_COMPONENT = 0x0011
TYPE_OBFUSCATED_COMPONENT = 0x0012
TYPE_SCHEME_TAG = 0x0013
TYPE_AUTH_PAYLOAD = 0x0020
TYPE_GROUP_ID = 0x0021
TYPE_NONCE = 0x0022
TYPE_TIMESTAMP = 0x0023
TYPE_PAYLOAD_SIGNATURE = 0x0024
TYPE_GROUP_ID_ENCRYPTED = 0x0025
TYPE_CONTENT_DATA = 0x0030
TYPE_VERIFICATION_KEY = 0x0031
TYPE_EXPIRY_TIME = 0x0032
TYPE_PRODUCER_SIGNATURE = 0x0033
TYPE_KEY_ID = 0x0040
TYPE_CONTENT_OBJECT_HASH = 0x0041

MAX_VALUE_LEN = 65535
MAX_MESSAGE_LEN = 1 << 20


class WireError(Exception):
    """Base class for encoding/decoding failures."""


class EncodeError(WireError):
    pass


class DecodeError(WireError):
    pass


class PrefixMismatch(ValueError):
    """The given prefix is not a leading subsequence of the name."""


class EmptySuffix(ValueError):
    """The prefix consumes the whole name, leaving nothing to obfuscate."""


class SchemeTag(enum.IntEnum):
    NONE = 0
    ENC = 1
    HASH = 2


def _check_component(comp: bytes) -> None:
    if not isinstance(comp, bytes):
        raise TypeError(f"name component must be bytes, got {type(comp).__name__}")
    if not comp:
        raise ValueError("name components must be non-empty")


@dataclass(frozen=True)
class Name:
    """Cleartext hierarchical name plus the length of its routable prefix."""

    components: tuple[bytes, ...]
    routable_prefix_len: int

    def __post_init__(self):
        if not self.components:
            raise ValueError("a name needs at least one component")
        for comp in self.components:
            _check_component(comp)
        if not 1 <= self.routable_prefix_len <= len(self.components):
            raise ValueError("routable_prefix_len out of range")

    @classmethod
    def from_uri(cls, uri: str, routable_prefix_len: int | None = None) -> "Name":
        comps = tuple(c.encode() for c in uri.strip("/").split("/") if c)
        if routable_prefix_len is None:
            routable_prefix_len = len(comps)
        return cls(comps, routable_prefix_len)

    def to_uri(self) -> str:
        return "/" + "/".join(c.decode("utf-8", "backslashreplace") for c in self.components)

    @property
    def routable_prefix(self) -> tuple[bytes, ...]:
        return self.components[: self.routable_prefix_len]


@dataclass(frozen=True)
class ObfuscatedName:
    """Cleartext routable prefix plus one opaque obfuscated suffix component."""

    routable_prefix: tuple[bytes, ...]
    obfuscated_suffix: bytes
    scheme_tag: SchemeTag

    def __post_init__(self):
        if not self.routable_prefix:
            raise ValueError("routable prefix must be non-empty")
        for comp in self.routable_prefix:
            _check_component(comp)
        if self.scheme_tag != SchemeTag.NONE and not self.obfuscated_suffix:
            raise ValueError("obfuscated suffix must be non-empty for ENC/HASH")

    def to_uri(self) -> str:
        prefix = "/".join(c.decode("utf-8", "backslashreplace") for c in self.routable_prefix)
        return f"/{prefix}/{self.obfuscated_suffix.hex()}"


AnyName = Name | ObfuscatedName


@dataclass(frozen=True)
class AuthorizationPayload:
    """Group identity plus optional anti-replay fields carried in an interest.

    ``group_id`` is either the cleartext key digest or, when
    ``group_id_encrypted`` is set, a public-key ciphertext of it.  Identity-
    only payloads (no nonce/timestamp/signature) are how obfuscation-only
    requests tell the producer which key to use.
    """

    group_id: bytes
    group_id_encrypted: bool = False
    nonce: bytes | None = None
    timestamp: int | None = None
    signature: bytes | None = None

    def __post_init__(self):
        if not self.group_id:
            raise ValueError("group_id must be non-empty")
        if self.nonce is not None and not self.nonce:
            raise ValueError("nonce, when present, must be non-empty")
        if self.timestamp is not None and not 0 <= self.timestamp < 1 << 64:
            raise ValueError("timestamp out of uint64 range")

    def has_auth_info(self) -> bool:
        return (
            self.nonce is not None
            and self.timestamp is not None
            and self.signature is not None
        )


@dataclass(frozen=True)
class Interest:
    name: AnyName
    payload: AuthorizationPayload | None = None
    key_id: bytes | None = None
    content_object_hash: bytes | None = None


@dataclass(frozen=True)
class ContentObject:
    """Named data message; carries one verification key per authorized group."""

    name: AnyName
    data: bytes
    verification_keys: tuple[tuple[bytes, bytes], ...] = ()
    expiry_time: int = 0
    producer_signature: bytes = b""

    def __post_init__(self):
        if not 0 <= self.expiry_time < 1 << 64:
            raise ValueError("expiry_time out of uint64 range")
        for group_id, key in self.verification_keys:
            if not group_id or not key:
                raise ValueError("verification key entries need group id and key bytes")


# ---------------------------------------------------------------------------
# name operations


def suffix(name: Name, prefix) -> list[bytes]:
    """Return the components of ``name`` that follow ``prefix``.

    ``prefix`` must be a strict leading subsequence of the name's components.
    """
    prefix = tuple(prefix)
    comps = name.components
    if len(prefix) >= len(comps):
        if comps[: len(prefix)] == prefix and len(prefix) == len(comps):
            raise EmptySuffix("prefix covers the entire name")
        raise PrefixMismatch(f"{prefix!r} is not a leading subsequence")
    if comps[: len(prefix)] != prefix:
        raise PrefixMismatch(f"{prefix!r} is not a leading subsequence")
    return list(comps[len(prefix):])


def name_components(name: AnyName) -> tuple[bytes, ...]:
    """Component view used for table indexing; the obfuscated suffix counts as one."""
    if isinstance(name, Name):
        return name.components
    if name.obfuscated_suffix:
        return name.routable_prefix + (name.obfuscated_suffix,)
    return name.routable_prefix


def longest_prefix_match(table, name):
    """Return the value of the longest table prefix leading ``name``, else None."""
    comps = name_components(name) if isinstance(name, (Name, ObfuscatedName)) else tuple(name)
    for i in range(len(comps), 0, -1):
        hit = table.get(comps[:i])
        if hit is not None:
            return hit
    return None


def pack_components(components) -> bytes:
    """Length-prefixed concatenation; the canonical pre-obfuscation byte form."""
    out = bytearray()
    for comp in components:
        if len(comp) > MAX_VALUE_LEN:
            raise EncodeError("component exceeds 65535 bytes")
        out += struct.pack(">H", len(comp)) + comp
    return bytes(out)


def unpack_components(blob: bytes) -> list[bytes]:
    comps = []
    pos = 0
    while pos < len(blob):
        if pos + 2 > len(blob):
            raise DecodeError("truncated component length")
        (n,) = struct.unpack_from(">H", blob, pos)
        pos += 2
        if pos + n > len(blob):
            raise DecodeError("truncated component")
        comps.append(blob[pos : pos + n])
        pos += n
    return comps


# ---------------------------------------------------------------------------
# TLV primitives


def _tlv(type_code: int, value: bytes) -> bytes:
    if len(value) > MAX_VALUE_LEN:
        raise EncodeError(f"value for type 0x{type_code:04x} exceeds 65535 bytes")
    return struct.pack(">HH", type_code, len(value)) + value


class _Reader:
    __slots__ = ("buf", "pos", "end")

    def __init__(self, buf: bytes, start: int = 0, end: int | None = None):
        self.buf = buf
        self.pos = start
        self.end = len(buf) if end is None else end

    def at_end(self) -> bool:
        return self.pos >= self.end

    def next(self) -> tuple[int, bytes]:
        if self.pos + 4 > self.end:
            raise DecodeError("truncated TLV header")
        type_code, length = struct.unpack_from(">HH", self.buf, self.pos)
        self.pos += 4
        if self.pos + length > self.end:
            raise DecodeError("TLV length overflows container")
        value = self.buf[self.pos : self.pos + length]
        self.pos += length
        return type_code, value


def _decode_uint64(value: bytes, what: str) -> int:
    if len(value) != 8:
        raise DecodeError(f"{what} must be exactly 8 bytes")
    return struct.unpack(">Q", value)[0]


def _decode_flag(value: bytes) -> bool:
    if len(value) != 1 or value[0] not in (0, 1):
        raise DecodeError("flag must be a single 0/1 byte")
    return bool(value[0])


# ---------------------------------------------------------------------------
# names


def encode_name(name: AnyName) -> bytes:
    """Canonical Name TLV; these bytes are what routers key their tables on."""
    if isinstance(name, Name):
        body = b"".join(_tlv(TYPE_NAME_COMPONENT, c) for c in name.components)
    else:
        body = b"".join(_tlv(TYPE_NAME_COMPONENT, c) for c in name.routable_prefix)
        body += _tlv(TYPE_OBFUSCATED_COMPONENT, name.obfuscated_suffix)
        body += _tlv(TYPE_SCHEME_TAG, bytes([name.scheme_tag]))
    return _tlv(TYPE_NAME, body)


def _decode_name_value(value: bytes) -> AnyName:
    reader = _Reader(value)
    comps: list[bytes] = []
    obf_suffix: bytes | None = None
    scheme: SchemeTag | None = None
    while not reader.at_end():
        type_code, v = reader.next()
        if type_code == TYPE_NAME_COMPONENT:
            if obf_suffix is not None or scheme is not None:
                raise DecodeError("name component after obfuscated suffix")
            comps.append(v)
        elif type_code == TYPE_OBFUSCATED_COMPONENT:
            if obf_suffix is not None:
                raise DecodeError("duplicate obfuscated component")
            if scheme is not None:
                raise DecodeError("obfuscated component after scheme tag")
            obf_suffix = v
        elif type_code == TYPE_SCHEME_TAG:
            if scheme is not None:
                raise DecodeError("duplicate scheme tag")
            if len(v) != 1:
                raise DecodeError("scheme tag must be one byte")
            try:
                scheme = SchemeTag(v[0])
            except ValueError:
                raise DecodeError(f"unknown scheme tag {v[0]}") from None
        else:
            raise DecodeError(f"unknown type 0x{type_code:04x} inside name")
    try:
        if obf_suffix is None and scheme is None:
            if not comps:
                raise DecodeError("empty name")
            return Name(tuple(comps), len(comps))
        if obf_suffix is None or scheme is None:
            raise DecodeError("obfuscated name needs both suffix and scheme tag")
        return ObfuscatedName(tuple(comps), obf_suffix, scheme)
    except ValueError as exc:
        raise DecodeError(str(exc)) from None


# ---------------------------------------------------------------------------
# authorization payload


def _encode_payload(p: AuthorizationPayload) -> bytes:
    body = _tlv(TYPE_GROUP_ID, p.group_id)
    if p.nonce is not None:
        body += _tlv(TYPE_NONCE, p.nonce)
    if p.timestamp is not None:
        body += _tlv(TYPE_TIMESTAMP, struct.pack(">Q", p.timestamp))
    if p.signature is not None:
        body += _tlv(TYPE_PAYLOAD_SIGNATURE, p.signature)
    body += _tlv(TYPE_GROUP_ID_ENCRYPTED, bytes([int(p.group_id_encrypted)]))
    return _tlv(TYPE_AUTH_PAYLOAD, body)


def _decode_payload_value(value: bytes) -> AuthorizationPayload:
    reader = _Reader(value)
    seen: dict[int, bytes] = {}
    last_type = 0
    while not reader.at_end():
        type_code, v = reader.next()
        if type_code not in (
            TYPE_GROUP_ID,
            TYPE_NONCE,
            TYPE_TIMESTAMP,
            TYPE_PAYLOAD_SIGNATURE,
            TYPE_GROUP_ID_ENCRYPTED,
        ):
            raise DecodeError(f"unknown type 0x{type_code:04x} inside payload")
        if type_code <= last_type:
            raise DecodeError("payload fields out of canonical order or duplicated")
        last_type = type_code
        seen[type_code] = v
    if TYPE_GROUP_ID not in seen or TYPE_GROUP_ID_ENCRYPTED not in seen:
        raise DecodeError("payload missing group id or encrypted flag")
    try:
        return AuthorizationPayload(
            group_id=seen[TYPE_GROUP_ID],
            group_id_encrypted=_decode_flag(seen[TYPE_GROUP_ID_ENCRYPTED]),
            nonce=seen.get(TYPE_NONCE),
            timestamp=(
                _decode_uint64(seen[TYPE_TIMESTAMP], "timestamp")
                if TYPE_TIMESTAMP in seen
                else None
            ),
            signature=seen.get(TYPE_PAYLOAD_SIGNATURE),
        )
    except ValueError as exc:
        raise DecodeError(str(exc)) from None


# ---------------------------------------------------------------------------
# interest


def encode_interest(interest: Interest) -> bytes:
    body = encode_name(interest.name)
    if interest.payload is not None:
        body += _encode_payload(interest.payload)
    if interest.key_id is not None:
        body += _tlv(TYPE_KEY_ID, interest.key_id)
    if interest.content_object_hash is not None:
        body += _tlv(TYPE_CONTENT_OBJECT_HASH, interest.content_object_hash)
    out = _tlv(TYPE_INTEREST, body)
    if len(out) > MAX_MESSAGE_LEN:
        raise EncodeError("message exceeds 1 MiB")
    return out


def decode_interest(data: bytes) -> Interest:
    type_code, value, _ = _decode_top(data)
    if type_code != TYPE_INTEREST:
        raise DecodeError(f"expected interest, got type 0x{type_code:04x}")
    return _decode_interest_value(value)


def _decode_interest_value(value: bytes) -> Interest:
    reader = _Reader(value)
    name: AnyName | None = None
    payload: AuthorizationPayload | None = None
    key_id: bytes | None = None
    co_hash: bytes | None = None
    last_type = 0
    while not reader.at_end():
        type_code, v = reader.next()
        if type_code <= last_type:
            raise DecodeError("interest fields out of canonical order or duplicated")
        last_type = type_code
        if type_code == TYPE_NAME:
            name = _decode_name_value(v)
        elif type_code == TYPE_AUTH_PAYLOAD:
            payload = _decode_payload_value(v)
        elif type_code == TYPE_KEY_ID:
            key_id = v
        elif type_code == TYPE_CONTENT_OBJECT_HASH:
            co_hash = v
        else:
            raise DecodeError(f"unknown type 0x{type_code:04x} inside interest")
    if name is None:
        raise DecodeError("interest missing name")
    return Interest(name, payload, key_id, co_hash)


# ---------------------------------------------------------------------------
# content object


def encode_content(content: ContentObject) -> bytes:
    body = encode_name(content.name)
    body += _tlv(TYPE_CONTENT_DATA, content.data)
    for group_id, key in content.verification_keys:
        body += _tlv(TYPE_VERIFICATION_KEY, _tlv(TYPE_GROUP_ID, group_id) + key)
    body += _tlv(TYPE_EXPIRY_TIME, struct.pack(">Q", content.expiry_time))
    body += _tlv(TYPE_PRODUCER_SIGNATURE, content.producer_signature)
    out = _tlv(TYPE_CONTENT, body)
    if len(out) > MAX_MESSAGE_LEN:
        raise EncodeError("message exceeds 1 MiB")
    return out


def decode_content(data: bytes) -> ContentObject:
    type_code, value, _ = _decode_top(data)
    if type_code != TYPE_CONTENT:
        raise DecodeError(f"expected content object, got type 0x{type_code:04x}")
    return _decode_content_value(value)


def _decode_key_entry(value: bytes) -> tuple[bytes, bytes]:
    reader = _Reader(value)
    type_code, group_id = reader.next()
    if type_code != TYPE_GROUP_ID:
        raise DecodeError("verification key entry must start with a group id")
    key = value[reader.pos :]
    if not group_id or not key:
        raise DecodeError("verification key entry needs group id and key bytes")
    return group_id, key


def _decode_content_value(value: bytes) -> ContentObject:
    reader = _Reader(value)
    name: AnyName | None = None
    data: bytes | None = None
    keys: list[tuple[bytes, bytes]] = []
    expiry: int | None = None
    producer_sig: bytes | None = None
    last_type = 0
    while not reader.at_end():
        type_code, v = reader.next()
        if type_code == TYPE_VERIFICATION_KEY:
            if last_type > TYPE_VERIFICATION_KEY:
                raise DecodeError("content fields out of canonical order")
            last_type = type_code
            keys.append(_decode_key_entry(v))
            continue
        if type_code <= last_type:
            raise DecodeError("content fields out of canonical order or duplicated")
        last_type = type_code
        if type_code == TYPE_NAME:
            name = _decode_name_value(v)
        elif type_code == TYPE_CONTENT_DATA:
            data = v
        elif type_code == TYPE_EXPIRY_TIME:
            expiry = _decode_uint64(v, "expiry time")
        elif type_code == TYPE_PRODUCER_SIGNATURE:
            producer_sig = v
        else:
            raise DecodeError(f"unknown type 0x{type_code:04x} inside content object")
    if name is None or data is None or expiry is None or producer_sig is None:
        raise DecodeError("content object missing mandatory field")
    return ContentObject(name, data, tuple(keys), expiry, producer_sig)


# ---------------------------------------------------------------------------
# top level


def _decode_top(data: bytes) -> tuple[int, bytes, int]:
    if len(data) > MAX_MESSAGE_LEN:
        raise DecodeError("message exceeds 1 MiB")
    reader = _Reader(data)
    type_code, value = reader.next()
    if not reader.at_end():
        raise DecodeError("trailing bytes after message")
    return type_code, value, reader.pos


def decode_message(data: bytes) -> Interest | ContentObject:
    """Decode either message kind (used by nodes reading a link)."""
    type_code, value, _ = _decode_top(data)
    if type_code == TYPE_INTEREST:
        return _decode_interest_value(value)
    if type_code == TYPE_CONTENT:
        return _decode_content_value(value)
    raise DecodeError(f"unknown top-level type 0x{type_code:04x}")
