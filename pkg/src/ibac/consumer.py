"""Interest construction for the three access-control modes.

FULL obfuscates the name suffix and attaches the complete authorization
payload (group id, fresh nonce, timestamp, signature over all of it).
OBFUSCATE_ONLY sends the obfuscated name with an identity-only payload so
the producer can pick the right key; no anti-replay fields travel because
that mode does not defend against replay.  AUTH_ONLY sends the cleartext
name with the complete payload, for deployments where name privacy does
not matter but cache hits must still be authorized.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Callable

from . import crypto
from .wire import (
    AuthorizationPayload,
    Interest,
    Name,
    ObfuscatedName,
    SchemeTag,
    encode_name,
    suffix,
)


class ConsumerMode(enum.Enum):
    OBFUSCATE_ONLY = "OBFUSCATE_ONLY"
    FULL = "FULL"
    AUTH_ONLY = "AUTH_ONLY"


@dataclass
class ConsumerContext:
    group: crypto.GroupKeyMaterial
    mode: ConsumerMode
    scheme: SchemeTag
    clock: Callable[[], float]  # milliseconds
    rng: random.Random
    producer_public: crypto.ProducerPublicKey | None = None
    # per-name obfuscation keys provisioned out of band (multi-group content)
    content_keys: dict[tuple[bytes, ...], bytes] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode is not ConsumerMode.AUTH_ONLY and self.scheme not in (
            SchemeTag.ENC,
            SchemeTag.HASH,
        ):
            raise ValueError(f"{self.mode.value} requires an ENC or HASH scheme")


def _group_id_field(ctx: ConsumerContext) -> tuple[bytes, bool]:
    if ctx.producer_public is not None:
        return (
            crypto.encrypt_group_id(ctx.producer_public, ctx.group.group_id, ctx.rng),
            True,
        )
    return ctx.group.group_id, False


def interest_generation(ctx: ConsumerContext, routable_prefix, name: Name) -> Interest:
    """Build one interest for ``name`` under the context's mode and scheme."""
    routable_prefix = tuple(routable_prefix)
    if ctx.mode is ConsumerMode.AUTH_ONLY:
        wire_name = Name(name.components, len(name.components))
        # validate the prefix relationship even though the name stays clear
        suffix(name, routable_prefix)
    else:
        suffix_components = suffix(name, routable_prefix)
        obf_key = ctx.content_keys.get(name.components, ctx.group.obfuscation_key)
        if ctx.scheme is SchemeTag.ENC:
            obf = crypto.obfuscate_enc(obf_key, suffix_components)
        else:
            obf = crypto.obfuscate_hash(obf_key, suffix_components)
        wire_name = ObfuscatedName(routable_prefix, obf, ctx.scheme)

    group_id, encrypted = _group_id_field(ctx)
    if ctx.mode is ConsumerMode.OBFUSCATE_ONLY:
        payload = AuthorizationPayload(group_id, encrypted)
    else:
        kappa = ctx.group.kappa
        nonce = ctx.rng.getrandbits(kappa).to_bytes(kappa // 8, "big")
        timestamp = round(ctx.clock())
        signature = crypto.sign_payload(
            ctx.group, encode_name(wire_name), group_id, nonce, timestamp
        )
        payload = AuthorizationPayload(group_id, encrypted, nonce, timestamp, signature)
    return Interest(wire_name, payload)
