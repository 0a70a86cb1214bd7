"""Deterministic discrete-event network simulator.

Nodes exchange encoded messages over fixed-latency links.  Routers and
producers serve one message at a time: a message's handler runs at its
service start (arrival or the end of the previous service, whichever is
later) and its effects leave the node at service completion, which costs
the node's processing time plus one verification time per signature check
actually performed.  Queueing delay therefore emerges from the event loop.
All randomness (traffic, nonces, encryption, batch exponents, adversary
choices) flows from one seeded generator, so a run is a pure function of
its configuration and seed.

The emission log is append-only, one line per event:
``time<TAB>node<TAB>kind<TAB>name-hex<TAB>reason``.
"""

from __future__ import annotations

import heapq
import random
from collections import Counter, deque
from dataclasses import dataclass, field

from . import crypto
from .consumer import ConsumerContext, interest_generation
from .producer import Producer
from .router import EventKind, Router
from .wire import (
    AuthorizationPayload,
    ContentObject,
    DecodeError,
    Interest,
    Name,
    ObfuscatedName,
    SchemeTag,
    decode_message,
    encode_interest,
    encode_name,
    longest_prefix_match,
)

# interest-processing completions, the events service-rate measurement counts
INTEREST_COMPLETION_KINDS = frozenset(
    {"cs_hit_served", "int_forwarded", "int_aggregated", "int_drop"}
)

REPLAY_SAME_PATH = "REPLAY_SAME_PATH"
REPLAY_CROSS_PATH = "REPLAY_CROSS_PATH"
FORGE_PAYLOAD = "FORGE_PAYLOAD"
NAME_PROBE = "NAME_PROBE"
ATTACK_KINDS = (REPLAY_SAME_PATH, REPLAY_CROSS_PATH, FORGE_PAYLOAD, NAME_PROBE)


class ConfigError(ValueError):
    pass


@dataclass
class AdversaryAction:
    kind: str
    at_ms: float
    target: str
    count: int = 1
    interval_ms: float = 1.0
    capture: int | str = "cycle"  # capture index, or "cycle" over all captures
    include_captured: bool = False
    probe_prefix: tuple[bytes, ...] | None = None
    probe_scheme: SchemeTag = SchemeTag.HASH
    probe_suffix_len: int = 32
    label: str = ""


@dataclass
class TrafficProfile:
    consumer: str
    lambda_per_s: float
    delta: float
    start_ms: float
    ibac_targets: list[Name]
    public_targets: list[Name]
    max_interests: int | None = None
    end_ms: float | None = None


@dataclass
class Delivery:
    time_ms: float
    consumer: str
    name: Name
    data: bytes


@dataclass
class AttackStat:
    index: int
    kind: str
    at_ms: float
    label: str
    attempts: int
    successes: int


@dataclass
class _Capture:
    time_ms: float
    wire: bytes


@dataclass
class _ConsumerState:
    ctx: ConsumerContext
    fib: dict = field(default_factory=dict)
    outstanding: dict = field(default_factory=dict)  # name bytes -> [Name]


@dataclass
class _AdversaryState:
    material: crypto.GroupKeyMaterial
    captures: list = field(default_factory=list)
    pending: dict = field(default_factory=dict)  # name bytes -> [(kind, idx)]
    attempts: Counter = field(default_factory=Counter)
    successes: Counter = field(default_factory=Counter)
    captured_probe_outcomes: dict = field(default_factory=dict)  # name hex -> count


@dataclass
class _NodeRuntime:
    node_id: str
    role: str
    obj: object
    tau_process_ms: float = 0.0
    tau_verify_ms: float = 0.0
    clock_offset_ms: float = 0.0
    busy: bool = False
    work_queue: deque = field(default_factory=deque)
    ifaces: dict = field(default_factory=dict)  # iface -> (peer, latency)
    iface_to: dict = field(default_factory=dict)  # peer -> iface


@dataclass
class RunResult:
    seed: int
    log_lines: list[str]
    counters: dict
    drops: dict
    producer_interests: dict
    deliveries: list[Delivery]
    attacks: list[AttackStat]
    captured_probe_outcomes: dict
    conservation: dict
    wire_trace: list
    nodes: dict

    def drop_total(self, reason: str | None = None) -> int:
        if reason is None:
            return sum(self.drops.values())
        return sum(v for (node, r), v in self.drops.items() if r == reason)

    def attack_stat(self, kind: str, index: int | None = None) -> AttackStat:
        hits = [a for a in self.attacks if a.kind == kind]
        if index is not None:
            hits = [a for a in hits if a.index == index]
        if len(hits) != 1:
            raise KeyError(f"{kind}[{index}] matched {len(hits)} actions")
        return hits[0]


class Simulation:
    def __init__(
        self,
        seed: int = 0,
        horizon_ms: float = 60_000.0,
        expiry_sweep_ms: float = 500.0,
        record_wire: bool = False,
    ):
        self.seed = seed
        self.rng = random.Random(seed)
        self.horizon_ms = horizon_ms
        self.expiry_sweep_ms = expiry_sweep_ms
        self.record_wire = record_wire
        self.now = 0.0
        self._queue: list = []
        self._seq = 0
        self.nodes: dict[str, _NodeRuntime] = {}
        self._taps: dict[frozenset, list[str]] = {}
        self.actions: list[AdversaryAction] = []
        self._action_adversary: dict[int, str] = {}
        self.traffic: TrafficProfile | None = None
        self._traffic_sent = 0
        self.content_prefixes: dict[tuple[bytes, ...], tuple[bytes, ...]] = {}
        self.log_lines: list[str] = []
        self.counters: Counter = Counter()
        self.drops: Counter = Counter()
        self.producer_interests: Counter = Counter()
        self.deliveries: list[Delivery] = []
        self.wire_trace: list = []

    # -- construction -----------------------------------------------------

    def _add_node(self, rt: _NodeRuntime) -> _NodeRuntime:
        if rt.node_id in self.nodes:
            raise ConfigError(f"duplicate node id {rt.node_id}")
        self.nodes[rt.node_id] = rt
        return rt

    def add_router(
        self,
        node_id: str,
        router: Router | None = None,
        tau_process_s: float = 0.0005,
        tau_verify_s: float = 0.0005,
    ) -> Router:
        router = router or Router()
        if router.batch_rng is None:
            router.batch_rng = self.rng
        self._add_node(
            _NodeRuntime(
                node_id,
                "router",
                router,
                tau_process_ms=tau_process_s * 1000.0,
                tau_verify_ms=tau_verify_s * 1000.0,
            )
        )
        return router

    def add_producer(
        self,
        node_id: str,
        producer: Producer,
        tau_process_s: float = 0.0005,
        tau_verify_s: float = 0.0005,
    ) -> Producer:
        self._add_node(
            _NodeRuntime(
                node_id,
                "producer",
                producer,
                tau_process_ms=tau_process_s * 1000.0,
                tau_verify_ms=tau_verify_s * 1000.0,
            )
        )
        return producer

    def add_consumer(
        self,
        node_id: str,
        group: crypto.GroupKeyMaterial,
        mode,
        scheme: SchemeTag = SchemeTag.ENC,
        producer_public=None,
        content_keys: dict | None = None,
        clock_offset_ms: float = 0.0,
    ) -> _ConsumerState:
        ctx = ConsumerContext(
            group=group,
            mode=mode,
            scheme=scheme,
            clock=lambda offset=clock_offset_ms: self.now + offset,
            rng=self.rng,
            producer_public=producer_public,
            content_keys=dict(content_keys or {}),
        )
        state = _ConsumerState(ctx)
        self._add_node(
            _NodeRuntime(node_id, "consumer", state, clock_offset_ms=clock_offset_ms)
        )
        return state

    def add_adversary(self, node_id: str, material: crypto.GroupKeyMaterial) -> _AdversaryState:
        state = _AdversaryState(material)
        self._add_node(_NodeRuntime(node_id, "adversary", state))
        return state

    def add_link(self, a: str, b: str, latency_ms: float) -> None:
        for end in (a, b):
            if end not in self.nodes:
                raise ConfigError(f"link references unknown node {end}")
        rt_a, rt_b = self.nodes[a], self.nodes[b]
        ia, ib = len(rt_a.ifaces), len(rt_b.ifaces)
        rt_a.ifaces[ia] = (b, latency_ms)
        rt_a.iface_to[b] = ia
        rt_b.ifaces[ib] = (a, latency_ms)
        rt_b.iface_to[a] = ib

    def add_tap(self, a: str, b: str, adversary: str) -> None:
        self._taps.setdefault(frozenset((a, b)), []).append(adversary)

    def register_content_prefix(self, name: Name, prefix) -> None:
        self.content_prefixes[name.components] = tuple(prefix)

    def schedule_fetch(self, consumer: str, name: Name, at_ms: float, prefix=None) -> None:
        if prefix is None:
            prefix = self.content_prefixes.get(name.components)
        if prefix is None:
            raise ConfigError(f"no routable prefix known for {name.to_uri()}")
        self._schedule(at_ms, consumer, "timer", ("fetch", name, tuple(prefix)))

    def set_traffic(self, profile: TrafficProfile) -> None:
        self.traffic = profile
        self._schedule(profile.start_ms, profile.consumer, "timer", ("traffic",))

    def schedule_action(self, adversary: str, action: AdversaryAction) -> int:
        if action.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown adversary action kind {action.kind}")
        index = len(self.actions)
        self.actions.append(action)
        self._action_adversary[index] = adversary
        self._schedule(action.at_ms, adversary, "timer", ("action", index))
        return index

    def schedule_rekey(
        self, at_ms: float, producer: str, name: Name, new_group_materials, revoke_ids
    ) -> None:
        self._schedule(
            at_ms,
            producer,
            "timer",
            ("rekey", name, tuple(new_group_materials), tuple(revoke_ids)),
        )

    # -- event machinery ----------------------------------------------------

    def _schedule(self, t: float, node: str, kind: str, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (t, self._seq, node, kind, payload))

    def log_event(self, t: float, node: str, kind: str, name_bytes: bytes, reason="") -> None:
        self.log_lines.append(
            f"{t:.3f}\t{node}\t{kind}\t{name_bytes.hex()}\t{reason}"
        )

    def _send(self, rt: _NodeRuntime, iface: int, wire: bytes, t: float) -> None:
        peer_id, latency = rt.ifaces[iface]
        if self.record_wire:
            self.wire_trace.append((t, rt.node_id, peer_id, wire))
        if rt.role != "adversary" and wire[:2] == b"\x00\x01":
            for adv_id in self._taps.get(frozenset((rt.node_id, peer_id)), ()):
                self.nodes[adv_id].obj.captures.append(_Capture(t, wire))
        arrival_iface = self.nodes[peer_id].iface_to[rt.node_id]
        self._schedule(t + latency, peer_id, "arrival", (arrival_iface, wire))

    def run(self) -> RunResult:
        for node_id, rt in self.nodes.items():
            if rt.role in ("router", "producer"):
                self._schedule(self.expiry_sweep_ms, node_id, "timer", ("expire",))
        while self._queue:
            t, _, node_id, kind, payload = heapq.heappop(self._queue)
            if t > self.horizon_ms:
                break
            self.now = t
            rt = self.nodes[node_id]
            if kind == "arrival":
                self._handle_arrival(rt, t, *payload)
            elif kind == "service_done":
                self._service_done(rt, t, payload[0])
            else:
                self._handle_timer(rt, t, payload)
        return self._result()

    # -- arrivals and the one-message-at-a-time service discipline -------------

    def _handle_arrival(self, rt: _NodeRuntime, t: float, iface: int, wire: bytes) -> None:
        if rt.role in ("router", "producer"):
            self._offer_work(rt, t, ("msg", iface, wire))
            return
        try:
            message = decode_message(wire)
        except DecodeError:
            self.log_event(t, rt.node_id, "malformed_drop", b"")
            self.drops[(rt.node_id, "Malformed")] += 1
            return
        if rt.role == "consumer":
            self._consumer_arrival(rt, t, message)
        else:
            self._adversary_arrival(rt, t, message)

    def _offer_work(self, rt: _NodeRuntime, t: float, item: tuple) -> None:
        if rt.busy:
            rt.work_queue.append(item)
        else:
            self._begin_service(rt, t, item)

    def _begin_service(self, rt: _NodeRuntime, start: float, item: tuple) -> None:
        """Run the handler at service start; effects leave at completion."""
        rt.busy = True
        if item[0] == "msg":
            _, iface, wire = item
            completion, effects = self._execute_message(rt, start, iface, wire)
        else:  # queued batch flush
            events, verifies = rt.obj.flush_batch(item[1], start)
            completion = start + verifies * rt.tau_verify_ms
            effects = ("router", events)
        self._schedule(completion, rt.node_id, "service_done", (effects,))

    def _execute_message(self, rt: _NodeRuntime, start: float, iface: int, wire: bytes):
        try:
            message = decode_message(wire)
        except DecodeError:
            return start + rt.tau_process_ms, ("malformed",)
        if rt.role == "router":
            router: Router = rt.obj
            if isinstance(message, Interest):
                events, verifies = router.on_interest(message, iface, start)
            else:
                events, verifies = router.on_content(message, iface, start)
            completion = start + rt.tau_process_ms + verifies * rt.tau_verify_ms
            return completion, ("router", events)
        producer: Producer = rt.obj
        name_bytes = encode_name(message.name)
        if isinstance(message, ContentObject):
            return start + rt.tau_process_ms, ("producer_unsolicited", name_bytes)
        response = producer.content_object_generation(message, start)
        completion = start + rt.tau_process_ms + response.verifies * rt.tau_verify_ms
        self.producer_interests[(rt.node_id, name_bytes.hex())] += 1
        return completion, ("producer", iface, name_bytes, response)

    def _service_done(self, rt: _NodeRuntime, t: float, effects: tuple) -> None:
        self._apply_effects(rt, t, effects)
        if rt.work_queue:
            self._begin_service(rt, t, rt.work_queue.popleft())
        else:
            rt.busy = False

    def _apply_effects(self, rt: _NodeRuntime, at: float, effects: tuple) -> None:
        tag = effects[0]
        if tag == "router":
            self._apply_router_events(rt, effects[1], at)
        elif tag == "producer":
            _, iface, name_bytes, response = effects
            if response.served:
                from .wire import encode_content

                reason = "verified" if response.verifies else "plain"
                self.log_event(at, rt.node_id, "content_served", name_bytes, reason)
                self._send(rt, iface, encode_content(response.content), at)
            else:
                reason = str(response.drop_reason)
                self.log_event(at, rt.node_id, "int_drop", name_bytes, reason)
                self.drops[(rt.node_id, reason)] += 1
        elif tag == "producer_unsolicited":
            self.log_event(at, rt.node_id, "content_drop", effects[1], "Unsolicited")
            self.drops[(rt.node_id, "Unsolicited")] += 1
        else:  # malformed
            self.log_event(at, rt.node_id, "malformed_drop", b"")
            self.drops[(rt.node_id, "Malformed")] += 1

    def _apply_router_events(self, rt: _NodeRuntime, events, at: float) -> None:
        for ev in events:
            if ev.kind is EventKind.BATCH_TIMER:
                self._schedule(ev.at, rt.node_id, "timer", ("batch_flush", ev.batch_key))
                continue
            reason = "" if ev.reason is None else str(ev.reason)
            self.log_event(at, rt.node_id, ev.kind.value, ev.name_bytes, reason)
            if ev.kind in (
                EventKind.SERVE_FROM_CACHE,
                EventKind.FORWARD_INTEREST,
                EventKind.FORWARD_CONTENT,
            ):
                self._send(rt, ev.iface, ev.wire, at)
            elif ev.kind in (
                EventKind.DROP_INTEREST,
                EventKind.DROP_CONTENT,
                EventKind.PENDING_DROP,
            ):
                self.drops[(rt.node_id, reason)] += 1

    def _consumer_arrival(self, rt: _NodeRuntime, t: float, message) -> None:
        state: _ConsumerState = rt.obj
        if isinstance(message, Interest):
            self.log_event(t, rt.node_id, "int_drop", encode_name(message.name), "Unexpected")
            self.drops[(rt.node_id, "Unexpected")] += 1
            return
        name_bytes = encode_name(message.name)
        waiting = state.outstanding.get(name_bytes)
        if not waiting:
            self.log_event(t, rt.node_id, "content_drop", name_bytes, "Unsolicited")
            self.drops[(rt.node_id, "Unsolicited")] += 1
            return
        requested = waiting.pop(0)
        if not waiting:
            del state.outstanding[name_bytes]
        self.deliveries.append(Delivery(t, rt.node_id, requested, message.data))
        self.counters["delivered"] += 1
        self.log_event(t, rt.node_id, "content_delivered", name_bytes)

    def _adversary_arrival(self, rt: _NodeRuntime, t: float, message) -> None:
        state: _AdversaryState = rt.obj
        if isinstance(message, Interest):
            return
        name_bytes = encode_name(message.name)
        waiting = state.pending.get(name_bytes)
        if not waiting:
            self.log_event(t, rt.node_id, "content_drop", name_bytes, "Unsolicited")
            return
        kind, index = waiting.pop(0)
        state.successes[(index, kind)] += 1
        if kind == "NAME_PROBE_CAPTURED":
            hex_name = name_bytes.hex()
            state.captured_probe_outcomes[hex_name] = (
                state.captured_probe_outcomes.get(hex_name, 0) + 1
            )
        self.counters["adv_delivered"] += 1
        self.log_event(t, rt.node_id, "adv_content", name_bytes, kind)

    # -- timers ---------------------------------------------------------------

    def _handle_timer(self, rt: _NodeRuntime, t: float, payload: tuple) -> None:
        tag = payload[0]
        if tag == "fetch":
            _, name, prefix = payload
            self._do_fetch(rt, name, prefix, t)
        elif tag == "traffic":
            self._do_traffic(rt, t)
        elif tag == "action":
            self._expand_action(rt, payload[1], t)
        elif tag == "action_shot":
            self._do_shot(rt, payload[1], payload[2], t)
        elif tag == "batch_flush":
            self._do_batch_flush(rt, payload[1], t)
        elif tag == "expire":
            self._do_expire(rt, t)
        elif tag == "rekey":
            self._do_rekey(rt, t, payload)

    def _do_fetch(self, rt: _NodeRuntime, name: Name, prefix, t: float) -> None:
        state: _ConsumerState = rt.obj
        interest = interest_generation(state.ctx, prefix, name)
        wire = encode_interest(interest)
        name_bytes = encode_name(interest.name)
        self.counters["injected"] += 1
        self.counters["consumer_fetches"] += 1
        out_iface = longest_prefix_match(state.fib, interest.name)
        if out_iface is None:
            self.log_event(t, rt.node_id, "int_drop", name_bytes, "NoRoute")
            self.drops[(rt.node_id, "NoRoute")] += 1
            self.counters["origin_drops"] += 1
            return
        state.outstanding.setdefault(name_bytes, []).append(name)
        self.log_event(t, rt.node_id, "int_sent", name_bytes)
        self._send(rt, out_iface, wire, t)

    def _do_traffic(self, rt: _NodeRuntime, t: float) -> None:
        profile = self.traffic
        if profile is None:
            return
        if profile.max_interests is not None and self._traffic_sent >= profile.max_interests:
            return
        if profile.end_ms is not None and t > profile.end_ms:
            return
        use_ibac = profile.ibac_targets and self.rng.random() < profile.delta
        pool = profile.ibac_targets if use_ibac else profile.public_targets
        if pool:
            name = self.rng.choice(pool)
            self._do_fetch(rt, name, self.content_prefixes[name.components], t)
            self._traffic_sent += 1
        next_t = t + self.rng.expovariate(profile.lambda_per_s / 1000.0)
        self._schedule(next_t, rt.node_id, "timer", ("traffic",))

    def _expand_action(self, rt: _NodeRuntime, index: int, t: float) -> None:
        action = self.actions[index]
        state: _AdversaryState = rt.obj
        shot = 0
        for _ in range(action.count):
            self._schedule(
                t + shot * action.interval_ms, rt.node_id, "timer", ("action_shot", index, shot)
            )
            shot += 1
        if action.kind == NAME_PROBE and action.include_captured:
            for _ in self._distinct_capture_names(state):
                self._schedule(
                    t + shot * action.interval_ms,
                    rt.node_id,
                    "timer",
                    ("action_shot", index, shot),
                )
                shot += 1

    @staticmethod
    def _distinct_capture_names(state: _AdversaryState) -> list[bytes]:
        seen: dict[bytes, bytes] = {}
        for capture in state.captures:
            message = decode_message(capture.wire)
            seen.setdefault(encode_name(message.name), capture.wire)
        return list(seen)

    def _select_capture(self, state: _AdversaryState, action: AdversaryAction, shot: int):
        if not state.captures:
            return None
        if isinstance(action.capture, int):
            if action.capture >= len(state.captures):
                return None
            return state.captures[action.capture]
        return state.captures[shot % len(state.captures)]

    def _do_shot(self, rt: _NodeRuntime, index: int, shot: int, t: float) -> None:
        action = self.actions[index]
        state: _AdversaryState = rt.obj
        kind = action.kind
        if kind in (REPLAY_SAME_PATH, REPLAY_CROSS_PATH):
            capture = self._select_capture(state, action, shot)
            if capture is None:
                self.log_event(t, rt.node_id, "adv_noop", b"", "no capture")
                return
            wire = capture.wire
            name_bytes = encode_name(decode_message(wire).name)
            pending_kind = kind
        elif kind == FORGE_PAYLOAD:
            capture = self._select_capture(state, action, shot)
            if capture is None:
                self.log_event(t, rt.node_id, "adv_noop", b"", "no capture")
                return
            base = decode_message(capture.wire)
            name_bytes = encode_name(base.name)
            group_id = (
                base.payload.group_id if base.payload else state.material.group_id
            )
            encrypted = base.payload.group_id_encrypted if base.payload else False
            kappa = state.material.kappa
            nonce = self.rng.getrandbits(kappa).to_bytes(kappa // 8, "big")
            timestamp = round(t)
            signature = crypto.sign_payload(
                state.material, name_bytes, group_id, nonce, timestamp
            )
            forged = Interest(
                base.name,
                AuthorizationPayload(group_id, encrypted, nonce, timestamp, signature),
            )
            wire = encode_interest(forged)
            pending_kind = kind
        else:  # NAME_PROBE
            if shot < action.count:
                prefix = action.probe_prefix
                if prefix is None:
                    raise ConfigError("NAME_PROBE needs probe_prefix")
                suffix_bytes = self.rng.getrandbits(action.probe_suffix_len * 8).to_bytes(
                    action.probe_suffix_len, "big"
                )
                name = ObfuscatedName(prefix, suffix_bytes, action.probe_scheme)
                wire = encode_interest(Interest(name))
                name_bytes = encode_name(name)
                pending_kind = kind
            else:
                names = self._distinct_capture_names(state)
                position = shot - action.count
                if position >= len(names):
                    return
                captured_name_bytes = names[position]
                base = decode_message(
                    next(
                        c.wire
                        for c in state.captures
                        if encode_name(decode_message(c.wire).name) == captured_name_bytes
                    )
                )
                probe = Interest(base.name)  # name only: payload stripped
                wire = encode_interest(probe)
                name_bytes = captured_name_bytes
                state.captured_probe_outcomes.setdefault(name_bytes.hex(), 0)
                pending_kind = "NAME_PROBE_CAPTURED"

        target_iface = rt.iface_to.get(action.target)
        if target_iface is None:
            raise ConfigError(
                f"adversary {rt.node_id} has no link to action target {action.target}"
            )
        state.pending.setdefault(name_bytes, []).append((pending_kind, index))
        state.attempts[index] += 1
        self.counters["injected"] += 1
        self.counters["adv_injected"] += 1
        self.log_event(t, rt.node_id, "int_sent", name_bytes, f"{kind}#{index}")
        self._send(rt, target_iface, wire, t)

    def _do_batch_flush(self, rt: _NodeRuntime, key, t: float) -> None:
        self._offer_work(rt, t, ("flush", key))

    def _do_expire(self, rt: _NodeRuntime, t: float) -> None:
        if rt.role == "router":
            for ev in rt.obj.expire(t):
                self.log_event(t, rt.node_id, ev.kind.value, ev.name_bytes)
        else:
            rt.obj.sweep_nonces(t)
        next_t = t + self.expiry_sweep_ms
        if next_t <= self.horizon_ms:
            self._schedule(next_t, rt.node_id, "timer", ("expire",))

    def _do_rekey(self, rt: _NodeRuntime, t: float, payload) -> None:
        _, name, new_materials, revoke_ids = payload
        producer: Producer = rt.obj
        for gid in revoke_ids:
            producer.revoke_group(gid)
        for material in new_materials:
            if material.group_id not in producer.registry:
                producer.register_group(material)
        producer.rekey_content(name, tuple(m.group_id for m in new_materials))
        self.log_event(t, rt.node_id, "rekey", encode_name(name))

    # -- results ---------------------------------------------------------------

    def _result(self) -> RunResult:
        attacks = []
        adv_pending = 0
        captured_outcomes: dict[str, int] = {}
        for rt in self.nodes.values():
            if rt.role != "adversary":
                continue
            state: _AdversaryState = rt.obj
            adv_pending += sum(len(v) for v in state.pending.values())
            captured_outcomes.update(state.captured_probe_outcomes)
            for index, action in enumerate(self.actions):
                if self._action_adversary.get(index) != rt.node_id:
                    continue
                successes = sum(
                    n for (i, kind), n in state.successes.items() if i == index
                )
                attacks.append(
                    AttackStat(
                        index,
                        action.kind,
                        action.at_ms,
                        action.label,
                        state.attempts.get(index, 0),
                        successes,
                    )
                )
        consumer_pending = sum(
            len(waiting)
            for rt in self.nodes.values()
            if rt.role == "consumer"
            for waiting in rt.obj.outstanding.values()
        )
        conservation = {
            "injected": self.counters.get("injected", 0),
            "delivered": self.counters.get("delivered", 0)
            + self.counters.get("adv_delivered", 0),
            "origin_drops": self.counters.get("origin_drops", 0),
            "pending_at_end": consumer_pending + adv_pending,
        }
        conservation["balanced"] = (
            conservation["injected"]
            == conservation["delivered"]
            + conservation["origin_drops"]
            + conservation["pending_at_end"]
        )
        return RunResult(
            seed=self.seed,
            log_lines=self.log_lines,
            counters=dict(self.counters),
            drops=dict(self.drops),
            producer_interests=dict(self.producer_interests),
            deliveries=self.deliveries,
            attacks=attacks,
            captured_probe_outcomes=captured_outcomes,
            conservation=conservation,
            wire_trace=self.wire_trace,
            nodes={node_id: rt.obj for node_id, rt in self.nodes.items()},
        )
