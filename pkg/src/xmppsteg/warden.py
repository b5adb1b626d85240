"""Passive wardens: stateless rule checks and stateful session-history heuristics.

The stateless warden judges each message in isolation against static
validity rules (legal lowercase type values, well-formed language tags,
well-formed addressing). The stateful warden additionally tracks history:
optional-attribute flicker, id counter anomalies, id case flips, and
value flicker for type and xml:lang. Presence/value histories are kept per
unordered conversation pair; id histories are kept per sender, because a
client's id counter spans all of its recipients (that is exactly what decoy
scheduling exploits).

Both wardens only inspect; nothing is ever rewritten.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Union

from .channels import ChannelId
from .errors import ToolkitError
from .stanza import MESSAGE_TYPE_VALUES, Stanza
from .transcript import iter_transcript_lenient

_LANG_TAG_RE = re.compile(r"[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*")
_HEX_RE = re.compile(r"[0-9a-fA-F]+")
_DEC_RE = re.compile(r"[0-9]+")

STATELESS = "stateless"
STATEFUL = "stateful"


@dataclass(frozen=True)
class WardenThresholds:
    """Tunable knobs for the stateful heuristics (defaults validated by the
    acceptance suite: they reproduce the expected detectability table on
    harness traffic with zero flags on clean traffic)."""

    presence_window: int = 10
    presence_min_toggles: int = 3
    id_min_steps: int = 4
    id_irregular_fraction: float = 0.10
    id_max_gap: int = 16
    case_window: int = 10
    case_min_toggles: int = 3
    value_min_messages: int = 6
    value_max_avg_run: float = 3.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "WardenThresholds":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ToolkitError(f"bad thresholds: {exc}") from None

    @classmethod
    def load(cls, path) -> "WardenThresholds":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ToolkitError(f"thresholds file is not valid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class Flag:
    """One raised suspicion: the rule that fired, the channel it points at
    (None when no specific channel is hypothesized), and a human detail."""

    rule: str
    channel: ChannelId | None
    detail: str


@dataclass
class Verdict:
    stanza_index: int
    flags: list[Flag] = field(default_factory=list)

    @property
    def suspicious(self) -> bool:
        return bool(self.flags)


class _RunTracker:
    """Run-length statistics over a sequence of values (H4/H5 flicker)."""

    __slots__ = ("current", "runs", "count", "values")

    def __init__(self) -> None:
        self.current: str | None = None
        self.runs = 0
        self.count = 0
        self.values: set[str] = set()

    def add(self, value: str) -> None:
        self.count += 1
        self.values.add(value)
        if value != self.current:
            self.runs += 1
            self.current = value

    @property
    def average_run(self) -> float:
        return self.count / self.runs if self.runs else 0.0


class _PairHistory:
    __slots__ = ("type_presence", "lang_presence", "type_values", "lang_values")

    def __init__(self, window: int) -> None:
        self.type_presence: deque[bool] = deque(maxlen=window)
        self.lang_presence: deque[bool] = deque(maxlen=window)
        self.type_values = _RunTracker()
        self.lang_values = _RunTracker()


class _SenderHistory:
    __slots__ = ("prev_id", "steps", "irregular", "case_classes")

    def __init__(self, window: int) -> None:
        self.prev_id: str | None = None
        self.steps = 0
        self.irregular = 0
        self.case_classes: deque[str] = deque(maxlen=window)


class SessionState:
    """Running history for one scan pass: every conversation pair's
    presence/value records plus every sender's id record."""

    def __init__(self, thresholds: WardenThresholds | None = None) -> None:
        self.thresholds = thresholds or WardenThresholds()
        self.pairs: dict[frozenset, _PairHistory] = {}
        self.senders: dict[str, _SenderHistory] = {}

    def pair_history(self, key: frozenset) -> _PairHistory:
        if key not in self.pairs:
            self.pairs[key] = _PairHistory(self.thresholds.presence_window)
        return self.pairs[key]

    def sender_history(self, key: str) -> _SenderHistory:
        if key not in self.senders:
            self.senders[key] = _SenderHistory(self.thresholds.case_window)
        return self.senders[key]


def _toggles(values: Iterable) -> int:
    seq = list(values)
    return sum(a != b for a, b in zip(seq, seq[1:]))


def _id_steps(prev: str, cur: str) -> list[int]:
    """Counter increments between two ids under every base that fits both."""
    steps = []
    if _HEX_RE.fullmatch(prev) and _HEX_RE.fullmatch(cur):
        steps.append(int(cur, 16) - int(prev, 16))
    if _DEC_RE.fullmatch(prev) and _DEC_RE.fullmatch(cur):
        steps.append(int(cur, 10) - int(prev, 10))
    return steps


def _id_case_class(value: str) -> str | None:
    letters = [c for c in value if c.isalpha()]
    if not letters:
        return None
    if all(c.islower() for c in letters):
        return "lower"
    if all(c.isupper() for c in letters):
        return "upper"
    return "mixed"


def scan_stateless(stanza: Stanza, index: int = 0) -> Verdict:
    """Judge one message against the static validity rules.

    A pure function of the stanza: type value must be one of the five legal
    lowercase values when present, xml:lang must look like a language tag
    when present, and the message must carry from/to addressing.
    """
    flags: list[Flag] = []
    if stanza.from_jid is None or stanza.to_jid is None:
        flags.append(Flag("malformed-stanza", None, "missing from/to addressing"))
    if stanza.type_attr is not None and stanza.type_attr not in MESSAGE_TYPE_VALUES:
        if stanza.type_attr.lower() in MESSAGE_TYPE_VALUES:
            flags.append(
                Flag(
                    "invalid-type-value",
                    ChannelId.TYPE_CASE,
                    f"type value {stanza.type_attr!r} is not lower case",
                )
            )
        else:
            flags.append(
                Flag("invalid-type-value", None, f"unknown type value {stanza.type_attr!r}")
            )
    if stanza.body is not None and stanza.body.xml_lang is not None:
        if not _LANG_TAG_RE.fullmatch(stanza.body.xml_lang):
            flags.append(
                Flag("invalid-lang-tag", None, f"xml:lang {stanza.body.xml_lang!r} is not a language tag")
            )
    return Verdict(index, flags)


def scan_stateful(
    state: SessionState, stanza: Stanza, index: int = 0
) -> tuple[SessionState, Verdict]:
    """Update session history with this message and judge it.

    Applies every stateless rule first (the stateful warden dominates the
    stateless one), then the history heuristics.
    """
    t = state.thresholds
    verdict = scan_stateless(stanza, index)
    flags = verdict.flags

    if stanza.from_jid is not None and stanza.to_jid is not None:
        pair_key = frozenset({stanza.from_jid.bare(), stanza.to_jid.bare()})
        pair = state.pair_history(pair_key)

        pair.type_presence.append(stanza.type_attr is not None)
        toggles = _toggles(pair.type_presence)
        if toggles >= t.presence_min_toggles:
            flags.append(
                Flag(
                    "type-presence-flicker",
                    ChannelId.TYPE_PRESENCE,
                    f"type attribute toggled {toggles} times in the last {len(pair.type_presence)} messages",
                )
            )

        pair.lang_presence.append(stanza.body is not None and stanza.body.xml_lang is not None)
        toggles = _toggles(pair.lang_presence)
        if toggles >= t.presence_min_toggles:
            flags.append(
                Flag(
                    "lang-presence-flicker",
                    ChannelId.XML_LANG_PRESENCE,
                    f"xml:lang toggled {toggles} times in the last {len(pair.lang_presence)} messages",
                )
            )

        if stanza.type_attr is not None:
            pair.type_values.add(stanza.type_attr.lower())
            tracker = pair.type_values
            if (
                tracker.count >= t.value_min_messages
                and len(tracker.values) >= 2
                and tracker.average_run < t.value_max_avg_run
            ):
                flags.append(
                    Flag(
                        "type-value-flicker",
                        ChannelId.TYPE_VALUE,
                        f"type values {sorted(tracker.values)} alternate "
                        f"(average run {tracker.average_run:.2f})",
                    )
                )

        if stanza.body is not None and stanza.body.xml_lang is not None:
            pair.lang_values.add(stanza.body.xml_lang)
            tracker = pair.lang_values
            if (
                tracker.count >= t.value_min_messages
                and len(tracker.values) >= 2
                and tracker.average_run < t.value_max_avg_run
            ):
                flags.append(
                    Flag(
                        "lang-value-flicker",
                        ChannelId.XML_LANG_VALUE,
                        f"xml:lang values {sorted(tracker.values)} alternate "
                        f"(average run {tracker.average_run:.2f})",
                    )
                )

    if stanza.from_jid is not None and stanza.id_attr is not None:
        sender = state.sender_history(stanza.from_jid.bare())

        if sender.prev_id is not None:
            steps = _id_steps(sender.prev_id, stanza.id_attr)
            sender.steps += 1
            if 1 not in steps:
                sender.irregular += 1
                positive = [s for s in steps if s > 0]
                if steps and not positive:
                    flags.append(
                        Flag(
                            "id-sequence-anomaly",
                            ChannelId.ID_LSB,
                            f"id went backwards: {sender.prev_id!r} -> {stanza.id_attr!r}",
                        )
                    )
                elif positive and min(positive) > state.thresholds.id_max_gap:
                    flags.append(
                        Flag(
                            "id-sequence-anomaly",
                            ChannelId.ID_LSB,
                            f"id jumped by {min(positive)}: {sender.prev_id!r} -> {stanza.id_attr!r}",
                        )
                    )
            if sender.steps >= t.id_min_steps:
                fraction = sender.irregular / sender.steps
                if fraction > t.id_irregular_fraction:
                    flags.append(
                        Flag(
                            "id-sequence-anomaly",
                            ChannelId.ID_LSB,
                            f"{sender.irregular} of {sender.steps} id steps are not +1 "
                            f"({fraction:.0%})",
                        )
                    )
        sender.prev_id = stanza.id_attr

        case_class = _id_case_class(stanza.id_attr)
        if case_class is not None:
            sender.case_classes.append(case_class)
            toggles = _toggles(sender.case_classes)
            if toggles >= t.case_min_toggles:
                flags.append(
                    Flag(
                        "id-case-flicker",
                        ChannelId.ID_CASE,
                        f"id letter case changed {toggles} times in the last "
                        f"{len(sender.case_classes)} ids",
                    )
                )

    return state, Verdict(index, flags)


@dataclass
class SessionReport:
    """Scan result over a whole transcript."""

    mode: str
    thresholds: WardenThresholds
    stanzas_scanned: int
    verdicts: list[Verdict]

    @property
    def summary(self) -> dict[ChannelId, bool]:
        detected = {channel: False for channel in ChannelId}
        for verdict in self.verdicts:
            for flag in verdict.flags:
                if flag.channel is not None:
                    detected[flag.channel] = True
        return detected

    @property
    def suspicious(self) -> bool:
        return any(v.suspicious for v in self.verdicts)

    @property
    def flagged_count(self) -> int:
        return sum(1 for v in self.verdicts if v.suspicious)

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "thresholds": self.thresholds.to_dict(),
            "stanzas": self.stanzas_scanned,
            "flagged": self.flagged_count,
            "verdicts": [
                {
                    "index": v.stanza_index,
                    "flags": [
                        {
                            "rule": f.rule,
                            "channel": f.channel.value if f.channel else None,
                            "detail": f.detail,
                        }
                        for f in v.flags
                    ],
                }
                for v in self.verdicts
                if v.suspicious
            ],
            "summary": {channel.value: hit for channel, hit in self.summary.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


TranscriptSource = Union[bytes, Iterable[Stanza]]


def _iter_source(source: TranscriptSource):
    if isinstance(source, (bytes, bytearray)):
        for index, (lineno, item) in enumerate(iter_transcript_lenient(bytes(source))):
            yield index, lineno, item
    else:
        messages = getattr(source, "messages", source)
        for index, stanza in enumerate(messages):
            yield index, index + 1, stanza


def scan_transcript(
    source: TranscriptSource,
    mode: str = STATELESS,
    thresholds: WardenThresholds | None = None,
) -> SessionReport:
    """Scan a whole transcript (raw bytes, a stanza list, or a harness
    transcript) and aggregate per-stanza verdicts.

    Raw-byte input is scanned leniently: a line that does not parse becomes
    a flagged verdict rather than an error.
    """
    if mode not in (STATELESS, STATEFUL):
        raise ValueError(f"mode must be {STATELESS!r} or {STATEFUL!r}")
    thresholds = thresholds or WardenThresholds()
    state = SessionState(thresholds)
    verdicts: list[Verdict] = []
    scanned = 0
    for index, lineno, item in _iter_source(source):
        scanned += 1
        if isinstance(item, ToolkitError):
            verdicts.append(
                Verdict(index, [Flag("malformed-stanza", None, f"line {lineno}: {item}")])
            )
            continue
        if mode == STATELESS:
            verdicts.append(scan_stateless(item, index))
        else:
            _, verdict = scan_stateful(state, item, index)
            verdicts.append(verdict)
    return SessionReport(mode, thresholds, scanned, verdicts)
