"""The covert channels: hiding payload bits in message metadata and body text.

Eleven channels modulate different carrier locations of a ``<message>``
stanza: type attribute (presence, value, case), id attribute (final-digit
LSB, whole-id case), xml:lang (presence, value), body edge whitespace
(leading, trailing space), and dictionary rewriting (synonyms, deliberate
misspellings). Each channel exposes capacity/embed/extract; the multiplexer
applies channels in configured order, consuming payload bits MSB-first.

Per-channel detectability against the two warden types ships as metadata in
:data:`CHANNEL_SPECS`.
"""

from __future__ import annotations

import json
import os
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol, Sequence

from .codec import BitStream
from .errors import ToolkitError
from .stanza import Stanza


class ChannelId(str, Enum):
    TYPE_PRESENCE = "type_presence"
    TYPE_VALUE = "type_value"
    TYPE_CASE = "type_case"
    ID_LSB = "id_lsb"
    ID_CASE = "id_case"
    XML_LANG_PRESENCE = "xml_lang_presence"
    XML_LANG_VALUE = "xml_lang_value"
    LEADING_SPACE = "leading_space"
    TRAILING_SPACE = "trailing_space"
    SYNONYM = "synonym"
    SPELLING_MISTAKE = "spelling_mistake"


class NoCapacity(ToolkitError):
    """embed() called on a stanza the channel cannot carry data in."""


class IdExhausted(ToolkitError):
    """The id source could not produce an id with the wanted LSB."""


class InvalidConfig(ToolkitError):
    """Channel configuration violates an invariant (order, dictionaries...)."""


class IdSource(Protocol):
    """Supplies message ids whose final-hex-digit LSB matches a wanted bit.

    Implementations decide what happens to candidates that do not match
    (the traffic harness hands them to a decoy scheduler).
    """

    def next_matching(self, bit: int) -> str: ...


@dataclass(frozen=True)
class ChannelSpec:
    """Capacity and detectability metadata for one channel.

    ``stateless_detectable``/``stateful_detectable`` say whether each warden
    type can in principle catch the channel. Entries with
    ``detectability_extrapolated`` were inferred by analogy (value/case
    flicker is a stateful tell; dictionary rewriting has no reliable tell),
    not measured. The id_lsb stateful flag assumes no decoy scheduling;
    with decoys the id sequence stays gap-free and the channel goes dark.
    """

    id: ChannelId
    bits_per_message: int
    stateless_detectable: bool
    stateful_detectable: bool
    detectability_extrapolated: bool = False
    notes: str = ""


CHANNEL_SPECS: dict[ChannelId, ChannelSpec] = {
    spec.id: spec
    for spec in (
        ChannelSpec(ChannelId.TYPE_PRESENCE, 1, False, True),
        ChannelSpec(
            ChannelId.TYPE_VALUE, 1, False, True, detectability_extrapolated=True,
            notes="supports 2 bits with the unsafe four-value alphabet",
        ),
        ChannelSpec(
            ChannelId.TYPE_CASE, 1, True, True,
            notes="uppercase type values are invalid on sight; kept for study only",
        ),
        ChannelSpec(
            ChannelId.ID_LSB, 1, False, True,
            notes="stateful detection assumes no decoy scheduling",
        ),
        ChannelSpec(ChannelId.ID_CASE, 1, False, True, detectability_extrapolated=True),
        ChannelSpec(ChannelId.XML_LANG_PRESENCE, 1, False, True),
        ChannelSpec(ChannelId.XML_LANG_VALUE, 1, False, True, detectability_extrapolated=True),
        ChannelSpec(ChannelId.LEADING_SPACE, 1, False, False),
        ChannelSpec(ChannelId.TRAILING_SPACE, 1, False, False),
        ChannelSpec(ChannelId.SYNONYM, 1, False, False, detectability_extrapolated=True),
        ChannelSpec(ChannelId.SPELLING_MISTAKE, 1, False, False, detectability_extrapolated=True),
    )
}

# When both channels of a pair are enabled, the first must run first:
# a presence channel decides whether the dependent carrier exists at all,
# and the id source overwrites the whole id, so case must be applied after.
_ORDER_BEFORE = (
    (ChannelId.TYPE_PRESENCE, ChannelId.TYPE_VALUE),
    (ChannelId.TYPE_PRESENCE, ChannelId.TYPE_CASE),
    (ChannelId.TYPE_VALUE, ChannelId.TYPE_CASE),
    (ChannelId.XML_LANG_PRESENCE, ChannelId.XML_LANG_VALUE),
    (ChannelId.ID_LSB, ChannelId.ID_CASE),
)

_TYPE_VALUE_1BIT = ("chat", "normal")
_TYPE_VALUE_2BIT = ("chat", "normal", "headline", "error")
_HEX_DIGITS = frozenset(string.hexdigits)
_WORD_RE = re.compile(r"\S+")
_TRAILING_PUNCT = ".,!?;:"


@dataclass(frozen=True)
class ChannelConfig:
    """Which channels are enabled (in multiplex order) and their codebooks.

    ``synonyms`` maps a canonical token to exactly (canonical, alternative);
    the index of the emitted variant is the hidden bit. ``misspellings`` maps
    a correctly spelt token to its misspelling (correct = bit 0). All carrier
    tokens must be unique across both dictionaries so decoding is unambiguous.
    ``lang_pair`` is the xml:lang value codebook, index = bit.
    """

    enabled: tuple[ChannelId, ...] = ()
    synonyms: Mapping[str, tuple[str, str]] = field(default_factory=dict)
    misspellings: Mapping[str, str] = field(default_factory=dict)
    lang_pair: tuple[str, str] = ("en", "en-GB")
    type_value_two_bit: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "enabled", tuple(ChannelId(c) for c in self.enabled))
        object.__setattr__(
            self, "synonyms", {w: tuple(v) for w, v in dict(self.synonyms).items()}
        )
        object.__setattr__(self, "misspellings", dict(self.misspellings))
        object.__setattr__(self, "lang_pair", tuple(self.lang_pair))
        self._validate()

    def _validate(self) -> None:
        if len(set(self.enabled)) != len(self.enabled):
            raise InvalidConfig("enabled channel list has duplicates")
        for first, second in _ORDER_BEFORE:
            if first in self.enabled and second in self.enabled:
                if self.enabled.index(first) > self.enabled.index(second):
                    raise InvalidConfig(
                        f"{first.value} must come before {second.value} in the enabled list"
                    )
        if len(self.lang_pair) != 2 or not all(self.lang_pair):
            raise InvalidConfig("lang_pair must hold two non-empty tags")
        if self.lang_pair[0] == self.lang_pair[1]:
            raise InvalidConfig("lang_pair tags must differ")

        seen: set[str] = set()

        def claim(token: str, where: str) -> None:
            if not token or _WORD_RE.fullmatch(token) is None:
                raise InvalidConfig(f"{where}: token {token!r} must be one non-empty word")
            if token in seen:
                raise InvalidConfig(f"{where}: token {token!r} used more than once")
            seen.add(token)

        for word, variants in self.synonyms.items():
            if len(variants) != 2:
                raise InvalidConfig(f"synonym entry {word!r} needs exactly two variants")
            if variants[0] != word:
                raise InvalidConfig(f"synonym entry {word!r}: first variant must be the word itself")
            for v in variants:
                claim(v, "synonyms")
        for word, wrong in self.misspellings.items():
            if word == wrong:
                raise InvalidConfig(f"misspelling entry {word!r} maps to itself")
            claim(word, "misspellings")
            claim(wrong, "misspellings")

    def to_dict(self) -> dict:
        return {
            "enabled": [c.value for c in self.enabled],
            "synonyms": {w: list(v) for w, v in self.synonyms.items()},
            "misspellings": dict(self.misspellings),
            "lang_pair": list(self.lang_pair),
            "type_value_two_bit": self.type_value_two_bit,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChannelConfig":
        try:
            return cls(
                enabled=tuple(ChannelId(c) for c in data.get("enabled", ())),
                synonyms={w: tuple(v) for w, v in data.get("synonyms", {}).items()},
                misspellings=dict(data.get("misspellings", {})),
                lang_pair=tuple(data.get("lang_pair", ("en", "en-GB"))),
                type_value_two_bit=bool(data.get("type_value_two_bit", False)),
            )
        except (ValueError, TypeError) as exc:
            raise InvalidConfig(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ChannelConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidConfig("config JSON must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ChannelConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


# ---------------------------------------------------------------------------
# per-channel capacity / embed / extract
# ---------------------------------------------------------------------------


def _bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def _int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> k) & 1 for k in range(width - 1, -1, -1)]


def _type_alphabet(config: ChannelConfig) -> tuple[str, ...]:
    return _TYPE_VALUE_2BIT if config.type_value_two_bit else _TYPE_VALUE_1BIT


def _cap_type_presence(s: Stanza, config: ChannelConfig, src) -> int:
    return 1


def _emb_type_presence(s: Stanza, bits, config, src) -> Stanza:
    if bits[0]:
        return s.replace(type_attr=None) if s.type_attr is not None else s
    return s.replace(type_attr="chat") if s.type_attr is None else s


def _ext_type_presence(s: Stanza, config) -> list[int]:
    return [1] if s.type_attr is None else [0]


def _cap_type_value(s: Stanza, config: ChannelConfig, src) -> int:
    if s.type_attr is None:
        return 0
    return 2 if config.type_value_two_bit else 1


def _emb_type_value(s: Stanza, bits, config, src) -> Stanza:
    value = _type_alphabet(config)[_bits_to_int(bits)]
    return s if s.type_attr == value else s.replace(type_attr=value)


def _ext_type_value(s: Stanza, config) -> list[int]:
    if s.type_attr is None:
        return []
    alphabet = _type_alphabet(config)
    value = s.type_attr.lower()
    if value not in alphabet:
        return []
    return _int_to_bits(alphabet.index(value), 2 if config.type_value_two_bit else 1)


def _cap_type_case(s: Stanza, config, src) -> int:
    return 1 if s.type_attr and any(c.isalpha() for c in s.type_attr) else 0


def _emb_type_case(s: Stanza, bits, config, src) -> Stanza:
    want = s.type_attr.upper() if bits[0] else s.type_attr.lower()
    return s if s.type_attr == want else s.replace(type_attr=want)


def _ext_type_case(s: Stanza, config) -> list[int]:
    if not (s.type_attr and any(c.isalpha() for c in s.type_attr)):
        return []
    return [0] if s.type_attr == s.type_attr.lower() else [1]


def _cap_id_lsb(s: Stanza, config, src) -> int:
    if src is not None:
        return 1
    return 1 if s.id_attr and s.id_attr[-1] in _HEX_DIGITS else 0


def _emb_id_lsb(s: Stanza, bits, config, src) -> Stanza:
    bit = bits[0]
    if src is not None:
        new_id = src.next_matching(bit)
        return s if s.id_attr == new_id else s.replace(id_attr=new_id)
    last = s.id_attr[-1]
    if int(last, 16) & 1 == bit:
        return s
    flipped = format(int(last, 16) ^ 1, "X" if last.isupper() else "x")
    return s.replace(id_attr=s.id_attr[:-1] + flipped)


def _ext_id_lsb(s: Stanza, config) -> list[int]:
    if s.id_attr and s.id_attr[-1] in _HEX_DIGITS:
        return [int(s.id_attr[-1], 16) & 1]
    return []


def _cap_id_case(s: Stanza, config, src) -> int:
    return 1 if s.id_attr and any(c.isalpha() for c in s.id_attr) else 0


def _emb_id_case(s: Stanza, bits, config, src) -> Stanza:
    want = s.id_attr.upper() if bits[0] else s.id_attr.lower()
    return s if s.id_attr == want else s.replace(id_attr=want)


def _ext_id_case(s: Stanza, config) -> list[int]:
    if not (s.id_attr and any(c.isalpha() for c in s.id_attr)):
        return []
    return [0] if s.id_attr == s.id_attr.lower() else [1]


def _cap_lang_presence(s: Stanza, config, src) -> int:
    return 1 if s.body is not None else 0


def _emb_lang_presence(s: Stanza, bits, config, src) -> Stanza:
    if bits[0]:
        if s.body.xml_lang is None:
            return s.replace_body(xml_lang=config.lang_pair[0])
        return s
    return s.replace_body(xml_lang=None) if s.body.xml_lang is not None else s


def _ext_lang_presence(s: Stanza, config) -> list[int]:
    if s.body is None:
        return []
    return [1] if s.body.xml_lang is not None else [0]


def _cap_lang_value(s: Stanza, config, src) -> int:
    return 1 if s.body is not None and s.body.xml_lang is not None else 0


def _emb_lang_value(s: Stanza, bits, config, src) -> Stanza:
    want = config.lang_pair[bits[0]]
    return s if s.body.xml_lang == want else s.replace_body(xml_lang=want)


def _ext_lang_value(s: Stanza, config) -> list[int]:
    if s.body is None or s.body.xml_lang is None:
        return []
    if s.body.xml_lang == config.lang_pair[0]:
        return [0]
    if s.body.xml_lang == config.lang_pair[1]:
        return [1]
    return []


def _cap_leading_space(s: Stanza, config, src) -> int:
    return 1 if s.body is not None and s.body.text.strip() else 0


def _emb_leading_space(s: Stanza, bits, config, src) -> Stanza:
    core = s.body.text.lstrip()
    text = " " + core if bits[0] else core
    return s if text == s.body.text else s.replace_body(text=text)


def _ext_leading_space(s: Stanza, config) -> list[int]:
    if s.body is None or not s.body.text.strip():
        return []
    return [1] if s.body.text.startswith(" ") else [0]


def _cap_trailing_space(s: Stanza, config, src) -> int:
    return 1 if s.body is not None and s.body.text.strip() else 0


def _emb_trailing_space(s: Stanza, bits, config, src) -> Stanza:
    core = s.body.text.rstrip()
    text = core + " " if bits[0] else core
    return s if text == s.body.text else s.replace_body(text=text)


def _ext_trailing_space(s: Stanza, config) -> list[int]:
    if s.body is None or not s.body.text.strip():
        return []
    return [1] if s.body.text.endswith(" ") else [0]


def _variant_table(entries: Mapping[str, Sequence[str]]) -> dict[str, tuple[str, int]]:
    """token -> (entry word, variant index); config validation keeps it unambiguous."""
    table: dict[str, tuple[str, int]] = {}
    for word, variants in entries.items():
        for idx, v in enumerate(variants):
            table[v] = (word, idx)
    return table


def _find_carrier(text: str, table: Mapping[str, tuple[str, int]]):
    """First whitespace-delimited token matching a variant.

    Tries the raw token first, then the token with trailing punctuation
    detached. Returns (start, end, word, index) with [start:end) covering
    only the matched core, or None.
    """
    if not table:
        return None
    for m in _WORD_RE.finditer(text):
        token = m.group()
        if token in table:
            word, idx = table[token]
            return m.start(), m.end(), word, idx
        core = token.rstrip(_TRAILING_PUNCT)
        if core and core != token and core in table:
            word, idx = table[core]
            return m.start(), m.start() + len(core), word, idx
    return None


def _dict_capacity(s: Stanza, entries: Mapping[str, Sequence[str]]) -> int:
    if s.body is None:
        return 0
    return 1 if _find_carrier(s.body.text, _variant_table(entries)) else 0


def _dict_embed(s: Stanza, bit: int, entries: Mapping[str, Sequence[str]]) -> Stanza:
    text = s.body.text
    start, end, word, _ = _find_carrier(text, _variant_table(entries))
    replacement = entries[word][bit]
    if text[start:end] == replacement:
        return s
    return s.replace_body(text=text[:start] + replacement + text[end:])


def _dict_extract(s: Stanza, entries: Mapping[str, Sequence[str]]) -> list[int]:
    if s.body is None:
        return []
    hit = _find_carrier(s.body.text, _variant_table(entries))
    return [hit[3]] if hit else []


def _misspelling_entries(config: ChannelConfig) -> dict[str, tuple[str, str]]:
    return {word: (word, wrong) for word, wrong in config.misspellings.items()}


def _cap_synonym(s, config, src):
    return _dict_capacity(s, config.synonyms)


def _emb_synonym(s, bits, config, src):
    return _dict_embed(s, bits[0], config.synonyms)


def _ext_synonym(s, config):
    return _dict_extract(s, config.synonyms)


def _cap_spelling(s, config, src):
    return _dict_capacity(s, _misspelling_entries(config))


def _emb_spelling(s, bits, config, src):
    return _dict_embed(s, bits[0], _misspelling_entries(config))


def _ext_spelling(s, config):
    return _dict_extract(s, _misspelling_entries(config))


_HANDLERS = {
    ChannelId.TYPE_PRESENCE: (_cap_type_presence, _emb_type_presence, _ext_type_presence),
    ChannelId.TYPE_VALUE: (_cap_type_value, _emb_type_value, _ext_type_value),
    ChannelId.TYPE_CASE: (_cap_type_case, _emb_type_case, _ext_type_case),
    ChannelId.ID_LSB: (_cap_id_lsb, _emb_id_lsb, _ext_id_lsb),
    ChannelId.ID_CASE: (_cap_id_case, _emb_id_case, _ext_id_case),
    ChannelId.XML_LANG_PRESENCE: (_cap_lang_presence, _emb_lang_presence, _ext_lang_presence),
    ChannelId.XML_LANG_VALUE: (_cap_lang_value, _emb_lang_value, _ext_lang_value),
    ChannelId.LEADING_SPACE: (_cap_leading_space, _emb_leading_space, _ext_leading_space),
    ChannelId.TRAILING_SPACE: (_cap_trailing_space, _emb_trailing_space, _ext_trailing_space),
    ChannelId.SYNONYM: (_cap_synonym, _emb_synonym, _ext_synonym),
    ChannelId.SPELLING_MISTAKE: (_cap_spelling, _emb_spelling, _ext_spelling),
}


# ---------------------------------------------------------------------------
# public interface
# ---------------------------------------------------------------------------


def capacity(
    channel: ChannelId,
    stanza: Stanza,
    config: ChannelConfig,
    id_source: IdSource | None = None,
) -> int:
    """Bits this channel can carry in this stanza; 0 when inapplicable."""
    return _HANDLERS[ChannelId(channel)][0](stanza, config, id_source)


def embed(
    channel: ChannelId,
    stanza: Stanza,
    bits: BitStream,
    config: ChannelConfig,
    id_source: IdSource | None = None,
) -> tuple[Stanza, int]:
    """Write the next payload bits into the channel's carrier location.

    Returns the new stanza and the number of real payload bits consumed
    (the stream is zero-padded if it runs dry mid-channel). A stanza already
    in the wanted state is returned unchanged, raw bytes intact. Byte-level
    minimality of the change is guaranteed for canonically serialized
    stanzas; foreign formatting (double quotes, stray spacing) is
    canonicalized as a side effect of any change.
    """
    channel = ChannelId(channel)
    cap = capacity(channel, stanza, config, id_source)
    if cap == 0:
        raise NoCapacity(f"{channel.value} cannot carry data in this stanza")
    if bits.remaining == 0:
        raise NoCapacity("payload stream is empty")
    available = bits.remaining
    values = bits.read(cap, pad=True)
    new_stanza = _HANDLERS[channel][1](stanza, values, config, id_source)
    return new_stanza, min(cap, available)


def extract(channel: ChannelId, stanza: Stanza, config: ChannelConfig) -> list[int]:
    """Read the channel's bits back; empty when the channel is inapplicable."""
    return _HANDLERS[ChannelId(channel)][2](stanza, config)


def mux_embed(
    stanza: Stanza,
    payload: BitStream,
    config: ChannelConfig,
    id_source: IdSource | None = None,
) -> tuple[Stanza, int]:
    """Apply every enabled channel in order, consuming from the payload head.

    Channels with zero capacity on the current stanza state are skipped;
    embedding stops once the payload is exhausted. Returns the stego stanza
    and the total number of payload bits consumed.
    """
    consumed = 0
    current = stanza
    for channel in config.enabled:
        if payload.remaining == 0:
            break
        if capacity(channel, current, config, id_source) == 0:
            continue
        current, used = embed(channel, current, payload, config, id_source)
        consumed += used
    return current, consumed


def mux_extract(stanza: Stanza, config: ChannelConfig) -> list[int]:
    """Exact inverse of :func:`mux_embed` under the same config."""
    bits: list[int] = []
    for channel in config.enabled:
        bits.extend(extract(channel, stanza, config))
    return bits
