"""Traffic generation: clean and stego conversation transcripts.

A transcript models one client's outgoing message stream (sender to
recipient), which is how the id counter and the decoy trick actually behave:
ids whose final-digit LSB does not match the wanted bit are not skipped but
spent on filler messages to a third-party decoy recipient, so the sender's
id sequence stays gap-free across recipients.

Generation is deterministic per seed; stego transcripts keep the clean
transcript's shape (same bodies, same recipient message count) and differ
only in carrier locations plus any interleaved decoy messages.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence

from .channels import ChannelConfig, ChannelId, IdExhausted, mux_embed, mux_extract
from .codec import BitStream, deframe_payload, frame_payload
from .errors import ToolkitError
from .stanza import BodyElement, Jid, Stanza
from .transcript import transcript_to_bytes, write_transcript

DEFAULT_SENDER = Jid("adam", "test.com")
DEFAULT_RECIPIENT = Jid("bart", "test.com")
DEFAULT_DECOY = Jid("carol", "test.com")


class EmptyCorpus(ToolkitError):
    """No usable message lines to draw bodies from."""


class InsufficientCapacity(ToolkitError):
    """The transcript cannot carry the whole frame."""

    def __init__(self, needed_bits: int, available_bits: int) -> None:
        super().__init__(
            f"payload frame needs {needed_bits} bits, transcript carried {available_bits}"
        )
        self.needed_bits = needed_bits
        self.available_bits = available_bits


@dataclass
class IdGenerator:
    """Message-id counter; successive clean ids increase by exactly 1."""

    scheme: str = "hex"  # "hex" | "numeric"
    next_value: int = 0
    width: int = 8

    def __post_init__(self) -> None:
        if self.scheme not in ("hex", "numeric"):
            raise ValueError(f"unknown id scheme {self.scheme!r}")
        if self.next_value < 0:
            raise ValueError("counter must start at or above zero")

    def take(self) -> str:
        value = self.next_value
        self.next_value += 1
        if self.scheme == "hex":
            return format(value, f"0{self.width}x")
        return format(value, f"0{self.width}d")


@dataclass
class DecoyScheduler:
    """Holds discarded ids (and their filler bodies) until they are emitted
    as messages to the decoy recipient."""

    decoy_jid: Jid = DEFAULT_DECOY
    pending: list[tuple[str, str]] = field(default_factory=list)


class CounterIdSource:
    """Draws counter ids until the final-digit LSB matches the wanted bit.

    Non-matching candidates are never silently dropped: with a scheduler
    they become decoy messages; without one they become the visible gaps a
    stateful warden keys on.
    """

    def __init__(
        self,
        generator: IdGenerator,
        scheduler: DecoyScheduler | None = None,
        filler: Callable[[], str] | None = None,
        max_draws: int = 64,
    ) -> None:
        self.generator = generator
        self.scheduler = scheduler
        self.filler = filler
        self.max_draws = max_draws

    def next_matching(self, bit: int) -> str:
        for _ in range(self.max_draws):
            candidate = self.generator.take()
            if int(candidate[-1], 16) & 1 == bit:
                return candidate
            if self.scheduler is not None:
                body = self.filler() if self.filler is not None else ""
                self.scheduler.pending.append((candidate, body))
        raise IdExhausted(f"no id with LSB {bit} within {self.max_draws} draws")


@dataclass
class SessionTranscript:
    """One simulated conversation, in order, plus its provenance."""

    messages: list[Stanza]
    participants: frozenset[Jid]
    seed: int | None = None
    corpus_name: str = ""

    def to_bytes(self) -> bytes:
        return transcript_to_bytes(self.messages)

    def save(self, path: str | os.PathLike) -> None:
        write_transcript(self.messages, path)


def load_corpus(path: str | os.PathLike) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh]
    return [line for line in lines if line]


def default_corpus() -> list[str]:
    """The bundled chat-style corpus; keeps simulation self-contained."""
    text = resources.files("xmppsteg.data").joinpath("corpus.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def _clean_lines(corpus: Sequence[str]) -> list[str]:
    lines = [line.strip() for line in corpus if line.strip()]
    if not lines:
        raise EmptyCorpus("corpus has no non-blank lines")
    return lines


def _pick_id_start(rng: random.Random, scheme: str, width: int, n: int) -> int:
    span = (16 if scheme == "hex" else 10) ** width
    headroom = 70 * n + 16  # worst case: every id discarded to a decoy
    if span <= headroom * 2:
        return 0
    return rng.randrange(span // 8, span - headroom)


def _message(sender: Jid, recipient: Jid, msg_id: str | None, body: str) -> Stanza:
    return Stanza(
        from_jid=sender,
        to_jid=recipient,
        type_attr="chat",
        id_attr=msg_id,
        body=BodyElement(body),
    )


def generate_clean(
    corpus: Sequence[str],
    n: int,
    seed: int,
    *,
    sender: Jid = DEFAULT_SENDER,
    recipient: Jid = DEFAULT_RECIPIENT,
    id_scheme: str = "hex",
    id_width: int = 8,
    id_start: int | None = None,
    corpus_name: str = "",
) -> SessionTranscript:
    """A control session: counter ids, type='chat' everywhere, no xml:lang,
    bodies drawn (trimmed) from the corpus. Deterministic per seed."""
    lines = _clean_lines(corpus)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = random.Random(seed)
    start = id_start if id_start is not None else _pick_id_start(rng, id_scheme, id_width, n)
    generator = IdGenerator(id_scheme, start, id_width)
    messages = [
        _message(sender, recipient, generator.take(), rng.choice(lines)) for _ in range(n)
    ]
    return SessionTranscript(messages, frozenset({sender, recipient}), seed, corpus_name)


def generate_stego(
    corpus: Sequence[str],
    n: int,
    seed: int,
    payload: bytes,
    config: ChannelConfig,
    *,
    key: bytes | None = None,
    decoy: DecoyScheduler | None = None,
    sender: Jid = DEFAULT_SENDER,
    recipient: Jid = DEFAULT_RECIPIENT,
    id_scheme: str = "hex",
    id_width: int = 8,
    id_start: int | None = None,
    corpus_name: str = "",
) -> SessionTranscript:
    """Like :func:`generate_clean` with the framed payload multiplexed in.

    With a decoy scheduler and the id_lsb channel enabled, discarded ids are
    emitted as filler messages to the decoy recipient, interleaved at their
    natural counter position (immediately before the message that skipped
    them). Raises :class:`InsufficientCapacity` when the payload does not fit.
    """
    lines = _clean_lines(corpus)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = random.Random(seed)
    start = id_start if id_start is not None else _pick_id_start(rng, id_scheme, id_width, n)
    generator = IdGenerator(id_scheme, start, id_width)

    stream = frame_payload(payload, key)
    ids_from_source = ChannelId.ID_LSB in config.enabled
    source = None
    if ids_from_source:
        decoy_rng = random.Random(f"{seed}:decoy")
        filler = (lambda: decoy_rng.choice(lines)) if decoy is not None else None
        source = CounterIdSource(generator, decoy, filler)

    messages: list[Stanza] = []
    participants = {sender, recipient}
    for _ in range(n):
        body = rng.choice(lines)
        if stream.remaining:
            skeleton = _message(
                sender, recipient, None if ids_from_source else generator.take(), body
            )
            stego, _ = mux_embed(skeleton, stream, config, id_source=source)
            if stego.id_attr is None:
                # payload ran dry before the id channel drew one
                stego = stego.replace(id_attr=generator.take())
            if decoy is not None and decoy.pending:
                participants.add(decoy.decoy_jid)
                for decoy_id, decoy_body in decoy.pending:
                    messages.append(_message(sender, decoy.decoy_jid, decoy_id, decoy_body))
                decoy.pending.clear()
            messages.append(stego)
        else:
            messages.append(_message(sender, recipient, generator.take(), body))

    if stream.remaining:
        raise InsufficientCapacity(len(stream), stream.cursor)
    return SessionTranscript(messages, frozenset(participants), seed, corpus_name)


def _pair_key(stanza: Stanza) -> frozenset:
    sender = stanza.from_jid.bare() if stanza.from_jid else "?"
    recipient = stanza.to_jid.bare() if stanza.to_jid else "?"
    return frozenset({sender, recipient})


def primary_pair(messages: Iterable[Stanza]) -> frozenset:
    """The most frequent unordered conversation pair (first seen wins ties).

    Decoy traffic is always rarer than the embedding pair, so this is how
    the receiving side separates real messages from filler by default.
    """
    counts: dict[frozenset, int] = {}
    for stanza in messages:
        key = _pair_key(stanza)
        counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise ToolkitError("transcript has no messages")
    return max(counts, key=lambda k: counts[k])


def recover_payload(
    transcript: SessionTranscript | Sequence[Stanza],
    config: ChannelConfig,
    key: bytes | None = None,
    pair: Iterable[str] | None = None,
) -> bytes:
    """Receiver side: extract bits from the conversation's messages (skipping
    any traffic to other recipients) and deframe the secret."""
    messages = transcript.messages if isinstance(transcript, SessionTranscript) else list(transcript)
    wanted = frozenset(pair) if pair is not None else primary_pair(messages)
    bits: list[int] = []
    for stanza in messages:
        if _pair_key(stanza) == wanted:
            bits.extend(mux_extract(stanza, config))
    return deframe_payload(BitStream(bits), key)


def embed_transcript(
    stanzas: Sequence[Stanza],
    payload: bytes,
    config: ChannelConfig,
    key: bytes | None = None,
) -> list[Stanza]:
    """Embed a framed payload into an existing transcript, in place of
    generation. No id generator is available here, so the id_lsb channel
    adjusts existing ids (the gap-prone variant) instead of using decoys."""
    stream = frame_payload(payload, key)
    out: list[Stanza] = []
    for stanza in stanzas:
        if stream.remaining:
            stego, _ = mux_embed(stanza, stream, config)
            out.append(stego)
        else:
            out.append(stanza)
    if stream.remaining:
        raise InsufficientCapacity(len(stream), stream.cursor)
    return out
