"""Covert channels in XMPP message metadata.

Library and CLI for hiding bits in ``<message>`` stanza metadata and body
text, the passive wardens that try to detect such channels, and the entropy
battery used to measure how much the channels disturb a session's byte
statistics.
"""

from .channels import (
    CHANNEL_SPECS,
    ChannelConfig,
    ChannelId,
    ChannelSpec,
    IdExhausted,
    InvalidConfig,
    NoCapacity,
    capacity,
    embed,
    extract,
    mux_embed,
    mux_extract,
)
from .codec import (
    BadMagic,
    BitStream,
    PayloadTooLarge,
    Truncated,
    deframe_payload,
    frame_payload,
    xor_keystream,
)
from .entropy import EmptyInput, EntReport, EntropyComparison, compare_sessions, ent_battery
from .errors import ToolkitError
from .harness import (
    CounterIdSource,
    DecoyScheduler,
    EmptyCorpus,
    IdGenerator,
    InsufficientCapacity,
    SessionTranscript,
    default_corpus,
    embed_transcript,
    generate_clean,
    generate_stego,
    load_corpus,
    recover_payload,
)
from .stanza import (
    BodyElement,
    Jid,
    MalformedXml,
    NotAMessage,
    Stanza,
    parse_stanza,
    serialize_stanza,
)
from .transcript import (
    TranscriptParseError,
    parse_transcript,
    read_transcript,
    transcript_to_bytes,
    write_transcript,
)
from .warden import (
    Flag,
    SessionReport,
    SessionState,
    Verdict,
    WardenThresholds,
    scan_stateful,
    scan_stateless,
    scan_transcript,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagic",
    "BitStream",
    "BodyElement",
    "CHANNEL_SPECS",
    "ChannelConfig",
    "ChannelId",
    "ChannelSpec",
    "CounterIdSource",
    "DecoyScheduler",
    "EmptyCorpus",
    "EmptyInput",
    "EntReport",
    "EntropyComparison",
    "Flag",
    "IdExhausted",
    "IdGenerator",
    "InsufficientCapacity",
    "InvalidConfig",
    "Jid",
    "MalformedXml",
    "NoCapacity",
    "NotAMessage",
    "PayloadTooLarge",
    "SessionReport",
    "SessionState",
    "SessionTranscript",
    "Stanza",
    "ToolkitError",
    "TranscriptParseError",
    "Truncated",
    "Verdict",
    "WardenThresholds",
    "capacity",
    "compare_sessions",
    "default_corpus",
    "deframe_payload",
    "embed",
    "embed_transcript",
    "ent_battery",
    "extract",
    "frame_payload",
    "generate_clean",
    "generate_stego",
    "load_corpus",
    "mux_embed",
    "mux_extract",
    "parse_stanza",
    "parse_transcript",
    "read_transcript",
    "recover_payload",
    "scan_stateful",
    "scan_stateless",
    "scan_transcript",
    "serialize_stanza",
    "transcript_to_bytes",
    "write_transcript",
    "xor_keystream",
]
