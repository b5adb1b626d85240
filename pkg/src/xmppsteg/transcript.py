"""Newline-delimited transcript files: one serialized ``<message>`` per line.

This is the shared on-disk/wire format for every part of the toolkit: a UTF-8
text file, one stanza per line, blank lines ignored. Strict loading raises
:class:`TranscriptParseError` with a 1-based line number; the warden uses the
lenient iterator instead so that malformed lines become flagged verdicts.
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator

from .errors import ToolkitError
from .stanza import Stanza, parse_stanza, serialize_stanza


class TranscriptParseError(ToolkitError):
    def __init__(self, line_number: int, reason: str) -> None:
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


def transcript_to_bytes(stanzas: Iterable[Stanza]) -> bytes:
    return b"".join(serialize_stanza(s) + b"\n" for s in stanzas)


def _lines(data: bytes) -> Iterator[tuple[int, bytes]]:
    for lineno, line in enumerate(data.split(b"\n"), start=1):
        if line.strip():
            yield lineno, line


def parse_transcript(data: bytes) -> list[Stanza]:
    """Strictly parse transcript bytes; any bad line aborts with its number."""
    stanzas = []
    for lineno, line in _lines(data):
        try:
            stanzas.append(parse_stanza(line))
        except ToolkitError as exc:
            raise TranscriptParseError(lineno, str(exc)) from None
    return stanzas


def iter_transcript_lenient(data: bytes) -> Iterator[tuple[int, Stanza | ToolkitError]]:
    """Yield (line_number, stanza-or-error) without ever raising per line."""
    for lineno, line in _lines(data):
        try:
            yield lineno, parse_stanza(line)
        except ToolkitError as exc:
            yield lineno, exc


def read_transcript(path: str | os.PathLike) -> list[Stanza]:
    with open(path, "rb") as fh:
        return parse_transcript(fh.read())


def write_transcript(stanzas: Iterable[Stanza], path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(transcript_to_bytes(stanzas))
