"""XMPP ``<message>`` stanza model with byte-faithful parsing and serialization.

The covert channels in this toolkit modulate attribute case, whitespace and
attribute presence, so parsing must never case-fold, trim, reorder or re-quote
anything. General XML parsers do all of those; this module uses a
purpose-built reader for standalone message elements instead.

Stanzas are immutable value objects. Changing one goes through
:meth:`Stanza.replace`, which drops the cached raw bytes so the canonical
writer takes over. An unmodified parsed stanza serializes back to its exact
input bytes.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace as _dc_replace

from .errors import ToolkitError

# Message 'type' values allowed by the XMPP instant-messaging profile.
MESSAGE_TYPE_VALUES = frozenset({"chat", "error", "groupchat", "headline", "normal"})

# Attribute order used when a stanza was constructed rather than parsed.
DEFAULT_ATTR_ORDER = ("from", "to", "type", "id")

_NAME_CHARS = frozenset(string.ascii_letters + string.digits + "_-.:")
_HEX_DIGITS = frozenset(string.hexdigits)

_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "apos": "'", "quot": '"'}


class MalformedXml(ToolkitError):
    """Input is not a well-formed standalone message element."""


class NotAMessage(ToolkitError):
    """The root element parsed fine but is not ``<message>``."""


@dataclass(frozen=True)
class Jid:
    """A bare or full JID: ``local@domain[/resource]``."""

    local: str
    domain: str
    resource: str | None = None

    def __post_init__(self) -> None:
        if not self.local or not self.domain:
            raise ValueError("jid needs non-empty local and domain parts")

    @classmethod
    def parse(cls, text: str) -> "Jid":
        local, sep, rest = text.partition("@")
        if not sep:
            raise ValueError(f"not a jid (missing @): {text!r}")
        domain, sep, resource = rest.partition("/")
        return cls(local, domain, resource if sep else None)

    def bare(self) -> str:
        return f"{self.local}@{self.domain}"

    def __str__(self) -> str:
        if self.resource is not None:
            return f"{self.local}@{self.domain}/{self.resource}"
        return self.bare()


@dataclass(frozen=True)
class BodyElement:
    """Message body text plus its optional verbatim xml:lang tag.

    ``text`` is stored exactly as written, including leading/trailing spaces;
    the space channels depend on that.
    """

    text: str
    xml_lang: str | None = None


@dataclass(frozen=True)
class Stanza:
    """One parsed or constructed ``<message>`` element.

    ``attr_order`` records attribute names as they appeared in the input (empty
    for constructed stanzas, which serialize in :data:`DEFAULT_ATTR_ORDER`).
    ``extra_attrs`` preserves attributes beyond from/to/type/id verbatim.
    ``raw`` caches the original bytes of a parsed stanza; any field change via
    :meth:`replace` clears it. ``raw`` is excluded from equality so a parsed
    stanza compares equal to an identically-valued constructed one.
    """

    from_jid: Jid | None = None
    to_jid: Jid | None = None
    type_attr: str | None = None
    id_attr: str | None = None
    body: BodyElement | None = None
    attr_order: tuple[str, ...] = ()
    extra_attrs: tuple[tuple[str, str], ...] = ()
    raw: bytes | None = field(default=None, compare=False, repr=False)

    def replace(self, **changes) -> "Stanza":
        """Functional update; the raw byte cache never survives a change."""
        changes.setdefault("raw", None)
        return _dc_replace(self, **changes)

    def replace_body(self, **changes) -> "Stanza":
        """Functional update of body fields; requires a body to be present."""
        if self.body is None:
            raise ValueError("stanza has no body element")
        return self.replace(body=_dc_replace(self.body, **changes))


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(value: str) -> str:
    return _escape_text(value).replace("'", "&apos;")


def _unescape(value: str, where: str) -> str:
    if "&" not in value:
        return value
    out = []
    i = 0
    while True:
        j = value.find("&", i)
        if j < 0:
            out.append(value[i:])
            break
        out.append(value[i:j])
        k = value.find(";", j + 1, j + 8)
        name = value[j + 1 : k] if k > 0 else ""
        if name not in _ENTITIES:
            raise MalformedXml(f"bad entity reference in {where}: {value[j:j + 8]!r}")
        out.append(_ENTITIES[name])
        i = k + 1
    return "".join(out)


class _Reader:
    """Cursor over the decoded stanza text."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def skip_ws(self) -> None:
        while self.peek() in (" ", "\t"):
            self.pos += 1

    def expect(self, literal: str) -> None:
        if not self.text.startswith(literal, self.pos):
            got = self.text[self.pos : self.pos + len(literal) + 4]
            raise MalformedXml(f"expected {literal!r} at offset {self.pos}, got {got!r}")
        self.pos += len(literal)

    def read_name(self) -> str:
        start = self.pos
        while self.peek() in _NAME_CHARS:
            self.pos += 1
        if self.pos == start:
            raise MalformedXml(f"expected a name at offset {start}")
        return self.text[start : self.pos]

    def read_quoted(self, where: str) -> str:
        quote = self.peek()
        if quote not in ("'", '"'):
            raise MalformedXml(f"expected quoted value at offset {self.pos}")
        self.pos += 1
        end = self.text.find(quote, self.pos)
        if end < 0:
            raise MalformedXml(f"unterminated attribute value at offset {self.pos}")
        rawval = self.text[self.pos : end]
        self.pos = end + 1
        if "<" in rawval:
            raise MalformedXml(f"raw '<' inside attribute value in {where}")
        return _unescape(rawval, where)


def _read_attributes(r: _Reader, element: str) -> tuple[list[tuple[str, str]], bool]:
    """Read attributes up to the end of the open tag.

    Returns (attributes in order, self_closed).
    """
    attrs: list[tuple[str, str]] = []
    seen: set[str] = set()
    while True:
        had_ws = r.peek() in (" ", "\t")
        r.skip_ws()
        ch = r.peek()
        if ch == ">":
            r.pos += 1
            return attrs, False
        if ch == "/":
            r.expect("/>")
            return attrs, True
        if not ch:
            raise MalformedXml(f"unterminated <{element}> tag")
        if not had_ws:
            raise MalformedXml(f"missing whitespace before attribute in <{element}>")
        name = r.read_name()
        if name in seen:
            raise MalformedXml(f"duplicate attribute {name!r} in <{element}>")
        seen.add(name)
        r.skip_ws()
        r.expect("=")
        r.skip_ws()
        value = r.read_quoted(f"attribute {name!r}")
        attrs.append((name, value))


def _parse_body(r: _Reader) -> BodyElement:
    attrs, self_closed = _read_attributes(r, "body")
    xml_lang = None
    for name, value in attrs:
        if name != "xml:lang":
            raise MalformedXml(f"unsupported body attribute {name!r}")
        xml_lang = value
    if self_closed:
        return BodyElement("", xml_lang)
    end = r.text.find("<", r.pos)
    if end < 0:
        raise MalformedXml("unterminated <body> element")
    text = _unescape(r.text[r.pos : end], "body text")
    r.pos = end
    r.expect("</body>")
    return BodyElement(text, xml_lang)


def parse_stanza(data: bytes) -> Stanza:
    """Parse one serialized ``<message>`` element, capturing everything verbatim.

    Surrounding ASCII whitespace is ignored; the ``raw`` field holds the
    trimmed input bytes. Raises :class:`MalformedXml` for anything that is not
    a single well-formed message element in UTF-8, and :class:`NotAMessage`
    when the root element has a different name.
    """
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedXml(f"not valid UTF-8: {exc}") from None
    stripped = text.strip()
    if not stripped:
        raise MalformedXml("empty input")
    for ch in stripped:
        if ord(ch) < 0x20 and ch != "\t":
            raise MalformedXml(f"control character {ch!r} inside stanza")

    r = _Reader(stripped)
    r.expect("<")
    root = r.read_name()
    if root != "message":
        raise NotAMessage(f"root element is <{root}>, not <message>")
    attrs, self_closed = _read_attributes(r, "message")

    body: BodyElement | None = None
    if not self_closed:
        if r.text.startswith("</message>", r.pos):
            r.pos += len("</message>")
        elif r.text.startswith("<body", r.pos):
            r.pos += len("<body")
            body = _parse_body(r)
            r.expect("</message>")
        else:
            raise MalformedXml(
                f"unexpected content at offset {r.pos}: {r.text[r.pos:r.pos + 12]!r}"
            )
    if not r.eof():
        raise MalformedXml(f"trailing data after </message>: {r.text[r.pos:r.pos + 12]!r}")

    from_jid = to_jid = None
    type_attr = id_attr = None
    extras: list[tuple[str, str]] = []
    for name, value in attrs:
        if name == "from" or name == "to":
            try:
                jid = Jid.parse(value)
            except ValueError as exc:
                raise MalformedXml(str(exc)) from None
            if name == "from":
                from_jid = jid
            else:
                to_jid = jid
        elif name == "type":
            type_attr = value
        elif name == "id":
            id_attr = value
        else:
            extras.append((name, value))

    return Stanza(
        from_jid=from_jid,
        to_jid=to_jid,
        type_attr=type_attr,
        id_attr=id_attr,
        body=body,
        attr_order=tuple(name for name, _ in attrs),
        extra_attrs=tuple(extras),
        raw=stripped.encode("utf-8"),
    )


def _check_attr_value(name: str, value: str) -> str:
    for ch in value:
        if ord(ch) < 0x20:
            raise ValueError(f"control character in attribute {name!r}")
    return value


def _serial_order(observed: tuple[str, ...], present: dict[str, str]) -> list[str]:
    """Attribute emission order: observed order, with new names slotted in at
    their canonical position (from/to/type/id) and unknown names at the end."""
    if not observed:
        order = [n for n in DEFAULT_ATTR_ORDER if n in present]
        order.extend(n for n in present if n not in DEFAULT_ATTR_ORDER)
        return order
    order = [n for n in observed if n in present]
    for name in present:
        if name in order:
            continue
        if name in DEFAULT_ATTR_ORDER:
            canon = DEFAULT_ATTR_ORDER.index(name)
            pos = len(order)
            for i, existing in enumerate(order):
                if existing in DEFAULT_ATTR_ORDER and DEFAULT_ATTR_ORDER.index(existing) > canon:
                    pos = i
                    break
            order.insert(pos, name)
        else:
            order.append(name)
    return order


def serialize_stanza(stanza: Stanza) -> bytes:
    """Serialize a stanza to bytes.

    An unmodified parsed stanza returns its original bytes. Otherwise the
    canonical form is emitted: single quotes, attributes separated by one
    space in ``attr_order`` (default from/to/type/id), no added whitespace,
    ``& < >`` escaped in text and additionally ``'`` in attribute values.
    """
    if stanza.raw is not None:
        return stanza.raw
    if stanza.from_jid is None or stanza.to_jid is None:
        raise ValueError("cannot serialize a stanza without from/to")

    present: dict[str, str] = {
        "from": str(stanza.from_jid),
        "to": str(stanza.to_jid),
    }
    if stanza.type_attr is not None:
        present["type"] = stanza.type_attr
    if stanza.id_attr is not None:
        present["id"] = stanza.id_attr
    for name, value in stanza.extra_attrs:
        if name in present:
            raise ValueError(f"duplicate attribute {name!r}")
        present[name] = value

    parts = ["<message"]
    for name in _serial_order(stanza.attr_order, present):
        parts.append(f" {name}='{_escape_attr(_check_attr_value(name, present[name]))}'")
    if stanza.body is None:
        parts.append("/>")
    else:
        for ch in stanza.body.text:
            if ord(ch) < 0x20 and ch != "\t":
                raise ValueError("control character in body text")
        parts.append(">")
        if stanza.body.xml_lang is not None:
            lang = _check_attr_value("xml:lang", stanza.body.xml_lang)
            parts.append(f"<body xml:lang='{_escape_attr(lang)}'>")
        else:
            parts.append("<body>")
        parts.append(_escape_text(stanza.body.text))
        parts.append("</body></message>")
    return "".join(parts).encode("utf-8")
