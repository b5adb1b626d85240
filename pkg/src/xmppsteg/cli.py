"""Command-line front end: simulate, embed, extract, scan, entropy, capacity.

Thin shell over the library; every subcommand is a direct call into the
corresponding module. Exit codes: 0 ok, 2 scan found something suspicious,
64 usage error, 65 bad input data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .channels import ChannelConfig, ChannelId, capacity as channel_capacity
from .codec import HEADER_BITS
from .entropy import compare_sessions, comparison_to_json_dict, format_comparison
from .errors import ToolkitError
from .stanza import Jid
from .transcript import read_transcript, write_transcript
from .warden import STATEFUL, STATELESS, WardenThresholds, scan_transcript

EXIT_OK = 0
EXIT_SUSPICIOUS = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2; 2 means suspicious here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _load_secret(args) -> bytes:
    if args.secret_file is not None:
        return _read_bytes(args.secret_file)
    if args.secret is not None:
        return args.secret.encode("utf-8")
    raise ToolkitError("no secret given: use --secret or --secret-file")


def _load_key(args) -> bytes | None:
    if getattr(args, "key_file", None) is None:
        return None
    key = _read_bytes(args.key_file)
    if not key:
        raise ToolkitError(f"key file {args.key_file} is empty")
    return key


def _load_thresholds(args) -> WardenThresholds | None:
    if getattr(args, "thresholds", None) is None:
        return None
    return WardenThresholds.load(args.thresholds)


def _corpus(args) -> list[str]:
    if args.corpus is not None:
        return harness.load_corpus(args.corpus)
    return harness.default_corpus()


def _parse_pair(text: str | None) -> list[str] | None:
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ToolkitError(f"--pair must look like a@x,b@y, got {text!r}")
    return parts


def _cmd_simulate(args) -> int:
    corpus = _corpus(args)
    corpus_name = args.corpus or "bundled"
    clean = harness.generate_clean(
        corpus,
        args.n,
        args.seed,
        id_scheme=args.id_scheme,
        id_width=args.id_width,
        id_start=args.id_start,
        corpus_name=corpus_name,
    )
    clean.save(args.out)
    print(f"wrote {args.out}: {len(clean.messages)} clean messages (seed {args.seed})")

    if args.stego_out is not None:
        if args.channels is None:
            raise ToolkitError("--stego-out needs --channels")
        config = ChannelConfig.load(args.channels)
        secret = _load_secret(args)
        decoy = None
        if args.decoy_jid is not None:
            try:
                decoy = harness.DecoyScheduler(Jid.parse(args.decoy_jid))
            except ValueError as exc:
                raise ToolkitError(str(exc)) from None
        stego = harness.generate_stego(
            corpus,
            args.n,
            args.seed,
            secret,
            config,
            key=_load_key(args),
            decoy=decoy,
            id_scheme=args.id_scheme,
            id_width=args.id_width,
            id_start=args.id_start,
            corpus_name=corpus_name,
        )
        stego.save(args.stego_out)
        print(
            f"wrote {args.stego_out}: {len(stego.messages)} messages carrying "
            f"{len(secret)} secret bytes"
        )
    return EXIT_OK


def _cmd_embed(args) -> int:
    stanzas = read_transcript(args.infile)
    config = ChannelConfig.load(args.channels)
    secret = _load_secret(args)
    stego = harness.embed_transcript(stanzas, secret, config, key=_load_key(args))
    write_transcript(stego, args.out)
    print(
        f"wrote {args.out}: embedded {len(secret)} bytes "
        f"({HEADER_BITS + 8 * len(secret)} frame bits) into {len(stego)} messages"
    )
    return EXIT_OK


def _cmd_extract(args) -> int:
    stanzas = read_transcript(args.infile)
    config = ChannelConfig.load(args.channels)
    secret = harness.recover_payload(
        stanzas, config, key=_load_key(args), pair=_parse_pair(args.pair)
    )
    if args.out is not None:
        Path(args.out).write_bytes(secret)
    else:
        sys.stdout.buffer.write(secret)
        sys.stdout.buffer.flush()
    return EXIT_OK


def _cmd_scan(args) -> int:
    report = scan_transcript(_read_bytes(args.transcript), args.mode, _load_thresholds(args))
    if args.json:
        sys.stdout.write(report.to_json())
    else:
        detected = sorted(c.value for c, hit in report.summary.items() if hit)
        print(f"mode:     {report.mode}")
        print(f"stanzas:  {report.stanzas_scanned}")
        print(f"flagged:  {report.flagged_count}")
        print(f"detected: {', '.join(detected) if detected else 'none'}")
    return EXIT_SUSPICIOUS if report.suspicious else EXIT_OK


def _cmd_entropy(args) -> int:
    variants = {}
    for spec in args.variant:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ToolkitError(f"--variant must look like name=path, got {spec!r}")
        variants[name] = _read_bytes(path)
    comparison = compare_sessions(_read_bytes(args.control), variants)
    if args.json:
        sys.stdout.write(
            json.dumps(comparison_to_json_dict(comparison), indent=2, sort_keys=True) + "\n"
        )
    else:
        sys.stdout.write(format_comparison(comparison))
    return EXIT_OK


def _cmd_capacity(args) -> int:
    stanzas = read_transcript(args.infile)
    config = ChannelConfig.load(args.channels)
    available = sum(
        channel_capacity(channel, stanza, config)
        for stanza in stanzas
        for channel in config.enabled
    )
    print(f"messages:        {len(stanzas)}")
    print(f"available bits:  {available} (static estimate, carriers as-is)")
    print(f"payload bytes:   {(available - HEADER_BITS) // 8 if available > HEADER_BITS else 0} max")
    required = None
    if args.secret_file is not None:
        required = HEADER_BITS + 8 * len(_read_bytes(args.secret_file))
    elif args.payload_size is not None:
        required = HEADER_BITS + 8 * args.payload_size
    if required is not None:
        verdict = "fits" if required <= available else "does NOT fit"
        print(f"required bits:   {required} ({verdict})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xmppsteg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", parents=[], help="generate clean (and optionally stego) transcripts")
    p.add_argument("--corpus", help="message corpus file, one body per line (default: bundled)")
    p.add_argument("--n", type=int, default=200, help="number of messages (default 200)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", required=True, help="clean transcript output path")
    p.add_argument("--stego-out", help="also write a stego transcript here")
    p.add_argument("--secret", help="secret string for the stego transcript")
    p.add_argument("--secret-file", help="secret bytes file for the stego transcript")
    p.add_argument("--channels", help="channel config JSON (needed with --stego-out)")
    p.add_argument("--key-file", help="keystream key bytes")
    p.add_argument("--decoy-jid", help="enable decoy scheduling for discarded ids, e.g. carol@test.com")
    p.add_argument("--id-scheme", choices=("hex", "numeric"), default="hex")
    p.add_argument("--id-width", type=int, default=8)
    p.add_argument("--id-start", type=lambda v: int(v, 0), help="counter start (0x.. accepted)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("embed", help="embed a secret into an existing transcript")
    p.add_argument("--in", dest="infile", required=True, help="clean transcript")
    p.add_argument("--out", required=True, help="stego transcript output path")
    p.add_argument("--secret", help="secret string")
    p.add_argument("--secret-file", help="secret bytes file")
    p.add_argument("--channels", required=True, help="channel config JSON")
    p.add_argument("--key-file", help="keystream key bytes")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("extract", help="recover the secret from a stego transcript")
    p.add_argument("--in", dest="infile", required=True, help="stego transcript")
    p.add_argument("--channels", required=True, help="channel config JSON")
    p.add_argument("--key-file", help="keystream key bytes")
    p.add_argument("--pair", help="conversation pair a@x,b@y (default: most frequent)")
    p.add_argument("--out", help="write secret here instead of stdout")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("scan", help="run a warden over a transcript (exit 2 when suspicious)")
    p.add_argument("transcript", help="transcript file to scan")
    p.add_argument("--mode", choices=(STATELESS, STATEFUL), default=STATELESS)
    p.add_argument("--thresholds", help="JSON file overriding stateful thresholds")
    p.add_argument("--json", action="store_true", help="emit the full JSON report")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("entropy", help="entropy battery comparison against a control transcript")
    p.add_argument("--control", required=True, help="clean transcript")
    p.add_argument(
        "--variant", action="append", default=[], metavar="NAME=PATH",
        help="variant transcript (repeatable)",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("capacity", help="available vs required bits for a transcript + config")
    p.add_argument("--in", dest="infile", required=True, help="transcript")
    p.add_argument("--channels", required=True, help="channel config JSON")
    p.add_argument("--secret-file", help="size the requirement from this file")
    p.add_argument("--payload-size", type=int, help="or from an explicit byte count")
    p.set_defaults(func=_cmd_capacity)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"xmppsteg: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"xmppsteg: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
