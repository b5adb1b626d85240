"""Entropy battery over serialized transcripts, in the style of the classic
``ent`` randomness tool: Shannon entropy per byte, chi-square against the
uniform byte distribution (with p-value), arithmetic mean, Monte-Carlo pi
from 6-byte coordinate pairs, and lag-1 serial correlation.

Analysis runs over raw transcript bytes -- the wire view an observer records
-- and the comparator reports signed per-variant differences against a
control session.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ToolkitError

_MONTE_GROUP = 6
_MONTE_INCIRC = (256.0 ** (_MONTE_GROUP / 2) - 1) ** 2


class EmptyInput(ToolkitError):
    """The battery needs at least one byte."""


@dataclass(frozen=True)
class EntReport:
    entropy_bits_per_byte: float
    chi_square: float
    chi_square_p: float
    arithmetic_mean: float
    monte_carlo_pi: float
    serial_correlation: float
    byte_count: int

    def to_json_dict(self) -> dict:
        return {
            "entropy_bits_per_byte": self.entropy_bits_per_byte,
            "chi_square": self.chi_square,
            "chi_square_p": self.chi_square_p,
            "arithmetic_mean": self.arithmetic_mean,
            "monte_carlo_pi": self.monte_carlo_pi,
            "serial_correlation": self.serial_correlation,
            "byte_count": self.byte_count,
        }


@dataclass(frozen=True)
class VariantResult:
    report: EntReport
    difference: float  # variant entropy minus control entropy, sign preserved


@dataclass(frozen=True)
class EntropyComparison:
    control: EntReport
    variants: dict[str, VariantResult]


def _regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) via series / Lentz continued
    fraction; accurate to ~1e-14 for the chi-square range used here."""
    if x < 0 or a <= 0:
        raise ValueError("gamma Q needs a > 0, x >= 0")
    if x == 0:
        return 1.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1:
        # lower series, Q = 1 - P
        total = term = 1.0 / a
        n = 1
        while True:
            term *= x / (a + n)
            total += term
            if abs(term) < abs(total) * 1e-16 or n > 10_000:
                break
            n += 1
        return max(0.0, min(1.0, 1.0 - math.exp(log_prefactor) * total))
    # upper continued fraction (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return max(0.0, min(1.0, math.exp(log_prefactor) * h))


def chi_square_p_value(chi_square: float, dof: int) -> float:
    """Probability of a chi-square at least this large under the null."""
    return _regularized_gamma_q(dof / 2.0, chi_square / 2.0)


def ent_battery(data: bytes) -> EntReport:
    """Run the full statistics battery over one byte string."""
    n = len(data)
    if n == 0:
        raise EmptyInput("cannot analyze zero bytes")

    counts = [0] * 256
    total = 0
    for byte in data:
        counts[byte] += 1
        total += byte

    entropy = 0.0
    for count in counts:
        if count:
            p = count / n
            entropy -= p * math.log2(p)

    expected = n / 256.0
    chi_square = sum((count - expected) ** 2 for count in counts) / expected
    chi_p = chi_square_p_value(chi_square, 255)

    mean = total / n

    samples = n // _MONTE_GROUP
    inside = 0
    for i in range(samples):
        group = data[i * _MONTE_GROUP : (i + 1) * _MONTE_GROUP]
        x = group[0] * 65536 + group[1] * 256 + group[2]
        y = group[3] * 65536 + group[4] * 256 + group[5]
        if x * x + y * y <= _MONTE_INCIRC:
            inside += 1
    monte_pi = 4.0 * inside / samples if samples else 0.0

    # circular lag-1 correlation over exact integer sums
    if n > 1:
        sum_x = total
        sum_x2 = sum(b * b for b in data)
        sum_xy = sum(data[i] * data[(i + 1) % n] for i in range(n))
        denom = n * sum_x2 - sum_x * sum_x
        serial = (n * sum_xy - sum_x * sum_x) / denom if denom else 0.0
    else:
        serial = 0.0

    return EntReport(
        entropy_bits_per_byte=entropy,
        chi_square=chi_square,
        chi_square_p=chi_p,
        arithmetic_mean=mean,
        monte_carlo_pi=monte_pi,
        serial_correlation=serial,
        byte_count=n,
    )


def compare_sessions(control: bytes, variants: Mapping[str, bytes]) -> EntropyComparison:
    """Battery per transcript, plus each variant's signed entropy difference."""
    control_report = ent_battery(control)
    results: dict[str, VariantResult] = {}
    for name, data in variants.items():
        report = ent_battery(data)
        results[name] = VariantResult(
            report=report,
            difference=report.entropy_bits_per_byte - control_report.entropy_bits_per_byte,
        )
    return EntropyComparison(control=control_report, variants=results)


def format_comparison(comparison: EntropyComparison) -> str:
    """Aligned text table: channel, entropy, signed difference vs control."""
    width = max([len("control")] + [len(name) for name in comparison.variants]) + 2
    lines = [f"{'channel':<{width}}  {'entropy':>10}  {'difference':>11}"]
    lines.append(f"{'control':<{width}}  {comparison.control.entropy_bits_per_byte:>10.6f}")
    for name, result in comparison.variants.items():
        lines.append(
            f"{name:<{width}}  {result.report.entropy_bits_per_byte:>10.6f}  "
            f"{result.difference:>+11.6f}"
        )
    return "\n".join(lines) + "\n"


def comparison_to_json_dict(comparison: EntropyComparison) -> dict:
    return {
        "control": comparison.control.to_json_dict(),
        "variants": {
            name: {
                "report": result.report.to_json_dict(),
                "entropy_difference": result.difference,
            }
            for name, result in comparison.variants.items()
        },
    }
