"""RFID readings of the rate region.

Interpretation (i): tags answer in reader-assigned time slots, so the uplink
is limited to time sharing between single-user rates. Interpretation (ii):
the reader already knows the ID set, IDs shrink to an on-off message, and the
uplink may use the full multiple-access sum rate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple

from .errors import ValidationError
from .prob import LogBase
from .regions import DiscreteBounds, GaussianBounds

LN2 = math.log(2)


def max_tag_count(r_id_bits: float, n: int) -> int:
    """floor(2^{n r_id}); exact for integer exponents."""
    if r_id_bits < 0 or not math.isfinite(r_id_bits):
        raise ValidationError(f"ID rate must be finite and non-negative, got {r_id_bits}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    e = n * r_id_bits
    if e == math.floor(e):
        return 2 ** int(e)
    return int(math.floor(2.0 ** e))


class BoundRow(NamedTuple):
    """Right-hand sides of one region point, in nats, with the alpha that produced it."""

    id1: float
    id2: float
    id_sum: float
    data1: float
    data2: float
    data_sum: float
    alpha: float | None = None

    @classmethod
    def of(cls, b: DiscreteBounds | GaussianBounds, alpha: float | None = None) -> "BoundRow":
        return cls(b.id1, b.id2, b.id_sum, b.data1, b.data2, b.data_sum, alpha)


@dataclass(frozen=True)
class RfidLimits:
    max_tags: int
    per_tag_id_rate: float
    tdma_uplink_rate: float
    universal_uplink_sum_rate: float
    n: int
    alpha: float | None = None
    note: str = ""

    def as_dict(self, unit: LogBase | str = LogBase.NATS) -> dict:
        u = LogBase.parse(unit)
        out = asdict(self)
        for k in ("per_tag_id_rate", "tdma_uplink_rate", "universal_uplink_sum_rate"):
            out[k] = u.from_nats(out[k])
        out["unit"] = u.value
        return out


def _rows(frontier: Iterable) -> list[BoundRow]:
    rows = []
    for r in frontier:
        if isinstance(r, tuple) and len(r) == 2 and isinstance(r[1], (DiscreteBounds, GaussianBounds)):
            rows.append(BoundRow.of(r[1], r[0]))
        elif isinstance(r, (DiscreteBounds, GaussianBounds)):
            rows.append(BoundRow.of(r))
        elif isinstance(r, BoundRow):
            rows.append(r)
        else:
            raise ValidationError(f"unrecognised frontier row {r!r}")
    if not rows:
        raise ValidationError("frontier is empty")
    return rows


def _tdma(row: BoundRow) -> float:
    # best endpoint of the time-sharing line between the two single-user corners
    return max(0.0, min(row.data1, row.data_sum), min(row.data2, row.data_sum))


def _universal(row: BoundRow) -> float:
    return max(0.0, min(row.data_sum, row.data1 + row.data2))


def _equal_id(row: BoundRow) -> float:
    return max(0.0, min(row.id1, row.id2, row.id_sum / 2))


def _tags(rate_nats: float, n: int) -> int:
    bits = rate_nats / LN2
    # undo nats -> bits rounding so that e.g. ln2 / n maps back to exactly 1/n bits per symbol
    if abs(n * bits - round(n * bits)) < 1e-9:
        return max_tag_count(round(n * bits) / n, n) if n * bits >= 0.5 else 1
    return max_tag_count(bits, n)


def tdma_limit_report(frontier, n: int) -> RfidLimits:
    """Time-shared uplink maximum and the tag count of the best equal-ID-rate point."""
    rows = _rows(frontier)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    best = max(rows, key=_tdma)
    id_row = max(rows, key=_equal_id)
    r_id = _equal_id(id_row)
    return RfidLimits(
        max_tags=_tags(r_id, n),
        per_tag_id_rate=r_id,
        tdma_uplink_rate=_tdma(best),
        universal_uplink_sum_rate=_universal(best),
        n=n,
        alpha=best.alpha,
        note="uplink restricted to time sharing between single-user rates",
    )


def universal_limit_report(frontier, n: int = 1) -> RfidLimits:
    """Full multiple-access sum rate with IDs reduced to an on-off message.

    The on-off message uses the smallest positive ID rate a block of length
    ``n`` allows (two messages, 1/n bits), provided the broadcast bound is positive.
    """
    rows = _rows(frontier)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    best = max(rows, key=_universal)
    on_off = LN2 / n if any(_equal_id(r) > 0 for r in rows) else 0.0
    return RfidLimits(
        max_tags=_tags(on_off, n),
        per_tag_id_rate=on_off,
        tdma_uplink_rate=_tdma(best),
        universal_uplink_sum_rate=_universal(best),
        n=n,
        alpha=best.alpha,
        note="ID rate is the on-off message (2 messages per block), not zero",
    )
