"""Weighted Sigma-Delta error-diffusion schemes in exact rational arithmetic.

A scheme is a list of causal directions d = (di, dj), each carrying a weight
w_d and a causal feedback filter h^d = (h_1, ..., h_L). The state update is

    s_n = sum_d w_d * sum_k h^d_k * v[n - k*d]
    q_n = sign(s_n + p_n),   v_n = s_n + p_n - q_n

so first-order error diffusion (Floyd-Steinberg and friends) is the special
case h^d = (1,) for every direction.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence, Union

Number = Union[int, str, Fraction]


class SchemeError(ValueError):
    """Invalid scheme definition (weights, causality, or declared order)."""


def _frac(x: Number) -> Fraction:
    if isinstance(x, float):
        raise TypeError("scheme coefficients must be exact; pass 'num/den' strings or Fractions")
    return Fraction(x)


@dataclass(frozen=True)
class Direction:
    di: int
    dj: int

    def __post_init__(self):
        if not (self.di >= 1 or (self.di == 0 and self.dj >= 1)):
            raise SchemeError(
                f"direction ({self.di}, {self.dj}) is not causal for a raster scan"
            )


@dataclass(frozen=True)
class FeedbackFilter:
    """Causal filter taps h_1..h_L (h_0 and negative indices are zero)."""

    taps: tuple[Fraction, ...]

    def __init__(self, taps: Iterable[Number]):
        taps = tuple(_frac(t) for t in taps)
        if not taps:
            raise SchemeError("a feedback filter needs at least one tap")
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return len(self.taps)

    def tap_sum(self) -> Fraction:
        return sum(self.taps, Fraction(0))


FIRST_ORDER = FeedbackFilter([1])
H2 = FeedbackFilter(["3/2", 0, "-1/2"])
H3 = FeedbackFilter(["4/3", 0, 0, "-1/3"])


class OrderCertificate(NamedTuple):
    holds: bool
    g: Optional[tuple[Fraction, ...]]

    def __bool__(self) -> bool:
        return self.holds


def verify_order(h: FeedbackFilter, r: int) -> OrderCertificate:
    """Check delta^0 - h = Delta^r g for a causal finite g.

    In generating-function form: 1 - sum_n h_n z^n must be divisible by
    (1 - z)^r. Dividing by (1 - z) once is a running sum of the
    coefficients; the division is exact iff the final running sum is zero.
    """
    if r < 1:
        raise ValueError("order must be a positive integer")
    poly = [Fraction(1)] + [-t for t in h.taps]
    for _ in range(r):
        acc = Fraction(0)
        quotient = []
        for c in poly:
            acc += c
            quotient.append(acc)
        if quotient[-1] != 0:
            return OrderCertificate(False, None)
        poly = quotient[:-1]
        if not poly:
            return OrderCertificate(False, None)
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return OrderCertificate(True, tuple(poly))


@dataclass(frozen=True)
class SchemeEntry:
    direction: Direction
    weight: Fraction
    filter: FeedbackFilter = FIRST_ORDER


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    entries: tuple[SchemeEntry, ...]
    order: int = 1
    description: str = field(default="", compare=False)

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise SchemeError(f"{self.name}: scheme has no entries")
        seen = set()
        for e in entries:
            key = (e.direction.di, e.direction.dj)
            if key in seen:
                raise SchemeError(f"{self.name}: duplicate direction {key}")
            seen.add(key)
        total = sum((e.weight for e in entries), Fraction(0))
        if total != 1:
            raise SchemeError(f"{self.name}: weights sum to {total}, expected 1")
        for e in entries:
            if not verify_order(e.filter, self.order):
                raise SchemeError(
                    f"{self.name}: filter {tuple(map(str, e.filter.taps))} on direction "
                    f"({e.direction.di}, {e.direction.dj}) is not of order {self.order}"
                )

    def weight_sum(self) -> Fraction:
        return sum((e.weight for e in self.entries), Fraction(0))

    def reach(self) -> tuple[int, int]:
        """Largest row offset and largest |column offset| the recurrence reads."""
        rows = max(len(e.filter) * e.direction.di for e in self.entries)
        cols = max(len(e.filter) * abs(e.direction.dj) for e in self.entries)
        return rows, cols


def make_scheme(
    name: str,
    entries: Sequence[tuple[int, int, Number] | tuple[int, int, Number, FeedbackFilter]],
    order: int = 1,
    description: str = "",
) -> SchemeSpec:
    """Build a scheme from (di, dj, weight[, filter]) tuples."""
    built = []
    for item in entries:
        di, dj, w = item[:3]
        filt = item[3] if len(item) > 3 else FIRST_ORDER
        built.append(SchemeEntry(Direction(di, dj), _frac(w), filt))
    return SchemeSpec(name, tuple(built), order, description)


# --------------------------------------------------------------------------
# extended weight matrices
# --------------------------------------------------------------------------


def _expansion_terms(scheme: SchemeSpec) -> dict[tuple[int, int], list[Fraction]]:
    terms: dict[tuple[int, int], list[Fraction]] = defaultdict(list)
    terms[(0, 0)].append(Fraction(1))
    for e in scheme.entries:
        for k, hk in enumerate(e.filter.taps, start=1):
            if hk == 0:
                continue
            terms[(k * e.direction.di, k * e.direction.dj)].append(-e.weight * hk)
    return terms


def expand_scheme(scheme: SchemeSpec) -> dict[tuple[int, int], Fraction]:
    """Coefficient of v[n - o] in v_n - sum_d w_d (h^d *_d v)_n, keyed by offset o.

    Zero coefficients are omitted.
    """
    out = {}
    for offset, ts in _expansion_terms(scheme).items():
        c = sum(ts, Fraction(0))
        if c != 0:
            out[offset] = c
    return out


def _tabulated_labels(scheme: SchemeSpec) -> dict[tuple[int, int], str]:
    # Single-contribution entries keep the unreduced product w * h_k, which is
    # how extended matrices are usually tabulated (e.g. 7/16 * 4/3 -> 28/48).
    labels = {(0, 0): "1"}
    contributions: dict[tuple[int, int], list[tuple[Fraction, Fraction]]] = defaultdict(list)
    for e in scheme.entries:
        for k, hk in enumerate(e.filter.taps, start=1):
            if hk != 0:
                contributions[(k * e.direction.di, k * e.direction.dj)].append((e.weight, hk))
    for offset, pairs in contributions.items():
        if offset == (0, 0):
            continue
        if len(pairs) == 1:
            w, hk = pairs[0]
            num = -w.numerator * hk.numerator
            den = w.denominator * hk.denominator
            labels[offset] = str(num) if den == 1 else f"{num}/{den}"
        else:
            total = -sum((w * hk for w, hk in pairs), Fraction(0))
            if total != 0:
                labels[offset] = str(total)
    return labels


def format_extended(scheme: SchemeSpec) -> str:
    """Render the extended coefficient grid; rows are di, columns dj, origin in brackets."""
    labels = _tabulated_labels(scheme)
    rows = max(o[0] for o in labels)
    cmin = min(o[1] for o in labels)
    cmax = max(o[1] for o in labels)
    cells = []
    for i in range(rows + 1):
        row = []
        for j in range(cmin, cmax + 1):
            text = labels.get((i, j), "0")
            row.append(f"[{text}]" if (i, j) == (0, 0) else text)
        cells.append(row)
    width = max(len(c) for row in cells for c in row)
    header = f"# {scheme.name}: rows di=0..{rows}, columns dj={cmin}..{cmax}"
    return "\n".join([header] + [" ".join(c.rjust(width) for c in row) for row in cells])


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

# Entry order matters for floating-point reproducibility: fs1 lists its
# directions in the same order as the textbook Floyd-Steinberg update.
_FS = [(1, 0, "5/16"), (0, 1, "7/16"), (1, 1, "1/16"), (1, -1, "3/16")]

_SHIAU_FAN = [(0, 1, "8/16"), (1, 0, "4/16"), (1, -1, "2/16"), (1, -2, "1/16"), (1, -3, "1/16")]

_JJN = [
    (0, 1, "7/48"), (0, 2, "5/48"),
    (1, -2, "3/48"), (1, -1, "5/48"), (1, 0, "7/48"), (1, 1, "5/48"), (1, 2, "3/48"),
    (2, -2, "1/48"), (2, -1, "3/48"), (2, 0, "5/48"), (2, 1, "3/48"), (2, 2, "1/48"),
]  # fmt: skip


def _with_filter(entries, filt):
    return [(di, dj, w, filt) for di, dj, w in entries]


def builtin_schemes() -> dict[str, SchemeSpec]:
    return {
        "fs1": make_scheme("fs1", _FS, 1, "Floyd-Steinberg"),
        "shiau-fan": make_scheme("shiau-fan", _SHIAU_FAN, 1, "Shiau-Fan"),
        "jjn": make_scheme("jjn", _JJN, 1, "Jarvis-Judice-Ninke"),
        "a23": make_scheme(
            "a23", [(0, 1, "1/2", H2), (1, 0, "1/2", H3)], 2, "two-direction average, filters h2/h3"
        ),
        "a33": make_scheme(
            "a33", [(0, 1, "1/2", H3), (1, 0, "1/2", H3)], 2, "two-direction average, filters h3/h3"
        ),
        "fs2-33": make_scheme("fs2-33", _with_filter(_FS, H3), 2, "second-order Floyd-Steinberg, all h3"),
        "shiau-fan2-33": make_scheme(
            "shiau-fan2-33", _with_filter(_SHIAU_FAN, H3), 2, "second-order Shiau-Fan, all h3"
        ),
        "jjn2-33": make_scheme("jjn2-33", _with_filter(_JJN, H3), 2, "second-order JJN, all h3"),
    }


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def scheme_from_dict(doc: dict) -> SchemeSpec:
    try:
        name = str(doc["name"])
        order = int(doc.get("order", 1))
        entries = []
        for e in doc["entries"]:
            taps = e.get("taps", ["1"])
            entries.append((int(e["di"]), int(e["dj"]), _frac(e["weight"]), FeedbackFilter(taps)))
    except (KeyError, TypeError) as exc:
        raise SchemeError(f"malformed scheme document: {exc}") from None
    return make_scheme(name, entries, order)


def scheme_to_dict(scheme: SchemeSpec) -> dict:
    return {
        "name": scheme.name,
        "order": scheme.order,
        "entries": [
            {
                "di": e.direction.di,
                "dj": e.direction.dj,
                "weight": str(e.weight),
                "taps": [str(t) for t in e.filter.taps],
            }
            for e in scheme.entries
        ],
    }


def load_scheme_json(path: Union[str, Path]) -> SchemeSpec:
    return scheme_from_dict(json.loads(Path(path).read_text()))


def resolve_scheme(name_or_path: str) -> SchemeSpec:
    """Look up a builtin scheme by name, or load a scheme JSON file."""
    catalog = builtin_schemes()
    if name_or_path in catalog:
        return catalog[name_or_path]
    path = Path(name_or_path)
    if path.suffix == ".json" and path.is_file():
        return load_scheme_json(path)
    raise KeyError(
        f"unknown scheme {name_or_path!r}; builtin schemes: {', '.join(sorted(catalog))}"
    )
