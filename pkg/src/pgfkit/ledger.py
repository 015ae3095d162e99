"""Named record of the coarse-geometry constants used by the experiments.

Every field is either CONFIGURED (chosen by the user) or ESTIMATED (measured
on a finite sample, with a description of that sample).  Derived fields are
recomputed whenever their inputs change.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Optional, Tuple, Union

Number = Union[int, Fraction, float]

CONFIGURED = "CONFIGURED"
ESTIMATED = "ESTIMATED"

FIELDS = (
    "delta",
    "bgim_M",
    "power_N",
    "thin_C0",
    "qi_K",
    "qi_C",
    "stability_R0",
    "local_P0",
    "edge_C1",
    "halfedge_C2",
    "proj_C3",
    "bound_M1",
    "A0",
    "A1",
    "A2",
    "estimator_K",
    "estimator_C",
    "xi",
    "k_R",
)

# field -> (inputs, formula)
DERIVED = {
    "thin_C0": (("power_N", "delta"), lambda N, d: (N + 1) * d + 2),
    "local_P0": (("qi_K", "qi_C", "stability_R0"), lambda K, C, R: 2 * K * (C + 2 * R) + K * K),
    "proj_C3": (
        ("local_P0", "edge_C1", "halfedge_C2", "xi", "bgim_M", "k_R"),
        lambda P, c1, c2, xi, M, k: P * c1 + 2 * c2 + xi * (2 * M + k + 2),
    ),
}


@dataclass(frozen=True)
class Entry:
    value: Number
    kind: str
    note: str = ""

    def __post_init__(self):
        if self.kind not in (CONFIGURED, ESTIMATED):
            raise ValueError(f"unknown entry kind {self.kind!r}")
        if self.kind == ESTIMATED and not self.note:
            raise ValueError("estimated entries need a sample description")


def _exact(x: Number) -> Number:
    if isinstance(x, bool):
        raise TypeError("booleans are not ledger values")
    if isinstance(x, float) and x.is_integer():
        return int(x)
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def _format(x: Number) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(x)


def _parse_number(text: str) -> Number:
    text = text.strip()
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    if re.fullmatch(r"-?\d+/\d+", text):
        return Fraction(text)
    val = float(text)
    if not math.isfinite(val):
        raise ValueError(f"non-finite ledger value {text!r}")
    return val


class ConstantsLedger:
    def __init__(self):
        self._entries: Dict[str, Entry] = {}

    def configure(self, name: str, value: Number) -> "ConstantsLedger":
        return self._set(name, Entry(_exact(value), CONFIGURED))

    def estimate(self, name: str, value: Number, sample: str) -> "ConstantsLedger":
        return self._set(name, Entry(_exact(value), ESTIMATED, sample))

    def _set(self, name: str, entry: Entry) -> "ConstantsLedger":
        if name not in FIELDS:
            raise KeyError(f"unknown ledger field {name!r}")
        if name in DERIVED:
            raise ValueError(f"{name} is derived from other fields")
        self._entries[name] = entry
        self._rederive()
        return self

    def _rederive(self):
        for name, (inputs, formula) in DERIVED.items():
            if all(i in self._entries for i in inputs):
                vals = [self._entries[i].value for i in inputs]
                vals = [Fraction(v) if isinstance(v, int) else v for v in vals]
                kind = ESTIMATED if any(self._entries[i].kind == ESTIMATED for i in inputs) else CONFIGURED
                note = "from " + ", ".join(inputs)
                self._entries[name] = Entry(_exact(formula(*vals)), kind, note)
            else:
                self._entries.pop(name, None)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> Number:
        try:
            return self._entries[name].value
        except KeyError:
            raise KeyError(f"ledger field {name!r} is not set") from None

    def get(self, name: str, default=None):
        return self._entries[name].value if name in self._entries else default

    def entry(self, name: str) -> Entry:
        return self._entries[name]

    def items(self) -> Iterator[Tuple[str, Entry]]:
        for name in FIELDS:
            if name in self._entries:
                yield name, self._entries[name]

    def dumps(self) -> str:
        lines = []
        for name, e in self.items():
            tag = e.kind + (f": {e.note}" if e.note else "")
            lines.append(f"{name} = {_format(e.value)} # {tag}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def loads(cls, text: str) -> "ConstantsLedger":
        led = cls()
        for raw in text.splitlines():
            if not raw.strip():
                continue
            m = re.fullmatch(r"\s*(\w+)\s*=\s*([^#]+?)\s*#\s*(CONFIGURED|ESTIMATED)(?::\s*(.*))?\s*", raw)
            if not m:
                raise ValueError(f"malformed ledger line {raw!r}")
            name, value, kind, note = m.groups()
            if name in DERIVED:
                continue
            entry = Entry(_exact(_parse_number(value)), kind, note or "")
            if name not in FIELDS:
                raise KeyError(f"unknown ledger field {name!r}")
            led._entries[name] = entry
        led._rederive()
        return led

    def copy(self) -> "ConstantsLedger":
        out = ConstantsLedger()
        out._entries = dict(self._entries)
        return out


def default_ledger(delta: Optional[Number] = None) -> ConstantsLedger:
    """Configured values for a complexity-one surface plus the standard
    torus marking graph.  ``delta`` defaults to 1, the thin-triangle constant
    measured on Farey balls."""
    led = ConstantsLedger()
    led.configure("xi", 1)
    led.configure("k_R", 8)
    led.configure("A2", 4)
    if delta is None:
        led.configure("delta", 1)
    else:
        led.estimate("delta", delta, "thin triangles on a Farey ball")
    return led
