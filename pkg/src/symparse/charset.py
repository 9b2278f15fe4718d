"""Byte sets as 256-bit integer masks, plus their textual renderings."""
from __future__ import annotations

FULL = (1 << 256) - 1
NON_NUL = FULL & ~1


def mask_of(values):
    m = 0
    for v in values:
        m |= 1 << v
    return m


def mask_range(lo, hi):
    """Mask for the inclusive range lo..hi."""
    if hi < lo:
        return 0
    return ((1 << (hi - lo + 1)) - 1) << lo


def members(mask):
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def popcount(mask):
    return bin(mask).count("1")


def lowest(mask):
    return (mask & -mask).bit_length() - 1


def ranges(mask):
    """Maximal runs of members as (lo, hi) pairs."""
    out = []
    vals = members(mask)
    if not vals:
        return out
    lo = prev = vals[0]
    for v in vals[1:]:
        if v != prev + 1:
            out.append((lo, prev))
            lo = v
        prev = v
    out.append((lo, prev))
    return out


def hex_ranges(mask):
    """Compact hex form used in trace dumps, e.g. ``30-39,5b``."""
    parts = []
    for lo, hi in ranges(mask):
        parts.append(f"{lo:02x}" if lo == hi else f"{lo:02x}-{hi:02x}")
    return ",".join(parts)


def parse_hex_ranges(text):
    m = 0
    if not text:
        return m
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            m |= mask_range(int(lo, 16), int(hi, 16))
        else:
            m |= 1 << int(part, 16)
    return m


_CLASS_SPECIAL = set(b"]\\-^/[")


def _class_char(v):
    if 0x21 <= v <= 0x7e:
        c = chr(v)
        return "\\" + c if v in _CLASS_SPECIAL else c
    return f"\\x{v:02x}"


def class_text(mask):
    """Render a byte set as a ``/[...]/`` character class."""
    body = []
    for lo, hi in ranges(mask):
        if lo == hi:
            body.append(_class_char(lo))
        elif hi == lo + 1:
            body.append(_class_char(lo) + _class_char(hi))
        else:
            body.append(f"{_class_char(lo)}-{_class_char(hi)}")
    return "/[" + "".join(body) + "]/"


def literal_text(data):
    """Quote a byte string in single quotes with escapes."""
    out = []
    for v in data:
        if v == 0x27:
            out.append("\\'")
        elif v == 0x5c:
            out.append("\\\\")
        elif 0x20 <= v <= 0x7e:
            out.append(chr(v))
        elif v == 10:
            out.append("\\n")
        elif v == 9:
            out.append("\\t")
        else:
            out.append(f"\\x{v:02x}")
    return "'" + "".join(out) + "'"


def render(mask):
    """Literal when singleton, character class otherwise."""
    if mask and mask & (mask - 1) == 0:
        return literal_text(bytes([lowest(mask)]))
    return class_text(mask)
