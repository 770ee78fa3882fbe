"""Reader/writer for the single-HDU, two-dimensional FITS subset.

Layout: 2880-byte blocks, 80-byte ASCII header cards ending in ``END``,
then big-endian samples in row-major order (NAXIS1 is the fast axis).
Physical values follow ``BSCALE * stored + BZERO``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

BLOCK = 2880
CARD = 80

DTYPES = {8: ">u1", 16: ">i2", 32: ">i4", -32: ">f4", -64: ">f8"}
STRUCTURAL = {"SIMPLE", "BITPIX", "NAXIS", "NAXIS1", "NAXIS2", "BSCALE", "BZERO", "END", "EXTEND"}
COMMENTARY = {"COMMENT", "HISTORY", ""}

Value = Union[bool, int, float, str, None]


class FitsError(ValueError):
    pass


class NotFits(FitsError):
    pass


class UnsupportedBitpix(FitsError):
    pass


class UnsupportedNaxis(FitsError):
    pass


class UnsupportedBlank(FitsError):
    pass


class Truncated(FitsError):
    pass


class BadBlock(FitsError):
    pass


class MalformedHeader(FitsError):
    pass


class RangeOverflow(FitsError):
    pass


@dataclass(frozen=True)
class Card:
    keyword: str
    value: Value = None
    comment: Optional[str] = None

    @property
    def is_commentary(self) -> bool:
        return self.keyword in COMMENTARY


_KEYWORD_RE = re.compile(r"^[A-Z0-9_-]{0,8}$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([EDed][+-]?\d+)?$")


@dataclass
class FitsHeader:
    cards: list[Card] = field(default_factory=list)

    def get(self, keyword: str) -> Value:
        return header_get(self, keyword)

    def __contains__(self, keyword: str) -> bool:
        return any(c.keyword == keyword for c in self.cards)


def header_get(header: FitsHeader, keyword: str) -> Value:
    """Value of the first card named ``keyword``, or None."""
    for card in header.cards:
        if card.keyword == keyword:
            return card.value
    return None


@dataclass
class FitsImage:
    header: FitsHeader
    pixels: np.ndarray
    bscale: float = 1.0
    bzero: float = 0.0
    has_extensions: bool = False

    @classmethod
    def from_array(cls, pixels, cards=(), bscale: float = 1.0, bzero: float = 0.0) -> "FitsImage":
        pixels = np.array(pixels, dtype=np.float64)
        if pixels.ndim != 2 or 0 in pixels.shape:
            raise ValueError("pixels must be a non-empty 2-D array")
        rows, cols = pixels.shape
        base = [Card("SIMPLE", True), Card("BITPIX", -64), Card("NAXIS", 2),
                Card("NAXIS1", cols), Card("NAXIS2", rows)]
        return cls(FitsHeader(base + list(cards)), pixels, float(bscale), float(bzero))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


# card parsing


def _parse_value(field_text: str, lineno: int) -> tuple[Value, Optional[str]]:
    text = field_text.lstrip(" ")
    if text.startswith("'"):
        i = 1
        out = []
        while True:
            j = text.find("'", i)
            if j < 0:
                raise MalformedHeader(f"card {lineno}: unterminated string")
            out.append(text[i:j])
            if text[j + 1:j + 2] == "'":
                out.append("'")
                i = j + 2
                continue
            rest = text[j + 1:]
            break
        value: Value = "".join(out).rstrip(" ")
    else:
        token, slash, rest = text.partition("/")
        rest = slash + rest
        token = token.strip()
        if token == "":
            value = None
        elif token == "T":
            value = True
        elif token == "F":
            value = False
        elif _INT_RE.match(token):
            value = int(token)
        elif _FLOAT_RE.match(token):
            value = float(token.replace("D", "E").replace("d", "e"))
        else:
            raise MalformedHeader(f"card {lineno}: cannot parse value {token!r}")
    rest = rest.strip()
    comment = None
    if rest:
        if not rest.startswith("/"):
            raise MalformedHeader(f"card {lineno}: junk after value: {rest!r}")
        comment = rest[1:].strip() or None
    return value, comment


def parse_card(raw: bytes, lineno: int = 0) -> Card:
    if any(b < 0x20 or b > 0x7E for b in raw):
        raise MalformedHeader(f"card {lineno}: non-ASCII or control bytes")
    text = raw.decode("ascii")
    keyword = text[:8].rstrip(" ")
    if not _KEYWORD_RE.match(keyword) or " " in keyword:
        raise MalformedHeader(f"card {lineno}: bad keyword {text[:8]!r}")
    if keyword in COMMENTARY or text[8:10] != "= ":
        return Card(keyword, text[8:].rstrip(" ") or None)
    value, comment = _parse_value(text[10:], lineno)
    return Card(keyword, value, comment)


# card formatting


def _format_real(v: float) -> str:
    if not np.isfinite(v):
        raise FitsError(f"non-finite header value {v!r}")
    s = repr(float(v)).upper()
    mant, e, exp = s.partition("E")
    if "." not in mant:
        mant += ".0"
    return mant + (("E" + exp) if e else "")


def _format_value(value: Value) -> str:
    if isinstance(value, bool):
        return ("T" if value else "F").rjust(20)
    if isinstance(value, (int, np.integer)):
        return str(int(value)).rjust(20)
    if isinstance(value, (float, np.floating)):
        return _format_real(float(value)).rjust(20)
    if isinstance(value, str):
        if not value.isascii():
            raise FitsError("header text must be ASCII")
        quoted = "'" + value.replace("'", "''").ljust(8) + "'"
        return quoted.ljust(20)
    if value is None:
        return " " * 20
    raise FitsError(f"unsupported header value type {type(value).__name__}")


def format_card(card: Card) -> bytes:
    keyword = card.keyword
    if not _KEYWORD_RE.match(keyword):
        raise FitsError(f"bad keyword {keyword!r}")
    if card.is_commentary:
        text = keyword.ljust(8) + (str(card.value) if card.value is not None else "")
    else:
        text = keyword.ljust(8) + "= " + _format_value(card.value)
        if card.comment:
            text += " / " + card.comment
    if len(text) > CARD:
        raise FitsError(f"card for {keyword} exceeds 80 characters")
    if not text.isascii():
        raise FitsError("header text must be ASCII")
    return text.ljust(CARD).encode("ascii")


def _pad(data: bytes, fill: bytes) -> bytes:
    rem = len(data) % BLOCK
    return data if rem == 0 else data + fill * (BLOCK - rem)


# read / write


def read_fits(data: bytes) -> FitsImage:
    """Decode the primary HDU; raises a FitsError subclass on any defect."""
    data = bytes(data)
    if len(data) % BLOCK:
        raise BadBlock(f"length {len(data)} is not a multiple of {BLOCK}")
    if not data:
        raise NotFits("empty input")

    cards: list[Card] = []
    offset = 0
    while True:
        if offset + CARD > len(data):
            raise Truncated("header has no END card")
        raw = data[offset:offset + CARD]
        offset += CARD
        if raw[:8] == b"END     ":
            if raw[8:].strip(b" "):
                raise MalformedHeader("END card carries text")
            break
        if not cards:
            if raw[:8] != b"SIMPLE  ":
                raise NotFits("first card is not SIMPLE")
        cards.append(parse_card(raw, len(cards) + 1))
    header_len = -(-offset // BLOCK) * BLOCK

    header = FitsHeader(cards)
    if header_get(header, "SIMPLE") is not True:
        raise NotFits("SIMPLE is not T")
    bitpix = header_get(header, "BITPIX")
    if bitpix not in DTYPES or isinstance(bitpix, bool):
        raise UnsupportedBitpix(f"BITPIX={bitpix!r}")
    naxis = header_get(header, "NAXIS")
    if naxis != 2 or isinstance(naxis, bool):
        raise UnsupportedNaxis(f"NAXIS={naxis!r}")
    cols, rows = header_get(header, "NAXIS1"), header_get(header, "NAXIS2")
    for name, n in (("NAXIS1", cols), ("NAXIS2", rows)):
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise MalformedHeader(f"{name}={n!r}")
    bscale = header_get(header, "BSCALE")
    bzero = header_get(header, "BZERO")
    bscale = 1.0 if bscale is None else bscale
    bzero = 0.0 if bzero is None else bzero
    for name, v in (("BSCALE", bscale), ("BZERO", bzero)):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedHeader(f"{name}={v!r}")
    if bitpix > 0 and "BLANK" in header:
        raise UnsupportedBlank("BLANK is not supported for integer images")

    dtype = np.dtype(DTYPES[bitpix])
    nbytes = rows * cols * dtype.itemsize
    if header_len + nbytes > len(data):
        raise Truncated(f"data needs {nbytes} bytes, {len(data) - header_len} present")
    stored = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=header_len)
    stored = stored.reshape(rows, cols)
    if bscale == 1 and bzero == 0:
        pixels = stored.astype(np.float64)
    else:
        pixels = float(bscale) * stored.astype(np.float64) + float(bzero)
    data_end = header_len + -(-nbytes // BLOCK) * BLOCK
    return FitsImage(header, pixels, float(bscale), float(bzero),
                     has_extensions=len(data) > data_end)


_INT_LIMITS = {8: (0, 255), 16: (-2**15, 2**15 - 1), 32: (-2**31, 2**31 - 1)}


def _to_stored(image: FitsImage, bitpix: int) -> np.ndarray:
    phys = np.asarray(image.pixels, dtype=np.float64)
    scaled = phys if image.bscale == 1 and image.bzero == 0 else (phys - image.bzero) / image.bscale
    if bitpix > 0:
        if not np.all(np.isfinite(scaled)):
            raise RangeOverflow("non-finite value in an integer image")
        stored = np.rint(scaled)
        lo, hi = _INT_LIMITS[bitpix]
        if stored.size and (stored.min() < lo or stored.max() > hi):
            raise RangeOverflow(f"values outside [{lo}, {hi}] for BITPIX={bitpix}")
        return stored.astype(DTYPES[bitpix])
    with np.errstate(over="ignore"):
        stored = scaled.astype(DTYPES[bitpix])
    if np.any(np.isinf(stored) & np.isfinite(scaled)):
        raise RangeOverflow(f"values overflow BITPIX={bitpix}")
    return stored


def write_fits(image: FitsImage, target_bitpix: int) -> bytes:
    if target_bitpix not in DTYPES:
        raise UnsupportedBitpix(f"BITPIX={target_bitpix!r}")
    rows, cols = image.pixels.shape
    stored = _to_stored(image, target_bitpix)

    cards = [Card("SIMPLE", True, "conforms to FITS standard"), Card("BITPIX", target_bitpix),
             Card("NAXIS", 2), Card("NAXIS1", cols), Card("NAXIS2", rows)]
    if image.bscale != 1.0:
        cards.append(Card("BSCALE", float(image.bscale)))
    if image.bzero != 0.0:
        cards.append(Card("BZERO", float(image.bzero)))
    cards += [c for c in image.header.cards
              if c.keyword not in STRUCTURAL and c.keyword != "BLANK"]
    header = b"".join(format_card(c) for c in cards) + b"END".ljust(CARD)
    return _pad(header, b" ") + _pad(stored.tobytes(), b"\x00")


def read_fits_file(path) -> FitsImage:
    with open(path, "rb") as fh:
        return read_fits(fh.read())


def write_fits_file(path, image: FitsImage, target_bitpix: int) -> None:
    with open(path, "wb") as fh:
        fh.write(write_fits(image, target_bitpix))
