"""Hand-rolled FITS encoder used as an independent oracle in tests."""
import struct

FMT = {8: "B", 16: "h", 32: "i", -32: "f", -64: "d"}


def card(key, value=None):
    if value is None:
        return key.ljust(80).encode()
    if value is True:
        text = "T".rjust(20)
    elif isinstance(value, str):
        text = ("'" + value.ljust(8) + "'").ljust(20)
    else:
        text = str(value).rjust(20)
    return (key.ljust(8) + "= " + text).ljust(80).encode()


def pad(b, fill):
    return b + fill * (-len(b) % 2880)


def encode(rows, bitpix, extra=()):
    """rows: list of lists of stored values."""
    ny, nx = len(rows), len(rows[0])
    hdr = [card("SIMPLE", True), card("BITPIX", bitpix), card("NAXIS", 2),
           card("NAXIS1", nx), card("NAXIS2", ny)]
    hdr += [card(k, v) for k, v in extra]
    hdr.append(card("END"))
    flat = [v for r in rows for v in r]
    data = struct.pack(">" + FMT[bitpix] * len(flat), *flat)
    return pad(b"".join(hdr), b" ") + pad(data, b"\x00")
