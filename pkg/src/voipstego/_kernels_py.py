"""Pure-Python implementations of the bit-level kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and results; ``voipstego.kernels`` picks one at import time.
"""


def ones_complement_checksum(data):
    if len(data) % 2:
        data = bytes(data) + b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def lsb_embed(payload, bits):
    out = bytearray(payload)
    for i, b in enumerate(bits):
        out[i] = (out[i] & 0xFE) | (b & 1)
    return bytes(out)


def lsb_extract(payload, count):
    if count > len(payload):
        raise IndexError("count exceeds payload length")
    return tuple(payload[i] & 1 for i in range(count))


def gather_bits(digest, indices):
    """Bit ``j`` of the result is digest bit ``indices[j]`` (MSB-first numbering)."""
    nbits = len(digest) * 8
    value = 0
    for idx in indices:
        if not 0 <= idx < nbits:
            raise IndexError("bit index out of range")
        value = (value << 1) | ((digest[idx >> 3] >> (7 - (idx & 7))) & 1)
    return value

