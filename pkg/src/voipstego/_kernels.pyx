# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled bit-level kernels; see ``_kernels_py`` for the reference versions."""


def ones_complement_checksum(const unsigned char[:] data):
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t i
    cdef unsigned long long total = 0
    for i in range(0, n - 1, 2):
        total += (data[i] << 8) | data[i + 1]
    if n % 2:
        total += data[n - 1] << 8
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def lsb_embed(payload, bits):
    cdef bytearray out = bytearray(payload)
    cdef unsigned char[:] view = out
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t n = len(out)
    for b in bits:
        if i >= n:
            raise IndexError("more bits than payload bytes")
        view[i] = (view[i] & 0xFE) | (<int>b & 1)
        i += 1
    return bytes(out)


def lsb_extract(const unsigned char[:] payload, Py_ssize_t count):
    cdef Py_ssize_t i
    if count > payload.shape[0]:
        raise IndexError("count exceeds payload length")
    return tuple([payload[i] & 1 for i in range(count)])


def gather_bits(const unsigned char[:] digest, indices):
    cdef object value = 0
    cdef Py_ssize_t idx
    cdef Py_ssize_t n = digest.shape[0] * 8
    cdef unsigned long long acc = 0
    cdef int taken = 0
    for i in indices:
        idx = i
        if idx < 0 or idx >= n:
            raise IndexError("bit index out of range")
        acc = (acc << 1) | ((digest[idx >> 3] >> (7 - (idx & 7))) & 1)
        taken += 1
        if taken == 64:
            value = (value << 64) | acc
            acc = 0
            taken = 0
    if taken:
        value = (value << taken) | acc
    return value

