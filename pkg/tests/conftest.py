import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from voipstego import _kernels_py
from voipstego.covert_header import ALLOWED_CARRIERS, CarrierMap, CarrierSlot
from voipstego.packet_model import StreamParams, build_packet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

try:
    from voipstego import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


ALL_SLOTS = [
    CarrierSlot(layer, name, bit)
    for (layer, name), (_, bits) in ALLOWED_CARRIERS.items()
    for bit in sorted(bits)
]

u16 = st.integers(0, 0xFFFF)
u32 = st.integers(0, 0xFFFFFFFF)


@st.composite
def voice_packets(draw, max_payload=64):
    stream = StreamParams(
        src=draw(u32), dst=draw(u32), src_port=draw(u16), dst_port=draw(u16),
        ssrc=draw(u32), payload_type=draw(st.integers(0, 127)), ttl=draw(st.integers(1, 255)),
    )
    payload = draw(st.binary(min_size=0, max_size=max_payload))
    return build_packet(draw(u16), draw(u32), payload, stream)


@st.composite
def carrier_maps(draw):
    slots = draw(st.lists(st.sampled_from(ALL_SLOTS), min_size=6, max_size=6, unique=True))
    return CarrierMap(tuple(slots))


def random_packet(rng: random.Random, payload_len=None):
    stream = StreamParams(
        src=rng.getrandbits(32), dst=rng.getrandbits(32), src_port=rng.getrandbits(16),
        dst_port=rng.getrandbits(16), ssrc=rng.getrandbits(32), payload_type=rng.randrange(128),
        ttl=rng.randrange(1, 256),
    )
    n = rng.randrange(0, 61) if payload_len is None else payload_len
    return build_packet(rng.getrandbits(16), rng.getrandbits(32), rng.randbytes(n), stream)


def random_map(rng: random.Random) -> CarrierMap:
    return CarrierMap(tuple(rng.sample(ALL_SLOTS, 6)))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
