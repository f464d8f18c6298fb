"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import random
import timeit

from voipstego import _kernels_py

try:
    from voipstego import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases(rng):
    header = rng.randbytes(20)
    payload = rng.randbytes(160)
    bits = tuple(rng.getrandbits(1) for _ in range(64))
    digest = rng.randbytes(32)
    indices = tuple(rng.sample(range(256), 32))
    return {
        "ones_complement_checksum(20B)": lambda k: k.ones_complement_checksum(header),
        "ones_complement_checksum(1500B)": lambda k, d=rng.randbytes(1500): k.ones_complement_checksum(d),
        "lsb_embed(64 bits)": lambda k: k.lsb_embed(payload, bits),
        "lsb_extract(64 bits)": lambda k: k.lsb_extract(payload, 64),
        "gather_bits(32 of 256)": lambda k: k.gather_bits(digest, indices),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20_000)
    args = ap.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    if _kernels_c is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':34}" + "".join(f"{name:>12}" for name, _ in backends) + ("     speedup" if _kernels_c else ""))
    for label, fn in cases(random.Random(0)).items():
        times = []
        for _, mod in backends:
            t = min(timeit.repeat(lambda: fn(mod), number=args.repeat, repeat=3)) / args.repeat
            times.append(t)
        row = f"{label:34}" + "".join(f"{t * 1e6:10.2f}us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
