"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both backends; outputs are
checked for agreement before timings are reported.
"""

import argparse
import timeit

import numpy as np

from tamatrack import _backend


def cases(rng):
    yield "lsap 8x8", "lsap_square", (np.ascontiguousarray(rng.random((8, 8))),)
    yield "lsap 64x64", "lsap_square", (np.ascontiguousarray(rng.random((64, 64))),)
    hid, n_in = 128, 152
    weights = np.ascontiguousarray(rng.normal(0, 0.1, (4 * hid, hid + n_in)))
    seq = np.ascontiguousarray(rng.normal(0, 1, (15, n_in)))
    yield "lstm 15 cells, H=128", "lstm_sequence", (weights, np.zeros(4 * hid), seq, np.zeros(hid), np.zeros(hid))
    boxes = lambda n: np.ascontiguousarray(np.column_stack([rng.uniform(0, 600, (n, 2)), rng.uniform(10, 100, (n, 2))]))
    yield "iou 50x50", "iou_matrix", (boxes(50), boxes(50))


def agree(a, b):
    if isinstance(a, tuple):
        return all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(a, b))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=0, atol=1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}" + "".join(f"{b:>14}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, name, inputs in cases(rng):
        outs, times = [], []
        for b in backends:
            fn = getattr(_backend.get(b), name)
            outs.append(fn(*inputs))
            number = 20
            best = min(timeit.repeat(lambda: fn(*inputs), number=number, repeat=args.repeat)) / number
            times.append(best)
        if len(outs) > 1 and not agree(outs[0], outs[1]):
            raise SystemExit(f"{label}: backends disagree")
        row = f"{label:<24}" + "".join(f"{t * 1e6:>12.1f}us" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
