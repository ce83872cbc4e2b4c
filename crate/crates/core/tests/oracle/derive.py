"""Independent brute-force evaluations whose outputs are frozen in the Rust tests.

Run with `python3 derive.py`; it only needs the standard library.
Signals are piecewise constant: the value at t is that of the last sample at
or before t, so sup/inf over a window are attained on the window ends and the
samples inside it.
"""

import math


def value(times, xs, t):
    i = max(j for j, s in enumerate(times) if s <= t + 1e-12)
    return xs[i]


def window_points(times, lo, hi):
    return [lo] + [s for s in times if lo < s < hi] + [hi]


def until_5_samples():
    times = [0.0, 1.0, 2.0, 3.0, 4.0]
    x = [1.0, 2.0, -1.0, 3.0, 0.5]
    y = [-2.0, -1.0, 0.5, 2.0, -3.0]
    horizon = times[-1]
    out = []
    for t in times:
        lo, hi = min(t + 0.0, horizon), min(t + 4.0, horizon)
        best = -math.inf
        # every pair (t', t'') with t <= t'' < t' over the grid and window ends
        for tp in window_points(times, lo, hi):
            inner = [value(times, x, s) for s in [t] + [s for s in times if t < s < tp] if s < tp]
            left = min(inner) if inner else math.inf
            best = max(best, min(value(times, y, tp), left))
        out.append(best)
    return out


def member_region():
    # speed is 60 except 80 on [20, 25]; RPM stays at 3000; 0.1 s sampling
    times = [i / 10 for i in range(301)]
    speed = [80.0 if 20.0 <= t <= 25.0 else 60.0 for t in times]
    rpm = [3000.0] * len(times)
    horizon = 30.0
    delta = max(0.1, 30.0 / 100)
    n = 1000
    signs = []
    for i in range(n):
        u = delta + (i / (n - 1)) * (horizon - 2 * delta)
        first = max(value(times, speed, p) - 70.0 for p in window_points(times, 0.0, u))
        second = max(value(times, rpm, p) - 3800.0 for p in window_points(times, u, horizon))
        signs.append(max(first, second) < 0)
    negative = [i for i, s in enumerate(signs) if s]
    return delta, len(negative), negative[0], negative[-1], all(signs[: negative[-1] + 1])


if __name__ == "__main__":
    print("until robustness per sample:", until_5_samples())
    delta, count, first, last, contiguous = member_region()
    print(f"delta={delta} negative_count={count} first={first} last={last} contiguous={contiguous}")
    print(f"last negative u = {delta + last / 999 * (30 - 2 * delta)!r}")
