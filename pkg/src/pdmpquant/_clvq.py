import numpy as np
from numba import njit


@njit(cache=True)
def clvq_pass(nodes, offsets, counts, samples, sample_modes, a, b, p):
    """One competitive-learning sweep over ``samples``, in order.

    Nodes are sorted by mode, nodes of mode ``m`` occupying rows
    ``offsets[m]:offsets[m + 1]``.  The winner (lowest index among the
    closest, same mode only) moves toward the sample by ``a / (b + count)``.
    """
    n, q = samples.shape
    for t in range(n):
        m = sample_modes[t]
        lo = offsets[m]
        hi = offsets[m + 1]
        if hi <= lo:
            continue
        best = lo
        bd = np.inf
        for i in range(lo, hi):
            d = 0.0
            for j in range(q):
                diff = abs(samples[t, j] - nodes[i, j])
                if p == 2.0:
                    d += diff * diff
                elif p == 1.0:
                    d += diff
                else:
                    d += diff ** p
                if d >= bd:
                    break
            if d < bd:
                bd = d
                best = i
        rate = a / (b + counts[best])
        for j in range(q):
            nodes[best, j] += rate * (samples[t, j] - nodes[best, j])
        counts[best] += 1
