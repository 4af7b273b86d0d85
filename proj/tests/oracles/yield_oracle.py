"""Reference register yields on the Gaussian surrogate ensembles.

Independent of the C++ sampler: numpy's PCG64 drives the draws, the kernel
density draw and the crosstalk formula are written out here, and viability is
decided from the closest pair of each cluster. The printed table is frozen
into the acceptance suite. Run:

    python3 tests/oracles/yield_oracle.py
"""
import math
import pathlib

import numpy as np

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"
TRIALS = 1_000_000
CHUNK = 100_000
N_VALUES = (2, 3, 5, 9)
THRESHOLD = 0.01

GAMMA = 1000.0 / 12.0  # rad/us
TWO_PI_GHZ = 2.0 * math.pi * 1e3  # GHz -> rad/us


def msr():
    t = 0.6
    exposure = -math.log1p(-0.01)
    delta = TWO_PI_GHZ * 16.0
    omega = math.sqrt(2.0 * delta**2 * exposure / (GAMMA * t - 2.0 * exposure))
    return omega, t


def ssr():
    return GAMMA, 3.7


def crosstalk(omega, t, offset_ghz):
    d = TWO_PI_GHZ * offset_ghz
    return -np.expm1(-GAMMA * omega**2 * t / (2.0 * (omega**2 + d**2)))


def load(name):
    rows = [ln for ln in (DATA / f"{name}_surrogate.csv").read_text().splitlines() if ln and not ln.startswith("#")]
    return np.array([float(v) for v in rows[1:]])


def yields(points, preset, seed):
    omega, t = preset
    h = 1.06 * points.std(ddof=1) * len(points) ** -0.2
    rng = np.random.Generator(np.random.PCG64(seed))
    n_max = max(N_VALUES)
    ok = {n: 0 for n in N_VALUES}
    for _ in range(TRIALS // CHUNK):
        f = points[rng.integers(0, len(points), size=(CHUNK, n_max))] + h * rng.standard_normal((CHUNK, n_max))
        for n in N_VALUES:
            sub = np.sort(f[:, :n], axis=1)
            min_sep = np.diff(sub, axis=1).min(axis=1)
            ok[n] += int(np.count_nonzero(crosstalk(omega, t, min_sep) <= THRESHOLD))
    return ok


if __name__ == "__main__":
    print(f"# trials={TRIALS} threshold={THRESHOLD}")
    print("dataset,preset,n,successes")
    seed = 20240
    for dataset in ("scd", "pcd"):
        pts = load(dataset)
        for name, preset in (("msr", msr()), ("ssr", ssr())):
            seed += 1
            for n, k in yields(pts, preset, seed).items():
                print(f"{dataset},{name},{n},{k}")
