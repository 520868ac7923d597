import math

import pytest

from hfmdvrp.rng import Xoshiro256, derive_seed, splitmix64

GAMMA = 0x9E3779B97F4A7C15
M = (1 << 64) - 1


def test_splitmix64_reference_vector():
    # first three outputs of SplitMix64 started from state 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(GAMMA) == 0x6E789E6AA1B965F4
    assert splitmix64(2 * GAMMA & M) == 0x06C45D188009454F


def _reference_stream(seed, n):
    """xoshiro256** written out independently, state seeded by SplitMix64."""
    def sm(state):
        state = (state + GAMMA) & M
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        return state, z ^ (z >> 31)

    def rotl(x, k):
        return ((x << k) & M) | (x >> (64 - k))

    st = seed & M
    s = []
    for _ in range(4):
        st, v = sm(st)
        s.append(v)
    out = []
    for _ in range(n):
        out.append((rotl((s[1] * 5) & M, 7) * 9) & M)
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 5, M])
def test_xoshiro_matches_reference(seed):
    g = Xoshiro256(seed)
    assert [g.next_u64() for _ in range(64)] == _reference_stream(seed, 64)


def test_same_seed_same_stream():
    a, b = Xoshiro256(7), Xoshiro256(7)
    assert [a.random() for _ in range(10)] == [b.random() for _ in range(10)]


def test_derive_seed_streams_differ():
    seeds = {derive_seed(5, k) for k in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(5, 3) == derive_seed(5, 3)
    assert derive_seed(5, 3) != derive_seed(6, 3)


def test_integers_inclusive_and_roughly_uniform():
    g = Xoshiro256(3)
    counts = [0] * 6
    for _ in range(60000):
        v = g.integers(1, 6)
        counts[v - 1] += 1
    assert min(counts) > 9500 and max(counts) < 10500


def test_below_rejects_nonpositive():
    with pytest.raises(ValueError):
        Xoshiro256(0).below(0)


def test_random_in_unit_interval():
    g = Xoshiro256(11)
    xs = [g.random() for _ in range(10000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    assert abs(sum(xs) / len(xs) - 0.5) < 0.01


def test_normal_moments():
    g = Xoshiro256(99)
    xs = [g.normal(10.0, 3.0) for _ in range(40000)]
    mean = sum(xs) / len(xs)
    sd = math.sqrt(sum((x - mean) ** 2 for x in xs) / (len(xs) - 1))
    # standard error of the mean is 0.015
    assert abs(mean - 10.0) < 0.06
    assert abs(sd - 3.0) < 0.06
