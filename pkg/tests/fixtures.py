"""Hand-built instances and allocations shared by the test modules."""
import random
from fractions import Fraction

from efxtypes.core import Allocation, Instance


def make(rows, sizes, bundles, pool):
    inst = Instance(rows, sizes)
    X = Allocation(inst, [frozenset(b) for b in bundles], frozenset(pool))
    X.validate()
    return inst, X


def random_instance(rng, k_range=(1, 4), max_size=4, max_n=12, m_range=(1, 16), max_value=20):
    k = rng.randint(*k_range)
    while True:
        sizes = [rng.randint(1, max_size) for _ in range(k)]
        if sum(sizes) <= max_n:
            break
    m = rng.randint(*m_range)
    rows = [[rng.randint(0, max_value) for _ in range(m)] for _ in range(k)]
    return Instance(rows, sizes)


def four_types_corpus(seed=20240601, count=500):
    rng = random.Random(seed)
    return [random_instance(rng) for _ in range(count)]


def charity_corpus(seed=7, count=300):
    rng = random.Random(seed)
    eps_choices = [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)]
    out = []
    for _ in range(count):
        k = rng.randint(1, 5)
        while True:
            sizes = [rng.randint(1, 4) for _ in range(k)]
            if sum(sizes) <= 15:
                break
        n = sum(sizes)
        m = rng.randint(n, 25)
        rows = [[rng.randint(0, 20) for _ in range(m)] for _ in range(k)]
        out.append((Instance(rows, sizes), rng.choice(eps_choices)))
    return out


# ---------------------------------------------------------------------------
# loop-exit states with critical goods
#
# Groups A, B, C hold one good each (worth 10 to them) and each has one
# critical pool good worth 6.  Group D's leading agent holds two goods worth
# 2 each, envies every singleton holder (7 > 3/2 * 4) and is the only source.

def three_critical(d2=(2, 2), claims=(6, 6, 6)):
    """``d2``: D's second agent's two goods (None for a one-agent group D)."""
    ca, cb, cc = claims
    x, y = d2 if d2 is not None else (0, 0)
    rows = [
        [10, 0, 0, 0, 0, 0, 0, ca, 0, 0],
        [0, 10, 0, 0, 0, 0, 0, 0, cb, 0],
        [0, 0, 10, 0, 0, 0, 0, 0, 0, cc],
        [7, 7, 7, 2, 2, x, y, 1, 1, 1],
    ]
    if d2 is None:
        return make(rows, [1, 1, 1, 1], [{0}, {1}, {2}, {3, 4}], {5, 6, 7, 8, 9})
    return make(rows, [1, 1, 1, 2], [{0}, {1}, {2}, {3, 4}, {5, 6}], {7, 8, 9})


def two_critical_two_sources():
    """Two sources (groups D and E), each envying one singleton claimant."""
    rows = [
        [10, 0, 0, 0, 0, 0, 6, 0],
        [0, 10, 0, 0, 0, 0, 0, 6],
        [7, 0, 2, 2, 0, 0, 1, 1],
        [0, 7, 0, 0, 2, 2, 1, 1],
    ]
    return make(rows, [1, 1, 1, 1], [{0}, {1}, {2, 3}, {4, 5}], {6, 7})


# ---------------------------------------------------------------------------
# pseudo-cycle step
#
# Leading path d1 -> c -> b -> a.  Agent a does not envy d2's bundle {5, 6}
# but prefers {5, 7} (one good of it plus pool good 7) to her own good.

def pseudo_path():
    rows = [
        [10, 0, 0, 0, 0, 5, 0, 6, 0],   # a
        [12, 10, 0, 0, 0, 0, 0, 0, 0],  # b envies a
        [0, 12, 10, 0, 0, 0, 0, 0, 0],  # c envies b
        [0, 0, 7, 2, 2, 2, 2, 1, 1],    # d1 envies c
    ]
    return make(rows, [1, 1, 1, 2], [{0}, {1}, {2}, {3, 4}, {5, 6}], {7, 8})


def pseudo_path_envied():
    """Same shape, but b envies d2's bundle outright, so S9_3 fires."""
    rows = [
        [10, 0, 0, 0, 0, 0, 0, 0, 0],
        [12, 10, 0, 0, 0, 7, 4, 0, 0],
        [0, 12, 10, 0, 0, 0, 0, 0, 0],
        [0, 0, 7, 2, 2, 2, 3, 1, 1],    # d2 no longer counts as envying c
    ]
    return make(rows, [1, 1, 1, 2], [{0}, {1}, {2}, {3, 4}, {5, 6}], {7, 8})


# ---------------------------------------------------------------------------
# 13 agents whose enhanced-graph cycle resolution does not shrink the graph
#
# Agent order: s, i1, i2, i3, j1..j4, k1..k5 (one type each, 20 goods).

S, I1, I2, I3 = 0, 1, 2, 3
J = [4, 5, 6, 7]
K = [8, 9, 10, 11, 12]


def thirteen_agents():
    m = 20
    bundles = [{0, 1}, {2}, {3, 4}, {19}, {15}, {16}, {17}, {18},
               {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}]
    rows = [[0] * m for _ in range(13)]
    rows[S][0] = rows[S][1] = 1
    rows[S][2] = 4
    rows[I1][2], rows[I1][3], rows[I1][4] = 6, 5, 5
    rows[I2][3] = rows[I2][4] = 1
    rows[I2][19] = 4
    rows[I3][19], rows[I3][0], rows[I3][1] = 6, 2, 3
    for a in K:
        for g in bundles[a]:
            rows[I3][g] = 3
            rows[a][g] = 1
    for a in J:
        (g,) = bundles[a]
        rows[a][g] = 6
        rows[a][3], rows[a][4] = 2, 3
    return make(rows, [1] * 13, bundles, set())


# random 4-type instances on which the pseudo-cycle step S9_3 fires naturally
NATURAL_S9_3 = [
    ([[18, 17, 10, 0, 19, 20, 13, 1, 2, 8, 0, 4, 4, 20, 7],
      [20, 19, 13, 3, 19, 16, 8, 2, 3, 14, 0, 1, 0, 21, 3],
      [19, 15, 10, 5, 19, 17, 10, 3, 5, 12, 4, 1, 3, 21, 6],
      [20, 21, 10, 3, 20, 17, 11, 5, 1, 12, 3, 4, 4, 17, 8]], [2, 4, 3, 1]),
    ([[0, 14, 5, 11, 8, 2, 16, 8, 15, 2, 12, 17, 15, 17],
      [4, 14, 2, 14, 8, 0, 18, 9, 10, 2, 14, 17, 18, 18],
      [1, 11, 3, 15, 13, 0, 13, 13, 12, 0, 13, 19, 20, 14],
      [3, 14, 0, 14, 8, 5, 15, 14, 15, 3, 9, 16, 18, 13]], [3, 3, 1, 4]),
    ([[0, 14, 18, 14, 15, 12, 12, 0, 13, 7, 3, 12, 5, 11, 15, 14],
      [0, 15, 17, 13, 15, 15, 17, 1, 13, 6, 0, 11, 3, 10, 16, 16],
      [2, 11, 15, 13, 18, 10, 12, 0, 12, 10, 4, 14, 5, 13, 13, 18],
      [6, 14, 13, 13, 16, 14, 12, 0, 10, 7, 2, 12, 1, 11, 19, 14]], [3, 2, 3, 4]),
]


def natural_pseudo_instances():
    return [Instance(rows, sizes) for rows, sizes in NATURAL_S9_3]
