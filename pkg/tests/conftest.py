from __future__ import annotations

import random

import pytest
from gmpy2 import mpq

import birkforge as bf

LAMBDA = (mpq(2, 7), mpq(1))


def random_hamiltonian(rng: random.Random, order: int = 6,
                       max_terms: int = 12) -> bf.TruncatedSeries:
    """Quadratic part lambda = (2/7, 1) plus 1..max_terms random real
    monomials of degree 3..order.  No symmetry is imposed."""
    terms = {
        (1, 0, 1, 0): bf.GaussianRational(LAMBDA[0], 0),
        (0, 1, 0, 1): bf.GaussianRational(LAMBDA[1], 0),
    }
    want = rng.randint(1, max_terms)
    added = 0
    while added < want:
        degree = rng.randint(3, order)
        cuts = sorted(rng.randint(0, degree) for _ in range(3))
        key = (cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1],
               degree - cuts[2])
        if key in terms:
            continue
        num = rng.randint(-9, 9)
        if num == 0:
            continue
        terms[key] = bf.GaussianRational(mpq(num, rng.randint(1, 9)), 0)
        added += 1
    return bf.TruncatedSeries(order, terms)


@pytest.fixture(scope="session")
def freq27() -> bf.FrequencyVector:
    return bf.FrequencyVector(mpq(2, 7), mpq(1), 8)


@pytest.fixture(scope="session")
def stage_one() -> list[bf.LiouvilleStage]:
    return bf.build_liouville_stages("1/2", "2/1", 1)


@pytest.fixture(scope="session")
def forged_one(stage_one) -> bf.ForgeResult:
    return bf.forge(stage_one)


@pytest.fixture(scope="session")
def stage_two() -> list[bf.LiouvilleStage]:
    return bf.build_liouville_stages("1/2", "2/1", 2)
