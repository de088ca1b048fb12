import pytest

from unihand.accumulator import AccumulatorSecret, kgen_acc, kgen_acc_from_primes
from unihand.groupcrypto import P256Group, ToyGroup
from unihand.rng import DetRng

PROD_ACC_SEED = b"unihand-production-fixture"


@pytest.fixture(scope="session")
def toy_acc_setup():
    """n = 11 * 23 = 253 with g = 4: every value is hand-checkable."""
    return kgen_acc_from_primes(11, 23, g=4)


@pytest.fixture(scope="session")
def prod_acc_setup(request):
    """2048-bit production accumulator; generated deterministically once and
    kept in the pytest cache because safe-prime search is expensive."""
    cached = request.config.cache.get("unihand/prod-acc-2048", None)
    if cached is not None:
        secret = AccumulatorSecret(int(cached["p"]), int(cached["q"]))
        return secret, secret.n, int(cached["g"])
    secret, n, g = kgen_acc(2048, DetRng(PROD_ACC_SEED))
    request.config.cache.set(
        "unihand/prod-acc-2048", {"p": str(secret.p), "q": str(secret.q), "g": str(g)}
    )
    return secret, n, g


@pytest.fixture()
def toy_group():
    return ToyGroup()


@pytest.fixture(scope="session")
def p256():
    return P256Group()


@pytest.fixture()
def rng():
    return DetRng(b"test-rng")
