import numpy as np
import pytest

from linksig.signatures import KIND_COMPLEX, LinkSignature


def scalar_sig(x) -> LinkSignature:
    """1x1, single-tap complex signature holding one value."""
    return LinkSignature(kind=KIND_COMPLEX, values=np.array([complex(x)]),
                         k1=1, k2=1, n_taps=1)


def random_sig(rng, k1=1, k2=1, n_taps=8) -> LinkSignature:
    vals = rng.standard_normal(k1 * k2 * n_taps) + 1j * rng.standard_normal(
        k1 * k2 * n_taps
    )
    return LinkSignature(kind=KIND_COMPLEX, values=vals, k1=k1, k2=k2,
                         n_taps=n_taps)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
