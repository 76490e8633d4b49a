import pytest

from frobkit.frobenius import make_spec


@pytest.fixture
def log_spec():
    """Rank-2 structure with a logarithmic potential, charge -1."""
    return make_spec(
        rank=2,
        charge="-1",
        degrees=["2", "1"],
        potential="1/2*t2^2*t1 + t1^2*log(t1)",
        variables=["t1", "t2"],
        name="charge_minus_one",
    )


@pytest.fixture
def rank3_spec():
    """Rank-3 structure with a constant Frobenius algebra, charge 0."""
    return make_spec(
        rank=3,
        charge="0",
        degrees=["1", "1", "1"],
        potential="1/6*t1^3 - 1/2*t2^2*t1 + 1/2*t2^2*t3 + 1/2*t1*t3^2",
        variables=["t1", "t2", "t3"],
        name="rank3_trivial",
    )


def family_spec(k: int, c="1"):
    """Rank-2 polynomial family 1/2 t2^2 t1 + c t1^k."""
    from fractions import Fraction

    d1 = Fraction(2, k - 1)
    coeff = Fraction(c)
    head = "1/2*t2^2*t1"
    tail = f" + {coeff}*t1^{k}" if coeff > 0 else f" - {-coeff}*t1^{k}"
    return make_spec(
        rank=2,
        charge=1 - d1,
        degrees=[d1, 1],
        potential=head + tail,
        variables=["t1", "t2"],
        name=f"family_k{k}_c{coeff}",
    )


@pytest.fixture
def family_k4_spec():
    return family_spec(4)
