from fractions import Fraction

import numpy as np
import pytest

from back_end.classe.life_codec import (
    ActionCode,
    LifeValue,
    check_base,
    compose,
    concat,
    decode_prefix,
    digits_to_values,
    dyadic_grid,
    encode,
    grid_digits,
    lives_to_digits,
    prefix_phase,
    shift,
    values_to_digits,
)
from back_end.utils.exceptions import (
    BaseMismatchError,
    DomainError,
    EncodingUnsupportedError,
    TruncationError,
)


def test_encode_binary_sequence():
    life = encode([1, 0, 1], 2)
    assert life.digits == (1, 0, 1)
    assert life.exact_value() == Fraction(5, 8)
    assert life.value == 0.625


def test_encode_base_four():
    life = encode([ActionCode(3, 4), ActionCode(1, 4)])
    assert life.M == 4
    assert life.value == 3 / 4 + 1 / 16


@pytest.mark.parametrize("M", [0, 1, 3, 6, 12])
def test_base_must_be_power_of_two(M):
    with pytest.raises(EncodingUnsupportedError):
        check_base(M)


def test_action_code_out_of_range():
    with pytest.raises(EncodingUnsupportedError):
        ActionCode(2, 2)


def test_encode_ints_without_base():
    with pytest.raises(EncodingUnsupportedError):
        encode([0, 1])


def test_shift_and_compose_are_inverse():
    life = LifeValue((1, 0, 1, 1), 2)
    head, tail = shift(life)
    assert head == ActionCode(1, 2)
    assert tail.digits == (0, 1, 1)
    assert tail.value == 2 * life.value - 1
    assert compose(head, tail) == life


def test_shift_of_empty_string_reads_zero():
    head, tail = shift(LifeValue.zero(2))
    assert head.index == 0
    assert tail.depth == 0


def test_mixed_bases_rejected():
    with pytest.raises(BaseMismatchError):
        compose(ActionCode(1, 4), LifeValue((0, 1), 2))
    with pytest.raises(BaseMismatchError):
        concat(LifeValue((1,), 2), LifeValue((1,), 4))


def test_decode_prefix_pads_or_raises():
    life = LifeValue((1, 1), 2)
    codes = decode_prefix(life, 4)
    assert [c.index for c in codes] == [1, 1, 0, 0]
    with pytest.raises(TruncationError):
        decode_prefix(life, 4, pad=False)


def test_from_float_truncates():
    assert LifeValue.from_float(0.625, 2, 3).digits == (1, 0, 1)
    assert LifeValue.from_float(0.7, 2, 2).digits == (1, 0)
    assert LifeValue.from_float(1.0, 2, 4).digits == (1, 1, 1, 1)
    with pytest.raises(DomainError):
        LifeValue.from_float(1.5, 2, 4)


def test_concat_value():
    first = LifeValue((1, 0), 2)
    second = LifeValue((1, 1), 2)
    joined = concat(first, second)
    assert joined.exact_value() == first.exact_value() + Fraction(1, 4) * second.exact_value()


def test_prefix_phase_of_empty_prefix():
    assert prefix_phase([], 2).value == 0.0
    with pytest.raises(EncodingUnsupportedError):
        prefix_phase([])


def test_digit_string_text_form():
    life = LifeValue((1, 0, 1), 2)
    assert life.to_digit_string() == "0.101"
    assert LifeValue.parse_digit_string("0.101", 2) == life
    wide = LifeValue((15, 3), 16)
    assert wide.to_digit_string() == "0.15:3"
    assert LifeValue.parse_digit_string(wide.to_digit_string(), 16) == wide


def test_grid_is_lexicographic_and_ascending():
    digits = grid_digits(2, 3)
    np.testing.assert_array_equal(digits_to_values(digits, 2), np.arange(8) / 8)
    values = [life.value for life in dyadic_grid(4, 2)]
    assert values == sorted(values)
    assert len(values) == 16


def test_values_to_digits_maps_one_to_all_max():
    digits = values_to_digits([0.5, 0.75, 1.0], 2, 3)
    np.testing.assert_array_equal(digits, [[1, 0, 0], [1, 1, 0], [1, 1, 1]])
    with pytest.raises(DomainError):
        values_to_digits([-0.1], 2, 3)


def test_lives_to_digits_pads_with_zeros():
    digits = lives_to_digits([LifeValue((1,), 2), LifeValue((0, 1, 1), 2)], 3)
    np.testing.assert_array_equal(digits, [[1, 0, 0], [0, 1, 1]])


def test_random_strings_stay_below_one(rng):
    for M in (2, 4, 8):
        digits = rng.integers(0, M, size=(2000, 20))
        values = digits_to_values(digits, M)
        assert values.min() >= 0.0
        assert values.max() < 1.0
