"""
Life-value codec: exact encoding of action sequences as base-M digit strings.

A life value l in [0,1) stores the action codes kappa(u_0), kappa(u_1), ... as
its base-M digits (most significant first). Digit strings are kept exactly;
the real projection is computed on demand.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from back_end.utils.exceptions import (
    BaseMismatchError,
    DomainError,
    EncodingUnsupportedError,
    TruncationError,
)

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 64


def check_base(M):
    """Raise unless M = 2^b with b >= 1."""
    if not isinstance(M, (int, np.integer)) or M < 2 or (M & (M - 1)) != 0:
        raise EncodingUnsupportedError(f"M={M} n'est pas une puissance de 2 (>= 2)")
    return int(M)


def bits_per_action(M):
    return check_base(M).bit_length() - 1


@dataclass(frozen=True)
class ActionCode:
    """kappa(u): integer code of an action in a set of size M."""

    index: int
    M: int

    def __post_init__(self):
        check_base(self.M)
        if not 0 <= int(self.index) < self.M:
            raise EncodingUnsupportedError(f"code {self.index} hors de [0, {self.M - 1}]")
        object.__setattr__(self, "index", int(self.index))
        object.__setattr__(self, "M", int(self.M))

    def __int__(self):
        return self.index


@dataclass(frozen=True)
class LifeValue:
    """Finite base-M digit string with exact dyadic value."""

    digits: tuple
    M: int

    def __post_init__(self):
        check_base(self.M)
        digits = tuple(int(d) for d in self.digits)
        for d in digits:
            if not 0 <= d < self.M:
                raise EncodingUnsupportedError(f"chiffre {d} hors de [0, {self.M - 1}]")
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "M", int(self.M))

    # -- constructeurs ---------------------------------------------------

    @classmethod
    def zero(cls, M, depth=0):
        return cls((0,) * depth, M)

    @classmethod
    def max_value(cls, M, depth=DEFAULT_DEPTH):
        """All-(M-1) string: the finite-depth stand-in for l = 1."""
        return cls((M - 1,) * depth, M)

    @classmethod
    def from_float(cls, x, M, depth=DEFAULT_DEPTH):
        """
        Truncate a real in [0,1] to `depth` base-M digits.

        Args:
            x: real value; 1.0 maps to the all-(M-1) string
            M: base
            depth: number of digits

        Returns:
            LifeValue whose value is the largest depth-digit point <= x
        """
        check_base(M)
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"valeur de vie hors de [0,1]: {x}")
        if x == 1.0:
            return cls.max_value(M, depth)
        frac = Fraction(x)
        digits = []
        for _ in range(depth):
            frac *= M
            d = int(frac)
            digits.append(d)
            frac -= d
        return cls(tuple(digits), M)

    # -- projections -----------------------------------------------------

    @property
    def depth(self):
        return len(self.digits)

    def as_integer(self):
        """Integer whose base-M representation is the digit string."""
        total = 0
        for d in self.digits:
            total = total * self.M + d
        return total

    def exact_value(self):
        return Fraction(self.as_integer(), self.M ** self.depth)

    @property
    def value(self):
        return float(self.exact_value())

    def __float__(self):
        return self.value

    def padded(self, n):
        """Digits extended with trailing zeros up to length n (never truncated)."""
        if n <= self.depth:
            return self
        return LifeValue(self.digits + (0,) * (n - self.depth), self.M)

    # -- sérialisation ---------------------------------------------------

    def to_digit_string(self):
        """CSV form, e.g. '0.101' (base-M digits, no separators for M <= 10)."""
        if self.M <= 10:
            return "0." + "".join(str(d) for d in self.digits)
        return "0." + ":".join(str(d) for d in self.digits)

    @classmethod
    def parse_digit_string(cls, text, M):
        text = text.strip()
        if not text.startswith("0."):
            raise EncodingUnsupportedError(f"chaîne de vie invalide: {text!r}")
        body = text[2:]
        if not body:
            return cls((), M)
        parts = body.split(":") if ":" in body else list(body)
        return cls(tuple(int(p) for p in parts), M)

    def to_json(self):
        return {"M": self.M, "digits": list(self.digits)}

    @classmethod
    def from_json(cls, data):
        return cls(tuple(data["digits"]), int(data["M"]))


def _as_code(action, M):
    if isinstance(action, ActionCode):
        if M is not None and action.M != M:
            raise BaseMismatchError(f"base mélangée: {action.M} != {M}")
        return action.index
    return ActionCode(int(action), M).index


def encode(actions, M=None):
    """
    Encode an action-code sequence as a life value.

    Args:
        actions: ActionCode items (or plain ints when M is given)
        M: action-set size; inferred from the first ActionCode if omitted

    Returns:
        LifeValue with digits[i] = kappa(u_i)
    """
    actions = list(actions)
    if M is None:
        if not actions or not isinstance(actions[0], ActionCode):
            raise EncodingUnsupportedError("base M manquante pour un encodage d'entiers")
        M = actions[0].M
    check_base(M)
    return LifeValue(tuple(_as_code(a, M) for a in actions), M)


def decode_prefix(life, n, pad=True):
    """
    First n digits of a life value as action codes.

    With pad=True missing digits are taken as 0 and a warning is logged;
    with pad=False a TruncationError is raised instead.
    """
    if n < 0:
        raise TruncationError(f"n négatif: {n}")
    if n > life.depth:
        if not pad:
            raise TruncationError(f"{n} chiffres demandés, {life.depth} disponibles")
        logger.warning(f"decode_prefix: {n - life.depth} chiffre(s) complété(s) par 0")
        life = life.padded(n)
    return [ActionCode(d, life.M) for d in life.digits[:n]]


def shift(life):
    """
    Multi-bit shift: (floor(M*l), {M*l}).

    An empty digit string behaves as all zeros.
    """
    if life.depth == 0:
        return ActionCode(0, life.M), life
    return ActionCode(life.digits[0], life.M), LifeValue(life.digits[1:], life.M)


def compose(head, tail):
    """Inverse of shift: value (kappa(head) + value(tail)) / M."""
    if head.M != tail.M:
        raise BaseMismatchError(f"base mélangée: {head.M} != {tail.M}")
    return LifeValue((head.index,) + tail.digits, tail.M)


def prefix_phase(actions, M=None):
    """phi_N = sum_i M^(-i-1) kappa(u_i) for an N-action prefix (phi_0 = 0)."""
    if M is None and not actions:
        raise EncodingUnsupportedError("base M manquante pour un préfixe vide")
    return encode(actions, M)


def concat(first, second):
    """Digit concatenation; value(first) + M^-|first| value(second)."""
    if first.M != second.M:
        raise BaseMismatchError(f"base mélangée: {first.M} != {second.M}")
    return LifeValue(first.digits + second.digits, first.M)


# -- grilles et échantillons (tableaux de chiffres) ---------------------------

def grid_digits(M, depth):
    """All base-M digit strings of length `depth`, lexicographic, as an int array."""
    check_base(M)
    if depth == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(M), repeat=depth)), dtype=np.int64)


def dyadic_grid(M, depth):
    """Iterate the complete depth-d grid as LifeValue objects (ascending value)."""
    for row in itertools.product(range(M), repeat=depth):
        yield LifeValue(row, M)


def digits_to_values(digits, M):
    """Float projection of each row of a digit matrix (Horner from the tail)."""
    digits = np.atleast_2d(np.asarray(digits))
    values = np.zeros(digits.shape[0])
    for k in range(digits.shape[1] - 1, -1, -1):
        values = (digits[:, k] + values) / M
    return values


def values_to_digits(values, M, depth):
    """
    Digit matrix of reals in [0,1]; 1.0 maps to the all-(M-1) row.

    Multiplying by a power of two is exact in binary floating point, so the
    digits are exact for every finite float input.
    """
    check_base(M)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError("valeurs de vie hors de [0,1]")
    digits = np.zeros((values.shape[0], depth), dtype=np.int64)
    ones = values >= 1.0
    frac = np.where(ones, 0.0, values)
    for k in range(depth):
        frac = frac * M
        d = np.floor(frac)
        digits[:, k] = d.astype(np.int64)
        frac = frac - d
    digits[ones, :] = M - 1
    return digits


def sample_digits(rng, M, depth, count):
    """Uniformly random digit strings (equivalently l ~ Uniform(0,1) truncated)."""
    check_base(M)
    return rng.integers(0, M, size=(count, depth), dtype=np.int64)


def lives_to_digits(lives, depth):
    """Stack LifeValue objects into a digit matrix, padding with zeros."""
    lives = list(lives)
    digits = np.zeros((len(lives), depth), dtype=np.int64)
    for row, life in enumerate(lives):
        d = life.digits[:depth]
        digits[row, :len(d)] = d
    return digits
