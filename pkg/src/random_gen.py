"""
Seeded random-generation routines for the TPC-C workload.

Implements the uniform and non-uniform selection rules of TPC-C (NURand,
syllable-based last names, alphanumeric and numeric strings) on top of a numpy
Generator. Draws are buffered in blocks so that populating half a million rows
stays fast while remaining a pure function of the seed.
"""

import math
import string
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

ALPHANUMERIC = string.ascii_letters + string.digits
DIGITS = string.digits

SYLLABLES = ("BAR", "OUGHT", "ABLE", "PRI", "PRES", "ESE", "ANTI", "CALLY", "ATION", "EING")

NURAND_A_LAST = 255
NURAND_A_C_ID = 1023
NURAND_A_ITEM = 8191

# Run-time C_LAST must differ from the load-time value by 65..119, excluding 96 and 112.
C_LAST_DELTA_RANGE = (65, 119)
C_LAST_DELTA_EXCLUDED = (96, 112)

ORIGINAL_MARKER = "ORIGINAL"

_BLOCK = 1 << 16
_ALNUM_TABLE = bytes.maketrans(bytes(range(len(ALPHANUMERIC))), ALPHANUMERIC.encode("ascii"))
_DIGIT_TABLE = bytes.maketrans(bytes(range(len(DIGITS))), DIGITS.encode("ascii"))

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


class RandomSource:
    """Buffered wrapper around a numpy PCG64 generator."""

    def __init__(self, seed: SeedLike, block: int = _BLOCK):
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._block = block
        self._uniforms: List[float] = []
        self._u_pos = 0
        self._alnum = ""
        self._alnum_pos = 0
        self._digits = ""
        self._digits_pos = 0

    @property
    def generator(self) -> np.random.Generator:
        return self._rng

    def uniform(self) -> float:
        """Uniform float in [0, 1)."""
        if self._u_pos >= len(self._uniforms):
            self._uniforms = self._rng.random(self._block).tolist()
            self._u_pos = 0
        value = self._uniforms[self._u_pos]
        self._u_pos += 1
        return value

    def number(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        if low > high:
            raise ValueError(f"Invalid range [{low}, {high}]")
        return low + int(self.uniform() * (high - low + 1))

    def astring(self, min_length: int, max_length: int) -> str:
        """Random alphanumeric string with a uniformly drawn length."""
        length = self.number(min_length, max_length)
        if self._alnum_pos + length > len(self._alnum):
            raw = self._rng.integers(0, len(ALPHANUMERIC), size=max(self._block, length), dtype=np.uint8)
            self._alnum = raw.tobytes().translate(_ALNUM_TABLE).decode("ascii")
            self._alnum_pos = 0
        start = self._alnum_pos
        self._alnum_pos += length
        return self._alnum[start:self._alnum_pos]

    def nstring(self, min_length: int, max_length: int) -> str:
        """Random numeric string with a uniformly drawn length."""
        length = self.number(min_length, max_length)
        if self._digits_pos + length > len(self._digits):
            raw = self._rng.integers(0, len(DIGITS), size=max(self._block, length), dtype=np.uint8)
            self._digits = raw.tobytes().translate(_DIGIT_TABLE).decode("ascii")
            self._digits_pos = 0
        start = self._digits_pos
        self._digits_pos += length
        return self._digits[start:self._digits_pos]

    def zip_code(self) -> str:
        return self.nstring(4, 4) + "11111"

    def with_original(self, text: str) -> str:
        """Embed the ORIGINAL marker at a random position (10% rule for items and stock)."""
        if len(text) < len(ORIGINAL_MARKER):
            return ORIGINAL_MARKER
        position = self.number(0, len(text) - len(ORIGINAL_MARKER))
        return text[:position] + ORIGINAL_MARKER + text[position + len(ORIGINAL_MARKER):]

    def permutation(self, n: int) -> List[int]:
        """Random permutation of 1..n."""
        return (self._rng.permutation(n) + 1).tolist()

    def exponential(self, mean: float, cap_factor: float = 10.0) -> float:
        """Draw -mean*ln(u), truncated at cap_factor * mean."""
        if mean <= 0:
            return 0.0
        u = 1.0 - self.uniform()
        return min(-mean * math.log(u), cap_factor * mean)

    def weighted_index(self, cumulative: Sequence[float]) -> int:
        """Pick an index given cumulative weights ending at 1.0."""
        u = self.uniform()
        for index, bound in enumerate(cumulative):
            if u < bound:
                return index
        return len(cumulative) - 1


def nurand(A: int, x: int, y: int, C: int, rng: RandomSource) -> int:
    """
    Non-uniform random number (TPC-C NURand).

    Args:
        A: Bit mask bound (255, 1023 or 8191 in TPC-C)
        x: Lower bound of the range
        y: Upper bound of the range
        C: Run constant in [0, A]
        rng: Random source

    Returns:
        int: (((rand(0, A) | rand(x, y)) + C) % (y - x + 1)) + x
    """
    if x > y:
        raise ValueError(f"nurand range is empty: x={x} > y={y}")
    if A < 0 or C < 0:
        raise ValueError(f"nurand requires A >= 0 and C >= 0, got A={A}, C={C}")
    return (((rng.number(0, A) | rng.number(x, y)) + C) % (y - x + 1)) + x


def make_last_name(number: int) -> str:
    """Concatenate the three syllables selected by the digits of number (0..999)."""
    if not 0 <= number <= 999:
        raise ValueError(f"Last name number must be in 0..999, got {number}")
    return SYLLABLES[number // 100] + SYLLABLES[(number // 10) % 10] + SYLLABLES[number % 10]


def random_last_name(rng: RandomSource, customers_per_district: int, c_last: int) -> str:
    """Non-uniformly chosen last name of an existing customer."""
    upper = min(999, customers_per_district - 1)
    return make_last_name(nurand(NURAND_A_LAST, 0, upper, c_last, rng))


@dataclass(frozen=True)
class NURandConstants:
    """The C values used by NURand for last names, customer ids and item ids."""

    c_last: int
    c_id: int
    ol_i_id: int

    @classmethod
    def for_load(cls, rng: RandomSource) -> "NURandConstants":
        return cls(
            c_last=rng.number(0, NURAND_A_LAST),
            c_id=rng.number(0, NURAND_A_C_ID),
            ol_i_id=rng.number(0, NURAND_A_ITEM),
        )

    @classmethod
    def for_run(cls, load: "NURandConstants", rng: RandomSource) -> "NURandConstants":
        while True:
            c_last = rng.number(0, NURAND_A_LAST)
            if valid_run_delta(load.c_last, c_last):
                break
        return cls(
            c_last=c_last,
            c_id=rng.number(0, NURAND_A_C_ID),
            ol_i_id=rng.number(0, NURAND_A_ITEM),
        )

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.c_last, self.c_id, self.ol_i_id)


def valid_run_delta(load_c_last: int, run_c_last: int) -> bool:
    """Check the TPC-C rule relating load-time and run-time C_LAST."""
    delta = abs(run_c_last - load_c_last)
    low, high = C_LAST_DELTA_RANGE
    return low <= delta <= high and delta not in C_LAST_DELTA_EXCLUDED
