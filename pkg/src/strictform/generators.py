"""Finite-horizon language oracles and reproducible word generators.

Words are strings of decimal digits (one symbol per character), which keeps
factor queries as plain substring searches.  Oracles are immutable; queries
are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator

CHACON_RULES = {"0": "0010", "1": "1"}

_MASK64 = (1 << 64) - 1


class HorizonExhausted(ValueError):
    """The oracle cannot answer queries at this word length."""


@dataclass(frozen=True)
class LanguageOracle:
    """A queryable finite-horizon language of a subshift.

    Either text-backed (the language is the factor set of ``text``) or a full
    shift over ``alphabet``.  Factor-closure is automatic in both cases.
    """

    kind: str
    alphabet: tuple[str, ...]
    horizon: int
    text: str | None = None

    def __post_init__(self) -> None:
        if self.text is None and self.kind != "full_shift":
            raise ValueError("only the full shift may omit a backing text")

    def contains(self, word: str) -> bool:
        if len(word) > self.horizon:
            raise HorizonExhausted(
                f"length {len(word)} beyond horizon {self.horizon}"
            )
        if any(c not in self.alphabet for c in word):
            return False
        if self.text is None:
            return True
        return word in self.text

    def words(self, n: int) -> Iterator[str]:
        """All length-n words of the language, lexicographically."""
        if n > self.horizon:
            raise HorizonExhausted(f"length {n} beyond horizon {self.horizon}")
        if self.text is None:
            for tup in product(sorted(self.alphabet), repeat=n):
                yield "".join(tup)
            return
        found = {self.text[i : i + n] for i in range(len(self.text) - n + 1)}
        yield from sorted(found)

    def occurrences(self, word: str) -> list[int]:
        """Start offsets of the word in the backing text."""
        if self.text is None:
            raise ValueError("the full shift has no backing text")
        out, i = [], self.text.find(word)
        while i != -1:
            out.append(i)
            i = self.text.find(word, i + 1)
        return out


def periodic_oracle(word: str, horizon: int | None = None) -> LanguageOracle:
    """Language of the bi-infinite repetition of ``word`` and its shifts."""
    if not word:
        raise ValueError("period word must be nonempty")
    h = horizon if horizon is not None else max(64, 8 * len(word))
    reps = h // len(word) + 2
    return LanguageOracle("periodic", tuple(sorted(set(word))), h, word * reps)


def full_shift_oracle(size: int, horizon: int = 10**6) -> LanguageOracle:
    if not 1 <= size <= 9:
        raise ValueError("alphabet size must be in [1, 9]")
    alphabet = tuple(str(s) for s in range(1, size + 1))
    return LanguageOracle("full_shift", alphabet, horizon)


def substitution_oracle(
    rules: dict[str, str], seed: str, depth: int
) -> LanguageOracle:
    """Factors of the depth-fold iterate of a non-erasing substitution."""
    if any(not img for img in rules.values()):
        raise ValueError("substitution must be non-erasing")
    if seed not in rules:
        raise ValueError(f"seed {seed!r} has no rule")
    text = seed
    for _ in range(depth):
        text = "".join(rules[c] for c in text)
    alphabet = tuple(sorted(set(rules)))
    return LanguageOracle("substitution", alphabet, len(text), text)


def chacon_oracle(depth: int = 10) -> LanguageOracle:
    return substitution_oracle(CHACON_RULES, "0", depth)


def sturmian_word(alpha: Fraction, rho: Fraction, n: int) -> str:
    """Mechanical word c_i = floor((i+1)a + r) - floor(i a + r), i < n.

    ``alpha`` stands in for an irrational rotation number; its denominator
    must exceed the word length so the generated prefix is exact.
    """
    if not 0 < alpha < 1:
        raise ValueError("rotation number must lie in (0, 1)")
    if alpha.denominator <= n:
        raise ValueError(
            f"denominator {alpha.denominator} too small for length {n}"
        )
    out = []
    prev = _floor(rho)
    for i in range(1, n + 1):
        cur = _floor(i * alpha + rho)
        out.append(str(cur - prev))
        prev = cur
    return "".join(out)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def sturmian_oracle(
    alpha: Fraction, rho: Fraction, horizon: int
) -> LanguageOracle:
    text = sturmian_word(alpha, rho, 8 * horizon)
    return LanguageOracle("sturmian", ("0", "1"), horizon, text)


def _splitmix64(state: int) -> Iterator[int]:
    # fixed 64-bit splittable mix sequence; documented so outputs are
    # bit-stable across implementations
    s = state & _MASK64
    while True:
        s = (s + 0x9E3779B97F4A7C15) & _MASK64
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def bernoulli_window(p: Fraction, seed: int, n: int) -> str:
    """Reproducible pseudo-random 0/1 word: bit i is 1 iff the i-th splitmix64
    draw, scaled to [0,1), falls below p."""
    if not 0 < p < 1:
        raise ValueError("success probability must lie strictly in (0, 1)")
    threshold = p * (1 << 64)
    gen = _splitmix64(seed)
    return "".join(
        "1" if next(gen) < threshold else "0" for _ in range(n)
    )


def bernoulli_oracle(
    p: Fraction, seed: int, horizon: int
) -> LanguageOracle:
    return LanguageOracle(
        "bernoulli", ("0", "1"), horizon, bernoulli_window(p, seed, 8 * horizon)
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """Parsed CLI spec string, e.g. ``sturmian:309017/500000:rho=1/3``."""

    kind: str
    spec: str
    alpha: Fraction | None = None
    rho: Fraction = Fraction(0)
    p: Fraction | None = None
    seed: int = 0
    word_arg: str = ""
    size: int = 0
    depth: int = 12

    def word(self, n: int) -> str:
        if self.kind == "periodic":
            reps = n // len(self.word_arg) + 1
            return (self.word_arg * reps)[:n]
        if self.kind == "sturmian":
            return sturmian_word(self.alpha, self.rho, n)
        if self.kind == "chacon":
            text = "0"
            while len(text) < n:
                text = "".join(CHACON_RULES[c] for c in text)
            return text[:n]
        if self.kind == "bernoulli":
            return bernoulli_window(self.p, self.seed, n)
        raise ValueError(f"{self.kind} oracle does not generate words")

    def oracle(self, horizon: int) -> LanguageOracle:
        if self.kind == "periodic":
            return periodic_oracle(self.word_arg, horizon)
        if self.kind == "sturmian":
            return sturmian_oracle(self.alpha, self.rho, horizon)
        if self.kind == "chacon":
            depth = self.depth
            while True:
                oracle = chacon_oracle(depth)
                if oracle.horizon >= horizon:
                    break
                depth += 1
            return LanguageOracle(
                "chacon", oracle.alphabet, horizon, oracle.text
            )
        if self.kind == "bernoulli":
            return bernoulli_oracle(self.p, self.seed, horizon)
        if self.kind == "full":
            return full_shift_oracle(self.size, horizon)
        raise ValueError(f"unknown oracle kind {self.kind!r}")


def parse_spec(spec: str) -> GeneratorSpec:
    """Grammar: ``periodic:WORD`` | ``sturmian:P/Q[:rho=P/Q]`` | ``chacon`` |
    ``bernoulli:P/Q:seed=N`` | ``full:S``."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "periodic":
            (word,) = parts[1:]
            if not word or any(c not in "0123456789" for c in word):
                raise ValueError("period word must be decimal digits")
            return GeneratorSpec(kind, spec, word_arg=word)
        if kind == "sturmian":
            alpha = Fraction(parts[1])
            rho = Fraction(0)
            for extra in parts[2:]:
                key, _, value = extra.partition("=")
                if key != "rho":
                    raise ValueError(f"unknown sturmian option {key!r}")
                rho = Fraction(value)
            return GeneratorSpec(kind, spec, alpha=alpha, rho=rho)
        if kind == "chacon":
            if parts[1:]:
                raise ValueError("chacon takes no options")
            return GeneratorSpec(kind, spec)
        if kind == "bernoulli":
            p = Fraction(parts[1])
            seed = 0
            for extra in parts[2:]:
                key, _, value = extra.partition("=")
                if key != "seed":
                    raise ValueError(f"unknown bernoulli option {key!r}")
                seed = int(value)
            return GeneratorSpec(kind, spec, p=p, seed=seed)
        if kind == "full":
            (size,) = parts[1:]
            return GeneratorSpec(kind, spec, size=int(size))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown generator kind {kind!r}")
