"""Bearer-token strength analysis: entropy, mutations, enumeration simulation.

Entropy is H = L·log2(A) over an inferred alphabet class.  Tokens under
64 bits are flagged as potentially enumerable.  Mutation strategies model
the probes an adversary would try; the enumeration simulator estimates
hit probability against a configurable mock token space — never against
third-party hosts.
"""

from __future__ import annotations

import logging
import math
import random
import re
import string
from dataclasses import dataclass
from fractions import Fraction
from urllib.parse import parse_qsl, urlsplit

logger = logging.getLogger(__name__)

ENTROPY_FLAG_BITS = 64.0

# class name -> (alphabet size, canonical character set for membership)
ALPHABET_CLASSES = {
    "digits": (10, set(string.digits)),
    "hex": (16, set(string.hexdigits)),
    "lower_alpha": (26, set(string.ascii_lowercase)),
    "alnum_ci": (36, set(string.ascii_lowercase + string.digits)),
    "alnum_cs": (62, set(string.ascii_letters + string.digits)),
}


class TokenError(ValueError):
    pass


# ============================================================
# Types
# ============================================================


@dataclass
class TokenAnalysis:
    url_id: str
    token: str
    L: int
    alphabet_class: str
    A: int
    H: float
    flagged_low_entropy: bool
    has_separators: bool = False

    def to_row(self) -> dict:
        return {
            "url_id": self.url_id,
            "token": self.token,
            "L": self.L,
            "alphabet_class": self.alphabet_class,
            "A": self.A,
            "H": self.H,
            "flagged_low_entropy": self.flagged_low_entropy,
            "has_separators": self.has_separators,
        }


@dataclass
class MutationResult:
    candidates: list[str]
    reason: str | None = None


@dataclass
class EnumerationEstimate:
    strategy: str
    tries: int
    trials: int
    hits: int
    hit_rate: float
    seed: int
    replacement: bool


# ============================================================
# Classification
# ============================================================


def classify_token(token: str, case_probe: str | None = None) -> tuple[str, int]:
    """Infer the alphabet class of a single-run token.

    ``case_probe`` is an injected observation: "identical" means the
    service answered the same for a case-flipped token (alphabet halves to
    the case-insensitive class); "different" or None keeps the
    case-sensitive class for mixed-case tokens.
    """
    if not token:
        raise TokenError("empty token")
    chars = set(token)
    letters = [c for c in token if c.isalpha()]
    if not chars - ALPHABET_CLASSES["digits"][1]:
        return "digits", 10
    if not chars - ALPHABET_CLASSES["hex"][1]:
        # All-hex is classed hex in preference to alnum.
        return "hex", 16
    if len(letters) == len(token):
        single_case = token.islower() or token.isupper()
        if single_case or case_probe == "identical":
            return "lower_alpha", 26
        return "alnum_cs", 62
    if not all(c.isalnum() for c in token):
        raise TokenError(f"token {token!r} contains separators; classify the dominant run")
    single_case = not letters or "".join(letters).islower() or "".join(letters).isupper()
    if single_case or case_probe == "identical":
        return "alnum_ci", 36
    return "alnum_cs", 62


def _last_path_segment(path: str) -> str | None:
    segments = [s for s in path.split("/") if s]
    return segments[-1] if segments else None


_SINGLE_RUN = re.compile(r"[A-Za-z0-9]+")


def select_token_segment(url: str) -> str:
    """The token candidate: last path segment, unless a query value wins.

    A query parameter value of length ≥ 5 made of one unbroken
    alphanumeric run takes precedence; the longest such value wins, with
    length ties broken toward the path segment.
    """
    parts = urlsplit(url)
    segment = _last_path_segment(parts.path)
    query_values = [
        value for _, value in parse_qsl(parts.query, keep_blank_values=True)
        if len(value) >= 5 and _SINGLE_RUN.fullmatch(value)
    ]
    if query_values:
        best = max(query_values, key=len)
        if segment is not None and len(segment) == len(best):
            return segment
        return best
    if segment is None:
        raise TokenError(f"untokenized URL: {url}")
    return segment


def token_entropy(url: str, case_probe: str | None = None,
                  url_id: str = "") -> TokenAnalysis:
    """Entropy estimate for the token segment of a URL."""
    candidate = select_token_segment(url)
    runs = _SINGLE_RUN.findall(candidate)
    if not runs:
        raise TokenError(f"untokenized URL: {url}")
    token = max(runs, key=len)  # dominant (longest; earliest on ties) run
    has_separators = token != candidate
    cls, size = classify_token(token, case_probe)
    entropy = len(token) * math.log2(size)
    return TokenAnalysis(
        url_id=url_id,
        token=token,
        L=len(token),
        alphabet_class=cls,
        A=size,
        H=entropy,
        flagged_low_entropy=entropy < ENTROPY_FLAG_BITS,
        has_separators=has_separators,
    )


# ============================================================
# Mutations
# ============================================================

MUTATION_STRATEGIES = ("numeric_increment", "last_char_cycle", "random_in_class")

_DIGIT_RUN = re.compile(r"\d+")


def _cycle_alphabet(run: str) -> str:
    """Concrete ordered alphabet for cycling characters of this run."""
    cls, _ = classify_token(run)
    upper = run.isupper()
    if cls == "digits":
        return string.digits
    if cls == "hex":
        base = "0123456789abcdef"
        return base.upper() if upper else base
    if cls == "lower_alpha":
        return string.ascii_uppercase if upper else string.ascii_lowercase
    if cls == "alnum_ci":
        letters = string.ascii_uppercase if upper else string.ascii_lowercase
        return string.digits + letters
    return string.digits + string.ascii_lowercase + string.ascii_uppercase


def mutate_token(token: str, strategy: str, n: int, seed: int = 0) -> MutationResult:
    """Generate up to ``n`` candidate tokens distinct from the input."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if strategy == "numeric_increment":
        return _numeric_increment(token, n)
    if strategy == "last_char_cycle":
        return _last_char_cycle(token, n)
    if strategy == "random_in_class":
        return _random_in_class(token, n, seed)
    raise ValueError(f"unknown strategy {strategy!r}")


def _numeric_increment(token: str, n: int) -> MutationResult:
    runs = list(_DIGIT_RUN.finditer(token))
    if not runs:
        return MutationResult([], "no numeric run to increment")
    run = runs[-1]
    width = run.end() - run.start()
    base = int(run.group(0))
    modulus = 10 ** width
    candidates = []
    for k in range(1, min(n, modulus - 1) + 1):
        value = (base + k) % modulus
        candidates.append(token[:run.start()] + str(value).zfill(width) + token[run.end():])
    return MutationResult(candidates)


def _last_char_cycle(token: str, n: int) -> MutationResult:
    if not token:
        return MutationResult([], "empty token")
    runs = _SINGLE_RUN.findall(token)
    if not runs or not token[-1].isalnum():
        return MutationResult([], "final character is not alphanumeric")
    alphabet = _cycle_alphabet(runs[-1])
    last = token[-1]
    if last not in alphabet:
        return MutationResult([], f"final character {last!r} outside its class alphabet")
    index = alphabet.index(last)
    candidates = []
    for k in range(1, min(n, len(alphabet) - 1) + 1):
        candidates.append(token[:-1] + alphabet[(index + k) % len(alphabet)])
    return MutationResult(candidates)


def _random_in_class(token: str, n: int, seed: int) -> MutationResult:
    runs = _SINGLE_RUN.findall(token)
    if not runs:
        return MutationResult([], "no alphanumeric content")
    if token != runs[0] or len(runs) > 1:
        return MutationResult([], "random_in_class requires a single-run token")
    alphabet = _cycle_alphabet(token)
    space = len(alphabet) ** len(token)
    rng = random.Random(seed)
    out: list[str] = []
    seen = {token}
    attempts = 0
    while len(out) < n and attempts < 50 * n + 200:
        attempts += 1
        candidate = "".join(rng.choice(alphabet) for _ in range(len(token)))
        if candidate not in seen:
            seen.add(candidate)
            out.append(candidate)
    if len(out) < n and len(seen) - 1 >= space - 1:
        return MutationResult(out, "class space exhausted")
    return MutationResult(out)


# ============================================================
# Mock token space
# ============================================================


@dataclass
class TokenSpace:
    """Decimal token space [0, S) of zero-padded fixed-width tokens."""

    space_size: int
    occupied: frozenset[str]
    rate_limit_ms: int = 0

    @property
    def width(self) -> int:
        return len(str(self.space_size - 1))

    def token(self, index: int) -> str:
        return str(index).zfill(self.width)

    def contains(self, token: str) -> bool:
        if len(token) != self.width or not token.isdigit():
            return False
        return int(token) < self.space_size

    def is_occupied(self, token: str) -> bool:
        return token in self.occupied

    def synthetic_profile(self, token: str) -> dict:
        """Deterministic fake record served for an occupied token."""
        return {
            "token": token,
            "name": f"User {token}",
            "email": f"user{token}@example.test",
            "quote_id": f"Q-{token}",
        }

    @classmethod
    def from_config(cls, config: dict) -> "TokenSpace":
        size = config["space_size"]
        if not isinstance(size, int) or size < 1:
            raise ValueError("space_size must be a positive integer")
        spec = config.get("occupied", [])
        width = len(str(size - 1))
        if isinstance(spec, dict):
            count, seed = int(spec["count"]), int(spec.get("seed", 0))
            if count > size:
                raise ValueError(f"occupied count {count} exceeds space size {size}")
            indices = random.Random(seed).sample(range(size), count)
            occupied = frozenset(str(i).zfill(width) for i in indices)
        else:
            occupied = frozenset(str(t).zfill(width) for t in spec)
            for token in occupied:
                if not token.isdigit() or int(token) >= size or len(token) != width:
                    raise ValueError(f"occupied token {token!r} outside the space")
            if len(occupied) > size:
                raise ValueError("more occupied tokens than the space holds")
        return cls(space_size=size, occupied=occupied,
                   rate_limit_ms=int(config.get("rate_limit_ms", 0)))


# ============================================================
# Enumeration
# ============================================================


def _trial_candidates(space: TokenSpace, start: str, strategy: str,
                      tries: int, rng: random.Random,
                      replacement: bool) -> list[str]:
    if strategy == "random_in_class":
        out: list[str] = []
        if replacement:
            for _ in range(tries):
                while True:
                    candidate = space.token(rng.randrange(space.space_size))
                    if candidate != start:
                        break
                out.append(candidate)
        else:
            if tries > space.space_size - 1:
                raise ValueError("tries exceeds the number of distinct other tokens")
            chosen: set[str] = set()
            while len(out) < tries:
                candidate = space.token(rng.randrange(space.space_size))
                if candidate != start and candidate not in chosen:
                    chosen.add(candidate)
                    out.append(candidate)
        return out
    if strategy == "numeric_increment":
        base = int(start)
        return [space.token((base + k) % space.space_size) for k in range(1, tries + 1)]
    if strategy == "last_char_cycle":
        result = mutate_token(start, "last_char_cycle", tries)
        return result.candidates
    raise ValueError(f"unknown strategy {strategy!r}")


def simulate_enumeration(space: TokenSpace, strategy: str, tries: int,
                         trials: int, seed: int = 0,
                         replacement: bool = True) -> EnumerationEstimate:
    """Monte-Carlo P(≥1 hit within ``tries`` mutations from a random victim).

    Each trial starts from a random occupied token and probes ``tries``
    candidates (excluding the start) per the strategy; a trial hits when
    any candidate is occupied.  Runs purely in-process.
    """
    if len(space.occupied) > space.space_size:
        raise ValueError("occupied set exceeds space size")
    if tries < 1 or trials < 1:
        raise ValueError("tries and trials must be >= 1")
    occupied_sorted = sorted(space.occupied)
    if not occupied_sorted:
        return EnumerationEstimate(strategy, tries, trials, 0, 0.0, seed, replacement)
    rng = random.Random(seed)
    hits = 0
    for _ in range(trials):
        start = occupied_sorted[rng.randrange(len(occupied_sorted))]
        candidates = _trial_candidates(space, start, strategy, tries, rng, replacement)
        if any(space.is_occupied(c) for c in candidates):
            hits += 1
    return EnumerationEstimate(strategy, tries, trials, hits, hits / trials,
                               seed, replacement)


def exact_hit_probability(space: TokenSpace, tries: int) -> Fraction:
    """Exact P(≥1 hit) for distinct uniform draws from the other tokens.

    Hypergeometric no-hit term: drawing ``tries`` distinct tokens from the
    S−1 non-start tokens, of which N−1 are occupied.
    """
    size = space.space_size
    occupied = len(space.occupied)
    if occupied == 0:
        return Fraction(0)
    others = size - 1
    unoccupied_others = size - occupied
    if tries > others:
        raise ValueError("tries exceeds the number of distinct other tokens")
    if tries > unoccupied_others:
        return Fraction(1)
    no_hit = Fraction(math.comb(unoccupied_others, tries), math.comb(others, tries))
    return 1 - no_hit
