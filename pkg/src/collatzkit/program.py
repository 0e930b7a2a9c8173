"""Residue-rule maps: rule model, DSL, canonical programs and the single step.

A program is an ordered list of guarded affine rules.  The first rule is
always ``even:/2``; every later rule acts on odd ``n`` as
``(q * (n / r) + c) / 2`` where ``r`` is 1 or the guard divisor and
``c`` is +1 or -1.  The first rule whose guard matches fires.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "StepRule",
    "Program",
    "ProgramError",
    "DSLSyntaxError",
    "canonical_program",
    "program_from_id",
    "parse_program_dsl",
    "format_program",
    "validate_program",
    "step",
    "classify_step",
    "is_prime",
]

EVEN = "even"
MOD = "mod"
ELSE = "else"


class ProgramError(ValueError):
    """Invalid program definition or canonical program request."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DSLSyntaxError(ProgramError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class StepRule:
    """One guarded rule.  ``divisor`` is only meaningful for ``mod`` guards."""

    guard: str
    divisor: int = 0
    q: int = 1
    r: int = 1
    c: int = 1

    @classmethod
    def even(cls):
        return cls(EVEN)

    @classmethod
    def mod(cls, d, q, r=None, c=1):
        return cls(MOD, d, q, d if r is None else r, c)

    @classmethod
    def otherwise(cls, q, c=1):
        return cls(ELSE, 0, q, 1, c)

    def matches(self, n: int) -> bool:
        if self.guard == EVEN:
            return n % 2 == 0
        if self.guard == MOD:
            return n % 2 == 1 and n % self.divisor == 0
        return True

    def apply(self, n: int) -> int:
        if self.guard == EVEN:
            return n >> 1
        return (self.q * (n // self.r) + self.c) >> 1

    @property
    def growth(self) -> Fraction:
        """Asymptotic multiplicative factor of one application."""
        if self.guard == EVEN:
            return Fraction(1, 2)
        return Fraction(self.q, 2 * self.r)

    def text(self) -> str:
        if self.guard == EVEN:
            return "even:/2"
        head = f"mod{self.divisor}" if self.guard == MOD else "else"
        frac = f"/{self.r}" if self.r != 1 else ""
        sign = "+" if self.c > 0 else "-"
        return f"{head}:({self.q}n{frac}{sign}1)/2"


@dataclass(frozen=True)
class Program:
    """An ordered rule list.  Equality ignores ``id``."""

    id: str = field(compare=False)
    rules: tuple

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        problems = validate_program(self)
        if problems:
            raise ProgramError("invalid program: " + "; ".join(problems), problems)

    @property
    def odd_rules(self):
        """``(divisor, q, r, c)`` for every odd-branch rule; divisor 0 means else."""
        return tuple((rl.divisor, rl.q, rl.r, rl.c) for rl in self.rules[1:])

    def kernel_arrays(self):
        """Odd-rule table as int64 arrays for the scan kernels."""
        rows = self.odd_rules
        return tuple(np.array([row[i] for row in rows], dtype=np.int64) for i in range(4))

    def __str__(self):
        return format_program(self)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _rule_violations(idx, rule):
    out = []
    where = f"rule {idx} ({rule.guard})"
    if rule.guard not in (EVEN, MOD, ELSE):
        return [f"{where}: unknown guard kind"]
    if rule.guard == EVEN:
        return out
    if rule.guard == MOD and (rule.divisor < 3 or rule.divisor % 2 == 0):
        out.append(f"{where}: guard divisor must be odd and >= 3")
    if rule.q < 1 or rule.q % 2 == 0:
        out.append(f"{where}: multiplier must be odd")
    if rule.r < 1 or rule.r % 2 == 0:
        out.append(f"{where}: denominator must be odd")
    if rule.guard == ELSE and rule.r != 1:
        out.append(f"{where}: r must be 1 or the guard divisor")
    if rule.guard == MOD and rule.r not in (1, rule.divisor):
        out.append(f"{where}: r must be 1 or the guard divisor")
    if rule.c not in (1, -1):
        out.append(f"{where}: offset must be +1 or -1")
    elif rule.q == 1 and rule.c == -1:
        out.append(f"{where}: multiplier 1 with offset -1 sends n = r to 0")
    return out


def validate_program(program) -> list:
    """Every violated rule/program invariant as a message; empty means valid."""
    rules = program.rules
    out = []
    if not rules:
        return ["program has no rules"]
    first = rules[0]
    if first.guard != EVEN:
        out.append("first rule must be even:/2")
    for idx, rule in enumerate(rules):
        out.extend(_rule_violations(idx, rule))
        if idx > 0 and rule.guard == EVEN:
            out.append(f"rule {idx}: even rule only allowed first")
    if rules[-1].guard != ELSE:
        out.append("last rule must be an else rule")
    if any(rl.guard == ELSE for rl in rules[:-1]):
        out.append("no rule may follow an else rule")
    divisors = [rl.divisor for rl in rules if rl.guard == MOD]
    if len(set(divisors)) != len(divisors):
        out.append("divisible-by guards must have distinct divisors")
    return out


def format_program(program) -> str:
    return "; ".join(rule.text() for rule in program.rules)


_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<word>[a-z]+)|(?P<sym>[;:/()+\-]))")


def _tokenize(text):
    tokens = []
    pos = 0
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(offset):
        line = max(i for i, s in enumerate(line_starts) if s <= offset)
        return line + 1, offset - line_starts[line] + 1

    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            skip = len(text[pos:]) - len(text[pos:].lstrip())
            raise DSLSyntaxError(f"unexpected character {text[pos + skip]!r}", *where(pos + skip))
        kind = m.lastgroup
        start = m.start(kind)
        val = m.group(kind)
        if kind == "word" and val not in ("even", "mod", "else", "n"):
            raise DSLSyntaxError(f"unknown word {val!r}", *where(start))
        tokens.append((kind, val, where(start)))
        pos = m.end()
    tokens.append(("end", "", where(len(text))))
    return tokens


class _Parser:
    """Recursive descent over the token list."""

    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise DSLSyntaxError(f"expected {want!r}, got {got!r}", *tok[2])
        self.i += 1
        return tok

    def program(self):
        rules = [self.rule()]
        while self.peek()[1] == ";":
            self.take("sym", ";")
            if self.peek()[0] == "end":
                break
            rules.append(self.rule())
        self.take("end")
        return rules

    def rule(self):
        kind, word, pos = self.take("word")
        if word == "even":
            self.take("sym", ":")
            self.take("sym", "/")
            two = self.take("int")
            if two[1] != "2":
                raise DSLSyntaxError("even rule must be /2", *two[2])
            return StepRule.even()
        if word == "mod":
            divisor = int(self.take("int")[1])
        elif word == "else":
            divisor = 0
        else:
            raise DSLSyntaxError(f"unknown guard {word!r}", *pos)
        self.take("sym", ":")
        q, r, c = self.action()
        if word == "mod":
            return StepRule(MOD, divisor, q, r, c)
        return StepRule(ELSE, 0, q, r, c)

    def action(self):
        self.take("sym", "(")
        q = int(self.take("int")[1])
        self.take("word", "n")
        r = 1
        if self.peek()[1] == "/":
            self.take("sym", "/")
            r = int(self.take("int")[1])
        sign = self.peek()
        if sign[1] not in ("+", "-"):
            raise DSLSyntaxError("expected '+' or '-'", *sign[2])
        self.i += 1
        one = self.take("int")
        if one[1] != "1":
            raise DSLSyntaxError("offset must be 1", *one[2])
        self.take("sym", ")")
        self.take("sym", "/")
        two = self.take("int")
        if two[1] != "2":
            raise DSLSyntaxError("action must end with /2", *two[2])
        return q, r, (1 if sign[1] == "+" else -1)


def parse_program_dsl(text: str, id: str | None = None) -> Program:
    """Parse ``even:/2; mod3:(7n/3+1)/2; else:(5n+1)/2`` style text.

    Raises :class:`DSLSyntaxError` (with line/column) on malformed text and
    :class:`ProgramError` listing the violations on semantically invalid rules.
    """
    rules = _Parser(text.lower()).program()
    return Program(id or "dsl:" + "; ".join(rl.text() for rl in rules), rules)


def _p4(m):
    if m % 2 == 0:
        raise ProgramError("m must be odd")
    if m < 7:
        raise ProgramError("m must be >= 7")
    return Program(f"p4:{m}", [StepRule.even(), StepRule.mod(5, m), StepRule.otherwise(3)])


def _p6(prime):
    if prime not in (5, 7, 11, 13):
        raise ProgramError("p6 excluded prime must be one of 5, 7, 11, 13")
    guards = [StepRule.mod(d, prime) for d in range(3, prime, 2) if is_prime(d)]
    return Program(f"p6:{prime}", [StepRule.even(), *guards, StepRule.otherwise(prime)])


def _p9(p, order):
    if not is_prime(p) or p < 5:
        raise ProgramError("p9 divisor must be a prime >= 5")
    if order not in ("-+", "+-"):
        raise ProgramError("p9 sign order must be '-+' or '+-'")
    first, second = (-1, 1) if order == "-+" else (1, -1)
    rules = [StepRule.even(), StepRule.mod(p, 3, r=1, c=first), StepRule.otherwise(3, c=second)]
    return Program(f"p9:{p}:{order}", rules)


def canonical_program(name: str, params=()) -> Program:
    """Build one of the named program families.

    ``p1``/``p1m`` take no parameters, ``p4`` takes odd ``m >= 7``, ``p6``
    the excluded prime, ``p9`` a prime ``p >= 5`` and a sign order.
    """
    params = list(params)
    if name == "p1":
        return Program("p1", [StepRule.even(), StepRule.otherwise(3)])
    if name == "p1m":
        return Program("p1m", [StepRule.even(), StepRule.otherwise(3, c=-1)])
    if name == "p2":
        return Program("p2", [StepRule.even(), StepRule.mod(3, 7), StepRule.otherwise(5)])
    if name == "p4":
        if len(params) != 1:
            raise ProgramError("p4 takes one parameter m")
        return _p4(int(params[0]))
    if name == "p6":
        if len(params) != 1:
            raise ProgramError("p6 takes one parameter (excluded prime)")
        return _p6(int(params[0]))
    if name == "p9":
        if len(params) != 2:
            raise ProgramError("p9 takes a prime and a sign order")
        return _p9(int(params[0]), str(params[1]))
    raise ProgramError(f"unknown program {name!r}")


def program_from_id(text: str) -> Program:
    """Resolve ``p1``, ``p4:53``, ``p9:11:+-`` or ``dsl:<rules>``."""
    text = text.strip()
    if text.startswith("dsl:"):
        return parse_program_dsl(text[4:])
    name, *rest = text.split(":")
    if name == "p9":
        if len(rest) != 2:
            raise ProgramError("p9 id must look like p9:<p>:<-+|+->")
        try:
            p = int(rest[0])
        except ValueError:
            raise ProgramError(f"bad p9 prime {rest[0]!r}") from None
        return canonical_program("p9", [p, rest[1]])
    try:
        params = [int(x) for x in rest]
    except ValueError:
        raise ProgramError(f"bad program parameters in {text!r}") from None
    return canonical_program(name, params)


def _positive(n):
    n = int(n)
    if n < 1:
        raise ValueError("values must be positive integers")
    return n


def _select(program, n):
    if n & 1 == 0:
        return 0
    for idx, (d, _, _, _) in enumerate(program.odd_rules, start=1):
        if d == 0 or n % d == 0:
            return idx
    raise AssertionError("validated programs end with an else rule")


def step(program: Program, n: int) -> int:
    """Apply the first matching rule to ``n``."""
    n = _positive(n)
    return program.rules[_select(program, n)].apply(n)


def classify_step(program: Program, n: int):
    """``(rule index, growth factor)`` of the rule that fires on ``n``."""
    n = _positive(n)
    idx = _select(program, n)
    return idx, program.rules[idx].growth
