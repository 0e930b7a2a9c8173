"""Decimal text for integers of any size.

CPython refuses int/str conversions beyond a few thousand digits; orbit
values here routinely run to tens of thousands, so conversions go through
gmpy2 when it is installed.
"""
try:
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = None


def to_decimal(n) -> str:
    if _mpz is not None:
        return _mpz(n).digits(10)
    return str(int(n))


def from_decimal(text: str) -> int:
    """Parse an optionally signed decimal string; anything else raises ValueError."""
    body = text[1:] if text[:1] in "+-" else text
    if not body.isdigit() or not body.isascii():
        raise ValueError(f"expected a decimal integer, got {text[:40]!r}")
    if _mpz is not None:
        return int(_mpz(text))
    return int(text)


def decimal_digits(n) -> int:
    return len(to_decimal(abs(n)))
