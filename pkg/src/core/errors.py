from __future__ import annotations


class NgvizError(ValueError):
    """Base class for every error the library raises on bad input."""


# ---------- names ----------
class EmptyName(NgvizError):
    pass


class LabelTooLong(NgvizError):
    pass


class NameTooLong(NgvizError):
    pass


# ---------- capture files ----------
class BadMagic(NgvizError):
    pass


class TruncatedHeader(NgvizError):
    pass


class UnsupportedLinkType(NgvizError):
    pass


# ---------- tables ----------
class EmptyTable(NgvizError):
    pass


class TooFewNgrams(NgvizError):
    pass


class BadFingerprint(NgvizError):
    pass


# ---------- scoring ----------
class OrderMismatch(NgvizError):
    pass


class EmptyInput(NgvizError):
    pass

