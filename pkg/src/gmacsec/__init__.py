"""Punctured-LDPC secrecy coding over the two-user Gaussian MAC wiretap channel."""

__version__ = "0.1.0"
