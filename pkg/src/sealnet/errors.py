"""Shared exception roots for the platform."""


class SealnetError(Exception):
    """Base class for every platform error."""


class TransportError(SealnetError):
    """A transport failure between two components (real or simulated)."""
