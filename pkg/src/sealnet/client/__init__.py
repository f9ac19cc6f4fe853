from .vault import KeyVault, keygen
from .ops import (
    AnnotationCorrection,
    AuditReport,
    BadLabel,
    Client,
    IndexOutOfRange,
    LabelMismatch,
    NotOwner,
    NotReady,
)

__all__ = [
    "KeyVault",
    "keygen",
    "Client",
    "AnnotationCorrection",
    "AuditReport",
    "LabelMismatch",
    "NotReady",
    "NotOwner",
    "IndexOutOfRange",
    "BadLabel",
]
