"""sealnet: desk-scale privacy-preserving machine learning orchestration.

Encrypted records and algorithm specs are combined by ephemeral authenticated
workers, every operation lands on a verifiable signed hash chain, and data
and algorithm providers are paid from prediction fees in proportion to
measured contributivity.
"""

__version__ = "0.1.0"
