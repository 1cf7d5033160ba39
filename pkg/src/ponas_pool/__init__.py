"""Mining-pool simulator for proof-of-neural-architecture-search consensus."""

__version__ = "0.1.0"
