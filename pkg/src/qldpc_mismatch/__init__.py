"""BP2/BP4 syndrome decoding of overcomplete QLDPC codes and LLR-mismatch analysis."""

__version__ = "0.1.0"
