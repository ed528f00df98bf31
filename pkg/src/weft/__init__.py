"""weft: block-sparse tensor networks with matrix-product algorithms."""

__version__ = "0.1.0"
