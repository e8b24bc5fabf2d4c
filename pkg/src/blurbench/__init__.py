"""Benchmarking visual trackers under synthetic motion blur, with
selective deblurring."""

__version__ = "0.1.0"
