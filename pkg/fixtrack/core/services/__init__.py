"""
Output services for tracking runs.
"""

from .output_writer import OutputWriter

__all__ = ['OutputWriter']
