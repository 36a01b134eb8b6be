"""
tsepi - target sound extraction with pitch information
"""

__version__ = "0.1.0"
