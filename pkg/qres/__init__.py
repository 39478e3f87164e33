"""
qres - noisy twenty-questions search over measurement-dependent channels
"""

__version__ = "0.1.0"
