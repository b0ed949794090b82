"""
Numerical engine for the reversed Hardy-Littlewood-Sobolev toolkit
"""

__version__ = "1.0.0"
