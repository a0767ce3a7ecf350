"""
pragmatest - native unit tests for OpenQASM 3 programs.
"""
__version__ = "0.1.0"
