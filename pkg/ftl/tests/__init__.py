"""
FTL test suite.

This package contains tests for the finite-type lab.
"""
