"""
CLI command modules for the FTL package.

Each experiment has an ``add_X_parser``/``handle_X`` pair; modules group
the experiments by the part of the library they drive.
"""

__all__ = [
    'appendix',
    'bergman',
    'catalog',
    'common',
    'coords',
    'homog',
    'localize',
    'psh',
    'weights'
]
