#!/usr/bin/env python3
"""
Test runner for the FTL tests.

Runs pytest on this directory. Pass --fast to skip the tests marked slow;
any other arguments are forwarded to pytest.
"""

import os
import sys

import pytest


def main(argv=None):
    """Run all tests in the current directory."""
    args = list(sys.argv[1:] if argv is None else argv)
    current_dir = os.path.dirname(os.path.abspath(__file__))

    # Add the project root to the Python path to ensure imports work correctly
    project_root = os.path.abspath(os.path.join(current_dir, "../../"))
    sys.path.insert(0, project_root)

    if "--fast" in args:
        args.remove("--fast")
        args += ["-m", "not slow"]

    return int(pytest.main([current_dir] + args))


if __name__ == "__main__":
    sys.exit(main())
