"""
FTL (finite-type lab) computes weights, extremal bases, pseudo-balls,
adapted plurisubharmonic functions and Bergman kernel asymptotics on
polynomial model domains {Re z_n + P(z') < 0}.
"""

# Direct imports for convenience
from .domains import Frame, ModelDomain, levi_eigen_frame, load_domain, make_domain, tangent_frame
from .exceptions import FTLError
from .parser import parse_domain, pretty_print
from .weights import FrameProvider, WeightEngine, check_eb1, check_eb2, separation_certificate, weight

# Define version
__version__ = "0.1.0"

# CLI entry point
def cli():
    """Command-line interface entry point."""
    from .cli import main
    return main()

# What to import with "from ftl import *"
__all__ = [
    "FTLError",
    "Frame",
    "FrameProvider",
    "ModelDomain",
    "WeightEngine",
    "check_eb1",
    "check_eb2",
    "levi_eigen_frame",
    "load_domain",
    "make_domain",
    "parse_domain",
    "pretty_print",
    "separation_certificate",
    "tangent_frame",
    "weight",
]
