"""DoS-resilient authenticated vehicular beaconing: protocol library and
discrete-event simulator."""

from .engine import run
from .params import SimConfig

__all__ = ["run", "SimConfig"]
__version__ = "0.1.0"
