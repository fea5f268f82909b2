"""Consecutive-measurement tradeoff bounds, CHSH game bounds and the
security parameters that follow from them."""
from . import cmt, crypto, games, jordan, qla, stress
from .config import DEFAULT, Tolerances
from .errors import CmtError

__all__ = ["cmt", "crypto", "games", "jordan", "qla", "stress", "DEFAULT", "Tolerances", "CmtError"]
__version__ = "0.1.0"
