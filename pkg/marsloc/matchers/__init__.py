from .base import *
from .filtering import *
from .ncc import *
from .phase import *
from .registry import *

__all__ = (
    "DEFAULT_SCALES",
    "Matcher",
    "NCCMatcher",
    "PhaseMatcher",
    "available_matchers",
    "filter_matches",
    "get_matcher",
    "ncc_match",
    "normxcorr2_valid",
    "phase_correlate",
    "register_matcher",
)
