"""Multi-speaker DoA estimation from microphone-array audio and face detections."""

from ._avdoa import *  # noqa: F401,F403
from ._avdoa import Error, __doc__  # noqa: F401

MODEL_KINDS = ("avc", "avaw", "gcc_only")
