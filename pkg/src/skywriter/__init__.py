"""skywriter: letter gestures from glove accelerometer streams, recognized by
a from-scratch random forest and light-painted by a simulated quadcopter."""

__version__ = "0.1.0"

from .glyph import LABELS

__all__ = ["LABELS", "__version__"]
