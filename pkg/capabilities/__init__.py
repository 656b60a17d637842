# lunarnet/capabilities/__init__.py
# importing the modules registers their kinds
from . import energy, locomotion, signal_quality  # noqa: F401
