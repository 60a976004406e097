"""Energy-detection cooperative spectrum sensing over mixture-gamma fading."""

from ._settings import SETTINGS, ConvergenceError, DomainError, Settings

__version__ = "0.1.0"

__all__ = ["SETTINGS", "Settings", "DomainError", "ConvergenceError", "__version__"]
