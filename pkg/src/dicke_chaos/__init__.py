"""Dissipative OTOC dynamics of Dicke-class atom-cavity models."""

__version__ = "0.1.0"

from .hilbert import HilbertGeometry, OperatorMatrix, SpinMode
from .models import BathSpec, ModelSpec, Variant

__all__ = ["HilbertGeometry", "OperatorMatrix", "SpinMode", "BathSpec", "ModelSpec",
           "Variant", "__version__"]
