"""Pleated and folded singular points of implicit ODEs F(x, y, y') = 0."""
from .classify import SingularClass, classify_singular_point
from .lift import ImplicitOde

__version__ = "0.1.0"
__all__ = ["ImplicitOde", "SingularClass", "classify_singular_point", "__version__"]
