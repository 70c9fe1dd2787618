"""payplan: allocate monthly income across competing financial goals by
gradient ascent through a differentiable goal simulator."""

__version__ = "0.1.0"

from .neural.backend import available_backends, default_backend_name  # noqa: F401
