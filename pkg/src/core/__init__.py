from core.numerics import RngStream
from core.settings import settings

__all__ = ["settings", "RngStream"]
