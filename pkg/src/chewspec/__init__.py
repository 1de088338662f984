# Initialize the chewspec package
from ._version import SCHEMA_VERSION, __version__

__all__ = ["SCHEMA_VERSION", "__version__"]
