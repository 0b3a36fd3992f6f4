from .client.client import U2VChannelClient
from .__version__ import PACKAGE_VERSION

__all__ = [
    "U2VChannelClient",
    "PACKAGE_VERSION"
]
