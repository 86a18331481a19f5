"""Frame-oriented spectral one-time-pad signal cipher and benchmark harness."""

__version__ = "0.1.0"

from .frames import (
    SignalFrame,
    SpectrumFrame,
    analyze,
    synthesize,
    wrap_angle,
)
from .keystream import (
    KeyFrame,
    KeystreamGenerator,
    SyncConfig,
    current_counter,
    initial_counter,
    key_frame,
)
from .cipher import (
    CipherConfig,
    decrypt,
    decrypt_frame,
    encrypt,
    encrypt_frame,
)
from .sync import CaptureBuffer, infer_epsilon, whiteness_metric

__all__ = [
    "SignalFrame",
    "SpectrumFrame",
    "analyze",
    "synthesize",
    "wrap_angle",
    "KeyFrame",
    "KeystreamGenerator",
    "SyncConfig",
    "current_counter",
    "initial_counter",
    "key_frame",
    "CipherConfig",
    "encrypt",
    "decrypt",
    "encrypt_frame",
    "decrypt_frame",
    "CaptureBuffer",
    "infer_epsilon",
    "whiteness_metric",
    "__version__",
]
