"""Exception types shared across the package."""


class VpscError(Exception):
    """Base class for all library errors."""


class FrameLengthError(VpscError, ValueError):
    """Frame length is not a power of two (or is below the minimum of 8)."""


class SymmetryError(VpscError, ValueError):
    """Spectrum violates the real-signal conjugate-symmetry structure."""


class CounterError(VpscError, ValueError):
    """Keystream counter outside [0, period)."""


class ClockError(VpscError, ValueError):
    """Receiver time precedes the stream start time."""


class PhiViolationError(VpscError, ValueError):
    """A masked plaintext magnitude reaches or exceeds the cipher modulus."""


class PermutationError(VpscError, ValueError):
    """Scrambler key is not a bijection on the masked bins."""


class ConfigError(VpscError, ValueError):
    """Inconsistent or out-of-range configuration."""


class UndefinedMetricError(VpscError, ValueError):
    """Whiteness metric requested for an all-zero frame."""


class SyncFailure(VpscError, RuntimeError):
    """No decryption-whiteness peak cleared the detection threshold."""
