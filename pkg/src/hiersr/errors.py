"""Exception types raised across the package.

Every contract violation gets its own class so callers (and tests) can
discriminate without string matching.  Value-style errors also inherit
ValueError so generic handlers keep working.
"""


class HierSRError(Exception):
    """Base class for all errors raised by this package."""


# --- volume containers ---------------------------------------------------

class LengthMismatch(HierSRError, ValueError):
    """Flat data length does not equal the product of the dims."""


class NonFiniteValue(HierSRError, ValueError):
    """A volume contains NaN or Inf."""


class NonPositiveForLog(HierSRError, ValueError):
    """Log normalization requires strictly positive values."""


class OutOfBounds(HierSRError, ValueError):
    """A region does not fit inside the enclosing volume."""


class ShapeMismatch(HierSRError, ValueError):
    """Two volumes (or a patch and a region) disagree on dims."""


class UnknownKind(HierSRError, ValueError):
    """Unrecognized synthetic-field kind."""


# --- resampling -----------------------------------------------------------

class OddDimension(HierSRError, ValueError):
    """2x downscaling requires every axis to be even and at least 2."""


class NotPowerOfTwo(HierSRError, ValueError):
    """Scale factor must be a power of two."""


class IndivisibleDimension(HierSRError, ValueError):
    """An axis is not divisible by the requested scale factor."""


class LevelOrder(HierSRError, ValueError):
    """Upscaling must go from a coarser level to a strictly finer one."""


# --- octrees --------------------------------------------------------------

class EmptyVolume(HierSRError, ValueError):
    """Cannot build a tree from a volume with no voxels."""


class OrphanSingleVoxel(HierSRError):
    """A single-voxel leaf has no mergeable same-shape siblings (corrupt tree)."""


# --- metrics --------------------------------------------------------------

class TooSmallForWindow(HierSRError, ValueError):
    """Volume axes are smaller than the SSIM window."""


# --- model backend --------------------------------------------------------

class BadSpec(HierSRError, ValueError):
    """Endpoint spec string does not parse."""


class ConnectFailed(HierSRError):
    """Could not reach the inference server."""


class HandshakeTimeout(HierSRError, TimeoutError):
    """Server did not answer the handshake in time."""


class Timeout(HierSRError, TimeoutError):
    """Server did not answer an inference request in time."""


class ProtocolViolation(HierSRError):
    """Server sent a frame that breaks the wire contract."""


class ServerError(HierSRError):
    """Server answered with an error frame; the message is its payload."""


class PayloadTooLarge(HierSRError, ValueError):
    """Request payload exceeds the configured cap."""


# --- file formats ---------------------------------------------------------

class CorruptHeader(HierSRError, ValueError):
    """Volume header file is malformed."""


class UnsupportedElementType(HierSRError, ValueError):
    """Volume header declares an element type other than f32."""


class HeaderPayloadMismatch(HierSRError, ValueError):
    """Payload byte length disagrees with the header dims."""


class BadMagic(HierSRError, ValueError):
    """File does not start with the expected magic bytes."""


class VersionUnsupported(HierSRError, ValueError):
    """File format version is newer than this reader."""


class InvariantViolation(HierSRError, ValueError):
    """A decoded tree breaks a structural invariant; the message names it."""
