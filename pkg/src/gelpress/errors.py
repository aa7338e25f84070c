"""Exception hierarchy.

Every failure mode the CLI surfaces maps onto one of these; the CLI turns
them into stable exit codes (see gelpress.cli).
"""


class GelpressError(Exception):
    """Base class for all toolkit errors."""

    code = "E_GENERIC"


class DomainError(GelpressError):
    """An argument is outside the physical/numerical domain of an operation."""

    code = "E_DOMAIN"


class SaturationError(GelpressError):
    """Press too deep: indentation would exceed the gel thickness."""

    code = "E_SATURATION"


class NoContactError(GelpressError):
    """No frame in the sequence crosses the contact-intensity threshold."""

    code = "E_NO_CONTACT"


class ClipTooShortError(GelpressError):
    """Fewer than five distinct frames are available for clip selection."""

    code = "E_CLIP_TOO_SHORT"


class ConfigError(GelpressError):
    """Invalid, missing, or inconsistent configuration."""

    code = "E_CONFIG"


class ManifestError(GelpressError):
    """Dataset manifest is malformed, inconsistent, or future-versioned."""

    code = "E_MANIFEST"


class CheckpointError(GelpressError):
    """Checkpoint file is malformed, truncated, or future-versioned."""

    code = "E_CHECKPOINT"


class TrainingDiverged(GelpressError):
    """Loss became non-finite during optimization."""

    code = "E_DIVERGED"
