"""Error types shared across the package."""


class FisheyeError(Exception):
    """Base class for all package errors."""


class ContractViolationError(FisheyeError):
    """A caller broke an operation precondition (bad lengths, out-of-range ids, reentry)."""


class IntegrityError(FisheyeError):
    """A duplicate message stamp was observed; points at a broken channel layer."""


class ProtocolBugError(FisheyeError):
    """An internal state the protocol should make unreachable was reached."""


class MalformedHistoryError(FisheyeError):
    """A recorded history is internally inconsistent and cannot be checked."""


class LivenessError(FisheyeError):
    """The simulation can no longer make progress while programs are still blocked."""

    def __init__(self, message, stuck=None):
        super().__init__(message)
        self.stuck = stuck or []


class SizeCapExceededError(FisheyeError):
    """The brute-force oracle refuses inputs above its size cap."""
