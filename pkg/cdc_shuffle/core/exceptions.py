from typing import List, Optional, Tuple


class CDCError(Exception):
    """Base class for every error raised by cdc_shuffle."""


class InstanceValidationError(CDCError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Instance is not admissible: " + "; ".join(self.violations))


class InstanceFormatError(CDCError):
    """Malformed or out-of-range instance document."""


class DescriptorError(CDCError):
    """Generator descriptor cannot produce an instance (divisibility, impossible loads, exhausted resampling)."""


class FieldError(CDCError):
    """Finite-field construction or dimension problem."""


class SingularSystemError(CDCError):
    """A one-shot decode hit a singular system. Vandermonde blocks make this an invariant breach."""


class DecodeRetryNeeded(CDCError):
    """A random coefficient draw left a receiver's joint system rank deficient."""

    def __init__(self, cluster: Tuple[int, ...], round_z: int, receiver: int):
        self.cluster = cluster
        self.round_z = round_z
        self.receiver = receiver
        super().__init__(f"Receiver {receiver} cannot solve round z={round_z} of cluster {list(cluster)}; re-draw needed")


class RetryExhaustedError(CDCError):
    def __init__(self, cluster: Tuple[int, ...], round_z: int, attempts: int):
        self.cluster = cluster
        self.round_z = round_z
        self.attempts = attempts
        super().__init__(f"Round z={round_z} of cluster {list(cluster)} still singular after {attempts} attempts")


class CertificateError(CDCError):
    """The non-zero path construction failed; the beta witness does not satisfy the feasible condition."""


class TinyOracleLimitError(CDCError):
    def __init__(self, needed: int, limit: int, detail: Optional[str] = None):
        self.needed = needed
        self.limit = limit
        msg = f"Brute-force oracle supports at most {limit} needed IVs, instance has {needed}"
        super().__init__(msg if detail is None else f"{msg} ({detail})")
