"""Exception types shared across the codec."""


class CodecError(Exception):
    """Base class for codec failures (bad streams, bad configs, bad state)."""


class StreamError(CodecError):
    """Entropy-coded stream is malformed: bad tag, bad header, symbol out of support."""


class ContainerError(CodecError):
    """Bitstream container is malformed: bad magic/version, truncated chunk,
    chunk order disagreeing with the schedule."""


class ScheduleError(CodecError):
    """Coding schedule cannot be built or does not cover the sequence."""
