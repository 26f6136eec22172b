"""Exception taxonomy shared across the engine."""


class VivifyError(Exception):
    """Base class for all engine errors."""


# --- wire protocol / frame transport ---

class ProtocolError(VivifyError):
    pass


class Truncated(ProtocolError):
    pass


class BadMagic(ProtocolError):
    pass


class BadChecksum(ProtocolError):
    pass


class UnknownKind(ProtocolError):
    pass


class Unreachable(ProtocolError):
    pass


class FrameTimeout(ProtocolError):
    pass


class MalformedFrame(ProtocolError):
    pass


class SourceLost(VivifyError):
    """Frame stream ended before the consumer was done with it."""


# --- vision pipeline ---

class EmptyMask(VivifyError):
    pass


class TooFewSamples(VivifyError):
    pass


class ClassListMismatch(VivifyError):
    pass


class TrainerFailure(VivifyError):
    pass


class IoFailure(VivifyError):
    pass


# --- persona ---

class PersonaError(VivifyError):
    pass


class ParseError(PersonaError):
    pass


class MissingField(PersonaError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing field: {field}")


class InvalidVoice(PersonaError):
    pass


class InvalidLanguage(PersonaError):
    pass


class UnknownField(PersonaError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"unknown field: {field}")


class NotFound(PersonaError):
    pass


class InvalidGeneration(PersonaError):
    """Backend produced a document that fails the persona schema."""


# --- backends ---

class BackendFailure(VivifyError):
    pass


class TransportError(BackendFailure):
    pass


class BackendTimeout(TransportError):
    pass


class SchemaError(BackendFailure):
    pass


class RemoteError(BackendFailure):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"remote error {status}: {body[:200]}")


# --- dialogue ---

class EmptyTranscript(VivifyError):
    pass


class SynthFailure(VivifyError):
    """Synthesis of one segment failed.

    Carries the index of the first failed segment plus every clip that was
    still synthesized, so the caller can play the prefix before the gap.
    """

    def __init__(self, segment_index: int, clips: list):
        self.segment_index = segment_index
        self.clips = clips
        super().__init__(f"synthesis failed for segment {segment_index}")


# --- cli ---

class UsageError(VivifyError):
    pass
