"""Exception hierarchy shared across the package.

The CLI maps these to exit codes: InputError and its subclasses exit 1,
ProtocolError and its subclasses exit 2, anything else exits 3.
"""


class PeermapError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PeermapError):
    """Bad user input: missing files, malformed flag values, empty inputs."""


class ConfigError(InputError):
    """A configuration value violates a documented constraint."""


class ProtocolError(PeermapError):
    """Data does not conform to an expected wire or file format."""


class SchemaError(ProtocolError):
    """Structurally valid container whose contents do not match the schema.

    Carries a hint naming the stage expected to have produced the data.
    """


class TraceParseError(ProtocolError):
    """A trace or ground-truth line failed to parse.

    ``line_no`` is 1-based; ``field`` names the offending field when known.
    """

    def __init__(self, message: str, *, line_no: int | None = None, field: str | None = None):
        self.line_no = line_no
        self.field = field
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


class CodecError(ProtocolError):
    """Base class for binary codec failures (framing and serialization)."""


class InternalError(PeermapError):
    """An invariant the code relies on was violated; indicates a bug."""
