"""Exception taxonomy used to pick CLI exit codes.

Input problems (bad files, bad flags, impossible requests) surface as
ValueError subclasses or IngestError and exit with code 2. InvariantError
means the package itself broke one of its own guarantees and exits 3.
"""


class InvariantError(RuntimeError):
    """An internal consistency check failed; this is a bug, not bad input."""
