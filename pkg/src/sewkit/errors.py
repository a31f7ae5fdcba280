"""Error type shared by every sewkit module."""

from __future__ import annotations


class SewError(Exception):
    """Domain error carrying a stable machine-readable code.

    ``location`` is a JSON-pointer-like path (``/panels/0/edges/2``) or a
    particle / token index, depending on the raising module.
    """

    def __init__(self, code: str, message: str = "", location=None, **details):
        self.code = code
        self.message = message or code
        self.location = location
        self.details = details
        super().__init__(f"{code}: {self.message}" + (f" at {location}" if location is not None else ""))

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": self.message}
        if self.location is not None:
            out["location"] = self.location
        out.update(self.details)
        return out


# codes that mean "the input could not be read", used by the CLI for exit 2
PARSE_ERRORS = frozenset({"MALFORMED_JSON", "SCHEMA_VIOLATION", "VERSION_UNSUPPORTED", "FILE_NOT_FOUND", "CONFIG_ERROR", "TOKEN_PARSE_ERROR"})
