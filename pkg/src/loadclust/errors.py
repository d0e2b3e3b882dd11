"""Exception types shared across the package."""


class LoadclustError(Exception):
    """Base class for package-specific errors."""


class CsvFormatError(LoadclustError):
    """Input CSV header or structure is unusable."""


class DuplicateReadingError(LoadclustError):
    """Two readings share the same (household, date, hour) key."""


class DegenerateProfileError(LoadclustError):
    """A household's median profile is the zero vector, so unit scaling is undefined."""


class DegenerateGeometryError(LoadclustError):
    """Input points are geometrically indistinguishable."""


class ConfigError(LoadclustError):
    """Unusable run configuration (CLI exit code 2)."""
