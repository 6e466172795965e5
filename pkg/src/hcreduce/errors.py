"""Exception hierarchy for the package.

The CLI maps each family (data format, configuration, I/O, stale artifact)
to its own nonzero exit code, so keep new exceptions under one of the
family bases below.
"""


class ReductionError(Exception):
    """Base class for every error raised by this package."""


class DataFormatError(ReductionError):
    """A file does not conform to its declared binary format."""


class FormatError(DataFormatError):
    """Bad magic number, record length, or field value."""


class TruncatedFile(DataFormatError):
    """A file ended before its header-declared payload."""


class CountMismatch(DataFormatError):
    """Image and label files declare different item counts."""


class ConfigError(ReductionError):
    """An operation was invoked with invalid parameters."""


class InvalidAlpha(ConfigError):
    """Reduction fraction outside [0, 1)."""


class InvalidCount(ConfigError):
    """A requested count is out of range."""


class InvalidSeeds(ConfigError):
    """k-means needs at least two seed centroids."""


class EmptyCluster(ConfigError):
    """An operation that needs members got an empty member list."""


class EmptyDataset(ConfigError):
    """An operation that needs data got a zero-row dataset."""


class EmptyTrain(ConfigError):
    """Classification requires a nonempty training set."""


class IoError(ReductionError):
    """Reading or writing an artifact failed at the OS level."""


class StaleArtifact(ReductionError):
    """An on-disk artifact no longer matches its source dataset."""


class StaleCondensedSet(StaleArtifact):
    """Condensed-set checksum does not match the supplied dataset."""


class StalePartition(StaleArtifact):
    """Partition dump checksum does not match the supplied dataset."""


class DegenerateGeometry(ReductionError):
    """Every member of a cluster coincides with its centroid."""
