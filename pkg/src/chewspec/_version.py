# Single source of the package version; pyproject reads the same number.
__version__ = "0.1.0"
__version_tuple__ = version_tuple = (0, 1, 0)

# Bumped whenever an on-disk artifact layout changes (specs, corpora, reports
# or transcripts).
SCHEMA_VERSION = 1
