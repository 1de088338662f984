def test_version_availability():
    from chewspec import __version__

    assert isinstance(__version__, str)
    assert len(__version__.split(".")) >= 3


def test_schema_version():
    from chewspec._version import SCHEMA_VERSION, version_tuple

    assert SCHEMA_VERSION >= 1
    assert len(version_tuple) == 3
