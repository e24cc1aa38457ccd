from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("bsdlab")
except PackageNotFoundError:  # pragma: no cover
    # running from a source checkout
    __version__ = "0.0.0+unknown"
