"""Example definition files shipped with the package."""

from importlib import resources


def path(name: str) -> str:
    """Filesystem path of a bundled ``.jet`` file, e.g. ``path("exx1.jet")``."""
    return str(resources.files(__name__) / name)


def names() -> list:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith(".jet"))
