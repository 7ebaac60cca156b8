import pathlib
import re

from holograph import __version__

PYPROJECT = pathlib.Path(__file__).parents[1] / "pyproject.toml"


def test_version():
    declared = re.search(r'^version = "(.+)"$', PYPROJECT.read_text(), re.MULTILINE)
    assert declared is not None
    assert __version__ == declared.group(1)
