import pathlib
import shutil
import subprocess

import pytest

PLUGIN_DIR = pathlib.Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def built_plugins():
    """Build the example libraries with make; skip when no toolchain exists."""
    if shutil.which("cc") is None and shutil.which("gcc") is None:
        pytest.skip("no C compiler available")
    if shutil.which("make") is None:
        pytest.skip("make not available")
    subprocess.run(["make", "-C", str(PLUGIN_DIR)], check=True,
                   capture_output=True)
    return PLUGIN_DIR
