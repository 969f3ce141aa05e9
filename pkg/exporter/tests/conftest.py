import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"

sys.path.insert(0, str(HERE.parent / "src"))  # fresh-clone runs

# The primary toolkit lives one level up; make its CLI reachable in
# subprocesses even when neither package is installed.
PRIMARY_SRC = HERE.parent.parent / "src"


@pytest.fixture
def fixtures():
    return FIXTURES


def run_primary(*args):
    """Invoke the primary toolkit through its CLI, the only interface this
    package is allowed to touch."""
    env = dict(os.environ)
    env["PYTHONPATH"] = str(PRIMARY_SRC) + os.pathsep + env.get("PYTHONPATH", "")
    return subprocess.run(
        [sys.executable, "-m", "entropick", *args],
        capture_output=True, text=True, env=env,
    )


@pytest.fixture
def primary_cli():
    return run_primary


@pytest.fixture
def read_jsonl():
    def _read(path):
        return [json.loads(line) for line in Path(path).read_text().splitlines()]

    return _read
