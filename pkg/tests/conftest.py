import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from decteam.problems import build_tiny_team  # noqa: E402


@pytest.fixture(scope="session")
def tiny():
    return build_tiny_team()


@pytest.fixture(scope="session")
def tiny_exact():
    return build_tiny_team(exact=True)


@pytest.fixture(scope="session")
def tiny_noshare():
    return build_tiny_team(share_actions=False)
