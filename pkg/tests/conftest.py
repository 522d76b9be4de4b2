import pathlib

import pytest

from pyramid_hls.manifest import default_manifest
from pyramid_hls.report import parse_report

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
GOLDEN_PATH = REPO_ROOT / "fixtures" / "golden_a.rpt"


@pytest.fixture(scope="session")
def golden_text():
    return GOLDEN_PATH.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def golden_report(golden_text):
    return parse_report(golden_text)


@pytest.fixture(scope="session")
def manifest():
    return default_manifest()
