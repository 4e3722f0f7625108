import pathlib
import subprocess
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def pytest_configure(config):
    # the default SMT backend needs the pinned z3 wasm module; fetch it once
    mods = ROOT / "solver" / "node_modules" / "z3-solver"
    if not mods.exists():
        subprocess.run(
            ["npm", "install"], cwd=ROOT / "solver", check=True,
            capture_output=True,
        )


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.prob").read_text()
