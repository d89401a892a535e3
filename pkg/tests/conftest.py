from pathlib import Path

import pytest

MODELS = Path(__file__).resolve().parent.parent / "models"


def model_path(name: str) -> Path:
    return MODELS / f"{name}.nano"


def model_source(name: str) -> str:
    return model_path(name).read_text()


@pytest.fixture
def wanderer_source() -> str:
    return model_source("single_wanderer")
