import os
from typing import Dict

import pytest

from cncompact.config import DEFAULTS, ENV_PREFIX, normalize


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    for key in list(os.environ):
        if key.startswith(ENV_PREFIX):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def make_config():
    """Defaults with overrides, coerced the same way load_config does."""

    def factory(**overrides) -> Dict[str, object]:
        cfg = normalize(dict(DEFAULTS))
        cfg.update(normalize({key.upper(): value for key, value in overrides.items()}))
        return cfg

    return factory
