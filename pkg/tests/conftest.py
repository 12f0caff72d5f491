import pytest

from services import cache


@pytest.fixture(autouse=True)
def fresh_cache():
    cache.invalidate()
    yield
    cache.invalidate()
