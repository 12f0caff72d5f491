import threading
from cachetools import LRUCache
from config import CACHE_SIZE_ED, CACHE_SIZE_GAUSSIAN
from engines.ed import DenseState, ground_state_ed
from engines.gaussian import SlaterState, ground_state_quadratic
from lattice.specs import ModelSpec

_lock = threading.Lock()

_gaussian_cache = LRUCache(maxsize=CACHE_SIZE_GAUSSIAN)
_ed_cache = LRUCache(maxsize=CACHE_SIZE_ED)


def _cached(cache: LRUCache, key, compute_fn):
    with _lock:
        if key in cache:
            return cache[key]
    # computed outside the lock; the first stored value wins
    value = compute_fn()
    with _lock:
        return cache.setdefault(key, value)


def get_gaussian_ground_state(model: ModelSpec) -> SlaterState:
    return _cached(_gaussian_cache, model, lambda: ground_state_quadratic(model))


def get_ed_ground_state(model: ModelSpec) -> DenseState:
    return _cached(_ed_cache, model, lambda: ground_state_ed(model))


def cache_info() -> dict:
    with _lock:
        return {"gaussian": len(_gaussian_cache), "ed": len(_ed_cache)}


def invalidate():
    with _lock:
        _gaussian_cache.clear()
        _ed_cache.clear()
