import logging
from threading import RLock
from typing import Any, Callable, Dict, Hashable, Tuple

from .lacunary import (
    LacunaryParams,
    data_norms,
    make_frequencies,
    make_initial_data,
)
from .picard import PicardState, first_iterates, rho1_split
from .trig_field import TrigField

logger = logging.getLogger(__name__)


def _lab_entry(key: str) -> property:
    def getter(self) -> Any:
        return self.get(key)

    return property(getter)


class Lab(object):
    """Construction objects for one parameter point, built on first use.

    Keys are either names (``"initial_data"``) or ``(name, argument)`` pairs
    such as ``("picard", 0.25)``. Each key has its own lock so concurrent
    sweep points never build the same object twice.
    """

    def __init__(self, params: LacunaryParams):
        self.params = params
        self._cache: Dict[Hashable, Any] = {}
        self._shared_lock = RLock()
        self._locks: Dict[Hashable, RLock] = {}
        self._builders: Dict[str, Callable[..., Any]] = {
            "frequencies": lambda: make_frequencies(params),
            "initial_data": lambda: make_initial_data(params),
            "picard": self._build_picard,
            "rho1_parts": self._build_rho1_parts,
            "data_norms": lambda s: data_norms(params, s),
        }

    def _lock(self, key: Hashable) -> RLock:
        with self._shared_lock:
            return self._locks.setdefault(key, RLock())

    def get(self, key: Hashable) -> Any:
        with self._lock(key):
            value = self._cache.get(key)
            if value is None:
                name, args = (key, ()) if isinstance(key, str) else (key[0], key[1:])
                builder = self._builders.get(name)
                if builder is None:
                    raise KeyError(f"Unknown lab entry: {name!r}")
                logger.debug("Building %s for %s", key, self.params)
                value = builder(*args)
                self.set(key, value)
            return self._cache[key]

    def set(self, key: Hashable, value: Any) -> None:
        with self._lock(key):
            self._cache[key] = value

    frequencies = _lab_entry("frequencies")
    initial_data = _lab_entry("initial_data")

    def picard(self, t: float) -> PicardState:
        return self.get(("picard", float(t)))

    def rho1_parts(self, t: float) -> Tuple[TrigField, TrigField, TrigField]:
        """The three pieces of rho1, reusing a cached Picard state when present."""
        state = self._cache.get(("picard", float(t)))
        if state is not None:
            return state.rho1_parts
        return self.get(("rho1_parts", float(t)))

    def data_norms(self, s: float = 1.0):
        return self.get(("data_norms", float(s)))

    def _build_picard(self, t: float) -> PicardState:
        u0, rho0 = self.initial_data
        return first_iterates(u0, rho0, t)

    def _build_rho1_parts(self, t: float) -> Tuple[TrigField, TrigField, TrigField]:
        u0, rho0 = self.initial_data
        return rho1_split(u0, rho0, t)
