from multiprocessing.pool import ThreadPool
from typing import Any, BinaryIO, Callable, Dict, Iterable, List, Optional, TypeVar, Union

from charset_normalizer import detect
import networkx as nx
import pandas as pd
from pandas.core.common import flatten

T = TypeVar("T")
R = TypeVar("R")


def listwrap(value: Any) -> List[Any]:
    """
    Returns a flattened list from the given object or iterable, keeping order.

    For use in public functions which accept arguments or config values that
    can be one number or a list of numbers.
    """
    return list(flatten([value]))


def remove_node_attributes(G: nx.DiGraph, attributes: Union[str, Iterable[str]]):
    """
    Return a copy of the graph with the given attributes
    deleted from all nodes.
    """
    G = G.copy()
    for _, data in G.nodes(data=True):
        for attribute in listwrap(attributes):
            if attribute in data:
                del data[attribute]
    return G


def detect_encoding(f: BinaryIO, limit: int = 2500) -> str:
    """
    Return encoding of provided input stream.

    Most of the time it's unicode, but if we are unable to decode the input
    natively, use `charset_normalizer` to determine the encoding heuristically.
    """
    unicode_decodable = True

    for line_no, line in enumerate(f):
        try:
            line.decode("utf-8")
        except UnicodeDecodeError:
            unicode_decodable = False
            break

        if line_no > limit:
            break

    if unicode_decodable:
        return "utf-8"

    f.seek(0)
    return detect(f.read())["encoding"]


def empty_frame(columns: Optional[Iterable[str]] = None) -> pd.DataFrame:
    columns = [] if columns is None else list(columns)
    empty: Dict = {col: [] for col in columns}
    return pd.DataFrame(empty, columns=columns)


def parallel_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map ``func`` over ``items`` on up to ``jobs`` threads, keeping input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    pool = ThreadPool(min(jobs, len(items)))
    try:
        return pool.map(func, items)
    finally:
        pool.terminate()
