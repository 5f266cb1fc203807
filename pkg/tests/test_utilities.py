import io
import threading

import networkx as nx
import pandas as pd

from norminflate.utilities import (
    detect_encoding,
    empty_frame,
    listwrap,
    parallel_map,
    remove_node_attributes,
)


def test_listwrap():
    assert listwrap(4) == [4]
    assert listwrap([4]) == [4]
    assert listwrap((4, 8)) == [4, 8]
    assert listwrap([4, [8, 16]]) == [4, 8, 16]
    assert listwrap("rs") == ["rs"]


def test_remove_node_attributes():
    G = nx.DiGraph()
    G.add_node("params", converters={"r": int}, defaults={"r": 4})
    G.add_node("output", defaults={"jobs": 1}, label="out")

    X = remove_node_attributes(G, "defaults")
    Y = remove_node_attributes(G, ["defaults", "label"])

    assert G.nodes["params"] == {"converters": {"r": int}, "defaults": {"r": 4}}
    assert G.nodes["output"] == {"defaults": {"jobs": 1}, "label": "out"}

    assert id(X) != id(G)
    assert X.nodes["params"] == {"converters": {"r": int}}
    assert X.nodes["output"] == {"label": "out"}

    assert id(Y) != id(G)
    assert Y.nodes["output"] == {}


def test_empty_frame():
    actual = empty_frame(["r", "t"])

    expected = pd.DataFrame({"r": [], "t": []}, columns=["r", "t"])

    assert actual.equals(expected)
    assert empty_frame().empty
    assert list(empty_frame().columns) == []


def test_detect_encoding():
    # straight up ascii is a subset of unicode
    assert detect_encoding(io.BytesIO(b'{"r": 4}')) == "utf-8"

    # actual unicode
    assert detect_encoding(io.BytesIO(b'{"output_dir": "r\xc3\xa9sultats"}')) == "utf-8"

    # non-unicode; no specific characterset is asserted since charset-normalizer
    # heuristics change between releases
    enc = detect_encoding(io.BytesIO(b'{"output_dir": "r\xe9sultats d\x27\xe9t\xe9"}'))
    assert enc and enc != "utf-8"


def test_parallel_map_keeps_order():
    items = list(range(20))

    assert parallel_map(lambda x: x * x, items, jobs=1) == [x * x for x in items]
    assert parallel_map(lambda x: x * x, items, jobs=4) == [x * x for x in items]
    assert parallel_map(lambda x: x, [], jobs=4) == []


def test_parallel_map_uses_threads():
    seen = set()

    def record(x):
        seen.add(threading.get_ident())
        return x

    assert parallel_map(record, range(8), jobs=1) == list(range(8))
    assert seen == {threading.get_ident()}
