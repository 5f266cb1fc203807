import logging
import os
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Set

import networkx as nx

from .errors import ConfigError
from .lacunary import LacunaryParams
from .parsers import (
    parse_bool,
    parse_float,
    parse_float_list,
    parse_int,
    parse_int_list,
    parse_str,
)
from .spectral import SimConfig
from .trig_field import TGridSpec
from .utilities import remove_node_attributes

logger = logging.getLogger(__name__)

COMMANDS = ("construct", "picard", "simulate", "besov", "sweep", "witness")

OUTPUT_DIR_ENV = "NORMINFLATE_OUTPUT_DIR"


def empty_config() -> nx.DiGraph:
    return nx.DiGraph()


def default_config() -> nx.DiGraph:
    G = empty_config()
    add_edge_config(G)
    add_node_config(G)
    return G


def add_edge_config(g: nx.DiGraph) -> nx.DiGraph:
    """Stage nodes feed the commands that consume their keys."""
    g.add_edges_from(
        [
            ("params", "construct"),
            ("params", "picard"),
            ("iterates", "picard"),
            ("params", "simulate"),
            ("solver", "simulate"),
            ("params", "besov"),
            ("tgrid", "besov"),
            ("params", "sweep"),
            ("tgrid", "sweep"),
            ("bounds", "sweep"),
            ("params", "witness"),
            ("search", "witness"),
        ]
    )
    g.add_edges_from(("output", command) for command in COMMANDS)
    return g


def add_node_config(g: nx.DiGraph) -> nx.DiGraph:
    g.add_nodes_from(
        [
            (
                "params",
                {
                    "converters": {
                        "r": parse_int,
                        "beta": parse_float,
                        "K": parse_int,
                        "nu": parse_float,
                        "delta": parse_float,
                        "s": parse_float,
                        "amplitude": parse_float,
                    },
                    "defaults": {
                        "r": 4,
                        "beta": 0.45,
                        "K": 4,
                        "nu": 0.2,
                        "delta": 0.01,
                        "s": 0.5,
                        "amplitude": 1.0,
                    },
                },
            ),
            (
                "tgrid",
                {
                    "converters": {
                        "t_min": parse_float,
                        "t_max": parse_float,
                        "t_points": parse_int,
                        "refine": parse_int,
                    },
                    "defaults": {
                        "t_min": 1e-8,
                        "t_max": 4.0,
                        "t_points": 400,
                        "refine": 3,
                    },
                },
            ),
            (
                "iterates",
                {"converters": {"t": parse_float}, "defaults": {"t": 0.1}},
            ),
            (
                "solver",
                {
                    "converters": {
                        "N": parse_int,
                        "dt": parse_float,
                        "T": parse_float,
                        "snapshot_times": parse_float_list,
                    },
                    "defaults": {"N": 32, "dt": 1e-3, "T": 0.1, "snapshot_times": []},
                },
            ),
            (
                "bounds",
                {
                    "converters": {
                        "rs": parse_int_list,
                        "sweep_t_min": parse_float,
                        "sweep_t_points": parse_int,
                        "trials": parse_int,
                        "gamma": parse_float,
                    },
                    "defaults": {
                        "rs": [4, 8, 16, 32, 64],
                        "sweep_t_min": 1e-4,
                        "sweep_t_points": 17,
                        "trials": 20,
                        "gamma": 1.0,
                    },
                },
            ),
            (
                "search",
                {
                    "converters": {
                        "epsilon": parse_float,
                        "witness_nu": parse_float,
                        "r_max": parse_int,
                    },
                    "defaults": {"epsilon": 0.9, "witness_nu": 0.5, "r_max": 2 ** 14},
                },
            ),
            (
                "output",
                {
                    "converters": {
                        "command": parse_str,
                        "output_dir": parse_str,
                        "deterministic": parse_bool,
                        "jobs": parse_int,
                        "plot": parse_bool,
                        "seed": parse_int,
                    },
                    "defaults": {
                        "command": "construct",
                        "output_dir": None,
                        "deterministic": False,
                        "jobs": 1,
                        "plot": False,
                        "seed": 0,
                    },
                },
            ),
        ]
    )
    return g


def check_config(G: nx.DiGraph) -> None:
    if not nx.is_directed_acyclic_graph(G):
        raise ConfigError("Config must be a DAG")
    seen: Dict[str, str] = {}
    for node, data in G.nodes(data=True):
        for key in data.get("converters", {}):
            if key in seen:
                raise ConfigError(f"Key {key!r} is declared by both {seen[key]} and {node}")
            seen[key] = node


def all_keys(G: nx.DiGraph) -> Set[str]:
    return {key for _, data in G.nodes(data=True) for key in data.get("converters", {})}


def command_keys(G: nx.DiGraph, command: str) -> List[str]:
    """Keys read by ``command``, in stage order."""
    if command not in COMMANDS or command not in G:
        raise ConfigError(f"Unknown command {command!r}; expected one of {COMMANDS}")
    stages = sorted(nx.ancestors(G, command), key=list(G.nodes).index)
    return [key for stage in stages for key in G.nodes[stage].get("converters", {})]


def _converter(G: nx.DiGraph, key: str):
    for _, data in G.nodes(data=True):
        if key in data.get("converters", {}):
            return data["converters"][key]
    raise ConfigError(f"Unknown config key {key!r}")


def _default(G: nx.DiGraph, key: str) -> Any:
    for _, data in G.nodes(data=True):
        if key in data.get("defaults", {}):
            value = data["defaults"][key]
            if key == "output_dir" and value is None:
                return os.environ.get(OUTPUT_DIR_ENV, "norminflate-output")
            return value
    return None


class RunConfig(NamedTuple):
    command: str
    params: LacunaryParams
    sim: Optional[SimConfig]
    tgrid: TGridSpec
    output_dir: str
    deterministic: bool
    seed: int
    jobs: int
    plot: bool
    values: Dict[str, Any]


def resolve(
    values: Mapping[str, Any],
    overrides: Optional[Mapping[str, Any]] = None,
    config: Optional[nx.DiGraph] = None,
) -> Dict[str, Any]:
    """Merge defaults < ``values`` < ``overrides`` for the selected command.

    Every key must be declared by some stage; keys the command does not read
    are dropped.
    """
    G = default_config() if config is None else config
    check_config(G)
    merged = dict(values)
    merged.update(overrides or {})
    known = all_keys(G)
    for key in merged:
        if key not in known:
            raise ConfigError(f"Unknown config key {key!r}")

    try:
        command = parse_str(merged.get("command", _default(G, "command")))
    except ValueError as e:
        raise ConfigError(f"Invalid value for 'command': {e}") from e
    keys = command_keys(G, command)

    resolved: Dict[str, Any] = {}
    for key in keys:
        raw = merged.get(key, _default(G, key))
        try:
            value = _converter(G, key)(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value for {key!r}: {e}") from e
        resolved[key] = list(value) if isinstance(value, tuple) else value

    for key in sorted(set(merged) - set(keys)):
        logger.debug("Key %r is not read by %s", key, command)
    return resolved


def run_config(values: Mapping[str, Any]) -> RunConfig:
    """Typed view of a resolved config."""
    command = values["command"]
    params = LacunaryParams(
        **{key: values[key] for key in ("r", "beta", "K", "nu", "delta", "s", "amplitude")}
    )
    jobs = values["jobs"]
    if jobs < 1:
        raise ConfigError(f"'jobs' must be at least 1, got {jobs}")
    deterministic = values["deterministic"]
    sim = None
    if "N" in values:
        sim = SimConfig(
            N=values["N"],
            dt=values["dt"],
            T=values["T"],
            snapshot_times=tuple(values["snapshot_times"]),
            workers=1 if deterministic else jobs,
        )
    tgrid = TGridSpec()
    if "t_min" in values:
        tgrid = TGridSpec(
            values["t_min"], values["t_max"], values["t_points"], values["refine"]
        )
    return RunConfig(
        command,
        params,
        sim,
        tgrid,
        values["output_dir"],
        deterministic,
        values["seed"],
        jobs,
        values["plot"],
        dict(values),
    )


def config_schema(G: Optional[nx.DiGraph] = None) -> Dict[str, Any]:
    """JSON schema of the keys declared by the stage graph."""
    G = default_config() if G is None else G
    types = {
        parse_int: {"type": "integer"},
        parse_float: {"type": "number"},
        parse_bool: {"type": "boolean"},
        parse_str: {"type": "string"},
        parse_int_list: {"type": "array", "items": {"type": "integer"}},
        parse_float_list: {"type": "array", "items": {"type": "number"}},
    }
    plain = remove_node_attributes(G, "defaults")
    properties = {}
    for node, data in plain.nodes(data=True):
        for key, converter in data.get("converters", {}).items():
            properties[key] = {**types[converter], "description": f"{node} stage"}
    properties["command"]["enum"] = list(COMMANDS)
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "norminflate run configuration",
        "type": "object",
        "properties": properties,
        "additionalProperties": False,
    }
