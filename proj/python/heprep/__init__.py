"""Python bindings for the HepRep event display core.

Trees come back as plain dicts in the wire JSON shape.
"""

import json

from . import _core
from ._core import FORMAT_VERSION, PROTOCOL_VERSION, Error, format_real, canonical_predicate

__all__ = [
    "Error",
    "FORMAT_VERSION",
    "PROTOCOL_VERSION",
    "Server",
    "Session",
    "canonical_predicate",
    "export_event",
    "format_real",
    "parse_xml",
    "query_xml",
    "tree_top_xml",
    "validate_xml",
]


def _request(request):
    return "" if request is None else json.dumps(request)


def export_event(seed, event_id, request=None, indent=True):
    return _core.export_event(seed, event_id, _request(request), indent)


def parse_xml(xml):
    return json.loads(_core.parse_xml(xml))


def validate_xml(xml):
    """List of (kind, location, message); empty means valid."""
    return _core.validate_xml(xml)


def query_xml(xml, request=None):
    return json.loads(_core.query_xml(xml, _request(request)))


def tree_top_xml(xml):
    return json.loads(_core.tree_top_xml(xml))


class Session:
    def __init__(self, seed):
        self._s = _core.Session(seed)

    @property
    def seed(self):
        return self._s.seed

    @property
    def event_id(self):
        return self._s.event_id

    def next_event(self):
        return self._s.next_event()

    def type_tree(self):
        return json.loads(self._s.type_tree())

    def get_instances(self, request=None):
        return json.loads(self._s.get_instances(_request(request)))

    def apply_action(self, name, target_path, **args):
        self._s.apply_action(name, target_path, args)

    def run_algorithm(self, name):
        name, status, report = self._s.run_algorithm(name)
        return {"name": name, "status": status, "report": report}


class Server:
    """Live server on its own session, already at event 1."""

    def __init__(self, seed, port=0, bind="127.0.0.1"):
        self._server = _core.Server(seed, port, bind)

    def __enter__(self):
        self._server.start()
        return self

    def __exit__(self, *exc):
        self._server.stop()

    def start(self):
        self._server.start()

    def stop(self):
        self._server.stop()

    @property
    def tcp_port(self):
        return self._server.tcp_port

    @property
    def ws_port(self):
        return self._server.ws_port
