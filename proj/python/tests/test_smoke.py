import asyncio
import json
import socket

import pytest

import heprep


def test_reals_and_predicates():
    assert heprep.format_real(0.1) == "0.1"
    assert heprep.format_real(1e21) == "1e21"
    assert heprep.format_real(1e-7) == "1e-7"
    assert heprep.canonical_predicate("Momentum > 1.0") == "Momentum>1.0"
    assert heprep.canonical_predicate("NHits >= 3") == "NHits>=3"
    assert heprep.canonical_predicate("Energy exists") == "Energy exists"
    with pytest.raises(heprep.Error) as info:
        heprep.canonical_predicate("Chi2>>1")
    assert info.value.args[0] == "BAD_REQUEST"


def test_export_parse_validate_query():
    xml = heprep.export_event(42, 1)
    assert xml.startswith("<?xml")
    assert heprep.validate_xml(xml) == []
    doc = heprep.parse_xml(xml)
    assert {t["name"] for t in doc["typetree"]["types"]} == {"Geometry", "Track", "CalCrystal", "AcdTile"}
    assert heprep.export_event(42, 1) == xml

    tracks = heprep.query_xml(xml, {"typeNames": ["Track"], "predicates": ["Chi2>=0"]})
    assert tracks["instances"]
    assert all(i["type"] == "Track" for i in tracks["instances"])

    top = heprep.tree_top_xml(xml)
    assert len(top["roots"]) == len(doc["instancetree"]["instances"])

    only_tracks = heprep.export_event(42, 1, {"typeNames": ["Track"]})
    assert '<instance type="CalCrystal"' not in only_tracks


def test_bad_xml_raises():
    with pytest.raises(heprep.Error) as info:
        heprep.parse_xml("<heprep")
    assert info.value.args[0] == "XML_SYNTAX"


def test_session_refit():
    s = heprep.Session(42)
    assert s.event_id == 0
    assert s.next_event() == 1
    result = s.get_instances({"typeNames": ["Track", "Track/TrackHit"]})
    track = max(result["instances"], key=lambda i: len(i["points"]))
    path = next(v["value"] for v in track["attvalues"] if v["name"] == "origPath")
    n = len(track["points"])
    s.apply_action("removeHitAndRefit", path, hitIndex=0)
    after = s.get_instances({"typeNames": ["Track"]})
    refit = next(i for i in after["instances"] if {"name": "origPath", "kind": "text", "value": path} in i["attvalues"])
    assert len(refit["points"]) == n - 1
    with pytest.raises(heprep.Error):
        s.apply_action("removeHitAndRefit", path, hitIndex=99)
    assert s.run_algorithm("summarize")["report"].startswith("eventId=1")


def _rpc(sock, f, frame):
    sock.sendall((json.dumps(frame) + "\n").encode())
    return json.loads(f.readline())


def test_server_tcp():
    with heprep.Server(7) as server:
        with socket.create_connection(("127.0.0.1", server.tcp_port)) as sock:
            f = sock.makefile("r")
            r = _rpc(sock, f, {"id": 1, "method": "control.status"})
            assert r["result"] == {"eventId": 1, "seed": 7, "protocolVersion": heprep.PROTOCOL_VERSION}
            r = _rpc(sock, f, {"id": 2, "method": "heprep.getTypeTree", "params": {}})
            assert len(r["result"]["types"]) == 4


def test_server_websocket():
    websockets = pytest.importorskip("websockets")

    async def talk(port):
        async with websockets.connect(f"ws://127.0.0.1:{port}/heprep") as ws:
            await ws.send(json.dumps({"id": 5, "method": "control.nextEvent"}))
            return json.loads(await ws.recv())

    with heprep.Server(7) as server:
        r = asyncio.run(talk(server.ws_port))
    assert r == {"id": 5, "result": {"eventId": 2}}
