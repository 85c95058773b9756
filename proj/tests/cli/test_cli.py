import json
import os
import re
import socket
import subprocess
import time
from pathlib import Path

import pytest

CLI = os.environ.get("HEPREP_CLI", "heprep")


def run(*args, **kw):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=120, **kw)


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    out = tmp_path_factory.mktemp("export")
    r = run("export", "--seed", 42, "--events", 3, "--out", out)
    assert r.returncode == 0, r.stderr
    return out


def free_port():
    # need port and port+1 free
    for _ in range(50):
        with socket.socket() as a:
            a.bind(("127.0.0.1", 0))
            port = a.getsockname()[1]
        try:
            with socket.socket() as b:
                b.bind(("127.0.0.1", port + 1))
            return port
        except OSError:
            continue
    raise RuntimeError("no free port pair")


def rpc(sock_file, sock, id_, method, params=None):
    frame = {"id": id_, "method": method, "params": params or {}}
    sock.sendall((json.dumps(frame) + "\n").encode())
    return json.loads(sock_file.readline())


class Server:
    def __init__(self, *args):
        self.port = free_port()
        self.proc = subprocess.Popen([CLI, "serve", "--port", str(self.port), *map(str, args)],
                                     stderr=subprocess.PIPE, text=True)
        deadline = time.time() + 20
        while time.time() < deadline:
            try:
                self.sock = socket.create_connection(("127.0.0.1", self.port), timeout=5)
                self.file = self.sock.makefile("r")
                return
            except OSError:
                time.sleep(0.05)
        self.proc.kill()
        raise RuntimeError("server did not start")

    def call(self, id_, method, params=None):
        return rpc(self.file, self.sock, id_, method, params)

    def stop(self):
        self.sock.close()
        self.proc.terminate()
        _, err = self.proc.communicate(timeout=20)
        return err


def test_usage_errors():
    assert run().returncode == 1
    assert run("frobnicate").returncode == 1
    assert run("export", "--seed", 1).returncode == 1


def test_export_writes_valid_files(exported):
    names = sorted(p.name for p in exported.iterdir())
    assert names == [f"event_{i:06d}.heprep.xml" for i in (1, 2, 3)]
    for p in exported.iterdir():
        r = run("validate", p)
        assert r.returncode == 0, r.stderr
        assert r.stdout == ""


def test_export_is_deterministic(exported, tmp_path):
    assert run("export", "--seed", 42, "--events", 3, "--out", tmp_path).returncode == 0
    for p in exported.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


def test_export_types_keeps_catalog(tmp_path):
    assert run("export", "--seed", 42, "--events", 2, "--out", tmp_path, "--types", "Track").returncode == 0
    text = (tmp_path / "event_000001.heprep.xml").read_text()
    assert '<type name="CalCrystal">' in text
    assert '<instance type="CalCrystal"' not in text
    assert '<instance type="Track"' in text
    assert run("export", "--seed", 42, "--events", 1, "--out", tmp_path, "--types", "Nope").returncode == 1


def test_export_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("export", "--seed", 1, "--events", 1, "--out", blocker / "sub").returncode == 3


def test_validate_failures(exported, tmp_path):
    text = (exported / "event_000001.heprep.xml").read_text()
    dangling = tmp_path / "dangling.heprep.xml"
    dangling.write_text(text.replace('<instance type="Track"', '<instance type="Trak"', 1))
    r = run("validate", dangling)
    assert r.returncode == 2
    lines = r.stderr.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("TYPE_NOT_FOUND")

    truncated = tmp_path / "truncated.heprep.xml"
    truncated.write_text(text[: len(text) // 2])
    assert run("validate", truncated).returncode == 3
    assert run("validate", tmp_path / "missing.xml").returncode == 3


def test_query(exported):
    f = exported / "event_000001.heprep.xml"
    r = run("query", f, "--type", "Track", "--where", "Chi2>0")
    assert r.returncode == 0
    lines = r.stdout.splitlines()
    assert lines
    for line in lines:
        path, type_, *atts = line.split("\t")
        assert type_ == "Track"
        assert re.fullmatch(r"\d+", path)
        chi2 = [a for a in atts if a.startswith("Chi2=")]
        assert float(chi2[0][5:]) > 0

    r = run("query", f, "--where", "Energy exists")
    types = {line.split("\t")[1] for line in r.stdout.splitlines()}
    assert types and types <= {"CalCrystal", "AcdTile"}

    r = run("query", f, "--where", "Chi2>>1")
    assert r.returncode == 1
    assert "Usage" in r.stderr or "usage" in r.stderr.lower() or "predicate" in r.stderr


def test_serve_status_and_actions():
    server = Server("--seed", 42)
    try:
        status = server.call(1, "control.status")
        assert status == {"id": 1, "result": {"eventId": 1, "seed": 42, "protocolVersion": "1"}}
        bad = server.call(2, "heprep.frobnicate")
        assert bad["error"]["code"] == 2
        assert server.call(3, "control.nextEvent")["result"] == {"eventId": 2}
    finally:
        err = server.stop()
    assert "seed 42" in err
    assert "nextEvent" in err


def test_serve_entropy_seed_is_logged():
    server = Server()
    try:
        seed = server.call(1, "control.status")["result"]["seed"]
    finally:
        err = server.stop()
    assert f"seed {seed}" in err


def test_serve_port_in_use():
    server = Server("--seed", 1)
    try:
        r = subprocess.run([CLI, "serve", "--port", str(server.port), "--seed", "1"],
                           capture_output=True, text=True, timeout=30)
        assert r.returncode == 3
        assert r.stderr
    finally:
        server.stop()
