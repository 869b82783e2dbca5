import json
import urllib.request

import pytest

from pictocs import checkpoint as ckpt_io
from pictocs import cli
from pictocs.board import save_board
from pictocs.server import ServiceConfig, make_server, start_background
from tests.conftest import train_tiny


def http(method, url, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    if data:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode())


@pytest.fixture(scope="module")
def service(tmp_path_factory, tiny_split, tiny_board, tiny_cs):
    root = tmp_path_factory.mktemp("svc")
    ckpt_path = root / "cs.ckpt"
    board_path = root / "board.json"
    ckpt_io.save_checkpoint(tiny_cs, ckpt_path)
    save_board(tiny_board, board_path)
    config = ServiceConfig(
        checkpoint_path=str(ckpt_path), board_path=str(board_path),
        host="127.0.0.1", port=0, mode="cs", default_k=5,
    )
    server, thread = start_background(config)
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base, ckpt_path, board_path
    server.shutdown()
    server.server_close()


class TestEndpoints:
    def test_health(self, service, tiny_cs):
        base, _, _ = service
        status, body = http("GET", f"{base}/health")
        assert status == 200
        assert body["status"] == "ok"
        assert body["model"] == ckpt_io.fingerprint(tiny_cs)

    def test_board_echo_with_colors(self, service, tiny_board):
        base, _, _ = service
        status, body = http("GET", f"{base}/board")
        assert status == 200
        assert body["name"] == tiny_board.name
        assert len(body["cards"]) == len(tiny_board.cards)
        assert set(body["role_colors"]) == {
            "quem", "verbo", "o_que", "como", "onde", "quando"
        }
        for color in body["role_colors"].values():
            assert color.startswith("#")

    def test_model_info(self, service, tiny_cs):
        base, _, _ = service
        status, body = http("GET", f"{base}/model/info")
        assert status == 200
        assert body["config"]["hidden"] == tiny_cs.config.hidden
        assert body["fingerprint"] == ckpt_io.fingerprint(tiny_cs)
        assert body["mode"] == "cs"

    def test_predict_cs(self, service):
        base, _, _ = service
        status, body = http(
            "POST", f"{base}/predict",
            {"mode": "cs", "slots": {"quem": "eu", "verbo": "comer"},
             "mask_role": "o_que", "k": 6},
        )
        assert status == 200
        items = body["items"]
        assert len(items) == 6
        probs = [i["prob"] for i in items]
        assert probs == sorted(probs, reverse=True)
        assert sum(probs) <= 1.0 + 1e-9
        assert all(set(i) == {"card_id", "caption", "prob", "role"} for i in items)
        assert body["mask_role"] == "o_que"

    def test_predict_flat(self, service):
        base, _, _ = service
        status, body = http(
            "POST", f"{base}/predict", {"mode": "flat", "prefix": "eu comer", "k": 3}
        )
        assert status == 200
        assert len(body["items"]) == 3

    def test_predict_defaults(self, service):
        base, _, _ = service
        status, body = http(
            "POST", f"{base}/predict", {"slots": {}, "mask_role": "quem"}
        )
        assert status == 200
        assert body["k"] == 5  # service default

    def test_predict_deterministic(self, service):
        base, _, _ = service
        payload = {"mode": "cs", "slots": {"quem": "eu"}, "mask_role": "verbo", "k": 4}
        _, a = http("POST", f"{base}/predict", payload)
        _, b = http("POST", f"{base}/predict", payload)
        assert a["items"] == b["items"]

    def test_bad_role_is_400(self, service):
        base, _, _ = service
        status, body = http(
            "POST", f"{base}/predict",
            {"mode": "cs", "slots": {"xyz": "eu"}, "mask_role": "o_que"},
        )
        assert status == 400
        assert body["error"]["code"] == "bad_request"

    def test_missing_mask_role_is_400(self, service):
        base, _, _ = service
        status, body = http("POST", f"{base}/predict", {"mode": "cs", "slots": {}})
        assert status == 400

    def test_bad_json_is_400(self, service):
        base, _, _ = service
        import urllib.error

        req = urllib.request.Request(
            f"{base}/predict", data=b"{nope", method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                status = resp.status
                body = json.loads(resp.read().decode())
        except urllib.error.HTTPError as exc:
            status = exc.code
            body = json.loads(exc.read().decode())
        assert status == 400
        assert body["error"]["code"] == "bad_request"

    def test_unknown_route_is_404(self, service):
        base, _, _ = service
        status, body = http("GET", f"{base}/nothing/here")
        assert status == 404
        assert body["error"]["code"] == "not_found"


class TestStaticAssets:
    def test_serves_index_and_guards_traversal(self, tmp_path, service):
        base, ckpt_path, board_path = service
        assets = tmp_path / "dist"
        assets.mkdir()
        (assets / "index.html").write_text("<html><body>board ui</body></html>")
        (assets / "app.js").write_text("console.log('ok')")
        config = ServiceConfig(
            checkpoint_path=str(ckpt_path), board_path=str(board_path),
            host="127.0.0.1", port=0, assets_dir=str(assets),
        )
        server, _ = start_background(config)
        try:
            root = f"http://127.0.0.1:{server.server_address[1]}"
            with urllib.request.urlopen(f"{root}/", timeout=10) as resp:
                assert resp.status == 200
                assert b"board ui" in resp.read()
            with urllib.request.urlopen(f"{root}/app.js", timeout=10) as resp:
                assert "javascript" in resp.headers["Content-Type"]
            status, _ = http("GET", f"{root}/../secret.txt")
            assert status == 404
        finally:
            server.shutdown()
            server.server_close()

    def test_missing_assets_dir_fails_startup(self, service):
        _, ckpt_path, board_path = service
        config = ServiceConfig(
            checkpoint_path=str(ckpt_path), board_path=str(board_path),
            port=0, assets_dir="/nonexistent/dist",
        )
        with pytest.raises(FileNotFoundError):
            make_server(config)

    def test_missing_model_fails_startup(self, tmp_path):
        config = ServiceConfig(
            checkpoint_path=str(tmp_path / "none.ckpt"), board_path="sample", port=0
        )
        with pytest.raises(Exception):
            make_server(config)


class TestConcurrency:
    def test_parallel_requests_consistent(self, service):
        import threading

        base, _, _ = service
        payload = {"mode": "cs", "slots": {"quem": "eu"}, "mask_role": "o_que", "k": 5}
        results = [None] * 12
        def worker(i):
            results[i] = http("POST", f"{base}/predict", payload)
        threads = [threading.Thread(target=worker, args=(i,)) for i in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        statuses = {status for status, _ in results}
        assert statuses == {200}
        bodies = [body["items"] for _, body in results]
        assert all(b == bodies[0] for b in bodies)


class TestPortOverride:
    def test_env_var_beats_flag(self, monkeypatch, service):
        from pictocs import cli

        _, ckpt_path, board_path = service
        captured = {}

        def fake_serve(config):
            captured["port"] = config.port

        monkeypatch.setattr("pictocs.server.serve_forever", fake_serve)
        monkeypatch.setenv("PICTO_PORT", "9441")
        code = cli.main(
            ["serve", "--model", str(ckpt_path), "--board", str(board_path),
             "--port", "1234"]
        )
        assert code == 0
        assert captured["port"] == 9441


class TestCliServiceConsistency:
    def test_cli_and_service_rankings_byte_equal(self, service, capsys):
        """Same artifacts, twenty scripted queries: the CLI ranking and the
        service ranking must serialize identically."""
        base, ckpt_path, board_path = service
        queries = []
        for k in (1, 3, 5, 9):
            queries.append({"mode": "cs", "slots": {}, "mask_role": "quem", "k": k})
            queries.append(
                {"mode": "cs", "slots": {"quem": "eu"}, "mask_role": "verbo", "k": k}
            )
            queries.append(
                {"mode": "cs", "slots": {"quem": "eu", "verbo": "comer"},
                 "mask_role": "o_que", "k": k}
            )
            queries.append({"mode": "flat", "prefix": "eu comer", "k": k})
            queries.append({"mode": "flat", "prefix": "", "k": k})
        assert len(queries) == 20
        for q in queries:
            argv = ["predict", "--model", str(ckpt_path), "--board", str(board_path),
                    "--k", str(q["k"]), "--json", "--mode", q["mode"]]
            if q["mode"] == "cs":
                argv += ["--mask", q["mask_role"]]
                for role, text in q["slots"].items():
                    argv += ["--slot", f"{role}={text}"]
            else:
                argv += ["--prefix", q["prefix"]]
            assert cli.main(argv) == 0
            cli_items = capsys.readouterr().out.strip()
            status, body = http("POST", f"{base}/predict", q)
            assert status == 200
            service_items = json.dumps(body["items"], ensure_ascii=False)
            assert cli_items == service_items
