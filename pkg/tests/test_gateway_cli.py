import json
import urllib.error
import urllib.request

import pytest

from sealnet import testbed
from sealnet.cli import main
from sealnet.client.gateway import GatewayApi, make_server, serve_forever_in_thread
from sealnet.localplatform import LocalPlatform


def _get(port, path):
    with urllib.request.urlopen(f"http://127.0.0.1:{port}{path}") as resp:
        return resp.status, json.loads(resp.read())


def _post(port, path, body):
    req = urllib.request.Request(
        f"http://127.0.0.1:{port}{path}",
        data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


@pytest.fixture(scope="module")
def gateway():
    bed = testbed.build(seed=555)
    server = make_server(GatewayApi(bed.owner), port=0)
    serve_forever_in_thread(server)
    yield bed, server.server_address[1]
    server.shutdown()


def test_gateway_records_and_rows(gateway):
    bed, port = gateway
    status, body = _get(port, "/api/records")
    assert status == 200
    ids = {r["record_id"] for r in body["records"]}
    assert bed.input_record_id in ids and bed.data_record_id in ids

    status, body = _get(port, f"/api/records/{bed.input_record_id}/rows")
    assert status == 200
    assert len(body["rows"]) == 4
    assert body["predicted_labels"] == ["A", "B", "A", "B"]
    assert body["labels"] is None  # prediction inputs are unlabeled


def test_gateway_prediction_endpoint(gateway):
    bed, port = gateway
    status, body = _get(port, f"/api/predictions/{bed.prediction_task_id}")
    assert status == 200 and body["status"] == "done"
    status, body = _get(port, "/api/predictions/task-99999")
    assert body["status"] == "pending"


def test_gateway_benchmark_and_challenges(gateway):
    bed, port = gateway
    status, body = _get(port, f"/api/benchmark/{bed.challenge_id}")
    assert status == 200 and body["rows"][0]["best_performance"] == 1.0
    status, body = _get(port, "/api/challenges")
    assert body["challenges"][0]["label_set"] == ["A", "B"]


def test_gateway_correction_loop(gateway):
    bed, port = gateway
    status, body = _post(
        port,
        "/api/corrections",
        {"source_record_id": bed.input_record_id, "row_index": 1, "corrected_label": "A"},
    )
    assert status == 200
    new_record = body["record_id"]

    status, audit = _get(port, "/api/audit")
    assert audit["valid"]

    status, tasks = _get(port, "/api/tasks")
    learn = [t for t in tasks["tasks"] if t["kind"] == "learn" and t["status"] == "queued"]
    assert any(new_record in t["data_ids"] for t in learn)


def test_gateway_correction_errors(gateway):
    bed, port = gateway
    status, body = _post(
        port,
        "/api/corrections",
        {"source_record_id": bed.input_record_id, "row_index": 99, "corrected_label": "A"},
    )
    assert status == 400 and body["error"] == "IndexOutOfRange"
    status, body = _post(
        port,
        "/api/corrections",
        {"source_record_id": bed.input_record_id, "row_index": 0, "corrected_label": "Z"},
    )
    assert status == 400 and body["error"] == "BadLabel"
    status, body = _post(
        port,
        "/api/corrections",
        {"source_record_id": "00" * 32, "row_index": 0, "corrected_label": "A"},
    )
    assert status == 403 and body["error"] == "NotOwner"


def test_gateway_unknown_route(gateway):
    _, port = gateway
    with pytest.raises(urllib.error.HTTPError):
        urllib.request.urlopen(f"http://127.0.0.1:{port}/api/nope")


# ---------------------------------------------------------------------------
# local platform persistence
# ---------------------------------------------------------------------------


def test_local_platform_save_load_replays_state(tmp_path):
    from sealnet.client.ops import Client
    from sealnet.client.vault import keygen
    from sealnet.cryptobox import Rng

    platform = LocalPlatform.create(tmp_path / "st", seed=8)
    vault = keygen("alice", Rng(9))
    platform.orchestrator.register_account("alice", vault.identity.seal_public, 100)
    client = Client(
        vault,
        orchestrator=platform.orchestrator,
        storage=platform.storage,
        custodians=platform.custodians,
        rng=Rng(10),
    )
    client.create_challenge("demo", ["A", "B"], [testbed.VALIDATION_CSV])
    client.upload_data(testbed.TRAIN_CSV, "demo")
    client.submit_algorithm('{"name": "centroid"}', "demo")
    platform.save()

    loaded = LocalPlatform.load(tmp_path / "st")
    assert loaded.orchestrator.state_digest() == platform.orchestrator.state_digest()
    assert len(loaded.storage) == len(platform.storage)
    for node, fresh in zip(platform.custodians, loaded.custodians):
        assert node._shares == fresh._shares

    # the reloaded platform keeps working: drain the queued learn task
    from sealnet.compute.worker import run_task, spawn_worker

    run_task(
        spawn_worker(Rng(11)),
        loaded.orchestrator,
        loaded.storage,
        loaded.custodians,
        loaded.ledger_view(),
        Rng(12),
    )
    assert loaded.orchestrator.benchmark("demo")


def test_local_platform_detects_tampered_chain(tmp_path):
    platform = LocalPlatform.create(tmp_path / "st", seed=8)
    platform.save()
    LocalPlatform.load(tmp_path / "st")  # empty chain fine

    # now write garbage into the chain file
    chain_path = tmp_path / "st" / "chain.ndjson"
    chain_path.write_text(
        json.dumps(
            {
                "index": 0,
                "prev_hash": "0" * 64,
                "timestamp": 1,
                "event": {
                    "type": "DataRegistered",
                    "record_id": "r",
                    "owner_id": "o",
                    "kind": "raw-data",
                    "challenge_id": "c",
                },
                "signature": "0" * 128,
            }
        )
        + "\n"
    )
    with pytest.raises(Exception):
        LocalPlatform.load(tmp_path / "st")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_full_tour(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SEALNET_PASSPHRASE", "pw")
    st = str(tmp_path / "st")
    vault = str(tmp_path / "alice.vault")
    (tmp_path / "val.csv").write_text(testbed.VALIDATION_CSV)
    (tmp_path / "train.csv").write_text(testbed.TRAIN_CSV)
    (tmp_path / "query.csv").write_text("f0,f1\n0.1,0.2\n1.9,1.8\n")
    (tmp_path / "algo.json").write_text('{"name": "centroid"}')

    assert main(["init", "--state-dir", st, "--seed", "3"]) == 0
    assert main(["keygen", "--state-dir", st, "--vault", vault,
                 "--account", "alice", "--balance", "100"]) == 0
    assert main(["challenge", "--state-dir", st, "--vault", vault, "--id", "demo",
                 "--labels", "A,B", "--validation", str(tmp_path / "val.csv")]) == 0
    assert main(["upload", "--state-dir", st, "--vault", vault,
                 "--csv", str(tmp_path / "train.csv"), "--challenge", "demo"]) == 0
    assert main(["submit-algo", "--state-dir", st, "--vault", vault,
                 "--spec", str(tmp_path / "algo.json"), "--challenge", "demo"]) == 0
    assert main(["work", "--orchestrator", st, "--once"]) == 0
    capsys.readouterr()

    assert main(["predict", "--state-dir", st, "--vault", vault,
                 "--csv", str(tmp_path / "query.csv"), "--challenge", "demo",
                 "--payment", "10"]) == 0
    task_id = capsys.readouterr().out.strip().splitlines()[-1]
    assert main(["work", "--orchestrator", st, "--once"]) == 0
    capsys.readouterr()
    assert main(["fetch", "--state-dir", st, "--vault", vault, "--task", task_id]) == 0
    assert json.loads(capsys.readouterr().out) == ["A", "B"]

    assert main(["benchmark", "--state-dir", st, "--challenge", "demo"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows and rows[0]["best_performance"] == 1.0

    assert main(["audit", "--state-dir", st, "--vault", vault]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["valid"]


def test_cli_simnet_run_and_verify(tmp_path, capsys):
    config = {
        "seed": 33,
        "actions": [
            {"action": "client", "name": "alice", "balance": 50},
            {"action": "challenge", "client": "alice", "id": "demo",
             "labels": ["A", "B"], "validation": testbed.VALIDATION_CSV},
            {"action": "upload", "client": "alice", "csv": testbed.TRAIN_CSV,
             "challenge": "demo"},
            {"action": "algorithm", "client": "alice", "spec": {"name": "centroid"},
             "challenge": "demo"},
        ],
    }
    config_path = tmp_path / "scenario.json"
    config_path.write_text(json.dumps(config))
    trace_path = tmp_path / "run.trace"

    assert main(["simnet", "run", "--config", str(config_path), "--out", str(trace_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["chain_valid"] and summary["privacy_valid"]

    assert main(["simnet", "verify-trace", str(trace_path)]) == 0
    assert json.loads(capsys.readouterr().out)["ok"]


def test_cli_error_paths(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SEALNET_PASSPHRASE", "pw")
    st = str(tmp_path / "st")
    assert main(["init", "--state-dir", st]) == 0
    assert main(["init", "--state-dir", st]) == 1  # already exists
    err = capsys.readouterr().err
    assert "error" in err
