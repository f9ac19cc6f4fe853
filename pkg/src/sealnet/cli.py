"""Command-line surface.

One console script covers the platform tour: create a local platform
(`init`, `challenge`), act as a data owner (`keygen`, `upload`,
`submit-algo`, `predict`, `fetch`, `audit`, `benchmark`, `serve-ui`), run a
worker (`work --once`), expose the orchestrator API over HTTP
(`orchestrator --listen`), and drive the simulation harness (`simnet run`,
`simnet verify-trace`).

Local mode keeps every component in one process against a state directory;
the simulated network in `sealnet.simnet` is where the adversarial checks
live.
"""

from __future__ import annotations

import argparse
import getpass
import json
import os
import sys
from pathlib import Path

from .client.gateway import GatewayApi, make_server
from .client.ops import Client
from .client.vault import KeyVault, keygen
from .cryptobox import Rng
from .errors import SealnetError
from .localplatform import LocalPlatform
from .compute.worker import run_task, spawn_worker
from .orchestrator import NoWork
from .simnet import SimConfig, assert_privacy, run_scenario, verify_trace, write_trace


def _passphrase(args) -> str:
    if args.passphrase is not None:
        return args.passphrase
    env = os.environ.get("SEALNET_PASSPHRASE")
    if env:
        return env
    return getpass.getpass("vault passphrase: ")


def _open_client(args) -> tuple[LocalPlatform, Client]:
    platform = LocalPlatform.load(args.state_dir)
    vault = KeyVault.open(args.vault, _passphrase(args))
    client = Client(
        vault,
        orchestrator=platform.orchestrator,
        storage=platform.storage,
        custodians=platform.custodians,
        rng=Rng(),
    )
    return platform, client


def _save_vault(args, vault: KeyVault) -> None:
    vault.save(args.vault, _passphrase(args))


def cmd_init(args) -> int:
    LocalPlatform.create(
        args.state_dir,
        custodian_count=args.custodians,
        top_k=args.top_k,
        fee_rate=args.fee_rate,
        seed=args.seed,
    )
    print(f"platform created at {args.state_dir}")
    return 0


def cmd_keygen(args) -> int:
    vault = keygen(args.account)
    vault.save(args.vault, _passphrase(args))
    platform = LocalPlatform.load(args.state_dir)
    platform.orchestrator.register_account(
        args.account, vault.identity.seal_public, args.balance
    )
    platform.save()
    print(f"account {args.account} registered; vault at {args.vault}")
    return 0


def cmd_challenge(args) -> int:
    platform, client = _open_client(args)
    validation_ids = client.create_challenge(
        args.id, args.labels.split(","), [Path(p) for p in args.validation], args.description
    )
    platform.save()
    _save_vault(args, client.vault)
    print(f"challenge {args.id} with {len(validation_ids)} validation record(s)")
    return 0


def cmd_upload(args) -> int:
    platform, client = _open_client(args)
    record_id = client.upload_data(Path(args.csv), args.challenge)
    platform.save()
    _save_vault(args, client.vault)
    print(record_id)
    return 0


def cmd_submit_algo(args) -> int:
    platform, client = _open_client(args)
    record_id = client.submit_algorithm(Path(args.spec), args.challenge)
    platform.save()
    _save_vault(args, client.vault)
    print(record_id)
    return 0


def cmd_predict(args) -> int:
    platform, client = _open_client(args)
    task_id = client.request_prediction(Path(args.csv), args.challenge, args.payment)
    platform.save()
    _save_vault(args, client.vault)
    print(task_id)
    return 0


def cmd_fetch(args) -> int:
    _, client = _open_client(args)
    labels = client.fetch_prediction(args.task)
    print(json.dumps(labels))
    return 0


def cmd_audit(args) -> int:
    _, client = _open_client(args)
    print(json.dumps(client.audit().to_dict(), indent=1))
    return 0


def cmd_benchmark(args) -> int:
    platform = LocalPlatform.load(args.state_dir)
    rows = platform.orchestrator.benchmark(args.challenge)
    print(json.dumps([r.to_dict() for r in rows], indent=1))
    return 0


def cmd_work(args) -> int:
    state_dir = args.orchestrator or args.state_dir
    if state_dir is None:
        print("work: need --orchestrator STATE_DIR", file=sys.stderr)
        return 2
    platform = LocalPlatform.load(state_dir)
    if args.storage:
        from .storage import BlobStore

        platform.storage = BlobStore.load_dir(args.storage)
        platform._wire()
    consumed = 0
    while True:
        worker = spawn_worker(Rng())
        try:
            task_id = run_task(
                worker,
                platform.orchestrator,
                platform.storage,
                platform.custodians,
                platform.ledger_view(),
                Rng(),
            )
        except NoWork:
            break
        consumed += 1
        print(f"completed {task_id}")
        if args.once:
            break
    platform.save()
    if args.storage:
        platform.storage.save_dir(args.storage)
    print(f"{consumed} task(s) consumed")
    return 0


def cmd_serve_ui(args) -> int:
    platform, client = _open_client(args)
    api = GatewayApi(client)
    server = make_server(api, port=args.port, static_dir=args.static)
    host, port = server.server_address
    print(f"gateway on http://{host}:{port}/ (Ctrl-C stops; state saved on exit)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        platform.save()
        _save_vault(args, client.vault)
    return 0


def cmd_orchestrator(args) -> int:
    # The HTTP face of the orchestrator's route table, for local inspection.
    import threading
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    state_dir = Path(args.chain_path).parent if args.chain_path else Path(args.state_dir)
    if not (state_dir / "config.json").exists():
        LocalPlatform.create(state_dir, top_k=args.top_k, seed=args.seed)
    platform = LocalPlatform.load(state_dir)
    orch = platform.orchestrator
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *a):
            pass

        def _dispatch(self, method):
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}") if length else {}
            with lock:
                status, payload = orch.route(method, self.path, body)
                platform.save()
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

    host, _, port = args.listen.partition(":")
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port or 0)), Handler)
    print(f"orchestrator API on http://{server.server_address[0]}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_simnet_run(args) -> int:
    config = SimConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        config = SimConfig.from_dict({**config.to_dict(), "seed": args.seed})
    result = run_scenario(config)
    verdict = assert_privacy(result)
    if args.out:
        write_trace(result, args.out)
    print(json.dumps({**result.summary(), "privacy_valid": verdict.valid}, indent=1))
    return 0 if (result.chain_first_invalid is None and verdict.valid) else 1


def cmd_simnet_verify(args) -> int:
    report = verify_trace(args.trace)
    print(json.dumps(report, indent=1))
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sealnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def vault_opts(p):
        p.add_argument("--state-dir", required=True)
        p.add_argument("--vault", required=True)
        p.add_argument("--passphrase", help="or set SEALNET_PASSPHRASE")

    p = sub.add_parser("init", help="create a local platform state directory")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--custodians", type=int, default=3)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--fee-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_init)

    p = sub.add_parser("keygen", help="create a vault and register its account")
    vault_opts(p)
    p.add_argument("--account", required=True)
    p.add_argument("--balance", type=int, default=0)
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("challenge", help="open a prediction challenge")
    vault_opts(p)
    p.add_argument("--id", required=True)
    p.add_argument("--labels", required=True, help="comma-separated label set")
    p.add_argument("--validation", nargs="+", required=True, help="held-out labeled CSV file(s)")
    p.add_argument("--description", default="")
    p.set_defaults(fn=cmd_challenge)

    p = sub.add_parser("upload", help="encrypt and register a labeled CSV")
    vault_opts(p)
    p.add_argument("--csv", required=True)
    p.add_argument("--challenge", required=True)
    p.set_defaults(fn=cmd_upload)

    p = sub.add_parser("submit-algo", help="register a trainer spec")
    vault_opts(p)
    p.add_argument("--spec", required=True, help="JSON file: {name, hyperparameters}")
    p.add_argument("--challenge", required=True)
    p.set_defaults(fn=cmd_submit_algo)

    p = sub.add_parser("predict", help="pay for a prediction on an unlabeled CSV")
    vault_opts(p)
    p.add_argument("--csv", required=True)
    p.add_argument("--challenge", required=True)
    p.add_argument("--payment", type=int, required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("fetch", help="open a completed prediction")
    vault_opts(p)
    p.add_argument("--task", required=True)
    p.set_defaults(fn=cmd_fetch)

    p = sub.add_parser("audit", help="verify the chain and list my operations")
    vault_opts(p)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("benchmark", help="show the algorithm benchmark table")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--challenge", required=True)
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("work", help="consume queued tasks as an ephemeral worker")
    p.add_argument("--orchestrator", help="platform state directory")
    p.add_argument("--storage", help="blob directory (defaults inside the state dir)")
    p.add_argument("--state-dir", help="alias for --orchestrator")
    p.add_argument("--once", action="store_true", help="consume one task and exit")
    p.set_defaults(fn=cmd_work)

    p = sub.add_parser("serve-ui", help="serve the review UI gateway on loopback")
    vault_opts(p)
    p.add_argument("--port", type=int, default=8377)
    p.add_argument("--static", default=None, help="built frontend directory")
    p.set_defaults(fn=cmd_serve_ui)

    p = sub.add_parser("orchestrator", help="serve the orchestrator JSON API")
    p.add_argument("--listen", default="127.0.0.1:8378")
    p.add_argument("--chain-path", default=None)
    p.add_argument("--state-dir", default=None)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_orchestrator)

    p = sub.add_parser("simnet", help="deterministic network simulation")
    simsub = p.add_subparsers(dest="simnet_command", required=True)
    pr = simsub.add_parser("run", help="run a scenario config")
    pr.add_argument("--config", required=True)
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--out", default=None, help="write the trace file here")
    pr.set_defaults(fn=cmd_simnet_run)
    pv = simsub.add_parser("verify-trace", help="re-run a trace file and compare")
    pv.add_argument("trace")
    pv.set_defaults(fn=cmd_simnet_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SealnetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
