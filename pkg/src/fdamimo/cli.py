"""Command-line client for the fdamimo service.

The CLI is a thin HTTP client: it assembles a scenario JSON document
(defaults < --config file < key=value overrides < dedicated flags), posts it
to the service and writes whatever files come back.  By default it talks to
an in-process instance of the FastAPI app, so no server needs to run;
--server points it at a remote instance instead.

Exit codes: 0 success, 1 domain error, 2 config parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import httpx


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdamimo",
        description="FDA-MIMO range-angle estimation toolkit with "
                    "transmit/receive frequency offsets")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "the service in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="scenario JSON document")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="master seed (reproducible by default)")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="dotted scenario overrides, e.g. "
                            "offsets.sigma_t=500")
        return p

    p = common(sub.add_parser("simulate",
                              help="generate matched-filter pulses"))
    p.add_argument("--pulses", type=int, default=None)
    p.add_argument("--pipeline", choices=["approx", "exact"],
                   default="approx")

    p = common(sub.add_parser("eqsnr", help="equalized SNR report or table"))
    p.add_argument("--table", choices=["tx", "rx"], default=None,
                   help="reproduce the transmit or receive table")
    p.add_argument("--pulses", type=int, default=1000)
    p.add_argument("--mode", choices=["model", "empirical", "both"],
                   default="both")

    p = common(sub.add_parser("estimate", help="run one estimator"))
    p.add_argument("--method", default="music2d")
    p.add_argument("--pulses", type=int, default=None)

    p = common(sub.add_parser("crlb", help="CRLB sweep table"))
    p.add_argument("--sweep", choices=["sigma_t", "sigma_r", "snr"],
                   default="snr")
    p.add_argument("--values", default=None,
                   help="comma-separated sweep values (SI units)")
    p.add_argument("--sigma-over-df", default=None, metavar="START:STEP:COUNT",
                   help="sweep values as ratios of delta_f")
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--pulses", type=int, default=1)

    p = common(sub.add_parser("mc", help="Monte-Carlo RMSE experiment"))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--pulses", type=int, default=None)
    p.add_argument("--sweep", choices=["sigma_t", "sigma_r", "snr_db"],
                   default=None)
    p.add_argument("--sigma-over-df", default=None, metavar="START:STEP:COUNT")

    p = common(sub.add_parser("figures", help="reproduce a named figure"))
    p.add_argument("--figure", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--pulses", type=int, default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


class ConfigError(Exception):
    pass


def load_scenario_doc(args) -> dict:
    doc: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: "
                              f"line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}")
    for item in getattr(args, "overrides", []):
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        _apply_override(doc, key.strip(), raw.strip())
    if "seed" not in doc and getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    doc.setdefault("offsets", {}).setdefault("seed", doc.get("seed", 0))
    # unknown keys are a config error (exit 2), not a domain error (exit 1)
    from .config import DomainError
    from .experiments import validate_scenario_keys
    try:
        validate_scenario_keys(doc)
    except DomainError as exc:
        raise ConfigError(str(exc))
    return doc


def _apply_override(doc: dict, dotted: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted!r} crosses a non-object")
    leaf = parts[-1]
    if leaf.endswith("]") and "[" in leaf:
        name, idx = leaf[:-1].split("[")
        arr = node.setdefault(name, [])
        i = int(idx)
        while len(arr) <= i:
            arr.append({})
        arr[i] = value
    else:
        node[leaf] = value


def parse_ratio_spec(spec: str) -> list:
    try:
        start, step, count = spec.split(":")
        start, step, count = float(start), float(step), int(count)
    except ValueError:
        raise ConfigError(f"--sigma-over-df expects START:STEP:COUNT, "
                          f"got {spec!r}")
    if count < 1:
        raise ConfigError("--sigma-over-df count must be >= 1")
    return [start + k * step for k in range(count)]


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # no server given: drive the app in-process over a sync ASGI bridge
    import warnings

    from starlette.testclient import TestClient

    from .service import app
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        return TestClient(app, raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 422:
        raise ConfigError(f"service rejected the request: {resp.text}")
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise RuntimeError(detail)
    return resp.json()


def _write(out_dir: str, name: str, content: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)
    return path


def _table_csv(table: dict) -> str:
    from .emitters import Table, table_to_csv
    return table_to_csv(Table.from_json_obj(table))


def _echo_scenario(doc: dict) -> None:
    print("resolved scenario:")
    print(json.dumps(doc, indent=2))


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn
        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        doc = load_scenario_doc(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    stamp = time.strftime("%Y%m%dT%H%M%S")
    try:
        with make_client(args.server) as client:
            if args.command == "simulate":
                payload = {"scenario": doc, "pipeline": args.pipeline}
                if args.pulses:
                    payload["n_pulses"] = args.pulses
                res = _post(client, "/simulate", payload)
                _echo_scenario(res["scenario"])
                path = _write(args.out, f"simulate-{stamp}.json",
                              json.dumps(res, indent=2) + "\n")
                print(f"wrote {path} ({len(res['pulses'])} pulses)")

            elif args.command == "eqsnr":
                if args.table:
                    res = _post(client, "/eqsnr/table",
                                {"table": args.table, "n_pulses": args.pulses,
                                 "seed": args.seed})
                    _echo_scenario(res["meta"])
                    path = _write(args.out, f"eqsnr-{args.table}-{stamp}.csv",
                                  _table_csv(res))
                    print(_table_csv(res), end="")
                    print(f"wrote {path}")
                else:
                    res = _post(client, "/eqsnr",
                                {"scenario": doc, "mode": args.mode,
                                 "n_pulses": args.pulses})
                    _echo_scenario(doc)
                    print(json.dumps(res, indent=2))

            elif args.command == "estimate":
                if args.pulses:
                    doc["n_pulses"] = args.pulses
                res = _post(client, "/estimate",
                            {"scenario": doc, "method": args.method})
                _echo_scenario(res["scenario"])
                print(json.dumps(res["estimates"], indent=2))

            elif args.command == "crlb":
                values = None
                if args.values:
                    values = [float(v) for v in args.values.split(",")]
                elif args.sigma_over_df:
                    ratios = parse_ratio_spec(args.sigma_over_df)
                    df = doc.get("config", {}).get("delta_f", 10e3)
                    if args.sweep == "snr":
                        raise ConfigError("--sigma-over-df needs "
                                          "--sweep sigma_t or sigma_r")
                    values = [r * df for r in ratios]
                if values is None:
                    values = ([0.0, 10.0, 20.0, 30.0] if args.sweep == "snr"
                              else [k * 100.0 for k in range(1, 11)])
                res = _post(client, "/crlb",
                            {"scenario": doc,
                             "sweep": {"param": args.sweep, "values": values},
                             "snr_db": args.snr, "n_pulses": args.pulses})
                _echo_scenario(doc)
                table = {"name": f"crlb-{args.sweep}",
                         "columns": res["columns"],
                         "rows": [[r[c] for c in res["columns"]]
                                  for r in res["rows"]], "meta": {}}
                csv_text = _table_csv(table)
                path = _write(args.out, f"crlb-{args.sweep}-{stamp}.csv",
                              csv_text)
                print(csv_text, end="")
                print(f"wrote {path}")

            elif args.command == "mc":
                if args.trials:
                    doc["n_trials"] = args.trials
                if args.pulses:
                    doc["n_pulses"] = args.pulses
                if args.sweep:
                    ratios = (parse_ratio_spec(args.sigma_over_df)
                              if args.sigma_over_df else None)
                    df = doc.get("config", {}).get("delta_f", 10e3)
                    if args.sweep in ("sigma_t", "sigma_r") and ratios:
                        values = [r * df for r in ratios]
                    elif args.sweep == "snr_db":
                        values = [0.0, 10.0, 20.0, 30.0]
                    else:
                        values = [k * 0.02 * df for k in range(1, 6)]
                    doc["sweep"] = {"param": args.sweep, "values": values}
                res = _post(client, "/mc", {"scenario": doc})
                _echo_scenario(res["meta"].get("scenario", doc))
                csv_text = _table_csv(res)
                path = _write(args.out, f"mc-{stamp}.csv", csv_text)
                print(csv_text, end="")
                print(f"wrote {path}")

            elif args.command == "figures":
                res = _post(client, "/figures",
                            {"name": args.figure, "seed": args.seed,
                             "trials": args.trials, "pulses": args.pulses})
                for f in res["files"]:
                    root, ext = os.path.splitext(f["name"])
                    path = _write(args.out, f"{root}-{stamp}{ext}",
                                  f["content"])
                    print(f"wrote {path}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, httpx.HTTPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
