"""Command-line client for the activepool service.

Subcommands: run, bench, sweep, ttest, convert, serve. By default every
command spins up the service in-process and talks to it over an ASGI
transport, so no network or running server is needed; pass --server URL
to target a remote instance instead.

Options may come from a flat key=value config file (--config FILE) whose
keys mirror the long flag names; explicit flags override file values.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

import httpx

from .errors import ActivePoolError, DataFormatError, NumericError, UsageError

_DEFAULTS = {
    "format": None,  # required unless supplied via config
    "label_column": 0,
    "strategies": "proposed,random,margin",
    "runs": 10,
    "beta": None,
    "gamma": 1.0,
    "svm_c": 100.0,
    "svm_gamma": None,
    "seed": 0,
    "max_queries": 100,
    "normalize": False,
    "out": "results",
    "train_fraction": 0.6,
    "checkpoints": None,
    "server": None,
    "reference": "proposed",
    "significance": 0.05,
}

_CONFIG_KEYS = {
    "data",
    "format",
    "label-column",
    "strategies",
    "runs",
    "beta",
    "gamma",
    "svm-c",
    "svm-gamma",
    "seed",
    "max-queries",
    "normalize",
    "out",
    "train-fraction",
    "checkpoints",
    "server",
    "reference",
    "significance",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # route bad flags to exit code 1
        raise UsageError(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write_text(path: Path, content: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")


def _merged(args: argparse.Namespace) -> dict:
    """Flag value if given, else config-file value, else built-in default."""
    file_values = _parse_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(flag_name: str, convert=None):
        attr = flag_name.replace("-", "_")
        value = getattr(args, attr, None)
        if value is not None:
            return value
        if flag_name in file_values:
            raw = file_values[flag_name]
            if convert is bool:
                return _parse_bool(raw, flag_name)
            try:
                return convert(raw) if convert else raw
            except ValueError:
                raise UsageError(f"config key {flag_name!r}: bad value {raw!r}") from None
        return _DEFAULTS.get(attr)

    merged = {
        "data": pick("data"),
        "format": pick("format"),
        "label_column": pick("label-column", int),
        "strategies": pick("strategies"),
        "runs": pick("runs", int),
        "beta": pick("beta"),
        "gamma": pick("gamma", float),
        "svm_c": pick("svm-c", float),
        "svm_gamma": pick("svm-gamma", float),
        "seed": pick("seed", int),
        "max_queries": pick("max-queries", int),
        "normalize": pick("normalize", bool),
        "out": pick("out"),
        "train_fraction": pick("train-fraction", float),
        "checkpoints": pick("checkpoints"),
        "server": pick("server"),
        "reference": pick("reference"),
        "significance": pick("significance", float),
    }
    if isinstance(merged["data"], str):
        merged["data"] = [p for p in merged["data"].split(",") if p]
    return merged


def _parse_strategies(raw: str) -> list[str]:
    return [s.strip() for s in raw.split(",") if s.strip()]


def _parse_checkpoints(raw) -> list[int] | None:
    if raw is None:
        return None
    try:
        return [int(c) for c in str(raw).split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"bad checkpoints list {raw!r}") from None


def _parse_beta_value(raw) -> float | None:
    if raw is None:
        return None
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise UsageError(f"beta expects a number, got {raw!r}") from None


def _parse_beta_list(raw) -> list[float] | None:
    if raw is None:
        return None
    try:
        return [float(b) for b in str(raw).split(",") if b.strip()]
    except ValueError:
        raise UsageError(f"bad beta list {raw!r}") from None


_ERROR_BY_KIND = {"usage": UsageError, "data": DataFormatError, "numeric": NumericError}


def _call(server: str | None, method: str, path: str, payload: dict | None = None) -> dict:
    """POST/GET against a remote server or an in-process service instance."""
    if server:
        try:
            response = httpx.request(
                method, server.rstrip("/") + path, json=payload, timeout=None
            )
        except httpx.HTTPError as exc:
            raise UsageError(f"cannot reach server {server}: {exc}") from None
    else:
        from .service import create_app

        async def _go() -> httpx.Response:
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://activepool", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        response = asyncio.run(_go())
    if response.status_code != 200:
        try:
            envelope = response.json()
            error_cls = _ERROR_BY_KIND[envelope["kind"]]
            message = envelope["message"]
        except Exception:
            raise NumericError(
                f"service error {response.status_code}: {response.text[:200]}"
            ) from None
        if error_cls is DataFormatError:
            raise DataFormatError(message)
        raise error_cls(message)
    return response.json()


def _dataset_spec(path: str, fmt: str | None, label_column: int) -> dict:
    if fmt not in ("sparse", "csv"):
        raise UsageError("--format must be 'sparse' or 'csv'")
    return {
        "content": _read_text(path),
        "format": fmt,
        "name": Path(path).stem,
        "label_column": label_column,
    }


def _settings(merged: dict) -> dict:
    return {
        "strategies": _parse_strategies(merged["strategies"]),
        "runs": merged["runs"],
        "train_fraction": merged["train_fraction"],
        "max_queries": merged["max_queries"],
        "beta": _parse_beta_value(merged["beta"]),
        "prob_gamma": merged["gamma"],
        "svm_c": merged["svm_c"],
        "svm_gamma": merged["svm_gamma"],
        "seed": merged["seed"],
        "normalize": merged["normalize"],
    }


def _require_data(merged: dict, count: str = "one") -> list[str]:
    data = merged["data"]
    if not data:
        raise UsageError(f"--data is required ({count} path expected)")
    return data


def _cmd_run(merged: dict) -> int:
    paths = _require_data(merged)
    if len(paths) != 1:
        raise UsageError("run expects exactly one --data path (use bench for several)")
    payload = {
        "dataset": _dataset_spec(paths[0], merged["format"], merged["label_column"]),
        "settings": _settings(merged),
        "checkpoints": _parse_checkpoints(merged["checkpoints"]),
    }
    body = _call(merged["server"], "POST", "/experiments/run", payload)
    out = Path(merged["out"])
    _write_text(out / "curves.csv", body["curves_csv"])
    _write_text(out / "summary.txt", body["summary_txt"])
    written = ["curves.csv", "summary.txt"]
    if body.get("wtl_tsv"):
        _write_text(out / "wtl.tsv", body["wtl_tsv"])
        written.append("wtl.tsv")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _cmd_bench(merged: dict) -> int:
    paths = _require_data(merged, count="one or more")
    payload = {
        "datasets": [
            _dataset_spec(p, merged["format"], merged["label_column"]) for p in paths
        ],
        "settings": _settings(merged),
        "checkpoints": _parse_checkpoints(merged["checkpoints"]),
    }
    body = _call(merged["server"], "POST", "/experiments/bench", payload)
    out = Path(merged["out"])
    for item in body["results"]:
        _write_text(out / item["name"] / "curves.csv", item["curves_csv"])
        _write_text(out / item["name"] / "summary.txt", item["summary_txt"])
    _write_text(out / "wtl.tsv", body["wtl_tsv"])
    print(f"wrote {len(body['results'])} dataset result sets and wtl.tsv to {out}")
    return 0


def _cmd_sweep(merged: dict) -> int:
    paths = _require_data(merged)
    if len(paths) != 1:
        raise UsageError("sweep expects exactly one --data path")
    betas = _parse_beta_list(merged["beta"])
    # the beta list goes to the sweep itself, not into the settings
    settings = _settings({**merged, "beta": None})
    payload = {
        "dataset": _dataset_spec(paths[0], merged["format"], merged["label_column"]),
        "settings": settings,
        "betas": betas,
    }
    body = _call(merged["server"], "POST", "/experiments/sweep", payload)
    out = Path(merged["out"])
    _write_text(out / "sweep.csv", body["sweep_csv"])
    print(f"wrote sweep.csv to {out}")
    return 0


def _curves_name(path: Path) -> str:
    if path.name == "curves.csv" and path.parent.name not in ("", "."):
        return path.parent.name
    return path.stem


def _cmd_ttest(merged: dict) -> int:
    paths = _require_data(merged, count="one or more curves.csv")
    payload = {
        "curves": [
            {"name": _curves_name(Path(p)), "content": _read_text(p)} for p in paths
        ],
        "reference": merged["reference"],
        "significance": merged["significance"],
        "checkpoints": _parse_checkpoints(merged["checkpoints"]),
    }
    body = _call(merged["server"], "POST", "/analysis/ttest", payload)
    out = Path(merged["out"])
    _write_text(out / "wtl.tsv", body["wtl_tsv"])
    sys.stdout.write(body["wtl_tsv"])
    return 0


def _cmd_convert(merged: dict) -> int:
    paths = _require_data(merged)
    if len(paths) != 1:
        raise UsageError("convert expects exactly one --data path")
    payload = {
        "dataset": _dataset_spec(paths[0], merged["format"], merged["label_column"])
    }
    body = _call(merged["server"], "POST", "/datasets/convert", payload)
    out = merged["out"]
    if out and out != _DEFAULTS["out"]:
        _write_text(Path(out), body["content"])
        print(f"wrote {body['format']} dataset to {out}")
    else:
        sys.stdout.write(body["content"])
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def _add_common(parser: argparse.ArgumentParser, data_nargs) -> None:
    parser.add_argument("--data", nargs=data_nargs, help="dataset path(s)")
    parser.add_argument("--format", choices=["sparse", "csv"], help="input file format")
    parser.add_argument("--label-column", type=int, help="CSV label column (default 0)")
    parser.add_argument("--strategies", help="comma list from {proposed,random,margin}")
    parser.add_argument("--runs", type=int, help="repeated runs (default 10)")
    parser.add_argument("--beta", help="trade-off; number, or comma list for sweep")
    parser.add_argument("--gamma", type=float, help="probability-kernel width (default 1.0)")
    parser.add_argument("--svm-c", type=float, help="SVM soft-margin penalty (default 100)")
    parser.add_argument("--svm-gamma", type=float, help="SVM RBF width (default 1/n_features)")
    parser.add_argument("--seed", type=int, help="base seed (default 0)")
    parser.add_argument("--max-queries", type=int, help="queries per run (default 100)")
    parser.add_argument(
        "--normalize",
        action="store_const",
        const=True,
        help="min-max rescale features to [0,1]",
    )
    parser.add_argument("--train-fraction", type=float, help="train share (default 0.6)")
    parser.add_argument("--checkpoints", help="comma list of WTL checkpoint iterations")
    parser.add_argument("--out", help="output directory (default ./results)")
    parser.add_argument("--config", help="flat key=value config file; flags override")
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    parser.add_argument("--reference", help="reference strategy for WTL (default proposed)")
    parser.add_argument("--significance", type=float, help="t-test level (default 0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="activepool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, nargs, help_text in (
        ("run", 1, "run one experiment config and write curves/summary/wtl"),
        ("bench", "+", "run several datasets and write a combined WTL table"),
        ("sweep", 1, "trade-off sensitivity sweep over beta values"),
        ("ttest", "+", "recompute WTL tables from stored curves.csv files"),
        ("convert", 1, "convert a dataset between sparse and csv formats"),
    ):
        _add_common(sub.add_parser(name, help=help_text), nargs)
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "serve":
            return _cmd_serve(args)
        merged = _merged(args)
        dispatch = {
            "run": _cmd_run,
            "bench": _cmd_bench,
            "sweep": _cmd_sweep,
            "ttest": _cmd_ttest,
            "convert": _cmd_convert,
        }
        return dispatch[args.command](merged)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ActivePoolError as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
