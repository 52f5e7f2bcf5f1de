"""Command line client for the verification service.

By default requests run against an in-process instance of the HTTP app, so
no server needs to be running; --server redirects the same requests to a
remote instance. All outputs are byte-deterministic: JSON is written with
sorted keys and shortest-repr floats, CSV with CRLF line endings, and no
timestamps appear anywhere.

Exit codes: 0 all checks passed, 1 a verification check failed, 2 the
configuration or request was rejected.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import httpx

from .service.app import create_app
from .states import load_tabulated

__all__ = ["main", "build_parser"]

_DEFAULT_CONFIG = {"state": {"kind": "gaussian_ground"}}


class ConfigError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return json.loads(json.dumps(_DEFAULT_CONFIG))
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return cfg


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg.setdefault("mc", {})["seed"] = args.seed
    if getattr(args, "grid_points", None) is not None:
        cfg["grid_points"] = args.grid_points
    if getattr(args, "tol", None) is not None:
        cfg["tolerance"] = args.tol
    return cfg


def _resolve_tabulated(cfg: dict, config_path: str | None) -> dict:
    """Inline a tabulated file reference so the request is self-contained."""
    state = cfg.get("state")
    if not isinstance(state, dict) or state.get("kind") != "tabulated":
        return cfg
    ref = state.get("file")
    if ref is None:
        return cfg
    path = Path(ref)
    if not path.is_absolute() and config_path is not None:
        path = Path(config_path).parent / path
    try:
        spec, _ = load_tabulated(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read tabulated state {path}: {exc}")
    except ValueError as exc:
        raise ConfigError(str(exc))
    state.pop("file")
    state["grid"] = spec.grid.to_dict()
    state["rho"] = list(spec.rho_values)
    state["phase"] = list(spec.phase_values)
    state["mass"] = spec.mass
    state["hbar"] = spec.hbar
    return cfg


async def _post_async(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server is None:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service.local", timeout=600.0
        ) as client:
            return await client.post(path, json=payload)
    async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
        return await client.post(path, json=payload)


def _post(server: str | None, path: str, payload: dict) -> dict:
    response = asyncio.run(_post_async(server, path, payload))
    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        raise ConfigError(f"request rejected: {detail}")
    response.raise_for_status()
    return response.json()


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else repr(x) for x in row])


def _report_lines(reports: list[dict]) -> list[str]:
    lines = []
    for r in reports:
        status = "PASS" if r["passed"] else "FAIL"
        lines.append(
            f"[{status}] {r['name']}: lhs={r['lhs']:.12g} "
            f"{'rhs' if r['kind'] == 'identity' else 'bound'}={r['bound_or_rhs']:.12g} "
            f"slack={r['slack']:.6g} tol={r['tolerance']:.6g} "
            f"disc={r['discretization_estimate']:.3g}"
        )
    return lines


def cmd_verify(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    cfg = _resolve_tabulated(cfg, args.config)
    result = _post(args.server, "/verify", cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "reports.json", result)
    lines = _report_lines(result["reports"])
    n_failed = sum(1 for r in result["reports"] if not r["passed"])
    lines.append(
        "all checks passed" if result["all_passed"] else f"{n_failed} check(s) failed"
    )
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if result["all_passed"] else 1


def _parse_sweep_values(raw: str):
    try:
        values = json.loads(raw)
    except json.JSONDecodeError:
        try:
            values = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(
                f"cannot parse sweep values {raw!r}; pass JSON or comma-separated numbers"
            )
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep values must form a non-empty list")
    return values


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    cfg = _resolve_tabulated(cfg, args.config)
    payload = {
        "config": cfg,
        "parameter": args.parameter,
        "values": _parse_sweep_values(args.values),
    }
    result = _post(args.server, "/sweep", payload)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "sweep.json", result)
    header = ["value", "sigma_q", "sigma_qdot", "product", "bound", "slack"]
    rows = [[r[k] for k in header] for r in result["rows"]]
    _write_csv(out / "sweep.csv", header, rows)
    tol = cfg.get("tolerance", 1e-6)
    worst = min(r["slack"] for r in result["rows"])
    print(f"swept {args.parameter} over {len(rows)} value(s); worst slack {worst:.6g}")
    return 0 if worst >= -tol else 1


def cmd_sample(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    cfg = _resolve_tabulated(cfg, args.config)
    if args.n_samples is not None:
        cfg.setdefault("mc", {})["n_samples"] = args.n_samples
    if args.include_samples:
        cfg.setdefault("mc", {})["include_samples"] = True
    result = _post(args.server, "/sample", cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    stats = result["stats"]
    hist = result["histogram"]
    _dump_json(out / "sample_stats.json", {"config": result["config"], "stats": stats,
                                           "histogram": hist})
    edges = hist["bin_edges"]
    rows = [
        [edges[i], edges[i + 1], hist["counts"][i]]
        for i in range(len(hist["counts"]))
    ]
    _write_csv(out / "histogram.csv", ["bin_lo", "bin_hi", "count"], rows)
    if result.get("samples"):
        _write_csv(out / "samples.csv", ["q", "lambda"], result["samples"])

    lines = _report_lines([stats])
    ok = stats["passed"]
    if hist["analytic_available"]:
        ks_ok = hist["ks_statistic"] <= hist["ks_critical_1pct"]
        status = "PASS" if ks_ok else "FAIL"
        lines.append(
            f"[{status}] velocity_distribution: ks={hist['ks_statistic']:.6g} "
            f"crit(1%)={hist['ks_critical_1pct']:.6g}"
        )
        ok = ok and ks_ok
    else:
        lines.append("velocity_distribution: no closed form for this state")
    print("\n".join(lines))
    return 0 if ok else 1


def cmd_report(args) -> int:
    try:
        with open(args.path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report file {args.path}: {exc}")
    if "reports" in data:
        print("\n".join(_report_lines(data["reports"])))
        n_failed = sum(1 for r in data["reports"] if not r["passed"])
        print("all checks passed" if n_failed == 0 else f"{n_failed} check(s) failed")
        return 0 if n_failed == 0 else 1
    if "rows" in data:
        for row in data["rows"]:
            print(
                f"{row['value']}: sigma_q={row['sigma_q']:.12g} "
                f"sigma_qdot={row['sigma_qdot']:.12g} product={row['product']:.12g} "
                f"slack={row['slack']:.6g}"
            )
        return 0
    raise ConfigError(f"{args.path} is neither a verify nor a sweep result")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uncertlab",
        description="Verify position/velocity uncertainty bounds numerically.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--server", help="base URL of a running service; default runs in-process")
        p.add_argument("--seed", type=int, help="override the sampling seed")
        p.add_argument("--grid-points", type=int, dest="grid_points",
                       help="override the automatic grid point count")
        p.add_argument("--tol", type=float, help="override the check tolerance")

    p = sub.add_parser("verify", help="run the full battery of checks")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="scan one parameter and tabulate the products")
    common(p)
    p.add_argument("--parameter", required=True,
                   choices=["slit_width", "lambda_atoms", "q0"])
    p.add_argument("--values", required=True,
                   help="comma-separated numbers, or JSON for atom lists")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="draw samples and test concordance")
    common(p)
    p.add_argument("--n-samples", type=int, dest="n_samples",
                   help="override the sample count")
    p.add_argument("--include-samples", action="store_true",
                   help="also write the raw samples as CSV")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("report", help="pretty-print a result file")
    p.add_argument("path", help="reports.json or sweep.json produced earlier")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
