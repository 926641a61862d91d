"""Command-line client of the explab service.

The CLI owns no computation: every subcommand issues an HTTP request,
against a remote service when --server is given, otherwise against the
FastAPI app mounted in-process (so no server needs to run for local work).
Outputs are machine-readable JSON/CSV; exit status is 2 for configuration
errors and 1 when a requested check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from .config import RunConfig, merged_config, parse_group_flag, parse_hom_flag

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2

_MALNORMAL_REFUSAL = "subgroup is not malnormal"


class _InProcessClient:
    """Synchronous facade speaking HTTP to the service app mounted
    in-process; used whenever no --server is given."""

    def __init__(self):
        from .service.app import create_app

        self._app = create_app()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def post(self, route: str, json=None) -> httpx.Response:
        import asyncio

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://explab.local", timeout=None
            ) as client:
                return await client.post(route, json=json)

        return asyncio.run(go())


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    return _InProcessClient()


def _dump_json(payload: dict, path: Path | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        print(f"wrote {path}")


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _post(client: httpx.Client, route: str, payload: dict) -> dict:
    response = client.post(route, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        if isinstance(detail, str) and detail.startswith(_MALNORMAL_REFUSAL):
            print(f"error: {detail}", file=sys.stderr)
            raise SystemExit(EXIT_CHECK_FAILED)
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return response.json()


def _config_from_args(args) -> RunConfig:
    overrides = {}
    if getattr(args, "group", None):
        overrides["group"] = parse_group_flag(args.group).model_dump()
    if getattr(args, "hom", None):
        overrides["hom"] = parse_hom_flag(args.hom).model_dump()
    for key in (
        "h0", "L", "s", "workers", "out", "n_window", "samples", "seed", "tol",
        "bin_width", "radius", "coset_L", "theorem_L", "case", "h1", "h2",
        "violation_bound",
    ):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "window", None):
        lo, _, hi = args.window.partition(",")
        overrides["window"] = (float(lo), float(hi))
    return merged_config(getattr(args, "config", None), overrides)


def _group_hom_payload(cfg: RunConfig) -> dict:
    return {"group": cfg.group.model_dump(), "hom": cfg.hom.model_dump()}


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_estimate_delta(args) -> int:
    cfg = _config_from_args(args)
    payload = {
        "group": cfg.group.model_dump(),
        "L": cfg.L,
        "method": args.method,
        "tol": cfg.tol,
        "bin_width": cfg.bin_width,
        "window": cfg.window,
        "workers": cfg.workers,
    }
    with _client(args.server) as client:
        data = _post(client, "/estimate-delta", payload)
    out = _out_dir(args)
    _dump_json(data, out / "delta.json" if out else None)
    print(f"delta[{data['method']}] = {data['value']:.5f} (L={data['cutoff']})",
          file=sys.stderr)
    return EXIT_OK


def cmd_subgroup_delta(args) -> int:
    cfg = _config_from_args(args)
    payload = {
        **_group_hom_payload(cfg),
        "L": cfg.L,
        "bin_width": cfg.bin_width,
        "window": cfg.window,
        "workers": cfg.workers,
    }
    with _client(args.server) as client:
        data = _post(client, "/subgroup-delta", payload)
    out = _out_dir(args)
    _dump_json(data, out / "delta.json" if out else None)
    print(f"subgroup delta[{data['method']}] = {data['value']:.5f}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_lemmas(args) -> int:
    cfg = _config_from_args(args)
    checks = None
    if args.checks and args.checks != "all":
        checks = args.checks.split(",")
    if args.with_theorem_bound:
        from .checks import ALL_CHECKS

        checks = list(ALL_CHECKS)
    payload = {
        **_group_hom_payload(cfg),
        "h0": cfg.h0,
        "checks": checks,
        "L": cfg.L,
        "s": cfg.s,
        "n_window": cfg.n_window,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "coset_L": cfg.coset_L,
        "theorem_L": cfg.theorem_L,
        "workers": cfg.workers,
    }
    with _client(args.server) as client:
        data = _post(client, "/verify-lemmas", payload)
    out = _out_dir(args)
    _dump_json(data, out / "manifest.json" if out else None)
    for name, rep in data["checks"].items():
        status = "PASS" if rep["passed"] else "FAIL"
        line = f"{status} {name}: worst slack {rep['worst_slack']:.3g} over {rep['cases']} cases"
        if not rep["passed"] and rep.get("witness"):
            line += f" (witness: {rep['witness']})"
        print(line, file=sys.stderr)
    return EXIT_OK if data["all_passed"] else EXIT_CHECK_FAILED


def cmd_fiber_stats(args) -> int:
    cfg = _config_from_args(args)
    payload = {**_group_hom_payload(cfg), "h0": cfg.h0, "L": cfg.L}
    with _client(args.server) as client:
        data = _post(client, "/fiber-stats", payload)
    out = _out_dir(args)
    _dump_json(data, out / "fiber.json" if out else None)
    print(
        f"max fiber {data['max_fiber']} (bound {data['bound']}) over "
        f"{data['cosets_scanned']} cosets",
        file=sys.stderr,
    )
    return EXIT_OK if data["within_bound"] else EXIT_CHECK_FAILED


def cmd_injection_scan(args) -> int:
    cfg = _config_from_args(args)
    payload = {
        "case": cfg.case,
        "hom": cfg.hom.model_dump(),
        "k": cfg.group.k,
        "h0": cfg.h0,
        "h1": cfg.h1,
        "h2": cfg.h2,
        "L": cfg.L,
        "violation_bound": cfg.violation_bound,
    }
    with _client(args.server) as client:
        data = _post(client, "/injection-scan", payload)
    out = _out_dir(args)
    _dump_json(data, out / "injection.json" if out else None)
    ok = data["injective_on_scan"] and not data["kernel_failures"]
    print(
        f"scanned {data['scanned']} words: {len(data['collisions'])} collisions, "
        f"{len(data['kernel_failures'])} kernel failures",
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    cfg = _config_from_args(args)
    payload = {
        **_group_hom_payload(cfg),
        "h0": cfg.h0,
        "L": cfg.L,
        "s": cfg.s,
        "n_window": cfg.n_window,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tol": cfg.tol,
        "bin_width": cfg.bin_width,
        "window": cfg.window,
        "coset_L": cfg.coset_L,
        "theorem_L": cfg.theorem_L,
        "case": cfg.case,
        "h1": cfg.h1,
        "h2": cfg.h2,
        "violation_bound": cfg.violation_bound,
        "workers": cfg.workers,
    }
    with _client(args.server) as client:
        data = _post(client, "/report", payload)
        out = _out_dir(args)
        if out:
            _dump_json(data, out / "manifest.json")
            _dump_json(data["delta"], out / "delta.json")
            rows = client.post(
                "/orbit/csv",
                json={"group": cfg.group.model_dump(), "L": cfg.L,
                      "radius": cfg.radius},
            )
            (out / "orbit.csv").write_bytes(rows.content)
            print(f"wrote {out / 'orbit.csv'}")
        else:
            _dump_json(data, None)
    print(f"all_passed = {data['all_passed']}", file=sys.stderr)
    return EXIT_OK if data["all_passed"] else EXIT_CHECK_FAILED


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, hom: bool = True) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--group", help="group spec, e.g. schottky:k=2,t=3")
    if hom:
        p.add_argument("--hom", help="hom spec: abelianization | trivial | mod:2:1,0")
    p.add_argument("--h0", help="distinguished kernel word, e.g. abAB")
    p.add_argument("--L", type=int, help="word-length cutoff")
    p.add_argument("--s", type=float, help="series exponent for the audits")
    p.add_argument("--workers", type=int, help="parallel workers (or EXPLAB_WORKERS)")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--server", help="remote service URL (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="explab",
        description="Exponent-of-convergence laboratory for Schottky groups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-delta", help="estimate the exponent of convergence")
    _add_common(p, hom=False)
    p.add_argument("--method", choices=["pressure", "counting"], default="pressure")
    p.add_argument("--tol", type=float, help="bisection bracket tolerance")
    p.add_argument("--window", help="counting window 'lo,hi'")
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.set_defaults(fn=cmd_estimate_delta)

    p = sub.add_parser("subgroup-delta", help="estimate the kernel's exponent")
    _add_common(p)
    p.add_argument("--window", help="counting window 'lo,hi'")
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.set_defaults(fn=cmd_subgroup_delta)

    p = sub.add_parser("verify-lemmas", help="run the inequality audits")
    _add_common(p)
    p.add_argument("--checks", help="comma list or 'all' (the four lemma audits)")
    p.add_argument("--all", dest="checks", action="store_const", const="all")
    p.add_argument(
        "--with-theorem-bound",
        action="store_true",
        help="also run the half-exponent bound check",
    )
    p.add_argument("--n-window", dest="n_window", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--coset-L", dest="coset_L", type=int)
    p.add_argument("--theorem-L", dest="theorem_L", type=int)
    p.set_defaults(fn=cmd_verify_lemmas)

    p = sub.add_parser("fiber-stats", help="fiber sizes of the conjugation map")
    _add_common(p)
    p.set_defaults(fn=cmd_fiber_stats)

    p = sub.add_parser("injection-scan", help="exhaustive injectivity scan")
    _add_common(p)
    p.add_argument("--case", choices=["free", "malnormal"])
    p.add_argument("--h1", help="first subgroup generator (malnormal case)")
    p.add_argument("--h2", help="second subgroup generator (malnormal case)")
    p.add_argument("--violation-bound", dest="violation_bound", type=int)
    p.set_defaults(fn=cmd_injection_scan)

    p = sub.add_parser("report", help="run everything and write all outputs")
    _add_common(p)
    p.add_argument("--n-window", dest="n_window", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--window", help="counting window 'lo,hi'")
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--coset-L", dest="coset_L", type=int)
    p.add_argument("--theorem-L", dest="theorem_L", type=int)
    p.add_argument("--case", choices=["free", "malnormal"])
    p.add_argument("--h1")
    p.add_argument("--h2")
    p.add_argument("--violation-bound", dest="violation_bound", type=int)
    p.add_argument("--R", dest="radius", type=float, help="orbit radius filter")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
