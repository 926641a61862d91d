"""FastAPI service exposing the lab's operations.

Every endpoint is a pure computation over the request body; the service
holds no state, so responses are deterministic for a fixed request
(including the worker count, whose partial results merge in a fixed order).
"""

from __future__ import annotations

import json
from typing import Iterator

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse

from .. import __version__
from ..checks import ALL_CHECKS, LEMMA_CHECKS, run_checks
from ..freegroup import ReducedWord, stallings_build
from ..injections import (
    MalnormalityViolated,
    fiber_statistics,
    free_injection_scan,
    malnormal_injection_scan,
)
from ..schottky import CertificateFailed, orbit_enumerate
from ..series import (
    DisplacementTable,
    EmptyKernel,
    EmptyWindow,
    NoSignChange,
    default_counting_window,
    delta_via_counting,
    delta_via_pressure,
    subgroup_delta,
)
from .models import (
    CheckReportModel,
    DeltaRequest,
    DeltaResponse,
    FiberRequest,
    FiberResponse,
    HealthResponse,
    InjectionRequest,
    InjectionResponse,
    OrbitRequest,
    ReportRequest,
    ReportResponse,
    SubgroupDeltaRequest,
    VerifyRequest,
    VerifyResponse,
)

_DOMAIN_ERRORS = (
    CertificateFailed,
    MalnormalityViolated,
    EmptyKernel,
    EmptyWindow,
    NoSignChange,
    ValueError,
)


def _domain(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _estimate_delta(req: DeltaRequest) -> DeltaResponse:
    group = req.group.build()
    table = DisplacementTable.build(group, req.L, workers=req.workers)
    if req.method == "pressure":
        est = delta_via_pressure(group, req.L, tol=req.tol, table=table)
    else:
        window = req.window or default_counting_window(table)
        est = delta_via_counting(
            table, window[0], window[1], bin_width=req.bin_width
        )
    return DeltaResponse(**est.to_dict())


def _subgroup_delta(req: SubgroupDeltaRequest) -> DeltaResponse:
    group = req.group.build()
    hom = req.hom.build(group.k)
    est = subgroup_delta(
        group, hom, req.L, req.window, workers=req.workers, bin_width=req.bin_width
    )
    return DeltaResponse(**est.to_dict())


def _verify(req: VerifyRequest) -> VerifyResponse:
    group = req.group.build()
    hom = req.hom.build(group.k)
    names = tuple(req.checks) if req.checks else LEMMA_CHECKS
    unknown = [n for n in names if n not in ALL_CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; available: {list(ALL_CHECKS)}")
    reports = run_checks(
        group,
        hom,
        ReducedWord.from_str(req.h0),
        checks=names,
        L=req.L,
        s=req.s,
        n_window=req.n_window,
        samples=req.samples,
        seed=req.seed,
        coset_L=req.coset_L,
        theorem_L=req.theorem_L,
        workers=req.workers,
    )
    checks = {k: CheckReportModel(**r.to_dict()) for k, r in reports.items()}
    return VerifyResponse(
        checks=checks, all_passed=all(r.passed for r in reports.values())
    )


def _fiber(req: FiberRequest) -> FiberResponse:
    group = req.group.build()
    hom = req.hom.build(group.k)
    rep = fiber_statistics(group, ReducedWord.from_str(req.h0), hom, req.L)
    data = rep.to_dict()
    data["within_bound"] = rep.within_bound
    return FiberResponse(**data)


def _injection(req: InjectionRequest) -> InjectionResponse:
    hom = req.hom.build(req.k) if req.hom is not None else None
    if req.case == "free":
        report = free_injection_scan(
            ReducedWord.from_str(req.h0), req.L, hom, k=req.k
        )
    else:
        if not req.h1 or not req.h2:
            raise ValueError("malnormal case needs h1 and h2")
        graph = stallings_build(
            [ReducedWord.from_str(req.h1), ReducedWord.from_str(req.h2)]
        )
        report = malnormal_injection_scan(
            graph, req.L, hom, k=req.k, violation_bound=req.violation_bound
        )
    data = report.to_dict()
    data["collisions"] = report.collisions
    data["injective_on_scan"] = report.injective_on_scan
    return InjectionResponse(**data)


def _orbit_rows(group, L, radius) -> Iterator[str]:
    yield "word,displacement\n"
    for entry in orbit_enumerate(group, L, radius):
        yield f"{entry.word},{entry.displacement!r}\n"


def _report(req: ReportRequest) -> ReportResponse:
    delta = _estimate_delta(
        DeltaRequest(group=req.group, L=req.L, tol=req.tol, workers=req.workers)
    )
    sub = _subgroup_delta(
        SubgroupDeltaRequest(
            group=req.group,
            hom=req.hom,
            L=req.L,
            bin_width=req.bin_width,
            window=req.window,
            workers=req.workers,
        )
    )
    verify = _verify(
        VerifyRequest(
            group=req.group,
            hom=req.hom,
            h0=req.h0,
            checks=list(ALL_CHECKS),
            L=req.L,
            s=req.s,
            n_window=req.n_window,
            samples=req.samples,
            seed=req.seed,
            coset_L=req.coset_L,
            theorem_L=req.theorem_L,
            workers=req.workers,
        )
    )
    fiber = _fiber(
        FiberRequest(group=req.group, hom=req.hom, h0=req.h0, L=min(req.L, 8))
    )
    injection = _injection(
        InjectionRequest(
            case=req.case,
            hom=req.hom,
            k=req.group.k,
            h0=req.h0,
            h1=req.h1,
            h2=req.h2,
            L=min(req.L, 8),
            violation_bound=req.violation_bound,
        )
    )
    all_passed = (
        verify.all_passed and fiber.within_bound and injection.injective_on_scan
        and not injection.kernel_failures
    )
    return ReportResponse(
        config=json.loads(req.model_dump_json()),
        delta=delta,
        subgroup_delta=sub,
        checks=verify.checks,
        fiber=fiber,
        injection=injection,
        all_passed=all_passed,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="explab", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/estimate-delta", response_model=DeltaResponse)
    def estimate_delta(req: DeltaRequest) -> DeltaResponse:
        return _domain(_estimate_delta, req)

    @app.post("/subgroup-delta", response_model=DeltaResponse)
    def subgroup_delta_endpoint(req: SubgroupDeltaRequest) -> DeltaResponse:
        return _domain(_subgroup_delta, req)

    @app.post("/verify-lemmas", response_model=VerifyResponse)
    def verify_lemmas(req: VerifyRequest) -> VerifyResponse:
        return _domain(_verify, req)

    @app.post("/fiber-stats", response_model=FiberResponse)
    def fiber_stats(req: FiberRequest) -> FiberResponse:
        return _domain(_fiber, req)

    @app.post("/injection-scan", response_model=InjectionResponse)
    def injection_scan(req: InjectionRequest) -> InjectionResponse:
        return _domain(_injection, req)

    @app.post("/orbit/csv")
    def orbit_csv(req: OrbitRequest) -> StreamingResponse:
        group = _domain(req.group.build)  # certificate errors surface eagerly
        rows = _orbit_rows(group, req.L, req.radius)
        return StreamingResponse(rows, media_type="text/csv")

    @app.post("/report", response_model=ReportResponse)
    def report(req: ReportRequest) -> ReportResponse:
        return _domain(_report, req)

    return app


app = create_app()
