"""HTTP service exposing the experiment harness and interactive
labeling sessions.

Every error surfaces as a JSON envelope {"kind", "message"} where kind
is one of "usage", "data", or "numeric"; clients map those to their own
failure signaling (the bundled CLI maps them to exit codes 1, 2, 3).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..data import Dataset, PoolState, commit_query, init_pool, minmax_rescale
from ..errors import ActivePoolError, DataFormatError, NumericError, UsageError
from ..harness import (
    beta_sweep,
    load_dataset,
    parse_curves_csv,
    render_curves_csv,
    render_summary,
    render_sweep_csv,
    render_wtl_tsv,
    run_experiment,
    summarize_wtl,
)
from ..optimizer import QueryParams, proposed_query, select_margin, select_random
from ..svm import KernelParams, predict_proba, train
from .schemas import (
    BenchDatasetResult,
    BenchRequest,
    BenchResponse,
    ConvertRequest,
    ConvertResponse,
    DatasetSpec,
    RunRequest,
    RunResponse,
    SessionCreateRequest,
    SessionLabelRequest,
    SessionQueryRequest,
    SessionQueryResponse,
    SessionState,
    SweepRequest,
    SweepResponse,
    TtestRequest,
    TtestResponse,
)

_ERROR_STATUS = {"usage": 400, "data": 422, "numeric": 500}


def _error_kind(exc: ActivePoolError) -> str:
    if isinstance(exc, DataFormatError):
        return "data"
    if isinstance(exc, NumericError):
        return "numeric"
    return "usage"


def _parse_dataset(spec: DatasetSpec) -> Dataset:
    return load_dataset(
        spec.content, spec.format, label_column=spec.label_column, name=spec.name
    )


@dataclass
class _Session:
    id: str
    dataset: Dataset
    features: np.ndarray
    pool: PoolState
    kernel: KernelParams
    query: QueryParams
    seed: int
    lock: threading.Lock = field(default_factory=threading.Lock)

    def state(self) -> SessionState:
        return SessionState(
            id=self.id,
            name=self.dataset.name,
            n_samples=self.dataset.n_samples,
            n_features=self.dataset.n_features,
            labeled=list(self.pool.labeled),
            labels={int(i): int(l) for i, l in zip(self.pool.labeled, self.pool.labels)},
            unlabeled_count=len(self.pool.unlabeled),
            iteration=self.pool.iteration,
        )


def create_app() -> FastAPI:
    app = FastAPI(title="activepool", docs_url="/docs")
    sessions: dict[str, _Session] = {}
    store_lock = threading.Lock()

    @app.exception_handler(ActivePoolError)
    async def _domain_error(request: Request, exc: ActivePoolError) -> JSONResponse:
        kind = _error_kind(exc)
        return JSONResponse(
            status_code=_ERROR_STATUS[kind],
            content={"kind": kind, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"kind": "usage", "message": str(exc)}
        )

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post("/experiments/run", response_model=RunResponse)
    def experiments_run(request: RunRequest) -> RunResponse:
        dataset = _parse_dataset(request.dataset)
        config = request.settings.to_config()
        results = run_experiment(dataset, config)
        wtl = None
        if len(config.strategies) >= 2 and "proposed" in config.strategies and config.runs >= 2:
            wtl = summarize_wtl(
                results,
                checkpoints=tuple(request.checkpoints) if request.checkpoints else None,
            )
        return RunResponse(
            curves_csv=render_curves_csv(results),
            summary_txt=render_summary(dataset, config, results, wtl),
            wtl_tsv=render_wtl_tsv([(dataset.name or "dataset", wtl)]) if wtl else None,
        )

    @app.post("/experiments/bench", response_model=BenchResponse)
    def experiments_bench(request: BenchRequest) -> BenchResponse:
        if not request.datasets:
            raise UsageError("bench needs at least one dataset")
        config = request.settings.to_config()
        per_dataset = []
        wtl_rows = []
        for spec in request.datasets:
            dataset = _parse_dataset(spec)
            results = run_experiment(dataset, config)
            wtl = None
            if len(config.strategies) >= 2 and "proposed" in config.strategies and config.runs >= 2:
                wtl = summarize_wtl(
                    results,
                    checkpoints=tuple(request.checkpoints)
                    if request.checkpoints
                    else None,
                )
                wtl_rows.append((dataset.name or "dataset", wtl))
            per_dataset.append(
                BenchDatasetResult(
                    name=dataset.name or "dataset",
                    curves_csv=render_curves_csv(results),
                    summary_txt=render_summary(dataset, config, results, wtl),
                )
            )
        return BenchResponse(results=per_dataset, wtl_tsv=render_wtl_tsv(wtl_rows))

    @app.post("/experiments/sweep", response_model=SweepResponse)
    def experiments_sweep(request: SweepRequest) -> SweepResponse:
        dataset = _parse_dataset(request.dataset)
        config = request.settings.to_config()
        betas = tuple(request.betas) if request.betas else None
        sweep = beta_sweep(dataset, config, betas)
        return SweepResponse(sweep_csv=render_sweep_csv(sweep))

    @app.post("/analysis/ttest", response_model=TtestResponse)
    def analysis_ttest(request: TtestRequest) -> TtestResponse:
        if not request.curves:
            raise UsageError("ttest needs at least one curves document")
        rows = []
        for named in request.curves:
            results = parse_curves_csv(named.content)
            rows.append(
                (
                    named.name,
                    summarize_wtl(
                        results,
                        checkpoints=tuple(request.checkpoints)
                        if request.checkpoints
                        else None,
                        reference=request.reference,
                        significance=request.significance,
                    ),
                )
            )
        return TtestResponse(wtl_tsv=render_wtl_tsv(rows))

    @app.post("/datasets/convert", response_model=ConvertResponse)
    def datasets_convert(request: ConvertRequest) -> ConvertResponse:
        from ..data import serialize_csv, serialize_sparse

        dataset = _parse_dataset(request.dataset)
        if request.dataset.format == "sparse":
            return ConvertResponse(content=serialize_csv(dataset), format="csv")
        return ConvertResponse(content=serialize_sparse(dataset), format="sparse")

    # ------------------------------------------------------------------
    # interactive labeling sessions

    @app.post("/sessions", response_model=SessionState)
    def create_session(request: SessionCreateRequest) -> SessionState:
        dataset = _parse_dataset(request.dataset)
        features = minmax_rescale(dataset.features) if request.normalize else dataset.features
        if request.seed_one_per_class:
            pool = init_pool(dataset.labels, request.seed)
        else:
            pool = PoolState(
                labeled=(), unlabeled=tuple(range(dataset.n_samples)), labels=()
            )
        session = _Session(
            id=uuid.uuid4().hex,
            dataset=dataset,
            features=features,
            pool=pool,
            kernel=KernelParams(c_reg=request.svm_c, kernel_gamma=request.svm_gamma),
            query=QueryParams(
                beta=request.beta,
                prob_gamma=request.prob_gamma,
                negated_position_exponent=request.negated_position_exponent,
            ),
            seed=request.seed,
        )
        with store_lock:
            sessions[session.id] = session
        return session.state()

    def _get_session(session_id: str) -> _Session:
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise UsageError(f"no session {session_id!r}")
        return session

    @app.get("/sessions", response_model=list[SessionState])
    def list_sessions() -> list[SessionState]:
        with store_lock:
            items = list(sessions.values())
        return [s.state() for s in items]

    @app.get("/sessions/{session_id}", response_model=SessionState)
    def get_session(session_id: str) -> SessionState:
        return _get_session(session_id).state()

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        with store_lock:
            if session_id not in sessions:
                raise UsageError(f"no session {session_id!r}")
            del sessions[session_id]
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/query", response_model=SessionQueryResponse)
    def session_query(session_id: str, request: SessionQueryRequest) -> SessionQueryResponse:
        session = _get_session(session_id)
        with session.lock:
            pool = session.pool
            if not pool.unlabeled:
                raise UsageError("unlabeled pool is exhausted")
            if request.strategy == "random":
                index = select_random(pool, session.seed)
            else:
                if len(set(pool.labels)) < 2:
                    raise UsageError(
                        "need labeled samples from at least two classes before "
                        f"a {request.strategy!r} query"
                    )
                labeled = list(pool.labeled)
                model = train(
                    session.features[labeled], np.array(pool.labels), session.kernel
                )
                if request.strategy == "margin":
                    position = select_margin(
                        model, session.features[list(pool.unlabeled)]
                    )
                    index = int(pool.unlabeled[position])
                else:
                    probs_all = predict_proba(model, session.features)
                    index = proposed_query(
                        model, pool, probs_all, session.query
                    ).pool_index
            return SessionQueryResponse(
                index=index, strategy=request.strategy, iteration=pool.iteration
            )

    @app.post("/sessions/{session_id}/labels", response_model=SessionState)
    def session_label(session_id: str, request: SessionLabelRequest) -> SessionState:
        session = _get_session(session_id)
        with session.lock:
            session.pool = commit_query(session.pool, request.index, request.label)
            return session.state()

    return app
