"""FastAPI service exposing the toolkit's five operations.

The endpoints are thin wrappers: parse the request model, call the
corresponding experiment runner, wrap its text outputs.  Domain errors map
to structured HTTP errors; ``budget-exceeded`` is distinguished so clients
can exit with the dedicated status code.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .causal import DegenerateArmError
from .experiments import (CampaignSpec, ExperimentConfig, SimulationParams,
                          run_estimate, run_generate, run_select, run_sweep,
                          run_verify)
from .hypergraph import HypergraphError
from .schemas import (EstimateRequest, EstimateResponse, GenerateRequest,
                      GenerateResponse, SelectRequest, SelectResponse,
                      SweepRequest, SweepResponse, VerifyRequest,
                      VerifyResponse)
from .spread import BudgetExceeded


def _http_error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except BudgetExceeded as exc:
        raise _http_error(409, "budget-exceeded", str(exc))
    except (HypergraphError, DegenerateArmError, ValueError) as exc:
        raise _http_error(422, "invalid-input", str(exc))


def _experiment_config(req: SelectRequest) -> ExperimentConfig:
    return ExperimentConfig(
        method=req.method, k=req.k, p=req.p, model=req.model,
        horizon=req.horizon, select_rounds=req.select_rounds,
        eval_rounds=req.eval_rounds, repetitions=req.repetitions,
        seed=req.seed, noise_sigma=req.noise_sigma, l2=req.l2,
        stop_on_negative=req.stop_on_negative, workers=req.workers,
    )


def build_app() -> FastAPI:
    app = FastAPI(
        title="causalim",
        description="Causal-effect-weighted influence maximization on hypergraphs",
        version="0.1.0",
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/gen", response_model=GenerateResponse)
    def gen(req: GenerateRequest):
        params = SimulationParams(
            d=req.covariate_dim,
            confounding_scale=req.confounding_scale,
            baseline_scale=req.baseline_scale,
            effect_scale=req.effect_scale,
            spillover_scale=req.spillover_scale,
            effect_bias=req.effect_bias,
            noise_scale=req.noise_scale,
        )
        out = _guard(run_generate, req.nodes, req.edges, req.covariate_dim,
                     req.seed, req.membership_weights, params)
        return GenerateResponse(**out)

    @app.post("/api/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest):
        out = _guard(run_estimate, req.graph_text, req.attrs_csv, req.l2)
        return EstimateResponse(**out)

    @app.post("/api/select", response_model=SelectResponse)
    def select(req: SelectRequest):
        cfg = _experiment_config(req)
        out = _guard(run_select, req.graph_text, req.attrs_csv, req.ite_csv, cfg)
        return SelectResponse(**out)

    @app.post("/api/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        cfg = _experiment_config(req)
        out = _guard(run_sweep, req.graph_text, req.attrs_csv, req.ite_csv,
                     cfg, req.param, req.grid)
        return SweepResponse(**out)

    @app.post("/api/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest):
        spec = CampaignSpec(
            theorem1_instances=req.theorem1_instances,
            theorem2_instances=req.theorem2_instances,
            corollary_instances=req.corollary_instances,
            gamma=req.gamma, seed=req.seed, tau_all_one=req.tau_all_one,
            max_nodes=req.max_nodes, max_edges=req.max_edges,
            cap=req.cap, workers=req.workers,
        )
        out = _guard(run_verify, spec)
        return VerifyResponse(**out)

    return app


app = build_app()
