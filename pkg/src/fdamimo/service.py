"""FastAPI service exposing the simulation and estimation toolkit.

Thin wrapper: endpoints validate with the pydantic schemas, convert to the
core dataclasses, call the library and serialize back.  Domain errors map
to 400, config/shape errors surfaced by pydantic map to 422.
"""

from __future__ import annotations

import json
import math

from fastapi import FastAPI, HTTPException

from . import schemas
from .config import DomainError, NumericError
from .crlb import crlb_curve
from .emitters import svg_from_table, table_to_csv
from .experiments import (CURVE_NAMES, Scenario, curve_tables, monte_carlo,
                          reproduce_eqsnr_tables, run_estimator,
                          scenario_from_dict)
from .noise_stats import covariance_model, equalized_snr, structure_report
from .signal_model import draw_stack, matched_output_exact, sample_offsets

__all__ = ["app", "create_app"]


def _to_scenario(model: schemas.ScenarioModel) -> Scenario:
    try:
        return scenario_from_dict(model.model_dump())
    except DomainError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DomainError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except NumericError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="fdamimo",
                  description="FDA-MIMO range-angle estimation with "
                              "transmit/receive frequency offsets")

    @app.get("/health")
    def health():
        from . import __version__
        return {"status": "ok", "version": __version__}

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        scn = _to_scenario(req.scenario)
        n_pulses = req.n_pulses or scn.n_pulses
        if req.pipeline not in ("approx", "exact"):
            raise HTTPException(400, f"unknown pipeline {req.pipeline!r}")
        pulses = []
        if req.pipeline == "approx":
            x = _guard(draw_stack, scn.cfg, scn.targets, scn.offsets,
                       scn.snr_db, n_pulses)
            mats = [x[:, i].reshape(scn.cfg.n_rx, scn.cfg.n_tx, order="F")
                    for i in range(n_pulses)]
        else:
            if len(scn.targets) != 1:
                raise HTTPException(400, "the exact pipeline simulates a "
                                         "single target")
            mats = []
            for ell in range(n_pulses):
                draw = sample_offsets(scn.cfg, scn.offsets, ell)
                mats.append(_guard(matched_output_exact, scn.cfg,
                                   scn.targets[0], draw).y)
        for i, y in enumerate(mats):
            pulses.append(schemas.PulseMatrix(
                pulse_index=i,
                y=[[schemas.ComplexPair(re=float(v.real), im=float(v.imag))
                    for v in row] for row in y]))
        return schemas.SimulateResponse(scenario=scn.to_dict(), pulses=pulses)

    @app.post("/eqsnr", response_model=schemas.EqsnrResponse)
    def eqsnr(req: schemas.EqsnrRequest):
        scn = _to_scenario(req.scenario)
        if req.mode not in ("model", "empirical", "both"):
            raise HTTPException(400, f"unknown mode {req.mode!r}")
        rep = _guard(equalized_snr, scn.cfg, scn.targets[0], scn.offsets,
                     mode=req.mode, n_pulses=req.n_pulses)
        doc = rep.to_dict()
        for key in ("snr_model_db", "snr_empirical_db"):
            if doc[key] is not None and math.isinf(doc[key]):
                doc[key] = None
        return schemas.EqsnrResponse(**doc)

    @app.post("/eqsnr/table", response_model=schemas.TableModel)
    def eqsnr_table(req: schemas.EqsnrTableRequest):
        if req.table not in ("tx", "rx"):
            raise HTTPException(400, f"table must be 'tx' or 'rx', "
                                     f"got {req.table!r}")
        tables = _guard(reproduce_eqsnr_tables, n_pulses=req.n_pulses,
                        seed=req.seed)
        return schemas.TableModel(**tables[req.table].to_json_obj())

    @app.post("/estimate", response_model=schemas.EstimateResponse)
    def estimate(req: schemas.EstimateRequest):
        scn = _to_scenario(req.scenario)
        x = _guard(draw_stack, scn.cfg, scn.targets, scn.offsets, scn.snr_db,
                   scn.n_pulses)
        grid = scn.search.grid(scn.cfg, scn.targets)
        estimates = _guard(run_estimator, req.method, x, scn, grid)
        return schemas.EstimateResponse(
            scenario=scn.to_dict(),
            estimates=[schemas.EstimateModel(**e.to_dict()) for e in estimates])

    @app.post("/structure", response_model=schemas.StructureResponse)
    def structure(req: schemas.StructureRequest):
        scn = _to_scenario(req.scenario)
        cov = _guard(covariance_model, scn.cfg, scn.targets[0], scn.offsets,
                     sigma0=req.sigma0)
        rep = structure_report(cov, n_rx=scn.cfg.n_rx)
        return schemas.StructureResponse(**rep.to_dict())

    @app.post("/crlb", response_model=schemas.CrlbResponse)
    def crlb(req: schemas.CrlbRequest):
        scn = _to_scenario(req.scenario)
        if req.sweep.param not in ("sigma_t", "sigma_r", "snr"):
            raise HTTPException(400, f"unknown sweep {req.sweep.param!r}")
        rows = _guard(crlb_curve, scn.cfg, scn.targets[0], req.sweep.param,
                      req.sweep.values, offsets=scn.offsets,
                      snr_db=req.snr_db, n_pulses=req.n_pulses)
        return schemas.CrlbResponse(
            rows=rows, columns=["sweep_value", "crlb_r_m2", "crlb_theta_rad2"])

    @app.post("/mc", response_model=schemas.TableModel)
    def mc(req: schemas.McRequest):
        scn = _to_scenario(req.scenario)
        table = _guard(monte_carlo, scn)
        return schemas.TableModel(**table.to_json_obj())

    @app.post("/figures", response_model=schemas.FigureResponse)
    def figures(req: schemas.FigureRequest):
        if req.name not in CURVE_NAMES:
            raise HTTPException(400, f"unknown figure {req.name!r}; "
                                     f"choose from {CURVE_NAMES}")
        tables = _guard(curve_tables, req.name, seed=req.seed,
                        trials=req.trials, pulses=req.pulses)
        files = []
        for t in tables:
            files.append(schemas.FilePayload(name=f"{t.name}.csv",
                                             content=table_to_csv(t)))
            files.append(schemas.FilePayload(name=f"{t.name}.svg",
                                             content=svg_from_table(t)))
            scn_meta = t.meta.get("scenario", t.meta)
            files.append(schemas.FilePayload(
                name=f"{t.name}.scenario.json",
                content=json.dumps(scn_meta, indent=2) + "\n"))
        return schemas.FigureResponse(
            files=files,
            tables=[schemas.TableModel(**t.to_json_obj()) for t in tables])

    return app


app = create_app()
