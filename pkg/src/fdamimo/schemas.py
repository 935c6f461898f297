"""Pydantic request/response models for the HTTP service.

Units at this boundary: SI everywhere, angles in degrees.  Complex numbers
travel as {"re": ..., "im": ...} pairs.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ComplexPair(BaseModel):
    re: float
    im: float


class RadarConfigModel(BaseModel):
    n_tx: int = 4
    n_rx: int = 4
    f0: float = 10e9
    delta_f: float = 10e3
    energy: float = 1.0
    c: float = 299_792_458.0


class TargetModel(BaseModel):
    theta_deg: float = 30.0
    r_m: float = 6000.0
    alpha_re: float = 1.0
    alpha_im: float = 0.0


class OffsetModelSchema(BaseModel):
    sigma_t: float = 500.0
    sigma_r: float = 500.0
    seed: int = 0
    tx_law: str = "gaussian"
    rx_law: str = "gaussian"


class SearchModel(BaseModel):
    window: bool = True
    theta_halfwidth_deg: float = 2.0
    r_halfwidth_m: float = 600.0


class SweepModel(BaseModel):
    param: str
    values: list[float]


class ScenarioModel(BaseModel):
    config: RadarConfigModel = Field(default_factory=RadarConfigModel)
    targets: list[TargetModel] = Field(default_factory=lambda: [TargetModel()])
    offsets: OffsetModelSchema = Field(default_factory=OffsetModelSchema)
    snr_db: Optional[float] = 20.0    # null means no white noise
    n_pulses: int = 200
    n_trials: int = 200
    estimators: list[str] = Field(default_factory=lambda: ["music2d"])
    sweep: Optional[SweepModel] = None
    seed: int = 0
    search: SearchModel = Field(default_factory=SearchModel)
    target_jitter: bool = False
    phase_fluctuation: bool = False
    anm_pulses: int = 20


class SimulateRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    n_pulses: Optional[int] = None
    pipeline: str = "approx"          # approx | exact


class PulseMatrix(BaseModel):
    pulse_index: int
    y: list[list[ComplexPair]]        # M rows of N entries


class SimulateResponse(BaseModel):
    scenario: dict
    pulses: list[PulseMatrix]


class EqsnrRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    mode: str = "both"                # model | empirical | both
    n_pulses: int = 1000


class EqsnrResponse(BaseModel):
    scenario: str
    sigma_over_df: float
    r_over_rmax: float
    snr_model_db: Optional[float] = None
    snr_empirical_db: Optional[float] = None


class EqsnrTableRequest(BaseModel):
    table: str = "tx"                 # tx | rx
    n_pulses: int = 1000
    seed: int = 0


class TableModel(BaseModel):
    name: str
    columns: list
    rows: list
    meta: dict = Field(default_factory=dict)


class EstimateRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    method: str = "music2d"


class EstimateModel(BaseModel):
    theta_deg: float
    r_m: Optional[float]
    amplitude_re: float
    amplitude_im: float
    method: str
    diagnostics: dict


class EstimateResponse(BaseModel):
    scenario: dict
    estimates: list[EstimateModel]


class StructureRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    sigma0: float = 0.0


class StructureResponse(BaseModel):
    ct_block_toeplitz: bool
    ct_blocks_rank1: bool
    ct_singular: bool
    cr_diagonal: bool
    all_hermitian: bool
    deviations: dict


class CrlbRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    sweep: SweepModel = Field(default_factory=lambda: SweepModel(
        param="snr", values=[0.0, 10.0, 20.0]))
    snr_db: float = 20.0
    n_pulses: int = 1


class CrlbResponse(BaseModel):
    rows: list[dict]
    columns: list[str]


class McRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)


class FigureRequest(BaseModel):
    name: str
    seed: int = 0
    trials: Optional[int] = None
    pulses: Optional[int] = None


class FilePayload(BaseModel):
    name: str
    content: str


class FigureResponse(BaseModel):
    files: list[FilePayload]
    tables: list[TableModel]
