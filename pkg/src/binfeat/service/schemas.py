"""Request and response bodies for the service endpoints.

Data sources are file paths or synth: descriptors resolved server side;
output files are written server side too, so the CLI stays a thin client.
The regularizer field is spelled "lambda" on the wire.
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class _Base(BaseModel):
    model_config = ConfigDict(populate_by_name=True, protected_namespaces=())


class TransformRequest(_Base):
    data: str
    method: str = "rb"
    sigma: float = 1.0
    r: int = 64
    seed: int = 0
    scale: bool = True
    out: Optional[str] = None
    matrix_out: Optional[str] = None


class TransformResponse(_Base):
    method: str
    n_rows: int
    dim: int
    d_cols: Optional[int] = None
    kappa_bar: Optional[float] = None
    nnz: int
    memory_bytes: int
    transform_seconds: float
    out: Optional[str] = None
    matrix_out: Optional[str] = None


class StatsRequest(_Base):
    data: str
    sigma: float = 1.0
    r: int = 64
    seed: int = 0
    scale: bool = True
    out: Optional[str] = None


class StatsResponse(_Base):
    n_rows: int
    dim: int
    r: int
    d_cols: int
    nu: List[float]
    kappa: List[int]
    kappa_mean: float
    kappa_bar: float
    out: Optional[str] = None


class TrainRequest(_Base):
    data: str
    method: str = "rb"
    sigma: float = 1.0
    r: int = 64
    lam: float = Field(0.01, alias="lambda")
    loss: str = "square"
    solver: str = "cg"
    tol: float = 1e-3
    epochs: int = 10
    threads: int = 1
    seed: int = 0
    scale: bool = True
    out: str


class TrainResponse(_Base):
    out: str
    task: str
    d_cols: Optional[int] = None
    kappa_bar: Optional[float] = None
    iterations: int
    converged: bool
    objective: float
    train_metric: float
    metric_kind: str
    transform_seconds: float
    train_seconds: float
    memory_bytes: int


class PredictRequest(_Base):
    model_path: str = Field(alias="model")
    data: str
    out: Optional[str] = None


class PredictResponse(_Base):
    n: int
    predictions: List[float]
    metric: Optional[float] = None
    metric_kind: Optional[str] = None
    out: Optional[str] = None


class _SweepBase(_Base):
    data: str
    test: Optional[str] = None
    methods: List[str] = ["rb"]
    r: int = 64
    lam: float = Field(0.01, alias="lambda")
    loss: str = "square"
    solver: str = "cg"
    tol: float = 1e-3
    epochs: int = 10
    threads: int = 1
    seed: int = 0
    scale: bool = True
    test_fraction: float = 0.25
    out: Optional[str] = None


class SigmaSweepRequest(_SweepBase):
    sigma_grid: Optional[List[float]] = None


class RSweepRequest(_SweepBase):
    sigma: float = 1.0
    r_grid: List[int]


class CompareRequest(_SweepBase):
    methods: List[str] = ["exact", "rb", "rf"]
    sigma: float = 1.0
    r_grid: List[int]
    target: Optional[float] = None
    table_out: Optional[str] = None


class ParallelBenchRequest(_Base):
    data: str
    test: Optional[str] = None
    methods: List[str] = ["rb", "rf"]
    sigma: float = 1.0
    r: int = 64
    lam: float = Field(0.01, alias="lambda")
    loss: str = "square"
    tol: float = 1e-3
    epochs: int = 10
    tau_grid: List[int] = [1, 2, 4, 8]
    seed: int = 0
    scale: bool = True
    test_fraction: float = 0.25
    out: Optional[str] = None


class SweepResponse(_Base):
    n_records: int
    records: List[dict]
    out: Optional[str] = None


class CompareResponse(SweepResponse):
    target: float
    table: List[dict]
    table_text: str
    table_out: Optional[str] = None
