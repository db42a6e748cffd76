"""Pydantic models for the input files and the CLI run configuration.

Validation failures surface as pydantic ValidationErrors whose `loc`
points at the offending field; the CLI turns them into exit code 2.
"""
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.population import CanningsModel, MutationLaw, WrightFisherLaw
from app.models.rates import RateTable, XiAtom, XiSpec
from app.models.reports import PpfTable
from app.models.tensor import MergeTensor

Exact = Union[int, float, str]


def parse_number(value: Exact) -> Union[Fraction, float]:
    """Fraction for integers and strings such as "3/8", float otherwise."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, float):
        return value
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a number: {value!r} ({e})")


class ModelFile(BaseModel):
    """A Cannings model with a built-in offspring law.

    counts[k][l] = N_{k,l}: rows are parent types, columns offspring types,
    both 0-based positions in the file.
    """
    d: int = Field(ge=1)
    N: List[int]
    law: Literal["wright-fisher", "mutation"]
    counts: List[List[int]]

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "d": 2,
                "N": [4, 6],
                "law": "wright-fisher",
                "counts": [[3, 2], [1, 4]]
            }
        }
    )

    @model_validator(mode='after')
    def check_model(self) -> "ModelFile":
        if len(self.N) != self.d:
            raise ValueError(f"N has {len(self.N)} entries, d = {self.d}")
        self.to_model()
        return self

    def to_model(self) -> CanningsModel:
        law_class = WrightFisherLaw if self.law == "wright-fisher" else MutationLaw
        return CanningsModel(N=tuple(self.N), law=law_class(counts=self.counts))


class XiAtomFile(BaseModel):
    mass: float = Field(gt=0)
    x: List[float]
    y: List[int]

    @field_validator('y')
    @classmethod
    def labels_positive(cls, y: List[int]) -> List[int]:
        if any(label < 1 for label in y):
            raise ValueError(f"labels are 1-based, got {y}")
        return y


class XiSpecFile(BaseModel):
    """Kingman weights and atoms of Xi; atom labels y are 1-based."""
    a: List[float]
    atoms: List[XiAtomFile] = []

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "a": [0, 0],
                "atoms": [{"mass": 1.0, "x": [0.5, 0.25], "y": [1, 2]}]
            }
        }
    )

    @model_validator(mode='after')
    def check_spec(self) -> "XiSpecFile":
        self.to_spec()
        return self

    def to_spec(self) -> XiSpec:
        atoms = tuple(
            XiAtom(mass=atom.mass, x=tuple(atom.x), y=tuple(label - 1 for label in atom.y))
            for atom in self.atoms
        )
        return XiSpec(a=tuple(self.a), atoms=atoms)


class RhoFile(BaseModel):
    """Limits rho_{k,l} of N_{k,l}/N_l; entries may be fraction strings."""
    rho: List[List[Exact]]

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"rho": [["1/2", "1/2"], ["1/2", "1/2"]]}
        }
    )

    @field_validator('rho')
    @classmethod
    def parse_entries(cls, rho: List[List[Exact]]) -> List[List[Exact]]:
        for row in rho:
            for value in row:
                parse_number(value)
        return rho

    def to_rho(self) -> List[List[Union[Fraction, float]]]:
        return [[parse_number(v) for v in row] for row in self.rho]


class TensorValue(BaseModel):
    tensor: Dict[str, Any]
    value: Exact

    def to_pair(self):
        return MergeTensor.from_json(self.tensor), parse_number(self.value)


class RateTableFile(BaseModel):
    """Partial rate table on diagonal tensors, e.g. for `rates complete`."""
    d: int = Field(ge=1)
    depth: int = Field(ge=1)
    rates: List[TensorValue]

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "d": 1,
                "depth": 3,
                "rates": [
                    {"tensor": {"j": [1], "entries": {"1,1": [2]}}, "value": 1.0},
                    {"tensor": {"j": [1], "entries": {"1,1": [3]}}, "value": 0.0}
                ]
            }
        }
    )

    def to_table(self) -> RateTable:
        rates = {}
        for item in self.rates:
            T, value = item.to_pair()
            rates[T] = float(value)
        return RateTable(d=self.d, rates=rates, description="rate table file")


class PpfTableFile(BaseModel):
    """Finite partition probability table p(T) certified to `depth`."""
    d: int = Field(ge=1)
    depth: int = Field(ge=0)
    values: List[TensorValue]

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "d": 1,
                "depth": 1,
                "values": [
                    {"tensor": {"j": [0], "entries": {"1,1": []}}, "value": "1"},
                    {"tensor": {"j": [1], "entries": {"1,1": [1]}}, "value": "1"}
                ]
            }
        }
    )

    def to_table(self) -> PpfTable:
        return PpfTable(d=self.d, values=dict(item.to_pair() for item in self.values), depth=self.depth)


class RunConfig(BaseModel):
    """Everything one CLI invocation needs; echoed into every artifact."""
    command: str
    action: Optional[str] = None
    model: Optional[str] = None
    models: List[str] = []
    spec: Optional[str] = None
    table: Optional[str] = None
    rho: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    d: Optional[int] = Field(default=None, ge=1)
    depth: Optional[int] = Field(default=None, ge=1)
    reps: Optional[int] = Field(default=None, ge=1)
    generations: Optional[int] = Field(default=None, ge=0)
    t_max: Optional[float] = Field(default=None, ge=0)
    weights: List[float] = []
    M: Optional[int] = Field(default=None, ge=1)
    M_values: List[int] = []
    initial: Optional[str] = None
    seed: Optional[int] = Field(default=None, ge=0)
    format: Literal["csv", "json"] = "json"
    output: Optional[str] = None
    count_only: bool = False
    exact: bool = False

    model_config = ConfigDict(
        extra='ignore',
        json_schema_extra={
            "example": {
                "command": "matrix",
                "model": "wf.json",
                "n": 2,
                "format": "csv"
            }
        }
    )
