from __future__ import annotations

import csv
import math
from pathlib import Path

from pydantic import BaseModel, field_validator
from tabulate import tabulate


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3e}"


class VariableErrors(BaseModel):
    variable: int
    e_l2: float
    e_res: float
    e_nonlinear: float | None = None


class ErrorReport(BaseModel):
    """Relative L2 solution, residual and nonlinear-term errors averaged over samples and steps."""

    e_l2: float
    e_res: float
    e_nonlinear: float | None = None
    per_variable: list[VariableErrors] = []
    samples: int
    steps: int

    @field_validator("e_l2", "e_res", "e_nonlinear")
    @classmethod
    def validate_metric(cls, v):
        if v is not None and (not math.isfinite(v) or v < 0):
            raise ValueError(f"metric must be finite and non-negative, got {v}")
        return v

    def metrics(self) -> dict[str, float | None]:
        return {"E_L2": self.e_l2, "E_Res": self.e_res, "E_Nonlinear": self.e_nonlinear}

    def rows(self) -> list[list[str]]:
        rows = [["all", _fmt(self.e_l2), _fmt(self.e_res), _fmt(self.e_nonlinear)]]
        if len(self.per_variable) > 1:
            rows += [
                [str(v.variable), _fmt(v.e_l2), _fmt(v.e_res), _fmt(v.e_nonlinear)] for v in self.per_variable
            ]
        return rows

    def to_table(self, tablefmt: str = "github") -> str:
        return tabulate(self.rows(), headers=["variable", "E_L2", "E_Res", "E_Nonlinear"], tablefmt=tablefmt)

    def to_csv(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["variable", "E_L2", "E_Res", "E_Nonlinear", "samples", "steps"])
            for row in self.rows():
                writer.writerow([*row, self.samples, self.steps])
        return path
