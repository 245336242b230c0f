import json
import math
import os
import tempfile
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from blockade.config import settings
from blockade.models.fpe_models import FpeField, FpeSnapshot, TransformedField
from blockade.models.kinetics_models import ExcitationDistribution, RateMatrix
from blockade.utils.exceptions import ExportError
from blockade.utils.logger import get_logger

logger = get_logger(__name__)


def trajectory_frame(trajectory: Sequence[ExcitationDistribution]) -> pd.DataFrame:
    """`omega_t, p_0 … p_nmax, meanN, meanN2`, one row per sample."""
    if not trajectory:
        raise ExportError("Cannot tabulate an empty trajectory")
    width = max(d.p.size for d in trajectory)
    rows = []
    for d in trajectory:
        p = np.pad(d.p, (0, width - d.p.size))
        rows.append([d.omega_t, *p, d.mean, d.second_moment])
    columns = ["omega_t", *[f"p_{n}" for n in range(width)], "meanN", "meanN2"]
    return pd.DataFrame(rows, columns=columns)


def field_frame(field: FpeField, transformed: TransformedField) -> pd.DataFrame:
    """`x, F, D, y, U` on the field grid; y and U interpolated from the transform nodes."""
    return pd.DataFrame(
        {
            "x": field.grid,
            "F": field.drift,
            "D": field.diffusion,
            "y": np.interp(field.grid, transformed.x, transformed.y),
            "U": np.interp(field.grid, transformed.x, transformed.potential),
        }
    )


def snapshot_frame(snapshots: Sequence[FpeSnapshot], digits: Optional[int] = None) -> pd.DataFrame:
    """`omega_t, x_grid…`: one density row per sample, columns labelled by x."""
    digits = digits or settings.float_digits
    grid = snapshots[0].grid
    columns = ["omega_t", *[f"{x:.{digits}g}" for x in grid]]
    return pd.DataFrame([[s.omega_t, *s.density] for s in snapshots], columns=columns)


def rates_payload(rates: RateMatrix) -> Dict[str, Any]:
    """JSON-ready rate table with its stationary distribution."""
    return {
        "source": rates.source,
        "n_max": rates.n_max,
        "t_down": rates.t_down.tolist(),
        "t_up": rates.t_up.tolist(),
        "stationary": rates.stationary().tolist(),
    }


class ArtifactWriter:
    """Atomic CSV/JSON/text writer with locale-independent, fixed-precision floats."""

    def __init__(self, output_dir: Optional[str] = None, digits: Optional[int] = None):
        self.output_path = Path(output_dir or settings.output_dir)
        self.digits = digits or settings.float_digits
        self._ensure_directories()

    def _ensure_directories(self):
        os.makedirs(self.output_path, exist_ok=True)

    def _atomic_write(self, name: str, text: str) -> Path:
        """Write through a sibling temp file and rename it into place."""
        target = self.output_path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        handle = tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", newline="\n", dir=target.parent, prefix=f".{target.name}.", delete=False
        )
        try:
            with handle:
                handle.write(text)
            os.replace(handle.name, target)
        except OSError as e:
            logger.error("artifact_write_failed", path=str(target), error=str(e))
            if os.path.exists(handle.name):
                os.unlink(handle.name)
            raise ExportError(f"Failed to write {target}: {e}") from e
        logger.debug("artifact_written", path=str(target), bytes=len(text))
        return target

    def plain(self, value: Any) -> Any:
        """Convert models, arrays, enums and fractions into JSON-safe values."""
        if isinstance(value, BaseModel):
            return self.plain(value.model_dump(mode="python"))
        if isinstance(value, dict):
            return {str(k): self.plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.plain(v) for v in value]
        if isinstance(value, np.ndarray):
            return [self.plain(v) for v in value.tolist()]
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, np.integer):
            return int(value)
        if isinstance(value, Fraction):
            return str(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if not math.isfinite(value):
                return None
            return float(f"{value:.{self.digits}g}")
        return value

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        """Write a DataFrame as CSV."""
        text = frame.to_csv(index=False, float_format=f"%.{self.digits}g", lineterminator="\n")
        return self._atomic_write(name, text)

    def write_json(self, name: str, payload: Any) -> Path:
        return self._atomic_write(name, json.dumps(self.plain(payload), indent=2, ensure_ascii=False) + "\n")

    def write_text(self, name: str, text: str) -> Path:
        return self._atomic_write(name, text)

    def write_trajectory(self, name: str, trajectory: Sequence[ExcitationDistribution]) -> Path:
        return self.write_frame(name, trajectory_frame(trajectory))

    def list_artifacts(self) -> List[Path]:
        """All visible files under the output directory."""
        return sorted(p for p in self.output_path.rglob("*") if p.is_file() and not p.name.startswith("."))
