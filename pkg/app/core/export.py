"""
File export and import for fields, orbits, thermodynamic curves and reports.
"""
import csv
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import TypeAdapter

from app.core.grid import ScalarField, VectorField
from app.core.orbits import ClassicalOrbit
from app.ensembles.thermal import ThermoCurve
from app.models import CheckReport, FieldFileV1, FieldParams, OrbitFileV1, OrbitRecord, VectorValues
from app.utils.logger import get_logger


logger = get_logger(__name__)

THERMO_HEADER = ["beta", "z_cl", "z_q", "purity_cl", "purity_q", "energy_cl", "energy_q", "heat_cl", "heat_q"]

_field_list = TypeAdapter(List[FieldFileV1])
_report_list = TypeAdapter(List[CheckReport])

PathLike = Union[str, Path]


def field_record(name: str, field: Union[ScalarField, VectorField], params: FieldParams) -> FieldFileV1:
    """Wrap a field for export; vector fields carry the modulus plus both components."""
    if isinstance(field, VectorField):
        return FieldFileV1(
            field_name=name,
            grid=field.grid,
            params=params,
            values=field.modulus().flat().tolist(),
            vector_values=VectorValues(x=field.x_values.ravel().tolist(), k=field.k_values.ravel().tolist()),
        )
    return FieldFileV1(field_name=name, grid=field.grid, params=params, values=field.flat().tolist())


def _write_bytes(path: PathLike, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return path


def write_field_file(path: PathLike, records: Sequence[FieldFileV1]) -> Path:
    """Write field records as one JSON array."""
    path = _write_bytes(path, _field_list.dump_json(list(records), by_alias=True))
    logger.info("Field file written", path=str(path), fields=[r.field_name for r in records])
    return path


def read_field_file(path: PathLike) -> List[FieldFileV1]:
    return _field_list.validate_json(Path(path).read_bytes())


def field_values(record: FieldFileV1) -> np.ndarray:
    """Values of a record reshaped to (n_x, n_k)."""
    return np.asarray(record.values, dtype=float).reshape(record.grid.shape)


def orbit_file(model: str, nu2: float, orbits: Sequence[ClassicalOrbit]) -> OrbitFileV1:
    return OrbitFileV1(
        model=model,
        nu2=nu2,
        orbits=[
            OrbitRecord(
                energy=o.energy,
                branch=o.branch,
                polyline=[(float(x), float(k)) for x, k in o.polyline],
                traced_closed=o.traced_closed,
            )
            for o in orbits
        ],
    )


def write_orbit_file(path: PathLike, document: OrbitFileV1) -> Path:
    path = _write_bytes(path, document.model_dump_json(by_alias=True).encode("utf-8"))
    logger.info("Orbit file written", path=str(path), orbits=len(document.orbits))
    return path


def read_orbit_file(path: PathLike) -> OrbitFileV1:
    return OrbitFileV1.model_validate_json(Path(path).read_bytes())


def _cell(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_thermo_csv(path: PathLike, curve: ThermoCurve) -> Path:
    """Write one row per beta; corrected cells are empty outside the correction regime."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [
        curve.betas, curve.z_classical, curve.z_corrected, curve.purity_cl, curve.purity_q,
        curve.energy_cl, curve.energy_q, curve.heat_cl, curve.heat_q,
    ]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(THERMO_HEADER)
        for row in zip(*columns):
            writer.writerow([_cell(v) for v in row])
    logger.info("Thermodynamic curve written", path=str(path), rows=len(curve.betas))
    return path


def read_thermo_csv(path: PathLike) -> Dict[str, np.ndarray]:
    """Columns keyed by header name; empty cells read back as NaN."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != THERMO_HEADER:
            raise ValueError(f"unexpected thermodynamic header {header}")
        rows = [[float(c) if c else math.nan for c in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(THERMO_HEADER))
    return {name: data[:, i] for i, name in enumerate(THERMO_HEADER)}


def write_report(path: Optional[PathLike], reports: Sequence[CheckReport]) -> bytes:
    """Serialize reports to JSON, writing them to path when given."""
    payload = _report_list.dump_json(list(reports), indent=2)
    if path is not None:
        _write_bytes(path, payload)
        logger.info("Verification report written", path=str(path), checks=len(reports))
    return payload
