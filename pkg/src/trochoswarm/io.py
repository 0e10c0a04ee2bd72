"""
JSON configuration, design documents and CSV export.

Documents carry a ``schema_version``.  Reals are written with Python's
shortest round-trip repr, so ``load(save(doc)) == doc`` holds exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .design import (
    TROCHOID_TYPES,
    AgentTrochoid,
    DesignSpec,
    Eigenstructure,
    InitialPlacement,
    SwarmDesign,
)
from .errors import DesignSpecError, TrochoidError
from .injection import OFFSET_LABELS, InjectionPlan
from .region import FeasibleRegion

SCHEMA_VERSION = 1
_LABEL_TO_OFFSET = {v: k for k, v in OFFSET_LABELS.items()}


class ConfigError(TrochoidError):
    """Malformed configuration or document; message names the line or field."""


# ------------------------------------------------------------------ config

_SPEC_FIELDS = {
    "k": int,
    "triple": list,
    "type": str,
    "d0_min": float,
    "d0_max": float,
    "d_CT": float,
    "d_CR": float,
    "R_rob": float,
    "R_sense": float,
    "epsilon_cusp": float,
}


def parse_json_text(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return data


def read_json(path, source: Optional[str] = None) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_json_text(text, source or str(path))


def _number(data: dict, key: str, source: str, kind=float):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{source}: field '{key}' must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{source}: field '{key}' must be an integer, got {value!r}")
        return int(value)
    return float(value)


def spec_from_config(data: dict, source: str = "<config>") -> DesignSpec:
    """Build a DesignSpec from a config mapping; keys that are not DesignSpec fields are ignored."""
    for key in ("k", "triple"):
        if key not in data:
            raise ConfigError(f"{source}: missing required field '{key}'")
    triple = data["triple"]
    if (
        not isinstance(triple, list)
        or len(triple) != 3
        or any(isinstance(s, bool) or not isinstance(s, int) for s in triple)
    ):
        raise ConfigError(f"{source}: field 'triple' must be a list of three integers, got {triple!r}")
    kwargs: dict[str, Any] = {"k": _number(data, "k", source, int), "triple": tuple(triple)}
    if "type" in data:
        if data["type"] not in TROCHOID_TYPES:
            raise ConfigError(f"{source}: field 'type' must be one of {TROCHOID_TYPES}, got {data['type']!r}")
        kwargs["trochoid_type"] = data["type"]
    for key in ("d0_min", "d0_max", "d_CT", "d_CR", "R_rob", "R_sense", "epsilon_cusp"):
        if key in data and data[key] is not None:
            kwargs[key] = _number(data, key, source)
    try:
        return DesignSpec(**kwargs)
    except DesignSpecError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def spec_to_config(spec: DesignSpec) -> dict:
    out = {
        "k": spec.k,
        "triple": list(spec.triple),
        "type": spec.trochoid_type,
        "d0_min": spec.d0_min,
        "d0_max": spec.d0_max,
        "d_CT": spec.d_CT,
        "d_CR": spec.d_CR,
        "epsilon_cusp": spec.epsilon_cusp,
    }
    if spec.R_rob is not None:
        out["R_rob"] = spec.R_rob
    if spec.R_sense is not None:
        out["R_sense"] = spec.R_sense
    return out


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def input_hash(data) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


def timestamp() -> str:
    """UTC ISO timestamp; honours SOURCE_DATE_EPOCH for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


# ----------------------------------------------------------- serialization


def eig_to_dict(eig: Eigenstructure) -> dict:
    return {
        "beta": list(eig.beta),
        "k": eig.k,
        "type": eig.trochoid_type,
        "a": eig.a,
        "b": eig.b,
        "beta_d": eig.beta_d,
        "lambda_min": eig.lambda_min,
        "lambda_max": eig.lambda_max,
        "alpha": list(eig.alpha),
        "gamma_R": eig.gamma_R.tolist(),
        "gamma_d": eig.gamma_d.tolist(),
        "gamma_phi_r": eig.gamma_phi_r.tolist(),
        "gamma_phi_d": eig.gamma_phi_d.tolist(),
    }


def eig_from_dict(d: dict) -> Eigenstructure:
    return Eigenstructure(
        beta=tuple(d["beta"]),
        k=d["k"],
        trochoid_type=d["type"],
        a=d["a"],
        b=d["b"],
        beta_d=d["beta_d"],
        lambda_min=d["lambda_min"],
        lambda_max=d["lambda_max"],
        alpha=tuple(d["alpha"]),
        gamma_R=np.array(d["gamma_R"], dtype=float),
        gamma_d=np.array(d["gamma_d"], dtype=float),
        gamma_phi_r=np.array(d["gamma_phi_r"], dtype=float),
        gamma_phi_d=np.array(d["gamma_phi_d"], dtype=float),
    )


def plan_to_dict(plan: InjectionPlan) -> dict:
    return {
        "offsets": {str(i): [OFFSET_LABELS[o] for o in offs] for i, offs in sorted(plan.offsets.items())},
        "delta_sq": {f"{i}-{j}:{lab}": v for (i, j, lab), v in sorted(plan.delta_sq.items())},
        "agent_count": plan.agent_count,
        "refresh_periods": {str(i): v for i, v in sorted(plan.refresh_periods.items())},
        "period": plan.period,
        "same_path_min": {
            str(i): (v if math.isfinite(v) else None) for i, v in sorted(plan.same_path_min.items())
        },
        "d_CT": plan.d_CT,
    }


def plan_from_dict(d: dict) -> InjectionPlan:
    table = {}
    for key, v in d["delta_sq"].items():
        pair, lab = key.split(":")
        i, j = pair.split("-")
        table[(int(i), int(j), lab)] = v
    return InjectionPlan(
        offsets={int(i): tuple(_LABEL_TO_OFFSET[lab] for lab in labs) for i, labs in d["offsets"].items()},
        delta_sq=table,
        agent_count=d["agent_count"],
        refresh_periods={int(i): v for i, v in d["refresh_periods"].items()},
        period=d["period"],
        same_path_min={int(i): (math.inf if v is None else v) for i, v in d["same_path_min"].items()},
        d_CT=d["d_CT"],
    )


@dataclass(eq=False)
class DesignDocument:
    spec: DesignSpec
    eig: Eigenstructure
    R_c: float
    d_c: float
    placement: InitialPlacement
    trochoids: tuple
    injection: Optional[InjectionPlan] = None
    provenance: Optional[dict] = None

    @classmethod
    def from_design(cls, design: SwarmDesign, injection=None, source=None) -> "DesignDocument":
        config = source if source is not None else spec_to_config(design.spec)
        prov = {"tool_version": __version__, "timestamp": timestamp(), "input_hash": input_hash(config)}
        return cls(
            design.spec, design.eig, design.R_c, design.d_c, design.placement, design.trochoids, injection, prov
        )

    def to_design(self) -> SwarmDesign:
        return SwarmDesign(self.spec, self.eig, self.R_c, self.d_c, self.placement, self.trochoids)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": spec_to_config(self.spec),
            "eigenstructure": eig_to_dict(self.eig),
            "point": {"R_c": self.R_c, "d_c": self.d_c},
            "initial_positions": {
                "raw": self.placement.raw.tolist(),
                "cor_x": self.placement.cor_x,
                "shifted": self.placement.positions.tolist(),
            },
            "trochoids": [
                {("type" if f.name == "trochoid_type" else f.name): getattr(tr, f.name) for f in fields(tr)}
                for tr in self.trochoids
            ],
            "injection": plan_to_dict(self.injection) if self.injection is not None else None,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict, source: str = "<document>") -> "DesignDocument":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"{source}: unsupported schema_version {version!r}")
        try:
            ip = d["initial_positions"]
            trs = tuple(
                AgentTrochoid(**{("trochoid_type" if k == "type" else k): v for k, v in t.items()})
                for t in d["trochoids"]
            )
            return cls(
                spec=spec_from_config(d["spec"], source),
                eig=eig_from_dict(d["eigenstructure"]),
                R_c=d["point"]["R_c"],
                d_c=d["point"]["d_c"],
                placement=InitialPlacement(
                    raw=np.array(ip["raw"], dtype=float),
                    cor_x=ip["cor_x"],
                    positions=np.array(ip["shifted"], dtype=float),
                ),
                trochoids=trs,
                injection=plan_from_dict(d["injection"]) if d.get("injection") else None,
                provenance=d.get("provenance"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: malformed design document ({exc!r})") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, DesignDocument):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def dumps(doc: DesignDocument) -> str:
    return canonical_json(doc.to_dict())


def save(doc: DesignDocument, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def loads(text: str, source: str = "<document>") -> DesignDocument:
    return DesignDocument.from_dict(parse_json_text(text, source), source)


def load(path) -> DesignDocument:
    return DesignDocument.from_dict(read_json(path), str(path))


# --------------------------------------------------------------------- CSV


def region_csv(region: Optional[FeasibleRegion]) -> str:
    """Polygon vertex lists: polygon, vertex, R_c, d_c."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polygon", "vertex", "R_c", "d_c"])
    if region is not None:
        for p_idx, poly in enumerate(region.polygons):
            for v_idx, (R, d) in enumerate(poly.vertices):
                w.writerow([p_idx, v_idx, format(float(R), ".9g"), format(float(d), ".9g")])
    return buf.getvalue()


def report_json(obj) -> str:
    """Canonical JSON for run reports; numpy scalars and arrays become plain lists."""

    def convert(o):
        if isinstance(o, dict):
            return {str(k): convert(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [convert(v) for v in o]
        if isinstance(o, np.ndarray):
            return convert(o.tolist())
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if hasattr(o, "__dataclass_fields__"):
            return convert(asdict(o))
        return o

    return canonical_json(convert(obj))
