"""System and criteria-pair file loading with pointer-carrying validation.

System files are JSON; complex numbers appear as [re, im] pairs everywhere:

    {
      "dim": 2,
      "operator": {"kind": "diagonal", "mu_re": [0.5, 0.25], "mu_im": [0, 0],
                   "basis": optional dim x dim entries},
      "sampling": {"vectors": [[[1, 0], [1, 0]]], "labels": ["b"]},
      "time": {"kind": "discrete_finite", "gamma": 1},
      "control": {"entries": [[[1, 0]], [[0, 0]]]}        # optional
    }

Time kinds: discrete_finite {gamma}, discrete_infinite {truncation_K,
tail_tol}, continuous_finite {tau, panels, nodes_per_panel},
continuous_infinite {horizon_T, panels, nodes_per_panel, tail_tol}.
"""

from __future__ import annotations

import json

import numpy as np

from .criteria import EigenSamplePair
from .dynamics import certify_tail
from .errors import (
    DimensionMismatchError,
    InvariantError,
    NonFiniteError,
    ObsframeError,
    ParseError,
    SchemaError,
    TailNotCertifiableError,
)
from .model import (
    ContinuousFinite,
    ContinuousInfinite,
    DiagonalizableSystem,
    DiscreteFinite,
    DiscreteInfinite,
    Operator,
    SamplingFamily,
    Spectrum,
    SystemSpec,
    is_infinite,
)


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def _require(mapping, key, pointer):
    if not isinstance(mapping, dict):
        raise SchemaError("expected an object", pointer=pointer or "/")
    if key not in mapping:
        raise SchemaError(f"missing key {key!r}", pointer=f"{pointer}/{key}")
    return mapping[key]


def _number(value, pointer):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError("expected a number", pointer=pointer)
    return value


def _complex_pair(value, pointer):
    if not (isinstance(value, list) and len(value) == 2):
        raise SchemaError("complex numbers are [re, im] pairs", pointer=pointer)
    return complex(_number(value[0], f"{pointer}/0"), _number(value[1], f"{pointer}/1"))


def _complex_vector(value, pointer):
    if not isinstance(value, list) or not value:
        raise SchemaError("expected a non-empty array of [re, im] pairs", pointer=pointer)
    return np.array([_complex_pair(v, f"{pointer}/{i}") for i, v in enumerate(value)])


def _complex_matrix(value, pointer):
    if not isinstance(value, list) or not value:
        raise SchemaError("expected a non-empty array of rows", pointer=pointer)
    rows = [_complex_vector(row, f"{pointer}/{i}") for i, row in enumerate(value)]
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SchemaError("rows have unequal lengths", pointer=f"{pointer}/{i}")
    return np.vstack(rows)


def _real_vector(value, pointer):
    if not isinstance(value, list) or not value:
        raise SchemaError("expected a non-empty array of numbers", pointer=pointer)
    return np.array([_number(v, f"{pointer}/{i}") for i, v in enumerate(value)], dtype=float)


def _load_operator(spec, dim, pointer):
    kind = _require(spec, "kind", pointer)
    if kind == "dense":
        entries = _complex_matrix(_require(spec, "entries", pointer), f"{pointer}/entries")
        if entries.shape != (dim, dim):
            raise SchemaError(
                f"dense operator must be {dim}x{dim}, got {entries.shape}",
                pointer=f"{pointer}/entries",
            )
        return Operator(entries)
    if kind == "diagonal":
        mu_re = _real_vector(_require(spec, "mu_re", pointer), f"{pointer}/mu_re")
        mu_im = _real_vector(_require(spec, "mu_im", pointer), f"{pointer}/mu_im")
        if len(mu_re) != len(mu_im):
            raise SchemaError("mu_re and mu_im differ in length", pointer=f"{pointer}/mu_im")
        if len(mu_re) != dim:
            raise SchemaError(f"expected {dim} eigenvalues", pointer=f"{pointer}/mu_re")
        basis = None
        if spec.get("basis") is not None:
            entries = _complex_matrix(spec["basis"], f"{pointer}/basis")
            if entries.shape != (dim, dim):
                raise SchemaError(
                    f"basis must be {dim}x{dim}, got {entries.shape}",
                    pointer=f"{pointer}/basis",
                )
            basis = Operator(entries)
        return DiagonalizableSystem(Spectrum(mu_re + 1j * mu_im), basis)
    raise SchemaError(f"unknown operator kind {kind!r}", pointer=f"{pointer}/kind")


def _load_time(spec, pointer):
    kind = _require(spec, "kind", pointer)
    try:
        if kind == "discrete_finite":
            return DiscreteFinite(int(_number(_require(spec, "gamma", pointer), f"{pointer}/gamma")))
        if kind == "discrete_infinite":
            return DiscreteInfinite(
                int(_number(_require(spec, "truncation_K", pointer), f"{pointer}/truncation_K")),
                float(_number(spec.get("tail_tol", 1e-10), f"{pointer}/tail_tol")),
            )
        if kind == "continuous_finite":
            return ContinuousFinite(
                float(_number(_require(spec, "tau", pointer), f"{pointer}/tau")),
                int(_number(spec.get("panels", 8), f"{pointer}/panels")),
                int(_number(spec.get("nodes_per_panel", 8), f"{pointer}/nodes_per_panel")),
            )
        if kind == "continuous_infinite":
            return ContinuousInfinite(
                float(_number(_require(spec, "horizon_T", pointer), f"{pointer}/horizon_T")),
                int(_number(spec.get("panels", 8), f"{pointer}/panels")),
                int(_number(spec.get("nodes_per_panel", 8), f"{pointer}/nodes_per_panel")),
                float(_number(spec.get("tail_tol", 1e-10), f"{pointer}/tail_tol")),
            )
    except DimensionMismatchError as exc:
        raise InvariantError(str(exc), pointer=pointer) from exc
    raise SchemaError(f"unknown time kind {kind!r}", pointer=f"{pointer}/kind")


def load_system(path) -> SystemSpec:
    """Load and fully validate a system file; errors carry JSON pointers."""
    data = _load_json(path)
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object", pointer="/")
    dim = _require(data, "dim", "")
    if not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim must be a positive integer", pointer="/dim")

    operator = _load_operator(_require(data, "operator", ""), dim, "/operator")

    sampling_spec = _require(data, "sampling", "")
    vectors_spec = _require(sampling_spec, "vectors", "/sampling")
    if not isinstance(vectors_spec, list) or not vectors_spec:
        raise SchemaError("sampling.vectors must be a non-empty array", pointer="/sampling/vectors")
    vectors = []
    for i, vec in enumerate(vectors_spec):
        v = _complex_vector(vec, f"/sampling/vectors/{i}")
        if len(v) != dim:
            raise SchemaError(
                f"sampling vector has length {len(v)}, expected {dim}",
                pointer=f"/sampling/vectors/{i}",
            )
        vectors.append(v)
    labels = sampling_spec.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != len(vectors):
            raise SchemaError("labels must match vectors in length", pointer="/sampling/labels")
        labels = tuple(str(s) for s in labels)

    time = _load_time(_require(data, "time", ""), "/time")

    control = None
    if data.get("control") is not None:
        entries = _complex_matrix(
            _require(data["control"], "entries", "/control"), "/control/entries"
        )
        if entries.shape[0] != dim:
            raise SchemaError(
                f"control must have {dim} rows, got {entries.shape[0]}",
                pointer="/control/entries",
            )
        control = entries

    try:
        sys = SystemSpec(operator, SamplingFamily(tuple(vectors), labels), time, control)
    except (DimensionMismatchError, NonFiniteError) as exc:
        raise InvariantError(str(exc), pointer="/") from exc

    if is_infinite(time):
        try:
            cert = certify_tail(sys)
        except TailNotCertifiableError as exc:
            raise InvariantError(
                f"infinite time domain rejected by the tail certifier: {exc}", pointer="/time"
            ) from exc
        if not cert.ok:
            raise InvariantError(
                "infinite time domain rejected by the tail certifier: "
                f"tail bound {cert.tail_bound:.3g} > tail_tol; "
                f"suggested truncation {cert.suggested_truncation:g}",
                pointer="/time",
            )
    return sys


def load_pair(path) -> EigenSamplePair:
    """Load an eigenvalue/coefficient pair file.

    Schema: arrays lambda_re, lambda_im, coeff_re, coeff_im, phi_norms of one
    common length.
    """
    data = _load_json(path)
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object", pointer="/")
    arrays = {}
    for key in ("lambda_re", "lambda_im", "coeff_re", "coeff_im", "phi_norms"):
        arrays[key] = _real_vector(_require(data, key, ""), f"/{key}")
    n = len(arrays["lambda_re"])
    for key, arr in arrays.items():
        if len(arr) != n:
            raise SchemaError(f"{key} has length {len(arr)}, expected {n}", pointer=f"/{key}")
    try:
        return EigenSamplePair(
            arrays["lambda_re"] + 1j * arrays["lambda_im"],
            arrays["coeff_re"] + 1j * arrays["coeff_im"],
            arrays["phi_norms"],
        )
    except ObsframeError as exc:
        raise InvariantError(str(exc), pointer="/") from exc


def save_pair(pair: EigenSamplePair, path) -> None:
    from .reporting import write_atomic

    payload = {
        "lambda_re": [float(v) for v in pair.lambdas.real],
        "lambda_im": [float(v) for v in pair.lambdas.imag],
        "coeff_re": [float(v) for v in pair.coeffs.real],
        "coeff_im": [float(v) for v in pair.coeffs.imag],
        "phi_norms": [float(v) for v in pair.norms],
    }
    write_atomic(path, json.dumps(payload, indent=2) + "\n")
