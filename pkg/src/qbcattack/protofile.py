"""Reading and writing protocol documents (``.qbc.json``).

A document is one JSON object::

    {
      "branches": [
        {"omega": "w1", "psi0": [[re, im], ...], "psi1": [[re, im], ...], "weight": 1.0}
      ],
      "dims": {"a": 2, "b": 2},
      "metadata": {...},          # optional
      "name": "example"
    }

Amplitudes are listed in Alice-major order. The canonical form written by
:func:`serialize` sorts keys, prints floats with the shortest repr that
round-trips, and drops an empty ``metadata`` object.
"""

from __future__ import annotations

import json
import math
import warnings
from json.decoder import scanstring

import numpy as np

from .errors import (
    BadComplex,
    BadWeights,
    DuplicateOmega,
    ParseDimMismatch,
    ParseNotNormalized,
    SyntaxErrorQBC,
)
from .protocol import ProtocolBranch, ProtocolSpec
from .qstate import StateVector, SystemLayout

PARSE_NORM_TOL = 1e-6
RENORM_TOL = 1e-12
MAX_DOCUMENT_BYTES = 64 * 1024 * 1024


class RenormalizationWarning(UserWarning):
    """A state read from a document was rescaled to unit norm."""


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


_WS = " \t\n\r"
_scalar = json.JSONDecoder()


def _locate(text: str) -> dict[tuple, int]:
    """Map each JSON path (tuple of keys / indices) to the offset of its value.

    Only called on text that ``json.loads`` already accepted.
    """
    where: dict[tuple, int] = {}

    def skip(i):
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        where[path] = i
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = skip(i)
                key, i = scanstring(text, i + 1)
                i = skip(i) + 1  # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = _scalar.raw_decode(text, i)
        return end

    value(0, ())
    return where


class _Doc:
    """Parsed JSON plus the machinery to raise located errors."""

    def __init__(self, text: str):
        self.text = text
        self._where: dict[tuple, int] | None = None

    def fail(self, cls, message: str, path: tuple = ()):
        if self._where is None:
            self._where = _locate(self.text)
        # fall back to the nearest located ancestor
        while path not in self._where and path:
            path = path[:-1]
        offset = self._where.get(path, 0)
        line, col = _line_col(self.text, offset)
        where = "/".join(str(p) for p in path)
        raise cls(message, offset=offset, line=line, column=col, path=where)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _read_state(doc: _Doc, raw, path: tuple, layout: SystemLayout) -> StateVector:
    if not isinstance(raw, list):
        doc.fail(SyntaxErrorQBC, "state must be an array of [re, im] pairs", path)
    if len(raw) != layout.total:
        doc.fail(ParseDimMismatch,
                 f"expected {layout.total} amplitudes for dims a={layout.dim_a}, "
                 f"b={layout.dim_b}, got {len(raw)}", path)
    amps = np.empty(len(raw), dtype=complex)
    for k, z in enumerate(raw):
        if not (isinstance(z, list) and len(z) == 2 and all(_is_number(v) for v in z)):
            doc.fail(BadComplex, "complex literal must be a two-element array [re, im]", path + (k,))
        re, im = float(z[0]), float(z[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            doc.fail(BadComplex, "complex literal has a non-finite component", path + (k,))
        amps[k] = complex(re, im)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > PARSE_NORM_TOL:
        doc.fail(ParseNotNormalized, f"state norm {norm!r} deviates from 1 by more than "
                                     f"{PARSE_NORM_TOL:g}", path)
    if abs(norm - 1.0) > RENORM_TOL:
        where = "/".join(str(p) for p in path)
        warnings.warn(f"{where}: renormalised state with norm {norm!r}",
                      RenormalizationWarning, stacklevel=3)
        amps = amps / norm
    return StateVector(layout, amps)


def _reject_constant(name):
    raise ValueError(f"{name} is not allowed")


def parse(doc: str | bytes) -> ProtocolSpec:
    """Parse and validate a protocol document.

    Every failure raises a :class:`~qbcattack.errors.ParseError` subclass
    carrying the offset and line/column of the offending token.
    """
    if isinstance(doc, (bytes, bytearray)):
        if len(doc) > MAX_DOCUMENT_BYTES:
            raise SyntaxErrorQBC(f"document larger than {MAX_DOCUMENT_BYTES} bytes", offset=0)
        try:
            text = bytes(doc).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SyntaxErrorQBC(f"document is not valid UTF-8: {exc.reason}",
                                 offset=exc.start) from None
    else:
        text = doc
    if text.startswith("\ufeff"):
        text = text[1:]
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SyntaxErrorQBC(exc.msg, offset=exc.pos, line=exc.lineno, column=exc.colno) from None
    except ValueError as exc:
        raise SyntaxErrorQBC(str(exc), offset=0) from None
    except RecursionError:
        raise SyntaxErrorQBC("document nested too deeply", offset=0) from None

    d = _Doc(text)
    if not isinstance(raw, dict):
        d.fail(SyntaxErrorQBC, "top level must be a JSON object")
    for key in ("name", "dims", "branches"):
        if key not in raw:
            d.fail(SyntaxErrorQBC, f"missing required field {key!r}")
    unknown = sorted(set(raw) - {"name", "dims", "branches", "metadata"})
    if unknown:
        d.fail(SyntaxErrorQBC, f"unknown field {unknown[0]!r}", (unknown[0],))
    if not isinstance(raw["name"], str):
        d.fail(SyntaxErrorQBC, "name must be a string", ("name",))

    dims = raw["dims"]
    if not isinstance(dims, dict) or set(dims) != {"a", "b"}:
        d.fail(SyntaxErrorQBC, "dims must be an object with exactly the keys 'a' and 'b'", ("dims",))
    for k in ("a", "b"):
        v = dims[k]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            d.fail(SyntaxErrorQBC, f"dims.{k} must be a positive integer", ("dims", k))
    try:
        layout = SystemLayout(dims["a"], dims["b"])
    except Exception as exc:  # dimension cap
        d.fail(ParseDimMismatch, str(exc), ("dims",))

    metadata = raw.get("metadata", {})
    if not isinstance(metadata, dict):
        d.fail(SyntaxErrorQBC, "metadata must be an object", ("metadata",))

    branches_raw = raw["branches"]
    if not isinstance(branches_raw, list) or not branches_raw:
        d.fail(SyntaxErrorQBC, "branches must be a non-empty array", ("branches",))
    branches, weights, seen = [], [], set()
    for i, br in enumerate(branches_raw):
        path = ("branches", i)
        if not isinstance(br, dict):
            d.fail(SyntaxErrorQBC, "branch must be an object", path)
        missing = [k for k in ("omega", "weight", "psi0", "psi1") if k not in br]
        if missing:
            d.fail(SyntaxErrorQBC, f"branch is missing field {missing[0]!r}", path)
        extra = sorted(set(br) - {"omega", "weight", "psi0", "psi1"})
        if extra:
            d.fail(SyntaxErrorQBC, f"unknown branch field {extra[0]!r}", path + (extra[0],))
        label = br["omega"]
        if not isinstance(label, str):
            d.fail(SyntaxErrorQBC, "omega must be a string", path + ("omega",))
        if label in seen:
            d.fail(DuplicateOmega, f"duplicate omega label {label!r}", path + ("omega",))
        seen.add(label)
        w = br["weight"]
        if not _is_number(w) or not math.isfinite(float(w)) or float(w) <= 0:
            d.fail(BadWeights, "weight must be a positive finite number", path + ("weight",))
        weights.append(float(w))
        psi0 = _read_state(d, br["psi0"], path + ("psi0",), layout)
        psi1 = _read_state(d, br["psi1"], path + ("psi1",), layout)
        branches.append(ProtocolBranch(label, psi0, psi1))
    total = math.fsum(weights)
    if abs(total - 1.0) > 1e-9:
        d.fail(BadWeights, f"weights sum to {total!r}, not 1", ("branches",))
    return ProtocolSpec(raw["name"], layout, branches, weights, metadata)


def _complex_list(psi: StateVector) -> list:
    return [[float(z.real), float(z.imag)] for z in psi.amplitudes]


def to_document(spec: ProtocolSpec) -> dict:
    obj = {
        "name": spec.name,
        "dims": {"a": spec.layout.dim_a, "b": spec.layout.dim_b},
        "branches": [
            {"omega": br.omega_label, "weight": float(w),
             "psi0": _complex_list(br.psi0), "psi1": _complex_list(br.psi1)}
            for br, w in zip(spec.branches, spec.weights)
        ],
    }
    if spec.metadata:
        obj["metadata"] = spec.metadata
    return obj


def canonical_json(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, repr floats, flat lists of scalars on one line."""

    def scalar(x):
        return json.dumps(x, ensure_ascii=False, allow_nan=False)

    def render(x, depth):
        pad, inner = " " * (indent * depth), " " * (indent * (depth + 1))
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{inner}{scalar(str(k))}: {render(x[k], depth + 1)}" for k in sorted(x)]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(x, (list, tuple)):
            if all(not isinstance(v, (dict, list, tuple)) for v in x):
                return "[" + ", ".join(scalar(v) for v in x) + "]"
            return "[\n" + ",\n".join(inner + render(v, depth + 1) for v in x) + "\n" + pad + "]"
        return scalar(x)

    return render(obj, 0) + "\n"


def serialize(spec: ProtocolSpec) -> str:
    """Canonical text of ``spec`` (sorted keys, shortest round-trip floats)."""
    return canonical_json(to_document(spec))


def canonicalize(doc: str | bytes) -> str:
    return serialize(parse(doc))


def load(path) -> ProtocolSpec:
    with open(path, "rb") as fh:
        return parse(fh.read())
