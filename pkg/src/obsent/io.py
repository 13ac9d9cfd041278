"""JSON documents for states, measurements and classical objects.

Every document is an object with ``"schema": "obsent/1"`` and a ``"kind"``
among ``state``, ``povm``, ``instrument``, ``sequence``, ``stochastic`` and
``distribution``. Complex entries are ``[re, im]`` pairs; matrices are
row-major nested lists. Floats are written with ``repr`` precision, which
round-trips every double exactly.

Parsing errors carry the file name and a JSON path such as
``$.elements[1].matrix[0][1]``; structural problems raise
``DocumentError`` and failed object invariants ``InvariantViolation``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DimensionMismatch, DocumentError, InvariantViolation, NotPositive
from .linalg import PSD_TOL, hermitize
from .objects import (
    ClassicalDistribution,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    POVM_SUM_TOL,
    KrausMap,
    Povm,
    StochasticMatrix,
)

SCHEMA = "obsent/1"
KINDS = ("state", "povm", "instrument", "sequence", "stochastic", "distribution")


# --------------------------------------------------------------------------
# encoding


def _enc_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _enc_label(lab):
    if isinstance(lab, tuple):
        return [_enc_label(x) for x in lab]
    if isinstance(lab, (np.integer,)):
        return int(lab)
    return lab


def _instrument_body(c: Instrument) -> dict:
    return {
        "dim": c.dim,
        "branches": [
            {"label": _enc_label(lab), "kraus": [_enc_matrix(k) for k in b.kraus]}
            for lab, b in zip(c.labels, c.branches)
        ],
    }


def to_document(obj) -> dict:
    if isinstance(obj, DensityMatrix):
        body = {"kind": "state", "dim": obj.dim, "matrix": _enc_matrix(obj.matrix)}
    elif isinstance(obj, Povm):
        body = {
            "kind": "povm",
            "dim": obj.dim,
            "elements": [{"label": _enc_label(lab), "matrix": _enc_matrix(e)} for lab, e in zip(obj.labels, obj.elements)],
        }
    elif isinstance(obj, Instrument):
        body = {"kind": "instrument", **_instrument_body(obj)}
    elif isinstance(obj, CoarseGrainingSequence):
        body = {"kind": "sequence", "dim": obj.dim, "steps": [_instrument_body(s) for s in obj.steps]}
    elif isinstance(obj, StochasticMatrix):
        body = {"kind": "stochastic", "matrix": obj.matrix.tolist()}
    elif isinstance(obj, ClassicalDistribution):
        body = {"kind": "distribution", "labels": [_enc_label(x) for x in obj.labels], "probs": obj.probs.tolist()}
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return {"schema": SCHEMA, **body}


def dumps(obj_or_doc) -> str:
    doc = obj_or_doc if isinstance(obj_or_doc, dict) else to_document(obj_or_doc)
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def save(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


# --------------------------------------------------------------------------
# decoding


class _Ctx:
    def __init__(self, source: str):
        self.source = source

    def fail(self, path: str, msg: str):
        raise DocumentError(f"{self.source}: {path}: {msg}")

    def invariant(self, path: str, exc: Exception):
        cls = DimensionMismatch if isinstance(exc, DimensionMismatch) else InvariantViolation
        raise cls(f"{self.source}: {path}: {exc}") from exc

    def field(self, obj, key: str, path: str):
        if not isinstance(obj, dict):
            self.fail(path, "expected an object")
        if key not in obj:
            self.fail(path, f"missing field {key!r}")
        return obj[key]

    def number(self, x, path: str) -> float:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            self.fail(path, f"expected a number, got {type(x).__name__}")
        return float(x)

    def complex(self, x, path: str) -> complex:
        if isinstance(x, list):
            if len(x) != 2:
                self.fail(path, "complex entries must be [re, im] pairs")
            return complex(self.number(x[0], path + "[0]"), self.number(x[1], path + "[1]"))
        return complex(self.number(x, path))

    def matrix(self, x, path: str, real: bool = False) -> np.ndarray:
        if not isinstance(x, list) or not x:
            self.fail(path, "expected a non-empty list of rows")
        rows = []
        for r, row in enumerate(x):
            if not isinstance(row, list):
                self.fail(f"{path}[{r}]", "expected a row list")
            conv = self.number if real else self.complex
            rows.append([conv(v, f"{path}[{r}][{c}]") for c, v in enumerate(row)])
        width = len(rows[0])
        for r, row in enumerate(rows):
            if len(row) != width:
                self.fail(f"{path}[{r}]", f"row has {len(row)} entries, expected {width}")
        return np.array(rows, dtype=float if real else complex)

    def label(self, x, path: str):
        if isinstance(x, list):
            return tuple(self.label(v, f"{path}[{n}]") for n, v in enumerate(x))
        if isinstance(x, bool) or not isinstance(x, (str, int)):
            self.fail(path, "labels must be strings, integers or lists of those")
        return x

    def list(self, x, path: str) -> list:
        if not isinstance(x, list) or not x:
            self.fail(path, "expected a non-empty list")
        return x


def _dim_check(ctx: _Ctx, doc: dict, path: str, actual: int):
    if "dim" in doc:
        d = doc["dim"]
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            ctx.fail(f"{path}.dim", "dim must be a positive integer")
        if d != actual:
            ctx.fail(f"{path}.dim", f"declared dim {d} but matrices are {actual}x{actual}")


def _parse_instrument(ctx: _Ctx, doc: dict, path: str) -> Instrument:
    branches, labels = [], []
    for n, b in enumerate(ctx.list(ctx.field(doc, "branches", path), f"{path}.branches")):
        bp = f"{path}.branches[{n}]"
        ks = ctx.list(ctx.field(b, "kraus", bp), f"{bp}.kraus")
        mats = [ctx.matrix(k, f"{bp}.kraus[{m}]") for m, k in enumerate(ks)]
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            ctx.fail(f"{bp}.kraus", f"Kraus operators have differing shapes {sorted(shapes)}")
        try:
            branches.append(KrausMap(np.stack(mats)))
        except InvariantViolation as exc:
            ctx.invariant(bp, exc)
        labels.append(ctx.label(b["label"], f"{bp}.label") if "label" in b else n)
    try:
        inst = Instrument(tuple(branches), tuple(labels))
    except (InvariantViolation, DimensionMismatch) as exc:
        ctx.invariant(path, exc)
    _dim_check(ctx, doc, path, inst.dim)
    return inst


def _parse_povm(ctx: _Ctx, doc: dict, path: str) -> Povm:
    els, labels = [], []
    for n, e in enumerate(ctx.list(ctx.field(doc, "elements", path), f"{path}.elements")):
        ep = f"{path}.elements[{n}]"
        els.append(ctx.matrix(ctx.field(e, "matrix", ep), f"{ep}.matrix"))
        labels.append(ctx.label(e["label"], f"{ep}.label") if "label" in e else n)
    shapes = {m.shape for m in els}
    if len(shapes) != 1:
        ctx.fail(f"{path}.elements", f"elements have differing shapes {sorted(shapes)}")
    # locate per-element faults before the whole-POVM checks
    for n, e in enumerate(els):
        ep = f"{path}.elements[{n}].matrix"
        try:
            h = hermitize(e)
        except InvariantViolation as exc:
            asym = np.abs(e - e.conj().T)
            r, c = np.unravel_index(np.argmax(asym), asym.shape)
            ctx.invariant(f"{ep}[{r}][{c}]", exc)
        lo = np.linalg.eigvalsh(h)[0]
        if lo < -PSD_TOL:
            ctx.invariant(ep, NotPositive(f"element has eigenvalue {lo:.3g}"))
    total = np.sum(els, axis=0)
    dev = np.abs(total - np.eye(len(total)))
    if dev.max() > POVM_SUM_TOL:
        r, c = np.unravel_index(np.argmax(dev), dev.shape)
        worst = max(range(len(els)), key=lambda n: abs(els[n][r, c]))
        ctx.invariant(
            f"{path}.elements[{worst}].matrix[{r}][{c}]",
            InvariantViolation(
                f"elements do not sum to the identity: entry [{r}][{c}] of the sum is "
                f"{total[r, c].real:.6g}{total[r, c].imag:+.6g}j (max deviation {dev.max():.3g})"
            ),
        )
    try:
        povm = Povm(np.stack(els), tuple(labels))
    except InvariantViolation as exc:
        ctx.invariant(f"{path}.elements", exc)
    _dim_check(ctx, doc, path, povm.dim)
    return povm


def from_document(doc: Any, source: str = "<document>"):
    ctx = _Ctx(source)
    if not isinstance(doc, dict):
        ctx.fail("$", "top level must be an object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        ctx.fail("$.schema", f"unsupported schema {schema!r} (expected {SCHEMA!r})")
    kind = ctx.field(doc, "kind", "$")
    if kind not in KINDS:
        ctx.fail("$.kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")

    if kind == "state":
        m = ctx.matrix(ctx.field(doc, "matrix", "$"), "$.matrix")
        try:
            rho = DensityMatrix(m)
        except InvariantViolation as exc:
            ctx.invariant("$.matrix", exc)
        _dim_check(ctx, doc, "$", rho.dim)
        return rho
    if kind == "povm":
        return _parse_povm(ctx, doc, "$")
    if kind == "instrument":
        return _parse_instrument(ctx, doc, "$")
    if kind == "sequence":
        steps = []
        for n, s in enumerate(ctx.list(ctx.field(doc, "steps", "$"), "$.steps")):
            sp = f"$.steps[{n}]"
            if isinstance(s, dict) and "elements" in s:
                steps.append(_parse_povm(ctx, s, sp))
            else:
                steps.append(_parse_instrument(ctx, s, sp))
        try:
            seq = CoarseGrainingSequence(tuple(steps))
        except (InvariantViolation, DimensionMismatch) as exc:
            ctx.invariant("$.steps", exc)
        _dim_check(ctx, doc, "$", seq.dim)
        return seq
    if kind == "stochastic":
        m = ctx.matrix(ctx.field(doc, "matrix", "$"), "$.matrix", real=True)
        try:
            return StochasticMatrix(m)
        except InvariantViolation as exc:
            ctx.invariant("$.matrix", exc)
    # distribution: either "probs" or raw "counts"
    has_counts = "counts" in doc
    key = "counts" if has_counts else "probs"
    vals = [ctx.number(v, f"$.{key}[{n}]") for n, v in enumerate(ctx.list(ctx.field(doc, key, "$"), f"$.{key}"))]
    labels = None
    if "labels" in doc:
        raw = ctx.list(doc["labels"], "$.labels")
        labels = tuple(ctx.label(x, f"$.labels[{n}]") for n, x in enumerate(raw))
    try:
        if has_counts:
            return ClassicalDistribution.from_counts(vals, labels)
        return ClassicalDistribution(vals, labels)
    except InvariantViolation as exc:
        ctx.invariant(f"$.{key}", exc)


def loads(text: str, source: str = "<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_document(doc, source)


def load(path) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"{p}: cannot read file ({exc.strerror})") from exc
    except UnicodeDecodeError as exc:
        raise DocumentError(f"{p}: not UTF-8 ({exc.reason})") from exc
    return loads(text, str(p))
