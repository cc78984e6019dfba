"""Channel and system description files.

JSON documents with a ``kind`` tag. Conditional tables are nested lists in
row-major order whose shape is fixed by the named alphabets, e.g.::

    {"kind": "bcc",
     "alphabets": {"x": ["0", "1"], "y1": ["0", "1"], "y2": ["0", "1"]},
     "tensor": [[[0.9025, 0.0475], [0.0475, 0.0025]],
                [[0.0025, 0.0475], [0.0475, 0.9025]]]}

Kinds: ``bcc`` (x, y1, y2), ``imperfection`` (q, qhat), ``mac`` (qhat1,
qhat2, s), ``pmf`` (one alphabet), ``joint`` (two or more alphabets),
``gaussian`` (scalar fields) and ``system``, which bundles a bcc, two
imperfection channels, a mac and optionally a witness. Every error names the
file and line.
"""
from __future__ import annotations

import json
from json.decoder import JSONArray, JSONObject
from json.scanner import py_make_scanner
from pathlib import Path

import numpy as np

from .channels import BccChannel, GaussianSystem, ImperfectionChannel, MacChannel
from .errors import ValidationError
from .prob import JointPmf, Pmf
from .regions import DiscreteSystem


class SpecError(ValidationError):
    def __init__(self, source: str, line: int | None, msg: str):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {msg}")


class LocDict(dict):
    """dict that remembers the line of each key's value."""

    line: int = 1
    lines: dict


class LocList(list):
    line: int = 1
    lines: list


def _line(s: str, idx: int) -> int:
    return s.count("\n", 0, idx) + 1


class _LocDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None, _w=None):
            s, end = s_and_end
            starts = []

            def scan(string, idx):
                starts.append(idx)
                return scan_once(string, idx)

            pairs, stop = JSONObject(s_and_end, strict, scan, None, lambda p: p, memo)
            out = LocDict()
            out.line = _line(s, end - 1)
            out.lines = {}
            for (k, v), pos in zip(pairs, starts):
                if k in out:
                    raise SpecError("<json>", _line(s, pos), f"duplicate key {k!r}")
                out[k] = v
                out.lines[k] = _line(s, pos)
            return out, stop

        def parse_array(s_and_end, scan_once, _w=None):
            s, end = s_and_end
            starts = []

            def scan(string, idx):
                starts.append(idx)
                return scan_once(string, idx)

            values, stop = JSONArray(s_and_end, scan)
            out = LocList(values)
            out.line = _line(s, end - 1)
            out.lines = [_line(s, p) for p in starts]
            return out, stop

        self.parse_object = parse_object
        self.parse_array = parse_array
        self.scan_once = py_make_scanner(self)


def parse_text(text: str, source: str = "<string>"):
    try:
        return _LocDecoder().decode(text)
    except SpecError as e:
        raise SpecError(source, e.line, str(e).split(": ", 1)[1]) from None
    except json.JSONDecodeError as e:
        raise SpecError(source, e.lineno, f"malformed JSON: {e.msg} (column {e.colno})") from None


def read_file(path) -> tuple[object, str]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"{p}: file not found") from None
    except OSError as e:
        raise ValidationError(f"{p}: cannot read ({e.strerror})") from None
    return parse_text(text, str(p)), str(p)


class _Ctx:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, key, msg):
        line = None
        if isinstance(node, LocDict):
            line = node.lines.get(key, node.line)
        elif isinstance(node, LocList):
            line = node.lines[key] if isinstance(key, int) and key < len(node.lines) else node.line
        raise SpecError(self.source, line, msg)

    def field(self, node, key, what="field"):
        if not isinstance(node, dict):
            raise SpecError(self.source, None, "expected a JSON object")
        if key not in node:
            self.fail(node, None, f"missing {what} {key!r}")
        return node[key]


SHAPES = {
    "bcc": ("x", "y1", "y2"),
    "imperfection": ("q", "qhat"),
    "mac": ("qhat1", "qhat2", "s"),
}


def _alphabets(ctx: _Ctx, node, names=None) -> list[tuple[str, int]]:
    alph = ctx.field(node, "alphabets")
    if not isinstance(alph, dict) or not alph:
        ctx.fail(node, "alphabets", "'alphabets' must be a non-empty object")
    if names is not None and tuple(alph) != names:
        ctx.fail(node, "alphabets", f"alphabets must be named {list(names)} in that order, got {list(alph)}")
    out = []
    for name, symbols in alph.items():
        if isinstance(symbols, int) and not isinstance(symbols, bool):
            size = symbols
        elif isinstance(symbols, list):
            size = len(symbols)
            if len(set(map(str, symbols))) != size:
                ctx.fail(alph, name, f"alphabet {name!r} repeats a symbol")
        else:
            ctx.fail(alph, name, f"alphabet {name!r} must be a symbol list or a size")
        if size < 1:
            ctx.fail(alph, name, f"alphabet {name!r} is empty")
        out.append((name, size))
    return out


def _tensor(ctx: _Ctx, node, shape: tuple[int, ...], key: str = "tensor") -> np.ndarray:
    raw = ctx.field(node, key)

    def walk(val, parent, idx, depth):
        if depth == len(shape):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                ctx.fail(parent, idx, f"{key}: expected a number, got {json.dumps(val)}")
            return float(val)
        if not isinstance(val, list):
            ctx.fail(parent, idx, f"{key}: expected a list at depth {depth}")
        if len(val) != shape[depth]:
            ctx.fail(parent, idx, f"{key}: expected {shape[depth]} entries at depth {depth}, got {len(val)}")
        return [walk(v, val, i, depth + 1) for i, v in enumerate(val)]

    arr = np.array(walk(raw, node, key, 0), dtype=float)
    bad = np.argwhere(arr < 0)
    if bad.size:
        ctx.fail(_locate(raw, bad[0]), int(bad[0][-1]), f"{key}: negative entry at index {tuple(int(i) for i in bad[0])}")
    return arr


def _locate(raw, index):
    node = raw
    for i in index[:-1]:
        node = node[int(i)]
    return node


def _row_check(ctx: _Ctx, node, arr: np.ndarray, n_inputs: int, what: str):
    sums = arr.reshape(arr.shape[:n_inputs] + (-1,)).sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raw = node["tensor"]
        sub = _locate(raw, idx + (0,)) if len(idx) > 1 else raw
        ctx.fail(sub, idx[-1], f"{what}: row {idx} sums to {float(sums[idx])!r}, expected 1")


def _build(ctx: _Ctx, node):
    kind = ctx.field(node, "kind")
    if kind in SHAPES:
        names = SHAPES[kind]
        dims = tuple(s for _, s in _alphabets(ctx, node, names))
        arr = _tensor(ctx, node, dims)
        _row_check(ctx, node, arr, 2 if kind == "mac" else 1, kind)
        cls = {"bcc": BccChannel, "imperfection": ImperfectionChannel, "mac": MacChannel}[kind]
        return cls(arr)
    if kind in ("pmf", "joint"):
        dims = tuple(s for _, s in _alphabets(ctx, node))
        if kind == "pmf" and len(dims) != 1:
            ctx.fail(node, "alphabets", "a pmf has exactly one alphabet")
        if kind == "joint" and len(dims) < 2:
            ctx.fail(node, "alphabets", "a joint pmf needs at least two alphabets")
        arr = _tensor(ctx, node, dims)
        if abs(arr.sum() - 1.0) > 1e-9:
            ctx.fail(node, "tensor", f"{kind}: total mass {float(arr.sum())!r} differs from 1")
        return Pmf(arr) if kind == "pmf" else JointPmf(arr)
    if kind == "gaussian":
        vals = {}
        for name in ("P", "N1", "N2", "N3", "alpha1", "alpha2"):
            v = ctx.field(node, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                ctx.fail(node, name, f"{name} must be a number")
            vals[name] = float(v)
        allow = node.get("allow_alpha_one", False)
        try:
            return GaussianSystem(**vals, allow_alpha_one=bool(allow))
        except ValidationError as e:
            key = next((k for k in vals if k in str(e)), None)
            ctx.fail(node, key, str(e))
    if kind == "system":
        parts = {}
        for key, want in (("bcc", BccChannel), ("imperfection1", ImperfectionChannel),
                          ("imperfection2", ImperfectionChannel), ("mac", MacChannel)):
            sub = ctx.field(node, key, "section")
            obj = _build(ctx, sub)
            if not isinstance(obj, want):
                ctx.fail(node, key, f"section {key!r} must be of kind {want.__name__}")
            parts[key] = obj
        try:
            system = DiscreteSystem(parts["bcc"], parts["imperfection1"], parts["imperfection2"], parts["mac"])
        except ValidationError as e:
            ctx.fail(node, "mac", str(e))
        witness = None
        if "witness" in node:
            w = node["witness"]
            witness = {}
            for key, want in (("p_uvx", JointPmf), ("p_q1", Pmf), ("p_q2", Pmf)):
                obj = _build(ctx, ctx.field(w, key, "witness entry"))
                if not isinstance(obj, want):
                    ctx.fail(w, key, f"witness entry {key!r} has the wrong kind")
                witness[key] = obj
            if witness["p_uvx"].rank != 3 or witness["p_uvx"].dims[2] != system.bcc.x_size:
                ctx.fail(w, "p_uvx", f"p_uvx must be over (u, v, x) with |x| = {system.bcc.x_size}")
            for key, size in (("p_q1", system.imp1.q_size), ("p_q2", system.imp2.q_size)):
                if witness[key].alphabet_size != size:
                    ctx.fail(w, key, f"{key} has {witness[key].alphabet_size} symbols, imperfection expects {size}")
        return SystemSpec(system, witness)
    ctx.fail(node, "kind", f"unknown kind {kind!r}")


class SystemSpec:
    """A discrete cascade and, when the file provides one, a witness distribution."""

    def __init__(self, system: DiscreteSystem, witness: dict | None):
        self.system = system
        self.witness = witness


def load_spec(path):
    """Load any supported kind from a file."""
    doc, source = read_file(path)
    return _build(_Ctx(source), doc)


def loads_spec(text: str, source: str = "<string>"):
    return _build(_Ctx(source), parse_text(text, source))


def _pmf_doc(p: Pmf, name: str) -> dict:
    return {"kind": "pmf", "alphabets": {name: p.alphabet_size}, "tensor": p.probs.tolist()}


def system_document(system: DiscreteSystem, witness: dict | None = None) -> dict:
    """JSON-ready description of a cascade (inverse of ``load_spec`` for kind 'system')."""
    def chan(kind, obj):
        return {"kind": kind, "alphabets": dict(zip(SHAPES[kind], obj.cond.shape)), "tensor": obj.cond.tolist()}

    doc = {
        "kind": "system",
        "bcc": chan("bcc", system.bcc),
        "imperfection1": chan("imperfection", system.imp1),
        "imperfection2": chan("imperfection", system.imp2),
        "mac": chan("mac", system.mac),
    }
    if witness:
        p = witness["p_uvx"]
        doc["witness"] = {
            "p_uvx": {"kind": "joint", "alphabets": dict(zip(("u", "v", "x"), p.dims)), "tensor": p.probs.tolist()},
            "p_q1": _pmf_doc(witness["p_q1"], "q1"),
            "p_q2": _pmf_doc(witness["p_q2"], "q2"),
        }
    return doc


def gaussian_document(sys: GaussianSystem) -> dict:
    doc = {"kind": "gaussian", **sys.as_dict()}
    if sys.allow_alpha_one:
        doc["allow_alpha_one"] = True
    return doc
