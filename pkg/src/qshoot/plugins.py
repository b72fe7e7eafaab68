"""Shared-library plugin host with declared input/output shapes.

A plugin is a dynamic library whose functions take flat numeric arrays:
all output pointers first, then all input pointers, no return value.  The
per-function array lengths and scalar types are declared in a sidecar
manifest file (grammar below); lengths of overridable functions can be
changed at run time.  Example manifest:

    [function fun]
    out_lengths = 1
    out_types = INT32
    in_lengths = 1
    in_types = INT32
    overridable = true

Calls validate arity, scalar type and length of every argument and raise a
distinct error class for each mismatch.  Output buffers are allocated by the
host with guard canaries on both sides; a plugin that writes outside its
declared output length is detected after the call.
"""

import ctypes
import enum
import os
import threading
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import (
    ManifestError,
    PluginAdapterError,
    PluginArityError,
    PluginError,
    PluginLengthError,
    PluginLoadError,
    PluginTypeError,
)


class ScalarType(enum.Enum):
    INT32 = "INT32"
    FLOAT32 = "FLOAT32"
    FLOAT64 = "FLOAT64"

    @property
    def width(self):
        return {"INT32": 4, "FLOAT32": 4, "FLOAT64": 8}[self.value]

    @property
    def dtype(self):
        return {"INT32": np.int32, "FLOAT32": np.float32,
                "FLOAT64": np.float64}[self.value]

    @property
    def ctype(self):
        return {"INT32": ctypes.c_int32, "FLOAT32": ctypes.c_float,
                "FLOAT64": ctypes.c_double}[self.value]


_CANARY_PAD = 8
_CANARY = {ScalarType.INT32: np.int32(0x5EEDBEEF),
           ScalarType.FLOAT32: np.float32(-6.022141e23),
           ScalarType.FLOAT64: np.float64(-6.02214076e23)}


@dataclass
class FunctionShape:
    """Declared shape of one plugin function; lengths are the current ones."""

    name: str
    out_lengths: tuple
    out_types: tuple
    in_lengths: tuple
    in_types: tuple
    overridable: bool = False
    reentrant: bool = False

    def __post_init__(self):
        if len(self.out_lengths) != len(self.out_types):
            raise ManifestError("function '%s': out_lengths and out_types "
                                "have different arity" % self.name)
        if len(self.in_lengths) != len(self.in_types):
            raise ManifestError("function '%s': in_lengths and in_types "
                                "have different arity" % self.name)
        if not self.out_lengths or not self.in_lengths:
            raise ManifestError("function '%s' must declare at least one "
                                "output and one input" % self.name)
        if any(n < 1 for n in self.out_lengths + self.in_lengths):
            raise ManifestError("function '%s': lengths must be >= 1" % self.name)


@dataclass
class PluginManifest:
    functions: tuple
    path: str = None

    def __post_init__(self):
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise ManifestError("duplicate function name in manifest")

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        raise PluginError("manifest declares no function '%s'" % name)


_SHAPE_KEYS = {"out_lengths", "out_types", "in_lengths", "in_types",
               "overridable", "reentrant"}


def _parse_lengths(value, line):
    try:
        lengths = tuple(int(c.strip()) for c in value.split(","))
    except ValueError:
        raise ManifestError("lengths must be comma-separated integers, got %r"
                            % value, line=line) from None
    return lengths


def _parse_types(value, line):
    out = []
    for cell in value.split(","):
        cell = cell.strip()
        try:
            out.append(ScalarType(cell))
        except ValueError:
            raise ManifestError("unknown scalar type %r (expected INT32, "
                                "FLOAT32 or FLOAT64)" % cell, line=line) from None
    return tuple(out)


def parse_manifest_text(text, path=None):
    try:
        sections = config.parse_text(text)
    except ManifestError:
        raise
    except config.ConfigError as exc:
        raise ManifestError(exc.message, line=exc.line) from None
    if not sections:
        raise ManifestError("manifest declares no functions")
    functions = []
    for section in sections:
        parts = section.name.split()
        if len(parts) != 2 or parts[0] != "function":
            raise ManifestError("section must be '[function NAME]', got [%s]"
                                % section.name, line=section.line)
        name = parts[1]
        seen = {}
        for key, value, line in section.pairs:
            if key not in _SHAPE_KEYS:
                raise ManifestError("unknown key '%s'" % key, line=line)
            if key in seen:
                raise ManifestError("duplicate key '%s'" % key, line=line)
            seen[key] = (value, line)
        for key in ("out_lengths", "out_types", "in_lengths", "in_types"):
            if key not in seen:
                raise ManifestError("function '%s' is missing '%s'" % (name, key),
                                    line=section.line)
        try:
            shape = FunctionShape(
                name=name,
                out_lengths=_parse_lengths(*seen["out_lengths"]),
                out_types=_parse_types(*seen["out_types"]),
                in_lengths=_parse_lengths(*seen["in_lengths"]),
                in_types=_parse_types(*seen["in_types"]),
                overridable=config.get_bool(
                    {k: v[0] for k, v in seen.items()}, "overridable", False),
                reentrant=config.get_bool(
                    {k: v[0] for k, v in seen.items()}, "reentrant", False),
            )
        except ManifestError as exc:
            if exc.line is None:
                raise ManifestError(str(exc), line=section.line) from None
            raise
        functions.append(shape)
    return PluginManifest(functions=tuple(functions), path=path)


def load_manifest(path):
    """Parse a manifest file; malformed input raises ManifestError with the line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ManifestError("cannot read manifest %s: %s" % (path, exc)) from None
    return parse_manifest_text(text, path=path)


def format_manifest(manifest):
    """Canonical manifest text; parse(format(m)) == m."""
    blocks = []
    for f in manifest.functions:
        lines = ["[function %s]" % f.name,
                 "out_lengths = %s" % ",".join(str(n) for n in f.out_lengths),
                 "out_types = %s" % ",".join(t.value for t in f.out_types),
                 "in_lengths = %s" % ",".join(str(n) for n in f.in_lengths),
                 "in_types = %s" % ",".join(t.value for t in f.in_types),
                 "overridable = %s" % ("true" if f.overridable else "false"),
                 "reentrant = %s" % ("true" if f.reentrant else "false")]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


class LoadedPlugin:
    """An opened shared library with its resolved, shape-checked functions."""

    def __init__(self, path, manifest, lib, funcs):
        self.path = path
        self.manifest = manifest
        self._lib = lib
        self._funcs = funcs
        self._shapes = {f.name: FunctionShape(f.name, f.out_lengths, f.out_types,
                                              f.in_lengths, f.in_types,
                                              f.overridable, f.reentrant)
                        for f in manifest.functions}
        self._lock = threading.Lock()

    def shape(self, name):
        try:
            return self._shapes[name]
        except KeyError:
            raise PluginError("plugin has no function '%s'" % name) from None

    def override_lengths(self, name, in_lengths, out_lengths):
        """Change the declared lengths at run time; arity must not change."""
        shape = self.shape(name)
        if not shape.overridable:
            raise PluginError("function '%s' is not overridable" % name)
        in_lengths = tuple(int(n) for n in in_lengths)
        out_lengths = tuple(int(n) for n in out_lengths)
        if len(in_lengths) != len(shape.in_lengths):
            raise PluginArityError(
                "override changes input arity of '%s' from %d to %d"
                % (name, len(shape.in_lengths), len(in_lengths)))
        if len(out_lengths) != len(shape.out_lengths):
            raise PluginArityError(
                "override changes output arity of '%s' from %d to %d"
                % (name, len(shape.out_lengths), len(out_lengths)))
        if any(n < 1 for n in in_lengths + out_lengths):
            raise PluginLengthError("override lengths must be >= 1")
        with self._lock:
            shape.in_lengths = in_lengths
            shape.out_lengths = out_lengths
        return shape

    def _convert_input(self, pos, value, stype, length):
        arr = np.asarray(value)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1:
            raise PluginTypeError("input %d is not one-dimensional" % pos)
        kind = arr.dtype.kind
        if stype is ScalarType.INT32:
            if kind not in "iu":
                raise PluginTypeError(
                    "input %d must be %s, got dtype %s" % (pos, stype.value, arr.dtype))
            if arr.size and (arr.max(initial=0) > np.iinfo(np.int32).max
                             or arr.min(initial=0) < np.iinfo(np.int32).min):
                raise PluginTypeError("input %d does not fit INT32" % pos)
        else:
            if kind not in "iuf":
                raise PluginTypeError(
                    "input %d must be %s, got dtype %s" % (pos, stype.value, arr.dtype))
        if arr.shape[0] != length:
            raise PluginLengthError(
                "input %d has length %d, declared %d" % (pos, arr.shape[0], length))
        out = np.ascontiguousarray(arr, dtype=stype.dtype)
        if out is arr or (isinstance(value, np.ndarray) and out.base is value):
            out = out.copy()  # the foreign side must never see the caller's buffer
        return out

    def call(self, name, inputs):
        """Call a plugin function on flat arrays; returns the output arrays."""
        shape = self.shape(name)
        inputs = list(inputs)
        if len(inputs) != len(shape.in_lengths):
            raise PluginArityError(
                "function '%s' takes %d inputs, got %d"
                % (name, len(shape.in_lengths), len(inputs)))
        in_bufs = [self._convert_input(i, val, st, ln)
                   for i, (val, st, ln) in enumerate(zip(inputs, shape.in_types,
                                                         shape.in_lengths))]
        out_bufs = []
        out_views = []
        for st, ln in zip(shape.out_types, shape.out_lengths):
            buf = np.zeros(ln + 2 * _CANARY_PAD, dtype=st.dtype)
            buf[:_CANARY_PAD] = _CANARY[st]
            buf[-_CANARY_PAD:] = _CANARY[st]
            out_bufs.append(buf)
            out_views.append(buf[_CANARY_PAD:_CANARY_PAD + ln])
        args = [v.ctypes.data_as(ctypes.POINTER(st.ctype))
                for v, st in zip(out_views, shape.out_types)]
        args += [b.ctypes.data_as(ctypes.POINTER(st.ctype))
                 for b, st in zip(in_bufs, shape.in_types)]
        fn = self._funcs[name]
        if shape.reentrant:
            fn(*args)
        else:
            with self._lock:
                fn(*args)
        for buf, st in zip(out_bufs, shape.out_types):
            if np.any(buf[:_CANARY_PAD] != _CANARY[st]) \
                    or np.any(buf[-_CANARY_PAD:] != _CANARY[st]):
                raise PluginError(
                    "function '%s' wrote outside its declared output length" % name)
        return [v.copy() for v in out_views]

    def call_with_lengths(self, name, inputs, in_lengths, out_lengths):
        """Override lengths and call in one step (for batch evaluation)."""
        shape = self.shape(name)
        if (tuple(in_lengths) != shape.in_lengths
                or tuple(out_lengths) != shape.out_lengths):
            self.override_lengths(name, in_lengths, out_lengths)
        return self.call(name, inputs)


def load_plugin(path, manifest):
    """Open a dynamic library and resolve every manifest-declared function."""
    if isinstance(manifest, str):
        manifest = load_manifest(manifest)
    if not os.path.exists(path):
        raise PluginLoadError("library not found: %s" % path)
    try:
        lib = ctypes.CDLL(os.path.abspath(path))
    except OSError as exc:
        raise PluginLoadError("cannot open %s: %s" % (path, exc)) from None
    funcs = {}
    for shape in manifest.functions:
        try:
            fn = getattr(lib, shape.name)
        except AttributeError:
            raise PluginLoadError("symbol '%s' not found in %s"
                                  % (shape.name, path)) from None
        fn.restype = None
        fn.argtypes = ([ctypes.POINTER(t.ctype) for t in shape.out_types]
                       + [ctypes.POINTER(t.ctype) for t in shape.in_types])
        funcs[shape.name] = fn
    return LoadedPlugin(path, manifest, lib, funcs)


class _PluginEvaluator:
    """Adapter that turns a declared-shape function into V(r).

    Two accepted shapes (both FLOAT64 out, length 1 nominal):
      - a FLOAT64 input plus a trailing length-1 INT32 input that receives
        the batch length: batch evaluation overrides the lengths to the
        batch size and makes a single foreign call, element i being V(r_i);
      - one FLOAT64 input: the foreign loop cannot learn the batch length,
        so batches fall back to one length-1 call per point.
    """

    def __init__(self, plugin, name, pass_length):
        self.plugin = plugin
        self.name = name
        self.pass_length = pass_length

    def eval_one(self, r):
        if self.pass_length:
            out = self.plugin.call_with_lengths(
                self.name, [[r], [1]], in_lengths=(1, 1), out_lengths=(1,))[0]
        else:
            out = self.plugin.call_with_lengths(
                self.name, [[r]], in_lengths=(1,), out_lengths=(1,))[0]
        return float(out[0])

    def eval_batch(self, r_array):
        r_array = np.asarray(r_array, dtype=np.float64)
        n = len(r_array)
        if self.pass_length:
            return self.plugin.call_with_lengths(
                self.name, [r_array, [n]], in_lengths=(n, 1), out_lengths=(n,))[0]
        return np.array([self.eval_one(float(r)) for r in r_array])


def potential_from_plugin(plugin, name, label=None):
    """Wrap a plugin function as a scalar potential.

    The function must produce one FLOAT64 output and take one FLOAT64 input
    (optionally plus a trailing length-1 INT32 length argument), and must be
    overridable so batch evaluation can resize the arrays.
    """
    from .potentials import PluginPotential

    shape = plugin.shape(name)
    if shape.out_types != (ScalarType.FLOAT64,):
        raise PluginAdapterError(
            "function '%s' must produce exactly one FLOAT64 output" % name)
    if shape.in_types == (ScalarType.FLOAT64,):
        pass_length = False
    elif shape.in_types == (ScalarType.FLOAT64, ScalarType.INT32) \
            and shape.in_lengths[1] == 1:
        pass_length = True
    else:
        raise PluginAdapterError(
            "function '%s' must take one FLOAT64 input (optionally plus a "
            "length-1 INT32 length argument)" % name)
    if not shape.overridable:
        raise PluginAdapterError(
            "function '%s' must be overridable for batch evaluation" % name)
    evaluator = _PluginEvaluator(plugin, name, pass_length)
    return PluginPotential(evaluator, label=label or "%s:%s"
                           % (os.path.basename(plugin.path), name))
