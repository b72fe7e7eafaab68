import shutil
import subprocess

import numpy as np
import pytest

from qshoot import _kernels_py

try:
    from qshoot import _kernels
except ImportError:
    _kernels = None


def _backends():
    params = [pytest.param(_kernels_py, id="python")]
    if _kernels is not None:
        params.insert(0, pytest.param(_kernels, id="compiled"))
    else:
        params.append(pytest.param(None, id="compiled",
                                   marks=pytest.mark.skip("extension not built")))
    return params


@pytest.fixture(params=_backends())
def kernels(request):
    """Run a test against each kernel backend."""
    return request.param


@pytest.fixture(scope="session")
def cc():
    compiler = shutil.which("cc") or shutil.which("gcc")
    if compiler is None:
        pytest.skip("no C compiler available")
    return compiler


_TEST_PLUGIN_SRC = r"""
#include <math.h>
#include <stdint.h>

void answer(int32_t *out, const int32_t *in) {
    (void)in;
    *out = 42;
}

void mixed(int32_t *out0, float *out1, const int32_t *in0, const float *in1) {
    *out0 = 42 * in0[0];
    out1[0] = in1[0] * in1[1];
    out1[1] = in1[0] - in1[1];
}

void vsum(double *out, const double *in, const int32_t *len) {
    int32_t i;
    out[0] = 0.0;
    for (i = 0; i < len[0]; i++)
        out[0] += in[i];
}

void cornell_pot(double *out, const double *r, const int32_t *len) {
    int32_t i;
    for (i = 0; i < len[0]; i++)
        out[i] = 0.1 / r[i] + 0.5 * r[i];
}

void cornell_scalar(double *out, const double *r) {
    out[0] = 0.1 / r[0] + 0.5 * r[0];
}

void two_float_inputs(double *out, const double *a, const double *b) {
    out[0] = a[0] + b[0];
}

void overrun(int32_t *out, const int32_t *in) {
    int32_t i;
    (void)in;
    for (i = 0; i < 4; i++)
        out[i] = 7;
}
"""

_TEST_PLUGIN_MANIFEST = """\
# shapes for the test plugin
[function answer]
out_lengths = 1
out_types = INT32
in_lengths = 1
in_types = INT32
overridable = true

[function mixed]
out_lengths = 1,2
out_types = INT32,FLOAT32
in_lengths = 1,2
in_types = INT32,FLOAT32

[function vsum]
out_lengths = 1
out_types = FLOAT64
in_lengths = 3,1
in_types = FLOAT64,INT32
overridable = true

[function cornell_pot]
out_lengths = 1
out_types = FLOAT64
in_lengths = 1,1
in_types = FLOAT64,INT32
overridable = true

[function cornell_scalar]
out_lengths = 1
out_types = FLOAT64
in_lengths = 1
in_types = FLOAT64
overridable = true

[function two_float_inputs]
out_lengths = 1
out_types = FLOAT64
in_lengths = 1,1
in_types = FLOAT64,FLOAT64
overridable = true

[function overrun]
out_lengths = 1
out_types = INT32
in_lengths = 1
in_types = INT32
"""


@pytest.fixture(scope="session")
def test_plugin_paths(cc, tmp_path_factory):
    """Compile the toy plugin once; returns (library path, manifest path)."""
    root = tmp_path_factory.mktemp("plugin")
    src = root / "testplug.c"
    lib = root / "testplug.so"
    man = root / "testplug.manifest"
    src.write_text(_TEST_PLUGIN_SRC)
    man.write_text(_TEST_PLUGIN_MANIFEST)
    subprocess.run([cc, "-shared", "-fPIC", "-O2", str(src), "-o", str(lib), "-lm"],
                   check=True, capture_output=True)
    return str(lib), str(man)


@pytest.fixture()
def rng():
    return np.random.default_rng(20140824)
