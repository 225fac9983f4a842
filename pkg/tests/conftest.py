import numpy as np
import pytest

from wristarc import _kernels
from wristarc.data_model import Recording
from wristarc.synth import synth_corpus


def make_recording(samples=None, n=200, rate=100.0, **meta):
    if samples is None:
        samples = np.zeros((n, 12))
    return Recording(np.asarray(samples, dtype=float), sample_rate=rate, **meta)


@pytest.fixture(params=sorted(_kernels.available_backends()))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = _kernels.available_backends()[request.param]
    monkeypatch.setattr(_kernels, "dcd_epoch", mod.dcd_epoch)
    monkeypatch.setattr(_kernels, "fuse_quaternions", mod.fuse_quaternions)
    return request.param


@pytest.fixture(scope="session")
def small_corpus():
    """Four healthy subjects plus one patient; shared by the evaluation tests."""
    return synth_corpus(4, l2_sessions=2, n_patients=1)
