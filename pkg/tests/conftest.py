import warnings

import pytest

from qa_kinetics.chain import AccuracyWarning, ModelParams


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture(autouse=True)
def _quiet_accuracy():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        yield
