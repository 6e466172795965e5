import numpy as np
import pytest

from hcreduce import generate_blobs, partition_homogeneous


@pytest.fixture
def blobs_2x50():
    return generate_blobs(2, 50, 2, 1.0, 7)


@pytest.fixture
def blobs_partition(blobs_2x50):
    return partition_homogeneous(blobs_2x50)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
