import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from msinject.decoder import build_detector_graph
from msinject.engine import CompiledProgram
from msinject.noise import NoiseModel
from msinject.protocol import VARIANTS, build_stage1, build_stage2

GOLDEN = Path(__file__).parent / "golden"


def make_program(scheme="zz", dx1=1, dz1=3, dx2=3, dz2=5, dm=3,
                 theta=np.pi / 8, pattern="default", skip_detection=False):
    stage1 = build_stage1(VARIANTS[scheme], dx1, dz1, theta)
    return build_stage2(stage1, dx2, dz2, dm, pattern,
                        skip_stage1_detection=skip_detection)


@pytest.fixture(scope="session")
def small_zz_program():
    return make_program()


@pytest.fixture(scope="session")
def small_zz_setup(small_zz_program):
    model = NoiseModel("A", 3.35e-4, 1e4)
    compiled = CompiledProgram(small_zz_program, model)
    graph = build_detector_graph(small_zz_program, model, compiled)
    return small_zz_program, model, compiled, graph
