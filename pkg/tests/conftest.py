import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from circuitdiag.circuit import parse_bench

DATA = Path(__file__).parent.parent / "src" / "circuitdiag" / "data" / "circuits"
ISCAS_DIR = Path(__file__).parent / "data" / "iscas85"


def load_circuit(name):
    return parse_bench((DATA / f"{name}.bench").read_text(), name)


@pytest.fixture(scope="session")
def fig1():
    return load_circuit("paperlike_fig1")


@pytest.fixture(scope="session")
def fig3():
    return load_circuit("paperlike_fig3")


@pytest.fixture(scope="session")
def fig4():
    return load_circuit("paperlike_fig4")


@pytest.fixture(scope="session")
def two_gate():
    return load_circuit("two_gate_cone")


def iscas(name):
    """Public ISCAS-85 netlist if the user supplied one, else skip."""
    path = ISCAS_DIR / f"{name}.bench"
    if not path.exists():
        pytest.skip(f"public ISCAS-85 netlist {name}.bench not supplied "
                    f"(drop it into tests/data/iscas85/ to enable)")
    return parse_bench(path.read_text(), name)
