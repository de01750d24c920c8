import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from core.errors import ShapeError
from core.matrix_io import (
    density_from_document, density_to_document, load_matrix_file, read_matrix_document, save_matrix_file,
)
from core.qstates import SeededRng, random_density


def test_document_rows_and_flat_forms_agree():
    rows = {"dim": 2, "splitA": 1, "splitB": 2,
            "entries": [[[0.75, 0.0], [0.1, -0.2]], [[0.1, 0.2], [0.25, 0.0]]]}
    flat = dict(rows, entries=[[0.75, 0.0], [0.1, -0.2], [0.1, 0.2], [0.25, 0.0]])
    a, split = read_matrix_document(rows)
    b, _ = read_matrix_document(flat)
    assert split == (1, 2)
    assert np.array_equal(a, b)
    assert a[0, 1] == pytest.approx(0.1 - 0.2j)


@pytest.mark.parametrize("doc", [
    {"entries": [[1.0, 0.0]]},
    {"dim": 2, "entries": [[1.0, 0.0]]},
    {"dim": 2, "splitA": 3, "splitB": 1, "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]},
    {"dim": 1, "entries": [[1.0]]},
])
def test_malformed_documents(doc):
    with pytest.raises(ShapeError):
        read_matrix_document(doc)


def test_save_and_load_file():
    rho = random_density(4, SeededRng(3), split=(2, 2))
    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "sub" / "rho.json"
        save_matrix_file(rho, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["dim"] == 4 and doc["splitA"] == 2
        back = density_from_document(load_matrix_file(path))
    assert back.split == (2, 2)
    assert np.allclose(back.matrix, rho.matrix, atol=1e-15)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_matrix_file("/no/existe/rho.json")


def test_document_without_split():
    rho = random_density(3, SeededRng(4))
    doc = density_to_document(rho)
    assert doc["splitA"] is None
    assert density_from_document(doc).split is None
