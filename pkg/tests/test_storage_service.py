import numpy as np
import pandas as pd
import pytest

from back_end.services.storage_service.storage_service import CsvStorageService, assignment_rows
from back_end.vlc_core.association import Assignment
from back_end.vlc_core.channel import ChannelSet
from back_end.vlc_core.shared.errors import AssignmentError


@pytest.fixture
def storage_service(tmp_path):
    return CsvStorageService(str(tmp_path / "out"))


def test_table_header_and_precision(storage_service):
    table = pd.DataFrame({"scheme": ["proposed"], "mse": [1 / 3]})
    path = storage_service.write_table(table, "summary.csv", {"scheme": "-", "mse": "-"}, "abc123")

    with open(path, "rb") as f:
        content = f.read().decode("utf-8")
    first_line = content.split("\r\n")[0]
    assert first_line == "# units: scheme=-; mse=-; config_sha256=abc123"
    assert content.endswith("\r\n")
    assert "\n" not in content.replace("\r\n", "")

    back = storage_service.read_table(path)
    assert back["mse"].iloc[0] == 1 / 3
    assert storage_service.read_header(path)["config_sha256"] == "abc123"


def test_matrix_round_trip(storage_service):
    rng = np.random.default_rng(0)
    matrix = rng.uniform(size=(3, 5)) * 1e-5
    path = storage_service.write_matrix(matrix, "w.csv", "sqrt(W)", "h")
    np.testing.assert_array_equal(storage_service.read_matrix(path), matrix)
    assert storage_service.read_header(path)["shape"] == "3x5"


def test_empty_matrix(storage_service):
    path = storage_service.write_matrix(np.zeros((0, 4)), "nlos.csv", "gain", "h")
    assert storage_service.read_matrix(path).shape == (0, 4)


def test_channels_round_trip(storage_service, tiny_chans):
    storage_service.dump_channels(tiny_chans, "h")
    loaded = storage_service.load_channels()
    assert isinstance(loaded, ChannelSet)
    np.testing.assert_array_equal(loaded.los, tiny_chans.los)
    np.testing.assert_array_equal(loaded.nlos, tiny_chans.nlos)


def test_assignment_rows_are_one_based():
    a = Assignment.from_pairs([1, -1], [0, 1], n_leds=2, n_pds=2)
    rows = assignment_rows(a)
    assert rows.to_dict("list") == {"unit": [1, 2], "led": [2, 0], "pd": [1, 2]}


def test_read_assignment(storage_service):
    a = Assignment.from_pairs([1, 0, -1], [0, 1, 1], n_leds=2, n_pds=2)
    rows = assignment_rows(a)
    rows.insert(0, "scheme", "proposed")
    path = storage_service.write_table(rows, "assignment.csv", {}, "h")
    back = storage_service.read_assignment(path, n_leds=2, n_pds=2, scheme="proposed")
    np.testing.assert_array_equal(back.f, a.f)
    np.testing.assert_array_equal(back.g, a.g)


def test_read_assignment_rejects_bad_rows(storage_service):
    rows = pd.DataFrame({"unit": [1, 1], "led": [3, 1], "pd": [1, 1]})
    path = storage_service.write_table(rows, "assignment.csv", {}, "h")
    with pytest.raises(AssignmentError) as info:
        storage_service.read_assignment(path, n_leds=2, n_pds=2)
    assert any("out of range" in v for v in info.value.violations)
    assert any("exactly once" in v for v in info.value.violations)
