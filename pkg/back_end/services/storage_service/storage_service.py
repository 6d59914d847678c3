import os

import numpy as np
import pandas as pd

from back_end.vlc_core.association import Assignment, validate
from back_end.vlc_core.channel import ChannelSet
from back_end.vlc_core.shared.errors import AssignmentError

FLOAT_FORMAT = "%.17g"
LINE_TERMINATOR = "\r\n"


class CsvStorageService:
    def __init__(self, out_dir: str) -> None:
        self.out_dir = out_dir
        os.makedirs(self.out_dir, exist_ok=True)

    def write_table(self, table: pd.DataFrame, file_name: str, units: dict, config_hash: str) -> str:
        """
        Write a table as CSV after a '#' header naming units and the config hash
        """
        file_path = os.path.join(self.out_dir, file_name)
        with open(file_path, "w", newline="", encoding="utf-8") as f:
            f.write(_header_line(units, config_hash) + LINE_TERMINATOR)
            table.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator=LINE_TERMINATOR)
        return file_path

    def read_table(self, file_path: str) -> pd.DataFrame:
        return pd.read_csv(file_path, skiprows=1)

    def read_header(self, file_path: str) -> dict:
        """
        Parse the '#' header line back into {name: value}
        """
        with open(file_path, "r", encoding="utf-8") as f:
            line = f.readline().strip()
        fields = {}
        for item in line.lstrip("#").replace("units:", "").split(";"):
            if "=" in item:
                key, value = item.split("=", 1)
                fields[key.strip()] = value.strip()
        return fields

    def write_matrix(self, matrix: np.ndarray, file_name: str, unit: str, config_hash: str) -> str:
        """
        Row-major numeric matrix, no column names
        """
        file_path = os.path.join(self.out_dir, file_name)
        with open(file_path, "w", newline="", encoding="utf-8") as f:
            f.write(_header_line({"entries": unit, "shape": "x".join(map(str, matrix.shape))}, config_hash) + LINE_TERMINATOR)
            pd.DataFrame(np.atleast_2d(matrix)).to_csv(
                f, index=False, header=False, float_format=FLOAT_FORMAT, lineterminator=LINE_TERMINATOR
            )
        return file_path

    def read_matrix(self, file_path: str) -> np.ndarray:
        shape = tuple(int(v) for v in self.read_header(file_path)["shape"].split("x"))
        if 0 in shape:
            return np.zeros(shape)
        return pd.read_csv(file_path, skiprows=1, header=None).to_numpy(dtype=float).reshape(shape)

    def dump_channels(self, chans: ChannelSet, config_hash: str, prefix: str = "") -> list:
        return [
            self.write_matrix(chans.los, f"{prefix}los.csv", "gain", config_hash),
            self.write_matrix(chans.nlos, f"{prefix}nlos.csv", "gain", config_hash),
        ]

    def load_channels(self, prefix: str = "") -> ChannelSet:
        return ChannelSet(
            los=self.read_matrix(os.path.join(self.out_dir, f"{prefix}los.csv")),
            nlos=self.read_matrix(os.path.join(self.out_dir, f"{prefix}nlos.csv")),
        )

    def read_assignment(self, file_path: str, n_leds: int, n_pds: int, scheme: str = None) -> Assignment:
        """
        Load (unit, led, pd) rows, 1-based with 0 for unassigned, and validate them
        """
        table = self.read_table(file_path)
        if scheme is not None and "scheme" in table.columns:
            table = table[table["scheme"] == scheme]
        table = table.sort_values("unit")

        # Range checks before building matrices
        errors = []
        for column, limit in (("led", n_leds), ("pd", n_pds)):
            bad = table[(table[column] < 0) | (table[column] > limit)]
            for _, row in bad.iterrows():
                errors.append(f"unit {row['unit']}: {column} index {row[column]} out of range 0..{limit}")
        if sorted(table["unit"]) != list(range(1, len(table) + 1)):
            errors.append("unit column must enumerate 1..N exactly once")
        if errors:
            raise AssignmentError(errors)

        assignment = Assignment.from_pairs(table["led"].to_numpy() - 1, table["pd"].to_numpy() - 1, n_leds, n_pds)
        violations = validate(assignment)
        if violations:
            raise AssignmentError(violations)
        return assignment


def assignment_rows(assignment: Assignment) -> pd.DataFrame:
    leds, pds = assignment.pairs()
    return pd.DataFrame({
        "unit": np.arange(1, assignment.n_units + 1),
        "led": leds + 1,
        "pd": pds + 1,
    })


def _header_line(units: dict, config_hash: str) -> str:
    described = "; ".join(f"{name}={unit}" for name, unit in units.items())
    return f"# units: {described}; config_sha256={config_hash}"
