import argparse
import logging
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from back_end.services.storage_service.storage_service import CsvStorageService


def plot_trace(storage_service: CsvStorageService, out_path: str) -> str:
    """
    MSE per outer iteration for every scheme
    """
    table = storage_service.read_table(os.path.join(storage_service.out_dir, "trace.csv"))
    plt.figure(figsize=(7, 3.5))
    for scheme, rows in table.groupby("scheme", sort=False):
        plt.semilogy(rows["iteration"], rows["mse"], marker="o", label=scheme)
    plt.xlabel("Outer iteration")
    plt.ylabel("MSE")
    plt.title("Convergence")
    plt.legend()
    plt.grid(True)
    return _save(out_path)


def plot_sweep(storage_service: CsvStorageService, out_path: str) -> str:
    table = storage_service.read_table(os.path.join(storage_service.out_dir, "sweep.csv"))
    axis = table["axis"].iloc[0]
    plt.figure(figsize=(7, 3.5))
    for scheme, rows in table.groupby("scheme", sort=False):
        plt.semilogy(rows["value"], rows["mse"], marker="o", label=scheme)
    plt.xlabel(axis)
    plt.ylabel("MSE")
    plt.title(f"MSE versus {axis}")
    plt.legend()
    plt.grid(True)
    return _save(out_path)


def plot_position_grid(storage_service: CsvStorageService, out_path: str, scheme: str = "proposed") -> str:
    table = storage_service.read_table(os.path.join(storage_service.out_dir, "position_grid.csv"))
    grid = table[table["scheme"] == scheme].pivot(index="y", columns="x", values="mse")
    plt.figure(figsize=(5, 4))
    plt.pcolormesh(grid.columns, grid.index, grid.to_numpy(), shading="nearest", cmap="viridis")
    plt.colorbar(label="MSE")
    plt.xlabel("x (m)")
    plt.ylabel("y (m)")
    plt.title(f"MSE over PD array position ({scheme})")
    return _save(out_path)


def plot_ber(storage_service: CsvStorageService, out_path: str) -> str:
    table = storage_service.read_table(os.path.join(storage_service.out_dir, "ber.csv"))
    plt.figure(figsize=(7, 3.5))
    for scheme, rows in table.groupby("scheme", sort=False):
        # Zero-error points have no place on a log axis
        rows = rows[rows["ber"] > 0]
        plt.errorbar(rows["snr_db"], rows["ber"], yerr=rows["ci95"], marker="o", capsize=3, label=scheme)
    plt.yscale("log")
    plt.xlabel("SNR (dB)")
    plt.ylabel("BER")
    plt.title("BER versus SNR")
    plt.legend()
    plt.grid(True, which="both")
    return _save(out_path)


PLOTTERS = {
    "trace.csv": ("convergence.png", plot_trace),
    "sweep.csv": ("sweep.png", plot_sweep),
    "position_grid.csv": ("position_grid.png", plot_position_grid),
    "ber.csv": ("ber.png", plot_ber),
}


def plot_all(out_dir: str) -> list:
    """
    Plot every result file present in out_dir
    """
    storage_service = CsvStorageService(out_dir)
    written = []
    for file_name, (image_name, plotter) in PLOTTERS.items():
        if os.path.exists(os.path.join(out_dir, file_name)):
            written.append(plotter(storage_service, os.path.join(out_dir, image_name)))
    return written


def _save(out_path: str) -> str:
    plt.tight_layout()
    plt.savefig(out_path, format="png")
    plt.close()
    return out_path


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Plot CSV results of an experiment run")
    parser.add_argument("out_dir")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)
    images = plot_all(args.out_dir)
    for image in images:
        logging.info(f"Saved {image}")
    sys.exit(0 if images else 1)
