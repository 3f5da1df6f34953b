import csv
import xml.etree.ElementTree as ET
from collections import Counter
from pathlib import Path

import pytest

from injectplots import EmptySeriesError, FigureSpec, MissingColumnError, render
from injectplots.cli import main

GOLDEN = Path(__file__).parent / "golden"

COLUMNS = [
    "scheme", "model", "eta", "p", "p_cx", "dx1", "dz1", "dx2", "dz2", "dm",
    "shots", "accepted", "success_rate", "success_sem", "eps_total",
    "eps_total_sem", "eps_xl", "eps_xl_sem", "eps_zl", "eps_zl_sem",
    "seed", "flags",
]


def synth_rows():
    rows = []
    for scheme in ("zz", "standard"):
        for dx2, dz2 in ((11, 11), (3, 15), (5, 25)):
            for p in (1e-4, 2e-4, 4e-4):
                eps = (4480 * p * p) if scheme == "zz" else 11.6 * p
                rows.append({
                    "scheme": scheme, "model": "A", "eta": 1e4,
                    "p": p, "p_cx": 20 * p,
                    "dx1": 1, "dz1": 3, "dx2": dx2, "dz2": dz2, "dm": dz2,
                    "shots": 100000, "accepted": 94000,
                    "success_rate": 0.94, "success_sem": 0.00075,
                    "eps_total": eps * 1.2, "eps_total_sem": eps * 0.1,
                    "eps_xl": eps * 0.2, "eps_xl_sem": eps * 0.05,
                    "eps_zl": eps, "eps_zl_sem": eps * 0.1,
                    "seed": 1, "flags": "",
                })
    return rows


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


@pytest.fixture()
def sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_csv(path, synth_rows())
    return str(path)


def svg_structure(path):
    tree = ET.parse(path)
    tags = Counter(el.tag.split("}")[-1] for el in tree.iter())
    return dict(sorted(tags.items()))


def test_error_and_success_panel(sweep_csv, tmp_path):
    out = str(tmp_path / "fig3.svg")
    spec = FigureSpec((sweep_csv,), "error-and-success", out)
    assert render(spec) == out
    structure = svg_structure(out)
    assert structure["svg"] == 1
    assert structure["g"] > 20           # axes, series groups, legend
    assert structure["use"] > 30         # markers on every series point


def test_decomposition_panel_with_overlay(sweep_csv, tmp_path):
    out = str(tmp_path / "fig5.svg")
    spec = FigureSpec((sweep_csv,), "decomposition", out, fit_a=4480.0)
    render(spec)
    text = Path(out).read_text()
    assert "4480" in text                # overlay label present


def test_render_is_deterministic(sweep_csv, tmp_path):
    a = str(tmp_path / "a.svg")
    b = str(tmp_path / "b.svg")
    render(FigureSpec((sweep_csv,), "error-and-success", a))
    render(FigureSpec((sweep_csv,), "error-and-success", b))
    assert Path(a).read_bytes() == Path(b).read_bytes()


def test_golden_structure(sweep_csv, tmp_path):
    out = str(tmp_path / "golden_check.svg")
    render(FigureSpec((sweep_csv,), "error-and-success", out))
    got = svg_structure(out)
    want = eval((GOLDEN / "fig_structure.txt").read_text())
    assert got == want


def test_png_output(sweep_csv, tmp_path):
    out = str(tmp_path / "fig.png")
    render(FigureSpec((sweep_csv,), "error-and-success", out, fmt="png"))
    assert Path(out).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("scheme,p\nzz,1e-4\n")
    with pytest.raises(MissingColumnError):
        render(FigureSpec((str(path),), "error-and-success",
                          str(tmp_path / "x.svg")))


def test_empty_csv(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(path, [])
    with pytest.raises(EmptySeriesError):
        render(FigureSpec((str(path),), "error-and-success",
                          str(tmp_path / "x.svg")))


def test_cli_roundtrip(sweep_csv, tmp_path):
    out = str(tmp_path / "cli.svg")
    assert main(["--csv", sweep_csv, "--panel", "decomposition",
                 "--fit-a", "4480", "--out", out]) == 0
    assert Path(out).exists()


def test_cli_error_exit(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("scheme,p\n")
    assert main(["--csv", str(bad), "--out", str(tmp_path / "n.svg")]) == 1
