import csv
import os

import numpy as np
import pytest

from fembem.cli import (CSV_COLUMNS, ConfigError, level_resolution, main,
                        parse_config, run_verify)

GOLDEN_HEADER = ("level,h,p,dofs_interior,dofs_mortar,dofs_trace,"
                 "rel_L2_omega,rel_H1semi_omega,scaled_rel_L2_m,"
                 "scaled_rel_L2_uext,rate_L2_omega,rate_H1semi_omega,"
                 "rate_m,rate_uext,solver,residual,iterations")


def test_golden_csv_header():
    assert ",".join(CSV_COLUMNS) == GOLDEN_HEADER


def test_defaults_and_precedence(tmp_path):
    cfgfile = tmp_path / "study.cfg"
    cfgfile.write_text("case = tc1\nlevels = 2\nk_multiplier = 3\n")
    cfg = parse_config(str(cfgfile), ["levels=1"])
    assert cfg["levels"] == 1                  # --set beats the file
    assert cfg["k_multiplier"] == 3.0          # file beats the default
    assert cfg["solver"] == "schur"            # default


@pytest.mark.parametrize("bad", [
    "levels=0", "case=tc9", "solver=qr", "mode=hp", "degrees=4",
    "k_multiplier=-1", "nonsense=1", "levels=abc"])
def test_config_validation_errors(bad):
    with pytest.raises(ConfigError):
        parse_config(None, [bad])


def test_malformed_config_file(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("just some words\n")
    with pytest.raises(ConfigError):
        parse_config(str(f))


def test_tc2_forces_unit_multiplier():
    cfg = parse_config(None, ["case=tc2", "k_multiplier=3"])
    assert cfg["k_multiplier"] == 1.0


def test_level_resolution():
    assert [level_resolution("tc1", i) for i in range(3)] == [2, 4, 8]
    assert [level_resolution("tc2", i) for i in range(2)] == [10, 20]


def test_run_poly_exact_end_to_end(tmp_path):
    cfgfile = tmp_path / "study.cfg"
    cfgfile.write_text(
        "case = poly-exact\nlevels = 1\ndegrees = 1\nk_multiplier = 1\n"
        f"output_dir = {tmp_path / 'out'}\n")
    rc = main(["run", "--config", str(cfgfile)])
    assert rc == 0
    out = tmp_path / "out" / "poly-exact_k1_p1_h.csv"
    assert out.exists()
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2
    row = dict(zip(CSV_COLUMNS, rows[1]))
    assert int(row["level"]) == 0
    assert float(row["rel_L2_omega"]) < 1e-10
    assert row["solver"] == "schur"


def test_run_export_matrices(tmp_path):
    cfgfile = tmp_path / "study.cfg"
    cfgfile.write_text(
        "case = poly-exact\nlevels = 1\nk_multiplier = 1\n"
        f"output_dir = {tmp_path / 'out'}\n")
    rc = main(["run", "--config", str(cfgfile), "--export-matrices"])
    assert rc == 0
    npz = tmp_path / "out" / "poly-exact_k1_p1_L0_matrices.npz"
    assert npz.exists()
    data = np.load(npz)
    assert "A_blk" in data and "rhs_w" in data


def test_run_missing_config_is_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_bad_set_is_error(tmp_path):
    cfgfile = tmp_path / "study.cfg"
    cfgfile.write_text("case = tc1\n")
    assert main(["run", "--config", str(cfgfile), "--set", "levels=0"]) == 2


def test_verify_unknown_suite():
    with pytest.raises(ConfigError):
        run_verify("nope")


def test_verify_conventions_cli():
    assert main(["verify", "--suite", "conventions"]) == 0


def test_verify_kernels_cli():
    assert main(["verify", "--suite", "kernels"]) == 0
