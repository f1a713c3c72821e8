"""Config parsing, validation corpus, and the command-line surface."""

import math

import pytest

import ionramp as ir
from ionramp.config import (
    dump_config,
    parse_config,
    with_overrides,
)
from ionramp.cli import main

MINIMAL = """
[chain]
species = Ca40
count = 2

[trap]
omega0_mhz = 1.2
gamma_squared = 3.0

[protocol]
kind = smoothstep
tf_us = 4.0
"""


def test_parse_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.species == ("Ca40", "Ca40")
    assert cfg.omega0 == pytest.approx(2 * math.pi * 1.2e6, rel=1e-15)
    assert cfg.tf == pytest.approx(4e-6, rel=1e-15)
    assert cfg.kind == "smoothstep"
    assert cfg.tf_values() == [cfg.tf]
    chain = cfg.chain()
    assert chain.n == 2
    assert chain.masses[0] == pytest.approx(39.9626 * ir.AMU, rel=1e-12)


def test_species_aliases_and_masses():
    cfg = parse_config("[chain]\nspecies = be9, 40ca, 171.0\n"
                       "[protocol]\ntf_us = 4\n")
    assert cfg.species == ("Be9", "Ca40", "171.0")
    masses = cfg.chain().masses
    assert masses[2] == pytest.approx(171.0 * ir.AMU, rel=1e-12)


def test_sweep_grid_forms():
    cfg = parse_config("[chain]\nspecies = Ca40\ncount = 2\n"
                       "[protocol]\ntf_sweep_us = 2, 3.5, 5\n")
    assert cfg.tf_sweep_us == (2.0, 3.5, 5.0)
    cfg2 = parse_config("[chain]\nspecies = Ca40\ncount = 2\n"
                        "[protocol]\ntf_sweep_us = 2:4:3\n")
    assert cfg2.tf_sweep_us == (2.0, 3.0, 4.0)
    assert cfg2.tf_values() == [2e-6, 3e-6, 4e-6]


def test_config_round_trip():
    cfg = parse_config(MINIMAL)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert ir.config_hash(again) == ir.config_hash(cfg)


def test_config_hash_ignores_plumbing():
    cfg = parse_config(MINIMAL)
    moved = with_overrides(cfg, out_dir="/somewhere/else", threads=8)
    assert ir.config_hash(moved) == ir.config_hash(cfg)
    changed = with_overrides(cfg, gamma_squared=2.0)
    assert ir.config_hash(changed) != ir.config_hash(cfg)


@pytest.mark.parametrize("text,needle", [
    ("[protocol]\ntf_us = 4\n", "species"),
    ("[chain]\nspecies = Xx99\n[protocol]\ntf_us = 4\n", "Xx99"),
    ("[chain]\nspecies = Ca40\ncount = 2\n", "tf_us"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[trap]\nomega0_mhz = -1\n"
     "[protocol]\ntf_us = 4\n", "omega0_mhz"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[trap]\ngamma_squared = 0\n"
     "[protocol]\ntf_us = 4\n", "gamma_squared"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = 4\n"
     "order = 12\n", "order"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = 4\n"
     "kind = banana\n", "kind"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = 4\n"
     "tf_sweep_us = 2, 3\n", "mutually exclusive"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\n"
     "tf_sweep_us = 5, 3\n", "ascending"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = 4\n"
     "design_mode = 7\n", "design_mode"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = nope\n",
     "tf_us"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\ntf_us = 4\n"
     "[rocket]\nfuel = 1\n", "rocket"),
    ("[chain]\nspecies = Ca40\ncount = 2\nkolor = blue\n"
     "[protocol]\ntf_us = 4\n", "kolor"),
    ("[chain]\nspecies = Ca40, Be9\ncount = 2\n[protocol]\ntf_us = 4\n",
     "count"),
    ("[chain]\nspecies = Ca40\ncount = 2\n[protocol]\n"
     "tf_sweep_us = 1:2\n", "tf_sweep_us"),
])
def test_malformed_configs_rejected(text, needle):
    with pytest.raises(ir.ConfigError) as err:
        parse_config(text)
    assert needle in str(err.value)


def test_with_overrides_validates():
    cfg = parse_config(MINIMAL)
    with pytest.raises(ir.ConfigError):
        with_overrides(cfg, omega0_mhz=-2.0)
    with pytest.raises(ir.ConfigError):
        with_overrides(cfg, not_a_field=1)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ir.ConfigError):
        ir.load_config(str(tmp_path / "nope.ini"))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_modes_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", MINIMAL)
    out1 = tmp_path / "m1"
    out2 = tmp_path / "m2"
    assert main(["modes", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["modes", "--config", cfg, "--out", str(out2)]) == 0
    b1 = (out1 / "modes.csv").read_bytes()
    b2 = (out2 / "modes.csv").read_bytes()
    assert b1 == b2
    printed = capsys.readouterr().out
    assert "1.732050807569" in printed


def test_cli_design_writes_protocol(tmp_path):
    cfg = _write(tmp_path, "c.ini", MINIMAL)
    out = tmp_path / "d"
    assert main(["design", "--config", cfg, "--out", str(out)]) == 0
    text = (out / "protocol.csv").read_text()
    assert text.startswith("# ionramp")
    assert "config_hash" in text
    assert (out / "design_report.txt").exists()


def test_cli_verify_small_case(tmp_path, capsys):
    cfg = _write(tmp_path, "c.ini", MINIMAL)
    out = tmp_path / "v"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    exc = (out / "excitation.csv").read_text()
    assert "total_quanta" in exc
    assert "total excitation" in capsys.readouterr().out
    report = (out / "verify_report.txt").read_text()
    assert "total excitation" in report


def test_cli_sweep(tmp_path):
    text = MINIMAL.replace("tf_us = 4.0", "tf_sweep_us = 4, 5")
    cfg = _write(tmp_path, "s.ini", text)
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "sweep_smoothstep.csv").read_text().splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    assert data[0].startswith("tf_us,total_quanta")
    assert len(data) == 3


def test_cli_exit_code_invalid_protocol(tmp_path):
    text = MINIMAL.replace("tf_us = 4.0", "tf_us = 0.05")
    cfg = _write(tmp_path, "bad.ini", text)
    assert main(["design", "--config", cfg, "--out",
                 str(tmp_path / "x")]) == 3


def test_cli_exit_code_config_error(tmp_path):
    cfg = _write(tmp_path, "bad.ini", "[chain]\nspecies = Unknownium\n")
    assert main(["modes", "--config", cfg]) == 4


def test_cli_exit_code_unconverged(tmp_path):
    text = MINIMAL.replace("kind = smoothstep",
                           "kind = shooting") + \
        "\n[optimizer]\nmax_iterations = 2\nmax_evaluations = 6\n"
    cfg = _write(tmp_path, "u.ini", text)
    assert main(["design", "--config", cfg, "--out",
                 str(tmp_path / "u")]) == 2


def test_cli_default_config_runs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["modes", "--out", str(tmp_path / "dflt")]) == 0
    assert (tmp_path / "dflt" / "modes.csv").exists()
