import json

import numpy as np
import pytest

from timomem.cli import main
from timomem.config import ConfigError, emit_toml, load_config
from timomem.zoo import kernel_zoo, zoo_kernel

BASE = """
experiment = "simulate"

[beam]
rho1 = 1.0
rho2 = 1.0
kappa = 1.0
b = 1.0
length = 1.0

[kernel]
name = "exp-1"

[grid]
n = 12
history_nodes = 16
s_max = 6.0

[time]
horizon = 2.0
dt = 0.05
sample_every = 2
"""


def write_cfg(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_load_and_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, BASE))
        assert cfg.experiment == "simulate"
        assert cfg.n == 12
        assert cfg.kernel.family == "exponential"
        assert cfg.scan_points == 256  # untouched default
        resolved = cfg.resolved_dict()
        assert resolved["grid"]["n"] == 12
        assert resolved["scan"]["points"] == 256

    def test_subcommand_mismatch_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="subcommand"):
            load_config(write_cfg(tmp_path, BASE), experiment="scan")

    def test_unknown_experiment(self, tmp_path):
        bad = BASE.replace('"simulate"', '"frobnicate"')
        with pytest.raises(ConfigError, match="unknown experiment"):
            load_config(write_cfg(tmp_path, bad))

    def test_invalid_beam_parameter(self, tmp_path):
        bad = BASE.replace("rho1 = 1.0", "rho1 = -2.0")
        with pytest.raises(ConfigError, match="beam"):
            load_config(write_cfg(tmp_path, bad))

    def test_explicit_kernel_family(self, tmp_path):
        text = BASE.replace('name = "exp-1"',
                            'family = "exponential"\namplitude = 0.4\nrate = 2.0')
        cfg = load_config(write_cfg(tmp_path, text))
        assert cfg.kernel.params["rate"] == 2.0

    def test_tabulated_kernel_from_csv(self, tmp_path):
        s = np.linspace(0.0, 5.0, 26)
        table = tmp_path / "kernel.csv"
        np.savetxt(table, np.column_stack([s, 0.5 * np.exp(-s)]),
                   delimiter=",")
        text = BASE.replace('name = "exp-1"', f'family = "tabulated"\ntable = "{table}"')
        cfg = load_config(write_cfg(tmp_path, text))
        assert cfg.kernel.family == "tabulated"
        assert cfg.kernel.mu(1.0) == pytest.approx(0.5 * np.exp(-1.0), rel=1e-3)

    def test_missing_kernel_table(self, tmp_path):
        text = BASE.replace('[kernel]\nname = "exp-1"\n', "")
        with pytest.raises(ConfigError, match="kernel"):
            load_config(write_cfg(tmp_path, text))

    def test_kernel_b_mismatch(self, tmp_path):
        bad = BASE.replace("b = 1.0", "b = 3.0")
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, bad))

    def test_emit_toml_round_trips(self, tmp_path):
        import sys

        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib

        cfg = load_config(write_cfg(tmp_path, BASE))
        text = emit_toml(cfg.resolved_dict())
        parsed = tomllib.loads(text)
        assert parsed["experiment"] == "simulate"
        assert parsed["grid"]["n"] == 12
        assert parsed["beam"]["rho1"] == 1.0

    def test_nec_constants_must_pair(self, tmp_path):
        bad = BASE + "\n[nec]\nC = 2.0\n"
        with pytest.raises(ConfigError, match="together"):
            load_config(write_cfg(tmp_path, bad))


class TestZoo:
    def test_zoo_has_at_least_six_entries(self):
        zoo = kernel_zoo()
        assert len(zoo) >= 6
        names = {e.name for e in zoo}
        assert {"exp-1", "exp-slow", "poly-p125", "poly-p140", "compact-flat",
                "compact-inflection"} <= names

    def test_zoo_lookup(self):
        k = zoo_kernel("poly-p125")
        assert k.params["exponent"] == 4.0
        with pytest.raises(KeyError):
            zoo_kernel("nope")

    def test_documented_verdicts_cover_both_outcomes(self):
        zoo = {e.name: e for e in kernel_zoo()}
        assert zoo["poly-p125"].expect_nec is False
        assert zoo["compact-flat"].expect_nec is True
        assert zoo["compact-flat"].expect_exp_domination is False


class TestCli:
    def test_nec_check_passthrough(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE.replace('"simulate"', '"nec-check"')
                        + "\n[nec]\nC = 1.0\ndelta = 1.0\n")
        out = tmp_path / "out"
        assert main(["nec-check", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["nec"]["holds"] is True
        assert report["nec"]["C"] == 1.0
        assert (out / "resolved_config.toml").exists()

    def test_simulate_zero_horizon_single_row(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE.replace("horizon = 2.0", "horizon = 0.0"))
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--no-plots"]) == 0
        lines = (out / "energy.csv").read_text().strip().split("\n")
        assert len(lines) == 2  # header + one sample

    def test_simulate_writes_artifacts_and_figure(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("energy.csv", "report.json", "resolved_config.toml",
                     "energy.png"):
            assert (out / name).exists(), name

    def test_reproducible_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["simulate", "--config", str(cfg), "--out", str(out),
                         "--no-plots"]) == 0
            outs.append({p.name: p.read_bytes()
                         for p in out.iterdir() if p.suffix != ".png"})
        assert outs[0] == outs[1]

    def test_scan_artifacts(self, tmp_path):
        text = BASE.replace('"simulate"', '"scan"') + "\n[scan]\npoints = 24\n"
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["scan", "--config", str(cfg), "--out", str(out),
                     "--no-plots"]) == 0
        margins = (out / "margins.csv").read_text().strip().split("\n")
        assert margins[0] == "lambda,margin"
        assert len(margins) > 24
        assert (out / "eigs.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["scan"]["min_margin"] > 0

    def test_represent_check_artifacts(self, tmp_path):
        text = (BASE.replace('"simulate"', '"represent-check"')
                .replace("history_nodes = 16", "history_nodes = 24"))
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        assert main(["represent-check", "--config", str(cfg), "--out",
                     str(out), "--no-plots"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["residuals"]) == 3
        assert (out / "residuals.csv").exists()

    def test_zoo_listing(self, tmp_path, capsys):
        assert main(["zoo", "--out", str(tmp_path)]) == 0
        captured = capsys.readouterr().out
        assert "exp-1" in captured
        assert "poly-p125" in captured

    def test_invalid_config_exit_2(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE.replace("n = 12", "n = 1"))
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.toml"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_seed_override_recorded(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--seed", "7", "--no-plots"]) == 0
        assert "seed = 7" in (out / "resolved_config.toml").read_text()
