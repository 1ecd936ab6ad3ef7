"""CLI contract tests: output shapes, exit codes, determinism, config file."""

import json
from fractions import Fraction

from twotori.cli import main
from twotori.series import EpsSeries


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestBeta:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "beta", "--max", "14")
        assert code == 0
        assert "-1/12" in out and "1/464486400" in out
        assert out.count("\n") == 8  # header + seven rows

    def test_single_row(self, capsys):
        code, out, _ = run(capsys, "beta", "--max", "2")
        assert code == 0
        assert "-1/12" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "beta", "--max", "6")
        assert code == 0
        assert json.loads(out)["betas"] == {"2": "-1/12", "4": "-1/480",
                                            "6": "1/12096"}

    def test_odd_max_is_usage_error(self, capsys):
        code, _, err = run(capsys, "beta", "--max", "13")
        assert code == 2 and "even" in err


class TestLambda:
    def test_weights(self, capsys):
        code, out, _ = run(capsys, "lambda", "--max-weight", "6")
        assert code == 0
        assert "(-1/12) * L[-2]" in out
        assert "(1) * vacuum" in out
        assert "(-1/10368) * L[-2]*L[-2]*L[-2]" in out
        assert "agrees: True" in out

    def test_json_roundtrip(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "lambda", "--max-weight", "4")
        data = json.loads(out)
        assert code == 0 and data["dual_oracle_agrees"] is True
        assert data["weights"]["4"][0]["partition"] == [2, 2]

    def test_odd_weight_usage_error(self, capsys):
        code, _, _ = run(capsys, "lambda", "--max-weight", "5")
        assert code == 2


class TestCompute:
    def test_eisenstein_odd_is_zero(self, capsys):
        code, out, _ = run(capsys, "compute", "eisenstein", "--k", "3")
        assert code == 0 and out.startswith("0")

    def test_eisenstein_requires_k(self, capsys):
        code, _, _ = run(capsys, "compute", "eisenstein")
        assert code == 2

    def test_eta(self, capsys):
        code, out, _ = run(capsys, "compute", "eta", "--q-order", "3")
        assert code == 0
        assert out.strip() == "q^(1/24)*(1 - q - q^2 + O(q^4))"

    def test_tau_degen_quasimodular_render(self, capsys):
        code, out, _ = run(capsys, "compute", "tau-degen",
                           "--eps-order", "6", "--q-order", "6")
        assert code == 0
        assert out.startswith("(-1/12)*eps^2 + 1/144*E2*eps^4")

    def test_onepoint_symbols(self, capsys):
        code, out, _ = run(capsys, "compute", "onepoint", "--partition", "2,2")
        assert code == 0
        assert out.strip() == "D^2 + 2*E2*D + 1/2*E4*C"

    def test_onepoint_bad_partition(self, capsys):
        code, _, err = run(capsys, "compute", "onepoint", "--partition", "2,1")
        assert code == 2 and "partition" in err

    def test_z2_module_json_parses(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "--eps-order", "4",
                           "--q-order", "2", "compute", "z2-module",
                           "--alpha-sq", "1/4", "--rank", "2")
        assert code == 0
        series = EpsSeries.from_json(json.loads(out))
        lead = series.coeff_eps(0)
        # q1 offset: alpha^2/2 - rank/24 = 1/8 - 1/12
        assert lead.offsets[0] == Fraction(1, 8) - Fraction(1, 12)

    def test_period_table(self, capsys):
        code, out, _ = run(capsys, "compute", "period",
                           "--eps-order", "3", "--q-order", "2")
        assert code == 0
        assert "d11 = " in out and "d22 = " in out and "d12 = " in out


class TestVerify:
    def test_modular_identities(self, capsys):
        code, out, _ = run(capsys, "verify", "modular-identities", "--q-order", "20")
        assert code == 0
        assert "OK: 3/3" in out

    def test_detHi_defaults_pass(self, capsys):
        code, out, _ = run(capsys, "verify", "detHi",
                           "--eps-order", "6", "--q-order", "4")
        assert code == 0 and "FAIL" not in out

    def test_theta_degen_flags(self, capsys):
        code, out, _ = run(capsys, "verify", "theta-degen", "--alpha-sq", "1",
                           "--rank", "1", "--eps-order", "6", "--q-order", "4")
        assert code == 0 and "alpha^2=1" in out

    def test_json_schema(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "verify",
                           "heisenberg-degen", "--eps-order", "4", "--q-order", "4")
        data = json.loads(out)
        assert code == 0 and data["pass"] is True
        check = data["reports"][0]["checks"][0]
        assert {"name", "pass", "order", "expected", "computed"} <= set(check)

    def test_matrix_size_must_cover_eps_order(self, capsys):
        code, _, err = run(capsys, "verify", "detHi", "--eps-order", "6",
                           "--matrix-size", "4")
        assert code == 2 and "matrix size" in err

    def test_unknown_suite_usage(self, capsys):
        code, _, _ = run(capsys, "verify", "nonsense")
        assert code == 2


class TestConfigAndDeterminism:
    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("eps-order=4\nq-order=3\nformat=json\n# comment\n")
        code, out, _ = run(capsys, "--config", str(cfg), "compute", "tau-degen")
        assert code == 0
        assert json.loads(out)["variable"] == "eps"

    def test_config_flag_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("q-order=3\n")
        code, out, _ = run(capsys, "--config", str(cfg), "--q-order", "5",
                           "compute", "eta")
        assert code == 0 and "O(q^6)" in out

    def test_bad_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("qorder=3\n")
        code, _, err = run(capsys, "--config", str(cfg), "compute", "eta")
        assert code == 2 and "unknown key" in err

    def test_byte_identical_reruns(self, capsys):
        argv = ("compute", "tau-degen", "--eps-order", "6", "--q-order", "4")
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second

    def test_matrix_size_invariance(self, capsys):
        base = ("--format", "json", "compute", "tau-degen",
                "--eps-order", "6", "--q-order", "4")
        _, small, _ = run(capsys, *base, "--matrix-size", "6")
        _, large, _ = run(capsys, *base, "--matrix-size", "9")
        assert small == large


class TestVerifyAll:
    def test_full_gate(self, capsys):
        code, out, _ = run(capsys, "verify", "all", "--eps-order", "6",
                           "--q-order", "4", "--max-weight", "6")
        assert code == 0
        assert "FAIL" not in out
        assert out.count("== ") >= 7  # one header per report
