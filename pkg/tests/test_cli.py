import json

import pytest

from cocycle_lab.cli import main

MODEL_CFG = """\
c0 = 0.1
c1_0 = 0.7180339887498949
sign = 1
r0 = 1.0
r1 = -1.0
lm0 = -0.6666666666666666
lp0 = 0.75
lm1 = 0.6666666666666666
lp1 = -0.5
eps = 0.01
lambda0 = 30.0
t = 0.0
omega = golden:40
"""


@pytest.fixture()
def model_cfg(tmp_path):
    p = tmp_path / "model.cfg"
    p.write_text(MODEL_CFG)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_decompose_row(capsys):
    code, out = run(capsys, "decompose", "--l1", "10", "--l2", "7", "--phi", "1.0")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "psi,chi,mu,a,b,beta"
    vals = dict(zip(lines[1].split(","), lines[2].split(",")))
    assert float(vals["mu"]) == pytest.approx(37.844836049223574)


def test_rotation_cf_fibonacci(capsys):
    code, out = run(capsys, "rotation", "cf", "--omega", "golden", "--depth", "10")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[2:]]
    qs = [int(r[2]) for r in rows]
    assert qs == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_rotation_brjuno_and_conda(capsys):
    code, out = run(capsys, "rotation", "brjuno", "--omega", "golden", "--depth", "12")
    assert code == 0
    sums = [float(line.split(",")[3]) for line in out.strip().splitlines()[2:]]
    assert all(b > a for a, b in zip(sums, sums[1:]))
    code, out = run(capsys, "rotation", "conda", "--omega", "1,1,1,1,1,50,1,1,1,1,1,1",
                    "--depth", "12")
    assert code == 0
    header = out.strip().splitlines()[1]
    assert header == "n,p_n,q_n,pass_A1,pass_A2,delta_j"


def test_determinism(capsys):
    _, out1 = run(capsys, "decompose", "--l1", "123.5", "--l2", "9.25", "--phi", "2.2")
    _, out2 = run(capsys, "decompose", "--l1", "123.5", "--l2", "9.25", "--phi", "2.2")
    assert out1 == out2


def test_unknown_command_exit_64(capsys):
    assert main(["definitely-not-a-command"]) == 64
    assert main([]) == 64


def test_refusal_exit_2(capsys):
    code = main(["validate-lemma", "3", "--l1", "50", "--l2", "40"])
    assert code == 2


def test_model_check_json(capsys, model_cfg):
    code, out = run(capsys, "model-check", "--config", model_cfg)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["all_pass"] is True
    assert len(doc["result"]["zeros"]) == 2


def test_collisions_outputs(capsys, model_cfg):
    code, out = run(capsys, "collisions", "--config", model_cfg,
                    "--delta", "0.05", "--horizon", "100000")
    assert code == 0
    assert "verdict" in out and "SECONDARY" in out
    assert "0,1,1," in out  # tau_{0,1} = 1 at the aligned parameter


def test_certify_json(capsys, model_cfg):
    code, out = run(capsys, "certify", "--config", model_cfg, "--steps", "52",
                    "--grid", "4096", "--window", "1,3,1,0.05")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["status"] == "certified"
    assert doc["result"]["window_margin"] > doc["result"]["window_floor"]


def test_validate_lemma4_cli(capsys):
    code, out = run(capsys, "validate-lemma", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["pass_gap"] and doc["result"]["pass_chi"]


def test_sweep_csv(capsys, model_cfg):
    code, out = run(capsys, "sweep", "--config", model_cfg,
                    "--t-grid", "0.0,0.002,2", "--lambda-grid", "20,30,2",
                    "--steps", "24", "--grid", "512")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1] == "t,lambda0,status,min_log_norm,separation"
    assert len(lines) == 2 + 4


def test_out_dir(tmp_path, capsys):
    out_dir = tmp_path / "results"
    code = main(["--out", str(out_dir), "decompose",
                 "--l1", "10", "--l2", "7", "--phi", "0.5"])
    assert code == 0
    files = list(out_dir.iterdir())
    assert len(files) == 1 and files[0].name == "decompose.csv"
    text = files[0].read_text()
    assert text.startswith("# {") and text.endswith("\n")
