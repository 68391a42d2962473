import json

import pytest

from patternrelax.cli import main


def test_cli_gen_relax_solve_verify_bench(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    assert main(["gen", "--tag", "S(2,4)", "--seed", "3", "--out", str(inst)]) == 0
    data = json.loads(inst.read_text())
    assert set(data) >= {"f", "box", "id", "tag", "seed"}

    sdpa = tmp_path / "prog.dat-s"
    assert main(["relax", "--instance", str(inst), "--method", "C",
                 "--sense", "min", "--export-sdpa", str(sdpa)]) == 0
    body = sdpa.read_text().splitlines()
    assert int(body[0]) > 0 and int(body[1]) > 0

    cert = tmp_path / "cert.json"
    assert main(["solve", "--instance", str(inst), "--method", "C",
                 "--sense", "min", "--certificate", str(cert)]) == 0
    out = capsys.readouterr().out
    assert "status: optimal" in out
    cert_data = json.loads(cert.read_text())
    assert set(cert_data) == {"lambda", "kind", "blocks"}

    assert main(["verify", "--certificate", str(cert),
                 "--instance", str(inst)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS")

    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"families": ["S(2,3)"], "methods": ["M"],
                               "samples": 2, "base_seed": 1}))
    csv_out = tmp_path / "results.csv"
    assert main(["bench", "--config", str(cfg), "--out", str(csv_out)]) == 0
    lines = csv_out.read_text().splitlines()
    assert lines[0].startswith("instance_id,family,method,sense")
    assert len(lines) == 1 + 2 * 2


def test_cli_verify_detects_tampered_certificate(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    main(["gen", "--tag", "S(2,4)", "--seed", "5", "--out", str(inst)])
    cert = tmp_path / "cert.json"
    main(["solve", "--instance", str(inst), "--method", "M",
          "--sense", "min", "--certificate", str(cert)])
    capsys.readouterr()
    data = json.loads(cert.read_text())
    data["lambda"] = data["lambda"] + 0.5  # claim a better bound
    cert.write_text(json.dumps(data))
    assert main(["verify", "--certificate", str(cert),
                 "--instance", str(inst)]) == 1
    assert capsys.readouterr().out.startswith("FAIL")


def test_cli_max_sense_certificate_round_trip(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    main(["gen", "--tag", "S(2,4)", "--seed", "7", "--out", str(inst)])
    cert = tmp_path / "cert.json"
    assert main(["solve", "--instance", str(inst), "--method", "H",
                 "--sense", "max", "--certificate", str(cert)]) == 0
    capsys.readouterr()
    assert main(["verify", "--certificate", str(cert),
                 "--instance", str(inst)]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_cli_rejects_unknown_method(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen", "--tag", "Aex", "--seed", "1", "--out", str(inst)])
    with pytest.raises(ValueError):
        main(["solve", "--instance", str(inst), "--method", "nope",
              "--sense", "min"])
