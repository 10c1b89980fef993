import json
import math

import pytest

import crcdet


def cube(x, side):
    return crcdet.Box3([x, 0.0, 0.0, x + side, side, side])


def detected(scan_id, truth, found):
    s = crcdet.ScanRecord()
    s.scan_id = scan_id
    s.ground_truth = [crcdet.GroundTruthNodule(cube(20.0 * i, 5.0), 1) for i in range(truth)]
    s.candidates = [crcdet.CandidateBox(cube(20.0 * i + 1.0, 5.0), 0.8) for i in range(found)]
    return s


def test_geometry():
    a = crcdet.Box3([0, 0, 0, 2, 2, 2])
    b = crcdet.Box3([1, 0, 0, 3, 2, 2])
    assert crcdet.volume(a) == 8.0
    assert crcdet.iou(a, b) == pytest.approx(1.0 / 3.0)


def test_worked_example():
    d = crcdet.Dataset()
    d.scans = [detected("first", 10, 9), detected("second", 2, 1)]
    m = crcdet.aggregate_metrics(d, 0.5)
    assert abs(m.sensitivity_froc - 10.0 / 12.0) <= 1e-12
    assert abs(m.sensitivity_prc - 0.70) <= 1e-12


def test_generate_calibrate_evaluate():
    cfg = crcdet.GeneratorConfig()
    cfg.n_scans = 60
    cfg.seed = 4
    data = crcdet.generate(cfg)
    assert len(data.scans) == 60
    cal, test = crcdet.split_dataset(data, 1)
    assert len(cal.scans) == 30
    result = crcdet.calibrate_crc(cal, 0.2)
    assert not result.infeasible
    report = crcdet.evaluate(result, test)
    assert 0.0 <= report.sensitivity <= 1.0
    assert math.isnan(crcdet.calibrate_naive(0.5).achieved_calibration_risk)


def test_record_round_trip():
    s = detected("rt", 2, 1)
    back = crcdet.ScanRecord.from_json(s.to_json())
    assert back.scan_id == "rt"
    assert json.loads(s.to_json())["ground_truth"][1]["consensus"] == 1


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        crcdet.calibrate_crc(crcdet.Dataset([detected("a", 1, 1)], ""), 2.0)
    with pytest.raises(ValueError):
        crcdet.ScanRecord.from_json('{"scan_id": "x", "candidates": [{"box": [0,0,0,1,1,1], "confidence": 1.5}], "ground_truth": []}')


def test_run_experiment(tmp_path):
    plan = {
        "repetitions": 3,
        "base_seed": 1,
        "datasets": [{"name": "syn", "generator": {"n_scans": 30, "seed": 2}}],
    }
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    rows = crcdet.run_experiment(str(path), str(tmp_path / "out"))
    assert len(rows) == 3
    assert (tmp_path / "out" / "trials.csv").exists()
