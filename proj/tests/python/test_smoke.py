import json
import os
from pathlib import Path

import pytest

import cnnsynth

DATA_DIR = Path(os.environ.get("CNNSYNTH_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def clusters():
    trace = cnnsynth.parse_trace((DATA_DIR / "classic3_trace.csv").read_text())
    return cnnsynth.cluster(trace)


def test_cost_model():
    shape = cnnsynth.ConvShape(224, 224, 3, 11, 4, 96)
    assert cnnsynth.output_size(224, 11, 4) == 56
    assert cnnsynth.conv_macs(shape) == 56 * 56 * 96 * 121 * 3
    assert cnnsynth.conv_warps(shape) == 56 * 56 * 96 // 32
    with pytest.raises(cnnsynth.Error):
        cnnsynth.conv_warps(shape, "nope")


def test_trace_round_trip():
    text = (DATA_DIR / "classic3_trace.csv").read_text()
    trace = cnnsynth.parse_trace(text)
    assert len(trace) > 0
    again = cnnsynth.parse_trace(cnnsynth.serialize_trace(trace))
    assert cnnsynth.trace_totals(again) == cnnsynth.trace_totals(trace)
    with pytest.raises(ValueError, match="empty trace"):
        cnnsynth.parse_trace("input_h,input_w,in_channels,kernel,stride,out_channels,count\n")


def test_cluster(clusters):
    assert [g.center_h for g in clusters.groups] == [224, 112, 56, 28, 14, 7]
    assert [(b.kernel, b.stride, b.count) for b in clusters.groups[0].bins] == [
        (11, 4, 1),
        (7, 2, 1),
        (3, 1, 2),
    ]
    assert "14x14\t3\t5,1" in clusters.summary()
    restored = cnnsynth.ClusterSet.from_json(clusters.to_json())
    assert restored.to_json() == clusters.to_json()
    halved = cnnsynth.scale_clusters(clusters, 0.5)
    assert halved.groups[4].bins[2].count == 11


def test_fitness():
    value = cnnsynth.fitness(
        cnnsynth.CostVector(2156050176, 2803928), cnnsynth.GroupTargets(2156022912, 2802996)
    )
    assert cnnsynth.format_percent(value.value) == "0.02"
    assert cnnsynth.fitness(cnnsynth.CostVector(5, 7), cnnsynth.GroupTargets(5, 7)).value == 0.0


def test_synthesize_small(clusters):
    config = json.dumps({"seed": 3, "ga": {"population": 16, "generations": 20}})
    result = cnnsynth.synthesize(clusters, config)
    assert result["violations"] == []
    assert len(result["channels"]) == 6
    assert len(result["fitness"]) == 6
    assert cnnsynth.validate_model(result["model_json"]) == []
    assert cnnsynth.model_to_dot(result["model_json"]) == result["model_dot"]
    assert result["report_csv"].startswith("group,mac_target,wp_target")
    again = cnnsynth.synthesize(clusters, config)
    assert again["model_json"] == result["model_json"]


def test_config_validation():
    filled = json.loads(cnnsynth.parse_config("{}"))
    assert filled["ga"]["population"] == 64
    with pytest.raises(ValueError, match="unknown config key"):
        cnnsynth.parse_config('{"ga": {"populaton": 3}}')
