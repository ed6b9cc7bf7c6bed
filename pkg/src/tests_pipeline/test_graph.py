import pytest

from src.core.errors import EmptyInput
from src.core.ngrams import build_fingerprint, save_fingerprint
from src.core.pcap import write_domain_list
from src.core.synth import SynthConfig, gen_legit, gen_tunnel
from src.pipeline.graph import run_pipeline, safe_name
from src.pipeline.schemas import RunConfig


def _list(path, names):
    with path.open("wb") as fh:
        write_domain_list(names, fh)
    return path


@pytest.fixture(scope="module")
def legit_fp():
    return build_fingerprint(gen_legit(1, 3000), source_label="legit-1")


def test_pipeline_runs_every_step(tmp_path, legit_fp):
    tunnel = _list(tmp_path / "t.txt", gen_tunnel(SynthConfig(seed=4, count=200)))
    legit = _list(tmp_path / "l.txt", gen_legit(5, 200))
    config = RunConfig(inputs=[tunnel, legit], split="none")
    state = run_pipeline(config, fingerprint=legit_fp)

    assert [entry["step"] for entry in state["log"]] == ["ingest", "check", "segment", "score", "rank", "render"]
    segment_entry = state["log"][2]
    assert segment_entry["names"] == sum(len(s) for s in state["segments"]) <= len(state["records"])
    assert state["error"] == ""
    # sequence numbers run across both inputs
    assert [r.seq for r in state["records"]] == list(range(len(state["records"])))
    totals = [s.score.total_match for s in state["ranked"]]
    assert totals == sorted(totals)
    assert state["report"].startswith(b"key\twindow_index\t")
    assert state["charts"] == {}


def test_pipeline_loads_fingerprint_from_path(tmp_path, legit_fp):
    fp_path = tmp_path / "legit.fp"
    with fp_path.open("w", encoding="utf-8", newline="\n") as fh:
        save_fingerprint(legit_fp, fh)
    src = _list(tmp_path / "l.txt", gen_legit(6, 150))
    state = run_pipeline(RunConfig(inputs=[src], fingerprint=fp_path, split="none"))
    assert state["fingerprint"].table == legit_fp.table
    assert len(state["ranked"]) == 2


def test_order_mismatch_stops_after_check(tmp_path, legit_fp):
    src = _list(tmp_path / "l.txt", gen_legit(6, 50))
    state = run_pipeline(RunConfig(inputs=[src], n=2), fingerprint=legit_fp)
    assert [entry["step"] for entry in state["log"]] == ["ingest", "check"]
    assert "1-gram" in state["error"] and "--n 1" in state["error"]
    assert state["report"] == b""


def test_empty_input_raises(tmp_path, legit_fp):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(EmptyInput):
        run_pipeline(RunConfig(inputs=[empty]), fingerprint=legit_fp)


def test_chart_dir_names_charts(tmp_path, legit_fp):
    src = _list(tmp_path / "t.txt", gen_tunnel(SynthConfig(seed=8, count=100)))
    state = run_pipeline(RunConfig(inputs=[src], chart_dir=tmp_path / "charts", top_k=10), fingerprint=legit_fp)
    assert sorted(state["charts"]) == ["example.com-0-delta.svg", "example.com-0-rank.svg"]
    assert all(svg.startswith("<?xml") for svg in state["charts"].values())


def test_safe_name():
    assert safe_name("10.0.0.1|example.com") == "10.0.0.1_example.com"
    assert safe_name("a/b c") == "a_b_c"
    assert safe_name("") == "_"
