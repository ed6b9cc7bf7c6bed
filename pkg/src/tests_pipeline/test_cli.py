import io
import json
from dataclasses import replace
from ipaddress import IPv4Address

import pytest

from src.cli import main
from src.core.names import parse_name
from src.core.pcap import read_input, read_pcap, records_from_names, write_domain_list, write_pcap
from src.core.synth import SynthConfig, gen_legit, gen_tunnel


def _run(*argv):
    return main([str(a) for a in argv])


def _list(path, names):
    with path.open("wb") as fh:
        write_domain_list(names, fh)
    return path


def _report(path):
    lines = path.read_text().splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:]]


@pytest.fixture
def legit_fp(tmp_path):
    def build(n=1, seed=1, count=3000):
        src = _list(tmp_path / f"legit-{seed}.txt", gen_legit(seed, count))
        out = tmp_path / f"legit-{seed}-n{n}.fp"
        assert _run("fingerprint", src, "--n", n, "--out", out) == 0
        return out

    return build


def test_synth_list_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert _run("synth", "tunnel", "--count", 500, "--seed", 7, "--out", a) == 0
    assert _run("synth", "tunnel", "--count", 500, "--seed", 7, "--out", b) == 0
    assert len(a.read_bytes().splitlines()) == 500
    assert a.read_bytes() == b.read_bytes()


def test_synth_pcap_reads_back(tmp_path):
    out = tmp_path / "t.pcap"
    assert _run("synth", "tunnel", "--count", 500, "--seed", 7, "--emit", "pcap", "--out", out) == 0
    with out.open("rb") as fh:
        records, stats = read_pcap(fh)
    assert len(records) == 500
    assert stats.packets_skipped == 0
    assert records[0].name == next(gen_tunnel(SynthConfig(seed=7, count=1)))


def test_synth_other_kinds(tmp_path, capsys):
    out = tmp_path / "r.txt"
    assert _run("synth", "repeated", "--count", 20, "--label-len", 1, 2, "--apex", "", "--out", out) == 0
    assert all(line.startswith(b"abcdefgh") for line in out.read_bytes().splitlines())
    assert "wrote 20 repeated names" in capsys.readouterr().err
    assert _run("synth", "legit", "--count", 5, "--out", tmp_path / "l.txt") == 0


def test_synth_usage_errors(tmp_path):
    assert _run("synth", "tunnel", "--count", 0, "--out", tmp_path / "x.txt") == 1
    assert _run("synth", "tunnel", "--label-len", 10, 70, "--out", tmp_path / "x.txt") == 1
    # default suffix lengths do not fit next to the shared label
    assert _run("synth", "repeated", "--out", tmp_path / "x.txt") == 1


def test_fingerprint_legit(tmp_path, capsys):
    src = _list(tmp_path / "legit.txt", gen_legit(4, 1000))
    a, b = tmp_path / "a.fp", tmp_path / "b.fp"
    assert _run("fingerprint", src, "--n", 1, "--out", a) == 0
    err = capsys.readouterr().err
    assert err.startswith("k=")
    k = int(err.split()[0][2:])
    assert k <= 40
    assert _run("fingerprint", src, "--n", 1, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("ngviz-fp v1 n=1 total=")


def test_fingerprint_empty_input(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert _run("fingerprint", empty, "--out", tmp_path / "x.fp") == 2
    assert "EmptyTable" in capsys.readouterr().err


def test_missing_and_corrupt_inputs(tmp_path, legit_fp):
    fp = legit_fp()
    assert _run("analyze", tmp_path / "nope.txt", "-f", fp) == 2
    junk = tmp_path / "junk.pcap"
    junk.write_bytes(b"\x00" * 64)
    assert _run("analyze", junk, "-f", fp) == 2
    bad_fp = tmp_path / "bad.fp"
    bad_fp.write_text("hello\n")
    assert _run("analyze", _list(tmp_path / "x.txt", gen_legit(1, 10)), "-f", bad_fp) == 2


def test_usage_errors_exit_one(tmp_path, legit_fp):
    fp = legit_fp()
    src = _list(tmp_path / "x.txt", gen_legit(2, 50))
    with pytest.raises(SystemExit) as exc:
        _run("analyze", src, "-f", fp, "--bogus")
    assert exc.value.code == 1
    assert _run("analyze", src, "-f", fp, "--x", 0.6, "--y", 0.6) == 1
    assert _run("analyze", src, "-f", fp, "--window", 0) == 1
    assert _run("analyze", src, "-f", fp, "--threshold", 1.5) == 1


def test_order_mismatch_exit_one(tmp_path, legit_fp, capsys):
    fp = legit_fp(n=1)
    src = _list(tmp_path / "x.txt", gen_legit(2, 50))
    assert _run("analyze", src, "-f", fp, "--n", 2) == 1
    assert "--n" in capsys.readouterr().err
    assert _run("chart", src, "-f", fp, "--n", 2, "--out", tmp_path / "c") == 1


def test_bigram_tunnel_detected_and_listed_first(tmp_path, legit_fp):
    fp = legit_fp(n=2)
    # one client per corpus so by_ip gives one tunnel and one legit group
    tunnel = records_from_names(gen_tunnel(SynthConfig(seed=5, count=300)), client_ip=IPv4Address("10.9.9.9"))
    legit = records_from_names(gen_legit(6, 600), client_ip=IPv4Address("10.1.1.1"))
    captures = []
    for name, records in (("tunnel.pcap", tunnel), ("legit.pcap", legit)):
        with (tmp_path / name).open("wb") as fh:
            write_pcap(records, fh)
        captures.append(tmp_path / name)

    out = tmp_path / "report.tsv"
    code = _run("analyze", *captures, "-f", fp, "--n", 2, "--split-by", "by_ip", "--out", out)
    assert code == 3
    rows = _report(out)
    keys = [r["key"] for r in rows]
    assert keys[:3] == ["10.9.9.9"] * 3
    assert set(keys[3:]) == {"10.1.1.1"}
    assert all(r["flagged"] == "true" for r in rows[:3])
    assert all(r["flagged"] == "false" for r in rows[3:])


def test_unigram_tunnel_detected_with_steeper_exponents(tmp_path, legit_fp):
    fp = legit_fp(n=1)
    src = _list(tmp_path / "t.txt", gen_tunnel(SynthConfig(seed=9, count=300)))
    out = tmp_path / "report.tsv"
    assert _run("analyze", src, "-f", fp, "--a", 2, "--b", 2, "--out", out) == 3
    assert [r["key"] for r in _report(out)] == ["example.com"] * 3


def test_base128_unigram_tunnel_detected_at_defaults(tmp_path, legit_fp):
    fp = legit_fp(n=1)
    src = tmp_path / "t128.txt"
    assert _run("synth", "tunnel", "--encoding", "base128", "--count", 300, "--seed", 4, "--out", src) == 0
    out = tmp_path / "report.tsv"
    assert _run("analyze", src, "-f", fp, "--out", out) == 3
    rows = _report(out)
    assert [r["key"] for r in rows] == ["example.com"] * 3
    assert all(r["flagged"] == "true" for r in rows)


def test_legit_against_other_seed_is_clean(tmp_path, legit_fp):
    fp = legit_fp(seed=1)
    src = _list(tmp_path / "l.txt", gen_legit(2, 1000))
    assert _run("analyze", src, "-f", fp, "--out", tmp_path / "a.tsv") == 0
    out = tmp_path / "b.tsv"
    assert _run("analyze", src, "-f", fp, "--split-by", "none", "--out", out) == 0
    rows = _report(out)
    assert len(rows) >= 9
    assert all(float(r["total_match"]) > 0.5 for r in rows)


def test_self_match_is_one(tmp_path):
    src = _list(tmp_path / "t.txt", gen_tunnel(SynthConfig(seed=3, count=300)))
    fp = tmp_path / "self.fp"
    assert _run("fingerprint", src, "--out", fp) == 0
    out = tmp_path / "self.tsv"
    assert _run("analyze", src, "-f", fp, "--split-by", "none", "--window", 300, "--out", out) == 0
    rows = _report(out)
    assert len(rows) == 1
    assert rows[0]["rank_match"] == rows[0]["freq_match"] == rows[0]["total_match"] == "1.0000"


def test_analyze_is_deterministic(tmp_path, legit_fp):
    fp = legit_fp()
    src = _list(tmp_path / "mix.txt", list(gen_tunnel(SynthConfig(seed=2, count=150))) + list(gen_legit(3, 150)))
    outputs = []
    for run in ("one", "two"):
        charts = tmp_path / f"charts-{run}"
        report = tmp_path / f"{run}.tsv"
        _run("analyze", src, "-f", fp, "--split-by", "none", "--chart-dir", charts, "--out", report)
        outputs.append((report.read_bytes(), {p.name: p.read_bytes() for p in sorted(charts.iterdir())}))
    assert outputs[0] == outputs[1]
    assert set(outputs[0][1]) == {"all-0-rank.svg", "all-0-delta.svg", "all-1-rank.svg", "all-1-delta.svg", "all-2-rank.svg", "all-2-delta.svg"}


def test_json_lines_and_verbose(tmp_path, legit_fp, capsys):
    fp = legit_fp()
    src = _list(tmp_path / "l.txt", gen_legit(8, 300))
    out = tmp_path / "r.jsonl"
    assert _run("analyze", src, "-f", fp, "--split-by", "none", "--format", "json_lines", "--verbose", "--out", out) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert sorted(r["window_index"] for r in rows) == [0, 1, 2]
    assert all(set(r) == {"key", "window_index", "k_input", "rank_match", "freq_match", "total_match", "flagged"} for r in rows)
    steps = [json.loads(line)["step"] for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    assert steps == ["ingest", "check", "segment", "score", "rank", "render"]


def test_chart_command(tmp_path, legit_fp):
    fp = legit_fp()
    src = _list(tmp_path / "t.txt", gen_tunnel(SynthConfig(seed=1, count=100)))
    prefix = tmp_path / "charts" / "tunnel"
    assert _run("chart", src, "-f", fp, "--top-k", 10, "--out", prefix) == 0
    assert (tmp_path / "charts" / "tunnel-rank.svg").read_text().startswith("<?xml")
    assert "<svg" in (tmp_path / "charts" / "tunnel-delta.svg").read_text()


def test_split_command(tmp_path, capsys):
    names = [parse_name(f"q{i}.example.com") for i in range(6)]
    records = list(records_from_names(names))
    records = [r if i % 2 else replace(r, client_ip=IPv4Address("10.0.0.2")) for i, r in enumerate(records)]
    buf = io.BytesIO()
    write_pcap(records, buf)
    capture = tmp_path / "mixed.pcap"
    capture.write_bytes(buf.getvalue())

    out_dir = tmp_path / "split"
    assert _run("split", capture, "--split-by", "by_ip", "--out-dir", out_dir) == 0
    assert sorted(p.name for p in out_dir.iterdir()) == ["10.0.0.2.txt", "192.168.1.10.txt"]
    assert (out_dir / "10.0.0.2.txt").read_text().splitlines() == ["q0.example.com", "q2.example.com", "q4.example.com"]
    assert "wrote 2 files" in capsys.readouterr().err


def test_split_keeps_names_with_unsafe_octets(tmp_path):
    wires = [b"a\nb.example.com", b"#x.example.com", b"sp ace.example.com", b"\x85q.example.co\xa0", b"back\\slash.example.com"]
    buf = io.BytesIO()
    write_pcap(records_from_names([parse_name(w) for w in wires]), buf)
    capture = tmp_path / "odd.pcap"
    capture.write_bytes(buf.getvalue())

    out_dir = tmp_path / "split"
    assert _run("split", capture, "--split-by", "none", "--out-dir", out_dir) == 0
    (listing,) = out_dir.iterdir()
    records, stats = read_input(listing)
    assert stats.packets_skipped == 0
    assert [r.name.wire() for r in records] == wires
