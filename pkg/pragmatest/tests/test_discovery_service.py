"""
Tests for file discovery and probe record storage
"""
import json
import os

import pytest

from pragmatest.exceptions import UsageError
from pragmatest.models import ProbeRecord
from pragmatest.services.discovery_service import discover, display_path, find_qasm_files, load_source
from pragmatest.services.probe_cache_service import ProbeCacheService
from pragmatest.tests.conftest import FIXTURES_DIR, HEADER


class TestFindQasmFiles:
    """Walking file and directory arguments"""

    def test_directory_walk_is_sorted_and_recursive(self, write_qasm, tmp_path):
        write_qasm("b.qasm", HEADER)
        write_qasm("a.qasm", HEADER)
        write_qasm("nested/c.qasm", HEADER)
        write_qasm("notes.txt", "not qasm")

        found = find_qasm_files([str(tmp_path)])

        assert [os.path.basename(p) for p in found] == ["a.qasm", "b.qasm", "c.qasm"]
        assert found == sorted(found)

    def test_hidden_directories_are_skipped(self, write_qasm, tmp_path):
        write_qasm(".qutest/cached.qasm", HEADER)
        write_qasm("visible.qasm", HEADER)

        found = find_qasm_files([str(tmp_path)])

        assert [os.path.basename(p) for p in found] == ["visible.qasm"]

    def test_explicit_file_is_included_whatever_its_extension(self, write_qasm):
        path = write_qasm("program.txt", HEADER)

        assert len(find_qasm_files([path])) == 1

    def test_duplicates_are_collapsed(self, write_qasm, tmp_path):
        path = write_qasm("a.qasm", HEADER)

        assert len(find_qasm_files([path, str(tmp_path)])) == 1

    def test_missing_path(self, tmp_path):
        with pytest.raises(UsageError, match="path does not exist"):
            find_qasm_files([str(tmp_path / "gone")])

    def test_display_path_uses_forward_slashes(self):
        assert "\\" not in display_path(os.path.join(FIXTURES_DIR, "bell_test.qasm"))


class TestLoadSource:
    """Reading and parsing one file"""

    def test_parses_fixture_directory(self):
        sources = discover([FIXTURES_DIR])

        assert len(sources) == 10
        bad = [s for s in sources if s.has_errors]
        assert [os.path.basename(s.path) for s in bad] == ["bad_pragmas.qasm"]

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "latin1.qasm"
        path.write_bytes("OPENQASM 3; // caf\xe9".encode("latin-1"))

        source = load_source(str(path))

        assert [d.code for d in source.diagnostics] == ["QT000"]
        assert source.diagnostics[0].message == "file is not valid UTF-8"

    def test_byte_order_mark_is_ignored(self, tmp_path):
        path = tmp_path / "bom.qasm"
        path.write_bytes(("\ufeff" + HEADER + "qubit q;\n").encode("utf-8"))

        source = load_source(str(path))

        assert source.diagnostics == []
        assert source.program.version == "3"
        assert source.program.declarations[0].line == 3


class TestProbeCache:
    """TinyDB-backed probe records"""

    def record(self, status="ok", version=None):
        return ProbeRecord(runtime="native", version=version, status=status,
                           timestamp="2026-01-01T00:00:00+00:00", oracle_counts={"1": 16})

    def test_layout_under_home(self, tmp_path):
        cache = ProbeCacheService(str(tmp_path))

        assert cache.path_for("native", None) == os.path.join(str(tmp_path), "runtimes", "native", "active", "probe.json")
        assert cache.path_for("qiskit", "1.0.2").endswith(os.path.join("qiskit", "1.0.2", "probe.json"))

    def test_only_the_latest_record_is_kept(self, tmp_path):
        cache = ProbeCacheService(str(tmp_path))

        assert cache.record(self.record("error"))
        assert cache.record(self.record("ok"))

        with open(cache.path_for("native", None), encoding="utf-8") as handle:
            rows = list(json.load(handle)["_default"].values())
        assert [row["status"] for row in rows] == ["ok"]
        assert cache.latest("native").oracle_counts == {"1": 16}

    def test_stored_fields(self, tmp_path):
        cache = ProbeCacheService(str(tmp_path))
        cache.record(self.record())

        with open(cache.path_for("native", None), encoding="utf-8") as handle:
            rows = list(json.load(handle)["_default"].values())

        assert rows[0]["oracleCounts"] == {"1": 16}
        assert {"status", "timestamp", "runtime", "version", "message"} <= set(rows[0])

    def test_missing_record(self, tmp_path):
        cache = ProbeCacheService(str(tmp_path))

        assert cache.latest("native", "0.0.1") is None

    def test_unwritable_home_does_not_raise(self, tmp_path):
        blocker = tmp_path / "home"
        blocker.write_text("a file where a directory should be", encoding="utf-8")

        assert ProbeCacheService(str(blocker)).record(self.record()) is False
