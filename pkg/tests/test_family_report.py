"""Seeded test-function families and deterministic report serialization."""

import json

import numpy as np
import pytest

from tracelab.family import family_generator, family_tails
from tracelab.grid import GridSpec, lp_norm
from tracelab.report import Report, load_report, plot_report

SPEC1 = GridSpec(1, 256, 16.0)


class TestFamily:
    def test_same_seed_is_bitwise_identical(self):
        a = family_generator(99, SPEC1, 10)
        b = family_generator(99, SPEC1, 10)
        for (na, fa), (nb, fb) in zip(a, b):
            assert na == nb
            assert np.array_equal(fa.values, fb.values)

    def test_different_seed_changes_random_members(self):
        a = dict(family_generator(1, SPEC1, 10))
        b = dict(family_generator(2, SPEC1, 10))
        assert not np.array_equal(a["random-band-0"].values, b["random-band-0"].values)
        # the deterministic members do not depend on the seed
        assert np.array_equal(a["gaussian-w1"].values, b["gaussian-w1"].values)

    def test_fixed_member_names(self):
        names = [n for n, _ in family_generator(7, SPEC1, 10)]
        assert names[:7] == [
            "gaussian-w0.5",
            "gaussian-w1",
            "gaussian-w2",
            "bump-left",
            "bump-right",
            "modulated-k3",
            "modulated-k5",
        ]
        assert names[7:] == ["random-band-0", "random-band-1", "random-band-2"]

    def test_deterministic_member_tails_negligible(self):
        members = family_generator(7, SPEC1, 7)
        tails = family_tails(members)
        assert all(v <= 1e-12 for v in tails.values())

    def test_random_members_unit_l1(self):
        members = dict(family_generator(7, SPEC1, 10))
        assert lp_norm(members["random-band-1"], 1.0) == pytest.approx(1.0)

    def test_mean_zero_option(self):
        members = family_generator(7, SPEC1, 5, mean_zero=True)
        assert all(abs(f.mean()) < 1e-14 for _, f in members)

    def test_count_validated(self):
        with pytest.raises(ValueError):
            family_generator(7, SPEC1, 0)


class TestReport:
    def _report(self):
        rep = Report("demo", {"grid.N": 256})
        rep.append(name="row-a", value=1.5, passed=True)
        rep.append(name="row-b", value=float(2**0.5), ratio=0.3, passed=False)
        rep.audits["tail"] = 1e-13
        return rep

    def test_payload_excludes_timestamp(self):
        rep = self._report()
        assert "metadata" not in rep.payload()
        body = json.loads(rep.to_json())
        assert "timestamp" in body["metadata"]
        assert "payload_hash" in body["metadata"]

    def test_hash_covers_payload_deterministically(self):
        a = json.loads(self._report().to_json())
        b = json.loads(self._report().to_json())
        assert a["metadata"]["payload_hash"] == b["metadata"]["payload_hash"]
        del a["metadata"], b["metadata"]
        assert a == b

    def test_failures_property(self):
        rep = self._report()
        assert [r["name"] for r in rep.failures] == ["row-b"]

    def test_write_and_load_roundtrip(self, tmp_path):
        rep = self._report()
        jpath, cpath = rep.write(tmp_path)
        data = load_report(jpath)
        assert data["rows"] == rep.rows
        raw = cpath.read_bytes()
        assert b"\r\n" in raw  # RFC-4180 line endings
        header = raw.split(b"\r\n", 1)[0].decode()
        assert header == "name,passed,ratio,value"

    def test_plot_series_and_histogram(self, tmp_path):
        rep = Report("demo", {})
        for i in range(1, 6):
            rep.append(name="decay/series", x=float(i), y=2.0 / i, slope=-1.0, ratio=1.0 / i)
        jpath, _ = rep.write(tmp_path)
        written = plot_report(load_report(jpath), "decay", tmp_path)
        assert len(written) == 2
        assert all(p.suffix == ".svg" and p.exists() for p in written)

    def test_plot_empty_selection_rejected(self, tmp_path):
        rep = self._report()
        jpath, _ = rep.write(tmp_path)
        with pytest.raises(ValueError):
            plot_report(load_report(jpath), "nothing-matches", tmp_path)
