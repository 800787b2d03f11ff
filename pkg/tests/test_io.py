import numpy as np
import pytest

import singular_rd as srd
from singular_rd import io
from singular_rd.errors import ParseError
from singular_rd.picard import PicardConfig, iterate


def tiny_trajectory():
    g = srd.build_grid(1.0, 16, 1)
    vals = 1.0 + np.linspace(0.0, 1.0, 17) / 3.0  # non-representable decimals
    cfg = srd.SolverConfig(nu=1.0, dt_init=1e-3, t_end=0.1, snapshot_every=0.05)
    return srd.simulate(srd.Field(g, vals, 0.0), cfg, srd.NeumannZero())


class TestSnapshotsCsv:
    def test_round_trip_exact(self, tmp_path):
        traj = tiny_trajectory()
        path = tmp_path / "snapshots.csv"
        io.write_snapshots_csv(traj, path)
        fields = io.read_snapshots_csv(path)
        assert len(fields) == len(traj.snapshots)
        for orig, read in zip(traj.snapshots, fields):
            assert read.time == orig.time
            assert np.array_equal(read.values, orig.values)
            assert np.array_equal(read.grid.nodes, orig.grid.nodes)

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ParseError):
            io.read_snapshots_csv(path)

    def test_seventeen_digit_repr(self):
        assert float(io._fmt(1.0 / 3.0)) == 1.0 / 3.0
        assert float(io._fmt(0.1 + 0.2)) == 0.1 + 0.2


class TestReports:
    def test_trajectory_report(self, tmp_path):
        traj = tiny_trajectory()
        path = tmp_path / "report.txt"
        io.write_trajectory_report(traj, path)
        text = path.read_text()
        assert "steps:" in text and "extinction time:" in text

    def test_summary_columns(self, tmp_path):
        from singular_rd.verify import Resolution, verify_homogeneous_rate

        rep = verify_homogeneous_rate(
            1.0, 1.0,
            Resolution(radius=1.0, cells=32, dim=1, dt_init=1e-3, snapshot_every=0.1),
            1e-3,
        )
        row = io.summary_row(rep)
        assert list(row) == io.SUMMARY_COLUMNS
        path = tmp_path / "summary.csv"
        io.write_summary_csv([row], path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(io.SUMMARY_COLUMNS)
        assert lines[1].startswith("HomogeneousRate,")

    def test_params_hash_stable(self):
        h1 = io.params_hash({"a": 1, "b": 2.5})
        h2 = io.params_hash({"b": 2.5, "a": 1})
        assert h1 == h2 and len(h1) == 12


class TestPicardExport:
    def test_export_contains_summary_and_rows(self, tmp_path):
        g = srd.build_grid(1.0, 16, 1)
        cfg = PicardConfig(nu=1.0, grid=g, u0=srd.Field(g, np.ones(17), 0.0),
                           bdry=srd.DirichletConstant(1.0), t1=10.0, max_iters=3,
                           record_slices=5)
        run = iterate(cfg)
        path = tmp_path / "picard.csv"
        io.export_picard_run(run, path)
        text = path.read_text().splitlines()
        assert text[0].startswith("# delta = 1")
        assert any(line.startswith("# sup_diffs = ") for line in text[:4])
        header_idx = next(i for i, line in enumerate(text) if line == "k,t,r,u")
        rows = [line for line in text[header_idx + 1:] if line]
        assert len(rows) == len(run.iterates) * run.record_times.shape[0] * 17
