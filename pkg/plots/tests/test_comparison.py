"""Unit tests for the comparison plot: parsing, aggregation, rendering."""
from __future__ import annotations

import numpy as np
import pytest

from pdrl_plots.comparison import (
    PlotSpec,
    SchemaError,
    aggregate,
    build_figure,
    main,
    moving_average,
    read_rows,
    render_comparison,
)

HEADER = "algorithm,trial,episode,reward,steps\n"


def write_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER)
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return str(path)


@pytest.fixture
def two_trial_csv(tmp_path):
    # one episode, rewards {0, 200}: mean 100, half-band 70.71...
    return write_csv(tmp_path / "two.csv",
                     [("primal_dual", 0, 1, 0.0, 0),
                      ("primal_dual", 1, 1, 200.0, 200)])


class TestReadRows:
    def test_parses_valid_file(self, two_trial_csv):
        rows = read_rows(two_trial_csv)
        assert rows == [("primal_dual", 0, 1, 0.0), ("primal_dual", 1, 1, 200.0)]

    def test_bad_header_names_line_one(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n")
        with pytest.raises(SchemaError, match=":1"):
            read_rows(str(path))

    def test_bad_field_count_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "a,0,1,5.0,5\na,0,2,6.0\n")
        with pytest.raises(SchemaError, match=":3"):
            read_rows(str(path))

    def test_unparseable_number_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "a,0,one,5.0,5\n")
        with pytest.raises(SchemaError, match=":2"):
            read_rows(str(path))


class TestAggregate:
    def test_two_point_band(self, two_trial_csv):
        stats = aggregate(read_rows(two_trial_csv))
        mean, half = stats["primal_dual"]
        assert mean[0] == 100.0
        assert half[0] == pytest.approx(70.71067811865476, abs=1e-10)

    def test_single_trial_zero_band(self, tmp_path):
        path = write_csv(tmp_path / "one.csv",
                         [("actor_critic", 0, 1, 10.0, 10),
                          ("actor_critic", 0, 2, 12.0, 12)])
        mean, half = aggregate(read_rows(path))["actor_critic"]
        np.testing.assert_array_equal(mean, [10.0, 12.0])
        np.testing.assert_array_equal(half, [0.0, 0.0])

    def test_non_contiguous_episodes_rejected(self, tmp_path):
        path = write_csv(tmp_path / "gap.csv",
                         [("a", 0, 1, 1.0, 1), ("a", 0, 3, 1.0, 1)])
        with pytest.raises(SchemaError, match="contiguous"):
            aggregate(read_rows(path))

    def test_ragged_trials_truncated(self, tmp_path):
        path = write_csv(tmp_path / "ragged.csv",
                         [("a", 0, 1, 1.0, 1), ("a", 0, 2, 3.0, 3),
                          ("a", 1, 1, 5.0, 5)])
        mean, _ = aggregate(read_rows(path))["a"]
        np.testing.assert_array_equal(mean, [3.0])


class TestMovingAverage:
    def test_growing_window_prefix(self):
        x = np.array([2.0, 4.0, 6.0, 8.0])
        np.testing.assert_allclose(moving_average(x, 2), [2.0, 3.0, 5.0, 7.0])

    def test_window_one_is_identity(self):
        x = np.array([1.0, 5.0, 2.0])
        np.testing.assert_array_equal(moving_average(x, 1), x)


class TestFigure:
    def make_both_algos_csv(self, tmp_path):
        rows = []
        for algo in ("primal_dual", "actor_critic"):
            for trial in range(3):
                for ep in range(1, 6):
                    rows.append((algo, trial, ep, float(10 * ep + trial), 10))
        return write_csv(tmp_path / "both.csv", rows)

    def test_one_curve_and_band_per_algorithm_plus_reference(self, tmp_path):
        path = self.make_both_algos_csv(tmp_path)
        fig, stats = build_figure(PlotSpec([path], str(tmp_path / "o.png")))
        ax = fig.axes[0]
        # two algorithm curves plus the 195 reference line
        assert len(ax.lines) == 3
        assert any(np.allclose(line.get_ydata(), 195.0) for line in ax.lines)
        # one shaded band per algorithm
        assert len(ax.collections) == 2
        assert set(stats) == {"primal_dual", "actor_critic"}

    def test_single_trial_band_zero_width(self, tmp_path):
        path = write_csv(tmp_path / "one.csv",
                         [("primal_dual", 0, 1, 50.0, 50),
                          ("primal_dual", 0, 2, 60.0, 60)])
        fig, stats = build_figure(PlotSpec([path], str(tmp_path / "o.png")))
        mean, half = stats["primal_dual"]
        np.testing.assert_array_equal(half, [0.0, 0.0])
        band = fig.axes[0].collections[0].get_paths()[0].vertices
        assert band[:, 1].max() <= mean.max() + 1e-12

    def test_render_writes_file_deterministically(self, tmp_path, two_trial_csv):
        out1 = render_comparison(PlotSpec([two_trial_csv], str(tmp_path / "a.png")))
        out2 = render_comparison(PlotSpec([two_trial_csv], str(tmp_path / "b.png")))
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_svg_output_deterministic(self, tmp_path, two_trial_csv):
        out1 = render_comparison(PlotSpec([two_trial_csv], str(tmp_path / "a.svg")))
        out2 = render_comparison(PlotSpec([two_trial_csv], str(tmp_path / "b.svg")))
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_smoothing_applies(self, tmp_path):
        path = self.make_both_algos_csv(tmp_path)
        fig, _ = build_figure(PlotSpec([path], str(tmp_path / "o.png"), smooth=3))
        raw_fig, _ = build_figure(PlotSpec([path], str(tmp_path / "o2.png")))
        smoothed = fig.axes[0].lines[0].get_ydata()
        raw = raw_fig.axes[0].lines[0].get_ydata()
        assert not np.array_equal(smoothed, raw)


class TestMain:
    def test_cli_end_to_end(self, tmp_path, two_trial_csv, capsys):
        out = str(tmp_path / "fig.png")
        assert main([two_trial_csv, "--out", out,
                     "--labels", "primal_dual=PD"]) == 0
        assert "wrote" in capsys.readouterr().out
        assert open(out, "rb").read()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_cli_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("wrong header\n")
        assert main([str(bad), "--out", str(tmp_path / "f.png")]) == 2
        assert "error" in capsys.readouterr().err
