import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import yaml

from blocktoep.cli import main as cli_main
from blocktoep.experiments import (
    MissingArtifact,
    RunManifest,
    ValidationError,
    builtin_config_names,
    builtin_config_path,
    config_from_mapping,
    emit_plotdata,
    load_config,
    run_experiment,
)

EXPECTED_BUILTINS = {
    "group1a", "group1b", "group1c", "group1-singular", "table1",
    "group2a", "group2b", "group2c", "group3", "group3-hermitian",
}


def minimal_config(**overrides):
    data = {
        "label": "mini",
        "nu": 2,
        "shape": [1, 1],
        "symbols": [
            ["2 - 2*cos(t)", "1 - exp(-i*t)"],
            ["1 - exp(i*t)", "2 - 2*cos(t) - 6*cos(2*t)"],
        ],
        "sizes": [{"scale": 1}, {"scale": 2}],
        "etas": [6, 12],
        "tasks": ["sv-compare"],
    }
    data.update(overrides)
    return data


class TestBuiltins:
    def test_expected_set(self):
        assert set(builtin_config_names()) == EXPECTED_BUILTINS

    @pytest.mark.parametrize("name", sorted(EXPECTED_BUILTINS))
    def test_all_load(self, name):
        config = load_config(builtin_config_path(name))
        assert config.label == name

    def test_group1a_exact_coefficients(self):
        config = load_config(builtin_config_path("group1a"))
        grid = config.structure.symbols
        assert grid.entry(0, 0).coefficient_map()[0][0, 0] == 2
        assert grid.entry(0, 1).coefficient_map()[-1][0, 0] == -1
        assert grid.entry(1, 0).coefficient_map()[1][0, 0] == -1
        f22 = grid.entry(1, 1).coefficient_map()
        assert f22[2][0, 0] == -3 and f22[-2][0, 0] == -3

    def test_group3_exact_coefficients(self):
        config = load_config(builtin_config_path("group3"))
        grid = config.structure.symbols
        np.testing.assert_allclose(grid.entry(0, 0).fourier_coefficient(0),
                                   np.array([[16, -8], [-8, 14]]) / 3)
        np.testing.assert_allclose(grid.entry(0, 1).fourier_coefficient(1),
                                   np.array([[0, -2], [0, -2]]) / 3)
        np.testing.assert_allclose(grid.entry(0, 2).fourier_coefficient(-1),
                                   np.array([[-15, -3], [-15, -15]]) / 40)
        np.testing.assert_allclose(grid.entry(2, 2).fourier_coefficient(1),
                                   [[0, -1], [0, 0]])
        assert config.structure.ratios.multiplicities == (2, 1, 4)
        assert config.distribution_symbol.shape == (14, 14)

    def test_group3_gram_entry_matches_direct_arithmetic(self):
        config = load_config(builtin_config_path("group3"))
        p = config.structure.symbols.entry(2, 1)     # pQ2
        gram = config.structure.symbols.entry(1, 1)
        coeffs = {k: p.fourier_coefficient(k) for k in (-2, -1, 0, 1)}
        p0 = sum(coeffs.values())
        ppi = sum(((-1.0) ** k) * c for k, c in coeffs.items())
        np.testing.assert_allclose(gram.evaluate(0.0),
                                   p0.conj().T @ p0 + ppi.conj().T @ ppi, atol=1e-14)

    def test_group3_hermitian_variant(self):
        config = load_config(builtin_config_path("group3-hermitian"))
        assert config.distribution_symbol.is_hermitian_valued()
        plain = load_config(builtin_config_path("group3"))
        assert not plain.distribution_symbol.is_hermitian_valued()

    def test_group3_reference_split(self):
        config = load_config(builtin_config_path("group3"))
        counts = config.reference_counts_for(20, 136)
        assert counts == (10,) * 9 + (9,) * 5

    def test_table1_reference_is_eta_per_curve(self):
        config = load_config(builtin_config_path("table1"))
        assert config.reference_counts_for(81, 252) == (81, 81, 81)


class TestValidation:
    def test_minimal_passes(self):
        config = config_from_mapping(minimal_config())
        assert config.structure.nu == 2

    def test_nu_one_rejected(self):
        data = minimal_config(nu=1, symbols=[["2 - 2*cos(t)"]], sizes=[{"scale": 1}])
        with pytest.raises(ValidationError, match="nu"):
            config_from_mapping(data)

    def test_odd_eta_with_halving_law(self):
        data = minimal_config(sizes=[{"scale": 1}, {"scale": "1/2"}], etas=[6, 7])
        with pytest.raises(ValidationError, match="eta=7"):
            config_from_mapping(data)

    def test_unknown_task(self):
        with pytest.raises(ValidationError, match="unknown task"):
            config_from_mapping(minimal_config(tasks=["sv-compare", "frobnicate"]))

    def test_empty_tasks(self):
        with pytest.raises(ValidationError):
            config_from_mapping(minimal_config(tasks=[]))

    def test_eig_requires_hermitian_structure(self):
        data = minimal_config(symbols=[
            ["2 - 2*cos(t)", "1 - exp(-i*t)"],
            ["1 - exp(-i*t)", "2 - 2*cos(t) - 6*cos(2*t)"],
        ], tasks=["eig-compare"])
        with pytest.raises(ValidationError, match="Hermitian"):
            config_from_mapping(data)

    def test_reference_curve_count_must_match(self):
        data = minimal_config(reference={"groups": [{"curves": 2, "points": {"scale": 1}}]})
        with pytest.raises(ValidationError, match="curves"):
            config_from_mapping(data)

    def test_symbol_shape_must_match_declaration(self):
        data = minimal_config(symbols=[
            [{"grid": [["1", "1"]]}, "1"],
            ["1", "1"],
        ])
        with pytest.raises(ValidationError, match="shape"):
            config_from_mapping(data)

    def test_parse_errors_carry_field_path(self):
        data = minimal_config()
        data["symbols"][0][0] = "t^3"
        with pytest.raises(ValidationError, match=r"symbols\[0\]\[0\]"):
            config_from_mapping(data)

    def test_weyl_task_needs_functions(self):
        with pytest.raises(ValidationError, match="weyl"):
            config_from_mapping(minimal_config(tasks=["weyl-gaps"]))

    def test_bad_yaml_file(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("label: [unclosed\n")
        with pytest.raises(ValidationError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(tmp_path / "absent.yaml")


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("mini_run")
    config = config_from_mapping(minimal_config(
        tasks=["sv-compare", "zero-dist", "perm-identity"]))
    manifest = run_experiment(config, out, figures=True)
    return config, manifest, out


class TestRunner:
    def test_all_tasks_ok(self, mini_run):
        _, manifest, _ = mini_run
        assert not manifest.partial
        assert all(e["status"] == "ok" for e in manifest.entries)

    def test_every_emitted_file_is_listed(self, mini_run):
        _, manifest, out = mini_run
        listed = {name for e in manifest.entries for name in e["files"]}
        listed.add(f"{manifest.label}__manifest.json")
        on_disk = {p.name for p in Path(out).iterdir() if p.is_file()}
        assert on_disk == listed

    def test_compare_csv_structure(self, mini_run):
        _, _, out = mini_run
        lines = (Path(out) / "mini__sv-compare__eta6.csv").read_text().splitlines()
        assert lines[0] == "index,matrix,symbol,absdiff"
        assert len(lines) == 1 + 18  # d_n = 3 * eta

    def test_summary_json(self, mini_run):
        _, _, out = mini_run
        data = json.loads((Path(out) / "mini__sv-compare__eta6__summary.json").read_text())
        assert data["kind"] == "sv"
        assert set(data["quantile_discrepancies"]) == {"5%", "25%", "50%", "75%", "95%"}
        assert data["policy"]["alignment"] == "trim-largest"

    def test_perm_identity_is_exact(self, mini_run):
        _, _, out = mini_run
        lines = (Path(out) / "mini__perm-identity.csv").read_text().splitlines()[1:]
        assert all(line.endswith(",0.0") for line in lines)

    def test_figures_rendered(self, mini_run):
        _, _, out = mini_run
        assert (Path(out) / "mini__sv-compare__eta6.png").exists()
        assert (Path(out) / "mini__zero-dist.png").exists()

    def test_manifest_roundtrip(self, mini_run):
        _, manifest, out = mini_run
        loaded = RunManifest.load(Path(out) / "mini__manifest.json")
        assert loaded.config_hash == manifest.config_hash
        assert loaded.figure_ids == manifest.figure_ids

    def test_task_filter(self, tmp_path):
        config = config_from_mapping(minimal_config())
        manifest = run_experiment(config, tmp_path, tasks=["sv-compare"], figures=False)
        assert {e["task"] for e in manifest.entries} == {"sv-compare"}
        with pytest.raises(ValidationError):
            run_experiment(config, tmp_path, tasks=["rearrangement"])

    def test_no_figures(self, tmp_path):
        config = config_from_mapping(minimal_config())
        run_experiment(config, tmp_path, figures=False)
        assert not list(Path(tmp_path).glob("*.png"))


class TestDeterminism:
    def _value_files(self, root):
        return sorted(p for p in Path(root).iterdir()
                      if p.suffix in (".csv", ".png") or p.name.endswith("summary.json"))

    def test_reruns_are_byte_identical(self, tmp_path):
        config = config_from_mapping(minimal_config(tasks=["sv-compare", "zero-dist"]))
        run_experiment(config, tmp_path / "a")
        run_experiment(config, tmp_path / "b")
        files_a = self._value_files(tmp_path / "a")
        files_b = self._value_files(tmp_path / "b")
        assert [p.name for p in files_a] == [p.name for p in files_b]
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_worker_count_does_not_matter(self, tmp_path):
        config = config_from_mapping(minimal_config(tasks=["sv-compare"]))
        run_experiment(config, tmp_path / "serial", workers=1, figures=False)
        run_experiment(config, tmp_path / "pool", workers=2, figures=False)
        for pa in self._value_files(tmp_path / "serial"):
            pb = tmp_path / "pool" / pa.name
            assert pa.read_bytes() == pb.read_bytes(), pa.name


class TestPartialFailure:
    def test_failed_task_recorded_without_aborting(self, tmp_path):
        config = config_from_mapping(minimal_config(tasks=["sv-compare"]))
        # sabotage the reference policy past validation: a one-point grid is
        # rejected at run time by the angle-grid constructor
        from blocktoep.experiments import ReferenceGroup
        from blocktoep.assembly import SizeLaw
        config.reference_groups = (
            ReferenceGroup(2, SizeLaw(1)), ReferenceGroup(1, SizeLaw(Fraction(1, 6))),
        )
        manifest = run_experiment(config, tmp_path, figures=False)
        statuses = {(e["eta"], e["status"]) for e in manifest.entries}
        assert (6, "failed") in statuses       # eta/6 = 1 point: invalid grid
        assert (12, "ok") in statuses
        assert manifest.partial


class TestPlotData:
    def test_series_files(self, mini_run):
        _, manifest, out = mini_run
        files = emit_plotdata(manifest, "sv-compare--eta6")
        names = {f.name for f in files}
        assert "sv-compare--eta6__curve0__symbol.dat" in names
        assert "sv-compare--eta6__curve0__matrix.dat" in names
        assert "sv-compare--eta6.gp" in names
        body = next(f for f in files if f.name.endswith("curve0__symbol.dat")).read_text()
        rows = [line for line in body.splitlines() if not line.startswith("#")]
        assert len(rows) == 6
        x, y = rows[0].split()
        assert 0.0 < float(x) < 1.0

    def test_aggregated_series(self, mini_run):
        _, manifest, _ = mini_run
        files = emit_plotdata(manifest, "zero-dist")
        assert any(f.name == "zero-dist__trimmed.dat" for f in files)

    def test_missing_artifact(self, mini_run):
        _, manifest, _ = mini_run
        with pytest.raises(MissingArtifact):
            emit_plotdata(manifest, "eig-compare--eta6")

    def test_rerun_byte_identical(self, mini_run):
        _, manifest, _ = mini_run
        first = {f: f.read_bytes() for f in emit_plotdata(manifest, "sv-compare--eta12")}
        second = {f: f.read_bytes() for f in emit_plotdata(manifest, "sv-compare--eta12")}
        assert first == second


class TestCli:
    def test_list_builtin(self, capsys):
        assert cli_main(["list-builtin"]) == 0
        out = capsys.readouterr().out
        assert "group1a" in out and "table1" in out

    def test_validate_builtin(self, capsys):
        assert cli_main(["validate", "group1a"]) == 0
        assert "ok: group1a" in capsys.readouterr().out

    def test_validate_failure_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump(minimal_config(nu=1)))
        assert cli_main(["validate", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_run_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "mini.yaml"
        cfg.write_text(yaml.safe_dump(minimal_config()))
        code = cli_main(["run", str(cfg), "--out", str(tmp_path / "out"),
                         "--no-figures"])
        assert code == 0
        assert (tmp_path / "out" / "mini__manifest.json").exists()
        assert "[ok] sv-compare" in capsys.readouterr().out

    def test_unknown_config_name(self, capsys):
        assert cli_main(["run", "no-such-config"]) == 1
        assert "no builtin config" in capsys.readouterr().err

    def test_partial_failure_exit_code(self, tmp_path, capsys):
        # eta=2 gives a one-point reference grid at run time (14 curves for a
        # 10-value spectrum), which fails that sweep entry but not the others
        stencil = {"coefficients": [{"k": 0, "matrix": [[2, -1], [-1, 2]]}]}
        data = {
            "label": "tiny",
            "nu": 3,
            "shape": [2, 2],
            "symbols": [[stencil] * 3] * 3,
            "sizes": [{"scale": 1}, {"scale": "1/2"}, {"scale": 2}],
            "etas": [2, 20],
            "tasks": ["sv-compare"],
        }
        cfg = tmp_path / "tiny.yaml"
        cfg.write_text(yaml.safe_dump(data))
        code = cli_main(["run", str(cfg), "--out", str(tmp_path / "out"),
                         "--no-figures"])
        assert code == 2
        out = capsys.readouterr().out
        assert "[failed] sv-compare (eta=2)" in out
        assert "[ok] sv-compare (eta=20)" in out


class TestMonotoneConvergence:
    """The headline property: discrepancies shrink along each eta sweep."""

    CASES = [
        ("group1a", "eig-compare"), ("group1b", "eig-compare"),
        ("group1c", "eig-compare"), ("group1a", "sv-compare"),
        ("group1-singular", "sv-compare"),
        ("group2a", "sv-compare"), ("group2b", "sv-compare"),
        ("group2c", "sv-compare"),
        ("group3", "sv-compare"), ("group3-hermitian", "eig-compare"),
    ]

    @pytest.mark.parametrize("name,task", CASES)
    def test_interior_discrepancy_nonincreasing(self, name, task, tmp_path):
        config = load_config(builtin_config_path(name))
        manifest = run_experiment(config, tmp_path, tasks=[task], figures=False)
        assert not manifest.partial
        seq = []
        for eta in config.etas:
            summary = json.loads(
                (tmp_path / f"{name}__{task}__eta{eta}__summary.json").read_text())
            seq.append(summary["interior_discrepancy"])
        assert all(later <= 1.10 * earlier for earlier, later in zip(seq, seq[1:])), seq
