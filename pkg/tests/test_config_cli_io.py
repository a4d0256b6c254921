import json
import math
import os

import numpy as np
import pytest

from cvhl import pipeline
from cvhl.cli import main
from cvhl.config import (
    PAPER_IHA,
    PAPER_SHD,
    ConfigError,
    load_config,
    paper_config,
    parse_angle,
    parse_config,
)
from cvhl.gaussian import coherent, vacuum
from cvhl.io import (
    atomic_write_text,
    read_density_matrix,
    read_json,
    read_wigner_csv,
    write_density_matrix,
    write_json,
)
from cvhl.opo import total_efficiency
from cvhl.scan import PhaseScanModel, read_trace, synthesize_trace, write_trace
from cvhl.tomography.density import DensityMatrix

from oracles import coherent_fock, eq1_mp, fock_number

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _deep(base, **sections):
    out = json.loads(json.dumps(base))
    for key, value in sections.items():
        if isinstance(value, dict):
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = value
    return out


# config ------------------------------------------------------------------------------


def test_shipped_configs_match_builtin_presets():
    for name, preset in (("shd", PAPER_SHD), ("iha", PAPER_IHA)):
        cfg = load_config(os.path.join(ROOT, "configs", f"{name}.json"))
        assert cfg.efficiency_budget == parse_config(preset).efficiency_budget
        assert cfg.opo_params.pump_ratio == pytest.approx(300 / 970)


def test_paper_config_fields():
    cfg = paper_config("SHD")
    assert cfg.scan_model.span == pytest.approx(math.pi)
    assert cfg.scan_model.duration == pytest.approx(0.7)
    assert cfg.n_samples == 7000 and cfg.cutoff == 12


@pytest.mark.parametrize(
    "text, value",
    [("pi", math.pi), ("2pi", 2 * math.pi), ("pi/2", math.pi / 2), ("0.5*pi", math.pi / 2), (1.25, 1.25), ("3 pi / 4", 0.75 * math.pi)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("bad", ["tau", "pi pi", True, None, "1/2"])
def test_parse_angle_rejects(bad):
    with pytest.raises(ValueError):
        parse_angle(bad)


@pytest.mark.parametrize(
    "patch, path",
    [
        (dict(budget={"eta_dm": 1.2}), "budget.eta_dm"),
        (dict(budget={"eta_typo": 0.9}), "budget.eta_typo"),
        (dict(cutoff=41), "cutoff"),
        (dict(scan={"span": "tau"}), "scan.span"),
        (dict(scan={"span": 0}), "scan.span"),
        (dict(opo={"pump_ratio": 0.3}), "opo"),
        (dict(opo={"pump_power_mw": 980}), "opo"),
        (dict(budget={"electronic_clearance_db": 17}), "budget"),
        (dict(n_samples=1), "n_samples"),
        (dict(extra=1), "extra"),
    ],
)
def test_config_errors_carry_field_path(patch, path):
    with pytest.raises(ConfigError) as info:
        parse_config(_deep(PAPER_SHD, **patch))
    assert path in str(info.value)


def test_budget_configuration_rules():
    with pytest.raises(ConfigError, match="eta_f"):
        parse_config(_deep(PAPER_SHD, budget={"eta_f": 0.8, "eta_w": 0.5}))
    iha = json.loads(json.dumps(PAPER_IHA))
    del iha["budget"]["eta_w"]
    with pytest.raises(ConfigError, match="eta_f and eta_w"):
        parse_config(iha)


def test_clearance_replaces_eta_el():
    data = json.loads(json.dumps(PAPER_SHD))
    del data["budget"]["eta_el"]
    data["budget"]["electronic_clearance_db"] = 17
    assert parse_config(data).efficiency_budget.eta_el == pytest.approx(1 - 10**-1.7)


def test_cutoff_bound_accepts_forty():
    assert parse_config(_deep(PAPER_SHD, cutoff=40)).cutoff == 40


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"opo\": ,\n}")
    with pytest.raises(ConfigError, match="line 2"):
        load_config(bad)


# io ---------------------------------------------------------------------------------


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert sorted(os.listdir(tmp_path)) == ["out.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "report.json"
    write_json(target, {"a": 1})
    with pytest.raises(TypeError):
        write_json(target, {"a": object()})
    assert read_json(target) == {"a": 1}
    assert sorted(os.listdir(tmp_path)) == ["report.json"]


def test_density_matrix_file_round_trip(tmp_path):
    rho = DensityMatrix(coherent_fock(0.7 - 0.2j, 6), {"trailing_diagonal": 1e-6, "empty_bins": []})
    write_density_matrix(tmp_path / "rho.json", rho)
    back = read_density_matrix(tmp_path / "rho.json")
    assert np.array_equal(back.entries, rho.entries)
    doc = read_json(tmp_path / "rho.json")
    assert set(doc) == {"cutoff", "re", "im", "diagnostics"}


def test_trace_file_round_trip_is_bit_exact(tmp_path):
    cfg = paper_config("SHD")
    trace = pipeline.simulate(cfg)
    write_trace(trace, tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    for field in ("t", "theta", "x"):
        assert np.array_equal(getattr(back, field), getattr(trace, field))


# CLI --------------------------------------------------------------------------------


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture()
def shd_cfg(tmp_path):
    return _write_config(tmp_path, PAPER_SHD, "shd.json")


@pytest.fixture()
def iha_cfg(tmp_path):
    return _write_config(tmp_path, PAPER_IHA, "iha.json")


def test_simulate_shd_extremes(tmp_path, capsys, shd_cfg):
    code, out, _ = _run(capsys, "simulate", "--config", shd_cfg, "--out", tmp_path / "t.csv")
    assert code == 0
    assert "eta_tot=0.7730" in out
    lo, hi = pipeline.trace_extremes_db(read_trace(tmp_path / "t.csv"))
    assert lo == pytest.approx(-5.1, abs=0.5)
    assert hi == pytest.approx(8.7, abs=0.5)


def test_simulate_iha_extremes(tmp_path, capsys, iha_cfg):
    assert _run(capsys, "simulate", "--config", iha_cfg, "--out", tmp_path / "t.csv")[0] == 0
    lo, hi = pipeline.trace_extremes_db(read_trace(tmp_path / "t.csv"))
    assert lo == pytest.approx(-1.55, abs=0.5)
    assert hi == pytest.approx(5.83, abs=0.5)


def test_trace_extremes_over_seeds():
    # the fitted profile is close to unbiased; the raw window extremes are pushed outward
    for name, (lo_ref, hi_ref) in (("SHD", (-5.1, 8.7)), ("IHA", (-1.55, 5.83))):
        cfg = paper_config(name)
        fitted = np.array([pipeline.trace_extremes_db(pipeline.simulate(cfg, s)) for s in range(20)])
        assert np.sum(np.abs(fitted[:, 0] - lo_ref) <= 0.5) >= 18
        assert np.sum(np.abs(fitted[:, 1] - hi_ref) <= 0.5) >= 18


def test_fit_variance_profile_on_noise_free_curve():
    # oracle: bin averages of a - b cos 2(theta - ts) taken numerically on a fine sub-grid
    trace = synthesize_trace(vacuum(), PhaseScanModel(), 40, 0)
    a, b, ts = 4.0, 3.6, 0.3
    n_bins = 30
    w = math.pi / n_bins
    centers = (np.arange(n_bins) + 0.5) * w
    sub, weights = np.polynomial.legendre.leggauss(20)
    binned = np.array([np.sum(weights * (a - b * np.cos(2 * (c + 0.5 * w * sub - ts)))) / 2 for c in centers])
    original = pipeline.windowed_variance
    try:
        pipeline.windowed_variance = lambda tr, n: (centers, binned)
        fitted = pipeline.fit_variance_profile(trace, n_bins)
    finally:
        pipeline.windowed_variance = original
    assert fitted == pytest.approx((a, b, ts), abs=1e-12)


def test_simulate_zero_pump_is_vacuum(tmp_path, capsys):
    cfg = _write_config(tmp_path, _deep(PAPER_SHD, opo={"pump_power_mw": 0}))
    assert _run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "t.csv")[0] == 0
    assert np.var(read_trace(tmp_path / "t.csv").x) == pytest.approx(1.0, abs=0.05)


def test_simulate_uses_output_path_from_config(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write_config(tmp_path, _deep(PAPER_SHD, outputs={"trace": "from_cfg.csv"}))
    assert _run(capsys, "simulate", "--config", cfg)[0] == 0
    assert (tmp_path / "from_cfg.csv").exists()


def test_simulate_seed_override_and_determinism(tmp_path, capsys, shd_cfg):
    for name in ("a.csv", "b.csv"):
        _run(capsys, "simulate", "--config", shd_cfg, "--out", tmp_path / name, "--seed", 9)
    _run(capsys, "simulate", "--config", shd_cfg, "--out", tmp_path / "c.csv")
    a, b, c = ((tmp_path / n).read_bytes() for n in ("a.csv", "b.csv", "c.csv"))
    assert a == b and a != c


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = _write_config(tmp_path, _deep(PAPER_SHD, budget={"eta_d": 1.5}))
    code, out, err = _run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "t.csv")
    assert code == 2
    assert "budget.eta_d" in err and out == ""
    assert not (tmp_path / "t.csv").exists()


def test_reconstruct_and_analyze_vacuum_cutoff_zero(tmp_path, capsys):
    write_trace(synthesize_trace(vacuum(), PhaseScanModel(), 7000, 0), tmp_path / "v.csv")
    assert _run(capsys, "reconstruct", "--trace", tmp_path / "v.csv", "--cutoff", 0, "--out", tmp_path / "r.json")[0] == 0
    rho = read_density_matrix(tmp_path / "r.json")
    assert rho.entries.shape == (1, 1) and rho.entries[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_reconstruct_malformed_csv(tmp_path, capsys):
    write_trace(synthesize_trace(vacuum(), PhaseScanModel(), 100, 0), tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    header = next(i for i, line in enumerate(lines) if line.startswith("index"))
    lines[header + 5] = "5,0.1,abc,0.2"
    (tmp_path / "bad.csv").write_text("\n".join(lines) + "\n")
    code, _, err = _run(capsys, "reconstruct", "--trace", tmp_path / "bad.csv", "--cutoff", 3, "--out", tmp_path / "r.json")
    assert code == 2
    assert f"line {header + 6}" in err


def test_reconstruct_coverage_failure(tmp_path, capsys):
    write_trace(synthesize_trace(vacuum(), PhaseScanModel(span=1.0), 3000, 0), tmp_path / "v.csv")
    code, _, err = _run(capsys, "reconstruct", "--trace", tmp_path / "v.csv", "--cutoff", 3, "--out", tmp_path / "r.json")
    assert code == 3
    assert "7" in err and "19" in err
    assert not (tmp_path / "r.json").exists()


def test_reconstruct_with_bootstrap_and_psd(tmp_path, capsys):
    write_trace(synthesize_trace(coherent(1.0), PhaseScanModel(), 7000, 0), tmp_path / "c.csv")
    args = ["reconstruct", "--trace", tmp_path / "c.csv", "--cutoff", 4, "--bootstrap", 50, "--psd", "--out", tmp_path / "r.json"]
    assert _run(capsys, *args)[0] == 0
    doc = read_json(tmp_path / "r.json")
    assert np.array(doc["diagnostics"]["bootstrap_errors"]).shape == (5, 5)
    assert np.linalg.eigvalsh(read_density_matrix(tmp_path / "r.json").entries).min() >= -1e-12
    first = (tmp_path / "r.json").read_bytes()
    _run(capsys, *args)
    assert (tmp_path / "r.json").read_bytes() == first


def _analyze(tmp_path, capsys, rho, *extra):
    write_density_matrix(tmp_path / "rho.json", DensityMatrix(rho))
    code, _, _ = _run(capsys, "analyze", "--rho", tmp_path / "rho.json", "--out", tmp_path / "rep.json", *extra)
    assert code == 0
    return read_json(tmp_path / "rep.json")


def test_analyze_vacuum(tmp_path, capsys):
    report = _analyze(tmp_path, capsys, fock_number(0, 10))
    assert report["purity"] == pytest.approx(1.0, abs=0.02)
    assert report["ncd"] == 0.0


def test_analyze_coherent(tmp_path, capsys):
    report = _analyze(tmp_path, capsys, coherent_fock(2.0, 30))
    assert report["purity"] >= 0.98
    assert report["ncd"] <= 0.01


def test_analyze_reconstructed_shd(tmp_path, capsys, shd_cfg):
    _run(capsys, "simulate", "--config", shd_cfg, "--out", tmp_path / "t.csv")
    _run(capsys, "reconstruct", "--trace", tmp_path / "t.csv", "--cutoff", 12, "--out", tmp_path / "r.json")
    _run(capsys, "analyze", "--rho", tmp_path / "r.json", "--reference", "SHD", "--out", tmp_path / "rep.json")
    report = read_json(tmp_path / "rep.json")
    assert report["reference"]["squeezing_db"] == -4.9
    assert report["purity"] == pytest.approx(0.66, abs=0.06)
    assert report["ncd"] == pytest.approx(0.34, abs=0.04)
    assert report["squeezing_db_min"] == pytest.approx(-5.1, abs=0.6)


def test_analyze_report_and_wigner_csv(tmp_path, capsys):
    report = _analyze(tmp_path, capsys, fock_number(1, 4), "--wigner-grid", 61, "--wigner-extent", 3, "--wigner-out", tmp_path / "w.csv")
    assert set(report) >= {"purity", "ncd", "variance_curve", "squeezing_db_min", "antisqueezing_db_max", "wigner"}
    meta, values = read_wigner_csv(tmp_path / "w.csv")
    assert values.shape == (61, 61)
    assert meta["step"] == pytest.approx(0.1)
    assert values[30, 30] == pytest.approx(-1 / math.pi, abs=1e-9)


def test_analyze_wigner_needs_output(tmp_path, capsys):
    write_density_matrix(tmp_path / "rho.json", DensityMatrix(fock_number(0, 2)))
    code, _, err = _run(capsys, "analyze", "--rho", tmp_path / "rho.json", "--wigner-grid", 61, "--out", tmp_path / "o.json")
    assert code == 2 and "--wigner-out" in err


def test_analyze_rejects_coarse_wigner_grid(tmp_path, capsys):
    write_density_matrix(tmp_path / "rho.json", DensityMatrix(fock_number(0, 2)))
    code, _, _ = _run(
        capsys, "analyze", "--rho", tmp_path / "rho.json", "--wigner-grid", 5, "--wigner-out", tmp_path / "w.csv", "--out", tmp_path / "o.json"
    )
    assert code == 2


def test_budget_shd(capsys, shd_cfg):
    code, out, _ = _run(capsys, "budget", "--config", shd_cfg, "--json")
    assert code == 0
    summary = json.loads(out)
    assert summary["eta_tot"] == pytest.approx(0.773, abs=5e-4)
    v_minus, v_plus = eq1_mp(300 / 970, 0.13, summary["eta_tot"])
    assert summary["v_minus"] == pytest.approx(v_minus, abs=1e-12)
    assert summary["squeezing_db"] == pytest.approx(-5.10, abs=5e-3)
    assert summary["antisqueezing_db"] == pytest.approx(8.75, abs=5e-3)
    assert summary["reference"]["within_measured_band"] is True


def test_budget_iha_flags_discrepancy(capsys, iha_cfg):
    summary = json.loads(_run(capsys, "budget", "--config", iha_cfg, "--json")[1])
    assert summary["eta_tot"] == pytest.approx(0.337, abs=5e-4)
    assert summary["squeezing_db"] == pytest.approx(-1.55, abs=5e-3)
    assert summary["antisqueezing_db"] == pytest.approx(5.83, abs=5e-3)
    assert summary["reference"]["within_measured_band"] is False
    assert summary["reference"]["predicted_minus_measured_db"] == pytest.approx(0.35, abs=0.01)


def test_budget_unit(tmp_path, capsys):
    unit = {k: 1.0 for k in ("eta_dm", "eta_esc", "eta_d", "eta_el", "visibility", "eta_bs")}
    cfg = _write_config(tmp_path, _deep(PAPER_SHD, budget=unit))
    assert json.loads(_run(capsys, "budget", "--config", cfg, "--json")[1])["eta_tot"] == 1.0


def test_budget_table(capsys, iha_cfg):
    code, out, _ = _run(capsys, "budget", "--config", iha_cfg)
    assert code == 0
    assert "eta_tot" in out and "OUTSIDE" in out
    assert "-1.55 dB" in out


def test_budget_invalid_factor(tmp_path, capsys):
    cfg = _write_config(tmp_path, _deep(PAPER_SHD, budget={"visibility": 0}))
    assert _run(capsys, "budget", "--config", cfg, "--json")[:2] == (2, "")


@pytest.fixture(scope="module")
def paper_comparison():
    return pipeline.compare(paper_config("SHD"), paper_config("IHA"))


def test_compare_paper_gap(paper_comparison):
    assert paper_comparison["model_squeezing_gap_db"] == pytest.approx(-3.55, abs=0.7)
    assert paper_comparison["squeezing_gap_db"] == pytest.approx(-3.55, abs=0.7)
    assert len(paper_comparison["shd"]["variance_curve"]) == len(paper_comparison["iha"]["variance_curve"])


def test_compare_identical_configs():
    report = pipeline.compare(paper_config("SHD"), paper_config("SHD"))
    for key in ("squeezing_gap_db", "antisqueezing_gap_db", "model_squeezing_gap_db", "purity_gap", "ncd_gap"):
        assert report[key] == 0.0


def test_compare_lossless_chip():
    iha = paper_config("IHA", budget={**PAPER_IHA["budget"], "eta_f": 1.0, "eta_w": 1.0})
    report = pipeline.compare(paper_config("SHD"), iha)
    assert abs(report["model_squeezing_gap_db"]) < 0.2


def test_compare_lossless_chip_budget_arithmetic():
    # oracle for the chip-free IHA budget: the plain product of the remaining factors
    iha = paper_config("IHA", budget={**PAPER_IHA["budget"], "eta_f": 1.0, "eta_w": 1.0})
    eta = 0.96 * 0.92 * 0.97 * 0.98 * 0.98**2 * 0.998
    assert total_efficiency(iha.efficiency_budget) == pytest.approx(eta, rel=1e-15)
    shd_db = 10 * math.log10(eq1_mp(300 / 970, 0.13, total_efficiency(paper_config("SHD").efficiency_budget))[0])
    iha_db = 10 * math.log10(eq1_mp(300 / 970, 0.13, eta)[0])
    # the chip-free IHA path has the better visibility, so it overtakes SHD
    assert shd_db - iha_db == pytest.approx(0.42, abs=0.01)


def test_compare_rejects_mismatched_opo(tmp_path, capsys, shd_cfg):
    other = _write_config(tmp_path, _deep(PAPER_IHA, opo={"pump_power_mw": 200}), "iha2.json")
    code, _, err = _run(capsys, "compare", "--shd", shd_cfg, "--iha", other, "--out", tmp_path / "c.json")
    assert code == 2 and "OPO" in err


def test_compare_cli_writes_report(tmp_path, capsys, shd_cfg, iha_cfg):
    code, out, err = _run(capsys, "compare", "--shd", shd_cfg, "--iha", iha_cfg, "--out", tmp_path / "c.json")
    assert code == 0 and out == ""
    report = read_json(tmp_path / "c.json")
    assert {"shd", "iha", "squeezing_gap_db", "purity_gap", "ncd_gap"} <= set(report)
    assert "squeezing gap" in err


def test_fit_phase_cli(tmp_path, capsys):
    write_trace(synthesize_trace(coherent(2.0), PhaseScanModel(), 20_000, 0), tmp_path / "c.csv")
    code, _, _ = _run(capsys, "fit-phase", "--trace", tmp_path / "c.csv", "--span", 0.8 * math.pi, "--kind", "linear", "--out", tmp_path / "m.json")
    assert code == 0
    assert read_json(tmp_path / "m.json")["model"]["span"] == pytest.approx(math.pi, rel=0.02)


def test_fit_phase_cli_rejects_vacuum(tmp_path, capsys):
    write_trace(synthesize_trace(vacuum(), PhaseScanModel(), 20_000, 0), tmp_path / "v.csv")
    assert _run(capsys, "fit-phase", "--trace", tmp_path / "v.csv", "--out", tmp_path / "m.json")[0] == 3


def test_missing_input_file(tmp_path, capsys):
    code, _, err = _run(capsys, "analyze", "--rho", tmp_path / "nope.json", "--out", tmp_path / "o.json")
    assert code == 2 and err.startswith("error:")


def test_output_independent_of_thread_count(tmp_path, capsys, monkeypatch):
    write_trace(synthesize_trace(coherent(1.0), PhaseScanModel(), 9000, 2), tmp_path / "c.csv")
    outputs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("CVHL_THREADS", threads)
        _run(capsys, "reconstruct", "--trace", tmp_path / "c.csv", "--cutoff", 5, "--out", tmp_path / f"r{threads}.json")
        outputs.append((tmp_path / f"r{threads}.json").read_bytes())
    assert outputs[0] == outputs[1]
