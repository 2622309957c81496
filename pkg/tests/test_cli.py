import json

import pytest

from photonbec.cli import main
from photonbec.errors import ConfigError
from photonbec.runconfig import parse_config, runconfig_from_manifest


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# config ingestion
# ---------------------------------------------------------------------------

def test_defaults_match_material_table():
    run = parse_config(None, ())
    cav = run.cavity
    assert (cav.L, cav.alpha_in, cav.n0) == (2e-6, 0.63, 1.33)
    assert (cav.beta, cav.cv, cav.kappa) == (-4.8e-4, 1.9e6, 0.168)
    assert (cav.q, cav.R, cav.T) == (9, 1.0, 300.0)


def test_override_semantics():
    run = parse_config(None, ("L=4e-6",))
    assert run.cavity.L == 4e-6
    assert run.cavity.n0 == 1.33  # everything else untouched
    assert run.kernel.L == 4e-6


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "cavity.cfg"
    path.write_text("""
# test cavity
L = 3e-6
q = 7
R = flat          # plane mirrors
r_max = 2e-5
n_points = 96
rel_tol = 1e-8
""")
    run = parse_config(path, ())
    assert run.cavity.L == 3e-6 and run.cavity.q == 7
    assert run.cavity.R is None
    assert run.grid.n_points == 96
    assert run.kernel.rel_tol == 1e-8


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("Lx = 1e-6\n")
    with pytest.raises(ConfigError) as err:
        parse_config(path, ())
    assert err.value.key == "Lx"


def test_missing_config_file_is_config_error(capsys):
    code, _, err = run_cli(capsys, "params", "show", "--config", "/nonexistent.cfg")
    assert code == 1
    assert "not found" in err


def test_tolerance_flag_reaches_kernels(capsys):
    _, loose, _ = run_cli(capsys, "kernel", "dump", "--kernel", "static",
                          "--grid", "0:0:1", "--tol", "1e-4")
    _, tight, _ = run_cli(capsys, "kernel", "dump", "--kernel", "static",
                          "--grid", "0:0:1", "--tol", "1e-12")
    terms = [int(out.splitlines()[-1].split(",")[-1]) for out in (loose, tight)]
    assert terms[0] < terms[1]


def test_invariant_violation_names_key():
    with pytest.raises(ConfigError) as err:
        parse_config(None, ("kappa=-0.1",))
    assert err.value.key == "kappa"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def test_params_show_text_and_json(capsys):
    code, out, _ = run_cli(capsys, "params", "show")
    assert code == 0
    assert "m_ph" in out and "n_c" in out
    code, out, _ = run_cli(capsys, "params", "show", "--json")
    payload = json.loads(out)
    assert payload["derived"]["n_c"] == pytest.approx(99884.27, rel=1e-5)
    assert payload["config"]["L"] == 2e-6


def test_params_show_flat_subset(capsys):
    code, out, _ = run_cli(capsys, "params", "show", "--json", "R=flat",
                           "r_max=2e-5")
    assert code == 0
    payload = json.loads(out)
    assert "omega_trap" not in payload["derived"]
    assert payload["derived"]["m_ph"] > 0


def test_config_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "params", "show", "L=-2e-6")
    assert code == 1
    assert "L" in err


def test_kernel_dump_schema_and_determinism(capsys, tmp_path):
    args = ("kernel", "dump", "--kernel", "static", "--grid", "0:1e7:7")
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert run_cli(capsys, *args, "--out", str(first))[0] == 0
    assert run_cli(capsys, *args, "--out", str(second))[0] == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0].startswith("# column: rho_or_k")
    assert lines[4] == "rho_or_k,value_re,value_im,terms_used"
    assert len(lines) == 12


@pytest.mark.parametrize("kernel,extra", [
    ("g3d", ("--grid", "1e-7:1.5e-6:4", "--z", "1e-7")),
    ("g2d", ("--grid", "1e-7:2e-6:4",)),
    ("delayed", ("--grid", "0:1e7:4", "--omega-re", "1e7")),
])
def test_kernel_dump_variants(capsys, kernel, extra):
    code, out, _ = run_cli(capsys, "kernel", "dump", "--kernel", kernel, *extra)
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 4
    if kernel == "delayed":
        assert any(float(r.split(",")[2]) != 0.0 for r in rows)


def test_kernel_dump_geometry_overrides(capsys):
    code, out, _ = run_cli(capsys, "kernel", "dump", "--kernel", "static",
                           "--grid", "0:0:1", "--L", "4e-6", "--q", "5")
    assert code == 0
    value = float(out.splitlines()[-1].split(",")[1])
    from photonbec import KernelSpec, kernel_static
    expected = kernel_static(0.0, KernelSpec(L=4e-6, q=5, diffusivity=1e-7)).value
    assert value == pytest.approx(expected, rel=1e-9)


def test_steady_single_and_sweep(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "steady", "--N", "4e4", "n_points=96")
    assert code == 0
    header = [l for l in out.splitlines() if l.startswith("# column")]
    assert [h.split(":")[1].split("[")[0].strip() for h in header] == \
        ["n_bec", "mu", "delta_r", "delta_t_max"]
    profile = tmp_path / "profiles.csv"
    code, out, _ = run_cli(capsys, "steady", "--sweep", "2e4:6e4:3",
                           "--geometry", "flat", "n_points=96",
                           "--profiles", str(profile))
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 3
    mus = [float(r.split(",")[1]) for r in rows]
    assert mus == sorted(mus)
    assert profile.exists()
    assert "density_N20000" in profile.read_text()


def test_steady_imaginary_time_route(capsys):
    code, out, _ = run_cli(capsys, "steady", "--N", "4e4", "--geometry", "flat",
                           "--solver", "imaginary-time", "n_points=96")
    assert code == 0
    row = [l for l in out.splitlines() if not l.startswith("#")][1]
    assert float(row.split(",")[1]) > 0


def test_solver_error_exit_code(capsys):
    # strong attractive nonlinearity collapses -> solver error
    code, _, err = run_cli(capsys, "steady", "--N", "5e6", "n_points=96",
                           "beta=4.8e-4")
    assert code == 2
    assert "Instability" in err


def test_dispersion_csv(capsys):
    code, out, _ = run_cli(capsys, "dispersion", "--mode", "delayed",
                           "--N", "6e4", "--k-grid", "1e3:2e4:5")
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 5
    assert all(float(r.split(",")[3]) <= 1e-10 for r in rows)


def test_critical_json(capsys):
    code, out, _ = run_cli(capsys, "critical", "--mode", "static",
                           "--N", "6e4", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["k_c"] == pytest.approx(86158.5, rel=1e-3)
    assert payload["v_c"] == pytest.approx(690030.0, rel=1e-3)


def test_scan_csv(capsys):
    code, out, _ = run_cli(capsys, "scan", "--axis", "L", "--range",
                           "1e-6:4e-6:4", "--mode", "delayed",
                           "--velocity-mode", "static")
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
    kcs = [float(r.split(",")[1]) for r in rows]
    assert kcs == sorted(kcs, reverse=True)


# ---------------------------------------------------------------------------
# figure driver
# ---------------------------------------------------------------------------

def test_figure_fig3_deterministic_with_manifest(capsys, tmp_path):
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    for out in (out1, out2):
        code, _, _ = run_cli(capsys, "figure", "fig3", "--out", str(out),
                             "sweep_points=8")
        assert code == 0
    assert (out1 / "fig3.csv").read_bytes() == (out2 / "fig3.csv").read_bytes()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["figure"] == "fig3"
    assert manifest["errors"] == []
    # reference column present: last column equals -1/(4 pi rho)
    import math
    line = (out1 / "fig3.csv").read_text().splitlines()[-1].split(",")
    assert float(line[-1]) == pytest.approx(
        -1.0 / (4 * math.pi * float(line[0])), rel=1e-9)
    # one kernel column per mirror spacing, plus the reference
    header = (out1 / "fig3.csv").read_text().splitlines()
    names = [l.split(":")[1].split("[")[0].strip() for l in header
             if l.startswith("# column")]
    assert names == ["rho", "g3d_L1um", "g3d_L2um", "g3d_L4um", "g3d_L10um",
                     "coulomb_ref"]
    # manifest inputs reconstruct an equivalent run configuration
    rebuilt = runconfig_from_manifest(manifest)
    assert rebuilt == parse_config(None, ())


def test_figure_fig5_panels(capsys, tmp_path):
    out = tmp_path / "fig5"
    code, _, _ = run_cli(capsys, "figure", "fig5", "--out", str(out),
                         "sweep_points=3", "--jobs", "2")
    assert code == 0
    names = sorted(p.name for p in out.glob("*.csv"))
    assert names == [f"fig5{panel}.csv" for panel in "abcdef"]


def test_figure_output_independent_of_worker_count(capsys, tmp_path):
    outs = []
    for jobs, name in (("1", "serial"), ("4", "pooled")):
        out = tmp_path / name
        code, _, _ = run_cli(capsys, "figure", "fig5", "--out", str(out),
                             "sweep_points=3", "--jobs", jobs)
        assert code == 0
        outs.append(out)
    for panel in "abcdef":
        assert (outs[0] / f"fig5{panel}.csv").read_bytes() ==             (outs[1] / f"fig5{panel}.csv").read_bytes()


def test_figure_partial_failure_exit_code(capsys, tmp_path):
    # beta = 0 makes every critical-momentum point degenerate
    code, _, err = run_cli(capsys, "figure", "fig5", "--out",
                           str(tmp_path / "f"), "sweep_points=3", "beta=0")
    assert code == 3
    assert "failed" in err


def test_unknown_figure_id(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "figure", "fig9", "--out", str(tmp_path))
    assert code == 1
