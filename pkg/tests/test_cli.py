"""End-to-end command-line runs: output formats, exit codes, figures."""

import re

import numpy as np
import pytest
from numpy.testing import assert_allclose

import blochsim as bs
from blochsim import cli
from conftest import LADDER_STEADY
from test_config import LADDER_CTRL, write_pair

ROW = re.compile(r"^\s*(\d+)\s+(\d+)\s*([+-]?\d\.\d{5}E[+-]\d{2})"
                 r"\s*([+-]?\d\.\d{5}E[+-]\d{2})$")


def parse_table(text):
    lines = text.splitlines()
    assert lines[0] == "   i   j   Re rho(i,j)   Im rho(i,j)"
    assert lines[1] == ""
    rows = {}
    for line in lines[2:]:
        m = ROW.match(line)
        assert m, f"malformed table row: '{line}'"
        rows[(int(m.group(1)), int(m.group(2)))] = \
            (float(m.group(3)), float(m.group(4)))
    return rows


def run_cli(tmp_path, monkeypatch, capsys, ctrl_text, extra_args=(),
            **write_kw):
    kp = write_pair(tmp_path, ctrl_text, **write_kw)
    monkeypatch.chdir(tmp_path)
    code = cli.main([str(kp), *extra_args])
    return code, capsys.readouterr()


# ------------------------------------------------------------- steady mode

def test_steady_run_prints_reference_table(tmp_path, monkeypatch, capsys):
    code, out = run_cli(tmp_path, monkeypatch, capsys, LADDER_CTRL)
    assert code == 0 and out.err == ""
    rows = parse_table(out.out)
    assert set(rows) == {(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3)}
    want = {
        (1, 1): (LADDER_STEADY[0], 0.0),
        (1, 2): (LADDER_STEADY[1], LADDER_STEADY[2]),
        (2, 2): (LADDER_STEADY[3], 0.0),
        (1, 3): (LADDER_STEADY[4], LADDER_STEADY[5]),
        (2, 3): (LADDER_STEADY[6], LADDER_STEADY[7]),
        (3, 3): (LADDER_STEADY[8], 0.0),
    }
    for key, (re_w, im_w) in want.items():
        assert abs(rows[key][0] - re_w) < 1e-5, key
        assert abs(rows[key][1] - im_w) < 1e-5, key


def test_steady_reruns_are_byte_identical(tmp_path, monkeypatch, capsys):
    ctrl = LADDER_CTRL + "   filename_rho_out = 'rho_steady.dat'\n"
    code, first = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    file_first = (tmp_path / "rho_steady.dat").read_bytes()
    assert file_first.decode() == first.out
    code, second = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    assert second.out == first.out
    assert (tmp_path / "rho_steady.dat").read_bytes() == file_first


def test_steady_output_invariant_under_relabeling(tmp_path, monkeypatch,
                                                  capsys):
    code, base = run_cli(tmp_path, monkeypatch, capsys, LADDER_CTRL)
    assert code == 0

    kp_text = (
        "&keyparams\n"
        "   nstates = 3\n"
        "   nmin = 0\n"
        "   nfields = 2\n"
        "   filename_controlparams = 'shift_c.dat'\n"
        "/\n")
    ctrl = LADDER_CTRL
    for old, new in [("Rabif(2,1,1)", "Rabif(1,0,1)"),
                     ("Rabif(3,2,2)", "Rabif(2,1,2)"),
                     ("Gamma_decay_f(1,2)", "Gamma_decay_f(0,1)"),
                     ("Gamma_decay_f(2,3)", "Gamma_decay_f(1,2)"),
                     ("energ_f(1)", "energ_f(0)"),
                     ("energ_f(2)", "energ_f(1)"),
                     ("energ_f(3)", "energ_f(2)"),
                     ("detuning_fact(2,1)", "detuning_fact(1,1)"),
                     ("detuning_fact(3,1)", "detuning_fact(2,1)"),
                     ("detuning_fact(3,2)", "detuning_fact(2,2)")]:
        ctrl = ctrl.replace(old, new)
    code, shifted = run_cli(tmp_path, monkeypatch, capsys, ctrl,
                            kp_text=kp_text, kp_name="shift_k.dat",
                            ctrl_name="shift_c.dat")
    assert code == 0
    assert shifted.out == base.out


def test_steady_weak_probe_matches_closed_form(tmp_path, monkeypatch,
                                               capsys):
    ctrl = LADDER_CTRL.replace("iweakprb = 0", "iweakprb = 1")
    ctrl = ctrl.replace("Rabif(2,1,1) =  5.0d0", "Rabif(2,1,1) = 0.01d0")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    rows = parse_table(out.out)
    om_p, om_c = 2 * np.pi * 0.01, 2 * np.pi * 10.0
    g21, g31 = 2 * np.pi * 2.5, 2 * np.pi * 0.5
    d1 = 2 * np.pi * 5.0
    rho21 = (0.5j * om_p) / (g21 - 1j * d1
                             + om_c ** 2 / 4.0 / (g31 - 1j * d1))
    got = rows[(1, 2)][0] + 1j * rows[(1, 2)][1]
    # The table lists the upper triangle, i.e. rho12 = conj(rho21).
    assert abs(got - np.conj(rho21)) < 1e-5
    assert abs(rows[(1, 1)][0] - 1.0) < 1e-5


def test_steady_doppler_semianalytic_matches_quadrature(tmp_path,
                                                        monkeypatch, capsys):
    ctrl = LADDER_CTRL.replace("iDoppler = 0", "iDoppler = 1")
    ctrl += ("   urms = 240.0d0\n"
             "   wavelength(1) = 780.0d0\n"
             "   wavelength(2) = 776.0d0\n"
             "   idir(2) = -1\n")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    rows = parse_table(out.out)

    from conftest import make_ladder
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    grid = bs.make_grid("trapezoid", n=4001, span=6.0, u=240.0)
    want = bs.average_steady_numerical(
        lambda v: bs.steady_linear(split.at(v), 3), grid, 240.0)
    assert abs(rows[(1, 1)][0] - want[0]) < 1e-5
    assert abs(rows[(1, 2)][0] - want[1]) < 1e-5
    assert abs(rows[(1, 2)][1] - want[2]) < 1e-5
    assert abs(rows[(2, 3)][0] - want[6]) < 1e-5


def test_steady_velocity_grid_file_equivalent(tmp_path, monkeypatch, capsys):
    # A tabulated grid identical to the built-in trapezoid one must leave
    # the weak-probe Doppler average unchanged, byte for byte.
    base_ctrl = LADDER_CTRL.replace("iweakprb = 0", "iweakprb = 1")
    base_ctrl = base_ctrl.replace("iDoppler = 0", "iDoppler = 1")
    base_ctrl += ("   urms = 240.0d0\n"
                  "   n_v_classes = 201\n"
                  "   v_span = 4.0d0\n"
                  "   wavelength(1) = 780.0d0\n"
                  "   wavelength(2) = 776.0d0\n")
    code, base = run_cli(tmp_path, monkeypatch, capsys, base_ctrl)
    assert code == 0

    g = bs.make_grid("trapezoid", n=201, span=4.0, u=240.0)
    np.savetxt(tmp_path / "vgrid.dat", np.column_stack([g.nodes, g.weights]))
    ctrl = base_ctrl + "   filename_velgrid = 'vgrid.dat'\n"
    code, tabulated = run_cli(tmp_path, monkeypatch, capsys, ctrl,
                              kp_name="tab_k.dat", ctrl_name="tab_c.dat")
    assert code == 0
    assert tabulated.out == base.out


# --------------------------------------------------------------- time mode

def test_td_run_settles_on_steady_populations(tmp_path, monkeypatch, capsys):
    ctrl = LADDER_CTRL.replace("icalc = 2    ! Steady state.",
                               "icalc = 1")
    ctrl += ("   tmin = 0.0d0\n   tmax = 8.0d0\n"
             "   n_time_steps = 1600\n   nt_writeout = 16\n"
             "   filename_rho_out = 'pops.dat'\n")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    assert "pops.dat" in out.out and "(101 rows)" in out.out
    data = np.loadtxt(tmp_path / "pops.dat")
    assert data.shape == (101, 4)
    assert_allclose(data[0, 1:], [1.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(data[-1, 0], 8.0, atol=1e-9)
    assert_allclose(data[-1, 1:],
                    [LADDER_STEADY[0], LADDER_STEADY[3], LADDER_STEADY[8]],
                    atol=1e-4)
    header = (tmp_path / "pops.dat").read_text().splitlines()[0]
    assert header.startswith("#") and "rho(1,1)" in header


def test_td_component_selection(tmp_path, monkeypatch, capsys):
    ctrl = LADDER_CTRL.replace("icalc = 2    ! Steady state.",
                               "icalc = 1")
    ctrl += ("   tmax = 8.0d0\n   n_time_steps = 1600\n"
             "   iout(1,2) = 1\n   filename_rho_out = 'coh.dat'\n")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 0
    data = np.loadtxt(tmp_path / "coh.dat")
    assert data.shape == (1601, 3)
    assert_allclose(data[-1, 1], LADDER_STEADY[1], atol=1e-4)
    assert_allclose(data[-1, 2], LADDER_STEADY[2], atol=1e-4)
    header = (tmp_path / "coh.dat").read_text().splitlines()[0]
    assert "Re_rho(1,2)" in header and "Im_rho(1,2)" in header


def test_td_pulsed_run_from_envelope_keys(tmp_path, monkeypatch, capsys):
    # A resonant pi pulse on a lossless two-state system inverts it.
    kp_text = (
        "&keyparams\n"
        "   nstates = 2\n"
        "   nfields = 1\n"
        "   filename_controlparams = 'pulse_c.dat'\n"
        "/\n")
    width = 0.05
    peak_mhz = float(np.pi / (width * np.sqrt(2 * np.pi)) / (2 * np.pi))
    e_peak = bs.field_from_rabi(2.0e-29, peak_mhz)
    ctrl = (
        "&controlparams\n"
        "   icalc = 1\n"
        "   iRabi = 0\n"
        "   inoncw = 1\n"
        "   dip_mom(2,1,1) = 2.0d-29\n"
        "   detuning_fact(2,1) = -1.0d0\n"
        "   wavelength(1) = 780.0d0\n"
        "   tmin = 0.0d0\n"
        "   tmax = 0.8d0\n"
        "   n_time_steps = 3200\n"
        "   envlp_shape(1) = 'gaussian'\n"
        f"   envlp_peak(1) = {e_peak:.10E}\n"
        "   envlp_center(1) = 0.4d0\n"
        f"   envlp_width(1) = {width}\n"
        "   filename_rho_out = 'pulse.dat'\n"
        "/\n").replace("E+", "d+").replace("E-", "d-")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl, kp_text=kp_text,
                        kp_name="pulse_k.dat", ctrl_name="pulse_c.dat")
    assert code == 0
    data = np.loadtxt(tmp_path / "pulse.dat")
    assert_allclose(data[-1, 2], 1.0, atol=1e-4)


# -------------------------------------------------------------- mbe mode

MBE_KP = (
    "&keyparams\n"
    "   nstates = 2\n"
    "   nfields = 1\n"
    "   filename_controlparams = 'absorb_c.dat'\n"
    "/\n")

MBE_CTRL_TEMPLATE = (
    "&controlparams\n"
    "   icalc = 3\n"
    "   iRabi = 0\n"
    "   inoncw = 0\n"
    "   dip_mom(2,1,1) = 2.0d-29\n"
    "   campl(1) = {e0:.8E}\n"
    "   detuning_fact(2,1) = -1.0d0\n"
    "   wavelength(1) = 780.0d0\n"
    "   Gamma_decay_f(1,2) = 6.0d0\n"
    "   density = 5.0d16\n"
    "   zmax = {zmax:.6E}\n"
    "   n_z_steps = 40\n"
    "   nz_writeout = 40\n"
    "   tmin = 0.0d0\n"
    "   tmax = 2.0d0\n"
    "   n_time_steps = 400\n"
    "   nt_writeout = 400\n"
    "   filename_tdamps_out = 'amps.dat'\n"
    "/\n")


def mbe_transmission_config():
    decay = np.zeros((2, 2))
    decay[0, 1] = 6.0
    system = bs.SystemSpec(n_states=2, decay_rates=decay)
    dip = np.zeros((2, 2), complex)
    dip[1, 0] = 2.0e-29
    e0 = bs.field_from_rabi(2.0e-29, 0.02)
    probe = bs.FieldSpec(n_states=2, dipole_moments=dip, amplitude=e0,
                         detuning_factors=[0.0, -1.0], wavelength_nm=780.0)
    (resp,) = bs.weakfield_spectrum(system, probe, [1.0, 0.0], [0.0], 5e16)
    zmax_um = 1.0e6 / resp.alpha
    ctrl = MBE_CTRL_TEMPLATE.format(e0=e0, zmax=zmax_um)
    ctrl = ctrl.replace("E+", "d+").replace("E-", "d-")
    return ctrl, e0


def test_mbe_run_beer_lambert(tmp_path, monkeypatch, capsys):
    ctrl, e0 = mbe_transmission_config()
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl, kp_text=MBE_KP,
                        kp_name="absorb_k.dat", ctrl_name="absorb_c.dat")
    assert code == 0
    assert "amps.dat" in out.out and "(2 positions)" in out.out
    data = np.loadtxt(tmp_path / "amps.dat")
    # 2 written positions x 2 written times, columns z t Re Im.
    assert data.shape == (4, 4)
    z_in = data[data[:, 0] == 0.0]
    assert_allclose(z_in[:, 2], e0, rtol=1e-8)
    exit_late = data[-1]
    trans = (exit_late[2] ** 2 + exit_late[3] ** 2) / e0 ** 2
    assert abs(trans - np.exp(-1.0)) < 0.02


# ------------------------------------------------------------- exit codes

def test_exit_code_parse_error(tmp_path, monkeypatch, capsys):
    code, out = run_cli(tmp_path, monkeypatch, capsys,
                        LADDER_CTRL + "   bogus = 1\n")
    assert code == 2
    assert "configuration error" in out.err and "bogus" in out.err


def test_exit_code_validation_error(tmp_path, monkeypatch, capsys):
    ctrl = LADDER_CTRL.replace("   icalc = 2    ! Steady state.\n", "")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl)
    assert code == 3
    assert "invalid configuration" in out.err


def test_exit_code_solver_error(tmp_path, monkeypatch, capsys):
    # States 3 and 4 are totally disconnected, so the steady state is not
    # unique and the linear solve must fail.
    kp_text = (
        "&keyparams\n"
        "   nstates = 4\n"
        "   nfields = 1\n"
        "   filename_controlparams = 'dark_c.dat'\n"
        "/\n")
    ctrl = (
        "&controlparams\n"
        "   icalc = 2\n"
        "   Rabif(2,1,1) = 5.0d0\n"
        "   Gamma_decay_f(1,2) = 5.0d0\n"
        "   detuning_fact(2,1) = -1.0d0\n"
        "/\n")
    code, out = run_cli(tmp_path, monkeypatch, capsys, ctrl, kp_text=kp_text,
                        kp_name="dark_k.dat", ctrl_name="dark_c.dat")
    assert code == 4
    assert "solver error" in out.err


# ---------------------------------------------------------------- figures

def png_ok(path):
    return path.exists() and path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_figures_rendered_for_each_mode(tmp_path, monkeypatch, capsys):
    code, _ = run_cli(tmp_path, monkeypatch, capsys, LADDER_CTRL,
                      extra_args=["--figures", "figs"])
    assert code == 0
    assert png_ok(tmp_path / "figs" / "steady_state.png")

    ctrl = LADDER_CTRL.replace("icalc = 2    ! Steady state.", "icalc = 1")
    ctrl += "   tmax = 1.0d0\n   n_time_steps = 200\n"
    code, _ = run_cli(tmp_path, monkeypatch, capsys, ctrl,
                      extra_args=["--figures", "figs"],
                      kp_name="td_k.dat", ctrl_name="td_c.dat")
    assert code == 0
    assert png_ok(tmp_path / "figs" / "populations.png")

    mbe_ctrl, _ = mbe_transmission_config()
    code, _ = run_cli(tmp_path, monkeypatch, capsys, mbe_ctrl,
                      extra_args=["--figures", "figs"], kp_text=MBE_KP,
                      kp_name="absorb_k.dat", ctrl_name="absorb_c.dat")
    assert code == 0
    assert png_ok(tmp_path / "figs" / "propagation.png")
