import csv
import os

import numpy as np
import pytest

from kinklab.errors import BlowUp, DecayTooSlow, ValidationError
from kinklab.profiles import u0
from kinklab.semigroup import kernel
from kinklab.simulator import (
    GAUSS_WIDTH,
    SimulationConfig,
    SimulationState,
    Stepper,
    exact_mass,
    front_displacement,
    half_width,
    make_perturbation,
    run_and_measure,
    step,
    transverse_profile,
    weighted_norms,
)

SMALL = SimulationConfig(L=20.0, N=64, Lperp=48.0, M=16, dt=0.05, T=2.0)


def test_zero_is_fixed_point():
    s = SimulationState.initial(SimulationConfig(L=20.0, N=32, Lperp=32.0, M=8, delta=0.0))
    for _ in range(3):
        s = step(s, 0.05)
    assert np.max(np.abs(s.v)) == 0.0


def test_mass_per_step():
    s = SimulationState.initial(SMALL)
    m0 = s.mass
    st = Stepper(SMALL)
    for _ in range(2):
        s1 = st.step(s)
        assert abs(s1.mass - s.mass) <= 1e-10 * abs(m0)
        s = s1


def test_hermitian_symmetry():
    s = SimulationState.initial(SMALL)
    s = step(s, 0.05)
    w = s.mixed()
    M = SMALL.M
    neg = (-np.arange(M)) % M
    assert np.allclose(w[:, neg][:, :, neg], np.conj(w), rtol=0, atol=1e-15 * np.max(np.abs(w)))


def test_perturbation_errors_and_trivial_cases():
    with pytest.raises(DecayTooSlow):
        make_perturbation(SimulationConfig(r=4.0))
    h, A = make_perturbation(SimulationConfig(L=10.0, N=16, Lperp=16.0, M=8, delta=0.0))
    assert A == 0.0 and not h.any()


def test_gauss_mass_closed_form():
    cfg = SimulationConfig(L=20.0, N=40, Lperp=40.0, M=40, shape="gauss")
    _, A = make_perturbation(cfg)
    assert A == pytest.approx(cfg.delta * (np.pi * GAUSS_WIDTH ** 2) ** 1.5, rel=1e-10)
    assert exact_mass(SimulationConfig(r=5.0)) == pytest.approx(4 * np.pi / 3 * 0.01, rel=1e-14)


def test_norms():
    s = SimulationState.initial(SMALL)
    nX, nt = weighted_norms(s)
    # FFT rounding in the far field is amplified by the weight (1 + |x|^2)^{5/2}
    assert nX == pytest.approx(SMALL.delta, rel=1e-8)
    assert s.v[SMALL.N // 2, SMALL.M // 2, SMALL.M // 2] == pytest.approx(SMALL.delta, rel=1e-14)
    z = SimulationState(s.box, np.zeros_like(s.vhat))
    assert weighted_norms(z) == (0.0, 0.0)
    d = SimulationState(s.box, 2 * s.vhat, s.t)
    nX2, nt2 = weighted_norms(d)
    assert nX2 == pytest.approx(2 * nX, rel=1e-14) and nt2 == pytest.approx(2 * nt, rel=1e-14)


def test_half_width_of_gaussian():
    cfg = SimulationConfig(L=20.0, N=40, Lperp=40.0, M=80, shape="gauss")
    s = SimulationState.initial(cfg)
    prof = transverse_profile(s)
    assert prof(0.0) == pytest.approx(cfg.delta, rel=1e-12)
    assert prof(1.3) == pytest.approx(cfg.delta * np.exp(-1.69 / 4), rel=1e-8)
    assert half_width(prof, 10.0) == pytest.approx(GAUSS_WIDTH * np.sqrt(np.log(2)), rel=1e-8)


def test_linear_mode_matches_semigroup():
    # oracle: semigroup kernel at one transverse wavenumber
    k, t = 0.2, 5.0
    cfg = SimulationConfig(L=20.0, N=64, Lperp=2 * np.pi / k, M=8, dt=0.01)
    box = SimulationState.initial(cfg, np.zeros((64, 8, 8))).box
    g = np.exp(-box.x ** 2)
    v0 = 0.01 * g[:, None, None] * np.cos(k * box.xh)[None, :, None] * np.ones(8)[None, None, :]
    s = SimulationState.initial(cfg, v0, nonlinear=False)
    st = Stepper(cfg)
    for _ in range(int(round(t / cfg.dt))):
        s = st.step(s)
    sel = np.abs(box.x) <= 15.0
    kern = kernel(k, t, nodes=box.x[sel])
    ref = kern.apply(0.01 * g[sel])
    got = s.v[sel, cfg.M // 2, cfg.M // 2]
    assert np.linalg.norm(got - ref) <= 1e-3 * np.linalg.norm(ref)


def test_front_displacement():
    cfg = SimulationConfig(L=20.0, N=64, Lperp=16.0, M=8)
    box = SimulationState.initial(cfg, np.zeros((64, 8, 8))).box
    a0 = 0.01 * np.cos(2 * np.pi * box.xh / cfg.Lperp)
    v = u0(box.x[:, None, None] - a0[None, :, None]) - u0(box.x)[:, None, None]
    v = np.broadcast_to(v, box.shape)
    a = front_displacement(SimulationState(box, np.fft.rfftn(v)))
    assert np.allclose(a, a0[:, None], atol=1e-12)


def test_front_displacement_even():
    s = SimulationState.initial(SMALL)
    st = Stepper(SMALL)
    for _ in range(10):
        s = st.step(s)
    a = front_displacement(s)
    M = SMALL.M
    neg = (-np.arange(M)) % M
    assert np.all(np.isfinite(a))
    assert np.allclose(a, a[neg], atol=1e-15) and np.allclose(a, a[:, neg], atol=1e-15)


def test_blowup():
    s = SimulationState.initial(SimulationConfig(L=10.0, N=16, Lperp=16.0, M=8, delta=0.6))
    with pytest.raises(BlowUp):
        step(s, 0.05)


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        SimulationConfig(dt=0.2)
    with pytest.raises(ValidationError):
        SimulationConfig(N=15)
    with pytest.raises(ValidationError):
        SimulationConfig.from_file(str(tmp_path / "missing.cfg"))
    p = tmp_path / "run.cfg"
    p.write_text("# quick\nL = 20\nN=64\nshape = gauss\n")
    cfg = SimulationConfig.from_file(str(p))
    assert (cfg.L, cfg.N, cfg.shape, cfg.M) == (20.0, 64, "gauss", 128)
    p.write_text("bogus = 1\n")
    with pytest.raises(ValidationError):
        SimulationConfig.from_file(str(p))
    q = SimulationConfig().quick()
    assert (q.N, q.M) == (64, 64)


def test_run_and_measure_outputs(tmp_path):
    cfg = SimulationConfig(L=20.0, N=64, Lperp=48.0, M=16, T=2.0, dump_times=(1.0,),
                           out_dir=str(tmp_path))
    res = run_and_measure(cfg, window=(0.5, 2.0))
    assert res.mass_drift_rate <= 1e-8
    assert res.fits["amplitude_exponent"] < 0 < res.fits["half_width_exponent"]
    with open(tmp_path / "diagnostics.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "center_amp", "half_width", "mass", "norm_X", "norm_t", "A_est"]
    assert float(rows[-1][0]) == pytest.approx(2.0)
    assert os.path.exists(tmp_path / "field_t1.csv")
    with open(tmp_path / "field_t1.csv") as fh:
        assert next(csv.reader(fh)) == ["x", "xhat1", "xhat2", "u"]
