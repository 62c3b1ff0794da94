use melif_core::magnetodynamics::*;
use melif_core::rng;
use melif_core::stats::{correlation, mean, variance};
use rand::Rng;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Out-of-plane factor from the interaction of the two charged faces.
///
/// With uniform magnetization along z the faces at z = +-c carry charge
/// +-Ms, and `Nzz V = (1 / 2 pi) [I(0) - I(2c)]`, where
/// `I(d) = int int dA dA' / sqrt(rho^2 + d^2)` over a face of sides 2a x 2b.
/// In difference coordinates the pair integral becomes
/// `4 int_0^{2a} int_0^{2b} (2a - u)(2b - v) f(u, v)`, evaluated here in
/// polar form so the 1/rho singularity cancels against the Jacobian.
fn nzz_surface_integral(a: f64, b: f64, c: f64, n: usize) -> f64 {
    let (la, lb) = (2.0 * a, 2.0 * b);
    let d = 2.0 * c;
    let kernel = |r: f64, th: f64| (1.0 - r / (r * r + d * d).sqrt()) * (la - r * th.cos()) * (lb - r * th.sin());
    let corner = (lb / la).atan();
    let lower = simpson(|th| simpson(|r| kernel(r, th), 0.0, la / th.cos(), n), 0.0, corner, n);
    let upper = simpson(|th| simpson(|r| kernel(r, th), 0.0, lb / th.sin(), n), corner, std::f64::consts::FRAC_PI_2, n);
    let volume = 8.0 * a * b * c;
    4.0 * (lower + upper) / (2.0 * std::f64::consts::PI * volume)
}

#[test]
fn aharoni_matches_surface_integral() {
    let g = MagnetGeometry::table_one();
    let t = demag_factors(&g).unwrap();
    let nzz = nzz_surface_integral(g.length / 2.0, g.width / 2.0, g.thickness / 2.0, 600);
    assert!((t.nzz - nzz).abs() < 1e-4 * nzz, "{} vs {nzz}", t.nzz);
    // a thicker prism tests the far-field part of the kernel too
    let g = MagnetGeometry::new(30e-9, 20e-9, 10e-9).unwrap();
    let t = demag_factors(&g).unwrap();
    let nzz = nzz_surface_integral(15e-9, 10e-9, 5e-9, 600);
    assert!((t.nzz - nzz).abs() < 1e-4 * nzz, "{} vs {nzz}", t.nzz);
}

#[test]
fn table_one_factors_are_ordered() {
    let t = demag_factors(&MagnetGeometry::table_one()).unwrap();
    assert!(t.nzz > 10.0 * t.nyy && t.nyy > t.nxx && t.nxx > 0.0);
    assert!((t.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn demag_along_z_uses_nzz() {
    let t = demag_factors(&MagnetGeometry::table_one()).unwrap();
    let ms = 1257.3e3;
    let h = h_demag(Vec3::Z, ms, &t);
    assert_eq!((h.x, h.y), (0.0, 0.0));
    assert!((h.z + ms * t.nzz).abs() < 1e-9 * ms);
}

#[test]
fn thermal_field_statistics() {
    let mat = MagnetMaterial::table_one();
    let geom = MagnetGeometry::table_one();
    let dt = 1e-12;
    let n = 1_000_000;
    let mut r = rng::stream(11, rng::tag::THERMAL_SAMPLES, 0, 0);
    let mut cols = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let h = h_thermal_sample(&mut r, &mat, &geom, dt);
        cols[0].push(h.x);
        cols[1].push(h.y);
        cols[2].push(h.z);
    }
    // independent evaluation of 2 alpha kB T / (|gamma| Ms V dt), converted from T^2 to (A/m)^2
    let vol = 112.5e-9 * 45e-9 * 2.5e-9;
    let var_b = 2.0 * 0.03 * 1.380649e-23 * 300.0 / (1.76086e11 * 1257.3e3 * vol * dt);
    let mu0 = 4e-7 * std::f64::consts::PI;
    let expect = var_b / (mu0 * mu0);
    for c in &cols {
        let v = variance(c);
        assert!((v / expect - 1.0).abs() < 0.01, "variance {v} vs {expect}");
        assert!(mean(c).abs() < 4.0 * (expect / n as f64).sqrt());
    }
    assert!(correlation(&cols[0], &cols[1]).abs() < 0.01);
    assert!(correlation(&cols[0], &cols[2]).abs() < 0.01);
    assert!(correlation(&cols[1], &cols[2]).abs() < 0.01);
}

#[test]
fn zero_temperature_has_no_thermal_field() {
    let mat = MagnetMaterial { temperature: 0.0, ..MagnetMaterial::table_one() };
    let mut r = rng::stream(0, 0, 0, 0);
    for _ in 0..100 {
        assert_eq!(h_thermal_sample(&mut r, &mat, &MagnetGeometry::table_one(), 1e-12), Vec3::ZERO);
    }
}

fn precess(dt: f64, total: f64) -> Vec3 {
    let mat = MagnetMaterial { alpha: 0.0, temperature: 0.0, ..MagnetMaterial::table_one() };
    let cfg = LLGConfig { dt, ..LLGConfig::default() };
    let h = Vec3::new(0.0, 0.0, 2e4);
    let mut s = MagnetState::new(Vec3::new(0.8, 0.0, 0.6));
    for _ in 0..(total / dt).round() as usize {
        s = heun_step(s, |_| h, Vec3::ZERO, &mat, &cfg).unwrap();
    }
    s.m
}

#[test]
fn undamped_precession_matches_fine_reference() {
    let coarse = precess(1e-12, 1e-9);
    let fine = precess(1e-14, 1e-9);
    let angle = coarse.y.atan2(coarse.x) - fine.y.atan2(fine.x);
    assert!(angle.abs() < 1e-4, "phase error {angle}");
    // z is conserved up to the per-step renormalization of the O(dt^3) norm error
    assert!((coarse.z - 0.6).abs() < 1e-6, "{}", coarse.z);
    // dm/dt = -|gamma| mu0 m x H turns m counterclockwise about +H
    let phase = 1.76086e11 * 4e-7 * std::f64::consts::PI * 2e4 * 1e-9;
    let exact = Vec3::new(0.8 * phase.cos(), 0.8 * phase.sin(), 0.6);
    assert!((fine - exact).norm() < 1e-6);
}

#[test]
fn renormalized_norm_is_exact_every_step() {
    let device = DeviceSpec::default();
    let fm = FieldModel::new(&device).unwrap();
    let cfg = LLGConfig::default();
    let mut r = rng::stream(3, 0, 0, 0);
    let sigma = thermal_sigma(&device.material, &device.geometry, cfg.dt);
    let mut s = MagnetState::new(Vec3::in_plane(0.3));
    for _ in 0..10_000 {
        let th = Vec3::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * sigma;
        s = heun_step(s, |m| fm.deterministic(m, 0.25), th, &device.material, &cfg).unwrap();
        assert!((s.m.norm() - 1.0).abs() < 1e-12);
    }
}

fn norm_drift(dt: f64) -> f64 {
    let device = DeviceSpec::default().at_zero_temperature();
    let fm = FieldModel::new(&device).unwrap();
    let cfg = LLGConfig { dt, renormalize_every_step: false, ..LLGConfig::default() };
    let mut s = MagnetState::new(Vec3::in_plane(0.5));
    for _ in 0..(2e-9 / dt).round() as usize {
        s = heun_step(s, |m| fm.deterministic(m, 0.3), Vec3::ZERO, &device.material, &cfg).unwrap();
    }
    (s.m.norm() - 1.0).abs()
}

#[test]
fn unnormalized_norm_drift_is_second_order() {
    let (a, b) = (norm_drift(1e-12), norm_drift(0.5e-12));
    assert!(a < 1e-3, "{a}");
    // halving dt must cut the accumulated drift by about four
    assert!(b < a / 3.0, "{a} vs {b}");
}

#[test]
fn unnormalized_norm_stays_unit_at_rest() {
    let device = DeviceSpec::default().at_zero_temperature();
    let fm = FieldModel::new(&device).unwrap();
    let cfg = LLGConfig { dt: 1e-12, renormalize_every_step: false, ..LLGConfig::default() };
    let mut s = MagnetState::new(Vec3::in_plane(0.5));
    for _ in 0..10_000 {
        s = heun_step(s, |m| fm.deterministic(m, 0.0), Vec3::ZERO, &device.material, &cfg).unwrap();
    }
    assert!((s.m.norm() - 1.0).abs() < 1e-4, "{}", s.m.norm());
}

#[test]
fn damping_lowers_energy_monotonically() {
    let device = DeviceSpec::default().at_zero_temperature();
    let fm = FieldModel::new(&device).unwrap();
    let cfg = LLGConfig::default();
    // fields are linear in m at zero voltage, so the energy density is -m.H/2 (up to mu0 Ms)
    let energy = |m: Vec3| -0.5 * m.dot(fm.deterministic(m, 0.0));
    let mut s = MagnetState::new(Vec3::in_plane(10f64.to_radians()));
    let mut last = energy(s.m);
    for _ in 0..20_000 {
        s = heun_step(s, |m| fm.deterministic(m, 0.0), Vec3::ZERO, &device.material, &cfg).unwrap();
        let e = energy(s.m);
        assert!(e <= last + 1e-9 * last.abs(), "{e} > {last}");
        last = e;
    }
    assert!(s.m.x > 1.0 - 1e-6, "{}", s.m.x);
}

fn cold_sim(dt: f64) -> MacrospinSim {
    MacrospinSim::new(
        DeviceSpec::default().at_zero_temperature(),
        LLGConfig { dt, ..LLGConfig::default() },
        PulseProtocol::default(),
    )
    .unwrap()
}

#[test]
fn switching_time_converges_in_dt() {
    let sim = cold_sim(1e-12);
    let v = 1.5 * sim.find_deterministic_threshold(1e-9).unwrap();
    let mut r = rng::stream(0, 0, 0, 0);
    let t1 = sim.simulate_pulse(v, 1e-9, &mut r, false).unwrap().switching_time.unwrap();
    let t2 = cold_sim(0.5e-12).simulate_pulse(v, 1e-9, &mut r, false).unwrap().switching_time.unwrap();
    assert!((t1 - t2).abs() < 0.01 * t2, "{t1} vs {t2}");
}

#[test]
fn threshold_brackets_switching() {
    let sim = cold_sim(1e-12);
    let v = sim.find_deterministic_threshold(1e-9).unwrap();
    let mut r = rng::stream(0, 0, 0, 0);
    assert!(!sim.simulate_pulse(0.99 * v, 1e-9, &mut r, false).unwrap().switched);
    assert!(sim.simulate_pulse(1.01 * v, 1e-9, &mut r, false).unwrap().switched);
    assert!(sim.simulate_pulse(2.0 * v, 1e-9, &mut r, false).unwrap().switched);
    assert!(!sim.simulate_pulse(0.0, 1e-9, &mut r, false).unwrap().switched);
}

#[test]
fn threshold_is_seed_independent_and_inverse_in_alpha_me() {
    let base = cold_sim(1e-12);
    let v = base.find_deterministic_threshold(1e-9).unwrap();
    let reseeded = MacrospinSim::new(base.device, LLGConfig { seed: 99, ..base.llg }, base.protocol).unwrap();
    assert_eq!(reseeded.find_deterministic_threshold(1e-9).unwrap(), v);
    // the same thermal device also bisects at zero temperature
    let warm = MacrospinSim::new(DeviceSpec::default(), LLGConfig::default(), PulseProtocol::default()).unwrap();
    assert_eq!(warm.find_deterministic_threshold(1e-9).unwrap(), v);

    let mut doubled = base.device;
    doubled.oxide.alpha_me *= 2.0;
    let v2 = MacrospinSim::new(doubled, base.llg, base.protocol).unwrap().find_deterministic_threshold(1e-9).unwrap();
    assert!((v2 / v - 0.5).abs() < 2e-3, "{v2} vs {v}");
}

#[test]
fn thermalized_ensemble_is_reproducible() {
    let sim = MacrospinSim::new(DeviceSpec::default(), LLGConfig::default(), PulseProtocol::default()).unwrap();
    let ensemble = |seed: u64| {
        let xs: Vec<f64> = (0..10_000)
            .map(|j| {
                let mut r = rng::stream(seed, rng::tag::PULSE_TRIAL, 0, j);
                sim.relax_thermalize(sim.initial_m(), 2e-9, &mut r).unwrap().m.x
            })
            .collect();
        mean(&xs)
    };
    let (a, b) = (ensemble(1), ensemble(2));
    assert!(a < 1.0 && a > 0.9, "{a}");
    assert!((a - b).abs() < 0.005 * a, "{a} vs {b}");

    let mut r = rng::stream(0, 0, 0, 0);
    let m0 = sim.initial_m();
    assert_eq!(sim.relax_thermalize(m0, 0.0, &mut r).unwrap().m, m0);
    assert_eq!(cold_sim(1e-12).relax_thermalize(m0, 2e-9, &mut r).unwrap().m, m0);
}

#[test]
fn sweep_is_reproducible() {
    let sim = MacrospinSim::new(DeviceSpec::default(), LLGConfig { seed: 5, ..LLGConfig::default() }, PulseProtocol::default())
        .unwrap();
    let sweep = [0.15, 0.2, 0.25];
    let a = sim.switching_probability(&sweep, 100, 1e-9).unwrap();
    let b = sim.switching_probability(&sweep, 100, 1e-9).unwrap();
    assert_eq!(a, b);
    assert_eq!(sim.switching_probability(&[0.2], 100, 1e-9).unwrap().len(), 1);
}

#[test]
fn equipartition_sets_in_plane_spread() {
    // For small deviations the energy is 1/2 mu0 Ms^2 V (nyy - nxx) my^2, so
    // <my^2> = kB T / (mu0 Ms^2 V (nyy - nxx)).
    let sim = MacrospinSim::new(DeviceSpec::default(), LLGConfig::default(), PulseProtocol::default()).unwrap();
    let t = demag_factors(&MagnetGeometry::table_one()).unwrap();
    let mu0 = 4e-7 * std::f64::consts::PI;
    let vol = 112.5e-9 * 45e-9 * 2.5e-9;
    let expect = 1.380649e-23 * 300.0 / (mu0 * 1257.3e3f64.powi(2) * vol * (t.nyy - t.nxx));
    let my2: Vec<f64> = (0..4000)
        .map(|j| {
            let mut r = rng::stream(8, rng::tag::PULSE_TRIAL, 1, j);
            let m = sim.relax_thermalize(Vec3::X, 3e-9, &mut r).unwrap().m;
            m.y * m.y
        })
        .collect();
    let got = mean(&my2);
    assert!((got / expect - 1.0).abs() < 0.1, "{got} vs {expect}");
}
