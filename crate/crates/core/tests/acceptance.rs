//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Tolerances are pinned here and nowhere else. Runs without the libtest
//! harness so the report is printed even when every check passes.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use deformscope::deform::{
    exact_waist_scaling_coefficients, firstorder_decomposition, shift_power_split, Axis, Deformation,
    FirstOrderOptions,
};
use deformscope::detect::{mmd, mmd_conventions, DetectionSetting};
use deformscope::fisher::{
    cfi_ad, cfi_bhd, flip_overlap_closed_form, flip_overlap_factor, monte_carlo_estimation, qfi, sigma_from_waist,
    Detector, FisherParams,
};
use deformscope::hgbasis::{
    decompose, evolve, generator, mode_amplitude, mode_profile_1d, BeamGeometry, GeneratorKind, ModeIndex,
    ModeVector,
};
use deformscope::mie::{amplitude_functions, amplitude_functions_to, mie_coefficient_series, mie_coefficients, MieMedium};
use deformscope::weakmeas::{field_route_port_states, port_states, weak_values, InterferometerSetting};
use deformscope::Complex64;

const WAVELENGTH: f64 = 125e-6;
const WAIST: f64 = 150e-6;

fn geom() -> BeamGeometry {
    BeamGeometry::isotropic(WAVELENGTH, WAIST).unwrap()
}

fn m(n: usize, m: usize) -> ModeIndex {
    ModeIndex::new(n, m)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Collects sub-check failures for one criterion.
struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }
}

fn criterion_1(c: &mut Checks) {
    let g = geom();
    let p = m(0, 0);
    let opts = FirstOrderOptions::default();
    let eps = 0.01;
    let def = Deformation::new(eps * WAIST, 0.0, 0.0, &g).unwrap();
    let slope = firstorder_decomposition(&def, &g, p, &opts).unwrap().get(m(2, 0)) / eps;
    c.check(
        (slope - Complex64::new(1.0 / SQRT_2, 0.0)).norm() <= 1e-15,
        format!("first-order slope {:.17}", slope.re),
    );

    let exact = |e: f64| exact_waist_scaling_coefficients(e, Axis::X, p, &g, 20).unwrap().get(m(2, 0));
    let mut worst: f64 = 0.0;
    for i in 1..=50 {
        let e = 0.001 * i as f64;
        for e in [e, -e] {
            worst = worst.max(rel(exact(e).re, e / SQRT_2));
        }
    }
    c.check(
        worst <= 0.01,
        format!("exact vs first order over |eps| <= 0.05: worst {:.2}% (limit 1%)", 100.0 * worst),
    );
    let symmetric = (exact(0.05).re - exact(-0.05).re) / 0.1;
    c.notes.push(format!(
        "symmetric-difference slope of the exact curve at 0.05: {symmetric:.5} (for reference)"
    ));
    let lo = exact(-0.1).norm();
    let hi = exact(0.1).norm();
    c.check(
        lo > hi && (lo - 0.0740).abs() < 5e-5 && (hi - 0.0670).abs() < 5e-5,
        format!("|C20(-0.1)| = {lo:.5} > |C20(+0.1)| = {hi:.5}"),
    );
}

fn default_setting() -> (DetectionSetting, InterferometerSetting) {
    (
        DetectionSetting::new(5e-6, WAVELENGTH, 1.0).unwrap(),
        InterferometerSetting::from_postselection(0.005, 0.005).unwrap(),
    )
}

fn criterion_2(c: &mut Checks) {
    let g = geom();
    let (s, ifm) = default_setting();
    let target = [1.75e-12, 1.75e-12, 3.11e-12];
    let all = mmd_conventions(&s, &ifm, &g).unwrap();
    c.check(all.len() == 4, format!("{} convention variants reported", all.len()));
    let mut bracketed = Vec::new();
    for (photon, clip, r) in &all {
        let v = [r.d_waist_x_min, r.d_waist_y_min, r.d_z_min];
        let ok = v.iter().zip(target).all(|(v, t)| *v >= t / 2.0 && *v <= 2.0 * t);
        c.notes.push(format!(
            "{}/{}: ({:.3}, {:.3}, {:.3}) pm",
            photon.label(),
            clip.label(),
            v[0] * 1e12,
            v[1] * 1e12,
            v[2] * 1e12
        ));
        if ok {
            bracketed.push(format!("{}/{}", photon.label(), clip.label()));
        }
    }
    c.check(!bracketed.is_empty(), format!("within a factor 2 of the target under {bracketed:?}"));

    let reference = mmd(&s, &ifm, &g).unwrap();
    let k0 = reference.d_waist_x_min * s.probe_power.sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let p = 1e-8 * 10f64.powf(4.0 * i as f64 / 999.0);
        let mut si = s.clone();
        si.probe_power = p;
        let r = mmd(&si, &ifm, &g).unwrap();
        worst = worst
            .max(rel(r.d_waist_x_min * p.sqrt(), k0))
            .max(rel(r.d_waist_y_min * p.sqrt(), reference.d_waist_y_min * s.probe_power.sqrt()))
            .max(rel(r.d_z_min * p.sqrt(), reference.d_z_min * s.probe_power.sqrt()));
    }
    c.check(worst <= 1e-12, format!("MMD sqrt(P) spread {worst:.1e} over 1000 powers"));

    let mut worst_w: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for wx in [100e-6, 150e-6, 200e-6, 400e-6] {
        let gi = BeamGeometry::new(WAVELENGTH, wx, WAIST).unwrap();
        let r = mmd(&s, &ifm, &gi).unwrap();
        worst_w = worst_w.max(rel(r.d_waist_x_min / wx, reference.d_waist_x_min / WAIST));
        let gz = BeamGeometry::isotropic(WAVELENGTH, wx).unwrap();
        let rz = mmd(&s, &ifm, &gz).unwrap();
        worst_z = worst_z.max(rel(rz.d_z_min / gz.rayleigh(), reference.d_z_min / g.rayleigh()));
    }
    c.check(worst_w <= 1e-12, format!("MMD_x / w_x spread {worst_w:.1e}"));
    c.check(worst_z <= 1e-12, format!("MMD_z / z_R spread {worst_z:.1e}"));
}

fn criterion_3(c: &mut Checks) {
    let g = geom();
    let (s, ifm) = default_setting();
    let base = mmd(&s, &ifm, &g).unwrap();
    let cases = [
        (m(1, 0), 3.0, "x"),
        (m(2, 0), 7.0, "x"),
        (m(2, 2), 7.0, "x"),
        (m(2, 2), 7.0, "y"),
        (m(2, 2), 7.0, "z"),
    ];
    for (probe, gain, axis) in cases {
        let r = mmd(&s.clone().with_probe_order(probe), &ifm, &g).unwrap();
        let ratio = match axis {
            "x" => r.d_waist_x_min / base.d_waist_x_min,
            "y" => r.d_waist_y_min / base.d_waist_y_min,
            _ => r.d_z_min / base.d_z_min,
        };
        let expected = 1.0 / f64::sqrt(gain);
        c.check(
            rel(ratio, expected) <= 1e-12,
            format!("{probe} {axis}: {ratio:.15} vs 1/sqrt({gain})"),
        );
    }
}

fn fisher_params(probe: ModeIndex) -> FisherParams {
    let g = geom();
    let (s, _) = default_setting();
    let wv = weak_values(&InterferometerSetting::new(0.01, 0.01).unwrap());
    FisherParams {
        probe,
        weak_value: wv.a_w1.norm(),
        postselection: wv.p_s1,
        photons: s.scattered_photons(&g),
        sigma: 1e-4,
        wavenumber: g.wavenumber(),
    }
}

fn criterion_4(c: &mut Checks) {
    let f = flip_overlap_factor().unwrap();
    let closed = flip_overlap_closed_form();
    c.check(
        (f - closed).abs() <= 1e-5,
        format!("flip factor {f:.8} vs closed form {closed:.8}"),
    );
    let p = fisher_params(m(0, 0));
    let bhd = cfi_bhd(p).unwrap();
    let ad = cfi_ad(p).unwrap();
    let q = qfi(p).unwrap();
    for i in 0..2 {
        let adv = bhd.entry(i, i) / ad.entry(i, i) - 1.0;
        c.check(
            (adv - 0.353).abs() <= 0.001,
            format!("BHD advantage on entry ({0},{0}): {1:.3}%", i + 1, 100.0 * adv),
        );
    }
    c.check(
        ad.entry(2, 2) == bhd.entry(2, 2),
        "CFI_AD(3,3) == CFI_BHD(3,3)".into(),
    );
    let worst = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (bhd.entry(i, j) - q.entry(i, j)).abs() / q.entry(i.max(j), i.max(j)))
        .fold(0.0, f64::max);
    c.check(worst <= 4.0 * f64::EPSILON, format!("CFI_BHD vs QFI at (0,0): {worst:.1e}"));
}

fn criterion_5(c: &mut Checks) {
    let g = geom();
    let (s, ifm) = default_setting();
    let truth = Deformation::new(1e-12, -1e-12, 2e-12, &g).unwrap();
    let flip = flip_overlap_factor().unwrap();
    let samples = 1_000_000;
    let bhd = monte_carlo_estimation(&truth, &s, &ifm, &g, Detector::Bhd, samples, 2024).unwrap();
    let ad = monte_carlo_estimation(&truth, &s, &ifm, &g, Detector::ArrayDetection { flip }, samples, 2024).unwrap();

    let wv = weak_values(&ifm);
    let photons = s.scattered_photons(&g);
    let names = ["d_waist_y", "d_waist_x", "d_z"];
    let waists = [g.waist_y(), g.waist_x(), g.waist_x()];
    for j in 0..3 {
        let (a_w, p_s) = wv.port(j + 1);
        let params = FisherParams {
            probe: m(0, 0),
            weak_value: a_w.norm(),
            postselection: p_s,
            photons,
            sigma: sigma_from_waist(waists[j]),
            wavenumber: g.wavenumber(),
        };
        let bound = cfi_bhd(params).unwrap().cramer_rao_bounds()[j];
        let ratio = bhd.variance[j] / bound;
        c.check(
            (ratio - 1.0).abs() <= 0.05,
            format!("{}: variance x CFI_BHD = {ratio:.4}", names[j]),
        );
    }
    for j in 0..2 {
        let ratio = ad.variance[j] / bhd.variance[j];
        c.check(
            rel(ratio, 1.0 / 0.739) <= 0.03,
            format!("{}: AD / BHD variance = {ratio:.4}", names[j]),
        );
    }
}

fn criterion_6(c: &mut Checks) {
    let lambda = 1.0;
    let medium = |alpha: f64| MieMedium::new(alpha * lambda / (2.0 * PI), Complex64::new(2.19, 0.0), lambda).unwrap();

    let alpha: f64 = 0.01;
    let a1 = mie_coefficients(1, &medium(alpha)).unwrap().a;
    let m2 = 2.19f64 * 2.19;
    let dipole = 2.0 / 3.0 * alpha.powi(3) * (m2 - 1.0) / (m2 + 2.0);
    let dev = (a1 - Complex64::new(0.0, dipole)).norm() / dipole;
    c.check(dev <= 1e-3, format!("Rayleigh a1 = {a1:.4e}, deviation from dipole {:.2e}", dev));

    let big = medium(2.0 * PI);
    let mut worst: f64 = 0.0;
    for co in mie_coefficient_series(&big).unwrap() {
        worst = worst
            .max((co.a.re - co.a.norm_sqr()).abs())
            .max((co.b.re - co.b.norm_sqr()).abs());
    }
    c.check(worst <= 1e-10, format!("Re(a) = |a|^2 at alpha = 2pi: {worst:.1e}"));

    let mut drift: f64 = 0.0;
    for i in 0..=18 {
        let theta = PI * i as f64 / 18.0;
        let (s1, s2) = amplitude_functions(theta, &big).unwrap();
        let (t1, t2) = amplitude_functions_to(theta, &big, big.order_cutoff() + 10).unwrap();
        drift = drift.max((s1 - t1).norm() / t1.norm()).max((s2 - t2).norm() / t2.norm());
    }
    c.check(drift <= 1e-6, format!("amplitude drift with 10 more orders: {drift:.1e}"));
}

fn criterion_7(c: &mut Checks) {
    let g = BeamGeometry::new(WAVELENGTH, WAIST, 170e-6).unwrap();

    // orthonormality: decompose sampled modes back onto the basis
    let mut worst: f64 = 0.0;
    for n in 0..=8 {
        for mm in 0..=(8 - n) {
            let idx = m(n, mm);
            let field = move |x: f64, y: f64| mode_amplitude(idx, x, y, 0.0, &g);
            let v = decompose(&field, &g, 8, 80).unwrap();
            let e = ModeVector::basis(idx, 8).unwrap();
            worst = worst.max(v.max_abs_diff(&e));
        }
    }
    c.check(worst <= 1e-9, format!("HG orthonormality up to order 8: {worst:.1e}"));

    // generator elements against finite-difference quadrature of the mode profiles
    let worst = generator_oracle_defect(&g);
    c.check(worst <= 1e-8, format!("generator vs quadrature elements: {worst:.1e}"));

    let mut probe = ModeVector::zeros(30);
    probe.set(m(0, 0), Complex64::new(0.6, 0.0)).unwrap();
    probe.set(m(1, 2), Complex64::new(0.0, 0.8)).unwrap();
    let mut worst: f64 = 0.0;
    for (kind, t) in [
        (GeneratorKind::ScaleX, 0.1),
        (GeneratorKind::ScaleY, -0.1),
        (GeneratorKind::Shear, 0.1 * g.rayleigh()),
    ] {
        let out = evolve(kind, &g, t, &probe).unwrap().state;
        worst = worst.max((out.norm() - 1.0).abs());
    }
    c.check(worst <= 1e-6, format!("evolution unitarity: {worst:.1e}"));

    let def = Deformation::new(1e-3 * WAIST, -2e-3 * 170e-6, 5e-3 * g.rayleigh(), &g).unwrap();
    let mut worst_power: f64 = 0.0;
    let mut leak: f64 = 0.0;
    for (theta, phi) in [(0.1, 0.1), (0.3, 1.0), (1.5, 2.5)] {
        let ifm = InterferometerSetting::new(theta, phi).unwrap();
        let ports = port_states(&probe, &def, &ifm, &g).unwrap();
        let total: f64 = ports.iter().map(|p| p.power()).sum();
        worst_power = worst_power.max((total - 1.0).abs());
        for (idx, v) in ports[0].state.iter() {
            if idx.n != 0 && idx.n != 1 {
                leak = leak.max(v.norm());
            }
        }
        for (idx, v) in ports[1].state.iter() {
            if idx.m != 0 && idx.m != 2 {
                leak = leak.max(v.norm());
            }
        }
    }
    c.check(worst_power <= 1e-6, format!("port power conservation: {worst_power:.1e}"));
    c.check(leak < 1e-10, format!("dark-port cross-leakage: {leak:.1e}"));

    let small = Deformation::new(1e-9 * WAIST, -2e-9 * 170e-6, 3e-9 * g.rayleigh(), &g).unwrap();
    let ifm = InterferometerSetting::new(0.2, 0.4).unwrap();
    let a = port_states(&probe, &small, &ifm, &g).unwrap();
    let b = field_route_port_states(&probe, &small, &ifm, &g).unwrap();
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| x.field().max_abs_diff(&y.field()))
        .fold(0.0, f64::max);
    c.check(worst <= 1e-10, format!("evolution vs field-route ports: {worst:.1e}"));

    let mut worst: f64 = 0.0;
    for i in 1..200 {
        let theta = PI * i as f64 / 200.0;
        let wv = weak_values(&InterferometerSetting::new(theta, 0.7).unwrap());
        worst = worst.max((wv.a_w1.norm() * wv.p_s1.sqrt() - (theta / 2.0).cos()).abs());
    }
    c.check(worst <= 1e-10, format!("|A_W1| sqrt(P_s1) = cos(theta/2): {worst:.1e}"));
}

/// Largest element mismatch, relative to the largest element, between the
/// generator matrices and a quadrature built from finite differences:
/// scaling `K = -(1/2 + x d/dx)` with `G = iK`, shear `G = -(d2/dx2 + d2/dy2) / 2k`.
fn generator_oracle_defect(g: &BeamGeometry) -> f64 {
    let cutoff = 8;
    let k = g.wavenumber();
    let nodes = 400;
    let fd1 = |n: usize, x: f64, w: f64| {
        let h = 1e-3 * w;
        let f = |t: f64| mode_profile_1d(n, t, w);
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    };
    let fd2 = |n: usize, x: f64, w: f64| {
        let h = 1e-3 * w;
        let f = |t: f64| mode_profile_1d(n, t, w);
        (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
    };
    // trapezoid on a wide uniform grid converges spectrally for Gaussian tails
    let integrate = |w: f64, f: &dyn Fn(f64) -> f64| {
        let lo = -10.0 * w;
        let dx = 20.0 * w / nodes as f64;
        (0..=nodes).map(|i| f(lo + i as f64 * dx)).sum::<f64>() * dx
    };
    let scale_1d = |a: usize, b: usize, w: f64| {
        integrate(w, &|x| -mode_profile_1d(a, x, w) * (0.5 * mode_profile_1d(b, x, w) + x * fd1(b, x, w)))
    };
    let p2_1d = |a: usize, b: usize, w: f64| integrate(w, &|x| -mode_profile_1d(a, x, w) * fd2(b, x, w));

    let mut worst: f64 = 0.0;
    for kind in [GeneratorKind::ScaleX, GeneratorKind::ScaleY, GeneratorKind::Shear] {
        let gen = generator(kind, g, cutoff).unwrap();
        let mut largest: f64 = 0.0;
        let mut defect: f64 = 0.0;
        for a in 0..=cutoff {
            for b in 0..=cutoff {
                for c in 0..=cutoff {
                    for d in 0..=cutoff {
                        let (row, col) = (m(a, c), m(b, d));
                        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                        let expected = match kind {
                            GeneratorKind::ScaleX => Complex64::new(0.0, scale_1d(a, b, g.waist_x()) * delta(c, d)),
                            GeneratorKind::ScaleY => Complex64::new(0.0, scale_1d(c, d, g.waist_y()) * delta(a, b)),
                            GeneratorKind::Shear => Complex64::new(
                                (p2_1d(a, b, g.waist_x()) * delta(c, d) + p2_1d(c, d, g.waist_y()) * delta(a, b))
                                    / (2.0 * k),
                                0.0,
                            ),
                        };
                        if expected == Complex64::default() && gen.element(row, col) == Complex64::default() {
                            continue;
                        }
                        largest = largest.max(expected.norm());
                        defect = defect.max((gen.element(row, col) - expected).norm());
                    }
                }
            }
        }
        worst = worst.max(defect / largest);
    }
    worst
}

fn criterion_8(c: &mut Checks) {
    let (dominant, rest) = shift_power_split();
    c.check(
        (dominant - 0.862).abs() <= 1e-3,
        format!("(0,0) share of the shift-induced power {dominant:.4} (rest {rest:.4})"),
    );
    c.check(dominant > 0.85, "dominance above 0.85".into());
}

fn main() {
    let criteria: [(&str, fn(&mut Checks), Duration); 8] = [
        ("waist-scaling slopes and asymmetry", criterion_1, Duration::from_secs(10)),
        ("MMD headline values and power laws", criterion_2, Duration::from_secs(10)),
        ("higher-order probe gain", criterion_3, Duration::from_secs(1)),
        ("Fisher comparison", criterion_4, Duration::from_secs(5)),
        ("Cramer-Rao Monte Carlo", criterion_5, Duration::from_secs(60)),
        ("Mie suite", criterion_6, Duration::from_secs(5)),
        ("structural properties", criterion_7, Duration::from_secs(60)),
        ("waist-shift dominance", criterion_8, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let mut c = Checks::new();
        let start = Instant::now();
        run(&mut c);
        let elapsed = start.elapsed();
        c.check(
            elapsed <= budget,
            format!("runtime {:.2} s (budget {} s)", elapsed.as_secs_f64(), budget.as_secs()),
        );
        let ok = c.failures.is_empty();
        if !ok {
            failed += 1;
        }
        println!("criterion {}: {} {name}", i + 1, if ok { "PASS" } else { "FAIL" });
        for f in &c.failures {
            println!("    failed: {f}");
        }
        for n in &c.notes {
            println!("    ok: {n}");
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
