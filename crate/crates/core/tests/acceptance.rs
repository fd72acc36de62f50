//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Criteria listed in `KNOWN_RED` are reported but do not fail the
//! run; everything else does.

use std::path::PathBuf;
use std::time::Instant;

use zo_core::estimators::{bias_probe, EstimatorConfig, Perturbation};
use zo_core::geometry::Domain;
use zo_core::harness::{
    dominance_check, fit_log_log, fit_rate, mean_gap_by, run_sweep, sandwich_report, workers_from_env, write_csv,
    SweepConfig, SweepRow, XField,
};
use zo_core::problems::{make_positive_part_quadratic, make_smooth_quadratic, onevec_gap, Problem};
use zo_core::smoothing::{moment_diagnostics_multi, theory_moment, SmoothingDistribution, SmoothingKind};

const T_SLOPE: (f64, f64) = (-0.65, -0.35);
const D_SLOPE_SMOOTH: (f64, f64) = (0.3, 0.7);
const D_SLOPE_NONSMOOTH: (f64, f64) = (0.3, 0.8);
const MULTIPOINT_MAX_RATIO: f64 = 2.0;
const BIAS_SLOPE: (f64, f64) = (0.9, 1.1);
const SIGMAS: f64 = 4.0;
const MC_N: usize = 1_000_000;
const FULL_INFO_MIN_ADVANTAGE: f64 = 2.0;

/// The bias of a symmetric-direction two-point estimate on a quadratic is
/// exactly zero, so no `u` rises above the noise floor and the slope clause
/// cannot be evaluated.
const KNOWN_RED: &[&str] = &["C5b"];

struct Suite {
    failed: Vec<&'static str>,
    known: Vec<&'static str>,
    workers: usize,
}

impl Suite {
    fn report(&mut self, id: &'static str, ok: bool, what: &str, start: Instant, target_s: f64) {
        let secs = start.elapsed().as_secs_f64();
        let tag = if ok { "PASS" } else { "FAIL" };
        let known = !ok && KNOWN_RED.contains(&id);
        println!(
            "{tag} {id:<4} {what} [{secs:.1} s, target < {target_s} s]{}",
            if known { " (known red)" } else { "" }
        );
        if !ok {
            if known {
                self.known.push(id);
            } else {
                self.failed.push(id);
            }
        }
    }

    fn sweep(&self, name: &str) -> (SweepConfig, Vec<SweepRow>) {
        let cfg = config(name);
        let rows = run_sweep(&cfg, self.workers).unwrap_or_else(|e| panic!("{name}: {e}"));
        (cfg, rows)
    }
}

fn config(name: &str) -> SweepConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    SweepConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    lo <= x && x <= hi
}

fn mean_at(rows: &[SweepRow], x: XField, at: f64) -> f64 {
    mean_gap_by(rows, x).into_iter().find(|p| p.0 == at).expect("grid value present").1
}

fn c1(s: &mut Suite) {
    let t0 = Instant::now();
    let (_, rows) = s.sweep("smooth_rate_T.toml");
    let f = fit_rate(&rows, XField::T).unwrap();
    let ok = within(f.slope, T_SLOPE);
    s.report("C1", ok, &format!("smooth two-point gap vs T: slope {:.3} in {T_SLOPE:?}", f.slope), t0, 60.0);
}

fn c2(s: &mut Suite) {
    let t0 = Instant::now();
    let (_, rows) = s.sweep("smooth_rate_d.toml");
    let f = fit_rate(&rows, XField::D).unwrap();
    let ok = within(f.slope, D_SLOPE_SMOOTH);
    s.report("C2", ok, &format!("smooth two-point gap vs d: slope {:.3} in {D_SLOPE_SMOOTH:?}", f.slope), t0, 60.0);
}

fn c3(s: &mut Suite) {
    let t0 = Instant::now();
    let (_, rows) = s.sweep("multipoint.toml");
    let ratio = mean_at(&rows, XField::D, 64.0) / mean_at(&rows, XField::D, 8.0);
    let ok = ratio <= MULTIPOINT_MAX_RATIO;
    s.report("C3", ok, &format!("m = d gap ratio d=64/d=8: {ratio:.3} <= {MULTIPOINT_MAX_RATIO}"), t0, 120.0);
}

fn c4(s: &mut Suite) {
    let t0 = Instant::now();
    let (_, rows_t) = s.sweep("nonsmooth_rate_T.toml");
    let (_, rows_d) = s.sweep("nonsmooth_rate_d.toml");
    let ft = fit_rate(&rows_t, XField::T).unwrap();
    let fd = fit_rate(&rows_d, XField::D).unwrap();
    let ok = within(ft.slope, T_SLOPE) && within(fd.slope, D_SLOPE_NONSMOOTH);
    s.report(
        "C4",
        ok,
        &format!(
            "double-smoothed on L‖θ−c‖: T slope {:.3} in {T_SLOPE:?}, d slope {:.3} in {D_SLOPE_NONSMOOTH:?}",
            ft.slope, fd.slope
        ),
        t0,
        120.0,
    );
}

/// `f(θ) = ½‖θ‖₂²` on the radius-2 ball, probed at `θ = e₁` (`‖∇f‖₂ = 1`).
fn probe_setting(d: usize) -> (impl Problem, Vec<f64>) {
    let p = make_smooth_quadratic(vec![0.0; d], 0.0, Domain::l2(2.0, d).unwrap()).unwrap();
    let mut theta = vec![0.0; d];
    theta[0] = 1.0;
    (p, theta)
}

const PROBE_US: [f64; 3] = [1e-1, 1e-2, 1e-3];

fn c5(s: &mut Suite) {
    let t0 = Instant::now();
    let d = 4;
    let (p, theta) = probe_setting(d);
    let est = EstimatorConfig::TwoPoint { dist: SmoothingKind::SphereSqrtD };
    let mut bound_ok = true;
    let mut above = (Vec::new(), Vec::new());
    let mut detail = Vec::new();
    for (i, &u) in PROBE_US.iter().enumerate() {
        let r = bias_probe(&p, &est, &theta, Perturbation::Single(u), MC_N, 500 + i as u64).unwrap();
        let lemma = u * 0.5 * (d as f64).powf(1.5);
        bound_ok &= r.bias_norm <= lemma + SIGMAS * r.stderr;
        if r.bias_norm > SIGMAS * r.stderr {
            above.0.push(u);
            above.1.push(r.bias_norm);
        }
        detail.push(format!("u={u:e}: {:.2e} (se {:.1e}, bound {lemma:.2e})", r.bias_norm, r.stderr));
    }
    s.report("C5a", bound_ok, &format!("bias <= u·½·d^1.5 + 4se: {}", detail.join("; ")), t0, 30.0);

    let t0 = Instant::now();
    let (ok, msg) = if above.0.len() >= 2 {
        let f = fit_log_log(&above.0, &above.1).unwrap();
        (within(f.slope, BIAS_SLOPE), format!("slope {:.3} in {BIAS_SLOPE:?} over {} points", f.slope, f.n_points))
    } else {
        (false, format!("not evaluable: {} of {} u values above 4se", above.0.len(), PROBE_US.len()))
    };
    s.report("C5b", ok, &format!("bias log-log slope in u on the quadratic: {msg}"), t0, 30.0);

    // Same probe on ½‖max(θ, 0)‖² at the kink θ = 0, where the bias is nonzero.
    let t0 = Instant::now();
    let pp = make_positive_part_quadratic(Domain::l2(2.0, d).unwrap()).unwrap();
    let origin = vec![0.0; d];
    let (mut us, mut bs) = (Vec::new(), Vec::new());
    for (i, &u) in PROBE_US.iter().enumerate() {
        let r = bias_probe(&pp, &est, &origin, Perturbation::Single(u), MC_N, 600 + i as u64).unwrap();
        if r.bias_norm > SIGMAS * r.stderr {
            us.push(u);
            bs.push(r.bias_norm);
        }
    }
    let slope = if us.len() >= 2 { fit_log_log(&us, &bs).unwrap().slope } else { f64::NAN };
    println!(
        "INFO C5   positive-part quadratic: bias slope {slope:.3} over {} points above 4se [{:.1} s]",
        us.len(),
        t0.elapsed().as_secs_f64()
    );
}

fn c6(s: &mut Suite) {
    let t0 = Instant::now();
    let d = 4;
    let df = d as f64;
    let (p, theta) = probe_setting(d);
    let est = EstimatorConfig::TwoPoint { dist: SmoothingKind::SphereSqrtD };
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, &u) in PROBE_US.iter().enumerate() {
        let r = bias_probe(&p, &est, &theta, Perturbation::Single(u), MC_N, 700 + i as u64).unwrap();
        let bound = 2.0 * df + 0.5 * u * u * df.powi(3);
        ok &= r.second_moment <= bound + SIGMAS * r.second_moment_stderr;
        detail.push(format!("u={u:e}: {:.3} <= {bound:.3}", r.second_moment));
    }
    s.report("C6", ok, &format!("E‖g‖² <= 2d + ½u²d³ + 4se: {}", detail.join("; ")), t0, 30.0);
}

const KINDS: [SmoothingKind; 4] = [
    SmoothingKind::Gaussian,
    SmoothingKind::BallSqrtDPlus2,
    SmoothingKind::SphereSqrtD,
    SmoothingKind::Hypercube,
];

fn c7(s: &mut Suite) {
    let t0 = Instant::now();
    let ks = [1, 2, 3, 4, 6];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (a, kind) in KINDS.into_iter().enumerate() {
        for (b, d) in [2usize, 8, 32].into_iter().enumerate() {
            let z = SmoothingDistribution::new(kind, d).unwrap();
            let seed = 800 + 10 * a as u64 + b as u64;
            for m in moment_diagnostics_multi(&z, &ks, MC_N, seed).unwrap() {
                // ‖Z‖ is constant on the sphere and the hypercube; allow rounding
                let tol = SIGMAS * m.stderr + 1e-9 * m.theory_kth_moment;
                let err = (m.empirical_kth_moment - m.theory_kth_moment).abs();
                ok &= err <= tol;
                if m.stderr > 0.0 {
                    worst = worst.max(err / m.stderr);
                }
            }
            let df = d as f64;
            ok &= theory_moment(&z, 4) <= 3.0 * df * df;
            ok &= theory_moment(&z, 3) <= 3f64.sqrt() * df.powf(1.5);
        }
    }
    s.report(
        "C7",
        ok,
        &format!("moments within 4se of closed forms (worst {worst:.2} se); E‖Z‖⁴ <= 3d², E‖Z‖³ <= √3·d^1.5"),
        t0,
        60.0,
    );
}

fn c8(s: &mut Suite) {
    use SmoothingKind::*;
    let t0 = Instant::now();
    let band = 2.0 * ((MC_N as f64).ln() / MC_N as f64).sqrt();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut i = 0;
    for (a, b) in [(Gaussian, Gaussian), (BallSqrtDPlus2, BallSqrtDPlus2), (BallSqrtDPlus2, SphereSqrtD)] {
        for d in [2usize, 8, 32] {
            for u in [0.1, 0.5] {
                i += 1;
                let r = dominance_check(a, b, u, d, MC_N, 900 + i).unwrap();
                worst = worst.max(r.max_cdf_violation);
            }
        }
    }
    let ok = worst <= band;
    s.report("C8", ok, &format!("max CDF violation {worst:.5} <= {band:.5} over 18 cells"), t0, 120.0);
}

fn c9(s: &mut Suite) {
    let t0 = Instant::now();
    let rows = sandwich_report(&config("sandwich.toml"), s.workers).unwrap();
    let r = &rows[0];
    let ok = rows.iter().all(|r| r.ok == Some(true));
    s.report(
        "C9",
        ok,
        &format!(
            "0.8·lower {:.3e} <= measured {:.3e} (se {:.1e}) <= upper {:.3e}",
            0.8 * r.lower,
            r.measured_mean_gap,
            r.stderr,
            r.upper
        ),
        t0,
        60.0,
    );
}

fn c10(s: &mut Suite) {
    let t0 = Instant::now();
    let mut cells = 0;
    let mut ok = true;
    for d in 2..=64 {
        for q in [1.0, 1.5, 2.0, 4.0] {
            for i in 1..=d {
                ok &= onevec_gap(d, q, i).unwrap().holds;
                cells += 1;
            }
        }
    }
    s.report("C10", ok, &format!("one-vector gap holds on {cells} cells"), t0, 1.0);
}

fn csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(rows, &mut out).unwrap();
    out
}

fn c11(s: &mut Suite) {
    let t0 = Instant::now();
    let cfg = config("quick.toml");
    let a = csv_bytes(&run_sweep(&cfg, 1).unwrap());
    let b = csv_bytes(&run_sweep(&cfg, 1).unwrap());
    let c = csv_bytes(&run_sweep(&cfg, 8).unwrap());
    let ok = a == b && a == c;
    s.report("C11", ok, &format!("CSV byte-identical across re-runs and 1 vs 8 workers ({} bytes)", a.len()), t0, 60.0);
}

fn c12(s: &mut Suite) {
    let t0 = Instant::now();
    let (_, fi) = s.sweep("full_info.toml");
    let (_, tp) = s.sweep("two_point_d16.toml");
    let (gf, gt) = (mean_at(&fi, XField::T, 1e4), mean_at(&tp, XField::T, 1e4));
    let (sf, st) = (fit_rate(&fi, XField::T).unwrap().slope, fit_rate(&tp, XField::T).unwrap().slope);
    let ok = gt >= FULL_INFO_MIN_ADVANTAGE * gf && within(sf, T_SLOPE) && within(st, T_SLOPE);
    s.report(
        "C12",
        ok,
        &format!(
            "d=16, T=1e4: two-point {gt:.3e} / full-info {gf:.3e} = {:.2} >= {FULL_INFO_MIN_ADVANTAGE}; T slopes {sf:.3}, {st:.3} in {T_SLOPE:?}",
            gt / gf
        ),
        t0,
        60.0,
    );
}

fn main() {
    // cargo passes libtest flags; a name filter that matches nothing skips the suite
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut s = Suite { failed: Vec::new(), known: Vec::new(), workers: workers_from_env().unwrap() };
    let t0 = Instant::now();
    for c in [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12] {
        c(&mut s);
    }
    println!(
        "acceptance: {} failed, {} known red, {:.1} s total",
        s.failed.len(),
        s.known.len(),
        t0.elapsed().as_secs_f64()
    );
    if !s.failed.is_empty() {
        eprintln!("failed criteria: {}", s.failed.join(", "));
        std::process::exit(1);
    }
}
