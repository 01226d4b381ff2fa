//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twistlab::curves::{self, CurveTolerances, ProbeConfig, ProbeVerdict, Rational};
use twistlab::stats::{self, Execution, SampleMode, ScanBox, ScanConfig, Window};
use twistlab::torsion::{self, VERTICAL_TOL};
use twistlab::{LiftedMap, Point};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vertical_cumulative(map: &LiftedMap, p: Point, n: usize) -> Vec<f64> {
    torsion::torsion_trace(map, p, [0.0, 1.0], n).unwrap().cumulative
}

fn c1_shear_closed_form() -> Outcome {
    let map = LiftedMap::shear();
    let mut worst: f64 = 0.0;
    for n in [1usize, 10, 1_000, 100_000] {
        let got = torsion::torsion_trace(&map, Point::new(0.3, 0.7), [0.0, 1.0], n).unwrap().torsion();
        let want = -(n as f64).atan() / (2.0 * PI * n as f64);
        worst = worst.max((got - want).abs());
    }
    check(worst < 1e-9, format!("max error {worst:.3e} (tol 1e-9)"))
}

fn c2_elliptic_torsion() -> Outcome {
    let est = torsion::asymptotic_torsion(&LiftedMap::standard(1.0), Point::new(0.0, 0.0), 10_000, 10_000).unwrap();
    // rotation of the linearisation: arccos(trace / 2) / 2pi with trace = 2 - k
    let anchor = -(0.5f64).acos() / (2.0 * PI);
    let err = (est.value - anchor).abs();
    check(err < 1e-3, format!("torsion {:.6}, distance to -1/6 {err:.2e} (tol 1e-3)", est.value))
}

fn random_map(r: &mut ChaCha8Rng) -> LiftedMap {
    match r.gen_range(0..4) {
        0 => LiftedMap::shear(),
        1 => LiftedMap::drift_shear(r.gen_range(-1.0..1.0)),
        2 => LiftedMap::standard(r.gen_range(0.0..8.0)),
        _ => {
            let n = r.gen_range(1..=3);
            LiftedMap::generating((0..n).map(|_| r.gen_range(-0.3..0.3)).collect())
        }
    }
}

fn c3_one_step_bounds() -> Outcome {
    let mut r = rng(3);
    let mut violations = 0;
    for _ in 0..10_000 {
        let map = random_map(&mut r);
        let p = Point::new(r.gen_range(0.0..1.0), r.gen_range(-5.0..5.0));
        let theta: f64 = r.gen_range(0.0..(2.0 * PI));
        let v = torsion::vertical_step_variation(&map, p).unwrap();
        let s = torsion::step_variation(&map, p, [theta.cos(), theta.sin()]).unwrap();
        if !(v > -0.5 && v < 0.0) || !(s > -1.0 && s < 0.5) {
            violations += 1;
        }
    }
    check(violations == 0, format!("{violations} violations over 10^4 triples"))
}

fn c4_anchor_control() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let map = random_map(&mut r);
        let p = Point::new(r.gen_range(0.0..1.0), r.gen_range(-2.0..2.0));
        let (a, b): (f64, f64) = (r.gen_range(0.0..(2.0 * PI)), r.gen_range(0.0..(2.0 * PI)));
        let ta = torsion::torsion_trace(&map, p, [a.cos(), a.sin()], 1_000).unwrap();
        let tb = torsion::torsion_trace(&map, p, [b.cos(), b.sin()], 1_000).unwrap();
        for (x, y) in ta.cumulative.iter().zip(&tb.cumulative) {
            worst = worst.max((x - y).abs());
        }
    }
    check(worst < 0.5, format!("max |cum_v - cum_w| = {worst:.6} over 10^3 points, n <= 10^3 (bound 1/2)"))
}

fn c5_oracle_agreement() -> Outcome {
    let mut r = rng(5);
    let (mut agree, mut hits, mut total) = (0usize, 0usize, 0usize);
    let mut bad = Vec::new();
    for k in [0.5, 1.0, 1.5] {
        let map = LiftedMap::standard(k);
        for _ in 0..1_000 {
            let p = Point::new(r.gen_range(0.0..1.0), r.gen_range(-1.0..1.0));
            let a = torsion::detect_conjugate(&map, p, 100, VERTICAL_TOL).unwrap().map(|e| e.time);
            let b = torsion::jacobi_conjugate_oracle(&map, p, 100).unwrap();
            total += 1;
            let ok = match (a, b) {
                (None, None) => true,
                (Some(x), Some(y)) => x.abs_diff(y) <= 1,
                _ => false,
            };
            hits += a.is_some() as usize;
            if ok {
                agree += 1;
            } else if bad.len() < 3 {
                bad.push(format!("k={k} {p}: {a:?} vs {b:?}"));
            }
        }
    }
    check(agree == total, format!("{agree}/{total} agree ({hits} conjugate hits) {}", bad.join("; ")))
}

fn c6_conjugate_implies_overconjugate() -> Outcome {
    let mut r = rng(6);
    let (mut hits, mut failures) = (0usize, Vec::new());
    for k in [0.5, 1.0, 1.5] {
        let map = LiftedMap::standard(k);
        for _ in 0..1_000 {
            let p = Point::new(r.gen_range(0.0..1.0), r.gen_range(-1.0..1.0));
            let Some(ev) = torsion::detect_conjugate(&map, p, 100, VERTICAL_TOL).unwrap() else { continue };
            hits += 1;
            let over = torsion::detect_overconjugate(&map, p, ev.time + 2);
            let ok = match over {
                Ok(Some(n)) if n <= ev.time + 2 => {
                    let cum = vertical_cumulative(&map, p, n + 50);
                    cum[n..=n + 50].iter().all(|c| *c < -0.5)
                }
                _ => false,
            };
            if !ok && failures.len() < 3 {
                failures.push(format!("k={k} {p}: conjugate at {} then {over:?}", ev.time));
            }
        }
    }
    check(failures.is_empty() && hits > 0, format!("{hits} conjugate hits checked {}", failures.join("; ")))
}

fn c7_flux() -> Outcome {
    let shear = curves::flux(&LiftedMap::shear(), 256).unwrap();
    let drift = curves::flux(&LiftedMap::drift_shear(0.25), 256).unwrap();
    let std1 = curves::flux(&LiftedMap::standard(1.0), 256).unwrap();
    let ok = shear.abs() < 1e-12 && (drift - 0.25).abs() < 1e-12 && std1.abs() < 1e-10;
    check(ok, format!("shear {shear:e}, drift {drift}, std k=1 {std1:e}"))
}

fn c8_graph_rational() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, map) in [("shear", LiftedMap::shear()), ("std k=0", LiftedMap::standard(0.0))] {
        let (p1, m1) = curves::characteristic_curves(&map, 256, curves::ROOT_TOL).unwrap();
        let gap = p1.ys.iter().zip(&m1.ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let fixed = p1
            .xs
            .iter()
            .zip(&p1.ys)
            .map(|(x, y)| map.eval(Point::new(*x, *y)).dist(&Point::new(*x, *y)))
            .fold(0.0, f64::max);
        ok &= gap < 1e-9 && fixed < 1e-9;
        notes.push(format!("{name}: gap {gap:.1e}, |F(z)-z| {fixed:.1e}"));
    }
    let drift = LiftedMap::drift_shear(0.25);
    let c = curves::periodic_curve(&drift, Rational::new(0, 1), 256, CurveTolerances::default()).unwrap();
    let res = c.max_periodicity_residual().unwrap();
    let flagged = !c.is_fixed(curves::FIXED_TOL) && (res - 0.25).abs() < 1e-12;
    ok &= flagged;
    notes.push(format!("drift: residual {res} flagged {flagged}"));
    check(ok, notes.join("; "))
}

fn c9_probe_dichotomy() -> Outcome {
    let rationals: Vec<Rational> = ["-1/1", "-1/2", "-1/3", "0/1", "1/3", "1/2", "1/1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let integrable = ProbeConfig { horizon: 10_000, rationals, ..ProbeConfig::default() };
    let a = curves::integrability_probe(&LiftedMap::standard(0.0), &integrable).unwrap();
    let first = match &a {
        ProbeVerdict::NoObstructionFound { family, .. } => {
            let res = family.max_root_residual();
            (res < 1e-8 && family.monotone_ok && family.entries.len() == 7, format!("k=0 {} residual {res:.1e} ordered {}", a.tag(), family.monotone_ok))
        }
        other => (false, format!("k=0 {}", other.tag())),
    };
    let chaotic = ProbeConfig { horizon: 100, ..ProbeConfig::default() };
    let b = curves::integrability_probe(&LiftedMap::standard(1.5), &chaotic).unwrap();
    let second = match &b {
        ProbeVerdict::ConjugatePointsFound { witness, time, .. } => {
            // distance to the nearest integer translate of the origin
            let d = (witness.x - witness.x.round()).hypot(witness.y - witness.y.round());
            (*time <= 10 && d < 0.1, format!("k=1.5 {} witness {witness} at time {time}, {d:.3} from Z^2", b.tag()))
        }
        other => (false, format!("k=1.5 {}", other.tag())),
    };
    check(first.0 && second.0, format!("{}; {}", first.1, second.1))
}

fn island_config() -> ScanConfig {
    ScanConfig::new(ScanBox::new(-0.1, 0.1, -0.1, 0.1), SampleMode::MonteCarlo { samples: 10_000, seed: 42 }, 2000, 0.05)
}

fn c10_island_measure() -> Outcome {
    let map = LiftedMap::standard(1.0);
    let cfg = island_config();
    let m = stats::island_measure(&map, &cfg).unwrap();
    let i = stats::torsion_integral(&map, &cfg).unwrap();
    // pilot run: the whole box lies in the island, fraction 1
    let ok = m.fraction_negative - 5.0 * m.stderr > 0.0 && m.fraction_negative >= 0.99 && i.value + 3.0 * i.stderr < 0.0;
    check(
        ok,
        format!(
            "fraction_negative {} (stderr {:.2e}), integral {:.6e} (stderr {:.2e})",
            m.fraction_negative, m.stderr, i.value, i.stderr
        ),
    )
}

fn c11_first_return() -> Outcome {
    let map = LiftedMap::standard(1.0);
    let mut r = rng(11);
    let (mut ok_count, mut worst) = (0usize, 0.0f64);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let (w, h) = (r.gen_range(0.05..0.2), r.gen_range(0.05..0.2));
        let (x0, y0) = (r.gen_range(0.0..1.0), r.gen_range(-0.6..0.4));
        let window = Window::new(x0, x0 + w, y0, y0 + h);
        let p = Point::new(x0 + w * r.gen_range(0.0..1.0), y0 + h * r.gen_range(0.0..1.0));
        match stats::first_return_torsion(&map, &window, p, 10, 10_000_000) {
            Ok(rep) => {
                let gap = (rep.ratio - rep.direct).abs();
                worst = worst.max(rep.discrepancy / rep.total_time as f64);
                if rep.identity_holds && gap <= 1e-12 * rep.total_time as f64 {
                    ok_count += 1;
                } else if failures.len() < 3 {
                    failures.push(format!("{p}: discrepancy {:e}", rep.discrepancy));
                }
            }
            Err(e) if failures.len() < 3 => failures.push(format!("{p}: {e}")),
            Err(_) => {}
        }
    }
    check(ok_count == 100, format!("{ok_count}/100 pairs, max discrepancy / N_R {worst:.1e} {}", failures.join("; ")))
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_twistlab");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = std::process::Command::new(bin)
            .args(["measure", "--map", "std:k=1", "--box=-0.1,0.1,-0.1,0.1", "--samples", "2000", "--n", "500", "--seed", "7", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        (status.status.success(), std::fs::read(path).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    let same_csv = ok_a && ok_b && !a.is_empty() && a == b;

    let map = LiftedMap::standard(1.0);
    let mut cfg = ScanConfig::new(ScanBox::new(-0.5, 0.5, -0.5, 0.5), SampleMode::Grid { nx: 32, ny: 32 }, 500, 0.05);
    let par = stats::torsion_field(&map, &cfg).unwrap();
    cfg.execution = Execution::Serial;
    let ser = stats::torsion_field(&map, &cfg).unwrap();
    let same_field = par.summary == ser.summary && par.records == ser.records;
    check(same_csv && same_field, format!("measure CSV identical: {same_csv} ({} bytes); parallel == serial field: {same_field}", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("shear closed form", c1_shear_closed_form),
        ("elliptic torsion", c2_elliptic_torsion),
        ("one-step bounds", c3_one_step_bounds),
        ("anchor control", c4_anchor_control),
        ("conjugate oracle agreement", c5_oracle_agreement),
        ("conjugate implies over-conjugate", c6_conjugate_implies_overconjugate),
        ("flux", c7_flux),
        ("graph of rational curves", c8_graph_rational),
        ("integrability probe", c9_probe_dichotomy),
        ("island measure", c10_island_measure),
        ("first-return identity", c11_first_return),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
