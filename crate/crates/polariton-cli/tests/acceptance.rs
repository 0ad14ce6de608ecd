//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `POLARITON_BLESS=1` to rewrite the golden files in `tests/golden`.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use polariton::boundary::{boundary_amplitudes, entry_probability, exit_spectral_map, reflection};
use polariton::kinematics::{effective_mass, omega_single, ChainParams, PairMomentum};
use polariton::oracle::{
    ansatz_residual, build_hamiltonian, collide_wavepackets, decay_rates, plan_collision,
    standing_wave_mode, Sector,
};
use polariton::scattering::{solve_scattering, Channel};
use polariton::Complex64;
use polariton_cli::commands::run_command;
use polariton_cli::config::{AxisConfig, Command, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
}

fn blessing() -> bool {
    std::env::var_os("POLARITON_BLESS").is_some()
}

const K0S: [f64; 4] = [0.3, 0.5, 0.7, 0.9];
const RATIOS: [f64; 3] = [1.0, 2.0, 4.0];
const SAMPLES: usize = 10_000;

/// Random (K, q) solutions, drawn per (k₀, ratio) until 10⁴ have a real q′.
/// Shared by criteria 1 and 2.
fn sampled_solutions() -> Vec<(f64, f64, polariton::scattering::ScatteringSolution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut out = vec![];
    for &k0 in &K0S {
        for &ratio in &RATIOS {
            let p = ChainParams::with_ratio(ratio, k0 * PI).unwrap();
            let mut real = 0;
            while real < SAMPLES {
                let pm = PairMomentum::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
                if let Ok(s) = solve_scattering(&p, pm) {
                    real += usize::from(s.channel == Channel::InelasticOpen);
                    out.push((k0, ratio, s));
                }
            }
        }
    }
    out
}

fn c1_continuity(sols: &[(f64, f64, polariton::scattering::ScatteringSolution)]) -> Verdict {
    let mut worst = 0.0f64;
    let mut count = [[0usize; 3]; 4];
    for (k0, ratio, s) in sols {
        if s.channel != Channel::InelasticOpen {
            continue;
        }
        let i = K0S.iter().position(|x| x == k0).unwrap();
        let j = RATIOS.iter().position(|x| x == ratio).unwrap();
        count[i][j] += 1;
        let flux = s.t1.norm_sqr() + s.t2.norm_sqr() * s.velocity_ratio;
        worst = worst.max((flux - 1.0).abs());
    }
    let total: usize = count.iter().flatten().sum();
    let min_cell = *count.iter().flatten().min().unwrap();
    verdict(
        worst < 1e-8 && min_cell > 0,
        format!("{total} real-q' points (fewest per config {min_cell}), max |flux - 1| = {worst:.2e} (tol 1e-8)"),
    )
}

fn c2_resonance(sols: &[(f64, f64, polariton::scattering::ScatteringSolution)]) -> Verdict {
    let res: Vec<_> = sols
        .iter()
        .filter(|(_, _, s)| s.channel == Channel::Resonance)
        .collect();
    let worst = res
        .iter()
        .map(|(_, _, s)| (s.t1.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(
        !res.is_empty() && worst < 1e-8,
        format!(
            "{} complex-q' points, max ||t1| - 1| = {worst:.2e} (tol 1e-8)",
            res.len()
        ),
    )
}

fn c3_subradiance() -> Verdict {
    let mut pass = true;
    let mut lines = vec![];
    for &k0 in &[0.3, 0.5] {
        let p = ChainParams::non_chiral(1.0, k0 * PI).unwrap();
        let mut rates = vec![vec![]; 2];
        for &n in &[20usize, 40, 80] {
            let op = build_hamiltonian(&p, n, Sector::One).unwrap();
            let modes = decay_rates(&op).unwrap();
            for xi in 1..=2 {
                let oracle = standing_wave_mode(&modes, &p, n, xi).unwrap().rate;
                let formula = polariton::boundary::subradiant_rate(&p, n, xi)
                    .unwrap()
                    .gamma_exact;
                let rel = (formula - oracle).abs() / oracle;
                if rel >= 0.1 {
                    pass = false;
                    lines.push(format!("k0={k0}pi N={n} xi={xi} rel={rel:.3}"));
                }
                rates[xi - 1].push((n as f64, oracle));
            }
        }
        for (xi, r) in rates.iter().enumerate() {
            let slope = loglog_slope(r);
            if (slope + 3.0).abs() > 0.15 {
                pass = false;
            }
            lines.push(format!("k0={k0}pi xi={} exponent {slope:.3}", xi + 1));
        }
    }
    verdict(
        pass,
        format!(
            "rate within 10% and exponent -3 +/- 0.15: {}",
            lines.join("; ")
        ),
    )
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn c4_k_zero() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut used = 0;
    while used < 1000 {
        let k0 = rng.random_range(0.02..0.98) * PI;
        let ratio = [1.0, 0.25, 2.0, 4.0, 10.0][used % 5];
        let q = rng.random_range(-PI..PI);
        if (q.abs() - k0).abs() < 1e-6 {
            continue;
        }
        let p = ChainParams::with_ratio(ratio, k0).unwrap();
        let s = solve_scattering(&p, PairMomentum::new(0.0, q)).unwrap();
        let c = k0.cos();
        let expect = -(Complex64::from_polar(1.0, q) - c) / (Complex64::from_polar(1.0, -q) - c);
        worst = worst.max((s.t1 - expect).norm()).max(s.t2.norm());
        used += 1;
    }
    verdict(
        worst < 1e-12,
        format!("1000 points incl. chiral ratios, max deviation {worst:.2e} (tol 1e-12)"),
    )
}

fn c5_scattering_length() -> Verdict {
    let mut worst = 0.0f64;
    for &k0 in &[0.05, 0.5, 0.95] {
        let p = ChainParams::non_chiral(1.0, k0 * PI).unwrap();
        let h = 1e-6;
        let t = |q: f64| solve_scattering(&p, PairMomentum::new(0.0, q)).unwrap().t1;
        let slope = (t(h) / t(-h)).arg() / (2.0 * h);
        let four_a = 2.0 / (1.0 - (k0 * PI).cos());
        worst = worst.max((slope - four_a).abs() / four_a);
    }
    verdict(
        worst < 1e-6,
        format!("max relative error of d(arg t1)/dq at 0 vs 4a = {worst:.2e} (tol 1e-6)"),
    )
}

fn c6_residual() -> Verdict {
    let cases = [
        (1.0, 0.5, 1.3137, -0.2141),
        (1.0, 0.5, 1.9087, -2.1722),
        (1.0, 0.5, 0.0, 1.0),
        (4.0, 0.9, -0.9, 0.31 * PI),
        (2.0, 0.3, 0.8, 2.4),
        (1.0, 0.3, -1.55, 1.18),
    ];
    let mut worst = 0.0f64;
    let mut seen = vec![];
    for &(ratio, k0, big_k, q) in &cases {
        let p = ChainParams::with_ratio(ratio, k0 * PI).unwrap();
        let pm = PairMomentum::new(big_k, q);
        let s = solve_scattering(&p, pm).unwrap();
        let prof = ansatz_residual(&p, 150, pm, &s).unwrap();
        worst = worst.max(prof.ratio());
        if !seen.contains(&s.channel) {
            seen.push(s.channel);
        }
    }
    verdict(
        worst < 1e-6 && seen.len() == 3,
        format!(
            "{} points over {} channels at N=150, max interior/boundary = {worst:.2e} (tol 1e-6)",
            cases.len(),
            seen.len()
        ),
    )
}

/// (ratio, k₀/π, K/π, q/π, σ), one per channel class.
const WAVEPACKET_POINTS: [(f64, f64, f64, f64, f64); 3] = [
    (1.0, 0.2, 0.0, 47.0 / 60.0, 5.0),
    (1.5, 0.5, -1.0 / 3.0, 28.0 / 60.0, 6.0),
    (1.0, 0.3, -0.4934, 0.3756, 5.0),
];

fn c7_wavepacket() -> Verdict {
    let mut pass = true;
    let mut lines = vec![];
    for &(ratio, k0, big_k, q, width) in &WAVEPACKET_POINTS {
        let p = ChainParams::with_ratio(ratio, k0 * PI).unwrap();
        let pm = PairMomentum::new(big_k * PI, q * PI);
        let s = solve_scattering(&p, pm).unwrap();
        let run =
            plan_collision(&p, 200, pm, width).and_then(|plan| collide_wavepackets(&p, 200, &plan));
        match run {
            Ok(m) => {
                let de = (m.elastic - s.elastic_probability()).abs();
                let di = (m.inelastic - s.inelastic_probability()).abs();
                pass &= de <= 0.05 && di <= 0.05;
                lines.push(format!(
                    "{}: predicted {:.3}/{:.3} measured {:.3}/{:.3}",
                    s.channel.as_str(),
                    s.elastic_probability(),
                    s.inelastic_probability(),
                    m.elastic,
                    m.inelastic
                ));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{}: {e}", s.channel.as_str()));
            }
        }
    }
    verdict(pass, format!("N=200, tol 0.05 abs: {}", lines.join("; ")))
}

fn c8_boundary() -> Verdict {
    let mut recip = 0.0f64;
    for &(ratio, k0) in &[(1.0, 0.5), (2.0, 0.3), (4.0, 0.7), (0.5, 0.9)] {
        let p = ChainParams::with_ratio(ratio, k0 * PI).unwrap();
        for j in 0..400 {
            let k = -PI + 2.0 * PI * (j as f64 + 0.5) / 400.0;
            if let (Ok((exit, _)), Ok(entry)) =
                (exit_spectral_map(&p, 50, k), entry_probability(&p, k))
            {
                recip = recip.max((exit - entry).abs());
            }
        }
    }
    let d = 1e-7;
    let mut r_k0 = 0.0f64;
    let mut r_edge = 0.0f64;
    for &k0 in &[0.3, 0.5, 0.7] {
        let p = ChainParams::non_chiral(1.0, k0 * PI).unwrap();
        r_k0 = r_k0.max(reflection(&p, k0 * PI - d).unwrap().norm());
        for k in [d, PI - d] {
            r_edge = r_edge.max((reflection(&p, k).unwrap().norm() - 1.0).abs());
        }
    }
    let mut chiral = 0.0f64;
    let p = ChainParams::new(1.0, 0.0, 0.4 * PI).unwrap();
    for j in 0..400 {
        let k = -PI + 2.0 * PI * (j as f64 + 0.5) / 400.0;
        if let Ok(b) = boundary_amplitudes(&p, k) {
            chiral = chiral.max((b.entry_probability - 1.0).abs());
        }
    }
    let tol_limit = 1e-6;
    verdict(
        recip < 1e-12 && r_k0 < tol_limit && r_edge < tol_limit && chiral < 1e-12,
        format!(
            "|exit-entry| {recip:.1e} (tol 1e-12); |r(k0-1e-7)| {r_k0:.1e}, ||r(edge)|-1| {r_edge:.1e} (tol 1e-6); chiral |entry-1| {chiral:.1e} (tol 1e-12)"
        ),
    )
}

fn c9_effective_mass() -> Verdict {
    let mut worst = 0.0f64;
    let mut ratio = 0.0;
    for &k0 in &[0.3, 0.5, 0.7] {
        let p = ChainParams::non_chiral(1.0, k0 * PI).unwrap();
        let h = 1e-3;
        let w = |k: f64| omega_single(&p, k).unwrap();
        let curv = (w(h) - 2.0 * w(0.0) + w(-h)) / (h * h);
        let inv_m = 1.0 / effective_mass(&p).unwrap();
        worst = worst.max((curv - inv_m).abs() / inv_m.abs());
        ratio = curv / inv_m;
    }
    verdict(
        worst < 1e-4,
        format!("max relative error of omega'' at 0 vs 1/m_e = {worst:.2e} (tol 1e-4), omega''*m_e = {ratio:.6}"),
    )
}

fn config(cmd: Command, k0: f64, ratio: f64) -> RunConfig {
    let mut c = RunConfig {
        command: Some(cmd),
        ..Default::default()
    };
    c.params.k0d = k0;
    c.params.gamma_r = ratio;
    c.params.gamma_l = 1.0;
    c
}

fn channel_map(cfg: &RunConfig) -> String {
    let table = run_command(cfg, &cfg.params.to_params().unwrap());
    let q_count = cfg.qd_axis().count;
    let mut s = String::new();
    for (i, row) in table.rows.iter().enumerate() {
        s.push(match row {
            Ok(cells) => match &cells[5] {
                polariton_cli::output::Cell::S(c) if c == "elastic_pure" => 'E',
                polariton_cli::output::Cell::S(c) if c == "inelastic_open" => 'I',
                polariton_cli::output::Cell::S(c) if c == "resonance" => 'R',
                _ => '?',
            },
            Err(_) => 'x',
        });
        if (i + 1) % q_count == 0 {
            s.push('\n');
        }
    }
    s
}

/// Grid points with the given neighbour pair of channels, right or down.
fn adjacent(map: &str, a: char, b: char) -> bool {
    let rows: Vec<Vec<char>> = map.lines().map(|l| l.chars().collect()).collect();
    for i in 0..rows.len() {
        for j in 0..rows[i].len() {
            let c = rows[i][j];
            let right = rows[i].get(j + 1).copied();
            let down = rows.get(i + 1).map(|r| r[j]);
            for n in [right, down].into_iter().flatten() {
                if (c == a && n == b) || (c == b && n == a) {
                    return true;
                }
            }
        }
    }
    false
}

fn compare_golden(name: &str, produced: &str, numeric: bool) -> Result<(), String> {
    let path = golden_dir().join(name);
    if blessing() {
        fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        fs::write(&path, produced).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let golden = fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
    if !numeric {
        return if golden == produced {
            Ok(())
        } else {
            Err(format!("{name} differs from golden"))
        };
    }
    let (gl, pl): (Vec<&str>, Vec<&str>) = (golden.lines().collect(), produced.lines().collect());
    if gl.len() != pl.len() || gl[0] != pl[0] {
        return Err(format!("{name}: header or row count differs"));
    }
    for (g, p) in gl.iter().zip(&pl).skip(1) {
        for (a, b) in g.split(',').zip(p.split(',')) {
            let (x, y): (f64, f64) = (a.parse().unwrap_or(f64::NAN), b.parse().unwrap_or(f64::NAN));
            if a != b && (x - y).abs() > 1e-10 * (1.0 + x.abs()) {
                return Err(format!("{name}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

fn c10_figures() -> Verdict {
    let mut problems = vec![];
    let mut notes = vec![];

    for &(k0, ratio) in &[(0.5, 1.0), (0.5, 4.0), (0.9, 1.0), (0.9, 4.0)] {
        let cfg = config(Command::Dispersion, k0, ratio);
        let csv = run_command(&cfg, &cfg.params.to_params().unwrap()).to_csv();
        if !csv.starts_with("kd,omega,vg,entry_probability\n") {
            problems.push("dispersion header".to_string());
        }
        if let Err(e) = compare_golden(&format!("dispersion_k0_{k0}_ratio_{ratio}.csv"), &csv, true)
        {
            problems.push(e);
        }
    }

    for &(k0, ratio) in &[(0.5, 1.0), (0.5, 4.0), (0.95, 1.0)] {
        let cfg = config(Command::PhaseDiagram, k0, ratio);
        let map = channel_map(&cfg);
        let has = |c: char| map.contains(c);
        notes.push(format!(
            "{k0}pi/r{ratio}: R={} I={} adj={}",
            has('R'),
            has('I'),
            adjacent(&map, 'R', 'I')
        ));
        if let Err(e) = compare_golden(&format!("phase_k0_{k0}_ratio_{ratio}.txt"), &map, false) {
            problems.push(e);
        }
    }

    // pure elastic plateau near the origin at 0.95π
    let mut plateau = config(Command::PhaseDiagram, 0.95, 1.0);
    plateau.grid.big_k = Some(AxisConfig {
        min: -0.06,
        max: 0.06,
        count: 13,
    });
    plateau.grid.qd = Some(AxisConfig {
        min: -0.06,
        max: 0.06,
        count: 13,
    });
    let p = plateau.params.to_params().unwrap();
    let mut plateau_ok = true;
    for k in polariton_cli::commands::axis_points(&plateau.big_k_axis()) {
        for q in polariton_cli::commands::axis_points(&plateau.qd_axis()) {
            match solve_scattering(&p, PairMomentum::new(k, q)) {
                Ok(s) => {
                    plateau_ok &= (s.t1 + 1.0).norm() < 0.25 && s.inelastic_probability() < 1e-3
                }
                Err(_) => plateau_ok = false,
            }
        }
    }
    if !plateau_ok {
        problems.push("t1 = -1 plateau missing at 0.95pi".into());
    }

    // byte-identical reruns across thread counts
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = vec![];
    for threads in [1usize, 2, 1] {
        let mut cfg = config(Command::PhaseDiagram, 0.5, 2.0);
        cfg.grid.big_k = Some(AxisConfig {
            min: -1.0,
            max: 1.0,
            count: 41,
        });
        cfg.grid.qd = Some(AxisConfig {
            min: -1.0,
            max: 1.0,
            count: 41,
        });
        cfg.threads = Some(threads);
        cfg.output.path = Some(
            dir.path()
                .join(format!("pd{}.csv", outputs.len()))
                .to_string_lossy()
                .into_owned(),
        );
        let report = polariton_cli::run(&cfg).unwrap();
        outputs.push(fs::read(report.data_path).unwrap());
    }
    if !(outputs[0] == outputs[1] && outputs[1] == outputs[2]) {
        problems.push("reruns not byte-identical".into());
    }

    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "golden grids match, plateau present, reruns identical ({})",
                notes.join(", ")
            )
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter that excludes us skips the run.
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let sols = sampled_solutions();
    let criteria: Vec<(&str, Check)> = vec![
        ("continuity equation", Box::new(|| c1_continuity(&sols))),
        ("resonance unitarity", Box::new(|| c2_resonance(&sols))),
        ("subradiance N^-3", Box::new(c3_subradiance)),
        ("K=0 collapse", Box::new(c4_k_zero)),
        ("scattering length", Box::new(c5_scattering_length)),
        ("ansatz residual", Box::new(c6_residual)),
        ("wavepacket oracle", Box::new(c7_wavepacket)),
        ("boundary reciprocity and limits", Box::new(c8_boundary)),
        ("effective mass", Box::new(c9_effective_mass)),
        ("figure-class regression", Box::new(c10_figures)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {tag} {name}: {} [{:.1}s]",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
