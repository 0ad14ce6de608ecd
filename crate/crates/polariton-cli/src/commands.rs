//! One function per subcommand, each producing a [`Table`].

use std::f64::consts::PI;

use polariton::boundary::{boundary_amplitudes, exit_spectral_map, subradiant_rate};
use polariton::kinematics::{group_velocity_single, omega_single, ChainParams, PairMomentum};
use polariton::oracle::{
    ansatz_residual, build_hamiltonian, collide_wavepackets, decay_rates_cached, plan_collision,
    standing_wave_mode, EigenCache, Sector,
};
use polariton::scattering::{lieb_liniger_t1, scattering_length, solve_scattering, t1_k0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AxisConfig, Command, OracleMode, RunConfig, AXIS_INSET};
use crate::output::{Cell, Failure, Row, Table};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over inputs in order, in parallel when the feature is on.
fn ordered_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

type Cells = Result<Vec<Cell>, &'static str>;

/// Evaluate one row per input; a failed row keeps the cells from `key`.
fn rows<T: Sync>(
    items: &[T],
    key: impl Fn(&T) -> Vec<Cell> + Sync + Send,
    f: impl Fn(&T) -> Cells + Sync + Send,
) -> Vec<Row> {
    ordered_map(items, |x| {
        f(x).map_err(|code| Failure {
            inputs: key(x),
            code,
        })
    })
}

/// Axis points in radians with both ends pulled in by [`AXIS_INSET`].
pub fn axis_points(a: &AxisConfig) -> Vec<f64> {
    let lo = a.min * PI + AXIS_INSET;
    let hi = a.max * PI - AXIS_INSET;
    (0..a.count)
        .map(|j| lo + (hi - lo) * j as f64 / (a.count - 1) as f64)
        .collect()
}

fn err_code(e: polariton::PolaritonError) -> &'static str {
    e.code()
}

pub fn run_command(cfg: &RunConfig, params: &ChainParams) -> Table {
    match cfg.command() {
        Command::Dispersion => dispersion(cfg, params),
        Command::Boundary => boundary(cfg, params),
        Command::PhaseDiagram => phase_diagram(cfg, params),
        Command::ScatterPoint => scatter_point(cfg, params),
        Command::Subradiance => subradiance(cfg, params),
        Command::OracleCompare => match cfg.mode() {
            OracleMode::Subradiance => oracle_subradiance(cfg, params),
            OracleMode::Residual => oracle_residual(cfg, params),
            OracleMode::Wavepacket => oracle_wavepacket(cfg, params),
        },
        Command::LlCompare => ll_compare(cfg, params),
    }
}

fn dispersion(cfg: &RunConfig, params: &ChainParams) -> Table {
    let ks = axis_points(&cfg.kd_axis());
    let rows = rows(
        &ks,
        |&k| vec![k.into()],
        |&k| -> Cells {
            let w = omega_single(params, k).map_err(err_code)?;
            let v = group_velocity_single(params, k).map_err(err_code)?;
            let b = boundary_amplitudes(params, k).map_err(err_code)?;
            Ok(vec![
                k.into(),
                w.into(),
                v.into(),
                b.entry_probability.into(),
            ])
        },
    );
    Table::new(vec!["kd", "omega", "vg", "entry_probability"], rows)
}

fn boundary(cfg: &RunConfig, params: &ChainParams) -> Table {
    let ks = axis_points(&cfg.kd_axis());
    let n = cfg.sizes()[0];
    let rows = rows(
        &ks,
        |&k| vec![k.into()],
        |&k| -> Cells {
            let b = boundary_amplitudes(params, k).map_err(err_code)?;
            let (exit, phase) = exit_spectral_map(params, n, k).map_err(err_code)?;
            Ok(vec![
                k.into(),
                b.k_partner.into(),
                b.r.re.into(),
                b.r.im.into(),
                b.t.re.into(),
                b.t.im.into(),
                b.entry_probability.into(),
                exit.into(),
                phase.re.into(),
                phase.im.into(),
            ])
        },
    );
    Table::new(
        vec![
            "kd",
            "kprime",
            "r_re",
            "r_im",
            "t_re",
            "t_im",
            "entry_probability",
            "exit_probability",
            "phase_re",
            "phase_im",
        ],
        rows,
    )
}

fn phase_diagram(cfg: &RunConfig, params: &ChainParams) -> Table {
    let ks = axis_points(&cfg.big_k_axis());
    let qs = axis_points(&cfg.qd_axis());
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .flat_map(|&k| qs.iter().map(move |&q| (k, q)))
        .collect();
    let rows = rows(
        &pts,
        |&(k, q)| vec![k.into(), q.into()],
        |&(k, q)| -> Cells {
            let s = solve_scattering(params, PairMomentum { big_k: k, q }).map_err(err_code)?;
            Ok(vec![
                k.into(),
                q.into(),
                s.qprime.im.into(),
                s.t1.norm_sqr().into(),
                s.inelastic_probability().into(),
                s.channel.as_str().into(),
            ])
        },
    );
    Table::new(
        vec![
            "Kd",
            "qd",
            "im_qprime",
            "abs_t1_sq",
            "inelastic_prob",
            "channel",
        ],
        rows,
    )
}

fn config_points(cfg: &RunConfig) -> Vec<PairMomentum> {
    cfg.point
        .iter()
        .chain(cfg.points.iter())
        .map(|p| PairMomentum {
            big_k: p.big_k * PI,
            q: p.qd * PI,
        })
        .collect()
}

fn scatter_point(cfg: &RunConfig, params: &ChainParams) -> Table {
    let pts = config_points(cfg);
    let rows = rows(
        &pts,
        |p| vec![p.big_k.into(), p.q.into()],
        |&p| -> Cells {
            let s = solve_scattering(params, p).map_err(err_code)?;
            Ok(vec![
                p.big_k.into(),
                p.q.into(),
                s.channel.as_str().into(),
                s.t1.re.into(),
                s.t1.im.into(),
                s.t2.re.into(),
                s.t2.im.into(),
                s.qprime.re.into(),
                s.qprime.im.into(),
                s.kappa.re.into(),
                s.kappa.im.into(),
                s.velocity_ratio.into(),
                s.signed_velocity_ratio.into(),
                s.unitarity_defect.into(),
                s.elastic_probability().into(),
                s.inelastic_probability().into(),
            ])
        },
    );
    Table::new(
        vec![
            "Kd",
            "qd",
            "channel",
            "t1_re",
            "t1_im",
            "t2_re",
            "t2_im",
            "qprime_re",
            "qprime_im",
            "kappa_re",
            "kappa_im",
            "velocity_ratio",
            "signed_velocity_ratio",
            "unitarity_defect",
            "elastic_prob",
            "inelastic_prob",
        ],
        rows,
    )
}

fn size_mode_pairs(cfg: &RunConfig) -> Vec<(usize, usize)> {
    cfg.sizes()
        .iter()
        .flat_map(|&n| cfg.xis().into_iter().map(move |xi| (n, xi)))
        .collect()
}

fn subradiance(cfg: &RunConfig, params: &ChainParams) -> Table {
    let rows = rows(
        &size_mode_pairs(cfg),
        |&(n, xi)| vec![n.into(), xi.into()],
        |&(n, xi)| -> Cells {
            let s = subradiant_rate(params, n, xi).map_err(err_code)?;
            Ok(vec![
                n.into(),
                xi.into(),
                s.kd.into(),
                s.gamma_exact.into(),
                s.gamma_asymptotic.into(),
            ])
        },
    );
    Table::new(
        vec!["N", "xi", "kd", "gamma_exact", "gamma_asymptotic"],
        rows,
    )
}

fn oracle_subradiance(cfg: &RunConfig, params: &ChainParams) -> Table {
    let cache = EigenCache::from_env();
    let rows = rows(
        &size_mode_pairs(cfg),
        |&(n, xi)| vec![n.into(), xi.into()],
        |&(n, xi)| -> Cells {
            let s = subradiant_rate(params, n, xi).map_err(err_code)?;
            let op = build_hamiltonian(params, n, Sector::One).map_err(err_code)?;
            let modes = decay_rates_cached(&op, cache.as_ref()).map_err(err_code)?;
            let m = standing_wave_mode(&modes, params, n, xi).map_err(err_code)?;
            let rel = (s.gamma_exact - m.rate).abs() / m.rate;
            Ok(vec![
                n.into(),
                xi.into(),
                s.gamma_exact.into(),
                m.rate.into(),
                s.gamma_asymptotic.into(),
                rel.into(),
            ])
        },
    );
    Table::new(
        vec![
            "N",
            "xi",
            "gamma_formula",
            "gamma_oracle",
            "gamma_asymptotic",
            "rel_diff",
        ],
        rows,
    )
}

fn oracle_residual(cfg: &RunConfig, params: &ChainParams) -> Table {
    let mut pts = config_points(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    for _ in 0..cfg.samples() {
        pts.push(PairMomentum {
            big_k: rng.random_range(-PI..PI),
            q: rng.random_range(-PI..PI),
        });
    }
    let n = cfg.sizes()[0];
    let rows = rows(
        &pts,
        |p| vec![p.big_k.into(), p.q.into()],
        |&p| -> Cells {
            let s = solve_scattering(params, p).map_err(err_code)?;
            let prof = ansatz_residual(params, n, p, &s).map_err(err_code)?;
            Ok(vec![
                p.big_k.into(),
                p.q.into(),
                s.channel.as_str().into(),
                prof.boundary.into(),
                prof.interior.into(),
                prof.ratio().into(),
            ])
        },
    );
    Table::new(
        vec![
            "Kd",
            "qd",
            "channel",
            "boundary_residual",
            "interior_residual",
            "ratio",
        ],
        rows,
    )
}

fn oracle_wavepacket(cfg: &RunConfig, params: &ChainParams) -> Table {
    let pts = config_points(cfg);
    let n = cfg.sizes()[0];
    let width = cfg.width();
    let rows = rows(
        &pts,
        |p| vec![p.big_k.into(), p.q.into()],
        |&p| -> Cells {
            let s = solve_scattering(params, p).map_err(err_code)?;
            let plan = plan_collision(params, n, p, width).map_err(err_code)?;
            let m = collide_wavepackets(params, n, &plan).map_err(err_code)?;
            Ok(vec![
                p.big_k.into(),
                p.q.into(),
                s.channel.as_str().into(),
                s.elastic_probability().into(),
                s.inelastic_probability().into(),
                m.elastic.into(),
                m.inelastic.into(),
                m.leakage.into(),
                m.time.into(),
                m.norm.into(),
            ])
        },
    );
    Table::new(
        vec![
            "Kd",
            "qd",
            "channel",
            "elastic_pred",
            "inelastic_pred",
            "elastic_meas",
            "inelastic_meas",
            "leakage",
            "time",
            "norm",
        ],
        rows,
    )
}

fn ll_compare(cfg: &RunConfig, params: &ChainParams) -> Table {
    let qs = axis_points(&cfg.qd_axis());
    let a = scattering_length(params);
    let rows = rows(
        &qs,
        |&q| vec![q.into()],
        |&q| -> Cells {
            let t = t1_k0(params, q).map_err(err_code)?;
            let ll = lieb_liniger_t1(a, q);
            Ok(vec![
                q.into(),
                t.re.into(),
                t.im.into(),
                ll.re.into(),
                ll.im.into(),
                (t - ll).norm().into(),
                t.arg().into(),
                ll.arg().into(),
            ])
        },
    );
    Table::new(
        vec![
            "qd", "t1_k0_re", "t1_k0_im", "t1_ll_re", "t1_ll_im", "abs_diff", "arg_k0", "arg_ll",
        ],
        rows,
    )
}
