//! Named experiments. Each declares its parameters with defaults and
//! returns a [`Table`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use lopsim::dipole::{self, DipoleConfig, TwoQubitDensity};
use lopsim::fock::{Label, PureState, Statistics};
use lopsim::multiport::{bell_multiport, haar_random, reck_decompose, symmetric4, ReckDecomposition, Unitary};
use lopsim::qfilter::{self, FilterOutcome};
use lopsim::rus::{self, BasisAngles, RusStatus, TwoQubitState, Variant};
use lopsim::scattering::{coincidence_probability, postselect_coincidence, product_input, scatter};
use lopsim::stategen;
use lopsim::time_resolved::{average_fidelity, full_window, Pulse};
use lopsim::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, Params};
use crate::output::{Cell, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn runtime(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

type Runner = fn(&Params, Option<u64>) -> Result<Table, RunError>;

pub struct Experiment {
    pub name: &'static str,
    pub params: &'static [(&'static str, &'static str)],
    pub stochastic: bool,
    pub run: Runner,
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment { name: "wstate-sweep", params: &[("n_max", "14")], stochastic: false, run: wstate_sweep },
    Experiment { name: "ghz4", params: &[], stochastic: false, run: ghz4 },
    Experiment { name: "double-singlet", params: &[], stochastic: false, run: double_singlet },
    Experiment {
        name: "hom",
        params: &[("n", "4"), ("statistics", "boson"), ("unitary", "bell"), ("phi", "0")],
        stochastic: false,
        run: hom,
    },
    Experiment { name: "symmetric4-scan", params: &[("points", "50")], stochastic: false, run: symmetric4_scan },
    Experiment {
        name: "filter",
        params: &[("n", "2"), ("alpha", "0.7071067811865476"), ("beta", "0.7071067811865476")],
        stochastic: false,
        run: filter,
    },
    Experiment { name: "cz-filter", params: &[("amplitudes", "0.5,0.5,0.5,0.5")], stochastic: false, run: cz_filter },
    Experiment {
        name: "filter-fidelity",
        params: &[("p_min", "0.5"), ("p_max", "1"), ("points", "11"), ("n", "2")],
        stochastic: false,
        run: filter_fidelity,
    },
    Experiment {
        name: "rus",
        params: &[("trials", "10000"), ("max_rounds", "200"), ("survival", "1"), ("variant", "insurance")],
        stochastic: true,
        run: rus_experiment,
    },
    Experiment { name: "teleport", params: &[("trials", "1000")], stochastic: true, run: teleport },
    Experiment {
        name: "timeresolve",
        params: &[("ratios", "0.5,0.7,0.9"), ("tau", "40"), ("grid", "0")],
        stochastic: false,
        run: timeresolve,
    },
    Experiment {
        name: "dipole-correlation",
        params: &[("r_design", "25"), ("r", "25"), ("phi", "0"), ("half_width", "0.5")],
        stochastic: false,
        run: dipole_correlation,
    },
    Experiment {
        name: "infer-singlet",
        params: &[("mode", "solve"), ("state", "singlet")],
        stochastic: false,
        run: infer_singlet,
    },
    Experiment {
        name: "reck-roundtrip",
        params: &[("n", "4"), ("source", "bell")],
        stochastic: false,
        run: reck_roundtrip,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Independent ChaCha stream for one named stage of an experiment.
fn stream(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

fn need_seed(seed: Option<u64>, why: &str) -> Result<u64, RunError> {
    seed.ok_or_else(|| RunError::Config(ConfigError(format!("--seed is required {why}"))))
}

fn amplitude_rows(table: &mut Table, state: &PureState) {
    for (f, a) in state.terms() {
        table.push(vec![f.to_string().into(), a.re.into(), a.im.into(), a.norm_sqr().into()]);
    }
}

fn wstate_sweep(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let n_max: usize = p.get("n_max")?;
    if !(2..=stategen::W_MAX).contains(&n_max) {
        return Err(ConfigError(format!("n_max must lie in 2..={}", stategen::W_MAX)).into());
    }
    let mut t = Table::new(&["n", "p_success", "is_zero"]);
    for row in stategen::wstate_sweep(n_max).map_err(runtime)? {
        t.push(vec![row.n.into(), row.p_success.into(), row.is_zero.into()]);
    }
    Ok(t)
}

fn four_photon(result: lopsim::scattering::CoincidenceResult, reference: PureState) -> Table {
    let mut t = Table::new(&["term", "re", "im", "weight"]);
    amplitude_rows(&mut t, &result.projected);
    t.note("probability", result.probability);
    t.note("overlap_with_reference", result.projected.overlap_modulus(&reference));
    t
}

fn ghz4(_: &Params, _: Option<u64>) -> Result<Table, RunError> {
    Ok(four_photon(stategen::generate_ghz4().map_err(runtime)?, stategen::ghz4_reference()))
}

fn double_singlet(_: &Params, _: Option<u64>) -> Result<Table, RunError> {
    Ok(four_photon(stategen::generate_double_singlet().map_err(runtime)?, stategen::double_singlet_reference()))
}

fn hom(p: &Params, seed: Option<u64>) -> Result<Table, RunError> {
    let n: usize = p.get("n")?;
    let stats = match p.choice("statistics", &["boson", "fermion"])? {
        "boson" => Statistics::Boson,
        _ => Statistics::Fermion,
    };
    let kind = p.choice("unitary", &["bell", "symmetric4", "haar"])?;
    if !(1..=lopsim::scattering::RYSER_MAX).contains(&n) {
        return Err(ConfigError(format!("n must lie in 1..={}", lopsim::scattering::RYSER_MAX)).into());
    }
    let u = match kind {
        "bell" => bell_multiport(n).map_err(runtime)?,
        "symmetric4" => {
            if n != 4 {
                return Err(ConfigError("unitary=symmetric4 needs n=4".into()).into());
            }
            symmetric4(p.get("phi")?)
        }
        _ => haar_random(n, &mut stream(need_seed(seed, "for unitary=haar")?, 1)),
    };
    let mut t = Table::new(&["n", "statistics", "unitary", "p_coinc", "p_scatter"]);
    let p_coinc = coincidence_probability(&u, stats).map_err(runtime)?;
    // the full expansion grows quickly; cross-check small cases only
    let p_scatter = if n <= 6 {
        let input = product_input(stats, &vec![Label::None; n]);
        Cell::Float(postselect_coincidence(&scatter(&input, &u).map_err(runtime)?).probability)
    } else {
        Cell::Text("skipped".into())
    };
    let stats_name = if stats == Statistics::Boson { "boson" } else { "fermion" };
    t.push(vec![n.into(), stats_name.into(), kind.into(), p_coinc.into(), p_scatter]);
    Ok(t)
}

fn symmetric4_scan(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let points: usize = p.get("points")?;
    if points < 2 {
        return Err(ConfigError("points must be at least 2".into()).into());
    }
    let mut t = Table::new(&["phi", "p_coinc", "closed_form"]);
    for k in 0..points {
        let phi = PI * k as f64 / (points - 1) as f64;
        let pc = coincidence_probability(&symmetric4(phi), Statistics::Boson).map_err(runtime)?;
        t.push(vec![phi.into(), pc.into(), ((1.0 + (2.0 * phi).cos()) / 8.0).into()]);
    }
    Ok(t)
}

fn syndrome_table(outcomes: &[FilterOutcome], ideal: &PureState) -> Table {
    let mut t = Table::new(&["syndrome", "success", "probability", "fidelity"]);
    let ideal = ideal.normalize().ok();
    for o in outcomes {
        let fid = match (&o.output, &ideal) {
            (Some(out), Some(id)) => {
                out.normalize().map(|s| Cell::Float(s.overlap_modulus(id).powi(2))).unwrap_or(Cell::Text("".into()))
            }
            _ => Cell::Text("".into()),
        };
        t.push(vec![o.syndrome_string().into(), o.success.into(), o.probability.into(), fid]);
    }
    t.note("p_success", qfilter::success_probability(outcomes));
    t
}

fn filter(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let n: usize = p.get("n")?;
    if !(2..=5).contains(&n) {
        return Err(ConfigError("n must lie in 2..=5".into()).into());
    }
    let (a, b): (f64, f64) = (p.get("alpha")?, p.get("beta")?);
    let norm = a.hypot(b);
    if norm == 0.0 {
        return Err(ConfigError("alpha and beta cannot both vanish".into()).into());
    }
    let input = qfilter::ghz_target(n, C64::new(a / norm, 0.0), C64::new(b / norm, 0.0));
    let out = qfilter::parity_filter(&input, n).map_err(runtime)?;
    Ok(syndrome_table(&out, &qfilter::parity_projection(&input)))
}

fn cz_filter(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let v = p.list("amplitudes")?;
    if v.len() != 4 {
        return Err(ConfigError("amplitudes needs four entries (HH,HV,VH,VV)".into()).into());
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(ConfigError("amplitudes cannot all vanish".into()).into());
    }
    let input = qfilter::two_photon_target([0, 1, 2, 3].map(|k| C64::new(v[k] / norm, 0.0)));
    let out = qfilter::cz_filter(&input).map_err(runtime)?;
    Ok(syndrome_table(&out, &qfilter::cz_projection(&input)))
}

fn filter_fidelity(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let (lo, hi): (f64, f64) = (p.get("p_min")?, p.get("p_max")?);
    let points: usize = p.get("points")?;
    let n: usize = p.get("n")?;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) || points == 0 || !(2..=4).contains(&n) {
        return Err(ConfigError("need 0 < p_min <= p_max <= 1, points >= 1 and n in 2..=4".into()).into());
    }
    let amp = C64::new(FRAC_1_SQRT_2, 0.0);
    let input =
        if n == 2 { qfilter::two_photon_target([C64::new(0.5, 0.0); 4]) } else { qfilter::ghz_target(n, amp, amp) };
    let mut t = Table::new(&["p_d", "fidelity", "one_minus_f", "fidelity_povm"]);
    for k in 0..points {
        let pd = if points == 1 { lo } else { lo + (hi - lo) * k as f64 / (points - 1) as f64 };
        let f = qfilter::filter_fidelity(pd).map_err(runtime)?;
        let povm = qfilter::filter_fidelity_povm(pd, &input, n).map_err(runtime)?;
        t.push(vec![pd.into(), f.into(), (1.0 - f).into(), povm.into()]);
    }
    Ok(t)
}

fn rus_experiment(p: &Params, seed: Option<u64>) -> Result<Table, RunError> {
    let seed = need_seed(seed, "for rus")?;
    let trials: usize = p.get("trials")?;
    let max_rounds: usize = p.get("max_rounds")?;
    let survival: f64 = p.get("survival")?;
    let variant = match p.choice("variant", &["insurance", "fullbell"])? {
        "insurance" => Variant::Insurance,
        _ => Variant::FullBell,
    };
    if trials == 0 || max_rounds == 0 {
        return Err(ConfigError("trials and max_rounds must be positive".into()).into());
    }
    let basis = rus::build_basis(BasisAngles::angels(), variant);
    let mut inputs = stream(seed, 1);
    let mut sampler = stream(seed, 2);
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut successes, mut losses, mut exhausted, mut total_rounds) = (0usize, 0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let q = TwoQubitState::random(&mut inputs);
        let r = rus::rus_simulate_with(&q, &basis, max_rounds, survival, &mut sampler).map_err(runtime)?;
        total_rounds += r.rounds;
        match r.status {
            RusStatus::Success => {
                successes += 1;
                *hist.entry(r.rounds).or_default() += 1;
                if let Some(s) = r.state {
                    worst = worst.max((s.overlap_modulus(&q.apply_cz()) - 1.0).abs());
                }
            }
            RusStatus::PhotonLoss => losses += 1,
            RusStatus::RoundsExhausted => exhausted += 1,
        }
    }
    let mut t = Table::new(&["rounds", "count"]);
    for (r, c) in hist {
        t.push(vec![r.into(), c.into()]);
    }
    t.note("trials", trials);
    t.note("successes", successes);
    t.note("photon_losses", losses);
    t.note("rounds_exhausted", exhausted);
    t.note("mean_rounds", total_rounds as f64 / trials as f64);
    t.note("max_overlap_error", worst);
    Ok(t)
}

fn teleport(p: &Params, seed: Option<u64>) -> Result<Table, RunError> {
    let seed = need_seed(seed, "for teleport")?;
    let trials: usize = p.get("trials")?;
    let mut inputs = stream(seed, 1);
    let mut seeds = stream(seed, 2);
    let mut t = Table::new(&["trial", "rounds", "source_minus", "fidelity"]);
    let (mut rounds, mut min_fid) = (0usize, 1.0f64);
    for k in 0..trials {
        let v = [0, 1].map(|_| C64::new(inputs.random_range(-1.0..1.0), inputs.random_range(-1.0..1.0)));
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let (a, b) = (v[0] / norm, v[1] / norm);
        let r = rus::teleport_with_insurance(a, b, seeds.random()).map_err(runtime)?;
        let fid = (a.conj() * r.state[0] + b.conj() * r.state[1]).norm_sqr();
        rounds += r.rounds;
        min_fid = min_fid.min(fid);
        t.push(vec![k.into(), r.rounds.into(), r.source_minus.into(), fid.into()]);
    }
    if trials > 0 {
        t.note("mean_rounds", rounds as f64 / trials as f64);
        t.note("min_fidelity", min_fid);
    }
    Ok(t)
}

fn timeresolve(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let ratios = p.list("ratios")?;
    let tau: f64 = p.get("tau")?;
    let grid: usize = p.get("grid")?;
    if !(tau > 0.0) || ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(ConfigError("tau and every ratio must be positive".into()).into());
    }
    let (lo, hi) = full_window(tau);
    let reference = Pulse::standard(1.0, tau);
    if grid == 0 {
        let mut t = Table::new(&["ratio", "f_av"]);
        for r in ratios {
            let f1 = Pulse::standard(r, tau);
            t.push(vec![r.into(), average_fidelity(&f1, &reference, lo, hi).map_err(runtime)?.into()]);
        }
        return Ok(t);
    }
    // fidelity map F(t3, t4) for each ratio
    let mut t = Table::new(&["ratio", "t3", "t4", "fidelity", "density"]);
    for r in ratios {
        let f1 = Pulse::standard(r, tau);
        for i in 0..grid {
            for j in 0..grid {
                let t3 = lo + (hi - lo) * (i as f64 + 0.5) / grid as f64;
                let t4 = lo + (hi - lo) * (j as f64 + 0.5) / grid as f64;
                let fid = match lopsim::time_resolved::fidelity_t(&f1, &reference, t3, t4).value() {
                    Some(v) => Cell::Float(v),
                    None => Cell::Text("none".into()),
                };
                let dens = lopsim::time_resolved::joint_density(&f1, &reference, t3, t4);
                t.push(vec![r.into(), t3.into(), t4.into(), fid, dens.into()]);
            }
        }
    }
    Ok(t)
}

fn dipole_correlation(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let (r_design, r, phi, hw): (f64, f64, f64, f64) =
        (p.get("r_design")?, p.get("r")?, p.get("phi")?, p.get("half_width")?);
    if !(r_design > 0.0 && r > 0.0 && hw > 0.0 && hw < PI / 2.0) {
        return Err(ConfigError("need r_design > 0, r > 0 and 0 < half_width < pi/2".into()).into());
    }
    let mut t = Table::new(&["theta", "phi", "c_pm", "c_hv"]);
    for pt in dipole::correlation_scan(r_design, r, phi, hw) {
        t.push(vec![pt.theta.into(), pt.phi.into(), pt.circular.into(), pt.linear.into()]);
    }
    if let Some(w) = DipoleConfig::standard(r).regime_warning() {
        t.note("warning", w);
    }
    Ok(t)
}

fn density_rows(t: &mut Table, rho: &TwoQubitDensity) {
    let m = rho.matrix();
    for i in 0..4 {
        for j in 0..4 {
            t.push(vec![i.into(), j.into(), m[(i, j)].re.into(), m[(i, j)].im.into()]);
        }
    }
}

fn infer_singlet(p: &Params, _: Option<u64>) -> Result<Table, RunError> {
    let mode = p.choice("mode", &["solve", "check"])?;
    let mut t = Table::new(&["row", "col", "re", "im"]);
    let rho = if mode == "solve" {
        let s = dipole::infer_singlet_solve().map_err(runtime)?;
        t.note("slack", s.slack);
        s.rho
    } else {
        match p.choice("state", &["singlet", "mixed"])? {
            "singlet" => TwoQubitDensity::pure(dipole::singlet()).map_err(runtime)?,
            _ => {
                let mut m = nalgebra::Matrix4::zeros();
                m[(1, 1)] = C64::new(0.5, 0.0);
                m[(2, 2)] = C64::new(0.5, 0.0);
                TwoQubitDensity::new(m).map_err(runtime)?
            }
        }
    };
    density_rows(&mut t, &rho);
    t.note("tr_e1", rho.expectation(&dipole::e1d()));
    t.note("tr_e2", rho.expectation(&dipole::e2d()));
    t.note("consistent", dipole::infer_singlet_check(&rho));
    t.note("min_eigenvalue", rho.min_eigenvalue());
    Ok(t)
}

fn reck_roundtrip(p: &Params, seed: Option<u64>) -> Result<Table, RunError> {
    let n: usize = p.get("n")?;
    if !(1..=16).contains(&n) {
        return Err(ConfigError("n must lie in 1..=16".into()).into());
    }
    let u: Unitary = match p.choice("source", &["bell", "haar"])? {
        "bell" => bell_multiport(n).map_err(runtime)?,
        _ => haar_random(n, &mut stream(need_seed(seed, "for source=haar")?, 1)),
    };
    let d = reck_decompose(&u).map_err(runtime)?;
    let mut t = Table::new(&["layer", "p", "q", "reflectivity", "phi"]);
    for (k, l) in d.layers.iter().enumerate() {
        t.push(vec![(k + 1).into(), (l.p + 1).into(), (l.q + 1).into(), l.reflectivity.into(), l.phi.into()]);
    }
    t.note("layers", d.layers.len());
    t.note("max_layers", ReckDecomposition::max_layers(n));
    t.note("recomposition_error", (d.recompose() - u.matrix()).norm());
    Ok(t)
}
