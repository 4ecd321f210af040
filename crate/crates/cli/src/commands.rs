use std::fmt::Write as _;
use std::path::Path;

use cayleylab::boson::{
    barrier_report, gaussian_matrix, permanent_naive, permanent_reduce, permanent_ryser, PermanentReductionConfig,
    NAIVE_LIMIT,
};
use cayleylab::cayley::{eigenphase_tv_estimate, EigenMargin, TransformKind, DEFAULT_TAYLOR_ORDER};
use cayleylab::circuits::{fourier_sampling_embedded, one_time_pad, Architecture, Circuit, PerturbedFamily};
use cayleylab::interp::{
    chebyshev_witness, coefficient_sum_check, long_distance_bound, markov_uniform_bound, markov_witness, paturi_bound,
    rescaling_constant, SearchConfig,
};
use cayleylab::numerics::{CMatrix, Complex, Dd, PrecisionMode, Qd, Real, SeededRng};
use cayleylab::pipelines::{
    exact_circuit_oracle, make_adversarial_oracle, noisy_circuit_oracle, real_json, reduce, reduce_noisy, report_json,
    uniformity_gap_report, AdversarySpec, ReductionConfig, ORACLE_STREAM, SEARCH_STREAM,
};
use cayleylab::rational::verify_rational_degree;
use cayleylab::simulator::{depolarizing_model, noisy_output_prob, output_prob, NoiseArity, NoiseModel};
use cayleylab::toymodel::{cp_closed_form, cp_monte_carlo, ToyParams};
use cayleylab::{Error, Result};
use serde_json::{json, Value};

use crate::opts::{BarrierOpts, BoundsOpts, CpOpts, PermanentOpts, RationalOpts, ReduceOpts, TvOpts};

/// Stream of the master seed used to draw random targets.
pub const TARGET_STREAM: u64 = 3;

/// Runs `$f::<R>(args)` with `R` chosen by the precision mode.
macro_rules! with_precision {
    ($mode:expr, $f:ident($($a:expr),*)) => {
        match $mode {
            PrecisionMode::Native => $f::<f64>($($a),*),
            PrecisionMode::DoubleDouble => $f::<Dd>($($a),*),
            PrecisionMode::QuadDouble => $f::<Qd>($($a),*),
        }
    };
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub fn parse_precision(s: Option<&str>, default: PrecisionMode) -> Result<PrecisionMode> {
    s.map_or(Ok(default), |s| s.parse().map_err(Error::InvalidInput))
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn real<R: Real>(x: R) -> String {
    x.to_decimal(R::MODE.print_digits())
}

fn arity(s: Option<&str>, default: NoiseArity) -> Result<NoiseArity> {
    s.map_or(Ok(default), |s| s.parse())
}

fn architecture(n: Option<usize>, depth: Option<usize>, layout: Option<&str>, slots: Option<&Vec<Vec<usize>>>, default_layout: &str) -> Result<Architecture> {
    let n = n.unwrap_or(2);
    if let Some(s) = slots {
        return Architecture::new(n, s.clone());
    }
    let depth = depth.unwrap_or(2);
    match layout.unwrap_or(default_layout) {
        "global" => Architecture::global_layers(n, depth),
        "brickwork" => Architecture::brickwork(n, depth),
        other => Err(invalid(format!("unknown layout '{other}'"))),
    }
}

fn adversary(kind: Option<&str>, scale: Option<f64>) -> Result<AdversarySpec> {
    let spec: AdversarySpec = kind.unwrap_or("offset").parse()?;
    Ok(match (spec, scale) {
        (AdversarySpec::Offset { .. }, Some(shift)) => AdversarySpec::Offset { shift },
        (AdversarySpec::Chebyshev { .. }, Some(amplitude)) => AdversarySpec::Chebyshev { amplitude },
        (s, _) => s,
    })
}

fn search_config(budget: Option<usize>, growth_constant: Option<f64>) -> SearchConfig {
    let d = SearchConfig::default();
    SearchConfig { budget: budget.unwrap_or(d.budget), growth_constant: growth_constant.unwrap_or(d.growth_constant), ..d }
}

fn reduction_config(o: &ReduceOpts, precision: PrecisionMode) -> Result<ReductionConfig> {
    let d = ReductionConfig::default();
    let transform = match o.transform.as_deref().unwrap_or("cayley") {
        "cayley" => TransformKind::Cayley,
        "taylor" => TransformKind::TruncatedTaylor { order: o.taylor_order.unwrap_or(DEFAULT_TAYLOR_ORDER) },
        other => return Err(invalid(format!("unknown transform '{other}'"))),
    };
    let cfg = ReductionConfig {
        delta_end: o.delta_end.unwrap_or(d.delta_end),
        grid_size: o.grid_size.or(d.grid_size),
        delta: o.delta.unwrap_or(d.delta),
        eta: o.eta.unwrap_or(d.eta),
        adversary: adversary(o.adversary.as_deref(), o.adversary_scale)?,
        margin: o.margin.unwrap_or(d.margin),
        precision,
        transform,
        rescale: o.rescale.unwrap_or(1),
        search: search_config(o.budget, o.growth_constant),
    };
    if let Some(f) = o.format.as_deref() {
        if f != "json" && f != "csv" {
            return Err(invalid(format!("unknown format '{f}'")));
        }
    }
    Ok(cfg)
}

fn target<R: Real>(o: &ReduceOpts, master: &SeededRng) -> Result<Circuit<R>> {
    if let Some(path) = &o.circuit {
        let text = read(path)?;
        return Circuit::from_json(&serde_json::from_str(&text)?);
    }
    if let Some(tt) = &o.truth_table {
        let n0 = tt.0.len().trailing_zeros() as usize;
        let arch = architecture(Some(o.n.unwrap_or(n0)), o.depth, o.layout.as_deref(), o.slots.as_ref().map(|s| &s.0), "global")?;
        return fourier_sampling_embedded(&tt.0, &arch);
    }
    let arch = architecture(o.n, o.depth, o.layout.as_deref(), o.slots.as_ref().map(|s| &s.0), "global")?;
    Ok(Circuit::haar_random(arch, &master.derive(TARGET_STREAM)))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn noise_model(o: &ReduceOpts, arch: &Architecture) -> Result<NoiseModel> {
    depolarizing_model(arch, o.gamma.unwrap_or(0.1), arity(o.noise_arity.as_deref(), NoiseArity::SlotPauli)?)
}

/// Validates everything that does not depend on the numeric type.
pub fn check_reduce(o: &ReduceOpts, precision: PrecisionMode, noisy: bool) -> Result<()> {
    let cfg = reduction_config(o, precision)?;
    check_eta_delta(cfg.eta, cfg.delta)?;
    EigenMargin::new(cfg.margin)?;
    cfg.transform.validate()?;
    if noisy {
        arity(o.noise_arity.as_deref(), NoiseArity::SlotPauli)?;
        let g = o.gamma.unwrap_or(0.1);
        if !(0.0..=1.0).contains(&g) {
            return Err(invalid(format!("gamma {g} outside [0,1]")));
        }
    }
    Ok(())
}

fn check_eta_delta(eta: f64, delta: f64) -> Result<()> {
    if !(0.0..0.25).contains(&eta) {
        return Err(invalid(format!("eta {eta} outside [0, 1/4)")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta {delta} must be finite and nonnegative")));
    }
    Ok(())
}

fn grid_csv<R: Real>(rows: &[cayleylab::pipelines::GridRow<R>]) -> String {
    let mut s = String::from("theta,oracle_value,q,y,corrupted,failed\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", real(r.theta), real(r.oracle_value), real(r.q), real(r.y), r.corrupted, r.failed);
    }
    s
}

fn reduce_typed<R: Real>(o: &ReduceOpts, seed: u64, noisy: bool) -> Result<String> {
    let master = SeededRng::new(seed, 0);
    let cfg = reduction_config(o, R::MODE)?;
    let c0 = target::<R>(o, &master)?;
    let degree = c0.arch().numerator_degree();
    let kind = cfg.oracle_kind(degree);
    let orng = master.derive(ORACLE_STREAM);
    let (outcome, truth, extra) = if noisy {
        let noise = noise_model(o, c0.arch())?;
        let oracle = noisy_circuit_oracle::<R>(noise.clone(), cfg.eta, cfg.delta, kind, orng)?;
        let out = reduce_noisy(&c0, &noise, &oracle, &cfg, &master)?;
        let truth = noisy_output_prob(&c0, &noise)?;
        let gap = uniformity_gap_report(&c0, &noise, Some(&out))?;
        (out, truth, Some(serde_json::to_value(gap)?))
    } else {
        let oracle = exact_circuit_oracle::<R>(cfg.eta, cfg.delta, kind, orng)?;
        let out = reduce(&c0, &oracle, &cfg, &master)?;
        let truth = output_prob(&c0)?;
        (out, truth, None)
    };
    if o.format.as_deref() == Some("csv") {
        return Ok(grid_csv(&outcome.rows));
    }
    let mut doc = report_json(&cfg, seed, &outcome, Some(truth));
    if let Some(gap) = extra {
        doc["uniformity"] = gap;
    }
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn reduce_cmd(o: &ReduceOpts, seed: u64, precision: PrecisionMode, noisy: bool) -> Result<String> {
    with_precision!(precision, reduce_typed(o, seed, noisy))
}

pub fn check_permanent(o: &PermanentOpts) -> Result<()> {
    check_eta_delta(o.eta.unwrap_or(0.1), o.delta.unwrap_or(1e-30))?;
    adversary(o.adversary.as_deref(), o.adversary_scale)?;
    if let Some(x0) = &o.x0 {
        let n = x0.0.len();
        if x0.0.iter().any(|r| r.len() != n) || x0.0.iter().flatten().any(|v| *v > 1) {
            return Err(invalid("x0 must be a square 0/1 matrix"));
        }
    }
    Ok(())
}

fn permanent_typed<R: Real>(o: &PermanentOpts, seed: u64) -> Result<String> {
    let master = SeededRng::new(seed, 0);
    let x0: CMatrix<R> = match &o.x0 {
        Some(rows) => {
            let n = rows.0.len();
            CMatrix::from_fn(n, n, |i, j| Complex::from_f64(rows.0[i][j] as f64, 0.0))
        }
        None => {
            let n = o.n.unwrap_or(3);
            let mut r = master.derive(TARGET_STREAM);
            CMatrix::from_fn(n, n, |_, _| Complex::from_f64(if r.bernoulli(0.5) { 1.0 } else { 0.0 }, 0.0))
        }
    };
    let n = x0.rows();
    let x1: CMatrix<R> = gaussian_matrix(n, 1.0, &mut master.derive(TARGET_STREAM + 1));
    let eta = o.eta.unwrap_or(0.1);
    let delta = o.delta.unwrap_or(1e-30);
    let delta_end = o.delta_end.unwrap_or(0.3);
    let kind = adversary(o.adversary.as_deref(), o.adversary_scale)?.resolve(2 * n, delta_end);
    let oracle = make_adversarial_oracle::<CMatrix<R>, R>(
        |x: &CMatrix<R>| Ok(permanent_ryser(x)?.norm_sqr()),
        eta,
        delta,
        kind,
        master.derive(ORACLE_STREAM),
    )?;
    let cfg = PermanentReductionConfig { delta_end, grid_size: o.grid_size, search: search_config(o.budget, None) };
    let red = permanent_reduce(&x0, &x1, &oracle, &cfg, &master.derive(SEARCH_STREAM))?;
    let truth = if n <= NAIVE_LIMIT { permanent_naive(&x0)? } else { permanent_ryser(&x0)? }.norm_sqr();
    let to_json = |m: &CMatrix<R>| cayleylab::boson::matrix_to_json(&m.to_f64());
    let doc = json!({
        "seed": seed,
        "n": n,
        "x0": to_json(&x0),
        "x1": to_json(&x1),
        "delta_end": delta_end,
        "grid_size": red.thetas.len(),
        "eta": eta,
        "delta": delta,
        "estimate": real_json(red.result.estimate),
        "truth": real_json(truth),
        "achieved_error": (red.result.estimate - truth).abs().to_f64(),
        "a_priori_bound": red.result.a_priori_bound,
        "certificate_size": red.result.certificate.size(),
        "certificate_required": red.result.certificate.required,
        "corrupted": red.corrupted.iter().filter(|c| **c).count(),
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn permanent_cmd(o: &PermanentOpts, seed: u64, precision: PrecisionMode) -> Result<String> {
    with_precision!(precision, permanent_typed(o, seed))
}

fn cp_params(o: &CpOpts) -> Result<(usize, f64, Vec<usize>, usize)> {
    let n = o.n.unwrap_or(3);
    let gamma = o.gamma.unwrap_or(0.1);
    let depths = o.depths.as_ref().map_or_else(|| (1..=6).collect(), |d| d.0.clone());
    let trials = o.trials.unwrap_or(500);
    for &d in &depths {
        ToyParams::new(n, d, gamma, trials)?;
    }
    if trials < 2 {
        return Err(invalid("need at least two trials"));
    }
    Ok((n, gamma, depths, trials))
}

pub fn check_cp(o: &CpOpts) -> Result<()> {
    cp_params(o).map(|_| ())
}

pub fn cp_cmd(o: &CpOpts, seed: u64) -> Result<String> {
    let (n, gamma, depths, trials) = cp_params(o)?;
    let master = SeededRng::new(seed, 0);
    let mut s = String::from("depth,closed_form,monte_carlo,stderr,z,worst_tv_slack\n");
    for d in depths {
        let p = ToyParams::new(n, d, gamma, trials)?;
        let exact = cp_closed_form(&p)?;
        let est = cp_monte_carlo(&p, &master.derive(d as u64))?;
        let z = if est.stderr > 0.0 { (est.estimate - exact) / est.stderr } else { 0.0 };
        let _ = writeln!(s, "{d},{},{},{},{},{}", num(exact), num(est.estimate), num(est.stderr), num(z), num(est.worst_tv_slack));
    }
    Ok(s)
}

pub fn check_bounds(o: &BoundsOpts) -> Result<()> {
    match o.check.as_deref().unwrap_or("all") {
        "chebyshev" | "markov" | "coefficients" | "rescaling" | "all" => Ok(()),
        other => Err(invalid(format!("unknown check '{other}'"))),
    }
}

pub fn bounds_cmd(o: &BoundsOpts, seed: u64) -> Result<String> {
    check_bounds(o)?;
    let check = o.check.as_deref().unwrap_or("all");
    let dmax = o.dmax.unwrap_or(20);
    let want = |c: &str| check == "all" || check == c;
    let mut s = String::from("check,d,parameter,witness,bound,ok\n");
    let mut row = |name: &str, d: usize, param: f64, w: f64, b: f64| {
        let _ = writeln!(s, "{name},{d},{},{},{},{}", num(param), num(w), num(b), w <= b);
    };
    if want("chebyshev") {
        for d in 0..=dmax {
            for k in 1..=9 {
                let de = k as f64 / 10.0;
                let w = chebyshev_witness(d, de);
                row("paturi", d, de, w, paturi_bound(1.0, d, de)?);
                row("long-distance", d, de, w, long_distance_bound(1.0, d, de)? * (1.0 + 1e-12));
            }
        }
    }
    if want("markov") {
        for d in 1..=dmax {
            for n in [2 * d * d, 10 * d * d] {
                row("markov", d, n as f64, markov_witness(d, n, 20_000), markov_uniform_bound(1.0, d, n)?);
            }
        }
    }
    if want("coefficients") {
        let mut rng = SeededRng::new(seed, 0);
        let samples = o.samples.unwrap_or(1000);
        for d in 1..=dmax {
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let coeffs: Vec<f64> = (0..=d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
                let (l1, sup) = coefficient_sum_check(&coeffs, 2000);
                worst = worst.max(l1 / sup);
            }
            row("coefficients", d, samples as f64, worst, 4f64.powi(d as i32));
        }
    }
    if want("rescaling") {
        let (t, v) = rescaling_constant();
        row("rescaling", 0, t, v, 70.0);
    }
    Ok(s)
}

pub fn check_rational(o: &RationalOpts) -> Result<()> {
    arity(o.noise_arity.as_deref(), NoiseArity::SlotPauli)?;
    architecture(o.n.or(Some(3)), o.depth.or(Some(1)), o.layout.as_deref(), o.slots.as_ref().map(|s| &s.0), "brickwork")?;
    Ok(())
}

fn rational_typed<R: Real>(o: &RationalOpts, seed: u64) -> Result<String> {
    let arch = architecture(o.n.or(Some(3)), o.depth.or(Some(1)), o.layout.as_deref(), o.slots.as_ref().map(|s| &s.0), "brickwork")?;
    let noise = match o.gamma {
        Some(g) => Some(depolarizing_model(&arch, g, arity(o.noise_arity.as_deref(), NoiseArity::SlotPauli)?)?),
        None => None,
    };
    let degree = o.degree.unwrap_or(arch.numerator_degree());
    let control = degree.saturating_sub(o.control_gap.unwrap_or(4));
    let tol = o.tol.unwrap_or(1e-8);
    let master = SeededRng::new(seed, 0);
    let prob = |c: &Circuit<R>| match &noise {
        Some(noise) => noisy_output_prob(c, noise),
        None => output_prob(c),
    };
    let mut s = String::from("seed,degree,relative_residual,passed,control_degree,control_residual,control_failed\n");
    for i in 0..o.seeds.unwrap_or(5) {
        let r = master.derive(i as u64);
        let c0 = Circuit::<R>::haar_random(arch.clone(), &r.derive(TARGET_STREAM));
        let pad = one_time_pad(&c0, &r.derive(0), &EigenMargin::default())?;
        let fam = PerturbedFamily::new(c0, pad, TransformKind::Cayley)?;
        let a = verify_rational_degree(&fam, prob, degree, tol, (0.0, 1.0))?;
        let b = verify_rational_degree(&fam, prob, control, tol, (0.0, 1.0))?;
        let _ = writeln!(s, "{i},{degree},{},{},{control},{},{}", num(a.relative_residual), a.passed, num(b.relative_residual), !b.passed);
    }
    Ok(s)
}

pub fn rational_cmd(o: &RationalOpts, seed: u64, precision: PrecisionMode) -> Result<String> {
    with_precision!(precision, rational_typed(o, seed))
}

pub fn tv_cmd(o: &TvOpts, seed: u64) -> Result<String> {
    let thetas = o.thetas.as_ref().map_or_else(|| (0..=10).map(|i| i as f64 / 20.0).collect(), |t| t.0.clone());
    let dim = o.dim.unwrap_or(4);
    let gates = o.gates.unwrap_or(1);
    let master = SeededRng::new(seed, 0);
    let mut s = String::from("theta,tv,stderr,joint,gates,gates_times_tv\n");
    for (i, &theta) in thetas.iter().enumerate() {
        let e = eigenphase_tv_estimate(theta, dim, o.samples.unwrap_or(10_000), o.bins.unwrap_or(16), &master.derive(i as u64))?;
        let _ = writeln!(s, "{},{},{},{},{gates},{}", num(theta), num(e.estimate), num(e.stderr), e.joint, num(gates as f64 * e.estimate));
    }
    Ok(s)
}

pub fn barrier_cmd(o: &BarrierOpts, seed: u64) -> Result<String> {
    let n = o.n.unwrap_or(4);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let t = o.t.unwrap_or(1.0 / (fact * fact));
    let thetas = o.thetas.as_ref().map_or_else(|| (0..=5).map(|i| i as f64 / 100.0).collect(), |t| t.0.clone());
    let rep = barrier_report(n, t, &thetas, o.samples.unwrap_or(100), &SeededRng::new(seed, 0))?;
    let mut s = String::from("theta,mean_deviation,stderr,max_deviation,worst_case_deviation\n");
    for r in &rep.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(r.theta),
            num(r.mean_deviation),
            num(r.stderr),
            num(r.max_deviation),
            num(rep.worst_case_deviation)
        );
    }
    Ok(s)
}

/// Error document written to standard error.
pub fn error_json(e: &Error, code: i32) -> Value {
    json!({ "error": e.to_string(), "kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or(""), "exit_code": code })
}
